#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qdt/estimator.hpp"

namespace qdt {

// Parameter JSON schema shared by the model and the estimator:
//   {"utility": {"alpha":..,"delta":..,"gamma":..,"phi":..,"lambda":..},
//    "attraction": {"c1":..,"c2":..,"c3":..,"c4":..,"a":..,
//                   "mask":["time_frame","memory","need"]}}
// The attraction block is omitted for CPT fits.
std::string params_to_json(const UtilityParams& up, const AttractionParams& ap,
                           bool include_attraction);

struct ParsedParams {
    UtilityParams utility;
    AttractionParams attraction;
    bool has_attraction = false;
};

ParsedParams params_from_json(const std::string& json);

// Per-subject fit output: a JSON array with one entry per fold, each the
// parameter object extended with fold/objective/iterations/converged.
std::string fit_results_to_json(const std::vector<FitResult>& fits, ModelKind model);

struct ParsedFitResult {
    UtilityParams utility;
    AttractionParams attraction;
    bool has_attraction = false;
    int fold = -1;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
};

std::vector<ParsedFitResult> fit_results_from_json(const std::string& json);

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temp file + rename so readers never observe partial output.
void write_text_file_atomic(const std::filesystem::path& path, const std::string& content);

} // namespace qdt
