#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qdt {

enum class Framing { Gain, Loss };
enum class PreviousOutcome { Won, Lost, Sure, None };
enum class Response { Gamble, Sure, Missing };

// One binary decision problem: a sure payout versus a gamble on the full
// initial amount. Fair (non-catch) trials satisfy sure_amount = win_prob *
// initial_amount. current_score and previous_outcome may be left empty in
// the input; derive_features reconstructs them from block history.
struct GameTrial {
    std::string subject_id;
    int block_id = 0;
    int trial_index = 0;            // strictly increasing within a block
    double initial_amount = 0.0;    // > 0
    double win_prob = 0.0;          // in (0, 1)
    Framing framing = Framing::Gain;
    double time_limit = 0.0;        // seconds, > 0
    double need_level = 0.0;        // block minimum score, >= 0
    std::optional<double> current_score;            // cumulative at trial start
    double sure_amount = 0.0;       // >= 0
    std::optional<PreviousOutcome> previous_outcome;
    bool is_catch = false;
    Response response = Response::Missing;

    double framing_indicator() const { return framing == Framing::Gain ? 1.0 : -1.0; }
};

// +1 won, -1 lost, 0 sure or none.
inline double previous_indicator(PreviousOutcome o) {
    switch (o) {
    case PreviousOutcome::Won: return 1.0;
    case PreviousOutcome::Lost: return -1.0;
    default: return 0.0;
    }
}

// Trial plus the per-trial features the model consumes. The embedded trial
// has current_score and previous_outcome resolved.
struct DerivedTrial {
    GameTrial trial;
    double std_dev = 0.0;   // standard deviation of the gamble's two outcomes
    double need_gap = 0.0;  // need_level - current_score (positive = behind)
};

struct FoldPlan {
    std::uint64_t seed = 0;
    int n_folds = 6;
    std::vector<int> assignments;   // parallel to the trial list it was built from
};

struct LoadResult {
    std::vector<GameTrial> trials;              // grouped by subject, ordered by (block, trial_index)
    std::vector<std::string> dropped_subjects;  // removed whole for missing responses
};

// Canonical trial CSV column order. framing in {gain,loss}; previous_outcome
// in {won,lost,sure,none} or empty; response in {gamble,sure} or empty;
// booleans as 0/1.
inline constexpr const char* kTrialCsvHeader =
    "subject_id,block_id,trial_index,initial_amount,win_prob,framing,time_limit,"
    "need_level,current_score,sure_amount,previous_outcome,is_catch,response";

LoadResult load_trials(const std::filesystem::path& path);
LoadResult load_trials_from_string(const std::string& csv);

std::string trials_to_csv(const std::vector<GameTrial>& trials);
void write_trials_csv(const std::filesystem::path& path, const std::vector<GameTrial>& trials);

// Computes std_dev and need_gap per trial and resolves missing
// previous_outcome / current_score from block history. Idempotent on
// already-resolved input.
std::vector<DerivedTrial> derive_features(const std::vector<GameTrial>& trials);

// Per-subject shuffle (seeded) followed by round-robin fold assignment.
// Fold sizes within a subject differ by at most one.
FoldPlan kfold_split(const std::vector<DerivedTrial>& trials, int n_folds, std::uint64_t seed);

// Flat per-trial feature matrix for external tools. 16 columns:
// the GameTrial fields with the response enum replaced by a binary label
// (gamble=1), plus std_dev, need_gap and the previous-outcome indicator.
inline constexpr const char* kFeatureCsvHeader =
    "subject_id,block_id,trial_index,initial_amount,win_prob,framing,time_limit,"
    "need_level,current_score,sure_amount,previous_outcome,is_catch,std,need_gap,"
    "previous_indicator,label";

std::string feature_csv(const std::vector<DerivedTrial>& trials);

} // namespace qdt
