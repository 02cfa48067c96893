#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qdt/model.hpp"
#include "qdt/trials.hpp"

namespace qdt {

enum class ModelKind { Qdt, Cpt };

// Objective value assigned to parameter vectors that violate a hard bound.
inline constexpr double kPenaltyValue = 1e10;

// One subject's training set plus the objective configuration.
struct ObjectiveSpec {
    std::vector<DerivedTrial> trials;
    ModelKind model = ModelKind::Qdt;
    ComponentMask mask = ComponentMask::all();  // QDT only
    double reg_weight = 1.0;
    double prob_floor = 1e-9;
    bool regularize_a = false;  // include |a| in the L1 term alongside c1..c4
};

struct SimplexConfig {
    double tolerance = 1e-6;    // stop when max-min objective over the simplex < tolerance
    int max_iters = 3000;
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
    double penalty_value = kPenaltyValue;
};

// Flat optimizer vector <-> named parameters for a given model/mask.
// QDT order: alpha, delta, gamma, phi, [c1, c2], [c3], [c4], [a] where the
// bracketed entries appear only for enabled components (a only when at least
// one component is enabled). CPT order: alpha, delta, gamma, phi, lambda.
struct ParamLayout {
    ModelKind model = ModelKind::Qdt;
    ComponentMask mask = ComponentMask::all();

    int dimension() const;
    std::vector<std::string> names() const;
    void unpack(const std::vector<double>& x, UtilityParams& up, AttractionParams& ap) const;
    std::vector<double> pack(const UtilityParams& up, const AttractionParams& ap) const;
};

struct FitResult {
    UtilityParams utility;
    AttractionParams attraction;
    double objective = 0.0;   // final regularized NLL
    int iterations = 0;
    bool converged = false;
    int fold = -1;            // held-out fold id
    std::vector<double> start_point;
};

// Regularized negative log-likelihood
//   -sum_j [resp_j ln P_j(gamble) + (1-resp_j) ln P_j(sure)] + reg_weight * sum_k |c_k|
// with every P clamped to [prob_floor, 1-prob_floor]. Returns kPenaltyValue
// when a hard parameter bound is violated. Total over all inputs.
double regularized_nll(const ObjectiveSpec& spec, const UtilityParams& up,
                       const AttractionParams& ap);

// Coarse Cartesian grid over conventional parameter anchors; returns the
// argmin vector in ParamLayout order, ties broken by first encounter in
// lexicographic grid order.
std::vector<double> grid_search_init(const ObjectiveSpec& spec);

struct MinimizeResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Derivative-free Nelder-Mead simplex minimization. The initial simplex
// perturbs coordinate i of start by max(0.05*|start_i|, 0.05).
MinimizeResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& objective,
                                    const std::vector<double>& start,
                                    const SimplexConfig& config = {});

struct FitOptions {
    SimplexConfig simplex;
    double reg_weight = 1.0;
    bool include_catch_in_training = true;
    bool regularize_a = false;
};

// Per-fold maximum-likelihood fits for one subject: fold k's result is
// trained on the complement of fold k.
std::vector<FitResult> fit_subject(const std::vector<DerivedTrial>& trials, ModelKind model,
                                   ComponentMask mask, const FoldPlan& folds,
                                   const FitOptions& options = {});

// Per-trial gamble probability under either model.
double model_p_gamble(const DerivedTrial& trial, const UtilityParams& up,
                      const AttractionParams& ap, ModelKind model);

} // namespace qdt
