#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qdt/estimator.hpp"
#include "qdt/model.hpp"
#include "qdt/trials.hpp"

namespace qdt {

enum class Choice { Gamble, Sure };

// Throws InvariantViolation on Response::Missing.
Choice to_choice(Response r);

// Gamble iff p_gamble > 0.5; an exact tie predicts Sure.
Choice predict_choice(const ProspectProbabilities& probs);
Choice predict_choice(double p_gamble);

// Fraction of positions where prediction equals response.
double accuracy(const std::vector<Choice>& predictions, const std::vector<Choice>& responses);

struct CalibrationBin {
    double lower = 0.0, upper = 0.0, midpoint = 0.0;
    std::size_t n_trials = 0;
    double empirical_gamble_rate = 0.0;  // meaningful only when n_trials > 0
};

// Ten bins of width 0.1 over predicted gamble probability; a bin is "in
// band" when its empirical gamble rate lies inside [lower, upper].
struct CalibrationReport {
    std::array<CalibrationBin, 10> bins{};
    int in_band_count = 0;
};

CalibrationReport calibration_bins(const std::vector<double>& p_gamble,
                                   const std::vector<Choice>& responses);

// Histograms of f_gamble over [0,1] and q_gamble over [-0.5,0.5],
// both with bin width 0.05.
struct FactorDistributions {
    std::array<std::size_t, 20> f_counts{};
    std::array<std::size_t, 20> q_counts{};
    std::size_t n = 0;
};

FactorDistributions factor_distributions(const std::vector<ProspectProbabilities>& probs);
FactorDistributions factor_distributions(const std::vector<DerivedTrial>& trials,
                                         const UtilityParams& up, const AttractionParams& ap);

// Monte-Carlo response simulation. Each replicate redraws every trial's
// response as Bernoulli(p_gamble) and scores the fraction matching the
// empirical response; replicate r of subject s draws from a stream seeded
// by (seed, s, r), so results do not depend on evaluation order.
struct SimulationReport {
    int n_sims = 0;
    std::uint64_t rng_seed = 0;
    std::vector<std::string> subjects;
    std::vector<double> similarity;          // subject-major: [s * n_sims + r]
    std::array<std::size_t, 40> histogram{}; // similarity bins of width 0.025
};

SimulationReport simulate_responses(const std::vector<DerivedTrial>& trials,
                                    const std::vector<double>& p_gamble,
                                    int n_sims, std::uint64_t seed);
SimulationReport simulate_responses(const std::vector<DerivedTrial>& trials,
                                    const UtilityParams& up, const AttractionParams& ap,
                                    ModelKind model, int n_sims, std::uint64_t seed);

// Cross-validated accuracy with catch trials in vs out of the training
// sets. Accuracy is always measured on held-out fair trials.
struct AblationResult {
    double accuracy_with_catch = 0.0;
    double accuracy_without_catch = 0.0;
    std::size_t n_fair_test_trials = 0;
    std::size_t n_catch_trials = 0;
};

AblationResult catch_ablation(const std::vector<DerivedTrial>& trials, const FoldPlan& folds,
                              ModelKind model, ComponentMask mask, const FitOptions& options = {});

// Trial-schedule template mirroring the two experiment designs: every
// (amount, win_prob, framing) fair trial plus n_catch unfair trials per
// block, each presented `presentations` times, with one block per
// (time_limit, need_level) combination repeated blocks_per_combo times.
struct ExperimentDescriptor {
    std::vector<double> amounts;
    std::vector<double> win_probs;
    std::vector<double> time_limits;
    std::vector<double> need_levels;
    int presentations = 1;
    int blocks_per_combo = 1;
    int n_catch = 8;

    static ExperimentDescriptor dataset1();  // 12 blocks x 80 trials = 960
    static ExperimentDescriptor dataset2();  // 6 blocks x 104 trials = 624

    int trials_per_block() const;
    int n_blocks() const;
};

struct SyntheticSubject {
    std::string subject_id;
    UtilityParams utility;
    AttractionParams attraction;
    std::uint64_t rng_seed = 0;
    std::vector<GameTrial> trials;  // schedule with simulated responses
};

// Simulates one agent through the descriptor's schedule: responses are
// Bernoulli(p_gamble) under the given QDT parameters, gamble outcomes
// realize with the trial's win probability, and the running score /
// previous-outcome history evolves accordingly.
SyntheticSubject generate_synthetic_subject(const ExperimentDescriptor& descriptor,
                                            const UtilityParams& up, const AttractionParams& ap,
                                            const std::string& subject_id, std::uint64_t seed);

// Plot-ready CSV renderings of the report types.
std::string calibration_csv(const CalibrationReport& report);
std::string similarity_hist_csv(const SimulationReport& report);
std::string factor_hist_csv(const FactorDistributions& dist);

} // namespace qdt
