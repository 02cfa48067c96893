#include "qdt/evalsim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "qdt/errors.hpp"
#include "qdt/rng.hpp"

namespace qdt {

namespace {

std::string fmt(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::size_t hist_bin(double x, double lo, double width, std::size_t n_bins) {
    const auto idx = static_cast<long>(std::floor((x - lo) / width));
    return static_cast<std::size_t>(std::clamp(idx, 0L, static_cast<long>(n_bins - 1)));
}

} // namespace

Choice to_choice(Response r) {
    switch (r) {
    case Response::Gamble: return Choice::Gamble;
    case Response::Sure: return Choice::Sure;
    default: throw InvariantViolation("missing response cannot be converted to a choice");
    }
}

Choice predict_choice(double p_gamble) {
    return p_gamble > 0.5 ? Choice::Gamble : Choice::Sure;
}

Choice predict_choice(const ProspectProbabilities& probs) {
    return predict_choice(probs.p_gamble);
}

double accuracy(const std::vector<Choice>& predictions, const std::vector<Choice>& responses) {
    if (predictions.size() != responses.size())
        throw LengthMismatch("accuracy: prediction/response length mismatch");
    if (predictions.empty()) throw EmptyInput("accuracy: empty input");
    std::size_t matches = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        matches += predictions[i] == responses[i];
    return static_cast<double>(matches) / static_cast<double>(predictions.size());
}

CalibrationReport calibration_bins(const std::vector<double>& p_gamble,
                                   const std::vector<Choice>& responses) {
    if (p_gamble.size() != responses.size())
        throw LengthMismatch("calibration_bins: length mismatch");

    CalibrationReport report;
    std::array<std::size_t, 10> gambles{};
    for (std::size_t b = 0; b < 10; ++b) {
        report.bins[b].lower = 0.1 * static_cast<double>(b);
        report.bins[b].upper = 0.1 * static_cast<double>(b + 1);
        report.bins[b].midpoint = report.bins[b].lower + 0.05;
    }
    for (std::size_t i = 0; i < p_gamble.size(); ++i) {
        const double p = p_gamble[i];
        if (!(p >= 0.0 && p <= 1.0))
            throw DomainError("calibration_bins: probability outside [0,1]");
        // p in [0.1b, 0.1(b+1)); the final bin is closed at 1.0.
        const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(p * 10.0), 9);
        report.bins[b].n_trials += 1;
        gambles[b] += responses[i] == Choice::Gamble;
    }
    for (std::size_t b = 0; b < 10; ++b) {
        CalibrationBin& bin = report.bins[b];
        if (bin.n_trials == 0) continue;
        bin.empirical_gamble_rate =
            static_cast<double>(gambles[b]) / static_cast<double>(bin.n_trials);
        if (bin.empirical_gamble_rate >= bin.lower && bin.empirical_gamble_rate <= bin.upper)
            report.in_band_count += 1;
    }
    return report;
}

FactorDistributions factor_distributions(const std::vector<ProspectProbabilities>& probs) {
    FactorDistributions dist;
    for (const ProspectProbabilities& p : probs) {
        if (std::fabs(p.q_gamble) > 0.5)
            throw InvariantViolation("attraction factor outside [-0.5, 0.5]");
        dist.f_counts[hist_bin(p.f_gamble, 0.0, 0.05, 20)] += 1;
        dist.q_counts[hist_bin(p.q_gamble, -0.5, 0.05, 20)] += 1;
        dist.n += 1;
    }
    return dist;
}

FactorDistributions factor_distributions(const std::vector<DerivedTrial>& trials,
                                         const UtilityParams& up, const AttractionParams& ap) {
    std::vector<ProspectProbabilities> probs;
    probs.reserve(trials.size());
    for (const DerivedTrial& t : trials) probs.push_back(prospect_probabilities(t, up, ap));
    return factor_distributions(probs);
}

SimulationReport simulate_responses(const std::vector<DerivedTrial>& trials,
                                    const std::vector<double>& p_gamble,
                                    int n_sims, std::uint64_t seed) {
    if (trials.size() != p_gamble.size())
        throw LengthMismatch("simulate_responses: probability vector does not match trials");
    if (trials.empty()) throw EmptyInput("simulate_responses: no trials");
    if (n_sims < 1) throw DomainError("simulate_responses: n_sims must be >= 1");

    SimulationReport report;
    report.n_sims = n_sims;
    report.rng_seed = seed;

    // Contiguous subject ranges.
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t i = 0;
    while (i < trials.size()) {
        std::size_t j = i + 1;
        while (j < trials.size() &&
               trials[j].trial.subject_id == trials[i].trial.subject_id)
            ++j;
        report.subjects.push_back(trials[i].trial.subject_id);
        ranges.emplace_back(i, j);
        i = j;
    }

    report.similarity.reserve(ranges.size() * static_cast<std::size_t>(n_sims));
    for (std::size_t s = 0; s < ranges.size(); ++s) {
        const auto [begin, end] = ranges[s];
        const std::uint64_t subject_hash = fnv1a64(report.subjects[s]);
        for (int r = 0; r < n_sims; ++r) {
            auto engine = make_engine(combine_seed(seed, subject_hash,
                                                   static_cast<std::uint64_t>(r)));
            std::size_t matches = 0;
            for (std::size_t k = begin; k < end; ++k) {
                const Choice simulated =
                    uniform01(engine) < p_gamble[k] ? Choice::Gamble : Choice::Sure;
                matches += simulated == to_choice(trials[k].trial.response);
            }
            const double similarity =
                static_cast<double>(matches) / static_cast<double>(end - begin);
            report.similarity.push_back(similarity);
            report.histogram[hist_bin(similarity, 0.0, 0.025, 40)] += 1;
        }
    }
    return report;
}

SimulationReport simulate_responses(const std::vector<DerivedTrial>& trials,
                                    const UtilityParams& up, const AttractionParams& ap,
                                    ModelKind model, int n_sims, std::uint64_t seed) {
    std::vector<double> p;
    p.reserve(trials.size());
    for (const DerivedTrial& t : trials) p.push_back(model_p_gamble(t, up, ap, model));
    return simulate_responses(trials, p, n_sims, seed);
}

AblationResult catch_ablation(const std::vector<DerivedTrial>& trials, const FoldPlan& folds,
                              ModelKind model, ComponentMask mask, const FitOptions& options) {
    if (folds.assignments.size() != trials.size())
        throw LengthMismatch("catch_ablation: fold plan does not match trials");

    AblationResult result;
    for (const DerivedTrial& t : trials) result.n_catch_trials += t.trial.is_catch;
    if (result.n_catch_trials == 0)
        throw NoCatchTrials("catch_ablation: subject has no catch trials");

    const auto run = [&](bool include_catch) {
        FitOptions opts = options;
        opts.include_catch_in_training = include_catch;
        const std::vector<FitResult> fits = fit_subject(trials, model, mask, folds, opts);
        std::size_t matches = 0, total = 0;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (trials[i].trial.is_catch) continue;  // fair-trial metric
            const FitResult& fit = fits[static_cast<std::size_t>(folds.assignments[i])];
            const double p = model_p_gamble(trials[i], fit.utility, fit.attraction, model);
            matches += predict_choice(p) == to_choice(trials[i].trial.response);
            total += 1;
        }
        result.n_fair_test_trials = total;
        return static_cast<double>(matches) / static_cast<double>(total);
    };

    result.accuracy_with_catch = run(true);
    result.accuracy_without_catch = run(false);
    return result;
}

int ExperimentDescriptor::trials_per_block() const {
    return (static_cast<int>(amounts.size() * win_probs.size()) * 2 + n_catch) * presentations;
}

int ExperimentDescriptor::n_blocks() const {
    return static_cast<int>(time_limits.size() * need_levels.size()) * blocks_per_combo;
}

ExperimentDescriptor ExperimentDescriptor::dataset1() {
    ExperimentDescriptor d;
    d.amounts = {25, 50, 75, 100};
    d.win_probs = {0.3, 0.4, 0.6, 0.7};
    d.time_limits = {1, 3};
    d.need_levels = {0, 2500, 3500};
    d.presentations = 2;
    d.blocks_per_combo = 2;
    d.n_catch = 8;
    return d;
}

ExperimentDescriptor ExperimentDescriptor::dataset2() {
    ExperimentDescriptor d;
    d.amounts = {19, 20, 21, 39, 40, 41, 59, 60, 61, 79, 80, 81};
    d.win_probs = {0.3, 0.4, 0.6, 0.7};
    d.time_limits = {1, 3};
    d.need_levels = {0, 2800, 3600};
    d.presentations = 1;
    d.blocks_per_combo = 1;
    d.n_catch = 8;
    return d;
}

SyntheticSubject generate_synthetic_subject(const ExperimentDescriptor& desc,
                                            const UtilityParams& up, const AttractionParams& ap,
                                            const std::string& subject_id, std::uint64_t seed) {
    if (desc.amounts.empty() || desc.win_probs.empty() || desc.time_limits.empty() ||
        desc.need_levels.empty() || desc.presentations < 1 || desc.blocks_per_combo < 1 ||
        desc.n_catch < 0)
        throw InvalidDescriptor("experiment descriptor is incomplete");
    for (double s : desc.amounts)
        if (!(s > 0.0)) throw InvalidDescriptor("amounts must be positive");
    for (double p : desc.win_probs)
        if (!(p > 0.0 && p < 1.0)) throw InvalidDescriptor("win probabilities must lie in (0,1)");
    for (double tl : desc.time_limits)
        if (!(tl > 0.0)) throw InvalidDescriptor("time limits must be positive");
    for (double nl : desc.need_levels)
        if (nl < 0.0) throw InvalidDescriptor("need levels must be >= 0");
    if (!up.valid() || !ap.valid()) throw InvalidDescriptor("invalid generator parameters");

    SyntheticSubject subject;
    subject.subject_id = subject_id;
    subject.utility = up;
    subject.attraction = ap;
    subject.rng_seed = seed;

    auto engine = make_engine(combine_seed(seed, fnv1a64(subject_id)));

    // One template per distinct trial; partial GameTrial (schedule only).
    struct Template {
        double amount, p, sure;
        Framing framing;
        bool is_catch;
    };
    std::vector<Template> templates;
    for (double amount : desc.amounts)
        for (double p : desc.win_probs)
            for (Framing fr : {Framing::Gain, Framing::Loss})
                templates.push_back({amount, p, p * amount, fr, false});
    for (int j = 0; j < desc.n_catch; ++j) {
        const double amount = desc.amounts[static_cast<std::size_t>(j) % desc.amounts.size()];
        const bool gamble_biased = j % 2 == 0;
        const double p = gamble_biased ? 0.7 : 0.3;
        const double sure = (gamble_biased ? 0.4 : 0.6) * amount;
        const Framing fr = (j / 2) % 2 == 0 ? Framing::Gain : Framing::Loss;
        templates.push_back({amount, p, sure, fr, true});
    }

    int block_id = 0;
    for (double need : desc.need_levels) {
        for (double tl : desc.time_limits) {
            for (int rep = 0; rep < desc.blocks_per_combo; ++rep) {
                block_id += 1;
                std::vector<std::size_t> order;
                for (std::size_t t = 0; t < templates.size(); ++t)
                    for (int k = 0; k < desc.presentations; ++k) order.push_back(t);
                deterministic_shuffle(order, engine);

                double running = 0.0;
                PreviousOutcome prev = PreviousOutcome::None;
                double prev_gain = 0.0;
                int index = 0;
                for (std::size_t t : order) {
                    const Template& tpl = templates[t];
                    index += 1;

                    GameTrial trial;
                    trial.subject_id = subject_id;
                    trial.block_id = block_id;
                    trial.trial_index = index;
                    trial.initial_amount = tpl.amount;
                    trial.win_prob = tpl.p;
                    trial.framing = tpl.framing;
                    trial.time_limit = tl;
                    trial.need_level = need;
                    trial.current_score = running;
                    trial.sure_amount = tpl.sure;
                    trial.previous_outcome = prev;
                    trial.is_catch = tpl.is_catch;

                    DerivedTrial derived;
                    derived.trial = trial;
                    derived.std_dev = tpl.amount * std::sqrt(tpl.p * (1.0 - tpl.p));
                    derived.need_gap = need - running;

                    const double p_gamble = prospect_probabilities(derived, up, ap).p_gamble;
                    if (uniform01(engine) < p_gamble) {
                        trial.response = Response::Gamble;
                        if (uniform01(engine) < tpl.p) {
                            prev = PreviousOutcome::Won;
                            prev_gain = tpl.amount;
                        } else {
                            prev = PreviousOutcome::Lost;
                            prev_gain = 0.0;
                        }
                    } else {
                        trial.response = Response::Sure;
                        prev = PreviousOutcome::Sure;
                        prev_gain = tpl.sure;
                    }
                    running += prev_gain;
                    subject.trials.push_back(std::move(trial));
                }
            }
        }
    }
    return subject;
}

std::string calibration_csv(const CalibrationReport& report) {
    std::string out = "bin_lower,bin_upper,midpoint,n,empirical_rate\n";
    for (const CalibrationBin& bin : report.bins) {
        out += fmt(bin.lower) + ',' + fmt(bin.upper) + ',' + fmt(bin.midpoint) + ',' +
               std::to_string(bin.n_trials) + ',' +
               (bin.n_trials > 0 ? fmt(bin.empirical_gamble_rate) : std::string()) + '\n';
    }
    return out;
}

std::string similarity_hist_csv(const SimulationReport& report) {
    std::string out = "bin_lower,count\n";
    for (std::size_t b = 0; b < report.histogram.size(); ++b)
        out += fmt(0.025 * static_cast<double>(b)) + ',' +
               std::to_string(report.histogram[b]) + '\n';
    return out;
}

std::string factor_hist_csv(const FactorDistributions& dist) {
    std::string out = "factor,bin_lower,count\n";
    for (std::size_t b = 0; b < dist.f_counts.size(); ++b)
        out += "f," + fmt(0.05 * static_cast<double>(b)) + ',' +
               std::to_string(dist.f_counts[b]) + '\n';
    for (std::size_t b = 0; b < dist.q_counts.size(); ++b)
        out += "q," + fmt(-0.5 + 0.05 * static_cast<double>(b)) + ',' +
               std::to_string(dist.q_counts[b]) + '\n';
    return out;
}

} // namespace qdt
