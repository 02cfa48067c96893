#include "qdt/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qdt/errors.hpp"

namespace qdt {

namespace {

double inverse_logit_of_neg(double t) {
    if (t > 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

// Per-trial constants hoisted out of the objective's inner loop. Utilities
// become single exp() calls against cached logarithms.
struct PreparedTrials {
    std::size_t n = 0;
    std::vector<double> ln_amount;     // ln S
    std::vector<double> ln_sure;       // ln sure_amount (0 flagged separately)
    std::vector<std::uint8_t> sure_zero;
    std::vector<double> ln_neg_ln_p;   // ln(-ln p), feeds the Prelec weight
    std::vector<double> ln_std;        // ln of the gamble std deviation
    std::vector<double> neg_framing;   // -I_framing
    std::vector<double> time_limit;
    std::vector<double> mem_std;       // I_previous * std
    std::vector<double> need_base;     // need_gap - 5 * std * (1 - p)
    std::vector<std::uint8_t> resp;    // 1 = gamble
    // CPT baseline (reference point at the gamble's expected value)
    std::vector<double> ln_win_gain;   // ln(S - pS)
    std::vector<double> ln_reference;  // ln(pS)
    std::vector<double> sure_rel;      // sure_amount - pS

    explicit PreparedTrials(const std::vector<DerivedTrial>& trials) {
        n = trials.size();
        ln_amount.resize(n); ln_sure.resize(n); sure_zero.resize(n);
        ln_neg_ln_p.resize(n); ln_std.resize(n); neg_framing.resize(n);
        time_limit.resize(n); mem_std.resize(n); need_base.resize(n); resp.resize(n);
        ln_win_gain.resize(n); ln_reference.resize(n); sure_rel.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const DerivedTrial& d = trials[i];
            const GameTrial& t = d.trial;
            ln_amount[i] = std::log(t.initial_amount);
            sure_zero[i] = t.sure_amount == 0.0;
            ln_sure[i] = sure_zero[i] ? 0.0 : std::log(t.sure_amount);
            ln_neg_ln_p[i] = std::log(-std::log(t.win_prob));
            ln_std[i] = std::log(d.std_dev);
            neg_framing[i] = -t.framing_indicator();
            time_limit[i] = t.time_limit;
            const PreviousOutcome prev = t.previous_outcome.value_or(PreviousOutcome::None);
            mem_std[i] = previous_indicator(prev) * d.std_dev;
            need_base[i] = d.need_gap - 5.0 * d.std_dev * (1.0 - t.win_prob);
            resp[i] = t.response == Response::Gamble;
            const double reference = t.win_prob * t.initial_amount;
            ln_win_gain[i] = std::log(t.initial_amount - reference);
            ln_reference[i] = std::log(reference);
            sure_rel[i] = t.sure_amount - reference;
        }
    }
};

bool bounds_ok(ModelKind model, const UtilityParams& up, const AttractionParams& ap) {
    if (!(up.alpha > 0.0 && up.delta > 0.0 && up.gamma > 0.0 && up.phi >= 0.0)) return false;
    if (model == ModelKind::Cpt) return up.lambda > 0.0;
    return ap.c1 >= 0.0 && ap.c2 >= 0.0 && ap.a >= 0.0;
}

double clamp_prob(double p, double floor) {
    return std::min(std::max(p, floor), 1.0 - floor);
}

double nll_qdt(const PreparedTrials& pt, const UtilityParams& up, const AttractionParams& ap,
               double prob_floor) {
    const bool use_tf = ap.mask.time_frame;
    const bool use_mem = ap.mask.memory;
    const bool use_need = ap.mask.need;
    double nll = 0.0;
    for (std::size_t i = 0; i < pt.n; ++i) {
        const double w = std::exp(-up.delta * std::exp(up.gamma * pt.ln_neg_ln_p[i]));
        const double u_gamble = w * std::exp(up.alpha * pt.ln_amount[i]);
        const double u_sure = pt.sure_zero[i] ? 0.0 : std::exp(up.alpha * pt.ln_sure[i]);
        const double f = inverse_logit_of_neg(up.phi * (u_sure - u_gamble));

        double q_total = 0.0;
        if (use_tf) {
            // std^c1 with 0^0 == 1, matching q_framing
            const double pow_std = ap.c1 == 0.0 ? 1.0 : std::exp(ap.c1 * pt.ln_std[i]);
            q_total += std::exp(-ap.c2 * pt.time_limit[i]) * (pt.neg_framing[i] * pow_std);
        }
        if (use_mem) q_total += ap.c3 * pt.mem_std[i];
        if (use_need) q_total += ap.c4 * pt.need_base[i];

        const double q = std::min(f, 1.0 - f) * std::tanh(ap.a * q_total);
        const double p = clamp_prob(f + q, prob_floor);
        nll -= pt.resp[i] ? std::log(p) : std::log1p(-p);
    }
    return nll;
}

double nll_cpt(const PreparedTrials& pt, const UtilityParams& up, double prob_floor) {
    double nll = 0.0;
    for (std::size_t i = 0; i < pt.n; ++i) {
        const double w = std::exp(-up.delta * std::exp(up.gamma * pt.ln_neg_ln_p[i]));
        const double u_gamble = w * std::exp(up.alpha * pt.ln_win_gain[i]) -
                                (1.0 - w) * up.lambda * std::exp(up.alpha * pt.ln_reference[i]);
        const double rel = pt.sure_rel[i];
        double u_sure = 0.0;
        if (rel > 0.0) u_sure = std::pow(rel, up.alpha);
        else if (rel < 0.0) u_sure = -up.lambda * std::pow(-rel, up.alpha);
        const double f = inverse_logit_of_neg(up.phi * (u_sure - u_gamble));
        const double p = clamp_prob(f, prob_floor);
        nll -= pt.resp[i] ? std::log(p) : std::log1p(-p);
    }
    return nll;
}

double evaluate_objective(const PreparedTrials& pt, const ObjectiveSpec& spec,
                          const UtilityParams& up, const AttractionParams& ap,
                          double penalty_value) {
    if (!bounds_ok(spec.model, up, ap)) return penalty_value;
    double value;
    if (spec.model == ModelKind::Cpt) {
        value = nll_cpt(pt, up, spec.prob_floor);
    } else {
        double l1 = std::fabs(ap.c1) + std::fabs(ap.c2) + std::fabs(ap.c3) + std::fabs(ap.c4);
        if (spec.regularize_a) l1 += std::fabs(ap.a);
        value = nll_qdt(pt, up, ap, spec.prob_floor) + spec.reg_weight * l1;
    }
    return std::isfinite(value) ? value : penalty_value;
}

void validate_spec(const ObjectiveSpec& spec) {
    if (spec.trials.empty()) throw EmptyInput("objective needs at least one trial");
    for (const DerivedTrial& d : spec.trials)
        if (d.trial.subject_id != spec.trials.front().trial.subject_id)
            throw InvariantViolation("objective trials must belong to one subject");
}

// Grid anchors; lexicographic iteration order matches ParamLayout order.
const std::vector<double> kGridAlpha = {0.5, 0.88, 1.0};
const std::vector<double> kGridDelta = {0.5, 1.0, 1.5};
const std::vector<double> kGridGamma = {0.5, 0.74, 1.0};
const std::vector<double> kGridPhi = {0.05, 0.5, 2.0};
const std::vector<double> kGridLambda = {1.0, 2.25};
const std::vector<double> kGridC12 = {0.0, 0.1, 1.0};
const std::vector<double> kGridC34 = {-0.1, 0.0, 0.1};
const std::vector<double> kGridA = {0.01, 0.1, 1.0};

std::vector<double> grid_search_cpt(const PreparedTrials& pt, const ObjectiveSpec& spec) {
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> argmin;
    UtilityParams up;
    AttractionParams ap;
    for (double alpha : kGridAlpha)
        for (double delta : kGridDelta)
            for (double gamma : kGridGamma)
                for (double phi : kGridPhi)
                    for (double lambda : kGridLambda) {
                        up = {alpha, delta, gamma, phi, lambda};
                        const double v = evaluate_objective(pt, spec, up, ap, kPenaltyValue);
                        if (v < best) {
                            best = v;
                            argmin = {alpha, delta, gamma, phi, lambda};
                        }
                    }
    return argmin;
}

// Staged QDT grid scan. The attraction term is independent of the utility
// parameters, so cos_delta is precomputed per (c-combo, a) and the leaf loop
// reduces to a fused probability + log per trial.
std::vector<double> grid_search_qdt(const PreparedTrials& pt, const ObjectiveSpec& spec) {
    const ComponentMask mask = spec.mask;
    const std::size_t n = pt.n;

    const std::vector<double> zero = {0.0};
    const std::vector<double>& c1s = mask.time_frame ? kGridC12 : zero;
    const std::vector<double>& c2s = mask.time_frame ? kGridC12 : zero;
    const std::vector<double>& c3s = mask.memory ? kGridC34 : zero;
    const std::vector<double>& c4s = mask.need ? kGridC34 : zero;
    const std::vector<double>& as = mask.empty() ? zero : kGridA;

    struct AttractionCombo {
        double c1, c2, c3, c4, a, reg;
        std::vector<double> cos_delta;  // per trial
    };
    std::vector<AttractionCombo> combos;
    combos.reserve(c1s.size() * c2s.size() * c3s.size() * c4s.size() * as.size());

    std::vector<double> q_raw(n);
    for (double c1 : c1s) {
        std::vector<double> pow_std(n);
        for (std::size_t i = 0; i < n; ++i)
            pow_std[i] = !mask.time_frame ? 0.0
                         : c1 == 0.0      ? 1.0
                                          : std::exp(c1 * pt.ln_std[i]);
        for (double c2 : c2s) {
            for (std::size_t i = 0; i < n; ++i)
                q_raw[i] = mask.time_frame
                               ? std::exp(-c2 * pt.time_limit[i]) * pt.neg_framing[i] * pow_std[i]
                               : 0.0;
            for (double c3 : c3s)
                for (double c4 : c4s)
                    for (double a : as) {
                        AttractionCombo combo;
                        combo.c1 = c1; combo.c2 = c2; combo.c3 = c3; combo.c4 = c4; combo.a = a;
                        double l1 = std::fabs(c1) + std::fabs(c2) + std::fabs(c3) + std::fabs(c4);
                        if (spec.regularize_a) l1 += std::fabs(a);
                        combo.reg = spec.reg_weight * l1;
                        combo.cos_delta.resize(n);
                        for (std::size_t i = 0; i < n; ++i) {
                            double q = q_raw[i];
                            if (mask.memory) q += c3 * pt.mem_std[i];
                            if (mask.need) q += c4 * pt.need_base[i];
                            combo.cos_delta[i] = std::tanh(a * q);
                        }
                        combos.push_back(std::move(combo));
                    }
        }
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_utility;
    const AttractionCombo* best_combo = nullptr;

    std::vector<double> f(n);
    std::vector<double> u_diff(n);
    for (double alpha : kGridAlpha) {
        std::vector<double> v_amount(n), v_sure(n);
        for (std::size_t i = 0; i < n; ++i) {
            v_amount[i] = std::exp(alpha * pt.ln_amount[i]);
            v_sure[i] = pt.sure_zero[i] ? 0.0 : std::exp(alpha * pt.ln_sure[i]);
        }
        for (double delta : kGridDelta)
            for (double gamma : kGridGamma) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double w = std::exp(-delta * std::exp(gamma * pt.ln_neg_ln_p[i]));
                    u_diff[i] = v_sure[i] - w * v_amount[i];
                }
                for (double phi : kGridPhi) {
                    for (std::size_t i = 0; i < n; ++i)
                        f[i] = inverse_logit_of_neg(phi * u_diff[i]);
                    for (const AttractionCombo& combo : combos) {
                        double nll = combo.reg;
                        for (std::size_t i = 0; i < n; ++i) {
                            const double fi = f[i];
                            const double p = clamp_prob(
                                fi + std::min(fi, 1.0 - fi) * combo.cos_delta[i], spec.prob_floor);
                            nll -= pt.resp[i] ? std::log(p) : std::log1p(-p);
                        }
                        if (nll < best) {
                            best = nll;
                            best_utility = {alpha, delta, gamma, phi};
                            best_combo = &combo;
                        }
                    }
                }
            }
    }

    std::vector<double> argmin = best_utility;
    if (mask.time_frame) { argmin.push_back(best_combo->c1); argmin.push_back(best_combo->c2); }
    if (mask.memory) argmin.push_back(best_combo->c3);
    if (mask.need) argmin.push_back(best_combo->c4);
    if (!mask.empty()) argmin.push_back(best_combo->a);
    return argmin;
}

} // namespace

int ParamLayout::dimension() const {
    if (model == ModelKind::Cpt) return 5;
    int d = 4;
    if (mask.time_frame) d += 2;
    if (mask.memory) d += 1;
    if (mask.need) d += 1;
    if (!mask.empty()) d += 1;
    return d;
}

std::vector<std::string> ParamLayout::names() const {
    std::vector<std::string> out = {"alpha", "delta", "gamma", "phi"};
    if (model == ModelKind::Cpt) {
        out.push_back("lambda");
        return out;
    }
    if (mask.time_frame) { out.push_back("c1"); out.push_back("c2"); }
    if (mask.memory) out.push_back("c3");
    if (mask.need) out.push_back("c4");
    if (!mask.empty()) out.push_back("a");
    return out;
}

void ParamLayout::unpack(const std::vector<double>& x, UtilityParams& up,
                         AttractionParams& ap) const {
    if (static_cast<int>(x.size()) != dimension())
        throw DomainError("parameter vector has wrong dimension");
    up = UtilityParams{};
    ap = AttractionParams{};
    up.alpha = x[0]; up.delta = x[1]; up.gamma = x[2]; up.phi = x[3];
    if (model == ModelKind::Cpt) {
        up.lambda = x[4];
        return;
    }
    std::size_t k = 4;
    ap.mask = mask;
    if (mask.time_frame) { ap.c1 = x[k++]; ap.c2 = x[k++]; }
    if (mask.memory) ap.c3 = x[k++];
    if (mask.need) ap.c4 = x[k++];
    if (!mask.empty()) ap.a = x[k++];
}

std::vector<double> ParamLayout::pack(const UtilityParams& up, const AttractionParams& ap) const {
    std::vector<double> x = {up.alpha, up.delta, up.gamma, up.phi};
    if (model == ModelKind::Cpt) {
        x.push_back(up.lambda);
        return x;
    }
    if (mask.time_frame) { x.push_back(ap.c1); x.push_back(ap.c2); }
    if (mask.memory) x.push_back(ap.c3);
    if (mask.need) x.push_back(ap.c4);
    if (!mask.empty()) x.push_back(ap.a);
    return x;
}

double regularized_nll(const ObjectiveSpec& spec, const UtilityParams& up,
                       const AttractionParams& ap) {
    validate_spec(spec);
    AttractionParams masked = ap;
    masked.mask = spec.mask;
    const PreparedTrials pt(spec.trials);
    return evaluate_objective(pt, spec, up, masked, kPenaltyValue);
}

std::vector<double> grid_search_init(const ObjectiveSpec& spec) {
    validate_spec(spec);
    const PreparedTrials pt(spec.trials);
    if (spec.model == ModelKind::Cpt) return grid_search_cpt(pt, spec);
    return grid_search_qdt(pt, spec);
}

MinimizeResult nelder_mead_minimize(const std::function<double(const std::vector<double>&)>& objective,
                                    const std::vector<double>& start,
                                    const SimplexConfig& config) {
    const std::size_t dim = start.size();
    if (dim == 0) throw DomainError("nelder_mead_minimize: empty start point");

    std::vector<std::vector<double>> vertex(dim + 1, start);
    for (std::size_t i = 0; i < dim; ++i)
        vertex[i + 1][i] += std::max(0.05 * std::fabs(start[i]), 0.05);

    std::vector<double> value(dim + 1);
    for (std::size_t i = 0; i <= dim; ++i) value[i] = objective(vertex[i]);

    std::vector<std::size_t> order(dim + 1);
    std::iota(order.begin(), order.end(), 0);

    MinimizeResult result;
    std::vector<double> centroid(dim), candidate(dim);
    int iter = 0;
    bool converged = false;

    for (; iter < config.max_iters; ++iter) {
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second_worst = order[dim - 1];

        if (value[worst] - value[best] < config.tolerance) {
            converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k = 0; k < dim; ++k)
            for (std::size_t i = 0; i < dim; ++i) centroid[i] += vertex[order[k]][i];
        for (std::size_t i = 0; i < dim; ++i) centroid[i] /= static_cast<double>(dim);

        auto blend = [&](double coeff) {
            for (std::size_t i = 0; i < dim; ++i)
                candidate[i] = centroid[i] + coeff * (centroid[i] - vertex[worst][i]);
        };

        blend(config.reflection);
        const std::vector<double> reflected = candidate;
        const double f_reflected = objective(reflected);

        if (f_reflected < value[best]) {
            blend(config.reflection * config.expansion);
            const double f_expanded = objective(candidate);
            if (f_expanded < f_reflected) {
                vertex[worst] = candidate;
                value[worst] = f_expanded;
            } else {
                vertex[worst] = reflected;
                value[worst] = f_reflected;
            }
        } else if (f_reflected < value[second_worst]) {
            vertex[worst] = reflected;
            value[worst] = f_reflected;
        } else {
            const bool outside = f_reflected < value[worst];
            if (outside)
                blend(config.reflection * config.contraction);
            else
                blend(-config.contraction);
            const double f_contracted = objective(candidate);
            if (f_contracted < (outside ? f_reflected : value[worst])) {
                vertex[worst] = candidate;
                value[worst] = f_contracted;
            } else {
                for (std::size_t k = 0; k <= dim; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < dim; ++i)
                        vertex[k][i] = vertex[best][i] +
                                       config.shrink * (vertex[k][i] - vertex[best][i]);
                    value[k] = objective(vertex[k]);
                }
            }
        }
    }

    const std::size_t best = *std::min_element(
        order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
    result.x = vertex[best];
    result.value = value[best];
    result.iterations = iter;
    result.converged = converged;
    return result;
}

std::vector<FitResult> fit_subject(const std::vector<DerivedTrial>& trials, ModelKind model,
                                   ComponentMask mask, const FoldPlan& folds,
                                   const FitOptions& options) {
    if (trials.empty()) throw EmptyInput("fit_subject: no trials");
    if (folds.assignments.size() != trials.size())
        throw LengthMismatch("fit_subject: fold plan does not match trials");
    for (const DerivedTrial& d : trials)
        if (d.trial.subject_id != trials.front().trial.subject_id)
            throw InvariantViolation("fit_subject: trials must belong to one subject");
    if (trials.size() < static_cast<std::size_t>(folds.n_folds))
        throw TooFewTrials("fit_subject: fewer trials than folds");

    const ParamLayout layout{model, mask};
    std::vector<FitResult> results;
    results.reserve(static_cast<std::size_t>(folds.n_folds));

    for (int fold = 0; fold < folds.n_folds; ++fold) {
        ObjectiveSpec spec;
        spec.model = model;
        spec.mask = mask;
        spec.reg_weight = options.reg_weight;
        spec.regularize_a = options.regularize_a;
        for (std::size_t i = 0; i < trials.size(); ++i) {
            if (folds.assignments[i] == fold) continue;
            if (!options.include_catch_in_training && trials[i].trial.is_catch) continue;
            spec.trials.push_back(trials[i]);
        }
        if (spec.trials.empty())
            throw TooFewTrials("fit_subject: empty training set for fold " + std::to_string(fold));

        const PreparedTrials pt(spec.trials);
        const std::vector<double> start =
            spec.model == ModelKind::Cpt ? grid_search_cpt(pt, spec) : grid_search_qdt(pt, spec);

        UtilityParams up;
        AttractionParams ap;
        auto objective = [&](const std::vector<double>& x) {
            layout.unpack(x, up, ap);
            return evaluate_objective(pt, spec, up, ap, options.simplex.penalty_value);
        };

        const MinimizeResult min = nelder_mead_minimize(objective, start, options.simplex);

        FitResult fit;
        layout.unpack(min.x, fit.utility, fit.attraction);
        fit.objective = min.value;
        fit.iterations = min.iterations;
        fit.converged = min.converged;
        fit.fold = fold;
        fit.start_point = start;
        results.push_back(std::move(fit));
    }
    return results;
}

double model_p_gamble(const DerivedTrial& trial, const UtilityParams& up,
                      const AttractionParams& ap, ModelKind model) {
    if (model == ModelKind::Cpt) return cpt_baseline_probability(trial, up);
    return prospect_probabilities(trial, up, ap).p_gamble;
}

} // namespace qdt
