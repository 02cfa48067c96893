#include "qdt/model.hpp"

#include <algorithm>
#include <cmath>

#include "qdt/errors.hpp"

namespace qdt {

namespace {

// 1 / (1 + exp(t)) without overflow for any finite t.
double inverse_logit_of_neg(double t) {
    if (t > 0.0) {
        const double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

} // namespace

double value_fn(double x, const UtilityParams& params) {
    if (x >= 0.0) return std::pow(x, params.alpha);
    return -params.lambda * std::pow(-x, params.alpha);
}

double prelec_weight(double p, const UtilityParams& params) {
    p = std::max(p, 1e-9);
    if (p >= 1.0) return 1.0;
    return std::exp(-params.delta * std::pow(-std::log(p), params.gamma));
}

double option_utility_gain(double amount_hi, double p_hi, double amount_lo,
                           const UtilityParams& params) {
    if (amount_hi < 0.0 || amount_lo < 0.0)
        throw DomainError("option_utility_gain: negative amount in gain-only domain");
    const double w = prelec_weight(p_hi, params);
    return w * value_fn(amount_hi, params) + (1.0 - w) * value_fn(amount_lo, params);
}

UtilityFactors utility_factors(double u_gamble, double u_sure, const UtilityParams& params) {
    const double f = inverse_logit_of_neg(params.phi * (u_sure - u_gamble));
    return {f, 1.0 - f};
}

double q_framing(double std_dev, double framing_indicator, double c1) {
    // std::pow(0, 0) == 1, which is the intended c1 = 0 pure-indicator case.
    return -1.0 * framing_indicator * std::pow(std_dev, c1);
}

double q_time(double time_limit, double c2) {
    return std::exp(-c2 * time_limit);
}

double q_memory(double std_dev, double previous_indicator, double c3) {
    return c3 * previous_indicator * std_dev;
}

double q_need(double need_gap, double std_dev, double win_prob, double c4) {
    return c4 * (need_gap - 5.0 * std_dev * (1.0 - win_prob));
}

AttractionFactors attraction_factor(const DerivedTrial& t, double f_gamble,
                                    double f_sure, const AttractionParams& params) {
    double q_total = 0.0;
    if (params.mask.time_frame)
        q_total += q_time(t.trial.time_limit, params.c2) *
                   q_framing(t.std_dev, t.trial.framing_indicator(), params.c1);
    if (params.mask.memory) {
        const PreviousOutcome prev = t.trial.previous_outcome.value_or(PreviousOutcome::None);
        q_total += q_memory(t.std_dev, previous_indicator(prev), params.c3);
    }
    if (params.mask.need)
        q_total += q_need(t.need_gap, t.std_dev, t.trial.win_prob, params.c4);

    const double cos_delta = std::tanh(params.a * q_total);
    const double q = std::min(f_gamble, f_sure) * cos_delta;
    return {q, -q, cos_delta};
}

ProspectProbabilities prospect_probabilities(const DerivedTrial& t,
                                             const UtilityParams& up,
                                             const AttractionParams& ap) {
    const double u_gamble = option_utility_gain(t.trial.initial_amount, t.trial.win_prob, 0.0, up);
    const double u_sure = option_utility_gain(t.trial.sure_amount, 1.0, 0.0, up);
    const UtilityFactors f = utility_factors(u_gamble, u_sure, up);
    const AttractionFactors q = attraction_factor(t, f.f_gamble, f.f_sure, ap);

    ProspectProbabilities out;
    out.f_gamble = f.f_gamble;
    out.f_sure = f.f_sure;
    out.q_gamble = q.q_gamble;
    out.q_sure = q.q_sure;
    out.cos_delta = q.cos_delta;
    out.q_bound = std::min(f.f_gamble, f.f_sure);
    out.p_gamble = f.f_gamble + q.q_gamble;
    out.p_sure = f.f_sure + q.q_sure;
    return out;
}

double cpt_baseline_probability(const DerivedTrial& t, const UtilityParams& up) {
    const double reference = t.trial.win_prob * t.trial.initial_amount;
    const double w = prelec_weight(t.trial.win_prob, up);
    const double u_gamble = w * value_fn(t.trial.initial_amount - reference, up) +
                            (1.0 - w) * value_fn(0.0 - reference, up);
    const double u_sure = value_fn(t.trial.sure_amount - reference, up);
    return utility_factors(u_gamble, u_sure, up).f_gamble;
}

} // namespace qdt
