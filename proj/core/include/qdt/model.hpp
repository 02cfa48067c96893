#pragma once

#include <string>
#include <vector>

#include "qdt/trials.hpp"

namespace qdt {

// Utility-side parameters. lambda enters only the CPT baseline; the
// QDT utility factor works in the gain domain where losses never occur.
struct UtilityParams {
    double alpha = 1.0;   // value curvature, > 0
    double delta = 1.0;   // weighting elevation, > 0
    double gamma = 1.0;   // weighting curvature, > 0
    double phi = 0.0;     // logit sensitivity, >= 0
    double lambda = 1.0;  // loss aversion, > 0 (CPT baseline only)

    bool valid() const {
        return alpha > 0.0 && delta > 0.0 && gamma > 0.0 && phi >= 0.0 && lambda > 0.0;
    }
};

struct ComponentMask {
    bool time_frame = false;  // q_time * q_framing, one maskable unit
    bool memory = false;
    bool need = false;

    static ComponentMask all() { return {true, true, true}; }
    static ComponentMask none() { return {}; }
    bool empty() const { return !time_frame && !memory && !need; }

    bool operator==(const ComponentMask&) const = default;
};

struct AttractionParams {
    double c1 = 0.0;  // framing risk exponent, >= 0
    double c2 = 0.0;  // time-decay rate, >= 0
    double c3 = 0.0;  // memory weight, sign free
    double c4 = 0.0;  // need weight, sign free
    double a = 0.0;   // tanh scale, >= 0
    ComponentMask mask;

    bool valid() const { return c1 >= 0.0 && c2 >= 0.0 && a >= 0.0; }
};

// f, q and P for the gamble/sure pair. Always satisfies
//   f_gamble + f_sure = 1,  q_gamble + q_sure = 0,  p_gamble + p_sure = 1,
//   |q_gamble| <= q_bound = min(f_gamble, f_sure) <= 0.5,  P in [0, 1].
// No probability clamping happens here; that is the likelihood layer's job.
struct ProspectProbabilities {
    double f_gamble = 0.5, f_sure = 0.5;
    double q_gamble = 0.0, q_sure = 0.0;
    double p_gamble = 0.5, p_sure = 0.5;
    double cos_delta = 0.0;  // tanh(a * q_total)
    double q_bound = 0.5;    // min(f_gamble, f_sure)
};

struct UtilityFactors {
    double f_gamble = 0.5, f_sure = 0.5;
};

struct AttractionFactors {
    double q_gamble = 0.0, q_sure = 0.0;
    double cos_delta = 0.0;
};

// Power value function: x^alpha for x >= 0, -lambda*(-x)^alpha for x < 0.
double value_fn(double x, const UtilityParams& params);

// Prelec-II weighting w(p) = exp(-delta * (-ln p)^gamma). Inputs below 1e-9
// are clamped to 1e-9; w(1) = 1.
double prelec_weight(double p, const UtilityParams& params);

// Gain-domain two-outcome utility w(p_hi)*v(amount_hi) + (1-w(p_hi))*v(amount_lo).
// The sure option is evaluated as (amount, 1, 0). Throws DomainError on
// negative amounts.
double option_utility_gain(double amount_hi, double p_hi, double amount_lo,
                           const UtilityParams& params);

// Logit choice rule f_gamble = 1 / (1 + exp(phi * (u_sure - u_gamble))),
// overflow-safe for any finite inputs.
UtilityFactors utility_factors(double u_gamble, double u_sure, const UtilityParams& params);

// Attraction components, each evaluated for the gamble prospect.
double q_framing(double std_dev, double framing_indicator, double c1);  // 0^0 == 1
double q_time(double time_limit, double c2);
double q_memory(double std_dev, double previous_indicator, double c3);
double q_need(double need_gap, double std_dev, double win_prob, double c4);

// q_total = q_time*q_framing + q_memory + q_need for the gamble (0 for the
// sure prospect); cos_delta = tanh(a * q_total);
// q_gamble = min(f_gamble, f_sure) * cos_delta and q_sure = -q_gamble.
// Masked components contribute exactly 0.
AttractionFactors attraction_factor(const DerivedTrial& trial, double f_gamble,
                                    double f_sure, const AttractionParams& params);

// Full QDT prospect probability P = f + q for both options.
ProspectProbabilities prospect_probabilities(const DerivedTrial& trial,
                                             const UtilityParams& up,
                                             const AttractionParams& ap);

// Logit-CPT baseline with the reference point at the gamble's expected
// value, so the gamble's two outcomes fall in different value-function
// domains. Returns the probability of choosing the gamble.
double cpt_baseline_probability(const DerivedTrial& trial, const UtilityParams& up);

} // namespace qdt
