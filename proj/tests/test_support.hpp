#pragma once

// Shared builders and random generators for the test suites. All draws go
// through qdt/rng.hpp so expected values frozen here reproduce anywhere.

#include <cmath>
#include <string>
#include <vector>

#include "qdt/estimator.hpp"
#include "qdt/evalsim.hpp"
#include "qdt/model.hpp"
#include "qdt/rng.hpp"
#include "qdt/trials.hpp"

namespace qdt_test {

using namespace qdt;

inline DerivedTrial make_trial(double amount, double win_prob, Framing framing,
                               double time_limit, double need_level, double score,
                               PreviousOutcome prev, Response response,
                               bool is_catch = false, double sure_amount = -1.0,
                               const std::string& subject = "s1") {
    GameTrial t;
    t.subject_id = subject;
    t.block_id = 1;
    t.trial_index = 1;
    t.initial_amount = amount;
    t.win_prob = win_prob;
    t.framing = framing;
    t.time_limit = time_limit;
    t.need_level = need_level;
    t.current_score = score;
    t.sure_amount = sure_amount >= 0.0 ? sure_amount : win_prob * amount;
    t.previous_outcome = prev;
    t.is_catch = is_catch;
    t.response = response;

    DerivedTrial d;
    d.trial = t;
    d.std_dev = amount * std::sqrt(win_prob * (1.0 - win_prob));
    d.need_gap = need_level - score;
    return d;
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

inline DerivedTrial random_trial(std::mt19937_64& g) {
    const double amount = uniform(g, 1.0, 150.0);
    const double p = uniform(g, 0.02, 0.98);
    const Framing framing = uniform01(g) < 0.5 ? Framing::Gain : Framing::Loss;
    const double tl = uniform01(g) < 0.5 ? 1.0 : 3.0;
    const double need = uniform(g, 0.0, 4000.0);
    const double score = uniform(g, 0.0, 4000.0);
    const PreviousOutcome prev = static_cast<PreviousOutcome>(uniform_below(g, 4));
    const Response resp = uniform01(g) < 0.5 ? Response::Gamble : Response::Sure;
    const bool is_catch = uniform01(g) < 0.2;
    const double sure = is_catch ? uniform(g, 0.0, 1.2 * amount) : p * amount;
    return make_trial(amount, p, framing, tl, need, score, prev, resp, is_catch, sure);
}

inline UtilityParams random_utility(std::mt19937_64& g, bool wide = false) {
    UtilityParams up;
    up.alpha = uniform(g, 0.2, wide ? 2.0 : 1.2);
    up.delta = uniform(g, 0.2, 2.0);
    up.gamma = uniform(g, 0.2, 2.0);
    up.phi = wide ? std::exp(uniform(g, std::log(1e-3), std::log(1e3))) : uniform(g, 0.0, 2.0);
    up.lambda = uniform(g, 0.3, 4.0);
    return up;
}

inline AttractionParams random_attraction(std::mt19937_64& g,
                                          ComponentMask mask = ComponentMask::all(),
                                          bool wide = false) {
    AttractionParams ap;
    ap.mask = mask;
    ap.c1 = uniform(g, 0.0, wide ? 3.0 : 1.5);
    ap.c2 = uniform(g, 0.0, 2.0);
    ap.c3 = uniform(g, -1.0, 1.0);
    ap.c4 = uniform(g, -1.0, 1.0);
    ap.a = wide ? std::exp(uniform(g, std::log(1e-4), std::log(1e2))) : uniform(g, 0.0, 2.0);
    return ap;
}

} // namespace qdt_test
