#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "qdt/errors.hpp"
#include "qdt/trials.hpp"
#include "test_support.hpp"

using namespace qdt;

namespace {

std::string header_line() { return std::string(kTrialCsvHeader) + "\n"; }

// subject,block,index,amount,p,framing,tl,need,score,sure,prev,catch,response
std::string row(const std::string& fields) { return fields + "\n"; }

} // namespace

TEST_CASE("load accepts a fair row") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,0,40,none,0,gamble");
    const LoadResult r = load_trials_from_string(csv);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.trials[0].initial_amount == 100.0);
    CHECK(r.trials[0].win_prob == 0.4);
    CHECK(r.trials[0].sure_amount == 40.0);
    CHECK(r.trials[0].framing == Framing::Gain);
    CHECK(r.trials[0].response == Response::Gamble);
    CHECK(r.dropped_subjects.empty());
}

TEST_CASE("load skips the fairness check on catch trials") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.7,gain,1,2500,0,40,none,1,sure");
    const LoadResult r = load_trials_from_string(csv);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.trials[0].is_catch);
}

TEST_CASE("load rejects boundary and malformed input") {
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,100,0.0,gain,1,0,0,0,none,0,sure")),
                    InvariantViolation);  // win_prob at 0
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,100,1.0,gain,1,0,0,100,none,0,sure")),
                    InvariantViolation);  // win_prob at 1
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,100,0.4,gain,1,0,0,41,none,0,sure")),
                    InvariantViolation);  // unfair non-catch
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,100,0.4,gain,1,0,0,40,none,0")),
                    MalformedRow);  // 12 columns
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,abc,0.4,gain,1,0,0,40,none,0,sure")),
                    MalformedRow);  // bad number
    CHECK_THROWS_AS(load_trials_from_string(header_line() +
                        row("s1,1,1,100,0.4,up,1,0,0,40,none,0,sure")),
                    MalformedRow);  // bad framing
    CHECK_THROWS_AS(load_trials_from_string(""), EmptyFile);
    CHECK_THROWS_AS(load_trials_from_string(header_line()), EmptyFile);
    CHECK_THROWS_AS(load_trials_from_string("a,b\n1,2\n"), MalformedRow);  // wrong header
}

TEST_CASE("fairness tolerance is 1e-6 absolute") {
    const std::string ok = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40.0000009,none,0,sure");
    CHECK(load_trials_from_string(ok).trials.size() == 1);
    const std::string bad = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40.000002,none,0,sure");
    CHECK_THROWS_AS(load_trials_from_string(bad), InvariantViolation);
}

TEST_CASE("subjects with missing responses are dropped whole and reported") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,none,0,gamble") +
        row("s2,1,1,100,0.4,gain,1,0,0,40,none,0,") +
        row("s2,1,2,50,0.6,loss,1,0,,30,,0,sure");
    const LoadResult r = load_trials_from_string(csv);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.trials[0].subject_id == "s1");
    REQUIRE(r.dropped_subjects.size() == 1);
    CHECK(r.dropped_subjects[0] == "s2");
}

TEST_CASE("load groups and orders rows") {
    const std::string csv = header_line() +
        row("s2,1,1,100,0.4,gain,1,0,0,40,none,0,sure") +
        row("s1,2,1,100,0.4,gain,1,0,0,40,none,0,sure") +
        row("s1,1,2,50,0.6,loss,3,0,40,30,sure,0,gamble") +
        row("s1,1,1,100,0.4,gain,3,0,0,40,none,0,sure");
    const LoadResult r = load_trials_from_string(csv);
    REQUIRE(r.trials.size() == 4);
    CHECK(r.trials[0].subject_id == "s1");
    CHECK(r.trials[0].block_id == 1);
    CHECK(r.trials[0].trial_index == 1);
    CHECK(r.trials[1].trial_index == 2);
    CHECK(r.trials[2].block_id == 2);
    CHECK(r.trials[3].subject_id == "s2");
}

TEST_CASE("ingestion checks score consistency when both columns are present") {
    // s1 chose sure (gain 40): next score must be 40
    const std::string good = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,none,0,sure") +
        row("s1,1,2,50,0.6,loss,1,0,40,30,sure,0,gamble");
    CHECK(load_trials_from_string(good).trials.size() == 2);

    const std::string bad = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,none,0,sure") +
        row("s1,1,2,50,0.6,loss,1,0,55,30,sure,0,gamble");
    CHECK_THROWS_AS(load_trials_from_string(bad), InvariantViolation);

    const std::string contradiction = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,none,0,sure") +
        row("s1,1,2,50,0.6,loss,1,0,40,30,won,0,gamble");
    CHECK_THROWS_AS(load_trials_from_string(contradiction), InvariantViolation);
}

TEST_CASE("derive computes std and need gap") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,0,40,none,0,gamble");
    const auto derived = derive_features(load_trials_from_string(csv).trials);
    REQUIRE(derived.size() == 1);
    CHECK(derived[0].std_dev == doctest::Approx(48.98979485566356).epsilon(1e-12));
    CHECK(derived[0].need_gap == 2500.0);
}

TEST_CASE("std oracle cases") {
    auto one = qdt_test::make_trial(2.0, 0.5, Framing::Gain, 1.0, 0.0, 0.0,
                                    PreviousOutcome::None, Response::Sure);
    CHECK(one.std_dev == doctest::Approx(1.0).epsilon(1e-12));  // sqrt(0.25) * 2
    auto at_target = qdt_test::make_trial(100.0, 0.4, Framing::Gain, 1.0, 2500.0, 2500.0,
                                          PreviousOutcome::None, Response::Sure);
    CHECK(at_target.need_gap == 0.0);
}

TEST_CASE("std is symmetric in p vs 1-p") {
    auto g = make_engine(42);
    for (int i = 0; i < 200; ++i) {
        const double s = qdt_test::uniform(g, 1.0, 120.0);
        const double p = qdt_test::uniform(g, 0.01, 0.99);
        const double a = s * std::sqrt(p * (1.0 - p));
        const double b = s * std::sqrt((1.0 - p) * p);
        CHECK(a == doctest::Approx(b).epsilon(1e-15));
        CHECK(a > 0.0);
    }
}

TEST_CASE("derive rejects a score delta that matches neither outcome") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,,0,gamble") +
        row("s1,1,2,100,0.4,loss,1,0,55,40,,0,gamble");  // +55 is neither 0 nor 100
    CHECK_THROWS_AS(derive_features(load_trials_from_string(csv).trials), InvariantViolation);
}

TEST_CASE("derive recomputes previous outcome from score deltas") {
    // gamble won (+100), gamble lost (+0), sure (+30)
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,0,0,40,,0,gamble") +
        row("s1,1,2,100,0.4,loss,1,0,100,40,,0,gamble") +
        row("s1,1,3,50,0.6,gain,1,0,100,30,,0,sure") +
        row("s1,1,4,50,0.6,gain,1,0,130,30,,0,sure");
    const auto derived = derive_features(load_trials_from_string(csv).trials);
    REQUIRE(derived.size() == 4);
    CHECK(*derived[0].trial.previous_outcome == PreviousOutcome::None);
    CHECK(*derived[1].trial.previous_outcome == PreviousOutcome::Won);
    CHECK(*derived[2].trial.previous_outcome == PreviousOutcome::Lost);
    CHECK(*derived[3].trial.previous_outcome == PreviousOutcome::Sure);
}

TEST_CASE("derive recomputes the running score when absent") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,,40,,0,gamble") +
        row("s1,1,2,100,0.4,loss,1,2500,,40,won,0,sure") +
        row("s1,1,3,50,0.6,gain,1,2500,,30,sure,0,gamble");
    const auto derived = derive_features(load_trials_from_string(csv).trials);
    REQUIRE(derived.size() == 3);
    CHECK(*derived[0].trial.current_score == 0.0);
    CHECK(*derived[1].trial.current_score == 100.0);   // won the first gamble
    CHECK(*derived[2].trial.current_score == 140.0);   // then took sure 40
    CHECK(derived[2].need_gap == doctest::Approx(2360.0));
}

TEST_CASE("derive is idempotent") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,,40,,0,gamble") +
        row("s1,1,2,100,0.4,loss,1,2500,,40,won,0,sure") +
        row("s1,2,1,50,0.6,gain,3,2500,,30,,0,gamble");
    const auto once = derive_features(load_trials_from_string(csv).trials);
    std::vector<GameTrial> resolved;
    for (const auto& d : once) resolved.push_back(d.trial);
    const auto twice = derive_features(resolved);
    REQUIRE(once.size() == twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
        CHECK(*once[i].trial.previous_outcome == *twice[i].trial.previous_outcome);
        CHECK(*once[i].trial.current_score == *twice[i].trial.current_score);
        CHECK(once[i].std_dev == twice[i].std_dev);
        CHECK(once[i].need_gap == twice[i].need_gap);
    }
}

TEST_CASE("derive rejects non-monotone trial indices") {
    std::vector<GameTrial> trials;
    auto a = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                  PreviousOutcome::None, Response::Sure).trial;
    auto b = a;
    b.trial_index = 1;  // duplicate of a's index
    b.previous_outcome = PreviousOutcome::Sure;
    b.current_score = 40.0;
    trials = {a, b};
    CHECK_THROWS_AS(derive_features(trials), OrderingError);
}

TEST_CASE("derive rejects non-contiguous subjects") {
    auto a = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                  PreviousOutcome::None, Response::Sure, false, -1, "s1").trial;
    auto b = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                  PreviousOutcome::None, Response::Sure, false, -1, "s2").trial;
    std::vector<GameTrial> trials = {a, b, a};
    CHECK_THROWS_AS(derive_features(trials), OrderingError);
}

TEST_CASE("kfold splits 960 trials into six folds of 160") {
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 960; ++i) {
        auto t = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                      PreviousOutcome::None, Response::Sure);
        t.trial.trial_index = i + 1;
        trials.push_back(t);
    }
    const FoldPlan plan = kfold_split(trials, 6, 17);
    std::map<int, int> sizes;
    for (int f : plan.assignments) sizes[f] += 1;
    REQUIRE(sizes.size() == 6);
    for (const auto& [fold, n] : sizes) CHECK(n == 160);
}

TEST_CASE("kfold pigeonholes 7 trials over 6 folds") {
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 7; ++i) {
        auto t = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                      PreviousOutcome::None, Response::Sure);
        t.trial.trial_index = i + 1;
        trials.push_back(t);
    }
    const FoldPlan plan = kfold_split(trials, 6, 5);
    std::multiset<int> sizes;
    std::map<int, int> count;
    for (int f : plan.assignments) count[f] += 1;
    for (const auto& [fold, n] : count) sizes.insert(n);
    CHECK(sizes == std::multiset<int>{1, 1, 1, 1, 1, 2});
}

TEST_CASE("kfold is deterministic and a partition") {
    std::vector<DerivedTrial> trials;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < 20; ++i) {
            auto t = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                          PreviousOutcome::None, Response::Sure,
                                          false, -1, "subj" + std::to_string(s));
            t.trial.trial_index = i + 1;
            trials.push_back(t);
        }
    const FoldPlan a = kfold_split(trials, 4, 99);
    const FoldPlan b = kfold_split(trials, 4, 99);
    CHECK(a.assignments == b.assignments);
    const FoldPlan c = kfold_split(trials, 4, 100);
    CHECK(a.assignments != c.assignments);

    // every trial is in exactly one fold; per-subject sizes differ by <= 1
    for (int f : a.assignments) {
        CHECK(f >= 0);
        CHECK(f < 4);
    }
    std::map<std::string, std::map<int, int>> per_subject;
    for (std::size_t i = 0; i < trials.size(); ++i)
        per_subject[trials[i].trial.subject_id][a.assignments[i]] += 1;
    for (const auto& [subject, folds] : per_subject) {
        REQUIRE(folds.size() == 4);
        for (const auto& [fold, n] : folds) CHECK(n == 5);
    }
}

TEST_CASE("kfold rejects too few trials") {
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 5; ++i) {
        auto t = qdt_test::make_trial(100, 0.4, Framing::Gain, 1, 0, 0,
                                      PreviousOutcome::None, Response::Sure);
        t.trial.trial_index = i + 1;
        trials.push_back(t);
    }
    CHECK_THROWS_AS(kfold_split(trials, 6, 1), TooFewTrials);
    CHECK_THROWS_AS(kfold_split(trials, 1, 1), DomainError);
}

TEST_CASE("trial CSV round-trips") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,0,40,none,0,gamble") +
        row("s1,1,2,50,0.6,loss,3,2500,100,30,won,0,sure") +
        row("s1,1,3,100,0.7,gain,1,2500,130,40,sure,1,gamble");
    const LoadResult r = load_trials_from_string(csv);
    CHECK(trials_to_csv(r.trials) == csv);
}

TEST_CASE("feature matrix has 16 documented columns and is reproducible") {
    const std::string csv = header_line() +
        row("s1,1,1,100,0.4,gain,1,2500,0,40,none,0,gamble") +
        row("s1,1,2,50,0.6,loss,3,2500,100,30,won,0,sure");
    const auto derived = derive_features(load_trials_from_string(csv).trials);
    const std::string features = feature_csv(derived);

    const std::string header = features.substr(0, features.find('\n'));
    CHECK(header == kFeatureCsvHeader);
    CHECK(std::count(header.begin(), header.end(), ',') == 15);  // 16 columns

    const std::string again = feature_csv(derive_features(load_trials_from_string(csv).trials));
    CHECK(features == again);

    // one row per trial + header
    CHECK(std::count(features.begin(), features.end(), '\n') == 3);
}
