#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "qdt/errors.hpp"
#include "qdt/evalsim.hpp"
#include "qdt/trials.hpp"
#include "test_support.hpp"

using namespace qdt;
using qdt_test::make_trial;

TEST_CASE("choice prediction with the documented tie-break") {
    CHECK(predict_choice(0.8) == Choice::Gamble);
    CHECK(predict_choice(0.5) == Choice::Sure);
    CHECK(predict_choice(0.4999) == Choice::Sure);
    ProspectProbabilities pp;
    pp.p_gamble = 0.51;
    CHECK(predict_choice(pp) == Choice::Gamble);
}

TEST_CASE("accuracy counting and errors") {
    using C = Choice;
    CHECK(accuracy({C::Gamble, C::Sure, C::Gamble}, {C::Gamble, C::Sure, C::Gamble}) == 1.0);
    CHECK(accuracy({C::Gamble, C::Sure}, {C::Sure, C::Gamble}) == 0.0);
    CHECK(accuracy({C::Gamble, C::Gamble, C::Sure, C::Sure},
                   {C::Gamble, C::Gamble, C::Sure, C::Gamble}) == doctest::Approx(0.75));
    CHECK_THROWS_AS(accuracy({C::Gamble}, {}), LengthMismatch);
    CHECK_THROWS_AS(accuracy({}, {}), EmptyInput);
}

TEST_CASE("constant predictors complement to one") {
    auto g = make_engine(601);
    std::vector<Choice> responses;
    for (int i = 0; i < 501; ++i)
        responses.push_back(uniform01(g) < 0.37 ? Choice::Gamble : Choice::Sure);
    const std::vector<Choice> all_sure(responses.size(), Choice::Sure);
    const std::vector<Choice> all_gamble(responses.size(), Choice::Gamble);
    CHECK(accuracy(all_sure, responses) + accuracy(all_gamble, responses) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("calibration bins partition trials") {
    auto g = make_engine(602);
    std::vector<double> p;
    std::vector<Choice> resp;
    for (int i = 0; i < 1000; ++i) {
        p.push_back(uniform01(g));
        resp.push_back(uniform01(g) < 0.5 ? Choice::Gamble : Choice::Sure);
    }
    p.push_back(1.0);  // closed upper edge of the last bin
    resp.push_back(Choice::Gamble);
    const CalibrationReport report = calibration_bins(p, resp);
    std::size_t total = 0;
    for (const auto& bin : report.bins) total += bin.n_trials;
    CHECK(total == p.size());
    for (std::size_t b = 0; b < 10; ++b) {
        CHECK(report.bins[b].lower == doctest::Approx(0.1 * static_cast<double>(b)));
        CHECK(report.bins[b].upper == doctest::Approx(0.1 * static_cast<double>(b + 1)));
    }
}

TEST_CASE("single-bin miscalibration is flagged") {
    std::vector<double> p(100, 0.55);
    std::vector<Choice> resp;
    for (int i = 0; i < 100; ++i) resp.push_back(i < 40 ? Choice::Gamble : Choice::Sure);
    const CalibrationReport report = calibration_bins(p, resp);
    CHECK(report.bins[5].n_trials == 100);
    CHECK(report.bins[5].empirical_gamble_rate == doctest::Approx(0.4));
    CHECK(report.in_band_count == 0);
}

TEST_CASE("empty input leaves all bins empty") {
    const CalibrationReport report = calibration_bins({}, {});
    for (const auto& bin : report.bins) CHECK(bin.n_trials == 0);
    CHECK(report.in_band_count == 0);
}

TEST_CASE("well-calibrated samples land in band") {
    // 500 Bernoulli(midpoint) draws per bin: within-band probability per bin
    // exceeds 95%, and this seed passes everywhere.
    auto g = make_engine(603);
    std::vector<double> p;
    std::vector<Choice> resp;
    for (int b = 0; b < 10; ++b) {
        const double mid = 0.05 + 0.1 * b;
        for (int i = 0; i < 500; ++i) {
            p.push_back(mid);
            resp.push_back(uniform01(g) < mid ? Choice::Gamble : Choice::Sure);
        }
    }
    const CalibrationReport report = calibration_bins(p, resp);
    for (const auto& bin : report.bins) CHECK(bin.n_trials == 500);
    CHECK(report.in_band_count == 10);
}

TEST_CASE("factor histograms respect the attraction bound") {
    auto g = make_engine(604);
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 400; ++i) trials.push_back(qdt_test::random_trial(g));
    const UtilityParams up = qdt_test::random_utility(g);
    const AttractionParams ap = qdt_test::random_attraction(g);
    const FactorDistributions dist = factor_distributions(trials, up, ap);
    CHECK(dist.n == trials.size());
    std::size_t f_total = std::accumulate(dist.f_counts.begin(), dist.f_counts.end(), 0ull);
    std::size_t q_total = std::accumulate(dist.q_counts.begin(), dist.q_counts.end(), 0ull);
    CHECK(f_total == trials.size());
    CHECK(q_total == trials.size());
}

TEST_CASE("attraction off collapses q to a point mass at zero") {
    auto g = make_engine(605);
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 100; ++i) trials.push_back(qdt_test::random_trial(g));
    UtilityParams up = qdt_test::random_utility(g);
    AttractionParams ap = qdt_test::random_attraction(g);
    ap.a = 0.0;
    const FactorDistributions dist = factor_distributions(trials, up, ap);
    CHECK(dist.q_counts[10] == trials.size());  // the [0, 0.05) bin
}

TEST_CASE("symmetric frame design gives a symmetric q histogram") {
    // mirrored gain/loss pairs, memory and need off: q flips sign exactly
    std::vector<DerivedTrial> trials;
    auto g = make_engine(606);
    for (int i = 0; i < 300; ++i) {
        const double amount = qdt_test::uniform(g, 20.0, 100.0);
        const double p = qdt_test::uniform(g, 0.2, 0.8);
        const double tl = uniform01(g) < 0.5 ? 1.0 : 3.0;
        trials.push_back(make_trial(amount, p, Framing::Gain, tl, 0, 0,
                                    PreviousOutcome::None, Response::Sure));
        trials.push_back(make_trial(amount, p, Framing::Loss, tl, 0, 0,
                                    PreviousOutcome::None, Response::Sure));
    }
    UtilityParams up;
    up.phi = 0.05;
    AttractionParams ap;
    ap.mask = {true, false, false};
    ap.c1 = 0.8;
    ap.c2 = 0.1;
    ap.a = 0.05;
    const FactorDistributions dist = factor_distributions(trials, up, ap);
    for (std::size_t b = 0; b < 20; ++b)
        CHECK(dist.q_counts[b] == dist.q_counts[19 - b]);
}

TEST_CASE("simulation determinism and degenerate probabilities") {
    auto g = make_engine(607);
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 60; ++i) {
        DerivedTrial t = qdt_test::random_trial(g);
        t.trial.response = Response::Gamble;
        trials.push_back(t);
    }
    const std::vector<double> certain(trials.size(), 1.0);
    const SimulationReport sure_thing = simulate_responses(trials, certain, 25, 9);
    for (double s : sure_thing.similarity) CHECK(s == 1.0);
    CHECK(sure_thing.histogram[39] == 25);

    const std::vector<double> coin(trials.size(), 0.5);
    const SimulationReport a = simulate_responses(trials, coin, 200, 10);
    const SimulationReport b = simulate_responses(trials, coin, 200, 10);
    CHECK(a.similarity == b.similarity);
    CHECK(a.histogram == b.histogram);
    const SimulationReport c = simulate_responses(trials, coin, 200, 11);
    CHECK(a.similarity != c.similarity);

    // coin-flip similarity concentrates near 0.5 (3 sigma of Binomial(60, .5))
    const double sigma = std::sqrt(0.25 / 60.0);
    double mean = 0.0;
    for (double s : a.similarity) mean += s;
    mean /= static_cast<double>(a.similarity.size());
    CHECK(std::fabs(mean - 0.5) < 3.0 * sigma);
}

TEST_CASE("simulation histogram counts equal sims times subjects") {
    auto g = make_engine(608);
    std::vector<DerivedTrial> trials;
    for (int s = 0; s < 3; ++s)
        for (int i = 0; i < 30; ++i) {
            DerivedTrial t = qdt_test::random_trial(g);
            t.trial.subject_id = "subj" + std::to_string(s);
            t.trial.response = uniform01(g) < 0.5 ? Response::Gamble : Response::Sure;
            trials.push_back(t);
        }
    std::vector<double> p;
    for (std::size_t i = 0; i < trials.size(); ++i) p.push_back(uniform01(g));
    const SimulationReport report = simulate_responses(trials, p, 40, 3);
    CHECK(report.subjects.size() == 3);
    CHECK(report.similarity.size() == 120);
    std::size_t total = std::accumulate(report.histogram.begin(), report.histogram.end(), 0ull);
    CHECK(total == 120);
}

TEST_CASE("synthetic cohorts have the documented shapes") {
    UtilityParams up;
    up.phi = 0.1;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    ap.a = 0.05;
    ap.c1 = 0.5;
    ap.c3 = 0.02;
    ap.c4 = 0.003;

    const auto d1 = generate_synthetic_subject(ExperimentDescriptor::dataset1(), up, ap, "a", 1);
    CHECK(d1.trials.size() == 960);
    const auto d2 = generate_synthetic_subject(ExperimentDescriptor::dataset2(), up, ap, "b", 1);
    CHECK(d2.trials.size() == 624);

    // generated data is loadable and internally consistent
    const LoadResult loaded = load_trials_from_string(trials_to_csv(d1.trials));
    CHECK(loaded.trials.size() == 960);
    CHECK(loaded.dropped_subjects.empty());
    const auto derived = derive_features(loaded.trials);
    CHECK(derived.size() == 960);
    std::size_t n_catch = 0;
    for (const auto& d : derived) n_catch += d.trial.is_catch;
    CHECK(n_catch == 8 * 2 * 12);  // 8 catch templates, 2 presentations, 12 blocks
}

TEST_CASE("an indifferent agent gambles at the coin-flip rate") {
    UtilityParams up;
    up.phi = 0.0;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    const auto subject =
        generate_synthetic_subject(ExperimentDescriptor::dataset1(), up, ap, "indiff", 21);
    std::size_t gambles = 0;
    for (const auto& t : subject.trials) gambles += t.response == Response::Gamble;
    const double rate = static_cast<double>(gambles) / 960.0;
    CHECK(std::fabs(rate - 0.5) < 3.0 * std::sqrt(0.25 / 960.0));
}

TEST_CASE("descriptor validation") {
    ExperimentDescriptor bad = ExperimentDescriptor::dataset1();
    bad.amounts.clear();
    UtilityParams up;
    AttractionParams ap;
    CHECK_THROWS_AS(generate_synthetic_subject(bad, up, ap, "x", 1), InvalidDescriptor);
    bad = ExperimentDescriptor::dataset1();
    bad.win_probs = {0.0, 0.5};
    CHECK_THROWS_AS(generate_synthetic_subject(bad, up, ap, "x", 1), InvalidDescriptor);
}

TEST_CASE("catch ablation requires catch trials and reports both arms") {
    // no catch trials -> error
    ExperimentDescriptor no_catch = ExperimentDescriptor::dataset2();
    no_catch.n_catch = 0;
    UtilityParams up;
    up.phi = 0.1;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    ap.a = 0.05;
    ap.c3 = 0.05;
    const auto clean = generate_synthetic_subject(no_catch, up, ap, "clean", 5);
    const auto clean_trials = derive_features(clean.trials);
    const FoldPlan clean_plan = kfold_split(clean_trials, 2, 5);
    CHECK_THROWS_AS(catch_ablation(clean_trials, clean_plan, ModelKind::Cpt,
                                   ComponentMask::none(), {}),
                    NoCatchTrials);
}

TEST_CASE("catch trials in training help on strong-attraction synthetic agents") {
    // small cohort, CPT-vs-QDT free: fit the memory+need QDT on 2 folds
    ExperimentDescriptor desc;
    desc.amounts = {25, 100};
    desc.win_probs = {0.3, 0.7};
    desc.time_limits = {1, 3};
    desc.need_levels = {0, 800};
    desc.presentations = 2;
    desc.blocks_per_combo = 1;
    desc.n_catch = 8;

    double with_catch = 0.0, without_catch = 0.0;
    const int n_subjects = 6;
    for (int s = 0; s < n_subjects; ++s) {
        UtilityParams up;
        up.alpha = 0.9;
        up.delta = 1.0;
        up.gamma = 0.8;
        up.phi = 0.1;
        AttractionParams ap;
        ap.mask = {false, true, true};
        ap.c3 = s % 2 ? 0.08 : -0.08;
        ap.c4 = s % 2 ? 0.006 : -0.006;
        ap.a = 0.15;
        const auto subject = generate_synthetic_subject(
            desc, up, ap, "ablate" + std::to_string(s), 400 + static_cast<std::uint64_t>(s));
        const auto trials = derive_features(subject.trials);
        const FoldPlan plan = kfold_split(trials, 2, 19);
        const AblationResult r =
            catch_ablation(trials, plan, ModelKind::Qdt, ap.mask, {});
        CHECK(r.n_catch_trials == 8 * 2 * 4ull);
        CHECK(r.n_fair_test_trials == trials.size() - r.n_catch_trials);
        with_catch += r.accuracy_with_catch;
        without_catch += r.accuracy_without_catch;
    }
    with_catch /= n_subjects;
    without_catch /= n_subjects;
    CHECK(with_catch >= without_catch - 0.01);
}

TEST_CASE("report CSV renderings") {
    std::vector<double> p = {0.55, 0.55};
    std::vector<Choice> resp = {Choice::Gamble, Choice::Sure};
    const std::string cal = calibration_csv(calibration_bins(p, resp));
    CHECK(cal.rfind("bin_lower,bin_upper,midpoint,n,empirical_rate\n", 0) == 0);
    CHECK(std::count(cal.begin(), cal.end(), '\n') == 11);

    auto g = make_engine(609);
    std::vector<DerivedTrial> trials;
    for (int i = 0; i < 20; ++i) {
        DerivedTrial t = qdt_test::random_trial(g);
        t.trial.response = Response::Sure;
        trials.push_back(t);
    }
    const SimulationReport sim = simulate_responses(trials, std::vector<double>(20, 0.5), 4, 2);
    const std::string sim_csv = similarity_hist_csv(sim);
    CHECK(sim_csv.rfind("bin_lower,count\n", 0) == 0);
    CHECK(std::count(sim_csv.begin(), sim_csv.end(), '\n') == 41);

    const std::string fh = factor_hist_csv(factor_distributions(
        trials, qdt_test::random_utility(g), qdt_test::random_attraction(g)));
    CHECK(fh.rfind("factor,bin_lower,count\n", 0) == 0);
    CHECK(std::count(fh.begin(), fh.end(), '\n') == 41);
}
