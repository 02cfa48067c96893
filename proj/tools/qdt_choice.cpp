// Command-line front end: fit / predict / evaluate / simulate / ablate /
// synth / export-features over canonical trial CSVs.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdt/errors.hpp"
#include "qdt/estimator.hpp"
#include "qdt/evalsim.hpp"
#include "qdt/model.hpp"
#include "qdt/parallel.hpp"
#include "qdt/params_io.hpp"
#include "qdt/rng.hpp"
#include "qdt/trials.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitConfig = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

struct Options {
    std::string data;
    std::string out;
    std::string model = "qdt";
    std::string components = "time_frame,memory,need";
    int folds = 6;
    std::uint64_t seed = 42;
    double reg_weight = 1.0;
    int n_sims = 1000;
    bool no_catch_training = false;
    bool regularize_a = false;
    bool fair_only = false;
    std::string shape = "dataset1";
    int subjects = 1;
};

qdt::ModelKind parse_model(const std::string& s) {
    if (s == "qdt") return qdt::ModelKind::Qdt;
    if (s == "cpt") return qdt::ModelKind::Cpt;
    throw ConfigError("unknown model '" + s + "' (expected qdt or cpt)");
}

qdt::ComponentMask parse_components(const std::string& list) {
    qdt::ComponentMask mask;
    if (list.empty() || list == "none") return mask;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "time_frame") mask.time_frame = true;
        else if (item == "memory") mask.memory = true;
        else if (item == "need") mask.need = true;
        else throw ConfigError("unknown attraction component '" + item + "'");
    }
    return mask;
}

struct SubjectSlice {
    std::string id;
    std::size_t begin = 0, end = 0;
};

struct Dataset {
    std::vector<qdt::DerivedTrial> derived;
    std::vector<SubjectSlice> subjects;
    qdt::FoldPlan plan;
};

Dataset load_dataset(const Options& opt) {
    if (opt.data.empty()) throw ConfigError("--data is required");
    const qdt::LoadResult loaded = qdt::load_trials(opt.data);
    for (const std::string& s : loaded.dropped_subjects)
        std::cerr << "warning: dropped subject '" << s << "' (missing responses)\n";
    if (loaded.trials.empty()) throw qdt::EmptyFile("no complete subjects in " + opt.data);

    Dataset ds;
    ds.derived = qdt::derive_features(loaded.trials);
    std::size_t i = 0;
    while (i < ds.derived.size()) {
        std::size_t j = i + 1;
        while (j < ds.derived.size() &&
               ds.derived[j].trial.subject_id == ds.derived[i].trial.subject_id)
            ++j;
        ds.subjects.push_back({ds.derived[i].trial.subject_id, i, j});
        i = j;
    }
    ds.plan = qdt::kfold_split(ds.derived, opt.folds, opt.seed);
    return ds;
}

std::vector<qdt::DerivedTrial> slice_trials(const Dataset& ds, const SubjectSlice& s) {
    return {ds.derived.begin() + static_cast<long>(s.begin),
            ds.derived.begin() + static_cast<long>(s.end)};
}

qdt::FoldPlan slice_plan(const Dataset& ds, const SubjectSlice& s) {
    qdt::FoldPlan plan;
    plan.seed = ds.plan.seed;
    plan.n_folds = ds.plan.n_folds;
    plan.assignments.assign(ds.plan.assignments.begin() + static_cast<long>(s.begin),
                            ds.plan.assignments.begin() + static_cast<long>(s.end));
    return plan;
}

fs::path ensure_out_dir(const Options& opt) {
    if (opt.out.empty()) throw ConfigError("--out is required");
    fs::create_directories(opt.out);
    return opt.out;
}

// Per-subject fold parameters read back from <out>/params/<subject>.json.
struct SubjectParams {
    std::vector<qdt::ParsedFitResult> folds;  // indexed by fold id
};

SubjectParams read_subject_params(const fs::path& out_dir, const std::string& subject,
                                  int n_folds, qdt::ModelKind model) {
    const fs::path file = out_dir / "params" / (subject + ".json");
    if (!fs::exists(file))
        throw qdt::MissingParams("no fitted parameters for subject '" + subject + "' at " +
                                 file.string() + "; run fit first");
    auto parsed = qdt::fit_results_from_json(qdt::read_text_file(file));
    SubjectParams sp;
    sp.folds.resize(static_cast<std::size_t>(n_folds));
    std::vector<bool> seen(static_cast<std::size_t>(n_folds), false);
    for (const auto& entry : parsed) {
        if (entry.fold < 0 || entry.fold >= n_folds)
            throw qdt::MissingParams("fold id out of range in " + file.string());
        if (model == qdt::ModelKind::Qdt && !entry.has_attraction)
            throw qdt::MissingParams(file.string() + " holds a CPT fit; rerun fit --model qdt");
        if (model == qdt::ModelKind::Cpt && entry.has_attraction)
            throw qdt::MissingParams(file.string() + " holds a QDT fit; rerun fit --model cpt");
        sp.folds[static_cast<std::size_t>(entry.fold)] = entry;
        seen[static_cast<std::size_t>(entry.fold)] = true;
    }
    for (int f = 0; f < n_folds; ++f)
        if (!seen[static_cast<std::size_t>(f)])
            throw qdt::MissingParams("missing fold " + std::to_string(f) + " in " + file.string());
    return sp;
}

// Out-of-sample gamble probabilities: each trial is scored by the fit that
// held its fold out.
std::vector<double> out_of_sample_p(const Dataset& ds, const SubjectSlice& s,
                                    const SubjectParams& params, qdt::ModelKind model) {
    std::vector<double> p;
    p.reserve(s.end - s.begin);
    for (std::size_t i = s.begin; i < s.end; ++i) {
        const auto& fit = params.folds[static_cast<std::size_t>(ds.plan.assignments[i])];
        p.push_back(qdt::model_p_gamble(ds.derived[i], fit.utility, fit.attraction, model));
    }
    return p;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

int cmd_fit(const Options& opt) {
    const qdt::ModelKind model = parse_model(opt.model);
    const qdt::ComponentMask mask =
        model == qdt::ModelKind::Qdt ? parse_components(opt.components) : qdt::ComponentMask::none();
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);
    fs::create_directories(out_dir / "params");

    qdt::FitOptions fit_opts;
    fit_opts.reg_weight = opt.reg_weight;
    fit_opts.include_catch_in_training = !opt.no_catch_training;
    fit_opts.regularize_a = opt.regularize_a;

    std::vector<std::string> summaries(ds.subjects.size());
    qdt::parallel_for(ds.subjects.size(), [&](std::size_t s) {
        const SubjectSlice& slice = ds.subjects[s];
        const auto trials = slice_trials(ds, slice);
        const auto plan = slice_plan(ds, slice);
        const auto fits = qdt::fit_subject(trials, model, mask, plan, fit_opts);
        qdt::write_text_file_atomic(out_dir / "params" / (slice.id + ".json"),
                                    qdt::fit_results_to_json(fits, model));
        double obj = 0.0;
        int converged = 0;
        for (const auto& f : fits) {
            obj += f.objective;
            converged += f.converged;
        }
        std::ostringstream line;
        line << slice.id << ": folds=" << fits.size() << " mean_objective="
             << fmt(obj / static_cast<double>(fits.size())) << " converged=" << converged << "/"
             << fits.size();
        summaries[s] = line.str();
    });
    for (const std::string& line : summaries) std::cout << line << "\n";
    return kExitOk;
}

int cmd_evaluate(const Options& opt) {
    const qdt::ModelKind model = parse_model(opt.model);
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);

    std::string accuracy_csv = "subject,model,fold,accuracy\n";
    std::vector<double> all_p;
    std::vector<qdt::Choice> all_resp;
    std::vector<qdt::ProspectProbabilities> all_probs;
    // fold id -> {matches, total} pooled across subjects
    std::vector<std::size_t> fold_matches(static_cast<std::size_t>(opt.folds), 0);
    std::vector<std::size_t> fold_totals(static_cast<std::size_t>(opt.folds), 0);

    for (const SubjectSlice& slice : ds.subjects) {
        const SubjectParams params = read_subject_params(out_dir, slice.id, opt.folds, model);
        const std::vector<double> p = out_of_sample_p(ds, slice, params, model);

        std::vector<std::size_t> matches(static_cast<std::size_t>(opt.folds), 0);
        std::vector<std::size_t> totals(static_cast<std::size_t>(opt.folds), 0);
        for (std::size_t i = slice.begin; i < slice.end; ++i) {
            const qdt::DerivedTrial& trial = ds.derived[i];
            if (opt.fair_only && trial.trial.is_catch) continue;
            const std::size_t fold = static_cast<std::size_t>(ds.plan.assignments[i]);
            const double p_i = p[i - slice.begin];
            const bool match =
                qdt::predict_choice(p_i) == qdt::to_choice(trial.trial.response);
            matches[fold] += match;
            totals[fold] += 1;
            all_p.push_back(p_i);
            all_resp.push_back(qdt::to_choice(trial.trial.response));

            const auto& fit = params.folds[fold];
            if (model == qdt::ModelKind::Qdt) {
                all_probs.push_back(qdt::prospect_probabilities(trial, fit.utility, fit.attraction));
            } else {
                qdt::ProspectProbabilities probs;
                probs.f_gamble = p_i;
                probs.f_sure = 1.0 - p_i;
                probs.p_gamble = p_i;
                probs.p_sure = 1.0 - p_i;
                probs.q_bound = std::min(probs.f_gamble, probs.f_sure);
                all_probs.push_back(probs);
            }
        }
        for (int f = 0; f < opt.folds; ++f) {
            const auto uf = static_cast<std::size_t>(f);
            if (totals[uf] == 0) continue;
            const double acc =
                static_cast<double>(matches[uf]) / static_cast<double>(totals[uf]);
            accuracy_csv += slice.id + ',' + opt.model + ',' + std::to_string(f) + ',' +
                            fmt(acc) + '\n';
            fold_matches[uf] += matches[uf];
            fold_totals[uf] += totals[uf];
        }
    }

    const qdt::CalibrationReport calibration = qdt::calibration_bins(all_p, all_resp);
    const qdt::FactorDistributions factors = qdt::factor_distributions(all_probs);

    qdt::write_text_file_atomic(out_dir / "accuracy.csv", accuracy_csv);
    qdt::write_text_file_atomic(out_dir / "calibration.csv", qdt::calibration_csv(calibration));
    qdt::write_text_file_atomic(out_dir / "factor_hist.csv", qdt::factor_hist_csv(factors));

    std::vector<double> fold_acc;
    for (int f = 0; f < opt.folds; ++f) {
        const auto uf = static_cast<std::size_t>(f);
        if (fold_totals[uf] > 0)
            fold_acc.push_back(static_cast<double>(fold_matches[uf]) /
                               static_cast<double>(fold_totals[uf]));
    }
    std::cout << opt.model << " accuracy: " << fmt(mean(fold_acc)) << " +/- "
              << fmt(stddev(fold_acc)) << " over " << fold_acc.size() << " folds; calibration bins in band: "
              << calibration.in_band_count << "/10\n";
    return kExitOk;
}

int cmd_predict(const Options& opt) {
    const qdt::ModelKind model = parse_model(opt.model);
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);

    std::string csv = "subject,block_id,trial_index,fold,p_gamble,prediction,response\n";
    for (const SubjectSlice& slice : ds.subjects) {
        const SubjectParams params = read_subject_params(out_dir, slice.id, opt.folds, model);
        const std::vector<double> p = out_of_sample_p(ds, slice, params, model);
        for (std::size_t i = slice.begin; i < slice.end; ++i) {
            const qdt::GameTrial& t = ds.derived[i].trial;
            const double p_i = p[i - slice.begin];
            csv += t.subject_id + ',' + std::to_string(t.block_id) + ',' +
                   std::to_string(t.trial_index) + ',' +
                   std::to_string(ds.plan.assignments[i]) + ',' + fmt(p_i) + ',' +
                   (qdt::predict_choice(p_i) == qdt::Choice::Gamble ? "gamble" : "sure");
            csv += ',';
            csv += t.response == qdt::Response::Gamble ? "gamble" : "sure";
            csv += '\n';
        }
    }
    qdt::write_text_file_atomic(out_dir / "predictions.csv", csv);
    std::cout << "wrote " << (out_dir / "predictions.csv").string() << "\n";
    return kExitOk;
}

int cmd_simulate(const Options& opt) {
    const qdt::ModelKind model = parse_model(opt.model);
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);
    if (opt.n_sims < 1) throw ConfigError("--n-sims must be >= 1");

    std::vector<double> p(ds.derived.size(), 0.0);
    for (const SubjectSlice& slice : ds.subjects) {
        const SubjectParams params = read_subject_params(out_dir, slice.id, opt.folds, model);
        const std::vector<double> sp = out_of_sample_p(ds, slice, params, model);
        std::copy(sp.begin(), sp.end(), p.begin() + static_cast<long>(slice.begin));
    }

    const qdt::SimulationReport report =
        qdt::simulate_responses(ds.derived, p, opt.n_sims, opt.seed);
    qdt::write_text_file_atomic(out_dir / "similarity_hist.csv",
                                qdt::similarity_hist_csv(report));
    std::cout << opt.model << " mean similarity: " << fmt(mean(report.similarity)) << " over "
              << report.subjects.size() << " subjects x " << opt.n_sims << " simulations\n";
    return kExitOk;
}

int cmd_ablate(const Options& opt) {
    const qdt::ModelKind model = parse_model(opt.model);
    const qdt::ComponentMask mask =
        model == qdt::ModelKind::Qdt ? parse_components(opt.components) : qdt::ComponentMask::none();
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);

    qdt::FitOptions fit_opts;
    fit_opts.reg_weight = opt.reg_weight;

    struct Row {
        std::string subject;
        qdt::AblationResult result;
        bool has_catch = true;
    };
    std::vector<Row> rows(ds.subjects.size());
    qdt::parallel_for(ds.subjects.size(), [&](std::size_t s) {
        const SubjectSlice& slice = ds.subjects[s];
        rows[s].subject = slice.id;
        try {
            rows[s].result = qdt::catch_ablation(slice_trials(ds, slice), slice_plan(ds, slice),
                                                 model, mask, fit_opts);
        } catch (const qdt::NoCatchTrials&) {
            rows[s].has_catch = false;
        }
    });

    std::string csv =
        "subject,model,accuracy_with_catch,accuracy_without_catch,n_fair_test_trials,n_catch_trials\n";
    std::vector<double> with, without;
    for (const Row& row : rows) {
        if (!row.has_catch) {
            std::cerr << "warning: subject '" << row.subject << "' has no catch trials; skipped\n";
            continue;
        }
        csv += row.subject + ',' + opt.model + ',' + fmt(row.result.accuracy_with_catch) + ',' +
               fmt(row.result.accuracy_without_catch) + ',' +
               std::to_string(row.result.n_fair_test_trials) + ',' +
               std::to_string(row.result.n_catch_trials) + '\n';
        with.push_back(row.result.accuracy_with_catch);
        without.push_back(row.result.accuracy_without_catch);
    }
    if (with.empty()) throw qdt::NoCatchTrials("no subject has catch trials");

    qdt::write_text_file_atomic(out_dir / "ablation.csv", csv);
    std::cout << "catch-in-training accuracy " << fmt(mean(with)) << " vs excluded "
              << fmt(mean(without)) << " over " << with.size() << " subjects\n";
    return kExitOk;
}

int cmd_export_features(const Options& opt) {
    const Dataset ds = load_dataset(opt);
    const fs::path out_dir = ensure_out_dir(opt);
    qdt::write_text_file_atomic(out_dir / "features.csv", qdt::feature_csv(ds.derived));
    std::cout << "wrote " << ds.derived.size() << " feature rows\n";
    return kExitOk;
}

int cmd_synth(const Options& opt) {
    if (opt.subjects < 1) throw ConfigError("--subjects must be >= 1");
    qdt::ExperimentDescriptor desc;
    if (opt.shape == "dataset1") desc = qdt::ExperimentDescriptor::dataset1();
    else if (opt.shape == "dataset2") desc = qdt::ExperimentDescriptor::dataset2();
    else throw ConfigError("unknown shape '" + opt.shape + "' (expected dataset1 or dataset2)");
    const fs::path out_dir = ensure_out_dir(opt);

    std::vector<qdt::GameTrial> all;
    json truth;
    truth["seed"] = opt.seed;
    truth["shape"] = opt.shape;
    truth["subjects"] = json::object();

    for (int s = 0; s < opt.subjects; ++s) {
        char name[32];
        std::snprintf(name, sizeof(name), "synth_%03d", s + 1);
        auto engine = qdt::make_engine(qdt::combine_seed(opt.seed, qdt::fnv1a64(name), 0xA11CE));
        auto uniform = [&](double lo, double hi) {
            return lo + (hi - lo) * qdt::uniform01(engine);
        };
        qdt::UtilityParams up;
        up.alpha = uniform(0.7, 1.0);
        up.delta = uniform(0.8, 1.2);
        up.gamma = uniform(0.6, 0.9);
        up.phi = uniform(0.05, 0.15);
        up.lambda = 1.0;
        qdt::AttractionParams ap;
        ap.mask = qdt::ComponentMask::all();
        ap.c1 = uniform(0.2, 1.0);
        ap.c2 = uniform(0.0, 0.5);
        ap.c3 = (qdt::uniform01(engine) < 0.5 ? -1.0 : 1.0) * uniform(0.01, 0.08);
        ap.c4 = (qdt::uniform01(engine) < 0.5 ? -1.0 : 1.0) * uniform(0.001, 0.008);
        ap.a = uniform(0.03, 0.12);

        const qdt::SyntheticSubject subject = qdt::generate_synthetic_subject(
            desc, up, ap, name, qdt::combine_seed(opt.seed, qdt::fnv1a64(name)));
        all.insert(all.end(), subject.trials.begin(), subject.trials.end());
        truth["subjects"][name] =
            json::parse(qdt::params_to_json(subject.utility, subject.attraction, true));
    }

    qdt::write_text_file_atomic(out_dir / "synthetic.csv", qdt::trials_to_csv(all));
    qdt::write_text_file_atomic(out_dir / "truth.json", truth.dump(2) + "\n");
    std::cout << "wrote " << all.size() << " trials for " << opt.subjects << " subjects\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Individual risky-choice modeling: QDT utility + attraction factors "
                 "with a logit-CPT baseline"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&](CLI::App* cmd, bool needs_data, bool needs_model) {
        if (needs_data) cmd->add_option("--data", opt.data, "canonical trial CSV");
        cmd->add_option("--out", opt.out, "output directory");
        if (needs_model) {
            cmd->add_option("--model", opt.model, "qdt or cpt");
            cmd->add_option("--components", opt.components,
                            "comma list of time_frame,memory,need (qdt only)");
        }
        cmd->add_option("--folds", opt.folds, "cross-validation folds")->check(CLI::Range(2, 100));
        cmd->add_option("--seed", opt.seed, "run seed");
    };

    CLI::App* fit = app.add_subcommand("fit", "fit per-subject parameters by regularized MLE");
    add_common(fit, true, true);
    fit->add_option("--reg-weight", opt.reg_weight, "L1 weight on c1..c4");
    fit->add_flag("--no-catch-training", opt.no_catch_training,
                  "exclude catch trials from training sets");
    fit->add_flag("--regularize-a", opt.regularize_a, "include |a| in the L1 term");

    CLI::App* evaluate = app.add_subcommand("evaluate", "held-out accuracy and calibration");
    add_common(evaluate, true, true);
    evaluate->add_flag("--fair-only", opt.fair_only, "score fair trials only");

    CLI::App* predict = app.add_subcommand("predict", "per-trial out-of-sample probabilities");
    add_common(predict, true, true);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte-Carlo response similarity");
    add_common(simulate, true, true);
    simulate->add_option("--n-sims", opt.n_sims, "simulations per subject");

    CLI::App* ablate = app.add_subcommand("ablate", "catch-trial training ablation");
    add_common(ablate, true, true);
    ablate->add_option("--reg-weight", opt.reg_weight, "L1 weight on c1..c4");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cohort");
    add_common(synth, false, false);
    synth->add_option("--shape", opt.shape, "dataset1 or dataset2");
    synth->add_option("--subjects", opt.subjects, "number of synthetic subjects");

    CLI::App* export_features = app.add_subcommand("export-features",
                                                   "flat per-trial feature matrix");
    add_common(export_features, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (fit->parsed()) return cmd_fit(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt);
        if (predict->parsed()) return cmd_predict(opt);
        if (simulate->parsed()) return cmd_simulate(opt);
        if (ablate->parsed()) return cmd_ablate(opt);
        if (synth->parsed()) return cmd_synth(opt);
        if (export_features->parsed()) return cmd_export_features(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qdt::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
