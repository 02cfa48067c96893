#include "qdt/trials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qdt/errors.hpp"
#include "qdt/rng.hpp"

namespace qdt {

namespace {

constexpr double kFairTolerance = 1e-6;
constexpr double kScoreTolerance = 1e-6;

std::string fmt(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, int line_no, const char* col) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw MalformedRow("line " + std::to_string(line_no) + ": bad " + col + " '" + s + "'");
    return v;
}

int parse_int(const std::string& s, int line_no, const char* col) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw MalformedRow("line " + std::to_string(line_no) + ": bad " + col + " '" + s + "'");
    return v;
}

const char* framing_str(Framing f) { return f == Framing::Gain ? "gain" : "loss"; }

const char* previous_str(PreviousOutcome p) {
    switch (p) {
    case PreviousOutcome::Won: return "won";
    case PreviousOutcome::Lost: return "lost";
    case PreviousOutcome::Sure: return "sure";
    default: return "none";
    }
}

const char* response_str(Response r) {
    switch (r) {
    case Response::Gamble: return "gamble";
    case Response::Sure: return "sure";
    default: return "";
    }
}

GameTrial parse_row(const std::vector<std::string>& f, int line_no) {
    GameTrial t;
    t.subject_id = f[0];
    if (t.subject_id.empty())
        throw MalformedRow("line " + std::to_string(line_no) + ": empty subject_id");
    t.block_id = parse_int(f[1], line_no, "block_id");
    t.trial_index = parse_int(f[2], line_no, "trial_index");
    t.initial_amount = parse_double(f[3], line_no, "initial_amount");
    t.win_prob = parse_double(f[4], line_no, "win_prob");

    if (f[5] == "gain") t.framing = Framing::Gain;
    else if (f[5] == "loss") t.framing = Framing::Loss;
    else throw MalformedRow("line " + std::to_string(line_no) + ": bad framing '" + f[5] + "'");

    t.time_limit = parse_double(f[6], line_no, "time_limit");
    t.need_level = parse_double(f[7], line_no, "need_level");
    if (!f[8].empty()) t.current_score = parse_double(f[8], line_no, "current_score");
    t.sure_amount = parse_double(f[9], line_no, "sure_amount");

    if (f[10].empty()) t.previous_outcome = std::nullopt;
    else if (f[10] == "won") t.previous_outcome = PreviousOutcome::Won;
    else if (f[10] == "lost") t.previous_outcome = PreviousOutcome::Lost;
    else if (f[10] == "sure") t.previous_outcome = PreviousOutcome::Sure;
    else if (f[10] == "none") t.previous_outcome = PreviousOutcome::None;
    else throw MalformedRow("line " + std::to_string(line_no) + ": bad previous_outcome '" + f[10] + "'");

    if (f[11] == "0") t.is_catch = false;
    else if (f[11] == "1") t.is_catch = true;
    else throw MalformedRow("line " + std::to_string(line_no) + ": bad is_catch '" + f[11] + "'");

    if (f[12].empty()) t.response = Response::Missing;
    else if (f[12] == "gamble") t.response = Response::Gamble;
    else if (f[12] == "sure") t.response = Response::Sure;
    else throw MalformedRow("line " + std::to_string(line_no) + ": bad response '" + f[12] + "'");

    return t;
}

void validate_row(const GameTrial& t, int line_no) {
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (!(t.initial_amount > 0.0))
        throw InvariantViolation(where + "initial_amount must be > 0");
    if (!(t.win_prob > 0.0 && t.win_prob < 1.0))
        throw InvariantViolation(where + "win_prob must lie strictly in (0,1)");
    if (!(t.time_limit > 0.0))
        throw InvariantViolation(where + "time_limit must be > 0");
    if (t.need_level < 0.0)
        throw InvariantViolation(where + "need_level must be >= 0");
    if (t.sure_amount < 0.0)
        throw InvariantViolation(where + "sure_amount must be >= 0");
    if (t.current_score && *t.current_score < 0.0)
        throw InvariantViolation(where + "current_score must be >= 0");
    if (!t.is_catch &&
        std::fabs(t.sure_amount - t.win_prob * t.initial_amount) > kFairTolerance)
        throw InvariantViolation(where + "fair trial violates sure_amount = win_prob * initial_amount");
}

// Points gained by trial `prior` given the outcome recorded for the next trial.
double realized_gain(const GameTrial& prior, PreviousOutcome outcome) {
    switch (outcome) {
    case PreviousOutcome::Won: return prior.initial_amount;
    case PreviousOutcome::Lost: return 0.0;
    case PreviousOutcome::Sure: return prior.sure_amount;
    default: return 0.0;
    }
}

void check_outcome_vs_response(const GameTrial& prior, PreviousOutcome outcome,
                               const std::string& where) {
    if (prior.response == Response::Missing) return;
    const bool gambled = prior.response == Response::Gamble;
    if ((outcome == PreviousOutcome::Won || outcome == PreviousOutcome::Lost) && !gambled)
        throw InvariantViolation(where + "previous_outcome says gamble but prior response is sure");
    if (outcome == PreviousOutcome::Sure && gambled)
        throw InvariantViolation(where + "previous_outcome says sure but prior response is gamble");
}

// Cross-row checks within one block: monotone trial_index, first-trial
// previous_outcome, and score/outcome consistency wherever the optional
// columns are present.
void check_block(const std::vector<GameTrial>& trials, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const GameTrial& t = trials[i];
        const std::string where = t.subject_id + " block " + std::to_string(t.block_id) +
                                  " trial " + std::to_string(t.trial_index) + ": ";
        if (i == begin) {
            if (t.previous_outcome && *t.previous_outcome != PreviousOutcome::None)
                throw InvariantViolation(where + "first trial of a block cannot have a previous outcome");
            continue;
        }
        const GameTrial& prior = trials[i - 1];
        if (t.trial_index <= prior.trial_index)
            throw InvariantViolation(where + "trial_index not strictly increasing within block");
        if (t.previous_outcome) {
            if (*t.previous_outcome == PreviousOutcome::None)
                throw InvariantViolation(where + "previous_outcome 'none' after the first trial");
            check_outcome_vs_response(prior, *t.previous_outcome, where);
            if (t.current_score && prior.current_score) {
                const double expect = *prior.current_score + realized_gain(prior, *t.previous_outcome);
                if (std::fabs(*t.current_score - expect) > kScoreTolerance)
                    throw InvariantViolation(where + "current_score inconsistent with previous outcome (" +
                                             fmt(*t.current_score) + " vs " + fmt(expect) + ")");
            }
        }
    }
}

} // namespace

LoadResult load_trials_from_string(const std::string& csv) {
    std::vector<std::string> lines;
    {
        std::istringstream in(csv);
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw EmptyFile("no content");
    if (lines[0] != kTrialCsvHeader)
        throw MalformedRow("header does not match canonical schema");
    if (lines.size() == 1) throw EmptyFile("no data rows");

    std::vector<GameTrial> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 13)
            throw MalformedRow("line " + std::to_string(i + 1) + ": expected 13 columns, got " +
                               std::to_string(fields.size()));
        GameTrial t = parse_row(fields, static_cast<int>(i + 1));
        validate_row(t, static_cast<int>(i + 1));
        rows.push_back(std::move(t));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const GameTrial& a, const GameTrial& b) {
        if (a.subject_id != b.subject_id) return a.subject_id < b.subject_id;
        if (a.block_id != b.block_id) return a.block_id < b.block_id;
        return a.trial_index < b.trial_index;
    });

    // Drop whole subjects that have any missing response.
    std::set<std::string> incomplete;
    for (const GameTrial& t : rows)
        if (t.response == Response::Missing) incomplete.insert(t.subject_id);

    LoadResult out;
    out.dropped_subjects.assign(incomplete.begin(), incomplete.end());
    for (GameTrial& t : rows)
        if (!incomplete.count(t.subject_id)) out.trials.push_back(std::move(t));

    // Block-level consistency on what remains.
    std::size_t i = 0;
    while (i < out.trials.size()) {
        std::size_t j = i + 1;
        while (j < out.trials.size() && out.trials[j].subject_id == out.trials[i].subject_id &&
               out.trials[j].block_id == out.trials[i].block_id)
            ++j;
        check_block(out.trials, i, j);
        i = j;
    }
    return out;
}

LoadResult load_trials(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EmptyFile("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_trials_from_string(buf.str());
}

std::string trials_to_csv(const std::vector<GameTrial>& trials) {
    std::string out(kTrialCsvHeader);
    out += '\n';
    for (const GameTrial& t : trials) {
        out += t.subject_id;
        out += ',' + std::to_string(t.block_id);
        out += ',' + std::to_string(t.trial_index);
        out += ',' + fmt(t.initial_amount);
        out += ',' + fmt(t.win_prob);
        out += ','; out += framing_str(t.framing);
        out += ',' + fmt(t.time_limit);
        out += ',' + fmt(t.need_level);
        out += ','; if (t.current_score) out += fmt(*t.current_score);
        out += ',' + fmt(t.sure_amount);
        out += ','; if (t.previous_outcome) out += previous_str(*t.previous_outcome);
        out += ','; out += (t.is_catch ? '1' : '0');
        out += ','; out += response_str(t.response);
        out += '\n';
    }
    return out;
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<GameTrial>& trials) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << trials_to_csv(trials);
}

std::vector<DerivedTrial> derive_features(const std::vector<GameTrial>& trials) {
    std::vector<DerivedTrial> out;
    out.reserve(trials.size());

    std::set<std::string> seen_subjects;
    std::size_t i = 0;
    while (i < trials.size()) {
        const std::string& subject = trials[i].subject_id;
        if (!seen_subjects.insert(subject).second)
            throw OrderingError("trials for subject '" + subject + "' are not contiguous");

        std::size_t subject_end = i + 1;
        while (subject_end < trials.size() && trials[subject_end].subject_id == subject)
            ++subject_end;

        std::size_t b = i;
        while (b < subject_end) {
            std::size_t block_end = b + 1;
            while (block_end < subject_end && trials[block_end].block_id == trials[b].block_id)
                ++block_end;

            double running = trials[b].current_score.value_or(0.0);
            for (std::size_t k = b; k < block_end; ++k) {
                const GameTrial& raw = trials[k];
                const std::string where = subject + " block " + std::to_string(raw.block_id) +
                                          " trial " + std::to_string(raw.trial_index) + ": ";
                DerivedTrial d;
                d.trial = raw;

                if (k == b) {
                    if (raw.previous_outcome && *raw.previous_outcome != PreviousOutcome::None)
                        throw InvariantViolation(where + "first trial of a block cannot have a previous outcome");
                    d.trial.previous_outcome = PreviousOutcome::None;
                    d.trial.current_score = running;
                } else {
                    const GameTrial& prior = trials[k - 1];
                    if (raw.trial_index <= prior.trial_index)
                        throw OrderingError(where + "trial_index not strictly increasing within block");

                    PreviousOutcome prev;
                    bool prev_explicit = raw.previous_outcome.has_value();
                    if (prev_explicit) {
                        prev = *raw.previous_outcome;
                        if (prev == PreviousOutcome::None)
                            throw InvariantViolation(where + "previous_outcome 'none' after the first trial");
                        check_outcome_vs_response(prior, prev, where);
                    } else {
                        if (prior.response == Response::Missing)
                            throw InvariantViolation(where + "cannot recompute previous_outcome: prior response missing");
                        if (prior.response == Response::Sure) {
                            prev = PreviousOutcome::Sure;
                        } else {
                            if (!raw.current_score)
                                throw InvariantViolation(where + "cannot recompute previous_outcome without current_score");
                            const double delta = *raw.current_score - running;
                            if (std::fabs(delta - prior.initial_amount) <= kScoreTolerance)
                                prev = PreviousOutcome::Won;
                            else if (std::fabs(delta) <= kScoreTolerance)
                                prev = PreviousOutcome::Lost;
                            else
                                throw InvariantViolation(where + "score delta " + fmt(delta) +
                                                         " matches neither a win nor a loss");
                        }
                    }

                    const double expect = running + realized_gain(prior, prev);
                    if (raw.current_score) {
                        if (prev_explicit &&
                            std::fabs(*raw.current_score - expect) > kScoreTolerance)
                            throw InvariantViolation(where + "current_score inconsistent with previous outcome (" +
                                                     fmt(*raw.current_score) + " vs " + fmt(expect) + ")");
                        running = *raw.current_score;
                    } else {
                        running = expect;
                    }
                    d.trial.previous_outcome = prev;
                    d.trial.current_score = running;
                }

                d.std_dev = raw.initial_amount *
                            std::sqrt(raw.win_prob * (1.0 - raw.win_prob));
                d.need_gap = raw.need_level - *d.trial.current_score;
                out.push_back(std::move(d));
            }
            b = block_end;
        }
        i = subject_end;
    }
    return out;
}

FoldPlan kfold_split(const std::vector<DerivedTrial>& trials, int n_folds, std::uint64_t seed) {
    if (n_folds < 2) throw DomainError("kfold_split: n_folds must be >= 2");

    FoldPlan plan;
    plan.seed = seed;
    plan.n_folds = n_folds;
    plan.assignments.assign(trials.size(), -1);

    // Positions per subject, in input order.
    std::map<std::string, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < trials.size(); ++i)
        by_subject[trials[i].trial.subject_id].push_back(i);

    for (auto& [subject, positions] : by_subject) {
        if (positions.size() < static_cast<std::size_t>(n_folds))
            throw TooFewTrials("subject '" + subject + "' has " + std::to_string(positions.size()) +
                               " trials for " + std::to_string(n_folds) + " folds");
        auto engine = make_engine(combine_seed(seed, fnv1a64(subject)));
        deterministic_shuffle(positions, engine);
        for (std::size_t i = 0; i < positions.size(); ++i)
            plan.assignments[positions[i]] = static_cast<int>(i % static_cast<std::size_t>(n_folds));
    }
    return plan;
}

std::string feature_csv(const std::vector<DerivedTrial>& trials) {
    std::string out(kFeatureCsvHeader);
    out += '\n';
    for (const DerivedTrial& d : trials) {
        const GameTrial& t = d.trial;
        if (t.response == Response::Missing)
            throw InvariantViolation("feature_csv: trial without response (subject " + t.subject_id + ")");
        if (!t.previous_outcome || !t.current_score)
            throw InvariantViolation("feature_csv: unresolved trial; run derive_features first");
        out += t.subject_id;
        out += ',' + std::to_string(t.block_id);
        out += ',' + std::to_string(t.trial_index);
        out += ',' + fmt(t.initial_amount);
        out += ',' + fmt(t.win_prob);
        out += ','; out += framing_str(t.framing);
        out += ',' + fmt(t.time_limit);
        out += ',' + fmt(t.need_level);
        out += ',' + fmt(*t.current_score);
        out += ',' + fmt(t.sure_amount);
        out += ','; out += previous_str(*t.previous_outcome);
        out += ','; out += (t.is_catch ? '1' : '0');
        out += ',' + fmt(d.std_dev);
        out += ',' + fmt(d.need_gap);
        out += ',' + fmt(previous_indicator(*t.previous_outcome));
        out += ','; out += (t.response == Response::Gamble ? '1' : '0');
        out += '\n';
    }
    return out;
}

} // namespace qdt
