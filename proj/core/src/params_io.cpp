#include "qdt/params_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qdt/errors.hpp"

namespace qdt {

namespace {

using nlohmann::json;

json mask_to_json(const ComponentMask& mask) {
    json out = json::array();
    if (mask.time_frame) out.push_back("time_frame");
    if (mask.memory) out.push_back("memory");
    if (mask.need) out.push_back("need");
    return out;
}

ComponentMask mask_from_json(const json& arr) {
    ComponentMask mask;
    for (const auto& item : arr) {
        const std::string name = item.get<std::string>();
        if (name == "time_frame") mask.time_frame = true;
        else if (name == "memory") mask.memory = true;
        else if (name == "need") mask.need = true;
        else throw MissingParams("unknown attraction component '" + name + "'");
    }
    return mask;
}

json params_json(const UtilityParams& up, const AttractionParams& ap, bool include_attraction) {
    json out;
    out["utility"] = {{"alpha", up.alpha}, {"delta", up.delta}, {"gamma", up.gamma},
                      {"phi", up.phi},     {"lambda", up.lambda}};
    if (include_attraction)
        out["attraction"] = {{"c1", ap.c1}, {"c2", ap.c2}, {"c3", ap.c3},
                             {"c4", ap.c4}, {"a", ap.a},   {"mask", mask_to_json(ap.mask)}};
    return out;
}

ParsedParams parse_params(const json& obj) {
    ParsedParams out;
    const json& u = obj.at("utility");
    out.utility.alpha = u.at("alpha").get<double>();
    out.utility.delta = u.at("delta").get<double>();
    out.utility.gamma = u.at("gamma").get<double>();
    out.utility.phi = u.at("phi").get<double>();
    out.utility.lambda = u.at("lambda").get<double>();
    if (obj.contains("attraction")) {
        const json& a = obj.at("attraction");
        out.attraction.c1 = a.at("c1").get<double>();
        out.attraction.c2 = a.at("c2").get<double>();
        out.attraction.c3 = a.at("c3").get<double>();
        out.attraction.c4 = a.at("c4").get<double>();
        out.attraction.a = a.at("a").get<double>();
        out.attraction.mask = mask_from_json(a.at("mask"));
        out.has_attraction = true;
    }
    return out;
}

} // namespace

std::string params_to_json(const UtilityParams& up, const AttractionParams& ap,
                           bool include_attraction) {
    return params_json(up, ap, include_attraction).dump(2) + "\n";
}

ParsedParams params_from_json(const std::string& text) {
    try {
        return parse_params(json::parse(text));
    } catch (const json::exception& e) {
        throw MissingParams(std::string("cannot parse parameter JSON: ") + e.what());
    }
}

std::string fit_results_to_json(const std::vector<FitResult>& fits, ModelKind model) {
    json arr = json::array();
    for (const FitResult& fit : fits) {
        json entry = params_json(fit.utility, fit.attraction, model == ModelKind::Qdt);
        entry["fold"] = fit.fold;
        entry["objective"] = fit.objective;
        entry["iterations"] = fit.iterations;
        entry["converged"] = fit.converged;
        arr.push_back(std::move(entry));
    }
    return arr.dump(2) + "\n";
}

std::vector<ParsedFitResult> fit_results_from_json(const std::string& text) {
    try {
        const json arr = json::parse(text);
        if (!arr.is_array()) throw MissingParams("fit result JSON must be an array");
        std::vector<ParsedFitResult> out;
        for (const auto& entry : arr) {
            ParsedFitResult r;
            const ParsedParams p = parse_params(entry);
            r.utility = p.utility;
            r.attraction = p.attraction;
            r.has_attraction = p.has_attraction;
            r.fold = entry.at("fold").get<int>();
            r.objective = entry.at("objective").get<double>();
            r.iterations = entry.at("iterations").get<int>();
            r.converged = entry.at("converged").get<bool>();
            out.push_back(std::move(r));
        }
        return out;
    } catch (const json::exception& e) {
        throw MissingParams(std::string("cannot parse fit result JSON: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace qdt
