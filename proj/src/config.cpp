#include "impact/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "impact/errors.hpp"

namespace impact {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw SchemaError(where + "/" + it.key(), "unknown key");
}

double get_number(const json& obj, const std::string& where, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw SchemaError(where + "/" + key, "expected number");
    return v.get<double>();
}

std::size_t get_size(const json& obj, const std::string& where, const std::string& key,
                     std::size_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_unsigned()) throw SchemaError(where + "/" + key, "expected non-negative integer");
    return v.get<std::size_t>();
}

std::string get_string(const json& obj, const std::string& where, const std::string& key,
                       const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw SchemaError(where + "/" + key, "expected string");
    return v.get<std::string>();
}

}  // namespace

ImpactModel ModelConfig::build() const {
    if (model != "bolozo") throw SchemaError("/model/model", "unsupported model: " + model);
    const double s0 = sigma0;
    ImpactModel::VolSurface vol;
    if (sigma_mode == "constant") {
        vol = [s0](double, double) { return s0; };
    } else if (sigma_mode == "proportional") {
        vol = [s0](double, double x) { return s0 * x; };
    } else {
        throw SchemaError("/model/sigma_mode", "expected constant|proportional");
    }
    const double fv = f;
    return ImpactModel::bolozo(vol, [fv](double) { return fv; }, epsilon);
}

PayoffSpec PayoffConfig::build() const {
    if (kind == "call") return PayoffSpec::call(strike);
    if (kind == "put") return PayoffSpec::put(strike);
    if (kind == "call_spread") return PayoffSpec::call_spread(strike, strike2);
    if (kind == "digital") return PayoffSpec::digital(strike);
    throw SchemaError("/payoff/kind", "expected call|put|call_spread|digital");
}

RootConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw SchemaError("/", "expected object");
    reject_unknown(doc, "", {"model", "grid", "payoff", "solver", "mc", "spot", "seed",
                             "output_dir"});

    RootConfig cfg;
    if (doc.contains("model")) {
        const auto& m = doc.at("model");
        if (!m.is_object()) throw SchemaError("/model", "expected object");
        reject_unknown(m, "/model", {"model", "sigma0", "sigma_mode", "f", "epsilon"});
        cfg.model.model = get_string(m, "/model", "model", cfg.model.model);
        cfg.model.sigma0 = get_number(m, "/model", "sigma0", cfg.model.sigma0);
        cfg.model.sigma_mode = get_string(m, "/model", "sigma_mode", cfg.model.sigma_mode);
        cfg.model.f = get_number(m, "/model", "f", cfg.model.f);
        cfg.model.epsilon = get_number(m, "/model", "epsilon", cfg.model.epsilon);
        if (cfg.model.model != "bolozo")
            throw SchemaError("/model/model", "unsupported model: " + cfg.model.model);
        if (!(cfg.model.sigma0 > 0.0))
            throw SchemaError("/model/sigma0", "must be > 0");
        if (cfg.model.f < 0.0) throw SchemaError("/model/f", "must be >= 0");
        if (cfg.model.epsilon < 0.0) throw SchemaError("/model/epsilon", "must be >= 0");
        if (cfg.model.sigma_mode != "constant" && cfg.model.sigma_mode != "proportional")
            throw SchemaError("/model/sigma_mode", "expected constant|proportional");
    }
    if (doc.contains("grid")) {
        const auto& g = doc.at("grid");
        if (!g.is_object()) throw SchemaError("/grid", "expected object");
        reject_unknown(g, "/grid", {"x_min", "x_max", "n_space", "t_start", "t_end",
                                    "n_time"});
        cfg.grid.x_min = get_number(g, "/grid", "x_min", cfg.grid.x_min);
        cfg.grid.x_max = get_number(g, "/grid", "x_max", cfg.grid.x_max);
        cfg.grid.n_space = get_size(g, "/grid", "n_space", cfg.grid.n_space);
        cfg.grid.t_start = get_number(g, "/grid", "t_start", cfg.grid.t_start);
        cfg.grid.t_end = get_number(g, "/grid", "t_end", cfg.grid.t_end);
        cfg.grid.n_time = get_size(g, "/grid", "n_time", cfg.grid.n_time);
        if (!(cfg.grid.x_min < cfg.grid.x_max))
            throw SchemaError("/grid/x_max", "x_min must be < x_max");
        if (cfg.grid.n_space < 3) throw SchemaError("/grid/n_space", "minimum 3");
        if (!(cfg.grid.t_start < cfg.grid.t_end))
            throw SchemaError("/grid/t_end", "t_start must be < t_end");
        if (cfg.grid.n_time < 1) throw SchemaError("/grid/n_time", "minimum 1");
    }
    if (doc.contains("payoff")) {
        const auto& p = doc.at("payoff");
        if (!p.is_object()) throw SchemaError("/payoff", "expected object");
        reject_unknown(p, "/payoff", {"kind", "strike", "strike2"});
        cfg.payoff.kind = get_string(p, "/payoff", "kind", cfg.payoff.kind);
        cfg.payoff.strike = get_number(p, "/payoff", "strike", cfg.payoff.strike);
        cfg.payoff.strike2 = get_number(p, "/payoff", "strike2", cfg.payoff.strike2);
        cfg.payoff.build();  // validates kind
    }
    if (doc.contains("solver")) {
        const auto& s = doc.at("solver");
        if (!s.is_object()) throw SchemaError("/solver", "expected object");
        reject_unknown(s, "/solver", {"scheme", "tol_policy", "max_policy_iterations",
                                      "control_grid_size"});
        const std::string scheme = get_string(s, "/solver", "scheme", "implicit");
        if (scheme == "implicit") cfg.solver.scheme = Scheme::Implicit;
        else if (scheme == "explicit") cfg.solver.scheme = Scheme::Explicit;
        else throw SchemaError("/solver/scheme", "expected implicit|explicit");
        cfg.solver.tol_policy = get_number(s, "/solver", "tol_policy", cfg.solver.tol_policy);
        cfg.solver.max_policy_iterations =
            get_size(s, "/solver", "max_policy_iterations", cfg.solver.max_policy_iterations);
        cfg.solver.control_grid_size =
            get_size(s, "/solver", "control_grid_size", cfg.solver.control_grid_size);
        if (!(cfg.solver.tol_policy > 0.0))
            throw SchemaError("/solver/tol_policy", "must be > 0");
    }
    if (doc.contains("mc")) {
        const auto& m = doc.at("mc");
        if (!m.is_object()) throw SchemaError("/mc", "expected object");
        reject_unknown(m, "/mc", {"n_paths", "n_steps"});
        cfg.mc.n_paths = get_size(m, "/mc", "n_paths", cfg.mc.n_paths);
        cfg.mc.n_steps = get_size(m, "/mc", "n_steps", cfg.mc.n_steps);
        if (cfg.mc.n_paths == 0) throw SchemaError("/mc/n_paths", "minimum 1");
        if (cfg.mc.n_steps == 0) throw SchemaError("/mc/n_steps", "minimum 1");
    }
    cfg.spot = get_number(doc, "", "spot", cfg.spot);
    if (doc.contains("seed")) {
        const auto& v = doc.at("seed");
        if (!v.is_number_unsigned()) throw SchemaError("/seed", "expected non-negative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    cfg.output_dir = get_string(doc, "", "output_dir", cfg.output_dir);
    return cfg;
}

RootConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string serialize_config(const RootConfig& cfg) {
    json doc;
    doc["model"] = {{"model", cfg.model.model},
                    {"sigma0", cfg.model.sigma0},
                    {"sigma_mode", cfg.model.sigma_mode},
                    {"f", cfg.model.f},
                    {"epsilon", cfg.model.epsilon}};
    doc["grid"] = {{"x_min", cfg.grid.x_min},     {"x_max", cfg.grid.x_max},
                   {"n_space", cfg.grid.n_space}, {"t_start", cfg.grid.t_start},
                   {"t_end", cfg.grid.t_end},     {"n_time", cfg.grid.n_time}};
    doc["payoff"] = {{"kind", cfg.payoff.kind},
                     {"strike", cfg.payoff.strike},
                     {"strike2", cfg.payoff.strike2}};
    doc["solver"] = {{"scheme", cfg.solver.scheme == Scheme::Implicit ? "implicit"
                                                                      : "explicit"},
                     {"tol_policy", cfg.solver.tol_policy},
                     {"max_policy_iterations", cfg.solver.max_policy_iterations},
                     {"control_grid_size", cfg.solver.control_grid_size}};
    doc["mc"] = {{"n_paths", cfg.mc.n_paths}, {"n_steps", cfg.mc.n_steps}};
    doc["spot"] = cfg.spot;
    doc["seed"] = cfg.seed;
    doc["output_dir"] = cfg.output_dir;
    return doc.dump(2);
}

std::string default_config_text() { return serialize_config(RootConfig{}); }

}  // namespace impact
