#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "impact/config.hpp"
#include "impact/dual.hpp"
#include "impact/errors.hpp"
#include "impact/experiments.hpp"
#include "impact/facelift.hpp"
#include "impact/hedge.hpp"
#include "impact/pde.hpp"
#include "impact/rng.hpp"

namespace {

using impact::RootConfig;
using nlohmann::json;

json mc_to_json(const impact::McResult& r) {
    return {{"estimate", r.estimate},
            {"stderr", r.stderr_},
            {"n_paths", r.n_paths},
            {"n_steps", r.n_steps},
            {"seed", r.seed},
            {"penalty_mean", r.penalty_mean},
            {"contact_fraction", r.contact_fraction},
            {"gap_mean", r.gap_mean},
            {"unbounded_penalty", r.unbounded_penalty},
            {"clamped_queries", r.clamp.total()}};
}

json hedge_to_json(const impact::HedgeReport& r) {
    return {{"initial_capital", r.initial_capital},
            {"mean_error", r.mean_error},
            {"std_error", r.std_error},
            {"sup_error", r.sup_error},
            {"n_paths", r.n_paths},
            {"n_steps", r.n_steps},
            {"seed", r.seed},
            {"domain_escapes", r.domain_escapes},
            {"clamped_queries", r.clamp.total()}};
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw impact::IoError("cannot write: " + path);
    out << text;
}

impact::StudyConfig parse_study_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw impact::IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    json doc;
    try {
        doc = json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw impact::SchemaError("/", std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw impact::SchemaError("/", "expected object");
    impact::StudyConfig cfg;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& key = it.key();
        if (key != "kind" && key != "eps_list" && key != "root")
            throw impact::SchemaError("/" + key, "unknown key");
    }
    if (doc.contains("kind")) {
        if (!doc["kind"].is_string()) throw impact::SchemaError("/kind", "expected string");
        cfg.kind = doc["kind"].get<std::string>();
        if (cfg.kind != "expansion" && cfg.kind != "variance" && cfg.kind != "consistency")
            throw impact::SchemaError("/kind", "expected expansion|variance|consistency");
    }
    if (doc.contains("eps_list")) {
        if (!doc["eps_list"].is_array())
            throw impact::SchemaError("/eps_list", "expected array of numbers");
        cfg.eps_list.clear();
        for (const auto& v : doc["eps_list"]) {
            if (!v.is_number()) throw impact::SchemaError("/eps_list", "expected number");
            cfg.eps_list.push_back(v.get<double>());
        }
    }
    if (doc.contains("root")) cfg.root = impact::parse_config_text(doc["root"].dump());
    return cfg;
}

int run(int argc, char** argv) {
    CLI::App app{"Pricing and hedging of covered options under market impact"};
    app.require_subcommand(1);

    std::string config_path;
    std::string csv_path;
    std::string out_path;
    std::string control_spec = "optimal";
    std::string strategy_spec = "exact";
    std::size_t paths = 0, steps = 0;
    std::uint64_t seed_flag = 0;
    bool seed_set = false, paths_set = false, steps_set = false;
    double facelift_eps = 0.0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--paths", paths, "Monte Carlo path count")
            ->each([&](const std::string&) { paths_set = true; });
        sub->add_option("--steps", steps, "Monte Carlo time steps")
            ->each([&](const std::string&) { steps_set = true; });
        sub->add_option("--seed", seed_flag, "RNG seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* price_cmd = app.add_subcommand("price", "Nonlinear PDE price");
    price_cmd->add_option("--config", config_path, "JSON config file")->required();
    price_cmd->add_option("--surface-csv", csv_path, "dump the value surface as CSV");

    auto* facelift_cmd = app.add_subcommand("facelift", "Terminal payoff lift");
    facelift_cmd->add_option("--config", config_path, "JSON config file")->required();
    facelift_cmd->add_option("--eps", facelift_eps, "tighten with the F-level cut at 1/eps");
    facelift_cmd->add_option("--csv", csv_path, "dump x, g, g_hat, contact as CSV");

    auto* dual_cmd = app.add_subcommand("dual", "Dual Monte Carlo bound");
    add_common(dual_cmd);
    dual_cmd->add_option("--control", control_spec, "optimal | const:<s> | sweep");

    auto* hedge_cmd = app.add_subcommand("hedge", "Replication error simulation");
    add_common(hedge_cmd);
    hedge_cmd->add_option("--strategy", strategy_spec, "exact | asymptotic:<eps>");
    hedge_cmd->add_option("--path-csv", csv_path, "dump per-path terminal errors as CSV");

    auto* study_cmd = app.add_subcommand("study", "Cross-validation studies");
    auto* study_run = study_cmd->add_subcommand("run", "run a study config");
    std::string study_path;
    study_run->add_option("config", study_path, "study JSON config")->required();
    study_run->add_option("--out", out_path, "report output path");
    study_cmd->require_subcommand(1);

    auto* config_cmd = app.add_subcommand("config", "Config utilities");
    auto* config_defaults = config_cmd->add_subcommand("print-defaults", "defaults as JSON");
    auto* config_validate = config_cmd->add_subcommand("validate", "validate a config file");
    std::string validate_path;
    config_validate->add_option("config", validate_path, "JSON config file")->required();
    config_cmd->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    if (config_defaults->parsed()) {
        std::cout << impact::default_config_text() << "\n";
        return 0;
    }
    if (config_validate->parsed()) {
        impact::parse_config(validate_path);
        std::cout << json{{"valid", true}, {"path", validate_path}}.dump(2) << "\n";
        return 0;
    }

    if (study_run->parsed()) {
        const auto cfg = parse_study_config(study_path);
        json report;
        bool pass = true;
        if (cfg.kind == "expansion") {
            const auto rep = impact::run_expansion_study(cfg);
            json rows = json::array();
            for (const auto& r : rep.table.rows)
                rows.push_back({{"eps", r.eps},
                                {"full", r.full_price},
                                {"expansion", r.expansion_price},
                                {"gap", r.gap}});
            report = {{"kind", "expansion"},
                      {"v0_price", rep.table.v0_price},
                      {"delta_v_price", rep.table.delta_v_price},
                      {"rows", rows},
                      {"fitted_slope", rep.table.fitted_slope},
                      {"slope_ok", rep.slope_ok},
                      {"ratios_ok", rep.ratios_ok}};
            pass = rep.slope_ok && rep.ratios_ok;
        } else if (cfg.kind == "variance") {
            const auto rep = impact::run_variance_identity(cfg);
            report = {{"kind", "variance"},
                      {"delta_v_price", rep.delta_v_price},
                      {"coefficient", rep.coefficient},
                      {"mc_variance", rep.mc_variance},
                      {"mc_variance_stderr", rep.mc_variance_stderr},
                      {"rhs", rep.rhs},
                      {"tolerance", rep.tolerance},
                      {"pass", rep.pass},
                      {"n_paths", rep.n_paths},
                      {"seed", rep.seed}};
            pass = rep.pass;
        } else {
            const auto rep = impact::run_consistency_matrix(cfg);
            json cells = json::array();
            for (const auto& c : rep.cells)
                cells.push_back({{"name", c.name},
                                 {"lhs", c.lhs},
                                 {"rhs", c.rhs},
                                 {"margin", c.margin},
                                 {"pass", c.pass}});
            report = {{"kind", "consistency"}, {"cells", cells}, {"all_pass", rep.all_pass}};
            pass = rep.all_pass;
        }
        const std::string text = report.dump(2) + "\n";
        if (!out_path.empty()) write_file(out_path, text);
        std::cout << text;
        return pass ? 0 : 1;
    }

    RootConfig cfg = impact::parse_config(config_path);
    if (paths_set) cfg.mc.n_paths = paths;
    if (steps_set) cfg.mc.n_steps = steps;
    if (seed_set) cfg.seed = seed_flag;

    const impact::ImpactModel model = cfg.model.build();
    const impact::PayoffSpec payoff = cfg.payoff.build();

    if (price_cmd->parsed()) {
        const auto lift = impact::face_lift(payoff, model, cfg.grid);
        const auto sol = impact::solve_hjb(model, lift.g_hat_values, cfg.grid, cfg.solver);
        json out = {{"price", sol.price(cfg.spot)},
                    {"spot", cfg.spot},
                    {"residual_sup", sol.residual_sup},
                    {"gamma_margin", std::isfinite(sol.gamma_margin) ? sol.gamma_margin : -1.0},
                    {"policy_iterations_total", sol.total_policy_iterations},
                    {"policy_iterations_max_step", sol.max_policy_iterations_step}};
        if (!csv_path.empty()) {
            std::ostringstream csv;
            csv << "t,x,value,dxx,control\n";
            for (std::size_t i = 0; i <= cfg.grid.n_time; ++i)
                for (std::size_t j = 0; j < cfg.grid.n_space; ++j)
                    csv << cfg.grid.t(i) << "," << cfg.grid.x(j) << ","
                        << sol.values[cfg.grid.at(i, j)] << ","
                        << sol.dxx_values[cfg.grid.at(i, j)] << ","
                        << sol.control_field[cfg.grid.at(i, j)] << "\n";
            write_file(csv_path, csv.str());
            out["surface_csv"] = csv_path;
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }

    if (facelift_cmd->parsed()) {
        const auto lift = facelift_eps > 0.0
                              ? impact::face_lift_eps(payoff, model, cfg.grid, facelift_eps)
                              : impact::face_lift(payoff, model, cfg.grid);
        double max_lift = 0.0;
        std::size_t contact_nodes = 0;
        for (std::size_t j = 0; j < cfg.grid.n_space; ++j) {
            max_lift = std::max(max_lift, lift.g_hat_values[j] - lift.g_values[j]);
            contact_nodes += lift.contact_set[j] ? 1 : 0;
        }
        json out = {{"max_lift", max_lift},
                    {"contact_nodes", contact_nodes},
                    {"n_space", cfg.grid.n_space}};
        if (!csv_path.empty()) {
            std::ostringstream csv;
            csv << "x,g,g_hat,gamma_bound,contact\n";
            for (std::size_t j = 0; j < cfg.grid.n_space; ++j)
                csv << cfg.grid.x(j) << "," << lift.g_values[j] << ","
                    << lift.g_hat_values[j] << "," << lift.gamma_bound_used[j] << ","
                    << int(lift.contact_set[j]) << "\n";
            write_file(csv_path, csv.str());
            out["csv"] = csv_path;
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }

    if (dual_cmd->parsed()) {
        const auto lift = impact::face_lift(payoff, model, cfg.grid);
        const auto sol = impact::solve_hjb(model, lift.g_hat_values, cfg.grid, cfg.solver);
        if (control_spec == "sweep") {
            std::vector<impact::ControlSpec> controls;
            std::vector<std::string> labels;
            controls.push_back(impact::ControlSpec::markov_from_pde(sol));
            labels.push_back("optimal");
            for (double s : {0.15, 0.2, 0.25}) {
                controls.push_back(impact::ControlSpec::constant_vol(s));
                labels.push_back("const:" + std::to_string(s));
            }
            const auto table = impact::dual_sweep(controls, labels, lift.g_hat_values,
                                                  model, cfg.grid, cfg.spot, cfg.mc.n_paths,
                                                  cfg.mc.n_steps, cfg.seed, sol.price(cfg.spot),
                                                  lift.g_values);
            json rows = json::array();
            for (const auto& row : table.rows) {
                json r = mc_to_json(row.result);
                r["label"] = row.label;
                rows.push_back(r);
            }
            std::cout << json{{"rows", rows},
                              {"best", table.rows[table.best_index].label},
                              {"pde_price", table.pde_price},
                              {"best_gap", table.best_gap}}
                             .dump(2)
                      << "\n";
            return 0;
        }
        impact::ControlSpec control;
        if (control_spec == "optimal") {
            control = impact::ControlSpec::markov_from_pde(sol);
        } else if (control_spec.rfind("const:", 0) == 0) {
            control = impact::ControlSpec::constant_vol(std::stod(control_spec.substr(6)));
        } else {
            throw impact::UsageError("--control expects optimal | const:<s> | sweep");
        }
        const auto mc = impact::dual_value(control, lift.g_hat_values, model, cfg.grid,
                                           cfg.spot, cfg.mc.n_paths, cfg.mc.n_steps,
                                           cfg.seed, lift.g_values);
        json out = mc_to_json(mc);
        out["pde_price"] = sol.price(cfg.spot);
        std::cout << out.dump(2) << "\n";
        return 0;
    }

    if (hedge_cmd->parsed()) {
        impact::HedgeReport rep;
        if (strategy_spec == "exact") {
            rep = impact::run_exact_hedge(model, payoff, cfg.grid, cfg.spot, cfg.mc.n_paths,
                                          cfg.mc.n_steps, cfg.seed, cfg.solver);
        } else if (strategy_spec.rfind("asymptotic:", 0) == 0) {
            const double eps = std::stod(strategy_spec.substr(11));
            rep = impact::run_asymptotic_hedge(model, payoff, cfg.grid, eps, cfg.spot,
                                               cfg.mc.n_paths, cfg.mc.n_steps, cfg.seed);
        } else {
            throw impact::UsageError("--strategy expects exact | asymptotic:<eps>");
        }
        if (!csv_path.empty()) {
            std::ostringstream csv;
            csv << "path,terminal_error\n";
            for (std::size_t p = 0; p < rep.terminal_errors.size(); ++p)
                csv << p << "," << rep.terminal_errors[p] << "\n";
            write_file(csv_path, csv.str());
        }
        std::cout << hedge_to_json(rep).dump(2) << "\n";
        return 0;
    }

    throw impact::UsageError("no subcommand matched");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const impact::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
