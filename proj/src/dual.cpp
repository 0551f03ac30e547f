#include "impact/dual.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"
#include "impact/numerics.hpp"
#include "impact/parallel.hpp"
#include "impact/rng.hpp"

namespace impact {

ControlSpec ControlSpec::markov_from_pde(const PdeSolution& sol, double s_max) {
    ControlSpec c;
    c.kind = Kind::MarkovFromPde;
    c.solution = &sol;
    c.s_max = s_max;
    return c;
}

ControlSpec ControlSpec::constant_vol(double s) {
    if (!(s >= 0.0)) throw DomainViolation("ControlSpec: constant control must be >= 0");
    ControlSpec c;
    c.kind = Kind::Constant;
    c.constant = s;
    return c;
}

ControlSpec ControlSpec::table(SpaceTimeGrid grid, std::vector<double> surface) {
    if (surface.size() != grid.surface_size())
        throw LengthMismatch("ControlSpec::table: surface size != grid surface size");
    ControlSpec c;
    c.kind = Kind::Table;
    c.table_grid = grid;
    c.table_values = std::move(surface);
    return c;
}

double ControlSpec::operator()(double t, double x) const {
    switch (kind) {
        case Kind::Constant:
            return constant;
        case Kind::MarkovFromPde: {
            const double s = interp_bilinear(solution->grid, solution->control_field, t, x);
            return std::clamp(s, 0.0, s_max);
        }
        case Kind::Table: {
            const double s = interp_bilinear(table_grid, table_values, t, x);
            return std::clamp(s, 0.0, s_max);
        }
    }
    return constant;
}

PathBatch simulate_controlled_paths(const ControlSpec& control, const SpaceTimeGrid& grid,
                                    double x0, std::size_t n_paths, std::size_t n_steps,
                                    std::uint64_t seed) {
    if (n_paths == 0 || n_steps == 0)
        throw DomainViolation("simulate_controlled_paths: n_paths and n_steps must be > 0");
    PathBatch batch;
    batch.n_paths = n_paths;
    batch.n_steps = n_steps;
    batch.terminal.resize(n_paths);
    batch.control_mean.resize(n_paths);

    const double dt = (grid.t_end - grid.t_start) / static_cast<double>(n_steps);
    const double sqdt = std::sqrt(dt);

    parallel_for(0, n_paths, [&](std::size_t p) {
        PathRng rng(seed, p);
        double x = x0;
        double s_acc = 0.0;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double t = grid.t_start + static_cast<double>(k) * dt;
            const double s = control(t, x);
            s_acc += s;
            x += s * sqdt * rng.normal();
        }
        batch.terminal[p] = x;
        batch.control_mean[p] = s_acc / static_cast<double>(n_steps);
    });

    batch.terminal_mean = pairwise_sum(batch.terminal) / static_cast<double>(n_paths);
    std::vector<double> dev2(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const double d = batch.terminal[p] - batch.terminal_mean;
        dev2[p] = d * d;
    }
    if (n_paths > 1) {
        const double var = pairwise_sum(dev2) / static_cast<double>(n_paths - 1);
        batch.terminal_stderr = std::sqrt(var / static_cast<double>(n_paths));
    }
    return batch;
}

McResult dual_value(const ControlSpec& control, std::span<const double> payoff_values,
                    const ImpactModel& model, const SpaceTimeGrid& grid, double x0,
                    std::size_t n_paths, std::size_t n_steps, std::uint64_t seed,
                    std::span<const double> g_values) {
    if (payoff_values.size() != grid.n_space)
        throw LengthMismatch("dual_value: payoff_values size != n_space");
    if (!g_values.empty() && g_values.size() != grid.n_space)
        throw LengthMismatch("dual_value: g_values size != n_space");
    if (n_paths == 0 || n_steps == 0)
        throw DomainViolation("dual_value: n_paths and n_steps must be > 0");

    McResult res;
    res.n_paths = n_paths;
    res.n_steps = n_steps;
    res.seed = seed;

    const double dt = (grid.t_end - grid.t_start) / static_cast<double>(n_steps);
    const double sqdt = std::sqrt(dt);

    std::vector<double> objective(n_paths), penalty(n_paths), gap(n_paths, 0.0);
    std::vector<char> contact(n_paths, 0), bad(n_paths, 0);
    std::vector<ClampStats> clamps(n_paths);

    parallel_for(0, n_paths, [&](std::size_t p) {
        PathRng rng(seed, p);
        double x = x0;
        double pen = 0.0;
        bool unbounded = false;
        for (std::size_t k = 0; k < n_steps; ++k) {
            const double t = grid.t_start + static_cast<double>(k) * dt;
            const double s = control(t, x);
            const double fs = model.fenchel_star(t, x, s);
            if (!std::isfinite(fs)) {
                unbounded = true;
            } else {
                pen += fs * dt;
            }
            x += s * sqdt * rng.normal();
        }
        const double payoff = interp_linear(grid, payoff_values, x, &clamps[p]);
        penalty[p] = pen;
        objective[p] = payoff - pen;
        bad[p] = unbounded ? 1 : 0;
        if (!g_values.empty()) {
            const double g = interp_linear(grid, g_values, x);
            gap[p] = payoff - g;
            // fraction of terminal mass strictly above the original payoff
            contact[p] = gap[p] > 1e-9 * (1.0 + std::abs(g)) ? 1 : 0;
        }
    });

    const double inv_n = 1.0 / static_cast<double>(n_paths);
    res.estimate = pairwise_sum(objective) * inv_n;
    res.penalty_mean = pairwise_sum(penalty) * inv_n;
    if (!g_values.empty()) {
        res.gap_mean = pairwise_sum(gap) * inv_n;
        std::size_t hits = 0;
        for (char c : contact) hits += static_cast<std::size_t>(c);
        res.contact_fraction = static_cast<double>(hits) * inv_n;
    }
    for (std::size_t p = 0; p < n_paths; ++p) {
        res.unbounded_penalty = res.unbounded_penalty || bad[p];
        res.clamp.below += clamps[p].below;
        res.clamp.above += clamps[p].above;
    }
    if (res.unbounded_penalty) res.estimate = -kInf;

    if (n_paths > 1 && std::isfinite(res.estimate)) {
        std::vector<double> dev2(n_paths);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const double d = objective[p] - res.estimate;
            dev2[p] = d * d;
        }
        const double var = pairwise_sum(dev2) / static_cast<double>(n_paths - 1);
        res.stderr_ = std::sqrt(var * inv_n);
    }
    return res;
}

DualSweepTable dual_sweep(std::span<const ControlSpec> controls,
                          std::span<const std::string> labels,
                          std::span<const double> payoff_values, const ImpactModel& model,
                          const SpaceTimeGrid& grid, double x0, std::size_t n_paths,
                          std::size_t n_steps, std::uint64_t seed, double pde_price,
                          std::span<const double> g_values) {
    if (controls.empty())
        throw DomainViolation("dual_sweep: empty control list");
    if (!labels.empty() && labels.size() != controls.size())
        throw LengthMismatch("dual_sweep: labels size != controls size");

    DualSweepTable table;
    table.pde_price = pde_price;
    table.rows.reserve(controls.size());
    double best = -kInf;
    for (std::size_t i = 0; i < controls.size(); ++i) {
        DualSweepRow row;
        row.label = labels.empty() ? "control_" + std::to_string(i) : labels[i];
        // common random numbers: every control sees the same seed, hence the
        // same normal increments per (path, step)
        row.result = dual_value(controls[i], payoff_values, model, grid, x0, n_paths,
                                n_steps, seed, g_values);
        if (row.result.estimate > best) {
            best = row.result.estimate;
            table.best_index = i;
        }
        table.rows.push_back(std::move(row));
    }
    table.best_gap = pde_price - best;
    return table;
}

ContactReport contact_diagnostic(const McResult& result, double gap_tolerance) {
    ContactReport rep;
    rep.contact_fraction = result.contact_fraction;
    rep.gap_mean = result.gap_mean;
    rep.near_optimal = result.gap_mean <= gap_tolerance;
    return rep;
}

}  // namespace impact
