#include "impact/facelift.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"
#include "impact/numerics.hpp"

namespace impact {

PayoffSpec PayoffSpec::table(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw LengthMismatch("payoff table: xs/ys must have equal length >= 2");
    for (std::size_t j = 1; j < xs.size(); ++j)
        if (!(xs[j] > xs[j - 1]))
            throw UnsortedInput("payoff table: xs must be strictly increasing");
    PayoffSpec p;
    p.kind = Kind::Table;
    p.table_xs = std::move(xs);
    p.table_ys = std::move(ys);
    return p;
}

double PayoffSpec::operator()(double x) const {
    switch (kind) {
        case Kind::Call:
            return std::max(x - k1, 0.0);
        case Kind::Put:
            return std::max(k1 - x, 0.0);
        case Kind::CallSpread:
            return std::max(x - k1, 0.0) - std::max(x - k2, 0.0);
        case Kind::Digital:
            return x >= k1 ? 1.0 : 0.0;
        case Kind::Table: {
            if (x <= table_xs.front()) return table_ys.front();
            if (x >= table_xs.back()) return table_ys.back();
            const auto it = std::upper_bound(table_xs.begin(), table_xs.end(), x);
            const std::size_t j = static_cast<std::size_t>(it - table_xs.begin());
            const double w = (x - table_xs[j - 1]) / (table_xs[j] - table_xs[j - 1]);
            return table_ys[j - 1] + w * (table_ys[j] - table_ys[j - 1]);
        }
    }
    return 0.0;
}

std::vector<double> PayoffSpec::values(const SpaceTimeGrid& grid) const {
    std::vector<double> out(grid.n_space);
    for (std::size_t j = 0; j < grid.n_space; ++j) out[j] = (*this)(grid.x(j));
    return out;
}

std::vector<double> build_gamma_antiderivative(const SpaceTimeGrid& grid,
                                               std::span<const double> gamma_bound) {
    if (gamma_bound.size() != grid.n_space)
        throw LengthMismatch("build_gamma_antiderivative: length != n_space");
    for (double g : gamma_bound)
        if (!std::isfinite(g))
            throw NonFiniteGamma("build_gamma_antiderivative: infinite gamma bound; "
                                 "face_lift short-circuits to g");
    const double dx = grid.dx();
    std::vector<double> slope(grid.n_space), out(grid.n_space);
    slope[0] = 0.0;
    out[0] = 0.0;
    for (std::size_t j = 1; j < grid.n_space; ++j) {
        slope[j] = slope[j - 1] + 0.5 * dx * (gamma_bound[j - 1] + gamma_bound[j]);
        out[j] = out[j - 1] + 0.5 * dx * (slope[j - 1] + slope[j]);
    }
    return out;
}

FaceliftResult face_lift_values(std::span<const double> g_values,
                                std::span<const double> gamma_bound,
                                const SpaceTimeGrid& grid) {
    FaceliftResult res;
    res.g_values.assign(g_values.begin(), g_values.end());
    res.gamma_bound_used.assign(gamma_bound.begin(), gamma_bound.end());

    const bool finite = std::all_of(gamma_bound.begin(), gamma_bound.end(),
                                    [](double g) { return std::isfinite(g); });
    if (!finite) {
        res.g_hat_values = res.g_values;
    } else {
        const auto gamma_anti = build_gamma_antiderivative(grid, gamma_bound);
        std::vector<double> xs(grid.n_space), shifted(grid.n_space);
        for (std::size_t j = 0; j < grid.n_space; ++j) {
            xs[j] = grid.x(j);
            shifted[j] = g_values[j] - gamma_anti[j];
        }
        auto env = upper_concave_envelope(xs, shifted);
        res.g_hat_values.resize(grid.n_space);
        // re-adding the gauge can round an ulp below g; clamp to keep the
        // majorant property exact
        for (std::size_t j = 0; j < grid.n_space; ++j)
            res.g_hat_values[j] = std::max(env[j] + gamma_anti[j], res.g_values[j]);
    }

    res.contact_set.resize(grid.n_space);
    for (std::size_t j = 0; j < grid.n_space; ++j) {
        const double tol = 1e-9 * (1.0 + std::abs(res.g_values[j]));
        res.contact_set[j] = res.g_hat_values[j] <= res.g_values[j] + tol ? 1 : 0;
    }
    return res;
}

FaceliftResult face_lift(const PayoffSpec& payoff, const ImpactModel& model,
                         const SpaceTimeGrid& grid) {
    std::vector<double> gamma(grid.n_space);
    for (std::size_t j = 0; j < grid.n_space; ++j)
        gamma[j] = model.bar_gamma(grid.t_end, grid.x(j));
    return face_lift_values(payoff.values(grid), gamma, grid);
}

FaceliftResult face_lift_eps(const PayoffSpec& payoff, const ImpactModel& model,
                             const SpaceTimeGrid& grid, double eps) {
    if (!(eps > 0.0)) throw DomainViolation("face_lift_eps: eps must be > 0");
    std::vector<double> gamma(grid.n_space);
    for (std::size_t j = 0; j < grid.n_space; ++j)
        gamma[j] = model.gamma_for_f_level(grid.t_end, grid.x(j), 1.0 / eps);
    return face_lift_values(payoff.values(grid), gamma, grid);
}

}  // namespace impact
