#pragma once

#include <span>
#include <string>
#include <vector>

#include "impact/grid.hpp"
#include "impact/model.hpp"

namespace impact {

/// Terminal payoffs restricted to shapes that are lower-semicontinuous,
/// bounded from below and of linear growth on the upside.
struct PayoffSpec {
    enum class Kind { Call, Put, CallSpread, Digital, Table };

    Kind kind = Kind::Call;
    double k1 = 100.0;  // strike (lower strike for spreads)
    double k2 = 0.0;    // upper strike for spreads
    std::vector<double> table_xs, table_ys;

    static PayoffSpec call(double strike) { return {Kind::Call, strike, 0.0, {}, {}}; }
    static PayoffSpec put(double strike) { return {Kind::Put, strike, 0.0, {}, {}}; }
    static PayoffSpec call_spread(double lo, double hi) {
        return {Kind::CallSpread, lo, hi, {}, {}};
    }
    static PayoffSpec digital(double strike) { return {Kind::Digital, strike, 0.0, {}, {}}; }
    static PayoffSpec table(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    std::vector<double> values(const SpaceTimeGrid& grid) const;
};

struct FaceliftResult {
    std::vector<double> g_values;
    std::vector<double> g_hat_values;
    std::vector<char> contact_set;       // g_hat <= g + tol
    std::vector<double> gamma_bound_used;
};

/// Twice-integrated gamma bound: discrete second difference of the result
/// reproduces gamma_bound to O(dx^2). Normalized so value and slope vanish at
/// x_min; the envelope construction is invariant to this affine gauge.
std::vector<double> build_gamma_antiderivative(const SpaceTimeGrid& grid,
                                               std::span<const double> gamma_bound);

/// Face-lift (g - Gamma)^conc + Gamma with the terminal gamma bound of the
/// model; reduces to g when the bound is infinite.
FaceliftResult face_lift(const PayoffSpec& payoff, const ImpactModel& model,
                         const SpaceTimeGrid& grid);

/// Same construction on grid values of g with an explicit gamma bound.
FaceliftResult face_lift_values(std::span<const double> g_values,
                                std::span<const double> gamma_bound,
                                const SpaceTimeGrid& grid);

/// Tightened lift with the gamma bound replaced by the F-level cut
/// sup{z : F(T, x, z) <= 1/eps}.
FaceliftResult face_lift_eps(const PayoffSpec& payoff, const ImpactModel& model,
                             const SpaceTimeGrid& grid, double eps);

}  // namespace impact
