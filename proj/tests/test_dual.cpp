#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>
#include <vector>

#include "impact/dual.hpp"
#include "impact/errors.hpp"
#include "impact/facelift.hpp"
#include "impact/pde.hpp"

using namespace impact;

namespace {

const SpaceTimeGrid kGrid(95.0, 105.0, 801, 0.0, 1.0, 400);

struct Solved {
    ImpactModel model = ImpactModel::bolozo_const(0.2, 0.1);
    FaceliftResult lift;
    PdeSolution sol;
    Solved() {
        lift = face_lift(PayoffSpec::call(100.0), model, kGrid);
        sol = solve_hjb(model, lift.g_hat_values, kGrid);
    }
};

const Solved& solved() {
    static Solved s;
    return s;
}

}  // namespace

TEST_CASE("simulate_controlled_paths") {
    SUBCASE("zero control freezes the paths") {
        const auto batch = simulate_controlled_paths(ControlSpec::constant_vol(0.0), kGrid,
                                                     100.0, 500, 16, 1);
        for (double x : batch.terminal) CHECK(x == 100.0);
    }
    SUBCASE("martingale mean and Gaussian variance") {
        const std::size_t n = 200000;
        const auto batch = simulate_controlled_paths(ControlSpec::constant_vol(0.2), kGrid,
                                                     100.0, n, 50, 9);
        CHECK(std::abs(batch.terminal_mean - 100.0) <= 3.0 * batch.terminal_stderr);
        double var = 0.0;
        for (double x : batch.terminal) {
            const double d = x - batch.terminal_mean;
            var += d * d;
        }
        var /= static_cast<double>(n - 1);
        // stderr of the sample variance of a Gaussian: var * sqrt(2/(n-1))
        CHECK(std::abs(var - 0.04) <= 3.0 * 0.04 * std::sqrt(2.0 / (n - 1.0)));
    }
    SUBCASE("markov control stays within the field range") {
        const auto& s = solved();
        double lo = 1e300, hi = -1e300;
        for (double v : s.sol.control_field) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const auto batch = simulate_controlled_paths(ControlSpec::markov_from_pde(s.sol),
                                                     kGrid, 100.0, 2000, 100, 4);
        for (double m : batch.control_mean) {
            CHECK(m >= lo - 1e-12);
            CHECK(m <= hi + 1e-12);
        }
    }
    SUBCASE("table control") {
        std::vector<double> surf(kGrid.surface_size(), 0.3);
        const auto c = ControlSpec::table(kGrid, surf);
        CHECK(c(0.5, 100.0) == doctest::Approx(0.3));
        CHECK_THROWS_AS(ControlSpec::table(kGrid, std::vector<double>(7, 0.3)),
                        LengthMismatch);
    }
}

TEST_CASE("dual_value") {
    const auto& s = solved();
    const double pde_price = s.sol.price(100.0);

    SUBCASE("base volatility: zero penalty, lower bound") {
        const auto mc = dual_value(ControlSpec::constant_vol(0.2), s.lift.g_hat_values,
                                   s.model, kGrid, 100.0, 100000, 200, 11,
                                   s.lift.g_values);
        CHECK(mc.penalty_mean == 0.0);
        CHECK(mc.estimate <= pde_price + 3.0 * mc.stderr_);
    }
    SUBCASE("optimal markov control attains the price") {
        const auto mc = dual_value(ControlSpec::markov_from_pde(s.sol),
                                   s.lift.g_hat_values, s.model, kGrid, 100.0, 200000,
                                   400, 17, s.lift.g_values);
        CHECK(std::abs(mc.estimate - pde_price) <=
              3.0 * mc.stderr_ + 5.0 * kGrid.dx() * kGrid.dx());
        CHECK(mc.penalty_mean >= 0.0);
    }
    SUBCASE("random constant controls lower-bound the price") {
        std::mt19937 gen(3);
        std::uniform_real_distribution<double> u(0.05, 0.6);
        for (int rep = 0; rep < 10; ++rep) {
            const auto mc = dual_value(ControlSpec::constant_vol(u(gen)),
                                       s.lift.g_hat_values, s.model, kGrid, 100.0, 20000,
                                       100, 100 + rep);
            CHECK(mc.estimate <= pde_price + 3.0 * mc.stderr_);
        }
    }
    SUBCASE("both payoff variants agree under the optimal control") {
        const auto with_hat = dual_value(ControlSpec::markov_from_pde(s.sol),
                                         s.lift.g_hat_values, s.model, kGrid, 100.0,
                                         100000, 400, 23);
        const auto with_g = dual_value(ControlSpec::markov_from_pde(s.sol),
                                       s.lift.g_values, s.model, kGrid, 100.0, 100000,
                                       400, 23);
        const double combined = std::hypot(with_hat.stderr_, with_g.stderr_);
        CHECK(std::abs(with_hat.estimate - with_g.estimate) <= 3.0 * combined + 1e-6);
    }
    SUBCASE("unbounded penalty in the impact-free limit") {
        const auto m0 = ImpactModel::bolozo_const(0.2, 0.0);
        const auto mc = dual_value(ControlSpec::constant_vol(0.3), s.lift.g_hat_values,
                                   m0, kGrid, 100.0, 100, 10, 5);
        CHECK(mc.unbounded_penalty);
        CHECK(mc.estimate == -kInf);
        const auto ok = dual_value(ControlSpec::constant_vol(0.2), s.lift.g_hat_values,
                                   m0, kGrid, 100.0, 100, 10, 5);
        CHECK_FALSE(ok.unbounded_penalty);
    }
}

TEST_CASE("seed determinism across worker counts") {
    const auto& s = solved();
    setenv("IMPACT_HEDGE_THREADS", "1", 1);
    const auto a = dual_value(ControlSpec::markov_from_pde(s.sol), s.lift.g_hat_values,
                              s.model, kGrid, 100.0, 20000, 100, 31, s.lift.g_values);
    setenv("IMPACT_HEDGE_THREADS", "7", 1);
    const auto b = dual_value(ControlSpec::markov_from_pde(s.sol), s.lift.g_hat_values,
                              s.model, kGrid, 100.0, 20000, 100, 31, s.lift.g_values);
    setenv("IMPACT_HEDGE_THREADS", "1", 1);
    CHECK(a.estimate == b.estimate);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.penalty_mean == b.penalty_mean);
    CHECK(a.contact_fraction == b.contact_fraction);
}

TEST_CASE("dual_sweep") {
    const auto& s = solved();
    const double pde_price = s.sol.price(100.0);

    SUBCASE("singleton family reproduces dual_value") {
        std::vector<ControlSpec> controls{ControlSpec::constant_vol(0.2)};
        std::vector<std::string> labels{"base"};
        const auto table = dual_sweep(controls, labels, s.lift.g_hat_values, s.model,
                                      kGrid, 100.0, 20000, 100, 41, pde_price);
        const auto direct = dual_value(controls[0], s.lift.g_hat_values, s.model, kGrid,
                                       100.0, 20000, 100, 41);
        REQUIRE(table.rows.size() == 1);
        CHECK(table.rows[0].result.estimate == direct.estimate);
    }
    SUBCASE("family containing the markov control is won by it") {
        std::vector<ControlSpec> controls{ControlSpec::constant_vol(0.15),
                                          ControlSpec::markov_from_pde(s.sol),
                                          ControlSpec::constant_vol(0.25)};
        std::vector<std::string> labels{"c15", "markov", "c25"};
        const auto table = dual_sweep(controls, labels, s.lift.g_hat_values, s.model,
                                      kGrid, 100.0, 50000, 200, 43, pde_price);
        CHECK(table.rows[table.best_index].label == "markov");
        CHECK(std::abs(table.best_gap) <=
              3.0 * table.rows[table.best_index].result.stderr_ + 1e-3);
        for (const auto& row : table.rows)
            CHECK(row.result.estimate <= pde_price + 3.0 * row.result.stderr_);
    }
}

TEST_CASE("contact_diagnostic") {
    const auto& s = solved();

    SUBCASE("linear payoff: no lift, no gap") {
        const auto lin = PayoffSpec::table({95.0, 105.0}, {0.0, 10.0});
        const auto lift = face_lift(lin, s.model, kGrid);
        const auto mc = dual_value(ControlSpec::constant_vol(0.2), lift.g_hat_values,
                                   s.model, kGrid, 100.0, 5000, 50, 51, lift.g_values);
        CHECK(mc.contact_fraction == 0.0);
        CHECK(std::abs(mc.gap_mean) < 1e-12);
        CHECK(contact_diagnostic(mc).near_optimal);
    }
    SUBCASE("optimal control drives the gap to zero") {
        const auto mc = dual_value(ControlSpec::markov_from_pde(s.sol),
                                   s.lift.g_hat_values, s.model, kGrid, 100.0, 50000,
                                   400, 53, s.lift.g_values);
        const auto rep = contact_diagnostic(mc);
        // gap bounded by the maximal lift times the mass near the strike
        CHECK(rep.gap_mean <= 2.0 * 0.0125);
        CHECK(rep.near_optimal);
    }
    SUBCASE("suboptimal control is flagged, not asserted") {
        const auto mc = dual_value(ControlSpec::constant_vol(0.5), s.lift.g_hat_values,
                                   s.model, kGrid, 100.0, 20000, 100, 57,
                                   s.lift.g_values);
        const auto rep = contact_diagnostic(mc, 1e-6);
        CHECK(rep.contact_fraction > 0.0);
        CHECK_FALSE(rep.near_optimal);
    }
}
