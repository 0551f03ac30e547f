#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "impact/errors.hpp"
#include "impact/grid.hpp"
#include "impact/numerics.hpp"
#include "impact/parallel.hpp"
#include "impact/rng.hpp"

using namespace impact;

namespace {

// quadratic-time upper hull used as the oracle for the monotone-chain envelope
std::vector<double> brute_force_envelope(const std::vector<double>& xs,
                                         const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    // envelope at k = max of ys[k] and every chord (i, j) covering k that
    // dominates ys on its whole span
    std::vector<double> env(ys);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            bool dominates = true;
            for (std::size_t k = i; k <= j && dominates; ++k) {
                const double w = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                if (ys[i] + w * (ys[j] - ys[i]) < ys[k] - 1e-12) dominates = false;
            }
            if (!dominates) continue;
            for (std::size_t k = i; k <= j; ++k) {
                const double w = (xs[k] - xs[i]) / (xs[j] - xs[i]);
                env[k] = std::max(env[k], ys[i] + w * (ys[j] - ys[i]));
            }
        }
    return env;
}

std::vector<double> mat_vec(const TriDiagSystem& s, const std::vector<double>& u) {
    const std::size_t n = u.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = s.diag[i] * u[i];
        if (i > 0) out[i] += s.lower[i] * u[i - 1];
        if (i + 1 < n) out[i] += s.upper[i] * u[i + 1];
    }
    return out;
}

}  // namespace

TEST_CASE("grid bookkeeping") {
    SpaceTimeGrid g(0.0, 2.0, 201, 0.0, 1.0, 100);
    CHECK(g.dx() == doctest::Approx(0.01));
    CHECK(g.dt() == doctest::Approx(0.01));
    CHECK(g.x(0) == 0.0);
    CHECK(g.x(200) == doctest::Approx(2.0));
    CHECK(g.at(1, 2) == 203);
    CHECK(g.surface_size() == 101 * 201);
    CHECK_THROWS_AS(SpaceTimeGrid(1.0, 0.0, 201, 0.0, 1.0, 100), std::invalid_argument);
    CHECK_THROWS_AS(SpaceTimeGrid(0.0, 1.0, 2, 0.0, 1.0, 100), std::invalid_argument);
}

TEST_CASE("second_diff") {
    SpaceTimeGrid g(0.0, 1.0, 11, 0.0, 1.0, 1);

    SUBCASE("constant -> zeros") {
        std::vector<double> v(11, 3.0);
        for (double d : second_diff(v, g)) CHECK(d == 0.0);
    }
    SUBCASE("quadratic exact") {
        std::vector<double> v(11);
        for (int j = 0; j < 11; ++j) v[j] = g.x(j) * g.x(j);
        const auto d = second_diff(v, g);
        for (double dd : d) CHECK(dd == doctest::Approx(2.0).epsilon(1e-10));
    }
    SUBCASE("sine O(dx^2)") {
        SpaceTimeGrid fine(0.0, 3.0, 301, 0.0, 1.0, 1);
        std::vector<double> v(301);
        for (int j = 0; j < 301; ++j) v[j] = std::sin(fine.x(j));
        const auto d = second_diff(v, fine);
        for (int j = 1; j < 300; ++j)
            CHECK(std::abs(d[j] + std::sin(fine.x(j))) < 1e-4);
    }
    SUBCASE("length mismatch") {
        std::vector<double> v(7, 0.0);
        CHECK_THROWS_AS(second_diff(v, g), LengthMismatch);
    }
    SUBCASE("endpoints copy nearest interior") {
        std::vector<double> v{0.0, 1.0, 4.0, 9.0, 16.0};
        const auto d = second_diff(v, 1.0);
        CHECK(d[0] == d[1]);
        CHECK(d[4] == d[3]);
    }
}

TEST_CASE("first_diff") {
    std::vector<double> v{0.0, 1.0, 4.0, 9.0, 16.0};  // x^2 on dx=1
    const auto d = first_diff(v, 1.0);
    CHECK(d[1] == doctest::Approx(2.0));  // central, exact on quadratics
    CHECK(d[2] == doctest::Approx(4.0));
    CHECK(d[3] == doctest::Approx(6.0));
    CHECK(d[0] == doctest::Approx(1.0));  // one-sided
    CHECK(d[4] == doctest::Approx(7.0));
}

TEST_CASE("solve_tridiag") {
    SUBCASE("identity") {
        TriDiagSystem s;
        s.lower = {0, 0, 0};
        s.diag = {1, 1, 1};
        s.upper = {0, 0, 0};
        s.rhs = {4.0, -2.0, 7.5};
        const auto u = solve_tridiag(s);
        CHECK(u == s.rhs);
    }
    SUBCASE("2x2 symmetric") {
        TriDiagSystem s;
        s.lower = {0, 1};
        s.diag = {2, 2};
        s.upper = {1, 0};
        s.rhs = {3, 3};
        const auto u = solve_tridiag(s);
        CHECK(u[0] == doctest::Approx(1.0));
        CHECK(u[1] == doctest::Approx(1.0));
    }
    SUBCASE("discrete laplacian with quadratic solution") {
        const std::size_t n = 41;
        const double dx = 0.05;
        std::vector<double> exact(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) * dx;
            exact[i] = x * x - 3.0 * x + 1.0;
        }
        TriDiagSystem s;
        s.lower.assign(n, -1.0 / (dx * dx));
        s.upper.assign(n, -1.0 / (dx * dx));
        s.diag.assign(n, 2.0 / (dx * dx) + 1.0);
        s.lower[0] = 0.0;
        s.upper[n - 1] = 0.0;
        // boundary rows: identity
        s.diag[0] = s.diag[n - 1] = 1.0;
        s.upper[0] = s.lower[n - 1] = 0.0;
        s.rhs = mat_vec(s, exact);
        const auto u = solve_tridiag(s);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(u[i] == doctest::Approx(exact[i]).epsilon(1e-11));
    }
    SUBCASE("random dominant round trip") {
        std::mt19937 gen(11);
        std::uniform_real_distribution<double> off(-1.0, 1.0);
        for (int rep = 0; rep < 20; ++rep) {
            const std::size_t n = 30;
            TriDiagSystem s;
            s.lower.resize(n);
            s.diag.resize(n);
            s.upper.resize(n);
            std::vector<double> exact(n);
            for (std::size_t i = 0; i < n; ++i) {
                s.lower[i] = i == 0 ? 0.0 : off(gen);
                s.upper[i] = i == n - 1 ? 0.0 : off(gen);
                s.diag[i] = 3.0 + off(gen);  // dominant
                exact[i] = off(gen);
            }
            s.rhs = mat_vec(s, exact);
            const auto u = solve_tridiag(s);
            double rhs_norm = 0.0, res_norm = 0.0;
            const auto back = mat_vec(s, u);
            for (std::size_t i = 0; i < n; ++i) {
                rhs_norm = std::max(rhs_norm, std::abs(s.rhs[i]));
                res_norm = std::max(res_norm, std::abs(back[i] - s.rhs[i]));
            }
            CHECK(res_norm <= 1e-12 * (1.0 + rhs_norm));
        }
    }
    SUBCASE("singular pivot") {
        TriDiagSystem s;
        s.lower = {0, 0};
        s.diag = {0.0, 1.0};
        s.upper = {0, 0};
        s.rhs = {1, 1};
        CHECK_THROWS_AS(solve_tridiag(s), SingularSystem);
    }
}

TEST_CASE("upper_concave_envelope") {
    SUBCASE("concave input unchanged") {
        std::vector<double> xs, ys;
        for (int j = 0; j <= 100; ++j) {
            const double x = -1.0 + 0.02 * j;
            xs.push_back(x);
            ys.push_back(-x * x);
        }
        const auto env = upper_concave_envelope(xs, ys);
        for (int j = 0; j <= 100; ++j) CHECK(env[j] == doctest::Approx(ys[j]).epsilon(1e-12));
    }
    SUBCASE("|x| gives the chord") {
        std::vector<double> xs, ys;
        for (int j = 0; j <= 100; ++j) {
            const double x = -1.0 + 0.02 * j;
            xs.push_back(x);
            ys.push_back(std::abs(x));
        }
        const auto env = upper_concave_envelope(xs, ys);
        for (int j = 0; j <= 100; ++j) CHECK(env[j] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("call payoff vs brute-force hull") {
        std::vector<double> xs, ys;
        for (int j = 0; j <= 200; ++j) {
            const double x = 0.01 * j;
            xs.push_back(x);
            ys.push_back(std::max(x - 1.0, 0.0));
        }
        const auto env = upper_concave_envelope(xs, ys);
        const auto oracle = brute_force_envelope(xs, ys);
        for (int j = 0; j <= 200; ++j) CHECK(env[j] == doctest::Approx(oracle[j]).epsilon(1e-12));
        // chord x/2 over [0,2]
        for (int j = 0; j <= 200; ++j) CHECK(env[j] == doctest::Approx(xs[j] / 2.0).epsilon(1e-12));
    }
    SUBCASE("random data vs brute-force hull") {
        std::mt19937 gen(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int rep = 0; rep < 10; ++rep) {
            std::vector<double> xs, ys;
            for (int j = 0; j < 60; ++j) {
                xs.push_back(0.1 * j);
                ys.push_back(u(gen));
            }
            const auto env = upper_concave_envelope(xs, ys);
            const auto oracle = brute_force_envelope(xs, ys);
            for (int j = 0; j < 60; ++j)
                CHECK(env[j] == doctest::Approx(oracle[j]).epsilon(1e-10));
        }
    }
    SUBCASE("idempotence, majorant, discrete concavity") {
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> xs, ys;
        for (int j = 0; j < 400; ++j) {
            xs.push_back(0.01 * j);
            ys.push_back(u(gen));
        }
        const auto env = upper_concave_envelope(xs, ys);
        const auto env2 = upper_concave_envelope(xs, env);
        for (int j = 0; j < 400; ++j) {
            CHECK(env2[j] == env[j]);   // exact idempotence
            CHECK(env[j] >= ys[j]);
        }
        for (int j = 1; j + 1 < 400; ++j)
            CHECK(env[j + 1] - 2.0 * env[j] + env[j - 1] <= 1e-9);
    }
    SUBCASE("minimality against random concave majorants") {
        std::vector<double> xs, ys;
        for (int j = 0; j <= 100; ++j) {
            xs.push_back(0.02 * j);
            ys.push_back(std::max(xs[j] - 1.0, 0.0));
        }
        const auto env = upper_concave_envelope(xs, ys);
        std::mt19937 gen(13);
        std::uniform_real_distribution<double> a_dist(0.0, 2.0);
        for (int rep = 0; rep < 100; ++rep) {
            // concave majorant: h(x) = c + m x - q x^2 lifted until >= ys
            const double m = a_dist(gen) - 0.5, q = 0.5 * a_dist(gen);
            double lift = -1e300;
            for (int j = 0; j <= 100; ++j)
                lift = std::max(lift, ys[j] - (m * xs[j] - q * xs[j] * xs[j]));
            for (int j = 0; j <= 100; ++j) {
                const double h = lift + m * xs[j] - q * xs[j] * xs[j];
                CHECK(h >= env[j] - 1e-9);
            }
        }
    }
    SUBCASE("unsorted input") {
        std::vector<double> xs{0.0, 2.0, 1.0}, ys{0.0, 0.0, 0.0};
        CHECK_THROWS_AS(upper_concave_envelope(xs, ys), UnsortedInput);
    }
}

TEST_CASE("interpolation") {
    SpaceTimeGrid g(0.0, 1.0, 11, 0.0, 1.0, 2);
    std::vector<double> v(11);
    for (int j = 0; j < 11; ++j) v[j] = 2.0 * g.x(j) + 1.0;

    SUBCASE("nodes and midpoints") {
        CHECK(interp_linear(g, v, g.x(4)) == doctest::Approx(v[4]));
        CHECK(interp_linear(g, v, 0.45) == doctest::Approx(1.9));
    }
    SUBCASE("clamp counting") {
        ClampStats c;
        CHECK(interp_linear(g, v, -0.5, &c) == doctest::Approx(v[0]));
        CHECK(interp_linear(g, v, 1.5, &c) == doctest::Approx(v[10]));
        CHECK(c.below == 1);
        CHECK(c.above == 1);
    }
    SUBCASE("bilinear exact on affine surfaces") {
        std::vector<double> surf(g.surface_size());
        for (std::size_t i = 0; i <= g.n_time; ++i)
            for (std::size_t j = 0; j < g.n_space; ++j)
                surf[g.at(i, j)] = 3.0 * g.t(i) - 2.0 * g.x(j) + 0.5;
        CHECK(interp_bilinear(g, surf, 0.25, 0.33) == doctest::Approx(3.0 * 0.25 - 2.0 * 0.33 + 0.5));
        CHECK(interp_bilinear(g, surf, 1.0, 1.0) == doctest::Approx(surf[g.at(2, 10)]));
    }
}

TEST_CASE("pairwise sum and parallel determinism") {
    std::vector<double> data(100000);
    PathRng rng(3, 0);
    for (auto& d : data) d = rng.uniform() - 0.5;
    const double s1 = pairwise_sum(data);
    const double s2 = pairwise_sum(data);
    CHECK(s1 == s2);

    std::vector<double> out(1000);
    parallel_for(0, 1000, [&](std::size_t i) { out[i] = static_cast<double>(i) * 0.5; });
    for (std::size_t i = 0; i < 1000; ++i) CHECK(out[i] == static_cast<double>(i) * 0.5);
}

TEST_CASE("rng streams and normal inverse") {
    PathRng a(42, 0), b(42, 0), c(42, 1);
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.next_u64() != c.next_u64());

    // inverse CDF round trip against erfc
    for (double p : {1e-10, 1e-4, 0.02, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-10}) {
        const double x = PathRng::inverse_normal_cdf(p);
        const double back = 0.5 * std::erfc(-x / std::sqrt(2.0));
        CHECK(back == doctest::Approx(p).epsilon(1e-9));
    }

    // moments of 1e6 draws
    PathRng rng(7, 3);
    const std::size_t n = 1000000;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z = rng.normal();
        m1 += z;
        m2 += z * z;
    }
    m1 /= static_cast<double>(n);
    m2 /= static_cast<double>(n);
    CHECK(std::abs(m1) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(m2 == doctest::Approx(1.0).epsilon(5e-3));
}
