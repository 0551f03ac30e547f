#include "impact/model.hpp"

#include <algorithm>
#include <cmath>

#include "impact/errors.hpp"

namespace impact {

ImpactModel ImpactModel::bolozo(VolSurface sigma0, ImpactFn f, double epsilon,
                                DriftFn drift) {
    ImpactModel m;
    m.base_vol_ = std::move(sigma0);
    m.impact_ = std::move(f);
    m.drift_ = std::move(drift);
    m.epsilon_ = epsilon;
    m.closed_form_ = true;
    return m;
}

ImpactModel ImpactModel::bolozo_const(double sigma0, double f, double epsilon) {
    return bolozo([sigma0](double, double) { return sigma0; },
                  [f](double) { return f; }, epsilon);
}

ImpactModel ImpactModel::generic(VolSurface sigma0, ImpactFn f, BarF bar_f,
                                 double epsilon) {
    ImpactModel m;
    m.base_vol_ = std::move(sigma0);
    m.impact_ = std::move(f);
    m.bar_f_override_ = std::move(bar_f);
    m.epsilon_ = epsilon;
    m.closed_form_ = false;
    return m;
}

ImpactModel ImpactModel::scaled(double scale) const {
    ImpactModel m = *this;
    m.epsilon_ *= scale;
    return m;
}

double ImpactModel::sigma(double t, double x, double z) const {
    const double fz = f_eff(x) * z;
    if (fz >= 1.0) throw DomainViolation("sigma: f(x) z >= 1");
    return base_vol_(t, x) / (1.0 - fz);
}

double ImpactModel::big_f(double t, double x, double z) const {
    const double f = f_eff(x);
    if (f * z >= 1.0) return kInf;
    const double q = base_vol_(t, x) * z / (1.0 - f * z);
    return 0.5 * q * q * f;
}

double ImpactModel::bar_f(double t, double x, double z) const {
    if (z >= bar_gamma(t, x)) throw DomainViolation("bar_f: z >= bar_gamma");
    if (!closed_form_) return bar_f_override_(t, x, z);
    const double s0 = base_vol_(t, x);
    return 0.5 * s0 * s0 * z / (1.0 - f_eff(x) * z);
}

double ImpactModel::bar_gamma(double, double x) const {
    const double f = f_eff(x);
    return f < kImpactFreeThreshold ? kInf : 1.0 / f;
}

double ImpactModel::gamma_cap(double t, double x) const {
    const double g = bar_gamma(t, x);
    return std::isfinite(g) ? g * (1.0 - delta_cap_rel) : kInf;
}

double ImpactModel::dz_bar_f(double t, double x, double z) const {
    if (z >= bar_gamma(t, x)) throw DomainViolation("dz_bar_f: z >= bar_gamma");
    if (!closed_form_) {
        const double h = 1e-6 * (1.0 + std::abs(z));
        return (bar_f_override_(t, x, z + h) - bar_f_override_(t, x, z - h)) / (2.0 * h);
    }
    const double s0 = base_vol_(t, x);
    const double d = 1.0 - f_eff(x) * z;
    return 0.5 * s0 * s0 / (d * d);
}

double ImpactModel::d2z_bar_f0(double t, double x) const {
    if (!closed_form_) {
        const double h = 1e-4;
        return (bar_f_override_(t, x, h) - 2.0 * bar_f_override_(t, x, 0.0) +
                bar_f_override_(t, x, -h)) / (h * h);
    }
    const double s0 = base_vol_(t, x);
    return s0 * s0 * f_eff(x);
}

double ImpactModel::optimal_vol(double t, double x, double z) const {
    return std::sqrt(2.0 * dz_bar_f(t, x, z));
}

namespace {

// Golden-section maximization of a unimodal function on [lo, hi].
template <class Fn>
double golden_max(Fn&& fn, double lo, double hi, double tol) {
    constexpr double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = fn(c), fd = fn(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a);
            fc = fn(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a);
            fd = fn(d);
        }
    }
    return fc > fd ? fc : fd;
}

}  // namespace

double ImpactModel::fenchel_star(double t, double x, double s) const {
    const double s0 = base_vol_(t, x);
    const double f = f_eff(x);
    if (f < kImpactFreeThreshold)
        return s == s0 ? 0.0 : kInf;
    if (closed_form_) {
        const double d = s - s0;
        return 0.5 * d * d / f;
    }
    // sup over z in (-z_span, gamma_cap) of 1/2 s^2 z - bar F(z)
    const double zmax = std::min(gamma_cap(t, x), fenchel_z_span);
    const double zmin = -fenchel_z_span;
    const double v = 0.5 * s * s;
    double best = -kInf, best_z = zmin;
    const std::size_t n = fenchel_grid_size;
    for (std::size_t k = 0; k <= n; ++k) {
        const double z = zmin + (zmax - zmin) * static_cast<double>(k) / static_cast<double>(n);
        const double val = v * z - bar_f_override_(t, x, z);
        if (val > best) { best = val; best_z = z; }
    }
    const double h = (zmax - zmin) / static_cast<double>(n);
    const double lo = std::max(zmin, best_z - h);
    const double hi = std::min(zmax, best_z + h);
    return golden_max([&](double z) { return v * z - bar_f_override_(t, x, z); },
                      lo, hi, 1e-12 * (1.0 + std::abs(best_z)));
}

double ImpactModel::fenchel_reconstruct(double t, double x, double z,
                                        std::span<const double> s_grid) const {
    if (z >= bar_gamma(t, x))
        throw DomainViolation("fenchel_reconstruct: z >= bar_gamma");
    if (s_grid.empty()) throw LengthMismatch("fenchel_reconstruct: empty s_grid");
    double prev = -kInf;
    double best = -kInf;
    for (double s : s_grid) {
        if (s < prev || s < 0.0)
            throw UnsortedInput("fenchel_reconstruct: s_grid must be sorted, non-negative");
        prev = s;
        const double pen = fenchel_star(t, x, s);
        if (!std::isfinite(pen)) continue;
        best = std::max(best, 0.5 * s * s * z - pen);
    }
    return best;
}

double ImpactModel::gamma_for_f_level(double t, double x, double level) const {
    const double f = f_eff(x);
    if (f < kImpactFreeThreshold) return kInf;
    if (closed_form_) {
        // solve (sigma0 z / (1 - f z))^2 f / 2 = level for the positive root
        const double r = std::sqrt(2.0 * level / f);
        return r / (base_vol_(t, x) + f * r);
    }
    double lo = 0.0, hi = bar_gamma(t, x) * (1.0 - 1e-12);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (big_f(t, x, mid) <= level)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

DiagnosticReport check_assumptions(const ImpactModel& model, const SpaceTimeGrid& grid,
                                   std::span<const double> z_samples) {
    DiagnosticReport report;
    auto flag = [&](const std::string& check, double t, double x, double z,
                    double value, const std::string& detail) {
        report.all_passed = false;
        report.violations.push_back({check, t, x, z, value, detail});
    };
    constexpr double conv_tol = 1e-9;

    // coarse sub-lattice in (t, x); every z sample at each point
    const std::size_t nt = std::min<std::size_t>(grid.n_time, 8);
    const std::size_t nx = std::min<std::size_t>(grid.n_space - 1, 16);
    for (std::size_t it = 0; it <= nt; ++it) {
        const double t = grid.t_start + (grid.t_end - grid.t_start) * it / double(nt);
        for (std::size_t jx = 0; jx <= nx; ++jx) {
            const double x = grid.x_min + (grid.x_max - grid.x_min) * jx / double(nx);
            const double gbar = model.bar_gamma(t, x);
            if (!std::isfinite(gbar)) report.gamma_finite = false;

            ++report.checks_run;
            const double f0 = model.bar_f(t, x, 0.0);
            if (std::abs(f0) > 1e-12)
                flag("bar_f_zero", t, x, 0.0, f0, "bar F(.,0) != 0");

            for (double z : z_samples) {
                if (std::isfinite(gbar) && z >= model.gamma_cap(t, x)) continue;
                ++report.checks_run;
                const double s = model.sigma(t, x, z);
                if (!(s > 0.0)) flag("sigma_positive", t, x, z, s, "sigma <= 0");

                const double dz = model.dz_bar_f(t, x, z);
                if (!(dz > 0.0)) flag("ellipticity", t, x, z, dz, "dz bar F <= 0");

                const double h = 1e-3 * (1.0 + std::abs(z));
                if (!std::isfinite(gbar) || z + h < model.gamma_cap(t, x)) {
                    const double curv = model.bar_f(t, x, z + h) -
                                        2.0 * model.bar_f(t, x, z) +
                                        model.bar_f(t, x, z - h);
                    if (curv < -conv_tol * (1.0 + std::abs(model.bar_f(t, x, z))))
                        flag("convexity", t, x, z, curv / (h * h),
                             "discrete second difference of bar F negative");
                }
            }
        }
    }
    return report;
}

}  // namespace impact
