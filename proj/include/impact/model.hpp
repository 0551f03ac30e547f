#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "impact/grid.hpp"

namespace impact {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Impact below this level is treated as the impact-free limit: the Fenchel
/// penalty degenerates to a hard constraint pinning the control to sigma0.
inline constexpr double kImpactFreeThreshold = 1e-12;

struct DiagnosticEntry {
    std::string check;
    double t = 0.0, x = 0.0, z = 0.0;
    double value = 0.0;
    std::string detail;
};

struct DiagnosticReport {
    bool all_passed = true;
    std::size_t checks_run = 0;
    bool gamma_finite = true;
    std::vector<DiagnosticEntry> violations;
};

/// Coefficient bundle for the abstract impact model. Every consumer reads the
/// coefficients exclusively through this interface. The BoLoZo instance
/// (sigma = sigma0/(1 - f z), gamma bound 1/f) carries closed forms for the
/// whole convex-duality machinery; generic models fall back to numeric
/// transforms on a z-grid.
class ImpactModel {
public:
    using VolSurface = std::function<double(double /*t*/, double /*x*/)>;
    using ImpactFn = std::function<double(double /*x*/)>;
    using DriftFn = std::function<double(double /*t*/, double /*x*/,
                                         double /*z*/, double /*b*/)>;
    using BarF = std::function<double(double /*t*/, double /*x*/, double /*z*/)>;

    /// BoLoZo instance with closed forms.
    static ImpactModel bolozo(VolSurface sigma0, ImpactFn f, double epsilon = 1.0,
                              DriftFn drift = nullptr);
    static ImpactModel bolozo_const(double sigma0, double f, double epsilon = 1.0);

    /// Generic model from raw coefficients and a bar-F surface. Fenchel
    /// transforms are computed numerically.
    static ImpactModel generic(VolSurface sigma0, ImpactFn f, BarF bar_f,
                               double epsilon = 1.0);

    double epsilon() const { return epsilon_; }
    bool has_closed_forms() const { return closed_form_; }
    bool impact_free_at(double x) const { return f_eff(x) < kImpactFreeThreshold; }

    double sigma0(double t, double x) const { return base_vol_(t, x); }
    /// Effective impact level: epsilon * f(x).
    double f_eff(double x) const { return epsilon_ * impact_(x); }
    double drift(double t, double x, double z, double b) const {
        return drift_ ? drift_(t, x, z, b) : 0.0;
    }

    /// Impacted volatility sigma0/(1 - f z). Throws DomainViolation when
    /// f(x) z >= 1.
    double sigma(double t, double x, double z) const;

    /// Running-cost term F; +inf sentinel outside the domain.
    double big_f(double t, double x, double z) const;

    /// Pricing nonlinearity bar F = 1/2 sigma^2 z - F. Throws DomainViolation
    /// at or beyond the gamma bound.
    double bar_f(double t, double x, double z) const;

    /// Gamma bound; +inf sentinel when f(x) = 0.
    double bar_gamma(double t, double x) const;

    double dz_bar_f(double t, double x, double z) const;
    /// lambda_2 = d^2/dz^2 bar F at z = 0 (sigma0^2 f for BoLoZo).
    double d2z_bar_f0(double t, double x) const;

    /// Fenchel conjugate bar F*(t, x, s^2). For BoLoZo: (s - sigma0)^2/(2 f);
    /// in the impact-free limit 0 at s = sigma0 and +inf otherwise. Generic
    /// models take a numeric supremum over a z-grid with golden-section
    /// refinement of the argmax.
    double fenchel_star(double t, double x, double s) const;

    /// Optimal Markov control (2 dz bar F)^(1/2); equals sigma(t, x, z) for
    /// BoLoZo.
    double optimal_vol(double t, double x, double z) const;

    /// Restricted supremum over s_grid of 1/2 s^2 z - bar F*(t, x, s^2).
    double fenchel_reconstruct(double t, double x, double z,
                               std::span<const double> s_grid) const;

    /// Gamma cap used to keep evaluations strictly inside the domain:
    /// bar_gamma - delta_cap, with delta_cap = delta_cap_rel * bar_gamma.
    double gamma_cap(double t, double x) const;
    double delta_cap_rel = 1e-3;

    /// F-level cut: largest z with F(t, x, z) <= level (bisection; closed
    /// form for BoLoZo). +inf when the model is impact-free at x.
    double gamma_for_f_level(double t, double x, double level) const;

    /// Scaled member of the small-impact family: f -> scale * f_eff.
    ImpactModel scaled(double scale) const;

    // Numeric-transform knobs (generic models only).
    std::size_t fenchel_grid_size = 4096;
    double fenchel_z_span = 64.0;

private:
    ImpactModel() = default;

    VolSurface base_vol_;
    ImpactFn impact_;
    DriftFn drift_;
    BarF bar_f_override_;
    double epsilon_ = 1.0;
    bool closed_form_ = true;
};

/// Per-lattice-point diagnostics: convexity of z -> bar F, ellipticity
/// dz bar F > 0, sigma > 0, bar F(.,0) = 0. Never aborts.
DiagnosticReport check_assumptions(const ImpactModel& model, const SpaceTimeGrid& grid,
                                   std::span<const double> z_samples);

}  // namespace impact
