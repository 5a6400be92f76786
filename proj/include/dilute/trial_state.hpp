#pragma once

// Generalized Dyson trial state Phi_N = prod_p F_p for pair potentials with
// attractive parts. F_p looks at every earlier particle near x_p, not just
// the nearest one, so that the amplitude stays continuous when the truncated
// scattering profile f is not monotone.
//
// Particle indices are zero-based: F_0 = 1 and F_p depends on x_0 .. x_p.

#include "dilute/error.hpp"
#include "dilute/potentials.hpp"
#include "dilute/scattering.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace dilute {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& x, const Vec3& y) { return {x[0] + y[0], x[1] + y[1], x[2] + y[2]}; }
inline Vec3 operator-(const Vec3& x, const Vec3& y) { return {x[0] - y[0], x[1] - y[1], x[2] - y[2]}; }
inline Vec3 operator*(double s, const Vec3& x) { return {s * x[0], s * x[1], s * x[2]}; }
inline double dot(const Vec3& x, const Vec3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; }
inline double norm(const Vec3& x) { return std::sqrt(dot(x, x)); }

/// N particles in the periodic cube [0, L)^3. Distances use the minimum image.
class ParticleConfiguration {
public:
    ParticleConfiguration(double L, std::vector<Vec3> positions) : L_(L), x_(std::move(positions)) {
        require(std::isfinite(L) && L > 0.0, "box side must be positive");
        for (auto& p : x_) p = wrap(p);
    }

    std::size_t size() const noexcept { return x_.size(); }
    double box() const noexcept { return L_; }
    const Vec3& operator[](std::size_t i) const { return x_[i]; }
    const std::vector<Vec3>& positions() const noexcept { return x_; }

    void move_to(std::size_t i, const Vec3& position) { x_[i] = wrap(position); }

    /// Minimum-image displacement x_i - x_j.
    Vec3 displacement(std::size_t i, std::size_t j) const {
        Vec3 d = x_[i] - x_[j];
        for (double& c : d) c -= L_ * std::nearbyint(c / L_);
        return d;
    }

    double distance(std::size_t i, std::size_t j) const { return norm(displacement(i, j)); }

    /// Minimum-image displacement y - x_j for an arbitrary point y.
    Vec3 displacement_from(const Vec3& y, std::size_t j) const {
        Vec3 d = y - x_[j];
        for (double& c : d) c -= L_ * std::nearbyint(c / L_);
        return d;
    }

    double distance_from(const Vec3& y, std::size_t j) const { return norm(displacement_from(y, j)); }

private:
    Vec3 wrap(Vec3 p) const {
        for (double& c : p) {
            c -= L_ * std::floor(c / L_);
            if (c >= L_) c = 0.0;
        }
        return p;
    }

    double L_;
    std::vector<Vec3> x_;
};

/// Constants and radial functions of the trial state.
///
/// With Y = ((4 pi / 3) a^3 rho)^(1/4) and b = a / Y,
///   f(r) = f_a(r) / f_a(b) for r <= b and 1 beyond, where f_a is the
///   normalized zero-energy solution of the interaction;
///   T(r) = 1 up to the plateau radius, (1/r - 1/b) / (1/plateau - 1/b) up to
///   b, and 0 beyond.
/// The plateau radius is 2 R_tilde whenever b > max(2 R0, 4a). At higher
/// densities it is pulled in to (R_tilde + b) / 2 so that T stays continuous
/// and equal to 1 just outside R_tilde; standing_assumption() reports which
/// case applies.
class TrialParams {
public:
    double a() const noexcept { return a_; }
    double Y_up() const noexcept { return Y_; }
    double b() const noexcept { return b_; }
    double R_tilde() const noexcept { return R_tilde_; }
    double plateau() const noexcept { return plateau_; }
    double M() const noexcept { return M_; }
    double rho() const noexcept { return rho_; }
    double L() const noexcept { return L_; }
    std::size_t N() const noexcept { return N_; }
    /// Support radius of the interaction (R0 a in unit-scattering-length terms).
    double support() const noexcept { return support_; }
    bool standing_assumption() const noexcept { return standing_; }
    bool is_free() const noexcept { return b_ == 0.0; }

    double f(double r) const {
        if (r > b_ || b_ == 0.0) return 1.0;
        if (r > support_) return (1.0 - a_ / r) * inv_fab_;
        return core(r, false);
    }

    double df(double r) const {
        if (r > b_ || b_ == 0.0) return 0.0;
        if (r > support_) return a_ / (r * r) * inv_fab_;
        return core(r, true);
    }

    double T(double r) const {
        if (b_ <= 0.0 || r >= b_) return 0.0;
        if (r <= plateau_) return 1.0;
        return (1.0 / r - 1.0 / b_) / (1.0 / plateau_ - 1.0 / b_);
    }

    double dT(double r) const {
        if (b_ <= 0.0 || r >= b_ || r <= plateau_) return 0.0;
        return -1.0 / (r * r * (1.0 / plateau_ - 1.0 / b_));
    }

    /// Core tabulation of f on the uniform grid over [0, support()].
    std::size_t core_points() const noexcept { return core_f_.size(); }

private:
    friend TrialParams build_trial(const RadialPotential&, double, std::size_t, double, std::size_t);
    friend TrialParams free_trial(double, std::size_t, double);

    // Cubic Hermite interpolation of (f, f') between table nodes; df is the
    // exact derivative of the interpolant so f and f' stay consistent.
    double core(double r, bool derivative) const {
        const double s = r / core_h_;
        std::size_t i = static_cast<std::size_t>(s);
        if (i + 1 >= core_f_.size()) i = core_f_.size() - 2;
        const double t = s - static_cast<double>(i);
        const double f0 = core_f_[i], f1 = core_f_[i + 1];
        const double m0 = core_h_ * core_df_[i], m1 = core_h_ * core_df_[i + 1];
        if (derivative) {
            const double t2 = t * t;
            return ((6.0 * t2 - 6.0 * t) * (f0 - f1) + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (3.0 * t2 - 2.0 * t) * m1) /
                   core_h_;
        }
        const double t2 = t * t, t3 = t2 * t;
        return (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * f1 +
               (t3 - t2) * m1;
    }

    // Largest value of the Hermite interpolant over the whole table.
    double core_max() const {
        double best = core_f_.front();
        for (std::size_t i = 0; i + 1 < core_f_.size(); ++i) {
            const double f0 = core_f_[i], f1 = core_f_[i + 1];
            const double m0 = core_h_ * core_df_[i], m1 = core_h_ * core_df_[i + 1];
            best = std::max(best, f1);
            // p'(t) = A t^2 + B t + C on [0, 1]
            const double A = 6.0 * f0 + 3.0 * m0 - 6.0 * f1 + 3.0 * m1;
            const double B = -6.0 * f0 - 4.0 * m0 + 6.0 * f1 - 2.0 * m1;
            const double C = m0;
            std::array<double, 2> roots{-1.0, -1.0};
            if (std::abs(A) < 1e-300) {
                if (B != 0.0) roots[0] = -C / B;
            } else {
                const double disc = B * B - 4.0 * A * C;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    roots = {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)};
                }
            }
            for (double t : roots) {
                if (t > 0.0 && t < 1.0) best = std::max(best, core((static_cast<double>(i) + t) * core_h_, false));
            }
        }
        return best;
    }

    double a_ = 0.0;
    double Y_ = 0.0;
    double b_ = 0.0;
    double R_tilde_ = 0.0;
    double plateau_ = 0.0;
    double M_ = 1.0;
    double rho_ = 0.0;
    double L_ = 0.0;
    std::size_t N_ = 0;
    double support_ = 0.0;
    double inv_fab_ = 1.0;
    bool standing_ = true;
    double core_h_ = 1.0;
    std::vector<double> core_f_;
    std::vector<double> core_df_;
};

/// Trial state of the zero interaction: f = 1 and F_p = 1 everywhere.
inline TrialParams free_trial(double rho, std::size_t N, double L) {
    require(rho > 0.0 && N >= 1 && L > 0.0, "free trial needs rho > 0, N >= 1, L > 0");
    TrialParams p;
    p.rho_ = rho;
    p.N_ = N;
    p.L_ = L;
    return p;
}

inline constexpr std::size_t default_core_steps = 20000;

/// Builds the trial constants for the interaction v at density rho in a box
/// of side L. The scattering length a is computed from v. The zero potential
/// yields free_trial.
inline TrialParams build_trial(const RadialPotential& v, double rho, std::size_t N, double L,
                               std::size_t core_steps = default_core_steps) {
    require(std::isfinite(rho) && rho > 0.0, "density must be positive");
    require(N >= 1, "need at least one particle");
    require(std::isfinite(L) && L > 0.0, "box side must be positive");
    require(core_steps >= 1000 && core_steps % 2 == 0, "core_steps must be even and >= 1000");
    if (v.is_zero()) return free_trial(rho, N, L);

    const double support = v.R0();
    const auto sol = solve_zero_energy(v, 2.0 * support, core_steps);
    const double a = sol.a;
    if (!(a > 0.0)) fail(ErrorCode::InvalidArgument, "the trial state needs a positive scattering length");

    const double gas = 4.0 * std::numbers::pi / 3.0 * a * a * a * rho;
    require(gas <= 1.0, "(4 pi / 3) a^3 rho must not exceed 1");

    TrialParams p;
    p.a_ = a;
    p.rho_ = rho;
    p.N_ = N;
    p.L_ = L;
    p.support_ = support;
    p.Y_ = std::pow(gas, 0.25);
    p.b_ = a / p.Y_;
    p.R_tilde_ = std::max(support, 2.0 * a);
    if (!(p.b_ < 0.5 * L)) {
        std::ostringstream msg;
        msg << "b = " << p.b_ << " is not below L / 2 = " << 0.5 * L;
        fail(ErrorCode::BoxTooSmall, msg.str());
    }
    const double fab = 1.0 - a / p.b_; // b > R_tilde >= support, so the tail law applies
    if (!(p.b_ > p.R_tilde_) || !(fab > 0.0)) {
        std::ostringstream msg;
        msg << "b = " << p.b_ << " must exceed R_tilde = " << p.R_tilde_ << " with f_a(b) > 0";
        fail(ErrorCode::InvalidTruncation, msg.str());
    }
    p.inv_fab_ = 1.0 / fab;
    p.standing_ = p.b_ > std::max(2.0 * support, 4.0 * a);
    p.plateau_ = p.standing_ ? 2.0 * p.R_tilde_ : 0.5 * (p.R_tilde_ + p.b_);

    const std::size_t n_core = core_steps / 2 + 1; // grid node core_steps / 2 sits exactly at the support
    p.core_h_ = sol.step();
    p.core_f_.resize(n_core);
    p.core_df_.resize(n_core);
    for (std::size_t i = 0; i < n_core; ++i) {
        p.core_f_[i] = sol.f(i) * p.inv_fab_;
        p.core_df_[i] = sol.df(i) * p.inv_fab_;
    }
    p.M_ = std::max(1.0, p.core_max());
    return p;
}

enum class Regime { First, Inside, Outside, Mixed };

/// Neighbor statistics of particle p among the earlier particles j < p.
///
/// Inside: every earlier particle lies within R_tilde; Outside: none does;
/// Mixed: both kinds are present. r_p is the distance to the in-range
/// particle with the smallest f (ties to the smaller distance, then the
/// smaller index); R_p is the smallest out-of-range distance, or R_tilde when
/// there is none.
struct NeighborStats {
    std::size_t p = 0;
    Regime regime = Regime::First;
    std::optional<double> r_p;
    double R_p = 0.0;
    std::optional<std::size_t> i_p;
    std::optional<std::size_t> j_p;
    double f_r = 1.0; // f(r_p) when r_p exists
    double f_R = 1.0; // f(R_p)

    bool theta_in() const { return regime == Regime::Inside; }
    bool theta_out() const { return regime == Regime::Outside; }
    bool theta_minus() const { return regime == Regime::Mixed && f_R < f_r; }
    bool theta_plus() const { return regime == Regime::Mixed && !(f_R < f_r); }
};

/// Neighbor statistics of a point y against particles 0 .. count-1; the
/// result is labelled as particle p.
inline NeighborStats neighbor_stats_of(const ParticleConfiguration& config, const Vec3& y, std::size_t count,
                                       std::size_t p, const TrialParams& params) {
    NeighborStats s;
    s.p = p;
    if (count == 0) return s;

    const double Rt = params.R_tilde();
    bool any_in = false, any_out = false;
    double best_f = 0.0, best_d = 0.0, out_d = 0.0;
    std::size_t best_i = 0, out_j = 0;
    for (std::size_t j = 0; j < count; ++j) {
        const double d = config.distance_from(y, j);
        if (d <= Rt) {
            const double fd = params.f(d);
            if (!any_in || fd < best_f || (fd == best_f && d < best_d)) {
                best_f = fd;
                best_d = d;
                best_i = j;
            }
            any_in = true;
        } else {
            if (!any_out || d < out_d) {
                out_d = d;
                out_j = j;
            }
            any_out = true;
        }
    }
    if (any_in) {
        s.r_p = best_d;
        s.i_p = best_i;
        s.f_r = best_f;
    }
    if (any_out) {
        s.R_p = out_d;
        s.j_p = out_j;
    } else {
        s.R_p = Rt;
    }
    s.f_R = params.f(s.R_p);
    s.regime = any_in ? (any_out ? Regime::Mixed : Regime::Inside) : Regime::Outside;
    return s;
}

inline NeighborStats neighbor_stats(const ParticleConfiguration& config, std::size_t p, const TrialParams& params) {
    require(p < config.size(), "particle index out of range");
    return neighbor_stats_of(config, config[p], p, p, params);
}

inline double F_value(const NeighborStats& s, const TrialParams& params) {
    switch (s.regime) {
    case Regime::First: return 1.0;
    case Regime::Inside: return s.f_r;
    case Regime::Outside: return s.f_R;
    case Regime::Mixed: return s.f_r + params.T(s.R_p) * std::min(0.0, s.f_R - s.f_r);
    }
    return 1.0;
}

inline double evaluate_F_p(const ParticleConfiguration& config, std::size_t p, const TrialParams& params) {
    return F_value(neighbor_stats(config, p, params), params);
}

/// log Phi_N; -infinity when some F_p vanishes.
inline double log_psi(const ParticleConfiguration& config, const TrialParams& params) {
    double sum = 0.0;
    for (std::size_t p = 1; p < config.size(); ++p) {
        const double F = evaluate_F_p(config, p, params);
        if (!(F > 0.0)) return -std::numeric_limits<double>::infinity();
        sum += std::log(F);
    }
    return sum;
}

/// Contribution of F_p to grad log Phi: adds grad_k F_p / F_p to slot k for
/// k in {i_p, j_p, p}. Returns F_p.
inline double accumulate_gradient(const ParticleConfiguration& config, const NeighborStats& s,
                                  const TrialParams& params, std::vector<Vec3>& grad) {
    const double F = F_value(s, params);
    if (s.regime == Regime::First) return F;
    if (!(F > 0.0)) fail(ErrorCode::GradientAtZeroAmplitude, "F_p = 0 for p = " + std::to_string(s.p));

    const double T = params.T(s.R_p);
    // dF / dr_p and dF / dR_p on the active branch
    double dF_dr = 0.0, dF_dR = 0.0;
    if (s.regime == Regime::Inside) {
        dF_dr = params.df(*s.r_p);
    } else if (s.regime == Regime::Outside) {
        dF_dR = params.df(s.R_p);
    } else if (s.theta_minus()) {
        dF_dr = params.df(*s.r_p) * (1.0 - T);
        dF_dR = T * params.df(s.R_p) + params.dT(s.R_p) * (s.f_R - s.f_r);
    } else {
        dF_dr = params.df(*s.r_p);
    }

    Vec3 total{0.0, 0.0, 0.0};
    if (s.i_p && dF_dr != 0.0) {
        // grad of |x_i - x_p| with respect to x_i
        const Vec3 d = config.displacement(*s.i_p, s.p);
        const Vec3 g = (dF_dr / (*s.r_p * F)) * d;
        grad[*s.i_p] = grad[*s.i_p] + g;
        total = total + g;
    }
    if (s.j_p && dF_dR != 0.0) {
        const Vec3 d = config.displacement(*s.j_p, s.p);
        const Vec3 g = (dF_dR / (s.R_p * F)) * d;
        grad[*s.j_p] = grad[*s.j_p] + g;
        total = total + g;
    }
    grad[s.p] = grad[s.p] - total;
    return F;
}

/// grad_k log Phi_N for every particle k.
inline std::vector<Vec3> grad_log_psi(const ParticleConfiguration& config, const TrialParams& params) {
    std::vector<Vec3> grad(config.size(), Vec3{0.0, 0.0, 0.0});
    for (std::size_t p = 1; p < config.size(); ++p)
        accumulate_gradient(config, neighbor_stats(config, p, params), params, grad);
    return grad;
}

struct ErrorIntegrals {
    double K = 0.0;     // integral of |f'(|x|)| over R^3
    double L_int = 0.0; // integral of |T'(|x|)| over R^3
};

inline ErrorIntegrals error_integrals(const TrialParams& params) {
    ErrorIntegrals out;
    if (params.is_free()) return out;
    const double four_pi = 4.0 * std::numbers::pi;

    // core: 3-point Gauss-Legendre on every table interval
    static constexpr std::array<double, 3> node{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weight{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const std::size_t n = params.core_points();
    const double h = params.support() / static_cast<double>(n - 1);
    double core = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double mid = (static_cast<double>(i) + 0.5) * h;
        for (std::size_t k = 0; k < 3; ++k) {
            const double r = mid + 0.5 * h * node[k];
            core += 0.5 * h * weight[k] * std::abs(params.df(r)) * r * r;
        }
    }
    // tail: f' = (a / r^2) / f_a(b) on (support, b]
    const double tail = params.a() * (params.b() - params.support()) / (1.0 - params.a() / params.b());
    out.K = four_pi * (core + tail);

    // |T'| r^2 = 1 / (1/plateau - 1/b) on (plateau, b)
    const double s = params.plateau(), b = params.b();
    out.L_int = four_pi * (b - s) / (1.0 / s - 1.0 / b);
    return out;
}

} // namespace dilute
