#pragma once

// Zero-energy scattering: -Laplace f + v f / 2 = 0 in three dimensions,
// solved in reduced form u = r f, u'' = v u / 2, u(0) = 0, u'(0) = 1.
// Beyond the support u is linear, u = c (r - a), and a is the scattering
// length.

#include "dilute/error.hpp"
#include "dilute/potentials.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace dilute {

struct ScatteringSolution {
    std::vector<double> grid; // uniform, grid[0] = 0, grid.back() = r_max
    std::vector<double> u;    // reduced radial function r f(r)
    std::vector<double> du;   // u'(r)
    double a = 0.0;           // scattering length
    double tail_slope = 1.0;  // c in u = c (r - a) before any normalization
    double tail_residual = 0.0;
    double R0 = 0.0;
    bool f_infinity_normalized = false;

    double step() const { return grid[1] - grid[0]; }

    /// f = u / r on grid point i, with the r -> 0 limit u'(0).
    double f(std::size_t i) const { return grid[i] == 0.0 ? du[i] : u[i] / grid[i]; }

    /// f' = (u' - u / r) / r on grid point i; f'(0) = 0 since u''(0) = 0.
    double df(std::size_t i) const {
        const double r = grid[i];
        return r == 0.0 ? 0.0 : (du[i] - u[i] / r) / r;
    }
};

namespace detail {

// One classical RK4 step for (u, u') with v constant over the step.
inline void rk4_constant(double& u, double& du, double half_v, double h) {
    const double k1u = du, k1p = half_v * u;
    const double k2u = du + 0.5 * h * k1p, k2p = half_v * (u + 0.5 * h * k1u);
    const double k3u = du + 0.5 * h * k2p, k3p = half_v * (u + 0.5 * h * k2u);
    const double k4u = du + h * k3p, k4p = half_v * (u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    du += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
}

} // namespace detail

/// Integrates u'' = v u / 2 outward on a uniform grid with RK4. Steps that
/// straddle a segment boundary are split there, so every sub-step sees a
/// constant potential and the method keeps its fourth order.
///
/// The scattering length comes from a least-squares line through all grid
/// points with r > R0. Throws BoundStateSuspected if u has a node on
/// (0, r_max] or the tail does not grow (no positive zero-energy solution
/// exists), and DegenerateTail if the exterior is not linear to within
/// 1e-9 * max|u|.
inline ScatteringSolution solve_zero_energy(const RadialPotential& v, double r_max, std::size_t n_steps,
                                            bool normalize = true) {
    require(std::isfinite(r_max) && r_max > 0.0, "r_max must be positive");
    require(r_max >= 2.0 * v.R0(), "r_max must be at least 2 R0");
    require(n_steps >= 1000, "n_steps must be at least 1000");

    ScatteringSolution sol;
    sol.R0 = v.R0();
    sol.grid.resize(n_steps + 1);
    sol.u.resize(n_steps + 1);
    sol.du.resize(n_steps + 1);
    const double h = r_max / static_cast<double>(n_steps);
    for (std::size_t i = 0; i <= n_steps; ++i) sol.grid[i] = static_cast<double>(i) * h;
    sol.grid.back() = r_max;

    const auto cuts = v.breakpoints();
    double u = 0.0, du = 1.0;
    sol.u[0] = u;
    sol.du[0] = du;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double lo = sol.grid[i], hi = sol.grid[i + 1];
        double at = lo;
        for (auto it = std::upper_bound(cuts.begin(), cuts.end(), lo); it != cuts.end() && *it < hi; ++it) {
            detail::rk4_constant(u, du, 0.5 * v(0.5 * (at + *it)), *it - at);
            at = *it;
        }
        detail::rk4_constant(u, du, 0.5 * v(0.5 * (at + hi)), hi - at);
        sol.u[i + 1] = u;
        sol.du[i + 1] = du;
    }

    // Least-squares line u = c r + beta over the exterior window.
    std::size_t first = 0;
    while (first <= n_steps && !(sol.grid[first] > v.R0())) ++first;
    const std::size_t count = n_steps + 1 - first;
    if (count < 20) fail(ErrorCode::DegenerateTail, "fewer than 20 grid points beyond R0");
    double mean_r = 0.0, mean_u = 0.0;
    for (std::size_t i = first; i <= n_steps; ++i) {
        mean_r += sol.grid[i];
        mean_u += sol.u[i];
    }
    mean_r /= static_cast<double>(count);
    mean_u /= static_cast<double>(count);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = first; i <= n_steps; ++i) {
        const double dr = sol.grid[i] - mean_r;
        sxx += dr * dr;
        sxy += dr * (sol.u[i] - mean_u);
    }
    const double c = sxy / sxx;

    double u_max = 0.0, residual = 0.0;
    bool node = false;
    for (std::size_t i = 0; i <= n_steps; ++i) {
        u_max = std::max(u_max, std::abs(sol.u[i]));
        if (i > 0 && !(sol.u[i] > 0.0)) node = true;
        if (i >= first) residual = std::max(residual, std::abs(sol.u[i] - mean_u - c * (sol.grid[i] - mean_r)));
    }
    if (node || !(c > 0.0)) {
        std::ostringstream msg;
        msg << "zero-energy solution has a node or a non-growing tail (slope " << c << ")";
        fail(ErrorCode::BoundStateSuspected, msg.str());
    }
    if (residual > 1e-9 * u_max) {
        std::ostringstream msg;
        msg << "exterior fit residual " << residual << " exceeds 1e-9 * max|u| = " << 1e-9 * u_max;
        fail(ErrorCode::DegenerateTail, msg.str());
    }

    sol.tail_slope = c;
    sol.tail_residual = residual;
    sol.a = mean_r - mean_u / c;
    if (normalize) {
        for (std::size_t i = 0; i <= n_steps; ++i) {
            sol.u[i] /= c;
            sol.du[i] /= c;
        }
        sol.f_infinity_normalized = true;
    }
    return sol;
}

inline constexpr std::size_t default_scattering_steps = 100000;

/// Scattering length with r_max = 4 R0. The zero-range potential gives 0.
inline double scattering_length(const RadialPotential& v, std::size_t n_steps = default_scattering_steps) {
    if (v.R0() == 0.0) return 0.0;
    return solve_zero_energy(v, 4.0 * v.R0(), n_steps, false).a;
}

/// (1 / 4 pi) E[phi] for a radial profile given on a grid from 0 to r_max,
/// i.e. the integral of (phi'^2 + v phi^2 / 2) r^2 dr.
///
/// The profile is taken as its piecewise-linear interpolant, continued by 1
/// beyond r_max, and integrated exactly (kinetic term in closed form, the
/// potential term by 3-point Gauss-Legendre on every constant-potential
/// piece). The value is therefore the energy of an admissible trial function
/// and can never undercut the scattering length.
inline double energy_functional(std::span<const double> grid, std::span<const double> phi,
                                const RadialPotential& v) {
    require(grid.size() == phi.size(), "grid and profile lengths differ");
    require(grid.size() >= 2, "profile needs at least two points");
    require(grid.front() == 0.0, "profile grid must start at r = 0");
    require(grid.back() >= v.R0(), "profile grid must cover the potential support");
    require(std::abs(phi.back() - 1.0) <= 1e-12, "profile must equal 1 at r_max");

    // Gauss-Legendre nodes and weights on [-1, 1].
    static constexpr std::array<double, 3> node{-0.7745966692414834, 0.0, 0.7745966692414834};
    static constexpr std::array<double, 3> weight{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

    const auto cuts = v.breakpoints();
    double kinetic = 0.0, potential = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double r0 = grid[i], r1 = grid[i + 1];
        require(r1 > r0, "profile grid must be strictly increasing");
        const double slope = (phi[i + 1] - phi[i]) / (r1 - r0);
        kinetic += slope * slope * (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
        if (r0 >= v.R0()) continue;

        auto piece = [&](double lo, double hi) {
            const double value = v(0.5 * (lo + hi));
            if (value == 0.0) return;
            const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
            double sum = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                const double r = mid + half * node[k];
                const double p = phi[i] + slope * (r - r0);
                sum += weight[k] * p * p * r * r;
            }
            potential += 0.5 * value * half * sum;
        };
        double at = r0;
        for (auto it = std::upper_bound(cuts.begin(), cuts.end(), r0); it != cuts.end() && *it < r1; ++it) {
            piece(at, *it);
            at = *it;
        }
        piece(at, r1);
    }
    return kinetic + potential;
}

struct ConditionReport {
    double sl_combined = 0.0; // -inf when a bound state is suspected
    bool core_ok = false;
    bool sl_ok = false;
    bool bound_state_suspected = false;
    // inputs echo
    double t = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    double r1 = 0.0;
    double R0 = 0.0;

    bool passed() const { return core_ok && sl_ok; }
};

/// Hypotheses of the partially-attractive lower bound for a given t:
/// SL[c1 (v + t v_-)] >= 0 and lambda_plus >= (1 + 1/t) c2 lambda_minus.
/// c1 and c2 are caller inputs (see default_c_constants for a concrete choice).
inline ConditionReport check_theorem2(const RadialPotential& v, double t, double c1, double c2) {
    require(std::isfinite(t) && t > 0.0, "t must be positive");
    require(c1 >= 1.0 && c2 >= 1.0, "c1 and c2 must be >= 1");

    ConditionReport report;
    report.t = t;
    report.c1 = c1;
    report.c2 = c2;
    report.lambda_plus = v.lambda_plus();
    report.lambda_minus = v.lambda_minus();
    report.r1 = v.r1();
    report.R0 = v.R0();

    report.core_ok = v.lambda_plus() >= (1.0 + 1.0 / t) * c2 * v.lambda_minus();

    const auto parts = decompose(v);
    const RadialPotential combined = c1 * (v + t * parts.v_minus);
    try {
        report.sl_combined = scattering_length(combined);
        report.sl_ok = report.sl_combined >= 0.0;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::BoundStateSuspected) throw;
        report.sl_combined = -std::numeric_limits<double>::infinity();
        report.sl_ok = false;
        report.bound_state_suspected = true;
    }
    return report;
}

/// L1 norm of the negative part, the quantity compared against a threshold
/// in the narrow-negative-part condition. The threshold itself involves
/// unevaluated Sobolev constants and is not computed.
inline double check_corollary2_narrowness(const RadialPotential& v) { return negative_part_l1_norm(v); }

inline std::string to_key_value(const ConditionReport& r) {
    std::ostringstream out;
    out.precision(17);
    out << "sl_combined=" << r.sl_combined << '\n'
        << "sl_ok=" << (r.sl_ok ? 1 : 0) << '\n'
        << "core_ok=" << (r.core_ok ? 1 : 0) << '\n'
        << "bound_state_suspected=" << (r.bound_state_suspected ? 1 : 0) << '\n'
        << "t=" << r.t << '\n'
        << "c1=" << r.c1 << '\n'
        << "c2=" << r.c2 << '\n'
        << "lambda_plus=" << r.lambda_plus << '\n'
        << "lambda_minus=" << r.lambda_minus << '\n'
        << "r1=" << r.r1 << '\n'
        << "R0=" << r.R0 << '\n'
        << "passed=" << (r.passed() ? 1 : 0) << '\n';
    return out.str();
}

} // namespace dilute
