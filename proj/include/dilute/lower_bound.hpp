#pragma once

// Lower-bound side: soft-potential replacement, the Temple-inequality bound
// for a cell of side ell holding n particles, the piecewise cell floor, and
// the integer covering constants behind c1 and c2.
//
// Lengths are in units where the scattering length is a; R0 is the support
// radius of the unit-scattering-length potential, so R0 * a is the physical
// support.

#include "dilute/error.hpp"
#include "dilute/potentials.hpp"
#include "dilute/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace dilute {

/// U0 = value on the annulus inner <= r <= outer, zero elsewhere, with
/// integral 4 pi.
struct SoftPotential {
    double inner = 0.0;
    double outer = 0.0;
    double value = 0.0;

    double operator()(double r) const { return (r >= inner && r <= outer) ? value : 0.0; }
};

inline SoftPotential soft_potential(double a, double R0, double R) {
    require(a >= 0.0 && R0 >= 0.0, "a and R0 must be >= 0");
    const double inner = R0 * a;
    require(R > inner, "soft potential needs R > R0 a");
    return {inner, R, 3.0 / (R * R * R - inner * inner * inner)};
}

/// Factors of the Temple cell bound, kept apart so they can be regrouped.
struct TempleFactors {
    double leading = 0.0;   // 4 pi a n / ell^3
    double pairs = 0.0;     // 1 - 1/n
    double constant = 0.0;  // 1 - C Y
    double geometric = 0.0; // (1 - 2R/ell)^3
    double density = 0.0;   // (1 + (4 pi n / 3)(2R/ell)^3)^-1
    double gap = 0.0;       // 3 pi Y / ell^2 - 4 a n^2 / ell^3
    double temple = 0.0;    // 1 - 3 a n / (pi (R^3 - (a R0)^3) gap)
    double value = 0.0;     // product of all the above except gap
};

/// Temple-inequality lower bound on the energy per cell (n particles, side
/// ell). const_C is the unnamed constant multiplying Y. Throws
/// NegativeTempleGap when the gap is not positive.
inline TempleFactors temple_cell_bound(std::size_t n, double ell, double a, double R, double R0, double Y,
                                       double rho, double const_C = 1.0) {
    require(n >= 1, "n must be >= 1");
    require(ell > 0.0 && a > 0.0 && R > R0 * a && Y > 0.0 && rho > 0.0, "invalid cell parameters");
    const double nd = static_cast<double>(n);
    require(nd <= 8.0 / 3.0 * rho * ell * ell * ell / Y, "n exceeds (8/3) rho ell^3 / Y");

    const double pi = std::numbers::pi;
    const double l2 = ell * ell, l3 = l2 * ell;
    TempleFactors t;
    t.leading = 4.0 * pi * a * nd / l3;
    t.pairs = 1.0 - 1.0 / nd;
    t.constant = 1.0 - const_C * Y;
    t.geometric = std::pow(1.0 - 2.0 * R / ell, 3);
    t.density = 1.0 / (1.0 + 4.0 * pi * nd / 3.0 * std::pow(2.0 * R / ell, 3));
    t.gap = 3.0 * pi * Y / l2 - 4.0 * a * nd * nd / l3;
    if (!(t.gap > 0.0)) {
        std::ostringstream msg;
        msg << "Temple gap " << t.gap << " <= 0 at n = " << n;
        fail(ErrorCode::NegativeTempleGap, msg.str());
    }
    const double aR0 = a * R0;
    t.temple = 1.0 - 3.0 * a * nd / (pi * (R * R * R - aR0 * aR0 * aR0) * t.gap);
    t.value = t.leading * t.pairs * t.constant * t.geometric * t.density * t.temple;
    return t;
}

/// Cell floor: 4 pi a n (1 - 1/n)(1 - C Y) / ell^3 below n = 4 ell^3 rho,
/// 8 pi a rho (1 - C Y) above it, the larger of the two at the crossover.
inline double cell_energy_floor(std::size_t n, double ell, double rho, double a, double Y, double const_C = 1.0) {
    require(n >= 1, "n must be >= 1");
    const double pi = std::numbers::pi;
    const double nd = static_cast<double>(n);
    const double crossover = 4.0 * ell * ell * ell * rho;
    const double few = 4.0 * pi * a * nd / (ell * ell * ell) * (1.0 - 1.0 / nd) * (1.0 - const_C * Y);
    const double many = 8.0 * pi * a * rho * (1.0 - const_C * Y);
    if (nd < crossover) return few;
    if (nd > crossover) return many;
    return std::max(few, many);
}

struct TempleRow {
    std::size_t n = 0;
    double temple_bound = 0.0; // NaN when the gap is not positive
    bool negative_gap = false;
    double floor = 0.0;
};

struct LowerBoundReport {
    double a = 0.0;
    double rho = 0.0;
    double gas_parameter = 0.0; // a^3 rho
    double R0 = 0.0;            // support of the unit potential
    double sl_v_plus = 0.0;     // SL of the positive part, unit potential
    double const_C = 1.0;
    double t = 1.0;

    double Y_low = 0.0;
    double R = 0.0;
    double ell = 0.0;
    double epsilon = 0.0;
    bool epsilon_admissible = false; // epsilon < t / (2 (1 + t))
    SoftPotential U0;

    double bogoliubov = 0.0;         // 4 pi a rho
    double floor_ratio = 0.0;        // 1 - C Y
    double floor_per_particle = 0.0; // bogoliubov * floor_ratio
    bool R_covers_core = false;      // R >= 2 R0 a
    bool ordering_ok = false;        // ell > R > R0 a

    std::vector<TempleRow> table;
};

/// Assembles the report from scalars: scattering length a, density rho,
/// unit-potential support R0 and positive-part scattering length.
inline LowerBoundReport assemble_lemma1(double a, double rho, double R0, double sl_v_plus, double const_C = 1.0,
                                        double t = 1.0) {
    require(std::isfinite(a) && a > 0.0, "a must be positive");
    require(std::isfinite(rho) && rho > 0.0, "rho must be positive");
    require(R0 >= 0.0 && sl_v_plus > 0.0, "R0 must be >= 0 and SL[v+] > 0");
    require(t > 0.0, "t must be positive");
    const double x = a * a * a * rho;
    require(x < 1.0, "a^3 rho must be < 1");

    LowerBoundReport r;
    r.a = a;
    r.rho = rho;
    r.gas_parameter = x;
    r.R0 = R0;
    r.sl_v_plus = sl_v_plus;
    r.const_C = const_C;
    r.t = t;

    r.Y_low = std::pow(x, 1.0 / 17.0);
    r.R = a * std::pow(x, -5.0 / 17.0);
    r.ell = a * std::pow(r.Y_low, -6.0);
    r.epsilon = 3.0 * r.Y_low / std::min(1.0, sl_v_plus);
    r.epsilon_admissible = r.epsilon < t / (2.0 * (1.0 + t));
    r.R_covers_core = r.R >= 2.0 * R0 * a;
    r.ordering_ok = r.ell > r.R && r.R > R0 * a;
    if (r.R > R0 * a) r.U0 = soft_potential(a, R0, r.R);

    r.bogoliubov = 4.0 * std::numbers::pi * a * rho;
    r.floor_ratio = 1.0 - const_C * r.Y_low;
    r.floor_per_particle = r.bogoliubov * r.floor_ratio;

    const double n_cap = 8.0 / 3.0 * rho * r.ell * r.ell * r.ell / r.Y_low;
    const std::size_t n_max = static_cast<std::size_t>(std::min(100.0, std::floor(n_cap)));
    for (std::size_t n = 1; n <= n_max; ++n) {
        TempleRow row;
        row.n = n;
        row.floor = cell_energy_floor(n, r.ell, rho, a, r.Y_low, const_C);
        try {
            row.temple_bound = r.ordering_ok ? temple_cell_bound(n, r.ell, a, r.R, R0, r.Y_low, rho, const_C).value
                                             : std::numeric_limits<double>::quiet_NaN();
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NegativeTempleGap) throw;
            row.temple_bound = std::numeric_limits<double>::quiet_NaN();
            row.negative_gap = true;
        }
        r.table.push_back(row);
    }
    return r;
}

/// Same, starting from the physical interaction v at a^3 rho = gas_parameter.
inline LowerBoundReport assemble_lemma1(const RadialPotential& v, double gas_parameter, double const_C = 1.0,
                                        double t = 1.0) {
    require(gas_parameter > 0.0 && gas_parameter < 1.0, "a^3 rho must lie in (0, 1)");
    const double a = scattering_length(v);
    require(a > 0.0, "the lower bound needs a positive scattering length");
    const double sl_plus = scattering_length(decompose(v).v_plus);
    return assemble_lemma1(a, gas_parameter / (a * a * a), v.R0() / a, sl_plus / a, const_C, t);
}

struct CoveringConstants {
    long n1 = 3;
    long n2 = 1;
    long n3 = 1;
    double sample_resolution = 0.0; // spacing of the sampled points in the base cell, units of r1
};

namespace detail {

// Number of cubes [i/2, (i+1)/2]^3 whose distance to the point x is at most
// radius. For every (i, j) column the admissible k form one interval.
inline long cubes_within(const double x[3], double radius) {
    auto gap = [](double c, long i) {
        const double lo = 0.5 * static_cast<double>(i), hi = lo + 0.5;
        return c < lo ? lo - c : (c > hi ? c - hi : 0.0);
    };
    const double r2 = radius * radius;
    const long i_lo = static_cast<long>(std::floor(2.0 * (x[0] - radius))) - 1;
    const long i_hi = static_cast<long>(std::ceil(2.0 * (x[0] + radius))) + 1;
    const long j_lo = static_cast<long>(std::floor(2.0 * (x[1] - radius))) - 1;
    const long j_hi = static_cast<long>(std::ceil(2.0 * (x[1] + radius))) + 1;
    long count = 0;
    for (long i = i_lo; i <= i_hi; ++i) {
        const double dx = gap(x[0], i);
        if (dx * dx > r2) continue;
        for (long j = j_lo; j <= j_hi; ++j) {
            const double dy = gap(x[1], j);
            const double rest = r2 - dx * dx - dy * dy;
            if (rest < 0.0) continue;
            const double s = std::sqrt(rest);
            // [k/2, k/2 + 1/2] meets [z - s, z + s]
            const long k_lo = static_cast<long>(std::ceil(2.0 * (x[2] - s) - 1.0));
            const long k_hi = static_cast<long>(std::floor(2.0 * (x[2] + s)));
            count += k_hi - k_lo + 1;
        }
    }
    return count;
}

} // namespace detail

/// Covering constants for R0 / r1 = ratio, lengths in units of r1, cubes of
/// side 1/2. n2 is the largest number of cubes meeting a ball of radius
/// ratio, n3 the largest number within distance 3 ratio, both maximized over
/// a grid of points in the base cell. n1 is the smallest integer >= 3 with
/// n1^2 / n2 >= 2 n1, so that g^2 / n2 - g >= g^2 / (2 n2) for all g >= n1.
inline CoveringConstants covering_constants(double ratio, int samples_per_axis = 8) {
    require(std::isfinite(ratio) && ratio >= 0.0, "ratio must be >= 0");
    require(samples_per_axis >= 1, "need at least one sample per axis");
    CoveringConstants out;
    const double spacing = 0.5 / samples_per_axis;
    out.sample_resolution = spacing;
    if (ratio == 0.0) return out;

    long m = 0, far = 0;
    for (int i = 0; i < samples_per_axis; ++i)
        for (int j = 0; j < samples_per_axis; ++j)
            for (int k = 0; k < samples_per_axis; ++k) {
                const double x[3] = {(i + 0.5) * spacing, (j + 0.5) * spacing, (k + 0.5) * spacing};
                m = std::max(m, detail::cubes_within(x, ratio));
                far = std::max(far, detail::cubes_within(x, 3.0 * ratio));
            }
    out.n2 = m;
    out.n3 = far;
    out.n1 = std::max<long>(3, 2 * m);
    return out;
}

struct CConstants {
    double c1 = 0.0;
    double c2 = 0.0;
};

/// c1 = 4 n1 and c2 = max(2 sqrt(n2 n3), n2 n3 / (4 n1)).
inline CConstants default_c_constants(double ratio) {
    const auto k = covering_constants(ratio);
    const double n1 = static_cast<double>(k.n1), n2 = static_cast<double>(k.n2), n3 = static_cast<double>(k.n3);
    return {4.0 * n1, std::max(2.0 * std::sqrt(n2 * n3), n2 * n3 / (4.0 * n1))};
}

} // namespace dilute
