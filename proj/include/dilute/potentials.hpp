#pragma once

// Spherically symmetric, compactly supported, piecewise-constant pair
// potentials. Units: hbar = 2m = 1, so energies are inverse squared lengths.

#include "dilute/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace dilute {

struct Segment {
    double r_lo = 0.0;
    double r_hi = 0.0;
    double value = 0.0;

    bool operator==(const Segment&) const = default;
};

/// Piecewise-constant radial potential on [0, R0], zero beyond.
///
/// Segments are half-open [r_lo, r_hi) and must tile [0, R0] without gaps.
/// The core metadata (r1, lambda_plus, lambda_minus) is declared by the
/// caller and checked against the segments on construction:
///   value >= lambda_plus  on every segment starting below r1,
///   value >= -lambda_minus on every segment.
class RadialPotential {
public:
    /// The zero potential.
    RadialPotential() = default;

    RadialPotential(std::vector<Segment> segments, double R0, double r1, double lambda_plus,
                    double lambda_minus)
        : segments_(std::move(segments)), R0_(R0), r1_(r1), lambda_plus_(lambda_plus),
          lambda_minus_(lambda_minus) {
        validate();
    }

    /// Builds a potential whose metadata is inferred from the segments:
    /// R0 from the last segment, no declared core, lambda_minus = max(0, -min value).
    static RadialPotential from_segments(std::vector<Segment> segments) {
        double R0 = segments.empty() ? 0.0 : segments.back().r_hi;
        double lowest = 0.0;
        for (const auto& s : segments) lowest = std::min(lowest, s.value);
        return RadialPotential(std::move(segments), R0, 0.0, 0.0, -lowest);
    }

    /// Square barrier (V0 > 0) or well (V0 < 0) of radius R0.
    static RadialPotential square(double V0, double R0) {
        require(R0 > 0.0, "square potential needs R0 > 0");
        if (V0 >= 0.0) return RadialPotential({{0.0, R0, V0}}, R0, R0, V0, 0.0);
        return RadialPotential({{0.0, R0, V0}}, R0, 0.0, 0.0, -V0);
    }

    double operator()(double r) const {
        if (!(r < R0_)) return 0.0;
        // Half-open segments: the first segment whose r_hi exceeds r.
        auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                                   [](double x, const Segment& s) { return x < s.r_hi; });
        return it == segments_.end() ? 0.0 : it->value;
    }

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    double R0() const noexcept { return R0_; }
    double r1() const noexcept { return r1_; }
    double lambda_plus() const noexcept { return lambda_plus_; }
    double lambda_minus() const noexcept { return lambda_minus_; }

    bool is_zero() const noexcept {
        return std::all_of(segments_.begin(), segments_.end(),
                           [](const Segment& s) { return s.value == 0.0; });
    }

    bool is_nonnegative() const noexcept {
        return std::all_of(segments_.begin(), segments_.end(),
                           [](const Segment& s) { return s.value >= 0.0; });
    }

    /// Interior breakpoints and R0, ascending.
    std::vector<double> breakpoints() const {
        std::vector<double> out;
        out.reserve(segments_.size());
        for (const auto& s : segments_) out.push_back(s.r_hi);
        return out;
    }

    bool operator==(const RadialPotential&) const = default;

private:
    void validate() const {
        require(std::isfinite(R0_) && R0_ >= 0.0, "R0 must be finite and >= 0");
        require(lambda_plus_ >= 0.0 && lambda_minus_ >= 0.0, "lambda_plus and lambda_minus must be >= 0");
        require(r1_ >= 0.0 && r1_ <= R0_, "r1 must lie in [0, R0]");
        if (segments_.empty()) {
            require(R0_ == 0.0, "a potential without segments must have R0 = 0");
            require(r1_ == 0.0 && lambda_plus_ == 0.0, "a potential without segments has no core");
            return;
        }
        require(segments_.front().r_lo == 0.0, "segments must start at r = 0");
        require(segments_.back().r_hi == R0_, "segments must end at R0");
        for (std::size_t k = 0; k < segments_.size(); ++k) {
            const auto& s = segments_[k];
            const std::string at = "segment " + std::to_string(k);
            require(std::isfinite(s.value), at + " has a non-finite value");
            require(s.r_lo < s.r_hi, at + " must satisfy r_lo < r_hi");
            if (k > 0) require(segments_[k - 1].r_hi == s.r_lo, at + " leaves a gap or overlap");
            require(s.value >= -lambda_minus_, at + " lies below -lambda_minus");
            if (s.r_lo < r1_) require(s.value >= lambda_plus_, at + " lies below lambda_plus inside r1");
        }
    }

    std::vector<Segment> segments_;
    double R0_ = 0.0;
    double r1_ = 0.0;
    double lambda_plus_ = 0.0;
    double lambda_minus_ = 0.0;
};

inline double evaluate(const RadialPotential& v, double r) { return v(r); }

/// v^a(r) = a^-2 v(r / a).
inline RadialPotential scale(const RadialPotential& v, double a) {
    require(std::isfinite(a) && a > 0.0, "scale factor must be positive");
    const double inv_a2 = 1.0 / (a * a);
    std::vector<Segment> segs;
    segs.reserve(v.segments().size());
    for (const auto& s : v.segments()) segs.push_back({s.r_lo * a, s.r_hi * a, s.value * inv_a2});
    return RadialPotential(std::move(segs), v.R0() * a, v.r1() * a, v.lambda_plus() * inv_a2,
                           v.lambda_minus() * inv_a2);
}

struct Decomposition {
    RadialPotential v_plus;
    RadialPotential v_minus;
};

/// Split into v_plus >= 0 and v_minus <= 0 on the same segmentation, so that
/// v_plus + v_minus reproduces v segment by segment.
inline Decomposition decompose(const RadialPotential& v) {
    std::vector<Segment> plus, minus;
    plus.reserve(v.segments().size());
    minus.reserve(v.segments().size());
    for (const auto& s : v.segments()) {
        plus.push_back({s.r_lo, s.r_hi, std::max(s.value, 0.0)});
        minus.push_back({s.r_lo, s.r_hi, std::min(s.value, 0.0)});
    }
    return {RadialPotential(std::move(plus), v.R0(), v.r1(), v.lambda_plus(), 0.0),
            RadialPotential(std::move(minus), v.R0(), 0.0, 0.0, v.lambda_minus())};
}

/// Pointwise c * v for c >= 0. Declared metadata scales along.
inline RadialPotential operator*(double c, const RadialPotential& v) {
    require(std::isfinite(c) && c >= 0.0, "value multiplier must be finite and >= 0");
    std::vector<Segment> segs;
    segs.reserve(v.segments().size());
    for (const auto& s : v.segments()) segs.push_back({s.r_lo, s.r_hi, c * s.value});
    return RadialPotential(std::move(segs), v.R0(), v.r1(), c * v.lambda_plus(), c * v.lambda_minus());
}

/// Pointwise sum over the merged breakpoints. Metadata of the result is inferred.
inline RadialPotential operator+(const RadialPotential& v, const RadialPotential& w) {
    std::vector<double> cuts = v.breakpoints();
    const auto wb = w.breakpoints();
    cuts.insert(cuts.end(), wb.begin(), wb.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<Segment> segs;
    double lo = 0.0;
    for (double hi : cuts) {
        segs.push_back({lo, hi, v(lo) + w(lo)});
        lo = hi;
    }
    return RadialPotential::from_segments(std::move(segs));
}

/// Integral of |v_-| over R^3, i.e. sum of 4 pi / 3 (r_hi^3 - r_lo^3) |value|
/// over negative segments.
inline double negative_part_l1_norm(const RadialPotential& v) {
    double total = 0.0;
    for (const auto& s : v.segments()) {
        if (s.value < 0.0) {
            total += 4.0 * std::numbers::pi / 3.0 * (s.r_hi * s.r_hi * s.r_hi - s.r_lo * s.r_lo * s.r_lo) *
                     (-s.value);
        }
    }
    return total;
}

} // namespace dilute
