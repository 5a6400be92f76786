#include "dilute/trial_state.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"

using dilute::ErrorCode;
using dilute::ParticleConfiguration;
using dilute::RadialPotential;
using dilute::Regime;
using dilute::TrialParams;
using dilute::Vec3;
using dilute::operator+;
using dilute::operator*;

namespace {

constexpr double pi = std::numbers::pi;

// density giving a prescribed Y for scattering length a
double rho_for(double a, double Y) { return 3.0 * std::pow(Y, 4) / (4.0 * pi * a * a * a); }

RadialPotential barrier() { return RadialPotential::square(50.0, 1.0); }

// f rises above 1 inside the core and dips again: the generalized F_p matters
RadialPotential bumpy() {
    return RadialPotential::from_segments({{0.0, 0.3, 5.0}, {0.3, 0.6, -20.0}, {0.6, 1.0, 10.0}});
}

TrialParams trial(const RadialPotential& v, double Y, std::size_t N = 8) {
    const double a = oracle::scattering_length(v);
    const double rho = rho_for(a, Y);
    const double L = std::cbrt(static_cast<double>(N) / rho);
    return dilute::build_trial(v, rho, N, L);
}

// Configuration of n particles placed along a line with given gaps from x_0.
ParticleConfiguration line(double L, const std::vector<double>& offsets) {
    std::vector<Vec3> x;
    for (double d : offsets) x.push_back({0.25 * L + d, 0.5 * L, 0.5 * L});
    return ParticleConfiguration(L, x);
}

ParticleConfiguration cluster(std::mt19937_64& gen, std::size_t n, double L, double side) {
    std::uniform_real_distribution<double> u(0.0, side);
    std::vector<Vec3> x(n);
    for (auto& p : x) p = {u(gen), u(gen), u(gen)};
    return ParticleConfiguration(L, x);
}

// Distance of the configuration to the set where F is not differentiable:
// any pair at a radius where f or T has a kink, two in-range priors with
// equal f, two out-of-range priors at equal distance, or f(R_p) = f(r_p).
double kink_distance(const ParticleConfiguration& c, const TrialParams& P) {
    double best = INFINITY;
    const double radii[] = {P.R_tilde(), P.plateau(), P.b()};
    for (std::size_t p = 1; p < c.size(); ++p) {
        std::vector<double> d(p);
        for (std::size_t j = 0; j < p; ++j) {
            d[j] = c.distance(j, p);
            for (double r : radii) best = std::min(best, std::abs(d[j] - r));
        }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j) {
                const bool in_i = d[i] <= P.R_tilde(), in_j = d[j] <= P.R_tilde();
                if (in_i && in_j) best = std::min(best, std::abs(P.f(d[i]) - P.f(d[j])));
                if (!in_i && !in_j) best = std::min(best, std::abs(d[i] - d[j]));
            }
        const auto s = dilute::neighbor_stats(c, p, P);
        if (s.regime == Regime::Mixed) best = std::min(best, std::abs(s.f_R - s.f_r));
    }
    return best;
}

} // namespace

TEST(TrialState, BuildArithmetic) {
    // unit scattering length: rescale the barrier by 1 / a
    const auto v = dilute::scale(barrier(), 1.0 / oracle::scattering_length(barrier()));
    const double rho = 1e-4 * 3.0 / (4.0 * pi);
    const auto P = dilute::build_trial(v, rho, 10, 100.0);
    EXPECT_NEAR(P.a(), 1.0, 1e-9);
    EXPECT_NEAR(P.Y_up(), 0.1, 1e-9);
    EXPECT_NEAR(P.b(), 10.0, 1e-7);
    EXPECT_DOUBLE_EQ(P.Y_up(), std::pow(4.0 * pi / 3.0 * std::pow(P.a(), 3) * rho, 0.25));
    EXPECT_DOUBLE_EQ(P.b(), P.a() / P.Y_up());
    EXPECT_DOUBLE_EQ(P.R_tilde(), std::max(v.R0(), 2.0 * P.a()));
    EXPECT_TRUE(P.standing_assumption());
    EXPECT_DOUBLE_EQ(P.plateau(), 2.0 * P.R_tilde());
}

TEST(TrialState, ProfileShape) {
    for (const auto& v : {barrier(), bumpy(), RadialPotential::square(2.0, 1.0)}) {
        const auto P = trial(v, 0.1);
        const double a = P.a();
        EXPECT_EQ(P.f(P.b() * 1.0001), 1.0);
        EXPECT_EQ(P.f(5.0 * P.b()), 1.0);
        EXPECT_NEAR(P.f(P.b()), 1.0, 1e-15);
        // matching radius: core interpolant against the exterior law
        const double R0 = v.R0();
        const double tail = (1.0 - a / R0) / (1.0 - a / P.b());
        EXPECT_NEAR(P.f(R0), tail, 1e-9);
        EXPECT_NEAR(P.f(std::nextafter(R0, 2.0)), tail, 1e-9);
        EXPECT_GT(P.f(P.R_tilde()), 0.5);
        // the core matches the transfer-matrix oracle
        const auto edge = oracle::state_at(v, R0);
        const double c = edge.du;
        for (double r : {0.05, 0.21, 0.33, 0.5, 0.77, 0.99}) {
            const auto s = oracle::state_at(v, r);
            EXPECT_NEAR(P.f(r), s.u / r / c / (1.0 - a / P.b()), 1e-9) << r;
            EXPECT_NEAR(P.df(r), (s.du - s.u / r) / r / c / (1.0 - a / P.b()), 1e-7) << r;
        }
    }
}

TEST(TrialState, CutoffFunction) {
    const auto P = trial(bumpy(), 0.1);
    EXPECT_EQ(P.T(0.0), 1.0);
    EXPECT_EQ(P.T(P.plateau()), 1.0);
    EXPECT_EQ(P.T(P.b()), 0.0);
    EXPECT_EQ(P.T(2.0 * P.b()), 0.0);
    double prev = 1.0;
    for (int k = 0; k <= 2000; ++k) {
        const double r = P.b() * 1.1 * k / 2000.0;
        const double T = P.T(r);
        EXPECT_LE(T, prev + 1e-15);
        EXPECT_GE(T, 0.0);
        EXPECT_LE(std::abs(T - prev), 0.02); // continuous at this resolution
        prev = T;
    }
    const double s = P.plateau(), b = P.b();
    EXPECT_NEAR(P.T(s * (1 + 1e-12)), 1.0, 1e-9);
    EXPECT_NEAR(P.T(b * (1 - 1e-12)), 0.0, 1e-9);
    for (double r : {1.3 * s, 0.5 * (s + b), 0.95 * b}) {
        const double h = 1e-6 * r;
        EXPECT_NEAR(P.dT(r), (P.T(r + h) - P.T(r - h)) / (2.0 * h), 1e-7);
    }
}

TEST(TrialState, ShortPlateauAtHighDensity) {
    // b falls below 2 R_tilde: the plateau is pulled in and T stays continuous
    const auto v = barrier();
    const double a = oracle::scattering_length(v);
    const double rho = 1e-3 / (a * a * a);
    const auto P = dilute::build_trial(v, rho, 10, std::cbrt(10.0 / rho));
    EXPECT_FALSE(P.standing_assumption());
    EXPECT_LT(P.b(), 2.0 * P.R_tilde());
    EXPECT_GT(P.b(), P.R_tilde());
    EXPECT_DOUBLE_EQ(P.plateau(), 0.5 * (P.R_tilde() + P.b()));
    EXPECT_EQ(P.T(P.R_tilde()), 1.0);
    EXPECT_NEAR(P.T(P.b() * (1 - 1e-12)), 0.0, 1e-9);
}

TEST(TrialState, SupremumOfProfile) {
    const auto mono = trial(barrier(), 0.1);
    EXPECT_EQ(mono.M(), 1.0);

    const auto v = bumpy();
    const auto P = trial(v, 0.1);
    double sampled = 0.0;
    for (int k = 0; k <= 200000; ++k) sampled = std::max(sampled, P.f(v.R0() * k / 200000.0));
    EXPECT_GT(P.M(), 1.0);
    EXPECT_GE(P.M(), sampled);
    EXPECT_LE(P.M() - sampled, 1e-8);
    // unnormalized sup from the oracle
    double fa_max = 0.0;
    for (int k = 1; k <= 20000; ++k) {
        const double r = v.R0() * k / 20000.0;
        const auto s = oracle::state_at(v, r);
        fa_max = std::max(fa_max, s.u / r / oracle::state_at(v, v.R0()).du);
    }
    EXPECT_LE(P.M(), 2.0 * fa_max);
}

TEST(TrialState, BuildErrors) {
    const auto v = barrier();
    const double a = oracle::scattering_length(v);
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const dilute::Error& e) {
            return e.code();
        }
        return ErrorCode::Io; // sentinel: nothing thrown
    };
    const double rho = rho_for(a, 0.1); // b = 8
    EXPECT_EQ(code([&] { dilute::build_trial(v, rho, 4, 16.0); }), ErrorCode::BoxTooSmall);
    EXPECT_EQ(code([&] { dilute::build_trial(v, rho, 4, 16.01); }), ErrorCode::Io);
    // Y = 1: f_a(b) = 0
    const double full = 3.0 / (4.0 * pi * a * a * a);
    EXPECT_EQ(code([&] { dilute::build_trial(v, full * (1 - 1e-9), 4, 100.0); }), ErrorCode::InvalidTruncation);
    EXPECT_EQ(code([&] { dilute::build_trial(v, 2.0 * full, 4, 100.0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code([&] { dilute::build_trial(RadialPotential::square(-2.0, 1.0), 1e-4, 4, 1000.0); }),
              ErrorCode::InvalidArgument);
    EXPECT_EQ(code([&] { dilute::build_trial(v, -1.0, 4, 100.0); }), ErrorCode::InvalidArgument);
}

TEST(TrialState, FreeTrial) {
    const auto P = dilute::build_trial(RadialPotential(), 1e-3, 5, 20.0);
    EXPECT_TRUE(P.is_free());
    EXPECT_EQ(P.f(0.0), 1.0);
    EXPECT_EQ(P.df(1.0), 0.0);
    std::mt19937_64 gen(1);
    const auto c = cluster(gen, 5, 20.0, 1.0);
    EXPECT_EQ(dilute::log_psi(c, P), 0.0);
    for (const auto& g : dilute::grad_log_psi(c, P)) EXPECT_EQ(g, (Vec3{0.0, 0.0, 0.0}));
    EXPECT_EQ(dilute::error_integrals(P).K, 0.0);
}

TEST(NeighborStats, SmallCases) {
    const auto P = trial(barrier(), 0.1);
    const double L = P.L(), Rt = P.R_tilde();

    auto c = line(L, {0.0, 1.5 * Rt});
    auto s = dilute::neighbor_stats(c, 0, P);
    EXPECT_EQ(s.regime, Regime::First);
    EXPECT_EQ(dilute::evaluate_F_p(c, 0, P), 1.0);

    s = dilute::neighbor_stats(c, 1, P);
    EXPECT_TRUE(s.theta_out());
    EXPECT_FALSE(s.r_p.has_value());
    EXPECT_FALSE(s.i_p.has_value());
    EXPECT_DOUBLE_EQ(s.R_p, 1.5 * Rt);
    EXPECT_EQ(s.j_p, 0u);

    c = line(L, {0.0, 0.7 * Rt});
    s = dilute::neighbor_stats(c, 1, P);
    EXPECT_TRUE(s.theta_in());
    EXPECT_DOUBLE_EQ(*s.r_p, 0.7 * Rt);
    EXPECT_EQ(s.i_p, 0u);
    EXPECT_EQ(s.R_p, Rt);
    EXPECT_FALSE(s.j_p.has_value());
    EXPECT_EQ(dilute::evaluate_F_p(c, 1, P), P.f(0.7 * Rt));

    // exact tie in distance: the lower index wins
    c = line(L, {-0.5 * Rt, 0.5 * Rt, 0.0});
    s = dilute::neighbor_stats(c, 2, P);
    EXPECT_EQ(s.i_p, 0u);
    EXPECT_EQ(s.regime, Regime::Inside);
}

TEST(NeighborStats, MixedRegimes) {
    const auto P = trial(bumpy(), 0.1);
    const double L = P.L();
    // f is increasing in the tail; a far prior never lowers F
    auto c = line(L, {0.0, 3.0, 0.9});
    auto s = dilute::neighbor_stats(c, 2, P);
    ASSERT_EQ(s.regime, Regime::Mixed);
    EXPECT_TRUE(s.theta_plus());
    EXPECT_EQ(dilute::evaluate_F_p(c, 2, P), P.f(0.9));

    // the in-range prior sits on the bump of f, the out-of-range one is lower
    c = line(L, {0.0, 0.32 + 1.5, 1.5});
    s = dilute::neighbor_stats(c, 2, P);
    ASSERT_EQ(s.regime, Regime::Mixed);
    EXPECT_TRUE(s.theta_minus());
    EXPECT_NEAR(*s.r_p, 0.32, 1e-12);
    EXPECT_NEAR(s.R_p, 1.5, 1e-12);
    const double expect = P.f(0.32) + P.T(1.5) * (P.f(1.5) - P.f(0.32));
    EXPECT_NEAR(dilute::evaluate_F_p(c, 2, P), expect, 1e-14);
    EXPECT_LT(dilute::evaluate_F_p(c, 2, P), P.f(0.32));

    // the in-range argmin is by f, not by distance
    c = line(L, {0.32, 0.95, 0.0});
    s = dilute::neighbor_stats(c, 2, P);
    EXPECT_EQ(s.regime, Regime::Inside);
    ASSERT_LT(P.f(0.95), P.f(0.32));
    EXPECT_EQ(s.i_p, 1u);
    EXPECT_NEAR(*s.r_p, 0.95, 1e-12);
}

TEST(TrialState, FarApartIsFree) {
    const auto P = trial(bumpy(), 0.1, 4);
    const double b = P.b();
    const auto c = line(P.L(), {0.0, 1.1 * b, 2.3 * b});
    EXPECT_EQ(dilute::log_psi(c, P), 0.0);
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(dilute::evaluate_F_p(c, p, P), 1.0);
    for (const auto& g : dilute::grad_log_psi(c, P)) EXPECT_EQ(g, (Vec3{0.0, 0.0, 0.0}));
}

TEST(TrialState, TwoParticleValues) {
    const auto P = trial(barrier(), 0.1, 2);
    const double a = P.a();
    for (double d : {0.5, 1.2, 1.5}) {
        const auto c = line(P.L(), {0.0, d});
        EXPECT_NEAR(dilute::log_psi(c, P), std::log(P.f(d)), 1e-14);
    }
    // exterior region below R_tilde: |grad_2 log Psi| = (a / d^2) / (1 - a / d)
    const double d = 1.3;
    ASSERT_LT(d, P.R_tilde());
    const auto c = line(P.L(), {0.0, d});
    const auto g = dilute::grad_log_psi(c, P);
    EXPECT_NEAR(dilute::norm(g[1]), (a / (d * d)) / (1.0 - a / d), 1e-12);
    EXPECT_NEAR(g[0][0], -g[1][0], 1e-15);
    EXPECT_GT(g[1][0], 0.0); // pushes particle 1 away
}

TEST(TrialState, ZeroAmplitudeGuard) {
    // f > 0 for every finite potential, so build the degenerate stats by hand
    const auto P = trial(barrier(), 0.1, 2);
    const auto c = line(P.L(), {0.0, 0.5});
    auto s = dilute::neighbor_stats(c, 1, P);
    s.f_r = 0.0;
    std::vector<Vec3> g(2, Vec3{0.0, 0.0, 0.0});
    try {
        dilute::accumulate_gradient(c, s, P, g);
        FAIL() << "no error";
    } catch (const dilute::Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GradientAtZeroAmplitude);
    }
}

TEST(TrialState, GradientMatchesFiniteDifferences) {
    std::mt19937_64 gen(7);
    int checked = 0;
    for (const auto& v : {barrier(), bumpy()}) {
        const auto P = trial(v, 0.15, 6);
        for (int trial_no = 0; trial_no < 300; ++trial_no) {
            auto c = cluster(gen, 6, P.L(), 0.9 * P.b());
            if (kink_distance(c, P) < 1e-4) continue;
            if (!std::isfinite(dilute::log_psi(c, P))) continue;
            const auto g = dilute::grad_log_psi(c, P);
            for (std::size_t k = 0; k < c.size(); ++k) {
                for (int axis = 0; axis < 3; ++axis) {
                    const double h = 1e-6;
                    auto plus = c, minus = c;
                    Vec3 x = c[k];
                    x[axis] += h;
                    plus.move_to(k, x);
                    x[axis] -= 2.0 * h;
                    minus.move_to(k, x);
                    const double fd = (dilute::log_psi(plus, P) - dilute::log_psi(minus, P)) / (2.0 * h);
                    EXPECT_LE(std::abs(fd - g[k][axis]), 1e-5 * std::max(1.0, std::abs(fd)))
                        << "k=" << k << " axis=" << axis;
                }
            }
            ++checked;
        }
    }
    EXPECT_GT(checked, 200);
}

TEST(TrialState, GradientInAttractiveMixedBranch) {
    // Theta^- with the out-of-range prior on the sloped part of T
    const auto P = trial(bumpy(), 0.1, 3);
    const double R = 0.5 * (P.plateau() + P.b());
    std::vector<Vec3> x{{10.0, 10.0, 10.0}, {10.0 + 0.2, 10.0 + 0.25, 10.0 + 0.1}, {10.0 - R, 10.0, 10.0}};
    // particle 2 sits at distance R from particle 0; particle 1 is close to 0
    x[2] = {10.0 + 0.2 + 0.05, 10.0 + 0.25 + 0.3, 10.0 + 0.1};
    x[0] = {x[2][0] - R, x[2][1] + 0.01, x[2][2]};
    const ParticleConfiguration c(P.L(), x);
    const auto s = dilute::neighbor_stats(c, 2, P);
    ASSERT_EQ(s.regime, Regime::Mixed);
    ASSERT_TRUE(s.theta_minus());
    ASSERT_GT(P.T(s.R_p), 0.0);
    ASSERT_LT(P.T(s.R_p), 1.0);
    const auto g = dilute::grad_log_psi(c, P);
    for (std::size_t k = 0; k < 3; ++k)
        for (int axis = 0; axis < 3; ++axis) {
            const double h = 1e-6;
            auto plus = c, minus = c;
            Vec3 y = c[k];
            y[axis] += h;
            plus.move_to(k, y);
            y[axis] -= 2.0 * h;
            minus.move_to(k, y);
            const double fd = (dilute::log_psi(plus, P) - dilute::log_psi(minus, P)) / (2.0 * h);
            EXPECT_LE(std::abs(fd - g[k][axis]), 1e-5 * std::max(1.0, std::abs(fd)));
        }
    // total force vanishes: log Psi is translation invariant
    Vec3 total{0.0, 0.0, 0.0};
    for (const auto& gk : g) total = total + gk;
    EXPECT_LE(dilute::norm(total), 1e-12);
}

TEST(TrialState, SandwichBound) {
    std::mt19937_64 gen(11);
    for (const auto& v : {barrier(), bumpy()}) {
        const auto P = trial(v, 0.2, 6);
        for (int n = 0; n < 10000; ++n) {
            const auto c = cluster(gen, 6, P.L(), 1.2 * P.b());
            for (std::size_t p = 1; p < c.size(); ++p) {
                int within_b = 0, within_Rt = 0;
                for (std::size_t q = 0; q < p; ++q) {
                    const double d = c.distance(q, p);
                    within_b += d < P.b();
                    within_Rt += d <= P.R_tilde();
                }
                const double F = dilute::evaluate_F_p(c, p, P);
                EXPECT_GE(F, 1.0 - within_b - 1e-12);
                EXPECT_LE(F, 1.0 + (P.M() - 1.0) * within_Rt + 1e-12);
                EXPECT_GE(F, 0.0);
                EXPECT_LE(F, P.M());
            }
        }
    }
}

TEST(TrialState, LogPsiBoundedByM) {
    std::mt19937_64 gen(12);
    const auto P = trial(bumpy(), 0.2, 6);
    for (int n = 0; n < 2000; ++n) {
        const auto c = cluster(gen, 6, P.L(), 0.8 * P.b());
        EXPECT_LE(dilute::log_psi(c, P), 6.0 * std::log(P.M()) + 1e-12);
    }
}

TEST(TrialState, ReducesToNearestNeighborForRepulsion) {
    const auto P = trial(barrier(), 0.2, 6);
    // f is nondecreasing on the table
    for (int k = 1; k <= 10000; ++k) ASSERT_GE(P.f(P.b() * k / 10000.0), P.f(P.b() * (k - 1) / 10000.0));
    std::mt19937_64 gen(13);
    for (int n = 0; n < 10000; ++n) {
        const auto c = cluster(gen, 6, P.L(), 1.2 * P.b());
        for (std::size_t p = 1; p < c.size(); ++p) {
            double nearest = INFINITY;
            for (std::size_t q = 0; q < p; ++q) nearest = std::min(nearest, c.distance(q, p));
            EXPECT_DOUBLE_EQ(dilute::evaluate_F_p(c, p, P), P.f(nearest));
        }
    }
}

TEST(TrialState, ContinuousAcrossRTilde) {
    std::mt19937_64 gen(14);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& v : {barrier(), bumpy()}) {
        const auto P = trial(v, 0.1, 5);
        const double Rt = P.R_tilde();
        for (int n = 0; n < 500; ++n) {
            auto c = cluster(gen, 5, P.L(), 0.6 * P.b());
            // move prior particle j onto the R_tilde sphere around particle 4
            const std::size_t j = static_cast<std::size_t>(n % 4);
            Vec3 dir{u(gen), u(gen), u(gen)};
            dir = (1.0 / dilute::norm(dir)) * dir;
            auto at = [&](double r) {
                auto moved = c;
                moved.move_to(j, c[4] + r * dir);
                return dilute::evaluate_F_p(moved, 4, P);
            };
            EXPECT_LE(std::abs(at(Rt * (1 + 1e-12)) - at(Rt * (1 - 1e-12))), 1e-8);
        }
    }
}

TEST(TrialState, ErrorIntegrals) {
    for (const auto& v : {barrier(), bumpy()}) {
        double lo = INFINITY, hi = 0.0;
        for (double Y : {0.03, 0.05, 0.08, 0.12, 0.2}) {
            const auto P = trial(v, Y);
            const auto E = dilute::error_integrals(P);
            // brute-force midpoint quadrature of both integrands
            const int n = 400000;
            double K = 0.0, L = 0.0;
            for (int k = 0; k < n; ++k) {
                const double r = P.b() * (k + 0.5) / n;
                K += std::abs(P.df(r)) * r * r;
                L += std::abs(P.dT(r)) * r * r;
            }
            K *= 4.0 * pi * P.b() / n;
            L *= 4.0 * pi * P.b() / n;
            EXPECT_NEAR(E.K, K, 1e-5 * K);
            EXPECT_NEAR(E.L_int, L, 1e-4 * L);
            const double ab = P.a() * P.b();
            lo = std::min(lo, E.K / ab);
            hi = std::max({hi, E.K / ab, E.L_int / ab});
        }
        EXPECT_LT(hi, 200.0);
        EXPECT_GT(lo, 1.0);
    }
}
