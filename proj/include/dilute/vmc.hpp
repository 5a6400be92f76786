#pragma once

// Metropolis sampling of |Phi_N|^2 in the periodic box and the variational
// energy estimate built on it.

#include "dilute/error.hpp"
#include "dilute/potentials.hpp"
#include "dilute/trial_state.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace dilute {

struct BlockingLevel {
    std::size_t block_size = 1;
    std::size_t n_blocks = 0;
    double std_error = 0.0;
};

struct BlockingResult {
    double mean = 0.0;
    double std_error = 0.0; // plateau value
    std::vector<BlockingLevel> levels;
};

/// Flyvbjerg-Petersen style blocking: block sizes 1, 2, 4, ... The reported
/// error is the largest level estimate among levels with at least 32 blocks
/// (the first level when the series is shorter than that).
inline BlockingResult blocking_analysis(std::span<const double> series) {
    require(series.size() >= 2, "blocking needs at least two samples");
    BlockingResult out;
    double sum = 0.0;
    for (double x : series) sum += x;
    out.mean = sum / static_cast<double>(series.size());

    for (std::size_t size = 1; series.size() / size >= 2; size *= 2) {
        const std::size_t nb = series.size() / size;
        std::vector<double> means(nb, 0.0);
        double grand = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            for (std::size_t i = 0; i < size; ++i) means[b] += series[b * size + i];
            means[b] /= static_cast<double>(size);
            grand += means[b];
        }
        grand /= static_cast<double>(nb);
        double ss = 0.0;
        for (double m : means) ss += (m - grand) * (m - grand);
        out.levels.push_back({size, nb, std::sqrt(ss / (static_cast<double>(nb) * static_cast<double>(nb - 1)))});
    }
    out.std_error = out.levels.front().std_error;
    for (const auto& level : out.levels)
        if (level.n_blocks >= 32) out.std_error = std::max(out.std_error, level.std_error);
    return out;
}

/// Sum_i |grad_i log Phi_N|^2 + Sum_{i<j} v(d_ij). Its average under
/// |Phi_N|^2 is the Rayleigh quotient <Phi, H Phi> / <Phi, Phi>.
inline double local_variational_integrand(const ParticleConfiguration& config, const TrialParams& params,
                                          const RadialPotential& v) {
    double kinetic = 0.0;
    if (!params.is_free()) {
        for (const auto& g : grad_log_psi(config, params)) kinetic += dot(g, g);
    }
    double potential = 0.0;
    if (v.R0() > 0.0) {
        for (std::size_t i = 0; i < config.size(); ++i)
            for (std::size_t j = i + 1; j < config.size(); ++j) potential += v(config.distance(i, j));
    }
    return kinetic + potential;
}

/// Uniform double in [0, 1) from the top 53 bits; unlike
/// std::uniform_real_distribution the mapping is fixed across platforms.
inline double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

inline ParticleConfiguration random_configuration(std::size_t N, double L, std::mt19937_64& gen) {
    std::vector<Vec3> x(N);
    for (auto& p : x) p = {L * uniform01(gen), L * uniform01(gen), L * uniform01(gen)};
    return ParticleConfiguration(L, std::move(x));
}

/// Single-particle Metropolis walk on |Phi|^2. Proposals are uniform in a
/// cube of side step() around the old position. log F_p is cached per
/// particle; a move of particle k recomputes F_k and the F_p (p > k) whose
/// particle lies within b of the old or new position of k, since priors
/// farther than b never change F_p.
class MetropolisChain {
public:
    MetropolisChain(TrialParams params, ParticleConfiguration start, std::uint64_t seed, double step)
        : params_(std::move(params)), x_(std::move(start)), gen_(seed) {
        require(x_.box() == params_.L(), "configuration box differs from the trial box");
        set_step(step);
        init_cache();
    }

    /// Starts from uniformly random positions drawn from the chain's own stream.
    MetropolisChain(TrialParams params, std::size_t N, std::uint64_t seed, double step)
        : params_(std::move(params)), x_(params_.L(), {}), gen_(seed) {
        set_step(step);
        for (int attempt = 0;; ++attempt) {
            x_ = random_configuration(N, params_.L(), gen_);
            init_cache();
            if (std::isfinite(log_psi_)) break;
            if (attempt > 1000) fail(ErrorCode::NonFiniteSample, "no starting configuration with Phi > 0");
        }
    }

    /// Default proposal size: b, capped at the box side.
    static double default_step(const TrialParams& params) {
        return params.is_free() ? params.L() : std::min(params.b(), params.L());
    }

    bool try_move(std::size_t k) {
        ++attempted_;
        const Vec3 old = x_[k];
        const double h = step_;
        const Vec3 proposal{old[0] + h * (uniform01(gen_) - 0.5), old[1] + h * (uniform01(gen_) - 0.5),
                            old[2] + h * (uniform01(gen_) - 0.5)};

        affected_.clear();
        affected_.push_back(k);
        const double b = params_.b();
        if (b > 0.0) {
            for (std::size_t p = k + 1; p < x_.size(); ++p) {
                if (x_.distance_from(old, p) <= b) affected_.push_back(p);
            }
        }
        x_.move_to(k, proposal);
        if (b > 0.0) {
            for (std::size_t p = k + 1; p < x_.size(); ++p) {
                if (x_.distance(k, p) <= b && std::find(affected_.begin(), affected_.end(), p) == affected_.end())
                    affected_.push_back(p);
            }
        }

        double delta = 0.0;
        bool zero = false;
        fresh_.resize(affected_.size());
        for (std::size_t i = 0; i < affected_.size(); ++i) {
            const double F = evaluate_F_p(x_, affected_[i], params_);
            if (!(F > 0.0)) {
                zero = true;
                break;
            }
            fresh_[i] = std::log(F);
            delta += fresh_[i] - logF_[affected_[i]];
        }

        bool accept = !zero;
        if (accept && delta < 0.0) accept = uniform01(gen_) < std::exp(2.0 * delta);
        if (!accept) {
            x_.move_to(k, old);
            return false;
        }
        for (std::size_t i = 0; i < affected_.size(); ++i) logF_[affected_[i]] = fresh_[i];
        log_psi_ += delta;
        ++accepted_;
        return true;
    }

    void sweep() {
        for (std::size_t k = 0; k < x_.size(); ++k) try_move(k);
    }

    /// Burn-in sweep that rescales the step toward 50% acceptance.
    void tuning_sweep() {
        const std::size_t acc0 = accepted_, att0 = attempted_;
        sweep();
        const double rate = static_cast<double>(accepted_ - acc0) / static_cast<double>(attempted_ - att0);
        set_step(std::clamp(step_ * std::exp(2.0 * (rate - 0.5)), 1e-6 * params_.L(), params_.L()));
    }

    const ParticleConfiguration& configuration() const noexcept { return x_; }
    const TrialParams& params() const noexcept { return params_; }
    double log_psi() const noexcept { return log_psi_; }
    double step() const noexcept { return step_; }
    void set_step(double step) {
        require(std::isfinite(step) && step > 0.0, "step must be positive");
        step_ = step;
    }
    std::size_t accepted() const noexcept { return accepted_; }
    std::size_t attempted() const noexcept { return attempted_; }
    double acceptance_rate() const {
        return attempted_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(attempted_);
    }
    void reset_counters() { accepted_ = attempted_ = 0; }
    std::mt19937_64& engine() noexcept { return gen_; }

private:
    void init_cache() {
        logF_.assign(x_.size(), 0.0);
        log_psi_ = 0.0;
        for (std::size_t p = 1; p < x_.size(); ++p) {
            const double F = evaluate_F_p(x_, p, params_);
            logF_[p] = F > 0.0 ? std::log(F) : -std::numeric_limits<double>::infinity();
            log_psi_ += logF_[p];
        }
    }

    TrialParams params_;
    ParticleConfiguration x_;
    std::mt19937_64 gen_;
    double step_ = 1.0;
    std::vector<double> logF_;
    double log_psi_ = 0.0;
    std::size_t accepted_ = 0;
    std::size_t attempted_ = 0;
    std::vector<std::size_t> affected_;
    std::vector<double> fresh_;
};

struct EnergyEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_burn_in = 0;
    double acceptance_rate = 0.0;
    double ratio_to_bogoliubov = 0.0; // mean / (4 pi a rho N)
    double ratio_std_error = 0.0;
};

struct ChainOptions {
    std::size_t n_samples = 4096;
    std::size_t n_burn_in = 256;      // sweeps, with step tuning
    std::size_t sweeps_per_sample = 1;
    double step = 0.0;                // 0: MetropolisChain::default_step
};

inline EnergyEstimate estimate_upper_bound(const TrialParams& params, const RadialPotential& v, std::uint64_t seed,
                                           const ChainOptions& options = {}) {
    require(options.n_samples >= 2, "need at least two samples");
    require(options.sweeps_per_sample >= 1, "sweeps_per_sample must be >= 1");
    const double step = options.step > 0.0 ? options.step : MetropolisChain::default_step(params);
    MetropolisChain chain(params, params.N(), seed, step);
    for (std::size_t s = 0; s < options.n_burn_in; ++s) chain.tuning_sweep();
    chain.reset_counters();

    std::vector<double> samples(options.n_samples);
    for (std::size_t i = 0; i < options.n_samples; ++i) {
        for (std::size_t s = 0; s < options.sweeps_per_sample; ++s) chain.sweep();
        samples[i] = local_variational_integrand(chain.configuration(), params, v);
        if (!std::isfinite(samples[i]))
            fail(ErrorCode::NonFiniteSample, "non-finite integrand at sample " + std::to_string(i));
    }
    const auto blocks = blocking_analysis(samples);

    EnergyEstimate e;
    e.mean = blocks.mean;
    e.std_error = blocks.std_error;
    e.n_samples = options.n_samples;
    e.n_burn_in = options.n_burn_in;
    e.acceptance_rate = chain.acceptance_rate();
    const double scale = 4.0 * std::numbers::pi * params.a() * params.rho() * static_cast<double>(params.N());
    e.ratio_to_bogoliubov = e.mean / scale; // NaN for the free gas
    e.ratio_std_error = e.std_error / scale;
    return e;
}

/// Builds the trial state at a^3 rho = gas_parameter with L = (N / rho)^(1/3)
/// and runs the estimate.
inline EnergyEstimate estimate_upper_bound(const RadialPotential& v, double gas_parameter, std::size_t N,
                                           std::uint64_t seed, const ChainOptions& options = {}) {
    require(gas_parameter > 0.0 && gas_parameter < 1.0, "a^3 rho must lie in (0, 1)");
    require(N >= 1, "need at least one particle");
    const double a = scattering_length(v);
    require(a > 0.0, "the upper bound needs a positive scattering length");
    const double rho = gas_parameter / (a * a * a);
    const double L = std::cbrt(static_cast<double>(N) / rho);
    return estimate_upper_bound(build_trial(v, rho, N, L), v, seed, options);
}

/// Inverse-variance combination of independent estimates. Estimates with
/// zero error (deterministic integrands) are averaged plainly.
inline EnergyEstimate merge_estimates(std::span<const EnergyEstimate> parts) {
    require(!parts.empty(), "nothing to merge");
    EnergyEstimate out;
    double w_sum = 0.0, m_sum = 0.0, r_sum = 0.0, acc = 0.0;
    const bool exact = std::any_of(parts.begin(), parts.end(), [](const auto& e) { return e.std_error == 0.0; });
    for (const auto& e : parts) {
        const double w = exact ? 1.0 : 1.0 / (e.std_error * e.std_error);
        w_sum += w;
        m_sum += w * e.mean;
        r_sum += w * e.ratio_to_bogoliubov;
        acc += e.acceptance_rate;
        out.n_samples += e.n_samples;
        out.n_burn_in += e.n_burn_in;
    }
    out.mean = m_sum / w_sum;
    out.ratio_to_bogoliubov = r_sum / w_sum;
    out.acceptance_rate = acc / static_cast<double>(parts.size());
    if (!exact) {
        out.std_error = 1.0 / std::sqrt(w_sum);
        const double scale = parts.front().mean / parts.front().ratio_to_bogoliubov;
        out.ratio_std_error = out.std_error / scale;
    }
    return out;
}

struct ProbeEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_samples = 0;
};

/// ||Phi_N||^2 / (||Phi_{N-1}||^2 L^3), estimated as the average of F_N^2
/// over x_1..x_{N-1} ~ |Phi_{N-1}|^2 and x_N uniform in the box.
inline ProbeEstimate norm_ratio_probe(const TrialParams& params, std::uint64_t seed, std::size_t n_samples,
                                      std::size_t n_burn_in = 256, std::size_t draws_per_sample = 16) {
    require(params.N() >= 2, "the norm-ratio probe needs N >= 2");
    require(n_samples >= 2 && draws_per_sample >= 1, "need samples");
    const std::size_t M = params.N() - 1;
    MetropolisChain chain(params, M, seed, MetropolisChain::default_step(params));
    for (std::size_t s = 0; s < n_burn_in; ++s) chain.tuning_sweep();

    const double L = params.L();
    std::vector<double> samples(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        chain.sweep();
        double sum = 0.0;
        for (std::size_t d = 0; d < draws_per_sample; ++d) {
            auto& gen = chain.engine();
            const Vec3 y{L * uniform01(gen), L * uniform01(gen), L * uniform01(gen)};
            const double F = F_value(neighbor_stats_of(chain.configuration(), y, M, M, params), params);
            sum += F * F;
        }
        samples[i] = sum / static_cast<double>(draws_per_sample);
    }
    const auto blocks = blocking_analysis(samples);
    return {blocks.mean, blocks.std_error, n_samples};
}

} // namespace dilute
