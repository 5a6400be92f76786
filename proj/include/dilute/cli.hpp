#pragma once

// Experiment driver behind the `dilute` command line tool.
//
//   scatter  CSV of (r, u, f) for the zero-energy solution, a=<value> on the log
//   check    key=value condition report; exit 1 when a condition fails
//   upper    one CSV row per (density, seed) with the variational estimate
//   lower    key=value report and (n, temple_bound, floor) table per density
//   sweep    per (density, seed): upper estimate next to the lower floor
//
// Exit codes: 0 success, 1 failed condition check, 2 error. Output depends
// only on the config; DILUTE_WORKERS sets the number of worker threads.

#include "dilute/config.hpp"
#include "dilute/error.hpp"
#include "dilute/lower_bound.hpp"
#include "dilute/scattering.hpp"
#include "dilute/trial_state.hpp"
#include "dilute/vmc.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace dilute {

inline constexpr const char* version = "0.1.0";

inline constexpr int exit_success = 0;
inline constexpr int exit_failed_check = 1;
inline constexpr int exit_error = 2;

/// Worker count from DILUTE_WORKERS (default 1).
inline std::size_t default_workers() {
    if (const char* env = std::getenv("DILUTE_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
    }
    return 1;
}

namespace detail {

// Runs job(i) for i < n on up to `workers` threads. Results are stored by
// index, so the output order never depends on scheduling.
template <class R>
std::vector<R> run_jobs(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& job) {
    std::vector<R> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto loop = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                out[i] = job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, n));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(loop);
    loop();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline std::string header(const ExperimentConfig& c) {
    std::string seeds;
    for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
    return std::string("# dilute ") + version + " config=" + config_digest(c) + " seeds=" + seeds + "\n";
}

inline std::string fmt(double x) { return format_double(x); }

inline CConstants constants_for(const ExperimentConfig& c) {
    CConstants k{};
    if (!c.c1 || !c.c2) {
        const auto& v = c.potential;
        if (!(v.r1() > 0.0))
            fail(ErrorCode::InvalidArgument, "the potential declares no core (r1 = 0): set c1 and c2 in [bounds]");
        k = default_c_constants(v.R0() / v.r1());
    }
    if (c.c1) k.c1 = *c.c1;
    if (c.c2) k.c2 = *c.c2;
    return k;
}

inline ChainOptions chain_options(const ExperimentConfig& c) {
    return {.n_samples = c.n_samples, .n_burn_in = c.n_burn_in, .sweeps_per_sample = c.sweeps_per_sample};
}

inline int run_scatter(const ExperimentConfig& c, std::ostream& out, std::ostream& log) {
    const auto& v = c.potential;
    require(v.R0() > 0.0, "scatter needs a potential with R0 > 0");
    const auto sol = solve_zero_energy(v, 4.0 * v.R0(), default_scattering_steps);
    out << header(c) << "r,u,f\n";
    for (std::size_t i = 0; i < sol.grid.size(); i += 100)
        out << fmt(sol.grid[i]) << ',' << fmt(sol.u[i]) << ',' << fmt(sol.f(i)) << '\n';
    log << "a=" << fmt(sol.a) << '\n';
    return exit_success;
}

inline int run_check(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
    const auto k = constants_for(c);
    const auto report = check_theorem2(c.potential, c.t, k.c1, k.c2);
    out << header(c) << to_key_value(report) << "negative_part_l1=" << fmt(check_corollary2_narrowness(c.potential))
        << '\n';
    return report.passed() ? exit_success : exit_failed_check;
}

inline std::vector<EnergyEstimate> upper_estimates(const ExperimentConfig& c) {
    const std::size_t n_seeds = c.seeds.size();
    return run_jobs<EnergyEstimate>(c.densities.size() * n_seeds, default_workers(), [&](std::size_t i) {
        return estimate_upper_bound(c.potential, c.densities[i / n_seeds], c.N, c.seeds[i % n_seeds],
                                    chain_options(c));
    });
}

inline int run_upper(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
    const double a = scattering_length(c.potential);
    const auto estimates = upper_estimates(c);
    out << header(c) << "a3rho,N,L,mean,stderr,ratio,Y_up,acceptance_rate,seed\n";
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double x = c.densities[i / c.seeds.size()];
        const double rho = x / (a * a * a);
        const double L = std::cbrt(static_cast<double>(c.N) / rho);
        const double Y = std::pow(4.0 * std::numbers::pi / 3.0 * x, 0.25);
        const auto& e = estimates[i];
        out << fmt(x) << ',' << c.N << ',' << fmt(L) << ',' << fmt(e.mean) << ',' << fmt(e.std_error) << ','
            << fmt(e.ratio_to_bogoliubov) << ',' << fmt(Y) << ',' << fmt(e.acceptance_rate) << ','
            << c.seeds[i % c.seeds.size()] << '\n';
    }
    return exit_success;
}

inline int run_lower(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
    out << header(c);
    for (double x : c.densities) {
        const auto r = assemble_lemma1(c.potential, x, c.const_C, c.t);
        out << "[a3rho=" << fmt(x) << "]\n"
            << "a=" << fmt(r.a) << '\n'
            << "rho=" << fmt(r.rho) << '\n'
            << "R0_unit=" << fmt(r.R0) << '\n'
            << "sl_v_plus_unit=" << fmt(r.sl_v_plus) << '\n'
            << "const_C=" << fmt(r.const_C) << '\n'
            << "t=" << fmt(r.t) << '\n'
            << "Y_low=" << fmt(r.Y_low) << '\n'
            << "R=" << fmt(r.R) << '\n'
            << "ell=" << fmt(r.ell) << '\n'
            << "epsilon=" << fmt(r.epsilon) << '\n'
            << "epsilon_admissible=" << (r.epsilon_admissible ? 1 : 0) << '\n'
            << "U0=" << fmt(r.U0.value) << '\n'
            << "floor_per_particle=" << fmt(r.floor_per_particle) << '\n'
            << "floor_ratio=" << fmt(r.floor_ratio) << '\n'
            << "R_covers_core=" << (r.R_covers_core ? 1 : 0) << '\n'
            << "ordering_ok=" << (r.ordering_ok ? 1 : 0) << '\n'
            << "n,temple_bound,floor,negative_gap\n";
        for (const auto& row : r.table)
            out << row.n << ',' << fmt(row.temple_bound) << ',' << fmt(row.floor) << ',' << (row.negative_gap ? 1 : 0)
                << '\n';
    }
    return exit_success;
}

inline int run_sweep(const ExperimentConfig& c, std::ostream& out, std::ostream&) {
    const auto estimates = upper_estimates(c);
    out << header(c) << "a3rho,seed,upper_ratio,upper_ratio_stderr,Y_up,lower_ratio,Y_low\n";
    for (std::size_t d = 0; d < c.densities.size(); ++d) {
        const double x = c.densities[d];
        const auto r = assemble_lemma1(c.potential, x, c.const_C, c.t);
        const double Y = std::pow(4.0 * std::numbers::pi / 3.0 * x, 0.25);
        for (std::size_t s = 0; s < c.seeds.size(); ++s) {
            const auto& e = estimates[d * c.seeds.size() + s];
            out << fmt(x) << ',' << c.seeds[s] << ',' << fmt(e.ratio_to_bogoliubov) << ','
                << fmt(e.ratio_std_error) << ',' << fmt(Y) << ',' << fmt(r.floor_ratio) << ',' << fmt(r.Y_low)
                << '\n';
        }
    }
    return exit_success;
}

} // namespace detail

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"scatter", "check", "upper", "lower", "sweep"};
    return names;
}

/// Runs one subcommand, writing results to `out` and diagnostics to `log`.
inline int run(const ExperimentConfig& config, std::string_view subcommand, std::ostream& out, std::ostream& log) {
    try {
        if (subcommand == "scatter") return detail::run_scatter(config, out, log);
        if (subcommand == "check") return detail::run_check(config, out, log);
        if (subcommand == "upper") return detail::run_upper(config, out, log);
        if (subcommand == "lower") return detail::run_lower(config, out, log);
        if (subcommand == "sweep") return detail::run_sweep(config, out, log);
        log << "error: unknown subcommand '" << subcommand << "'\n";
    } catch (const Error& e) {
        log << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
    }
    return exit_error;
}

/// Same, writing to config.output_path (standard output when empty).
inline int run(const ExperimentConfig& config, std::string_view subcommand, std::ostream& stdout_stream,
               std::ostream& log, bool to_file) {
    if (!to_file || config.output_path.empty()) return run(config, subcommand, stdout_stream, log);
    std::ostringstream buffer;
    const int code = run(config, subcommand, buffer, log);
    if (code == exit_error) return code;
    std::ofstream file(config.output_path, std::ios::binary);
    file << buffer.str();
    file.flush();
    if (!file) {
        log << "error: Io: cannot write " << config.output_path << '\n';
        return exit_error;
    }
    return code;
}

} // namespace dilute
