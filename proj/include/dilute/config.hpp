#pragma once

// Experiment configuration: a small INI-like text format.
//
//   [potential]
//   segment = 0 1 50          # r_lo r_hi value, repeated
//   r1 = 1                    # optional core metadata
//   lambda_plus = 50
//   lambda_minus = 0
//
//   [experiment]
//   densities = 1e-3 1e-4     # values of a^3 rho
//   N = 64
//   seeds = 1 2 3
//   n_samples = 4096
//   n_burn_in = 256
//   sweeps_per_sample = 1
//
//   [bounds]
//   t = 1
//   c1 = 12                   # optional, default from the covering constants
//   c2 = 2
//   const_C = 1
//
//   [output]
//   path = results.csv
//
// Omitted core metadata is inferred: r1 ends the leading run of positive
// segments, lambda_plus is their smallest value, lambda_minus the depth of
// the most negative segment.

#include "dilute/error.hpp"
#include "dilute/potentials.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace dilute {

struct ExperimentConfig {
    RadialPotential potential;
    std::vector<double> densities;
    std::size_t N = 64;
    std::vector<std::uint64_t> seeds;
    std::size_t n_samples = 4096;
    std::size_t n_burn_in = 256;
    std::size_t sweeps_per_sample = 1;
    double t = 1.0;
    std::optional<double> c1;
    std::optional<double> c2;
    double const_C = 1.0;
    std::string output_path;

    bool operator==(const ExperimentConfig&) const = default;
};

enum class ConfigIssueKind { UnknownKey, MissingRequired, InvariantViolation };

inline const char* to_string(ConfigIssueKind k) {
    switch (k) {
    case ConfigIssueKind::UnknownKey: return "UnknownKey";
    case ConfigIssueKind::MissingRequired: return "MissingRequired";
    case ConfigIssueKind::InvariantViolation: return "InvariantViolation";
    }
    return "?";
}

struct ConfigIssue {
    ConfigIssueKind kind;
    int line = 0; // 0 when the issue is not tied to a line
    std::string message;
};

class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<ConfigIssue> issues)
        : Error(ErrorCode::InvalidArgument, summarize(issues)), issues_(std::move(issues)) {}

    const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<ConfigIssue>& issues) {
        std::ostringstream out;
        for (const auto& i : issues) {
            out << to_string(i.kind);
            if (i.line > 0) out << " (line " << i.line << ")";
            out << ": " << i.message << '\n';
        }
        return out.str();
    }

    std::vector<ConfigIssue> issues_;
};

/// Shortest-safe text for a double: 17 significant digits round-trip exactly.
inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> words(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',')) ++i;
        const std::size_t start = i;
        while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != ',') ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
    T value{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
    return value;
}

} // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
    using detail::parse_number;
    std::vector<ConfigIssue> issues;
    auto issue = [&](ConfigIssueKind k, int line, std::string msg) { issues.push_back({k, line, std::move(msg)}); };

    static const std::map<std::string, std::vector<std::string>> known{
        {"potential", {"segment", "R0", "r1", "lambda_plus", "lambda_minus"}},
        {"experiment", {"densities", "N", "seeds", "n_samples", "n_burn_in", "sweeps_per_sample"}},
        {"bounds", {"t", "c1", "c2", "const_C"}},
        {"output", {"path"}},
    };

    struct Entry {
        std::string value;
        int line;
    };
    std::map<std::string, Entry> values; // "section.key"
    std::vector<std::pair<std::string, int>> segment_lines;
    std::string section;
    bool section_ok = false;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto line = detail::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                issue(ConfigIssueKind::UnknownKey, line_no, "malformed section header");
                section_ok = false;
                continue;
            }
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            section_ok = known.count(section) > 0;
            if (!section_ok) issue(ConfigIssueKind::UnknownKey, line_no, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            issue(ConfigIssueKind::UnknownKey, line_no, "expected key = value");
            continue;
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string value(detail::trim(line.substr(eq + 1)));
        if (section.empty()) {
            issue(ConfigIssueKind::UnknownKey, line_no, "key '" + key + "' outside any section");
            continue;
        }
        if (!section_ok) continue; // already reported
        const auto& keys = known.at(section);
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            issue(ConfigIssueKind::UnknownKey, line_no, "unknown key '" + key + "' in [" + section + "]");
            continue;
        }
        if (section == "potential" && key == "segment") {
            segment_lines.emplace_back(value, line_no);
            continue;
        }
        const std::string full = section + "." + key;
        if (const auto it = values.find(full); it != values.end()) {
            issue(ConfigIssueKind::UnknownKey, line_no,
                  "duplicate key '" + full + "' (lines " + std::to_string(it->second.line) + " and " +
                      std::to_string(line_no) + ")");
            continue;
        }
        values[full] = {value, line_no};
    }

    ExperimentConfig cfg;

    auto number = [&](const std::string& full, auto& out, auto check, const char* what) {
        using T = std::decay_t<decltype(out)>;
        const auto it = values.find(full);
        if (it == values.end()) return false;
        const auto parsed = parse_number<T>(it->second.value);
        if (!parsed) {
            issue(ConfigIssueKind::InvariantViolation, it->second.line, full + ": not a number: " + it->second.value);
        } else if (!check(*parsed)) {
            issue(ConfigIssueKind::InvariantViolation, it->second.line, full + " " + what);
        } else {
            out = *parsed;
        }
        return true;
    };
    auto positive = [](auto x) { return x > 0; };

    // potential
    std::vector<Segment> segs;
    for (const auto& [value, line] : segment_lines) {
        const auto w = detail::words(value);
        std::optional<double> lo, hi, val;
        if (w.size() == 3) {
            lo = parse_number<double>(w[0]);
            hi = parse_number<double>(w[1]);
            val = parse_number<double>(w[2]);
        }
        if (!lo || !hi || !val) {
            issue(ConfigIssueKind::InvariantViolation, line, "segment needs three numbers: r_lo r_hi value");
            continue;
        }
        segs.push_back({*lo, *hi, *val});
    }
    if (segment_lines.empty()) issue(ConfigIssueKind::MissingRequired, 0, "[potential] needs at least one segment");
    if (!segs.empty() && segs.size() == segment_lines.size()) {
        double lowest = 0.0;
        for (const auto& s : segs) lowest = std::min(lowest, s.value);
        double r1 = 0.0, lambda_plus = 0.0;
        for (const auto& s : segs) {
            if (!(s.value > 0.0)) break;
            lambda_plus = r1 == 0.0 ? s.value : std::min(lambda_plus, s.value);
            r1 = s.r_hi;
        }
        double R0 = segs.back().r_hi, lambda_minus = -lowest;
        auto any = [](double) { return true; };
        number("potential.R0", R0, any, "");
        number("potential.r1", r1, any, "");
        number("potential.lambda_plus", lambda_plus, any, "");
        number("potential.lambda_minus", lambda_minus, any, "");
        try {
            cfg.potential = RadialPotential(segs, R0, r1, lambda_plus, lambda_minus);
        } catch (const Error& e) {
            issue(ConfigIssueKind::InvariantViolation, segment_lines.front().second, e.what());
        }
    }

    // experiment
    if (const auto it = values.find("experiment.densities"); it != values.end()) {
        for (const auto w : detail::words(it->second.value)) {
            const auto x = parse_number<double>(w);
            if (!x) {
                issue(ConfigIssueKind::InvariantViolation, it->second.line, "density not a number: " + std::string(w));
            } else if (!(*x > 0.0 && *x < 1.0)) {
                issue(ConfigIssueKind::InvariantViolation, it->second.line,
                      "density " + std::string(w) + " outside (0, 1)");
            } else {
                cfg.densities.push_back(*x);
            }
        }
        if (detail::words(it->second.value).empty())
            issue(ConfigIssueKind::InvariantViolation, it->second.line, "densities is empty");
    } else {
        issue(ConfigIssueKind::MissingRequired, 0, "[experiment] densities is required");
    }
    if (const auto it = values.find("experiment.seeds"); it != values.end()) {
        for (const auto w : detail::words(it->second.value)) {
            const auto s = parse_number<std::uint64_t>(w);
            if (!s) issue(ConfigIssueKind::InvariantViolation, it->second.line, "seed not an unsigned integer: " + std::string(w));
            else cfg.seeds.push_back(*s);
        }
        if (detail::words(it->second.value).empty())
            issue(ConfigIssueKind::InvariantViolation, it->second.line, "at least one seed is required");
    } else {
        issue(ConfigIssueKind::MissingRequired, 0, "[experiment] seeds is required");
    }
    number("experiment.N", cfg.N, [](std::size_t n) { return n >= 2; }, "must be >= 2");
    number("experiment.n_samples", cfg.n_samples, [](std::size_t n) { return n >= 2; }, "must be >= 2");
    number("experiment.n_burn_in", cfg.n_burn_in, [](std::size_t) { return true; }, "");
    number("experiment.sweeps_per_sample", cfg.sweeps_per_sample, positive, "must be >= 1");

    // bounds
    number("bounds.t", cfg.t, [](double x) { return std::isfinite(x) && x > 0.0; }, "must be positive");
    double c = 0.0;
    if (number("bounds.c1", c, [](double x) { return x >= 1.0; }, "must be >= 1") && c >= 1.0) cfg.c1 = c;
    c = 0.0;
    if (number("bounds.c2", c, [](double x) { return x >= 1.0; }, "must be >= 1") && c >= 1.0) cfg.c2 = c;
    number("bounds.const_C", cfg.const_C, [](double x) { return std::isfinite(x) && x >= 0.0; }, "must be >= 0");

    if (const auto it = values.find("output.path"); it != values.end()) cfg.output_path = it->second.value;

    if (!issues.empty()) {
        std::stable_sort(issues.begin(), issues.end(),
                         [](const ConfigIssue& x, const ConfigIssue& y) { return x.line < y.line; });
        throw ConfigError(std::move(issues));
    }
    return cfg;
}

/// Canonical text of a config; parse_config(emit_config(c)) == c.
inline std::string emit_config(const ExperimentConfig& c) {
    std::ostringstream out;
    const auto& v = c.potential;
    out << "[potential]\n";
    for (const auto& s : v.segments())
        out << "segment = " << format_double(s.r_lo) << ' ' << format_double(s.r_hi) << ' ' << format_double(s.value)
            << '\n';
    out << "R0 = " << format_double(v.R0()) << '\n'
        << "r1 = " << format_double(v.r1()) << '\n'
        << "lambda_plus = " << format_double(v.lambda_plus()) << '\n'
        << "lambda_minus = " << format_double(v.lambda_minus()) << '\n';

    out << "\n[experiment]\ndensities =";
    for (double x : c.densities) out << ' ' << format_double(x);
    out << "\nN = " << c.N << "\nseeds =";
    for (auto s : c.seeds) out << ' ' << s;
    out << "\nn_samples = " << c.n_samples << "\nn_burn_in = " << c.n_burn_in
        << "\nsweeps_per_sample = " << c.sweeps_per_sample << '\n';

    out << "\n[bounds]\nt = " << format_double(c.t) << '\n';
    if (c.c1) out << "c1 = " << format_double(*c.c1) << '\n';
    if (c.c2) out << "c2 = " << format_double(*c.c2) << '\n';
    out << "const_C = " << format_double(c.const_C) << '\n';

    if (!c.output_path.empty()) out << "\n[output]\npath = " << c.output_path << '\n';
    return out.str();
}

/// 64-bit FNV-1a of the canonical config text, as 16 hex digits.
inline std::string config_digest(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace dilute
