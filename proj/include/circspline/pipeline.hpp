#pragma once

// End-to-end wind-direction pipeline: CSV ingestion, monthly binning with
// zero-count handling, clr transform, per-month spline fits (four estimator
// variants), dataset statistics, function-on-scalar regression with bootstrap
// bands, prediction, deterministic SVG plots and a synthetic-data generator.
//
// Angle convention: directions enter as compass degrees (0 = north, growing
// clockwise) and are carried through as the same angle in radians on
// [0, 2*pi). Reports emit both degrees and radians of this angle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "circspline/bayes.hpp"
#include "circspline/circstats.hpp"
#include "circspline/errors.hpp"
#include "circspline/fosreg.hpp"
#include "circspline/random.hpp"
#include "circspline/serialization.hpp"
#include "circspline/smoothfit.hpp"
#include "circspline/splinecore.hpp"
#include "circspline/svg.hpp"

namespace circspline::pipeline {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// ---------------------------------------------------------------------------
// Records and CSV ingestion
// ---------------------------------------------------------------------------

struct WindRecord {
    std::string timestamp;                // ISO-8601, at least YYYY-MM-...
    std::optional<double> direction_deg;  // compass degrees in [0, 360); absent = undefined
    double speed = 0.0;                   // nonnegative
    std::vector<std::pair<std::string, std::string>> extras;  // untouched extra columns

    std::string month_label() const { return timestamp.substr(0, 7); }
    double direction_rad() const {
        return *direction_deg * (kTwoPi / 360.0);
    }
};

struct CsvColumns {
    std::string timestamp = "timestamp";
    std::string direction = "wind_dir_deg";
    std::string speed = "wind_speed_kmh";
};

/// Retained records plus exact accounting: excluded records are the
/// calm/undefined-direction rows, malformed rows are unparsable ones, and
/// retained + excluded_calm + malformed always equals total.
struct IngestResult {
    std::vector<WindRecord> records;
    std::vector<std::string> extra_columns;  // non-required header columns, in order
    std::size_t total = 0;
    std::size_t retained = 0;
    std::size_t excluded_calm = 0;
    std::size_t malformed = 0;
    std::vector<std::string> issues;  // first descriptions of malformed rows
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Quote-aware CSV field splitter; "" inside a quoted field is a literal quote.
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool parse_double(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    try {
        std::size_t used = 0;
        out = std::stod(t, &used);
        return used == t.size() && std::isfinite(out);
    } catch (const std::exception&) {
        return false;
    }
}

/// Timestamps must start with a YYYY-MM prefix with a real month number; the
/// remainder (day, time) is carried through without further validation.
inline bool valid_timestamp(const std::string& ts) {
    if (ts.size() < 7) return false;
    for (int i : {0, 1, 2, 3, 5, 6})
        if (!std::isdigit(static_cast<unsigned char>(ts[static_cast<std::size_t>(i)])))
            return false;
    if (ts[4] != '-') return false;
    const int month = (ts[5] - '0') * 10 + (ts[6] - '0');
    if (month < 1 || month > 12) return false;
    return ts.size() == 7 || ts[7] == '-';
}

} // namespace detail

/// Parse a wind-record CSV. Calm/undefined-direction rows are excluded (and
/// counted), malformed rows are tolerated up to `malformed_threshold` as a
/// fraction of all data rows, beyond which ingestion fails.
inline IngestResult ingest_csv(std::istream& is, const CsvColumns& columns = {},
                               double malformed_threshold = 0.01) {
    std::string line;
    if (!std::getline(is, line)) throw input_error("ingest: empty file, expected a CSV header");
    const std::vector<std::string> header = detail::split_csv(line);

    auto find_column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (detail::trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
        throw input_error("ingest: required column '" + name + "' missing from header");
    };
    const std::size_t c_ts = static_cast<std::size_t>(find_column(columns.timestamp));
    const std::size_t c_dir = static_cast<std::size_t>(find_column(columns.direction));
    const std::size_t c_speed = static_cast<std::size_t>(find_column(columns.speed));

    IngestResult result;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != c_ts && i != c_dir && i != c_speed)
            result.extra_columns.push_back(detail::trim(header[i]));

    std::size_t lineno = 1;
    auto flag_malformed = [&](const std::string& why) {
        ++result.malformed;
        if (result.issues.size() < 20)
            result.issues.push_back("line " + std::to_string(lineno) + ": " + why);
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        ++result.total;
        const std::vector<std::string> fields = detail::split_csv(line);
        if (fields.size() != header.size()) {
            flag_malformed("expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()));
            continue;
        }

        WindRecord rec;
        rec.timestamp = detail::trim(fields[c_ts]);
        if (!detail::valid_timestamp(rec.timestamp)) {
            flag_malformed("unparsable timestamp '" + rec.timestamp + "'");
            continue;
        }
        if (!detail::parse_double(fields[c_speed], rec.speed) || rec.speed < 0.0) {
            flag_malformed("unparsable or negative speed '" + detail::trim(fields[c_speed]) + "'");
            continue;
        }

        const std::string dir_text = detail::trim(fields[c_dir]);
        if (dir_text.empty()) {
            // Calm / undefined direction: excluded from analysis, counted.
            ++result.excluded_calm;
            continue;
        }
        double deg = 0.0;
        if (!detail::parse_double(dir_text, deg)) {
            flag_malformed("unparsable direction '" + dir_text + "'");
            continue;
        }
        deg = std::fmod(deg, 360.0);
        if (deg < 0.0) deg += 360.0;
        rec.direction_deg = deg;

        for (std::size_t i = 0; i < header.size(); ++i)
            if (i != c_ts && i != c_dir && i != c_speed)
                rec.extras.emplace_back(detail::trim(header[i]), detail::trim(fields[i]));

        ++result.retained;
        result.records.push_back(std::move(rec));
    }

    if (result.total > 0 &&
        static_cast<double>(result.malformed) >
            malformed_threshold * static_cast<double>(result.total)) {
        throw input_error("ingest: " + std::to_string(result.malformed) + " of " +
                          std::to_string(result.total) + " rows malformed, above the " +
                          std::to_string(malformed_threshold) + " threshold; first issue: " +
                          (result.issues.empty() ? std::string("n/a") : result.issues.front()));
    }
    return result;
}

inline IngestResult ingest_csv_file(const std::string& path, const CsvColumns& columns = {},
                                    double malformed_threshold = 0.01) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("ingest: cannot open " + path);
    return ingest_csv(is, columns, malformed_threshold);
}

// ---------------------------------------------------------------------------
// Binning and zero-count handling
// ---------------------------------------------------------------------------

/// How zero-count bins are made strictly positive before the clr transform.
/// Additive smoothing adds the pseudo-count to every bin; the multiplicative
/// strategy gives zero bins the prior mass c/(N + m c) and rescales the rest;
/// Reject refuses months with empty bins.
enum class ZeroBinStrategy { AdditiveSmoothing, Reject, BayesMultiplicative };

inline ZeroBinStrategy parse_zero_strategy(const std::string& name) {
    if (name == "additive") return ZeroBinStrategy::AdditiveSmoothing;
    if (name == "reject") return ZeroBinStrategy::Reject;
    if (name == "bayes_mult") return ZeroBinStrategy::BayesMultiplicative;
    throw config_error("unknown zero_strategy '" + name +
                       "' (expected additive, reject or bayes_mult)");
}

inline const char* zero_strategy_name(ZeroBinStrategy s) {
    switch (s) {
        case ZeroBinStrategy::AdditiveSmoothing: return "additive";
        case ZeroBinStrategy::Reject: return "reject";
        default: return "bayes_mult";
    }
}

/// One month of binned directions: equal-width circular bins starting at
/// north, relative frequencies after zero handling, and the discrete clr
/// values at the bin midpoints.
struct MonthlyHistogram {
    std::string label;               // YYYY-MM
    std::vector<double> bin_edges;   // m+1 edges over [0, 2*pi]
    std::vector<long long> counts;   // raw counts, sum > 0
    Eigen::VectorXd rel_freq;        // positive, sums to 1
    Grid grid;                // bin midpoints
    Eigen::VectorXd clr_values;      // zero weighted integral
    std::size_t n_obs = 0;
};

inline MonthlyHistogram bin_month(const std::vector<WindRecord>& records,
                                  const std::string& year_month, int m_bins,
                                  ZeroBinStrategy strategy = ZeroBinStrategy::AdditiveSmoothing,
                                  double pseudo_count = 0.5,
                                  std::vector<std::string>* warnings = nullptr) {
    if (m_bins < 4) throw input_error("bin_month: need at least 4 bins");
    if (!(pseudo_count > 0.0)) throw input_error("bin_month: pseudo-count must be positive");

    const int m = m_bins;
    const double width = kTwoPi / m;
    std::vector<long long> counts(static_cast<std::size_t>(m), 0);
    std::size_t n_obs = 0;
    for (const WindRecord& rec : records) {
        if (!rec.direction_deg || rec.month_label() != year_month) continue;
        int idx = static_cast<int>(rec.direction_rad() / width);
        if (idx >= m) idx = m - 1;  // theta == 2*pi only through rounding
        ++counts[static_cast<std::size_t>(idx)];
        ++n_obs;
    }
    if (n_obs == 0) throw input_error("bin_month: no usable observations in month " + year_month);
    if (warnings && n_obs < static_cast<std::size_t>(m))
        warnings->push_back("month " + year_month + ": only " + std::to_string(n_obs) +
                            " observations for " + std::to_string(m) + " bins");

    Eigen::VectorXd rel(m);
    const double total = static_cast<double>(n_obs);
    switch (strategy) {
        case ZeroBinStrategy::AdditiveSmoothing:
            for (int i = 0; i < m; ++i)
                rel(i) = (static_cast<double>(counts[static_cast<std::size_t>(i)]) + pseudo_count) /
                         (total + pseudo_count * m);
            break;
        case ZeroBinStrategy::Reject:
            for (int i = 0; i < m; ++i)
                if (counts[static_cast<std::size_t>(i)] == 0)
                    throw input_error("bin_month: month " + year_month + " has an empty bin " +
                                      std::to_string(i) + " and zero_strategy is 'reject'");
            for (int i = 0; i < m; ++i)
                rel(i) = static_cast<double>(counts[static_cast<std::size_t>(i)]) / total;
            break;
        case ZeroBinStrategy::BayesMultiplicative: {
            const double prior = pseudo_count / (total + pseudo_count * m);
            double zero_mass = 0.0;
            for (int i = 0; i < m; ++i)
                if (counts[static_cast<std::size_t>(i)] == 0) zero_mass += prior;
            for (int i = 0; i < m; ++i) {
                const auto c = counts[static_cast<std::size_t>(i)];
                rel(i) = (c == 0) ? prior
                                  : (1.0 - zero_mass) * static_cast<double>(c) / total;
            }
            break;
        }
    }

    MonthlyHistogram out{year_month,
                         {},
                         std::move(counts),
                         rel,
                         Grid::uniform(0.0, kTwoPi, m),
                         Eigen::VectorXd(),
                         n_obs};
    out.bin_edges.resize(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) out.bin_edges[static_cast<std::size_t>(i)] = i * width;

    // Relative frequency over bin width is a piecewise-constant density with
    // unit integral; its clr values at the midpoints feed the spline fit.
    const DensityCurve density(out.grid, rel / width);
    out.clr_values = clr_transform(density).values();
    return out;
}

// ---------------------------------------------------------------------------
// Estimator variants
// ---------------------------------------------------------------------------

/// The four estimator variants: (a) derivative-penalty smoothing with l=1,
/// (b) with l=2, (c) difference-penalty P-spline with d=1, (d) with d=2.
struct VariantSpec {
    char letter = 'a';
    bool pspline = false;
    int order = 1;
};

inline VariantSpec variant_spec(char letter) {
    switch (letter) {
        case 'a': return {'a', false, 1};
        case 'b': return {'b', false, 2};
        case 'c': return {'c', true, 1};
        case 'd': return {'d', true, 2};
        default: throw config_error(std::string("unknown variant '") + letter +
                                    "' (expected a, b, c or d)");
    }
}

struct MonthFit {
    std::string month;
    char variant = 'a';
    bool auto_selected = true;
    FitResult fit;
};

/// Fit one month's clr values with the given variant; `param` fixes alpha or
/// rho, absent means GCV optimization. Errors are annotated with the month.
inline MonthFit fit_month(const MonthlyHistogram& hist, const KnotConfig& knots, char variant,
                          std::optional<double> param, bool cyclic_differences = false) {
    const VariantSpec spec = variant_spec(variant);
    try {
        std::vector<double> xs = hist.grid.points();
        std::vector<double> ys(hist.clr_values.data(), hist.clr_values.data() + hist.clr_values.size());
        FitProblem problem(std::move(xs), std::move(ys), knots);

        auto solve = [&]() -> FitResult {
            if (spec.pspline) {
                if (param)
                    return solve_pspline(problem, {.rho = *param, .difference_order = spec.order,
                                                   .cyclic = cyclic_differences});
                return optimize_rho(problem, spec.order, cyclic_differences).fit;
            }
            if (param)
                return solve_smoothing(problem,
                                       {.alpha = *param, .derivative_order = spec.order});
            return optimize_alpha(problem, spec.order).fit;
        };
        return MonthFit{hist.label, spec.letter, !param.has_value(), solve()};
    } catch (const input_error& e) {
        throw input_error("month " + hist.label + ", variant " + spec.letter + ": " + e.what());
    } catch (const numerical_error& e) {
        throw numerical_error("month " + hist.label + ", variant " + spec.letter + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Flat key-value run configuration. A TOML-style file provides defaults and
/// CLI flags override individual keys; every run persists the effective
/// configuration next to its outputs.
struct PipelineConfig {
    std::string input;
    std::string out_dir = "out";
    std::uint64_t seed = 20140101;
    int bins = 36;
    int degree = 3;
    std::string knots = "9";  // inner-knot count, or comma list of radians
    std::string variant = "a";  // a|b|c|d, or "all" for the comparison table
    std::string param = "auto";  // fixed alpha/rho, or "auto" for GCV
    int bootstrap = 500;
    double level = 0.95;
    int grid = 360;  // evaluation grid resolution for curves and bands
    std::string zero_strategy = "additive";
    double pseudo_count = 0.5;
    bool cyclic_differences = false;
    std::string covariate = "time";  // time | speed | extra column name
    std::string col_timestamp = "timestamp";
    std::string col_direction = "wind_dir_deg";
    std::string col_speed = "wind_speed_kmh";
    double malformed_threshold = 0.01;
    std::string predict_at;  // comma list of covariate values
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected unsigned integer, got '" + value +
                           "'");
    }
}

inline int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': expected integer, got '" + value + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& value) {
    double v = 0.0;
    if (!parse_double(value, v))
        throw config_error("config key '" + key + "': expected number, got '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true") return true;
    if (value == "false") return false;
    throw config_error("config key '" + key + "': expected true or false, got '" + value + "'");
}

} // namespace detail

/// Apply one key=value assignment; shared by the file loader and CLI flags.
inline void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                               const std::string& value) {
    if (key == "input") cfg.input = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "seed") cfg.seed = detail::parse_u64(key, value);
    else if (key == "bins") cfg.bins = detail::parse_int(key, value);
    else if (key == "degree") cfg.degree = detail::parse_int(key, value);
    else if (key == "knots") cfg.knots = value;
    else if (key == "variant") cfg.variant = value;
    else if (key == "param") cfg.param = value;
    else if (key == "bootstrap") cfg.bootstrap = detail::parse_int(key, value);
    else if (key == "level") cfg.level = detail::parse_real(key, value);
    else if (key == "grid") cfg.grid = detail::parse_int(key, value);
    else if (key == "zero_strategy") cfg.zero_strategy = value;
    else if (key == "pseudo_count") cfg.pseudo_count = detail::parse_real(key, value);
    else if (key == "cyclic_differences") cfg.cyclic_differences = detail::parse_bool(key, value);
    else if (key == "covariate") cfg.covariate = value;
    else if (key == "col_timestamp") cfg.col_timestamp = value;
    else if (key == "col_direction") cfg.col_direction = value;
    else if (key == "col_speed") cfg.col_speed = value;
    else if (key == "malformed_threshold")
        cfg.malformed_threshold = detail::parse_real(key, value);
    else if (key == "predict_at") cfg.predict_at = value;
    else throw config_error("unknown config key '" + key + "'");
}

/// Parse a flat TOML-style document: `key = value` lines, `#` comments,
/// optional double quotes around values. Unknown keys are rejected.
inline PipelineConfig parse_config(std::istream& is, PipelineConfig base = {}) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        // Strip comments outside quotes.
        bool quoted = false;
        std::string body;
        for (char c : line) {
            if (c == '"') quoted = !quoted;
            if (c == '#' && !quoted) break;
            body += c;
        }
        body = detail::trim(body);
        if (body.empty()) continue;
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected key = value");
        const std::string key = detail::trim(body.substr(0, eq));
        std::string value = detail::trim(body.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        if (key.empty()) throw config_error("config line " + std::to_string(lineno) + ": empty key");
        apply_config_entry(base, key, value);
    }
    return base;
}

inline PipelineConfig load_config(const std::string& path, PipelineConfig base = {}) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw config_error("cannot open config file " + path);
    return parse_config(is, std::move(base));
}

inline std::string config_to_toml(const PipelineConfig& cfg) {
    std::ostringstream os;
    char buffer[64];
    auto num = [&](double v) {
        std::snprintf(buffer, sizeof buffer, "%.17g", v);
        return std::string(buffer);
    };
    os << "bins = " << cfg.bins << "\n";
    os << "bootstrap = " << cfg.bootstrap << "\n";
    os << "col_direction = \"" << cfg.col_direction << "\"\n";
    os << "col_speed = \"" << cfg.col_speed << "\"\n";
    os << "col_timestamp = \"" << cfg.col_timestamp << "\"\n";
    os << "covariate = \"" << cfg.covariate << "\"\n";
    os << "cyclic_differences = " << (cfg.cyclic_differences ? "true" : "false") << "\n";
    os << "degree = " << cfg.degree << "\n";
    os << "grid = " << cfg.grid << "\n";
    os << "input = \"" << cfg.input << "\"\n";
    os << "knots = \"" << cfg.knots << "\"\n";
    os << "level = " << num(cfg.level) << "\n";
    os << "malformed_threshold = " << num(cfg.malformed_threshold) << "\n";
    os << "out_dir = \"" << cfg.out_dir << "\"\n";
    os << "param = \"" << cfg.param << "\"\n";
    os << "predict_at = \"" << cfg.predict_at << "\"\n";
    os << "pseudo_count = " << num(cfg.pseudo_count) << "\n";
    os << "seed = " << cfg.seed << "\n";
    os << "variant = \"" << cfg.variant << "\"\n";
    os << "zero_strategy = \"" << cfg.zero_strategy << "\"\n";
    return os.str();
}

/// Knot layout from the config: an integer is a uniform inner-knot count, a
/// comma list gives explicit inner knots in (0, 2*pi).
inline KnotConfig make_knots(const PipelineConfig& cfg) {
    try {
        const std::string text = detail::trim(cfg.knots);
        if (text.find(',') == std::string::npos && text.find('.') == std::string::npos) {
            return KnotConfig::uniform(0.0, kTwoPi, cfg.degree, detail::parse_int("knots", text));
        }
        std::vector<double> inner;
        std::istringstream is(text);
        std::string item;
        while (std::getline(is, item, ',')) {
            double v = 0.0;
            if (!detail::parse_double(item, v))
                throw config_error("config key 'knots': unparsable entry '" + item + "'");
            inner.push_back(v);
        }
        return KnotConfig(0.0, kTwoPi, cfg.degree, std::move(inner));
    } catch (const input_error& e) {
        throw config_error(std::string("invalid knot layout: ") + e.what());
    }
}

inline std::optional<double> parse_param(const PipelineConfig& cfg, const VariantSpec& spec) {
    if (cfg.param == "auto") return std::nullopt;
    const double v = detail::parse_real("param", cfg.param);
    if (!spec.pspline && !(v > 0.0 && v < 1.0))
        throw config_error("config key 'param': alpha must lie strictly inside (0, 1)");
    if (spec.pspline && !(v > 0.0))
        throw config_error("config key 'param': rho must be positive");
    return v;
}

inline void validate_config(const PipelineConfig& cfg) {
    if (cfg.bins < 4) throw config_error("config key 'bins': need at least 4");
    if (cfg.degree < 1) throw config_error("config key 'degree': need at least 1");
    if (cfg.bootstrap < 2) throw config_error("config key 'bootstrap': need at least 2");
    if (!(cfg.level > 0.0 && cfg.level < 1.0))
        throw config_error("config key 'level': must lie strictly inside (0, 1)");
    if (cfg.grid < 8) throw config_error("config key 'grid': need at least 8");
    if (!(cfg.pseudo_count > 0.0)) throw config_error("config key 'pseudo_count': must be positive");
    if (!(cfg.malformed_threshold >= 0.0 && cfg.malformed_threshold <= 1.0))
        throw config_error("config key 'malformed_threshold': must lie in [0, 1]");
    parse_zero_strategy(cfg.zero_strategy);
    if (cfg.variant != "all") {
        if (cfg.variant.size() != 1)
            throw config_error("config key 'variant': expected a, b, c, d or all");
        variant_spec(cfg.variant[0]);
        if (cfg.param != "auto") parse_param(cfg, variant_spec(cfg.variant[0]));
    } else if (cfg.param != "auto") {
        throw config_error("config key 'param': fixed values require a single variant, not 'all'");
    }
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("cannot open for writing: " + path.string());
    os << content;
    if (!os) throw input_error("failed writing " + path.string());
}

inline std::filesystem::path prepare_out_dir(const PipelineConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw input_error("cannot create output directory " + dir.string());
    write_text_file(dir / "effective_config.toml", config_to_toml(cfg));
    return dir;
}

inline void write_curve_file(const std::filesystem::path& path, const std::vector<double>& xs,
                             const Eigen::VectorXd& values) {
    std::ostringstream os;
    write_curve_csv(os, xs, values);
    write_text_file(path, os.str());
}

inline std::string format_value(double v) {
    char buffer[48];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return std::string(buffer);
}

inline std::string format_short(double v) {
    char buffer[48];
    std::snprintf(buffer, sizeof buffer, "%g", v);
    return std::string(buffer);
}

} // namespace detail

inline json histogram_to_json(const MonthlyHistogram& h,
                                             const PipelineConfig& cfg) {
    json out;
    out["label"] = h.label;
    out["n_obs"] = h.n_obs;
    out["bin_edges"] = h.bin_edges;
    out["counts"] = h.counts;
    out["rel_freq"] = circspline::detail::vector_to_json(h.rel_freq);
    out["clr_values"] = circspline::detail::vector_to_json(h.clr_values);
    out["zero_strategy"] = cfg.zero_strategy;
    out["pseudo_count"] = cfg.pseudo_count;
    return out;
}

// ---------------------------------------------------------------------------
// Shared driver steps
// ---------------------------------------------------------------------------

/// Everything the analysis commands share: retained records grouped by month
/// (sorted labels) and the binned histograms.
struct PreparedMonths {
    IngestResult ingest;
    std::vector<MonthlyHistogram> histograms;  // sorted by label
    std::vector<std::string> warnings;
};

inline PreparedMonths prepare_months(const PipelineConfig& cfg) {
    validate_config(cfg);
    if (cfg.input.empty()) throw config_error("config key 'input': no input CSV given");
    PreparedMonths prep;
    prep.ingest = ingest_csv_file(
        cfg.input, {cfg.col_timestamp, cfg.col_direction, cfg.col_speed}, cfg.malformed_threshold);

    std::map<std::string, bool> labels;
    for (const WindRecord& rec : prep.ingest.records) labels[rec.month_label()] = true;
    if (labels.empty()) throw input_error("no usable records in " + cfg.input);

    const ZeroBinStrategy strategy = parse_zero_strategy(cfg.zero_strategy);
    for (const auto& [label, unused] : labels)
        prep.histograms.push_back(bin_month(prep.ingest.records, label, cfg.bins, strategy,
                                            cfg.pseudo_count, &prep.warnings));
    return prep;
}

inline std::vector<MonthFit> fit_all_months(const PreparedMonths& prep, const PipelineConfig& cfg,
                                            char variant) {
    const KnotConfig knots = make_knots(cfg);
    const std::optional<double> param = parse_param(cfg, variant_spec(variant));
    std::vector<MonthFit> fits;
    fits.reserve(prep.histograms.size());
    for (const MonthlyHistogram& hist : prep.histograms)
        fits.push_back(fit_month(hist, knots, variant, param, cfg.cyclic_differences));
    return fits;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// `ingest`: parse, clean and account for the raw CSV; writes the retained
/// records and an accounting report.
inline IngestResult run_ingest(const PipelineConfig& cfg) {
    validate_config(cfg);
    if (cfg.input.empty()) throw config_error("config key 'input': no input CSV given");
    const IngestResult result = ingest_csv_file(
        cfg.input, {cfg.col_timestamp, cfg.col_direction, cfg.col_speed}, cfg.malformed_threshold);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);

    std::ostringstream os;
    os << cfg.col_timestamp << "," << cfg.col_direction << "," << cfg.col_speed;
    for (const std::string& name : result.extra_columns) os << "," << name;
    os << "\n";
    for (const WindRecord& rec : result.records) {
        os << rec.timestamp << "," << detail::format_value(*rec.direction_deg) << ","
           << detail::format_value(rec.speed);
        for (const std::string& name : result.extra_columns) {
            os << ",";
            for (const auto& [key, value] : rec.extras)
                if (key == name) {
                    os << value;
                    break;
                }
        }
        os << "\n";
    }
    detail::write_text_file(dir / "records_clean.csv", os.str());

    json report;
    report["total"] = result.total;
    report["retained"] = result.retained;
    report["excluded_calm"] = result.excluded_calm;
    report["malformed"] = result.malformed;
    report["malformed_threshold"] = cfg.malformed_threshold;
    report["issues"] = result.issues;
    save_json((dir / "ingest_report.json").string(), report);
    return result;
}

struct FitRunResult {
    std::vector<MonthFit> fits;  // all variants, month-major order
    std::vector<std::string> warnings;
};

/// `fit`: bin every month and fit the configured variant (or all four),
/// writing per-month fit JSON, the summary table and, for `all`, the
/// per-variant SSE overview.
inline FitRunResult run_fit(const PipelineConfig& cfg) {
    PreparedMonths prep = prepare_months(cfg);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);
    const std::string letters = (cfg.variant == "all") ? "abcd" : cfg.variant;

    FitRunResult out;
    out.warnings = prep.warnings;

    std::ostringstream summary;
    summary << "month,variant,param,sse,gcv,hat_trace\n";
    std::map<char, std::vector<std::size_t>> by_variant;  // indices into out.fits

    const KnotConfig knots = make_knots(cfg);
    for (std::size_t i = 0; i < prep.histograms.size(); ++i) {
        for (const char letter : letters) {
            const VariantSpec spec = variant_spec(letter);
            MonthFit fit = fit_month(prep.histograms[i], knots, letter,
                                     parse_param(cfg, spec), cfg.cyclic_differences);

            json doc;
            doc["month"] = fit.month;
            doc["variant"] = std::string(1, letter);
            doc["auto_selected"] = fit.auto_selected;
            doc["histogram"] = histogram_to_json(prep.histograms[i], cfg);
            doc["fit"] = fit_to_json(fit.fit, {spec.pspline, spec.order});
            save_json(
                (dir / ("fit_" + fit.month + "_" + std::string(1, letter) + ".json")).string(),
                doc);

            summary << fit.month << "," << letter << ","
                    << detail::format_value(fit.fit.parameter) << ","
                    << detail::format_value(fit.fit.sse) << ","
                    << detail::format_value(fit.fit.gcv) << ","
                    << detail::format_value(fit.fit.hat_trace) << "\n";

            by_variant[letter].push_back(out.fits.size());
            out.fits.push_back(std::move(fit));
        }
    }
    detail::write_text_file(dir / "summary.csv", summary.str());

    if (cfg.variant == "all") {
        std::ostringstream overview;
        overview << "variant,months,mean_sse,min_sse,min_sse_month,max_sse,max_sse_month\n";
        for (const auto& [letter, indices] : by_variant) {
            const MonthFit* lo = &out.fits[indices.front()];
            const MonthFit* hi = lo;
            double total = 0.0;
            for (const std::size_t idx : indices) {
                const MonthFit& f = out.fits[idx];
                total += f.fit.sse;
                if (f.fit.sse < lo->fit.sse) lo = &f;
                if (f.fit.sse > hi->fit.sse) hi = &f;
            }
            overview << letter << "," << indices.size() << ","
                     << detail::format_value(total / static_cast<double>(indices.size())) << ","
                     << detail::format_value(lo->fit.sse) << "," << lo->month << ","
                     << detail::format_value(hi->fit.sse) << "," << hi->month << "\n";
        }
        detail::write_text_file(dir / "variants_overview.csv", overview.str());
    }
    return out;
}

/// `stats`: per-month circular statistics plus dataset-level mean/SD clr
/// curves and the mean density across fitted months.
struct StatsRunResult {
    json report;
    std::vector<std::string> warnings;
};

inline StatsRunResult run_stats(const PipelineConfig& cfg) {
    if (cfg.variant == "all")
        throw config_error("stats requires a single variant, not 'all'");
    PreparedMonths prep = prepare_months(cfg);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);
    const std::vector<MonthFit> fits = fit_all_months(prep, cfg, cfg.variant[0]);

    // Per-month circular statistics from the raw retained directions.
    std::map<std::string, std::vector<double>> directions;
    for (const WindRecord& rec : prep.ingest.records)
        directions[rec.month_label()].push_back(rec.direction_rad());

    json months = json::array();
    for (const auto& [label, angles] : directions) {
        json entry = stats_report_json(CircularSample(angles));
        entry["month"] = label;
        months.push_back(std::move(entry));
    }

    // Functional statistics of the fitted clr splines on the output grid.
    const Grid grid = Grid::uniform(0.0, kTwoPi, cfg.grid);
    std::vector<ClrCurve> curves;
    curves.reserve(fits.size());
    for (const MonthFit& f : fits)
        curves.push_back(clr_from_samples(grid, f.fit.spline.evaluate(grid.points())));
    const ClrCurve mean = sample_mean_clr(curves);
    const Eigen::VectorXd sd = functional_sd(curves);
    const DensityCurve mean_density = clr_inverse(mean);

    detail::write_curve_file(dir / "clr_mean.csv", grid.points(), mean.values());
    detail::write_curve_file(dir / "clr_sd.csv", grid.points(), sd);
    detail::write_curve_file(dir / "density_mean.csv", grid.points(), mean_density.values());

    auto to_std = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    detail::write_text_file(
        dir / "clr_mean.svg",
        svg::linear_curves({{"mean", grid.points(), to_std(mean.values())},
                            {"mean+sd", grid.points(), to_std(mean.values() + sd)},
                            {"mean-sd", grid.points(), to_std(mean.values() - sd)}},
                           "clr mean with SD envelope", "direction (rad)", "clr value"));
    detail::write_text_file(
        dir / "density_mean.svg",
        svg::polar_curves({{"mean density", grid.points(), to_std(mean_density.values())}},
                          "mean density"));

    StatsRunResult out;
    out.warnings = prep.warnings;
    out.report["months"] = std::move(months);
    out.report["variant"] = cfg.variant;
    out.report["grid"] = cfg.grid;
    out.report["mean_density_integral"] = mean_density.integral();
    save_json((dir / "stats_months.json").string(), out.report);
    return out;
}

namespace detail {

/// Covariate vector for the regression design: month index for "time",
/// per-month mean wind speed for "speed", otherwise the per-month mean of a
/// named extra column.
inline Eigen::VectorXd covariate_values(const PreparedMonths& prep, const PipelineConfig& cfg) {
    const std::size_t n = prep.histograms.size();
    Eigen::VectorXd cov(static_cast<Eigen::Index>(n));
    if (cfg.covariate == "time") {
        for (std::size_t i = 0; i < n; ++i) cov(static_cast<Eigen::Index>(i)) = double(i + 1);
        return cov;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& label = prep.histograms[i].label;
        double total = 0.0;
        std::size_t count = 0;
        for (const WindRecord& rec : prep.ingest.records) {
            if (rec.month_label() != label) continue;
            if (cfg.covariate == "speed") {
                total += rec.speed;
                ++count;
            } else {
                for (const auto& [key, value] : rec.extras)
                    if (key == cfg.covariate) {
                        double v = 0.0;
                        if (!parse_double(value, v))
                            throw input_error("covariate '" + cfg.covariate +
                                              "' unavailable or non-numeric in month " + label);
                        total += v;
                        ++count;
                        break;
                    }
            }
        }
        if (count == 0)
            throw input_error("covariate '" + cfg.covariate + "' unavailable for month " + label);
        cov(static_cast<Eigen::Index>(i)) = total / static_cast<double>(count);
    }
    return cov;
}

struct RegressionSetup {
    PreparedMonths prep;
    RegressionDataset dataset;
    RegressionModel model;
    std::vector<std::string> months;
};

inline RegressionSetup build_regression(const PipelineConfig& cfg) {
    if (cfg.variant == "all")
        throw config_error("regression requires a single variant, not 'all'");
    PreparedMonths prep = prepare_months(cfg);
    const std::vector<MonthFit> fits = fit_all_months(prep, cfg, cfg.variant[0]);
    const KnotConfig knots = make_knots(cfg);

    Eigen::MatrixXd responses(fits.size(), knots.dim_zero());
    std::vector<std::string> months;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        responses.row(static_cast<Eigen::Index>(i)) = fits[i].fit.spline.coeffs_reduced();
        months.push_back(fits[i].month);
    }
    Eigen::MatrixXd design(fits.size(), 2);
    design.col(0).setOnes();
    design.col(1) = covariate_values(prep, cfg);

    try {
        RegressionDataset dataset(responses, design, knots);
        RegressionModel model = fit_fos(dataset);
        return {std::move(prep), std::move(dataset), std::move(model), std::move(months)};
    } catch (const input_error& e) {
        throw input_error("regression on covariate '" + cfg.covariate + "': " + e.what());
    }
}

} // namespace detail

struct RegressRunResult {
    json report;
    std::vector<std::string> warnings;
};

/// `regress`: function-on-scalar regression of the monthly clr splines on the
/// configured covariate, with bootstrap confidence bands and band plots.
inline RegressRunResult run_regress(const PipelineConfig& cfg) {
    detail::RegressionSetup setup = detail::build_regression(cfg);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);
    const Grid grid = Grid::uniform(0.0, kTwoPi, cfg.grid);

    BootstrapBands bands;
    try {
        bands = bootstrap_bands(setup.model, setup.dataset, cfg.bootstrap, cfg.level, cfg.seed,
                                grid);
    } catch (const numerical_error& e) {
        throw numerical_error("regression bootstrap on covariate '" + cfg.covariate + "': " +
                              e.what());
    }

    RegressRunResult out;
    out.warnings = setup.prep.warnings;
    out.report = regression_report_json(setup.model, bands);
    out.report["covariate"] = cfg.covariate;
    out.report["months"] = setup.months;
    save_json((dir / "regression_report.json").string(), out.report);

    const char* names[] = {"intercept", "slope"};
    for (int j = 0; j < 2; ++j) {
        const std::string title = std::string("clr coefficient band: ") +
                                  (j == 0 ? names[0] : cfg.covariate + " " + names[1]);
        detail::write_text_file(dir / ("band_param" + std::to_string(j) + ".svg"),
                                svg::band_plot(bands.grid, bands.lower.row(j),
                                               bands.upper.row(j), bands.point.row(j), title,
                                               "direction (rad)", "clr value"));
    }
    return out;
}

/// `predict`: evaluate the fitted regression at explicit covariate values,
/// writing clr and density curves per value.
inline std::vector<std::string> run_predict(const PipelineConfig& cfg) {
    if (cfg.predict_at.empty())
        throw config_error("config key 'predict_at': predict requires covariate values");
    std::vector<double> at;
    {
        std::istringstream is(cfg.predict_at);
        std::string item;
        while (std::getline(is, item, ',')) {
            double v = 0.0;
            if (!detail::parse_double(item, v))
                throw config_error("config key 'predict_at': unparsable entry '" + item + "'");
            at.push_back(v);
        }
        if (at.empty()) throw config_error("config key 'predict_at': no values given");
    }

    detail::RegressionSetup setup = detail::build_regression(cfg);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);
    const Grid grid = Grid::uniform(0.0, kTwoPi, cfg.grid);

    std::vector<std::string> written;
    for (const double value : at) {
        Eigen::VectorXd cov(1);
        cov(0) = value;
        const ClrCurve clr = predict_clr(setup.model, cov, grid);
        const DensityCurve density = predict_density(setup.model, cov, grid);
        const std::string tag = detail::format_short(value);
        detail::write_curve_file(dir / ("predict_clr_" + tag + ".csv"), grid.points(),
                                 clr.values());
        detail::write_curve_file(dir / ("predict_density_" + tag + ".csv"), grid.points(),
                                 density.values());
        written.push_back("predict_clr_" + tag + ".csv");
        written.push_back("predict_density_" + tag + ".csv");
    }
    return written;
}

/// `plot`: render a stored artifact with one of the deterministic SVG styles.
/// Curve styles read curve CSV files; histogram/rose read a fit JSON; the
/// band style reads a regression report plus a parameter index.
inline void run_plot(const PipelineConfig& cfg, const std::string& style,
                     const std::vector<std::string>& inputs, std::string output,
                     int band_param = 1) {
    validate_config(cfg);
    const std::filesystem::path dir = detail::prepare_out_dir(cfg);
    if (output.empty()) output = style + ".svg";
    const std::filesystem::path target = dir / output;
    if (inputs.empty()) throw input_error("plot: no input artifact given");

    auto load_series = [&]() {
        std::vector<svg::Series> series;
        for (const std::string& path : inputs) {
            std::ifstream is(path, std::ios::binary);
            if (!is) throw input_error("plot: cannot open " + path);
            const CurveData data = read_curve_csv(is);
            std::string label = std::filesystem::path(path).stem().string();
            series.push_back({std::move(label), data.xs,
                              std::vector<double>(data.values.data(),
                                                  data.values.data() + data.values.size())});
        }
        return series;
    };

    if (style == "linear-curve" || style == "multi-curve") {
        detail::write_text_file(target, svg::linear_curves(load_series(), "", "x", "value"));
    } else if (style == "polar-curve") {
        detail::write_text_file(target, svg::polar_curves(load_series()));
    } else if (style == "histogram" || style == "rose") {
        const json doc = load_json(inputs.front());
        if (!doc.contains("histogram"))
            throw input_error("plot: " + inputs.front() + " holds no histogram block");
        const json& h = doc["histogram"];
        try {
            const std::vector<double> edges = h.at("bin_edges").get<std::vector<double>>();
            const Eigen::VectorXd rel =
                circspline::detail::vector_from_json(h.at("rel_freq"), "rel_freq");
            const std::string title = "month " + h.at("label").get<std::string>();
            detail::write_text_file(target, style == "rose"
                                                ? svg::rose(edges, rel, title)
                                                : svg::histogram(edges, rel, title,
                                                                 "direction (rad)",
                                                                 "relative frequency"));
        } catch (const json::exception& e) {
            throw input_error("plot: malformed histogram block: " + std::string(e.what()));
        }
    } else if (style == "band-plot") {
        const json doc = load_json(inputs.front());
        try {
            const json& b = doc.at("bands");
            const std::vector<double> xs = b.at("grid").get<std::vector<double>>();
            const auto row = [&](const char* field) {
                const json& rows = b.at(field);
                if (band_param < 0 || band_param >= static_cast<int>(rows.size()))
                    throw input_error("plot: band parameter index out of range");
                return circspline::detail::vector_from_json(rows[static_cast<std::size_t>(band_param)],
                                                               field);
            };
            detail::write_text_file(
                target, svg::band_plot(xs, row("lower"), row("upper"), row("point"),
                                       "clr coefficient band", "direction (rad)", "clr value"));
        } catch (const json::exception& e) {
            throw input_error("plot: malformed regression report: " + std::string(e.what()));
        }
    } else {
        throw config_error("plot: unknown style '" + style +
                           "' (expected linear-curve, multi-curve, histogram, rose, polar-curve "
                           "or band-plot)");
    }
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace detail {

inline int days_in_month(int year, int month) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month != 2) return days[month - 1];
    const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    return leap ? 29 : 28;
}

} // namespace detail

/// Generate a synthetic hourly wind CSV: a two-component von Mises mixture
/// whose mixture weight tracks the monthly mean speed (so direction depends
/// on speed but carries no linear time trend), with roughly 1% calm rows.
inline void run_synth(const PipelineConfig& cfg, int months, const std::string& out_path,
                      int start_year = 2001) {
    validate_config(cfg);
    if (months < 1) throw config_error("synth: need at least one month");
    Rng rng(cfg.seed);

    std::ostringstream os;
    os << cfg.col_timestamp << "," << cfg.col_direction << "," << cfg.col_speed << "\n";
    char buffer[96];
    for (int t = 0; t < months; ++t) {
        const int year = start_year + t / 12;
        const int month = 1 + t % 12;
        const double season = kTwoPi * (t % 12) / 12.0;
        const double speed_month = 10.0 + 4.0 * std::sin(season + 0.7);
        const double weight_a =
            std::clamp(0.25 + 0.04 * (speed_month - 10.0), 0.05, 0.95);

        // Pre-draw a month's worth of angles from both mixture components so
        // each row just consumes the next one from its chosen queue.
        const int rows = 24 * detail::days_in_month(year, month);
        const CircularSample comp_a =
            von_mises_sample(rng.raw(), 1.5707963267948966, 4.0, rows);
        const CircularSample comp_b = von_mises_sample(rng.raw(), 4.71238898038469, 3.0, rows);
        std::size_t next_a = 0, next_b = 0;

        for (int day = 1; day <= detail::days_in_month(year, month); ++day) {
            for (int hour = 0; hour < 24; ++hour) {
                std::snprintf(buffer, sizeof buffer, "%04d-%02d-%02dT%02d:00:00", year, month,
                              day, hour);
                const std::string ts(buffer);
                if (rng.uniform() < 0.01) {
                    os << ts << ",,0\n";  // calm: zero speed, undefined direction
                    continue;
                }
                const double theta = (rng.uniform() < weight_a)
                                         ? comp_a.angles()[next_a++]
                                         : comp_b.angles()[next_b++];
                const double speed = std::max(0.1, speed_month + 2.0 * rng.normal());
                std::snprintf(buffer, sizeof buffer, "%.6f,%.6f",
                              theta * (360.0 / kTwoPi), speed);
                os << ts << "," << buffer << "\n";
            }
        }
    }
    detail::write_text_file(out_path, os.str());
}

} // namespace circspline::pipeline
