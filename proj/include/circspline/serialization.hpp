#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "circspline/bayes.hpp"
#include "circspline/circstats.hpp"
#include "circspline/errors.hpp"
#include "circspline/fosreg.hpp"
#include "circspline/smoothfit.hpp"
#include "circspline/splinecore.hpp"

namespace circspline {

using json = nlohmann::json;

namespace detail {

inline json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Eigen::VectorXd vector_from_json(const json& arr, const char* field) {
    if (!arr.is_array())
        throw input_error(std::string("expected array for field ") + field);
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& item : arr) {
        if (!item.is_number())
            throw input_error(std::string("non-numeric entry in field ") + field);
        v(i++) = item.get<double>();
    }
    return v;
}

/// JSON cannot represent infinities; spread measures degenerate to null.
inline json finite_or_null(double v) {
    if (std::isfinite(v)) return json(v);
    return json(nullptr);
}

} // namespace detail

/// Spline JSON schema: degree, interval, inner knots, reduced coefficients
/// and the derived full coefficient vector for cross-checking.
inline json spline_to_json(const PeriodicSplineZ& s) {
    const KnotConfig& cfg = s.knots();
    json out;
    out["degree"] = cfg.degree();
    out["interval"] = {cfg.a(), cfg.b()};
    out["inner_knots"] = cfg.inner_knots();
    out["coeffs_reduced"] = detail::vector_to_json(s.coeffs_reduced());
    out["coeffs_full"] = detail::vector_to_json(s.coeffs_full());
    return out;
}

/// Rebuilds the spline from the reduced coefficients and validates the stored
/// full vector against the reconstruction; disagreement beyond 1e-10 relative
/// to the coefficient scale is a load error.
inline PeriodicSplineZ spline_from_json(const json& in) {
    try {
        const auto& interval = in.at("interval");
        if (!interval.is_array() || interval.size() != 2)
            throw input_error("spline: interval must be [a, b]");
        KnotConfig cfg(interval[0].get<double>(), interval[1].get<double>(),
                       in.at("degree").get<int>(),
                       in.at("inner_knots").get<std::vector<double>>());
        PeriodicSplineZ s(cfg, detail::vector_from_json(in.at("coeffs_reduced"), "coeffs_reduced"));
        const Eigen::VectorXd stored = detail::vector_from_json(in.at("coeffs_full"), "coeffs_full");
        if (stored.size() != s.coeffs_full().size())
            throw input_error("spline: coeffs_full has wrong length");
        const double scale = std::max(1.0, s.coeffs_full().cwiseAbs().maxCoeff());
        if ((stored - s.coeffs_full()).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw input_error("spline: stored full coefficients disagree with the reduced parameterization");
        return s;
    } catch (const json::exception& e) {
        throw input_error(std::string("spline: malformed JSON: ") + e.what());
    }
}

/// Which estimator produced a fit; order is the derivative order l for the
/// smoothing functional and the difference order d for the P-spline.
struct FitDescriptor {
    bool pspline = false;
    int order = 2;
};

inline json fit_to_json(const FitResult& fit, const FitDescriptor& desc) {
    json out;
    out["variant"] = desc.pspline ? "pspline" : "smoothing";
    out["k"] = fit.spline.knots().degree();
    out[desc.pspline ? "d" : "l"] = desc.order;
    out[desc.pspline ? "rho" : "alpha"] = fit.parameter;
    out["gcv"] = fit.gcv;
    out["sse"] = fit.sse;
    out["hat_trace"] = fit.hat_trace;
    out["spline"] = spline_to_json(fit.spline);
    return out;
}

/// Circular statistics report. The direction is emitted in degrees of the
/// stored angle (meteorological origin) and is null for a vanishing
/// resultant, as is the then-infinite circular SD.
inline json stats_report_json(const CircularSample& sample) {
    const TrigMoment m = trig_moment(sample, 1);
    json out;
    out["n"] = sample.size();
    out["mean_direction_deg"] =
        m.direction ? json(*m.direction * 180.0 / 3.14159265358979323846) : json(nullptr);
    out["mean_direction_rad"] = m.direction ? json(*m.direction) : json(nullptr);
    out["mean_resultant_length"] = m.resultant_length;
    out["circ_variance"] = 1.0 - m.resultant_length;
    out["circ_sd"] = detail::finite_or_null(circular_sd(sample));
    out["mean_angular_deviation"] = mean_angular_deviation(sample);
    return out;
}

inline json regression_report_json(const RegressionModel& model, const BootstrapBands& bands) {
    json coefficients = json::array();
    for (int j = 0; j < model.beta.rows(); ++j)
        coefficients.push_back(spline_to_json(model.coefficient_spline(j)));

    auto matrix_rows = [](const Eigen::MatrixXd& m) {
        json rows = json::array();
        for (int i = 0; i < m.rows(); ++i) rows.push_back(detail::vector_to_json(m.row(i)));
        return rows;
    };

    json significance = json::array();
    for (const SignificanceEntry& entry : significance_summary(bands)) {
        json exclusions = json::array();
        for (const auto& [lo, hi] : entry.exclusions) exclusions.push_back({lo, hi});
        significance.push_back({{"param", entry.param},
                                {"significant", entry.significant},
                                {"exclusions", exclusions}});
    }

    json out;
    out["coefficients"] = coefficients;
    out["bands"] = {{"grid", bands.grid},
                    {"lower", matrix_rows(bands.lower)},
                    {"upper", matrix_rows(bands.upper)},
                    {"point", matrix_rows(bands.point)}};
    out["replicates"] = bands.replicates;
    out["discarded"] = bands.discarded;
    out["seed"] = bands.seed;
    out["level"] = bands.level;
    out["significance"] = significance;
    return out;
}

/// Curve CSV: header `x,value`, one row per grid point, LF endings, full
/// round-trip precision.
inline void write_curve_csv(std::ostream& os, const std::vector<double>& xs,
                            const Eigen::VectorXd& values) {
    if (static_cast<Eigen::Index>(xs.size()) != values.size())
        throw input_error("write_curve_csv: length mismatch");
    os << "x,value\n";
    char buffer[80];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buffer, sizeof buffer, "%.17g,%.17g\n", xs[i],
                      values(static_cast<Eigen::Index>(i)));
        os << buffer;
    }
}

struct CurveData {
    std::vector<double> xs;
    Eigen::VectorXd values;
};

inline CurveData read_curve_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw input_error("curve CSV: empty file");
    if (line == "x,value\r") line.pop_back();
    if (line != "x,value") throw input_error("curve CSV: expected header x,value");
    std::vector<double> xs, vs;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw input_error("curve CSV: missing comma on line " + std::to_string(lineno));
        try {
            std::size_t used = 0;
            xs.push_back(std::stod(line.substr(0, comma), &used));
            vs.push_back(std::stod(line.substr(comma + 1), &used));
        } catch (const std::exception&) {
            throw input_error("curve CSV: non-numeric entry on line " + std::to_string(lineno));
        }
    }
    if (xs.size() < 2) throw input_error("curve CSV: need at least two rows");
    CurveData data;
    data.xs = std::move(xs);
    data.values = Eigen::Map<Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(vs.size()));
    return data;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw input_error("cannot open for writing: " + path);
    os << j.dump(2) << "\n";
}

inline json load_json(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw input_error("cannot open: " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw input_error("malformed JSON in " + path + ": " + e.what());
    }
}

} // namespace circspline
