// circspline command line: ingest wind-direction CSVs, fit periodic
// zero-integral splines to monthly direction densities, compute circular and
// functional statistics, regress densities on scalar covariates, predict,
// plot, and generate synthetic data.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 config error.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "circspline/pipeline.hpp"

namespace {

using circspline::pipeline::PipelineConfig;

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic zero-integral spline smoothing for circular densities"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "circspline 0.1.0");

    std::string config_path;
    app.add_option("--config", config_path, "TOML-style config file; flags override its values");

    // Every flag funnels through the same key=value path as the config file,
    // so validation and error reporting are identical for both sources.
    std::map<std::string, std::string> overrides;
    auto add_override = [&](const std::string& flag, const std::string& key,
                            const std::string& help) {
        app.add_option_function<std::string>(
            flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
    };
    add_override("--input,-i", "input", "input CSV of wind records");
    add_override("--out-dir,-o", "out_dir", "output directory (default out)");
    add_override("--seed", "seed", "RNG seed for bootstrap and synthesis (default 20140101)");
    add_override("--bins", "bins", "direction bins per month (default 36)");
    add_override("--knots", "knots", "inner-knot count or comma list of radians (default 9)");
    add_override("--degree", "degree", "spline degree k (default 3)");
    add_override("--variant", "variant",
                 "estimator: a=smoothing l=1, b=smoothing l=2, c=pspline d=1, d=pspline d=2, "
                 "or all (fit only)");
    add_override("--param", "param", "fixed alpha/rho, or auto for GCV selection");
    add_override("--bootstrap", "bootstrap", "bootstrap replicates (default 500)");
    add_override("--level", "level", "band level (default 0.95)");
    add_override("--grid", "grid", "evaluation grid resolution (default 360)");
    add_override("--covariate", "covariate", "regression covariate: time, speed or a column name");
    add_override("--zero-strategy", "zero_strategy",
                 "zero-count bin handling: additive, reject or bayes_mult");
    add_override("--pseudo-count", "pseudo_count", "pseudo-count for zero handling (default 0.5)");
    add_override("--predict-at", "predict_at", "comma list of covariate values for predict");
    app.add_flag_callback(
        "--cyclic-differences", [&overrides] { overrides["cyclic_differences"] = "true"; },
        "wrap the P-spline difference stencil around the circle");

    CLI::App* cmd_ingest = app.add_subcommand("ingest", "parse and clean a wind-record CSV");
    CLI::App* cmd_fit = app.add_subcommand("fit", "fit monthly direction densities");
    CLI::App* cmd_stats =
        app.add_subcommand("stats", "circular and functional statistics per month and overall");
    CLI::App* cmd_regress =
        app.add_subcommand("regress", "function-on-scalar regression with bootstrap bands");
    CLI::App* cmd_predict =
        app.add_subcommand("predict", "evaluate the regression at covariate values");

    CLI::App* cmd_plot = app.add_subcommand("plot", "render a stored artifact as SVG");
    std::string plot_style;
    std::vector<std::string> plot_inputs;
    std::string plot_output;
    int plot_index = 1;
    cmd_plot->add_option("--style", plot_style,
                         "linear-curve, multi-curve, histogram, rose, polar-curve or band-plot")
        ->required();
    cmd_plot->add_option("artifacts", plot_inputs, "curve CSV or report JSON file(s)")
        ->required();
    cmd_plot->add_option("--output", plot_output, "output SVG name (default <style>.svg)");
    cmd_plot->add_option("--index", plot_index, "band-plot parameter index (default 1)");

    CLI::App* cmd_synth = app.add_subcommand("synth", "generate a synthetic wind-record CSV");
    int synth_months = 120;
    int synth_start_year = 2001;
    std::string synth_output = "synthetic.csv";
    cmd_synth->add_option("--months", synth_months, "number of months (default 120)");
    cmd_synth->add_option("--start-year", synth_start_year, "first year (default 2001)");
    cmd_synth->add_option("--output", synth_output, "destination CSV path");

    for (CLI::App* sub : {cmd_ingest, cmd_fit, cmd_stats, cmd_regress, cmd_predict, cmd_plot,
                          cmd_synth})
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 4;
    }

    try {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = circspline::pipeline::load_config(config_path);
        for (const auto& [key, value] : overrides)
            circspline::pipeline::apply_config_entry(cfg, key, value);

        if (app.got_subcommand(cmd_ingest)) {
            const auto result = circspline::pipeline::run_ingest(cfg);
            std::cout << "retained " << result.retained << " of " << result.total
                      << " rows (excluded calm " << result.excluded_calm << ", malformed "
                      << result.malformed << ") -> " << cfg.out_dir << "\n";
        } else if (app.got_subcommand(cmd_fit)) {
            const auto result = circspline::pipeline::run_fit(cfg);
            print_warnings(result.warnings);
            std::cout << "fitted " << result.fits.size() << " month-variant pairs -> "
                      << cfg.out_dir << "/summary.csv\n";
        } else if (app.got_subcommand(cmd_stats)) {
            const auto result = circspline::pipeline::run_stats(cfg);
            print_warnings(result.warnings);
            std::cout << "statistics for " << result.report["months"].size() << " months -> "
                      << cfg.out_dir << "/stats_months.json\n";
        } else if (app.got_subcommand(cmd_regress)) {
            const auto result = circspline::pipeline::run_regress(cfg);
            print_warnings(result.warnings);
            for (const auto& entry : result.report["significance"]) {
                const int param = entry["param"].get<int>();
                std::cout << "param " << param
                          << (param == 0 ? " (intercept)" : " (" + cfg.covariate + ")") << ": "
                          << (entry["significant"].get<bool>() ? "band excludes zero"
                                                               : "band contains zero everywhere")
                          << "\n";
            }
            std::cout << "report -> " << cfg.out_dir << "/regression_report.json\n";
        } else if (app.got_subcommand(cmd_predict)) {
            const auto files = circspline::pipeline::run_predict(cfg);
            for (const std::string& f : files) std::cout << "wrote " << cfg.out_dir << "/" << f << "\n";
        } else if (app.got_subcommand(cmd_plot)) {
            circspline::pipeline::run_plot(cfg, plot_style, plot_inputs, plot_output, plot_index);
            std::cout << "wrote " << cfg.out_dir << "/"
                      << (plot_output.empty() ? plot_style + ".svg" : plot_output) << "\n";
        } else if (app.got_subcommand(cmd_synth)) {
            circspline::pipeline::run_synth(cfg, synth_months, synth_output, synth_start_year);
            std::cout << "wrote " << synth_output << " (" << synth_months << " months)\n";
        }
        return 0;
    } catch (const circspline::input_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const circspline::numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const circspline::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
