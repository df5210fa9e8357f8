// Command-line front end: solve, sweep, simulate, validate.
//
// Exit codes: 0 ok, 2 invalid domain, 3 solver failure, 4 validation failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ntband/ntband.hpp"

namespace {

using ntband::json;

ntband::RunConfig load_config(const std::string& config_path, const std::string& preset) {
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw ntband::DomainError("cannot read config file: " + config_path);
        json j;
        f >> j;
        return ntband::config_from_json(j);
    }
    return ntband::preset_config(preset.empty() ? "fast-real" : preset);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::fputs(content.c_str(), stdout);
    else
        ntband::write_file(out_path, content);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"no-trade band solver with stochastic volatility corrections"};
    app.require_subcommand(1);

    std::string config_path, preset, out_path, format = "json", regime;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--preset", preset,
                        "named preset: fast-real|fast-complex|slow-real|slow-complex");
        cmd->add_option("--out", out_path, "output file (default: stdout)");
        cmd->add_option("--format", format, "csv|json");
        cmd->add_option("--regime", regime, "fast|slow (overrides config)");
    };

    auto* solve = app.add_subcommand("solve", "zeroth-order band and first-order corrections");
    add_common(solve);
    auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep);
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo growth-rate estimate");
    add_common(simulate);
    auto* validate = app.add_subcommand("validate", "run the oracle cross-check suite");
    add_common(validate);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            const auto rows = ntband::run_validation_suite();
            bool all_pass = true;
            std::printf("%-55s %-12s %-10s %s\n", "check", "value", "tol", "status");
            for (const auto& r : rows) {
                all_pass = all_pass && r.pass;
                std::printf("%-55s %-12.3e %-10.1e %s\n", r.name.c_str(), r.value, r.tol,
                            r.pass ? "PASS" : "FAIL");
            }
            std::printf("%s\n", all_pass ? "validation: all checks passed" : "validation: FAILURES");
            return all_pass ? 0 : 4;
        }

        ntband::RunConfig cfg = load_config(config_path, preset);
        if (!regime.empty()) cfg.regime = regime;

        if (solve->parsed()) {
            const json report = ntband::solve_report(cfg);
            if (format == "csv") {
                std::string csv = ntband::zeroth_csv_header() + "\n";
                ntband::ZerothOrderSolution sol = ntband::solve_zeroth(
                    cfg.market, report.at("zeroth").at("sigma").get<double>());
                csv += ntband::zeroth_csv_row(sol) + "\n";
                emit(out_path, csv);
            } else {
                emit(out_path, report.dump(2) + "\n");
            }
            return 0;
        }
        if (sweep->parsed()) {
            if (!cfg.sweep) {
                // default: a drift sweep over the admissible range
                ntband::SweepSpec s;
                s.axis = "mu";
                s.lo = 0.01;
                s.hi = 0.078;
                s.steps = 30;
                cfg.sweep = s;
            }
            const std::string csv = ntband::sweep_csv(cfg, *cfg.sweep);
            emit(out_path, csv);
            if (!out_path.empty()) {
                // sidecar metadata (inputs only, no timestamps: outputs stay reproducible)
                json meta;
                meta["axis"] = cfg.sweep->axis;
                meta["lo"] = cfg.sweep->lo;
                meta["hi"] = cfg.sweep->hi;
                meta["steps"] = cfg.sweep->steps;
                meta["regime"] = cfg.regime;
                meta["epsilon"] = cfg.epsilon;
                meta["market"] = {{"mu", cfg.market.mu},
                                  {"r", cfg.market.r},
                                  {"gamma", cfg.market.gamma},
                                  {"lambda", cfg.market.lambda}};
                ntband::write_file(out_path + ".meta.json", meta.dump(2) + "\n");
            }
            return 0;
        }
        if (simulate->parsed()) {
            const json report = ntband::simulate_report(cfg);
            if (format == "csv")
                emit(out_path, ntband::simulate_csv_summary(report));
            else
                emit(out_path, report.dump(2) + "\n");
            return 0;
        }
    } catch (const ntband::CollapsedBandError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ntband::DomainError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ntband::SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}
