#include "nsal/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "nsal/io.hpp"
#include "nsal/oracle_check.hpp"
#include "nsal/simulation.hpp"

#ifndef NSAL_VERSION
#define NSAL_VERSION "dev"
#endif

namespace nsal {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replications;
    std::size_t threads = 0;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

void write_report_set(const fs::path& dir, const RunReport& report, const std::string& command) {
    fs::create_directories(dir);
    write_file(dir / "report.json", report_to_json(report).dump(1) + "\n");
    write_file(dir / "summary.csv", summary_csv(report));
    write_file(dir / "histogram.csv", histogram_csv(report));

    nlohmann::ordered_json manifest;
    manifest["schema_version"] = kSchemaVersion;
    manifest["kind"] = "nsal-manifest";
    manifest["tool"] = "nsal";
    manifest["version"] = NSAL_VERSION;
    manifest["command"] = command;
    manifest["seed"] = report.config.seed;
    manifest["replications"] = report.config.replications;
    manifest["files"] = {"report.json", "summary.csv", "histogram.csv"};
    manifest["created_utc"] = utc_timestamp();
    manifest["config"] = config_to_json(report.config);
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

void apply_overrides(ExperimentConfig& cfg, const CommonOptions& opt) {
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.replications) cfg.replications = *opt.replications;
}

void print_summary(std::ostream& out, const RunReport& report) {
    out << "strategy round class estimate empirical_variance variance_ratio_vs_srs cost_fresh\n";
    for (const auto& a : report.main.rounds) {
        out << to_string(a.kind) << ' ' << a.round << ' ' << a.cls << ' ' << format_number(a.mean_estimate) << ' '
            << format_number(a.empirical_variance) << ' ' << format_number(a.variance_ratio_vs_srs) << ' '
            << format_number(a.mean_fresh) << '\n';
    }
}

int command_run(const CommonOptions& opt, std::ostream& out) {
    ParsedConfig parsed = load_config(opt.config_path);
    apply_overrides(parsed.experiment, opt);
    parsed.experiment.validate();
    const RunReport report = monte_carlo(parsed.experiment, opt.threads);
    write_report_set(opt.out_dir, report, "run");
    print_summary(out, report);
    out << "wrote " << (fs::path(opt.out_dir) / "summary.csv").string() << '\n';
    return kExitOk;
}

int command_sweep(const CommonOptions& opt, std::ostream& out) {
    ParsedConfig parsed = load_config(opt.config_path);
    apply_overrides(parsed.experiment, opt);
    parsed.experiment.validate();
    const SweepSpec& sweep = parsed.sweep;
    const std::size_t points = sweep.points();
    if (points > sweep.max_points)
        throw ConfigError(opt.config_path + ": sweep grid has " + std::to_string(points) + " points, above the cap of " +
                          std::to_string(sweep.max_points));
    const bool oracle = parsed.experiment.model.kind == ModelConfig::Kind::Oracle;
    if (!oracle && (!sweep.sigma.empty() || !sweep.gamma.empty()))
        throw ConfigError(opt.config_path + ": sigma/gamma axes need the oracle model");

    NsrsParams nsrs;
    nsrs.depth_limit = parsed.document["nsrs"]["depth"].get<int>();
    nsrs.n_threshold = parsed.document["nsrs"]["n_threshold"].get<std::size_t>();
    nsrs.max_candidates = parsed.document["nsrs"]["max_candidates"].get<std::size_t>();
    nsrs.guardrail = parsed.document["guardrail"].get<bool>();

    // Empty axes keep the base value.
    auto axis = [](const auto& values) { return values.empty() ? std::size_t{1} : values.size(); };
    std::vector<ExperimentConfig> grid;
    for (std::size_t a = 0; a < axis(sweep.n_init); ++a)
        for (std::size_t b = 0; b < axis(sweep.sigma); ++b)
            for (std::size_t c = 0; c < axis(sweep.gamma); ++c)
                for (std::size_t d = 0; d < axis(sweep.strategy); ++d) {
                    ExperimentConfig cfg = parsed.experiment;
                    if (!sweep.n_init.empty()) cfg.n_init = {sweep.n_init[a]};
                    if (!sweep.sigma.empty()) cfg.model.oracle.noise_sigma = sweep.sigma[b];
                    if (!sweep.gamma.empty()) cfg.model.oracle.miscalibration_gamma = sweep.gamma[c];
                    if (!sweep.strategy.empty()) {
                        const auto kind = sweep.strategy[d];
                        cfg.strategies = {kind == StrategyKind::NSRS ? QueryStrategy::neyman(nsrs)
                                          : kind == StrategyKind::SRS ? QueryStrategy::simple_random()
                                                                      : QueryStrategy::uncertainty_entropy()};
                    }
                    try {
                        cfg.validate();
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(opt.config_path + ": sweep point " + std::to_string(grid.size()) + ": " +
                                          e.what());
                    }
                    grid.push_back(std::move(cfg));
                }

    std::string table = sweep_csv_header();
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const RunReport report = monte_carlo(grid[p], opt.threads);
        std::ostringstream name;
        name << "point_" << std::setw(3) << std::setfill('0') << p;
        write_report_set(fs::path(opt.out_dir) / name.str(), report, "sweep");
        table += sweep_csv_rows(p, grid[p], report);
        out << name.str() << " done\n";
    }
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "sweep.csv", table);
    out << "wrote " << (fs::path(opt.out_dir) / "sweep.csv").string() << '\n';
    return kExitOk;
}

int command_oracle_check(std::ostream& out) {
    const auto t0 = std::chrono::steady_clock::now();
    const OracleCheckReport rep = run_oracle_check();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& c : rep.cases) {
        out << c.name << ": draws=" << c.draws << " true_rate=" << format_number(c.true_rate)
            << " bias=" << format_number(c.abs_bias) << " design_variance=" << format_number(c.design_variance)
            << " mean_variance_est=" << format_number(c.mean_variance_est);
        if (c.closed_form_variance) out << " closed_form=" << format_number(*c.closed_form_variance);
        out << '\n';
    }
    out << "max_abs_bias " << format_number(rep.max_abs_bias) << '\n';
    out << "max_variance_rel_error " << format_number(rep.max_variance_rel_error) << '\n';
    out << "census_variance " << format_number(rep.census_variance) << '\n';
    out << "closed_form_rel_error " << format_number(rep.closed_form_rel_error) << '\n';
    out << "elapsed_seconds " << format_number(seconds) << '\n';
    out << (rep.passed ? "PASS" : "FAIL") << '\n';
    return rep.passed ? kExitOk : kExitRuntime;
}

int command_report(const CommonOptions& opt, std::ostream& out) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw ConfigError(opt.config_path + ":0: cannot open report");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(opt.config_path + ": invalid JSON: " + e.what());
    }
    const RunReport report = report_from_json(doc);
    fs::create_directories(opt.out_dir);
    write_file(fs::path(opt.out_dir) / "summary.csv", summary_csv(report));
    write_file(fs::path(opt.out_dir) / "histogram.csv", histogram_csv(report));
    print_summary(out, report);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neyman stratified sampling for active learning: simulations and estimation checks", "nsal"};
    app.require_subcommand(1);
    app.set_version_flag("--version", NSAL_VERSION);

    CommonOptions opt;
    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* c = sub->add_option("--config", opt.config_path, "Config JSON (or a run manifest)");
        if (needs_config) c->required();
        sub->add_option("--out", opt.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", opt.seed, "Override the experiment seed");
        sub->add_option("--replications", opt.replications, "Override the replication count")
            ->check(CLI::PositiveNumber);
        sub->add_option("--threads", opt.threads, "Worker threads (0 = all cores)");
    };
    auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment");
    add_common(run, true);
    auto* sweep = app.add_subcommand("sweep", "Run a grid of experiments");
    add_common(sweep, true);
    auto* oracle = app.add_subcommand("oracle-check", "Enumerate tiny designs and check estimator unbiasedness");
    auto* report = app.add_subcommand("report", "Rebuild summary.csv and histogram.csv from a report.json");
    add_common(report, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << NSAL_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "nsal: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        if (*run) return command_run(opt, out);
        if (*sweep) return command_sweep(opt, out);
        if (*oracle) return command_oracle_check(out);
        if (*report) return command_report(opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}

}  // namespace nsal
