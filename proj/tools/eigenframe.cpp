#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eigenframe/cli.hpp"

using namespace eigenframe;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::optional<std::uint64_t> seed;
    std::vector<std::string> tol;
    std::string out;
    std::vector<std::size_t> grid;
    bool json = false;
};

void add_common(CLI::App* app, Common& c, bool solving)
{
    app->add_option("--seed", c.seed, "sampling seed");
    app->add_option("--tol", c.tol, "tolerance override key=val (repeatable)");
    app->add_flag("--json", c.json, "machine-readable report on stdout");
    if (solving) {
        app->add_option("--out", c.out, "output directory");
        app->add_option("--grid", c.grid, "nodes per axis, n1,n2,...")->delimiter(',');
    }
}

cli::JobConfig load_for_analysis(const std::string& path, const Common& c)
{
    auto cfg = cli::load_config(path);
    if (c.seed)
        cfg.tol.seed = *c.seed;
    for (const auto& kv : c.tol) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw cli::ConfigError("--tol", 0, "expected key=val, got '" + kv + "'");
        cli::set_tolerance(cfg.tol, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

cli::JobConfig load(const std::string& path, const Common& c)
{
    auto cfg = load_for_analysis(path, c);
    if (!c.grid.empty())
        cfg.counts = c.grid;
    if (!c.out.empty())
        cfg.out_dir = c.out;
    if (cfg.counts.empty())
        throw cli::ConfigError(path, 0, "no grid: give [grid] counts or --grid");
    if (cfg.counts.size() != cfg.n())
        throw cli::ConfigError("--grid", 0, "needs " + std::to_string(cfg.n()) + " counts");
    for (auto k : cfg.counts)
        if (k < 2)
            throw cli::ConfigError("--grid", 0, "resolution must be at least 2");
    return cfg;
}

int guarded(const std::function<int()>& body)
{
    try {
        return body();
    } catch (const cli::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::ConfigFailure;
    } catch (const analysis::RankError& e) {
        std::cerr << "rank error: " << e.what() << "\n";
        return cli::NonConstantRank;
    } catch (const solver::NotSolvableError& e) {
        std::cerr << "not solvable: " << e.what() << "\n";
        return cli::NotSolvable;
    } catch (const solver::IntegrationError& e) {
        std::cerr << "integration failed: " << e.what() << "\n";
        return cli::IntegrationFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::ConfigFailure;
    }
}

int cmd_analyze(const std::string& path, const Common& c)
{
    auto cfg = load_for_analysis(path, c);
    auto job = cli::build_job(cfg);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    if (c.json)
        std::cout << solver::report_json(an.report, nullptr) << "\n";
    else
        std::cout << cli::analysis_report(an);
    return an.report.label == analysis::CaseLabel::UnclassifiedN4 ? cli::Unclassified : cli::Ok;
}

int cmd_solve(const std::string& path, const Common& c)
{
    auto cfg = load(path, c);
    auto job = cli::build_job(cfg);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    if (an.report.label == analysis::CaseLabel::UnclassifiedN4) {
        std::cerr << cli::analysis_report(an);
        return cli::Unclassified;
    }
    auto sol = solver::solve(job.frame, job.chart, an, job.data, cfg.counts, job.tol, job.options);

    fs::path dir = cfg.out_dir;
    fs::create_directories(dir);
    auto csv = dir / (cfg.csv.empty() ? cfg.name + ".csv" : cfg.csv);
    auto json = dir / (cfg.json.empty() ? cfg.name + ".json" : cfg.json);
    {
        std::ofstream o(csv);
        solver::write_csv(o, sol);
    }
    std::string report = solver::report_json(an.report, &sol);
    {
        std::ofstream o(json);
        o << report << "\n";
    }
    {
        std::ofstream o(dir / (cfg.name + ".effective.cfg"));
        o << cli::effective_config(cfg);
    }
    if (c.json) {
        std::cout << report << "\n";
    } else {
        std::cout << "case: " << to_string(an.report.label) << "\n" << cli::residual_report(sol);
        std::cout << "csv: " << csv.string() << "\njson: " << json.string() << "\n";
    }
    return cli::Ok;
}

int cmd_verify(const std::string& csv_path, const std::string& path, const Common& c)
{
    auto cfg = load(path, c);
    auto job = cli::build_job(cfg);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    std::ifstream in(csv_path);
    if (!in)
        throw cli::ConfigError(csv_path, 0, "cannot open");
    auto table = solver::read_csv(in);
    auto sol = cli::field_from_csv(table, job, cfg.counts, cli::solves_in_w(job, an.report));
    sol.residuals = solver::verify(sol, job.frame, an.report, job.tol);
    if (c.json)
        std::cout << solver::report_json(an.report, &sol) << "\n";
    else
        std::cout << cli::residual_report(sol);
    return sol.residuals.passed() ? cli::Ok : cli::IntegrationFailure;
}

int cmd_examples(const std::string& name, bool all, const Common& c)
{
    auto dir = cli::examples_dir();
    auto files = cli::list_fixtures(dir);
    if (!all && name.empty()) {
        for (const auto& f : files)
            std::cout << f.stem().string() << "\n";
        return cli::Ok;
    }
    std::vector<fs::path> chosen;
    for (const auto& f : files)
        if (all || f.stem() == name)
            chosen.push_back(f);
    if (chosen.empty())
        throw cli::ConfigError(name, 0, "no fixture of that name in " + dir.string());
    int passed = 0;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& f : chosen) {
        auto cfg = load_for_analysis(f.string(), c);
        auto res = cli::run_fixture(cfg);
        passed += res.passed();
        if (c.json) {
            nlohmann::json checks = nlohmann::json::array();
            for (const auto& ch : res.checks)
                checks.push_back({{"check", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
            rows.push_back({{"fixture", res.name}, {"passed", res.passed()}, {"checks", checks}});
            continue;
        }
        std::printf("%-24s %s\n", res.name.c_str(), res.passed() ? "PASS" : "FAIL");
        for (const auto& ch : res.checks)
            if (!ch.passed)
                std::printf("    %-18s %s\n", ch.name.c_str(), ch.detail.c_str());
    }
    if (c.json)
        std::cout << rows.dump(2) << "\n";
    else
        std::printf("%d/%zu PASS\n", passed, chosen.size());
    return passed == int(chosen.size()) ? cli::Ok : cli::ConfigFailure;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"eigenframe: conservation laws with prescribed eigenvector fields"};
    app.require_subcommand(1);

    Common common;
    std::string cfg_path, csv_path, name;
    bool all = false;

    auto* analyze = app.add_subcommand("analyze", "classify the frame and report the solution family");
    analyze->add_option("config", cfg_path, "job config")->required();
    add_common(analyze, common, false);

    auto* solve = app.add_subcommand("solve", "integrate the eigenvalues and reconstruct the flux");
    solve->add_option("config", cfg_path, "job config")->required();
    add_common(solve, common, true);

    auto* verify = app.add_subcommand("verify", "recheck a solved CSV against its config");
    verify->add_option("csv", csv_path, "CSV written by solve")->required();
    verify->add_option("config", cfg_path, "job config")->required();
    add_common(verify, common, true);

    auto* examples = app.add_subcommand("examples", "run bundled fixtures");
    examples->add_option("name", name, "fixture name");
    examples->add_flag("--all", all, "run every fixture");
    add_common(examples, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? cli::Ok : cli::ConfigFailure;
    }

    if (*analyze)
        return guarded([&] { return cmd_analyze(cfg_path, common); });
    if (*solve)
        return guarded([&] { return cmd_solve(cfg_path, common); });
    if (*verify)
        return guarded([&] { return cmd_verify(csv_path, cfg_path, common); });
    return guarded([&] { return cmd_examples(name, all, common); });
}
