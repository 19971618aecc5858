#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>

#include "eigenframe/solver.hpp"

namespace eigenframe::cli {

// Stable process exit codes.
enum ExitCode : int {
    Ok = 0,
    ConfigFailure = 1,      // parse/config errors, fixture mismatches
    Unclassified = 2,       // n >= 4 frame outside the classified cases
    NonConstantRank = 3,
    NotSolvable = 4,
    IntegrationFailure = 5, // also: verification above tolerance
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& source, int line, const std::string& msg)
        : Error(source + ":" + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Lines of the keys as read, for diagnostics; ignored by comparisons.
struct SourceLines {
    std::string source = "<config>";
    std::map<std::string, int> at;  // "section.key" -> line

    int of(const std::string& key) const
    {
        auto it = at.find(key);
        return it == at.end() ? 0 : it->second;
    }
    bool operator==(const SourceLines&) const { return true; }
};

struct ChartConfig {
    std::vector<std::string> vars;
    std::vector<std::string> rho, rho_inv;
    std::vector<double> lo, hi, base;

    bool operator==(const ChartConfig&) const = default;
};

struct Expected {
    std::string origin;  // where the expected values come from: published, trivial or derived
    std::string label;   // case label as printed
    std::optional<int> rank;
    std::string relation;
    std::string compat;  // holds / fails
    std::string family;
    std::string index_sets;  // e.g. "{1,2} {3}"
    std::vector<std::string> forced;
    std::map<std::string, std::string> closed;  // lambda<i> -> expression in u and/or w
    double error = 1e-4;
    std::string level;  // every lambda is a function of this expression
    double level_tol = 1e-4;
    std::vector<std::string> constant;  // lambda<i> columns constant on the grid
    double constant_tol = 1e-10;
    bool convergence = false;

    bool operator==(const Expected&) const = default;
};

struct JobConfig {
    std::string name;
    std::string description;
    std::vector<std::string> vars;
    std::string pressure;  // p(v, S), materialises p_v, p_S, ...
    std::vector<std::pair<std::string, std::string>> parameters;
    std::vector<std::vector<std::string>> columns;  // columns[i] = components of R_{i+1}
    std::vector<double> lo, hi, base;
    std::optional<ChartConfig> chart;
    std::vector<std::size_t> counts;
    int substeps = 4;
    double flow_margin = 0.25;
    std::string param = "t";
    std::map<std::string, double> constants;
    std::map<std::string, std::string> constant_exprs;  // evaluated at the base point
    std::map<std::string, std::string> functions;       // in `param`
    Tolerances tol;
    std::string out_dir = ".";
    std::string csv, json;
    Expected expected;
    SourceLines lines;

    std::size_t n() const { return vars.size(); }
    bool operator==(const JobConfig&) const = default;
};

JobConfig parse_config(std::istream& is, const std::string& source = "<config>");
JobConfig load_config(const std::filesystem::path& path);

// Fully explicit config text; parse_config of it gives an equal JobConfig.
std::string effective_config(const JobConfig& cfg);

// key=value override from the command line.
void set_tolerance(Tolerances& tol, const std::string& key, const std::string& value);

// Expressions resolved against the variables and parameters.
struct Job {
    geometry::Frame frame;
    std::optional<geometry::RiemannChart> chart;
    solver::InitialData data;
    std::map<std::string, Expr> symbols;  // parameters, substituted into the frame
    Tolerances tol;
    solver::SolveOptions options;
};

Job build_job(const JobConfig& cfg);

// Symbols derived from a pressure law p(v, S).
std::map<std::string, Expr> pressure_symbols(const Expr& p);

// "{1,2} {3}"
std::string index_sets_text(const std::vector<std::vector<std::size_t>>& sets);
std::string analysis_report(const analysis::Analysis& an);
std::string residual_report(const solver::SolutionField& sol);

// Field read back from a CSV written by `solve`.  The grid is rebuilt from
// the job: in w when in_w, otherwise in u.
solver::SolutionField field_from_csv(const solver::CsvTable& table, const Job& job,
                                     const std::vector<std::size_t>& counts, bool in_w);

// Rich cases with a chart are solved on the chart box.
bool solves_in_w(const Job& job, const analysis::CaseReport& report);

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct FixtureResult {
    std::string name;
    std::vector<Check> checks;
    bool passed() const;
};

FixtureResult run_fixture(const JobConfig& cfg);

// Closed-form and level-set comparisons of a solved field.
double closed_form_error(const solver::SolutionField& sol, const Job& job, const Expected& ex);
double level_spread(const solver::SolutionField& sol, const Job& job, const std::string& level);

std::filesystem::path examples_dir();
std::vector<std::filesystem::path> list_fixtures(const std::filesystem::path& dir);

}  // namespace eigenframe::cli
