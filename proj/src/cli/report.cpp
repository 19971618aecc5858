#include <cmath>
#include <cstdio>
#include <sstream>

#include "eigenframe/cli.hpp"

namespace eigenframe::cli {

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

}  // namespace

std::string index_sets_text(const std::vector<std::vector<std::size_t>>& sets)
{
    std::string s;
    for (const auto& set : sets) {
        s += s.empty() ? "{" : " {";
        for (std::size_t k = 0; k < set.size(); ++k)
            s += (k ? "," : "") + std::to_string(set[k]);
        s += "}";
    }
    return s;
}

std::string analysis_report(const analysis::Analysis& an)
{
    const auto& r = an.report;
    std::ostringstream o;
    o << "n: " << r.n << "\n";
    o << "rank: " << r.rank << "\n";
    o << "case: " << to_string(r.label) << "\n";
    o << "rich: " << (r.rich ? "yes" : "no") << "\n";
    if (r.relation)
        o << "relation: " << r.relation->text << "\n";
    if (r.compat)
        o << "compat: " << (r.compat->holds ? "holds" : "fails") << " (residual " << num(r.compat->residual) << ")\n";
    o << "family: " << r.family << "\n";
    if (!r.index_sets.empty())
        o << "index sets: " << index_sets_text(r.index_sets) << "\n";
    for (const auto& f : r.forced)
        o << "forced: " << f << "\n";
    o << "identities: symmetry " << num(an.identities.symmetry) << ", flatness " << num(an.identities.flatness)
      << "\n";
    for (const auto& note : r.notes)
        o << "note: " << note << "\n";
    return o.str();
}

std::string residual_report(const solver::SolutionField& sol)
{
    const auto& g = sol.grid;
    const auto& r = sol.residuals;
    std::ostringstream o;
    o << "grid: ";
    for (std::size_t a = 0; a < g.dim(); ++a)
        o << (a ? " x " : "") << g.count(a);
    o << (sol.in_w ? " (Riemann invariants)" : " (state)") << "\n";
    if (!sol.data_description.empty())
        o << "data: " << sol.data_description << "\n";
    o << "curl: " << num(r.curl) << " (limit " << num(r.curl_limit) << ")\n";
    o << "eigen: " << num(r.eigen) << " (limit " << num(r.eigen_limit) << ")\n";
    o << "path: " << num(r.path) << "\n";
    o << "relation: " << num(r.relation) << "\n";
    o << "integration_path_gap: " << num(sol.integration_path_gap) << "\n";
    o << "drift: " << num(sol.drift) << "\n";
    o << "min_gap: " << num(r.min_gap) << "\n";
    o << "strict: " << (r.strict ? "yes" : "no") << "\n";
    for (const auto& m : r.forced)
        o << "forced: " << m.label << " deviation " << num(m.deviation) << (m.holds ? " (holds)" : " (violated)")
          << "\n";
    o << "verdict: " << (r.passed() ? "pass" : "fail") << "\n";
    return o.str();
}

bool solves_in_w(const Job& job, const analysis::CaseReport& report)
{
    bool rich = report.label == analysis::CaseLabel::RichRank0 || report.label == analysis::CaseLabel::RichConstrained;
    return rich && job.chart.has_value();
}

solver::SolutionField field_from_csv(const solver::CsvTable& table, const Job& job,
                                     const std::vector<std::size_t>& counts, bool in_w)
{
    std::size_t n = job.frame.n();
    if (table.header.size() != 3 * n)
        throw Error("csv: expected " + std::to_string(3 * n) + " columns, found " +
                    std::to_string(table.header.size()));
    for (std::size_t i = 0; i < n; ++i)
        for (auto [col, off] : {std::pair{"u", 0}, {"lambda", 1}, {"f", 2}})
            if (table.header[off * n + i] != col + std::to_string(i + 1))
                throw Error("csv: column " + std::to_string(off * n + i + 1) + " should be " + col +
                            std::to_string(i + 1));
    solver::SolutionField sol;
    sol.in_w = in_w;
    sol.coords = in_w ? job.chart->wvars : job.frame.vars;
    sol.grid = in_w ? solver::Grid::uniform(job.chart->wbox, counts, job.chart->wbase)
                    : solver::Grid::uniform(job.frame.domain, counts, job.frame.base);
    std::size_t N = sol.grid.size();
    if (table.rows.size() != N)
        throw Error("csv: " + std::to_string(table.rows.size()) + " rows for a grid of " + std::to_string(N) +
                    " nodes");
    sol.u.assign(N, std::vector<double>(n));
    sol.lambda.assign(n, std::vector<double>(N));
    sol.flux.assign(n, std::vector<double>(N));
    std::optional<expr::Evaluator> back;
    if (in_w)
        back.emplace(job.chart->rho_inv, job.chart->wvars);
    std::vector<double> expect(n);
    for (std::size_t node = 0; node < N; ++node) {
        const auto& row = table.rows[node];
        auto x = sol.grid.point(node);
        if (in_w)
            back->eval(x, expect);
        else
            expect = x;
        for (std::size_t i = 0; i < n; ++i) {
            sol.u[node][i] = row[i];
            sol.lambda[i][node] = row[n + i];
            sol.flux[i][node] = row[2 * n + i];
            if (!(std::abs(row[i] - expect[i]) <= 1e-9 * (1.0 + std::abs(expect[i]))))
                throw Error("csv: row " + std::to_string(node + 2) + " is not on the grid of the config");
        }
    }
    return sol;
}

}  // namespace eigenframe::cli
