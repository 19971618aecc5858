#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "eigenframe/cli.hpp"

#ifndef EIGENFRAME_FIXTURE_DIR
#define EIGENFRAME_FIXTURE_DIR "fixtures"
#endif

namespace eigenframe::cli {

namespace {

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// Values of (u, w) at every node; w is absent without a chart.
struct NodeCoords {
    std::vector<std::string> vars;
    std::vector<std::vector<double>> at;  // [node], NaN where undefined
};

NodeCoords node_coords(const solver::SolutionField& sol, const Job& job)
{
    NodeCoords c;
    c.vars = job.frame.vars;
    std::size_t n = job.frame.n(), N = sol.grid.size();
    std::optional<expr::Evaluator> rho;
    if (job.chart) {
        c.vars.insert(c.vars.end(), job.chart->wvars.begin(), job.chart->wvars.end());
        if (!sol.in_w)
            rho.emplace(job.chart->rho, job.frame.vars);
    }
    c.at.assign(N, std::vector<double>(c.vars.size(), std::nan("")));
    std::vector<double> w(n);
    for (std::size_t node = 0; node < N; ++node) {
        std::copy(sol.u[node].begin(), sol.u[node].end(), c.at[node].begin());
        if (!job.chart)
            continue;
        if (sol.in_w) {
            w = sol.grid.point(node);
        } else {
            try {
                rho->eval(sol.u[node], w);
            } catch (const expr::EvalError&) {
                std::fill(w.begin(), w.end(), std::nan(""));
            }
        }
        std::copy(w.begin(), w.end(), c.at[node].begin() + n);
    }
    return c;
}

Expr parse_over(const std::string& text, const NodeCoords& c, const Job& job)
{
    auto known = c.vars;
    for (const auto& [k, v] : job.symbols)
        known.push_back(k);
    return expr::simplify(expr::substitute(expr::parse(text, known), job.symbols));
}

std::size_t lambda_index(const std::string& key, std::size_t n)
{
    if (key.rfind("lambda", 0) == 0 && key.size() > 6 &&
        key.find_first_not_of("0123456789", 6) == std::string::npos) {
        std::size_t i = std::stoul(key.substr(6));
        if (i >= 1 && i <= n)
            return i - 1;
    }
    throw Error("'" + key + "' does not name an eigenvalue column");
}

bool defined(const std::vector<double>& x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

double closed_form_error(const solver::SolutionField& sol, const Job& job, const Expected& ex)
{
    auto c = node_coords(sol, job);
    std::size_t n = job.frame.n();
    double err = 0.0;
    for (const auto& [key, text] : ex.closed) {
        std::size_t i = lambda_index(key, n);
        Expr e = parse_over(text, c, job);
        std::vector<Expr> one{e};
        expr::Evaluator ev(one, c.vars);
        std::vector<double> out(1);
        for (std::size_t node = 0; node < c.at.size(); ++node) {
            if (!defined(c.at[node]))
                continue;
            ev.eval(c.at[node], out);
            err = std::max(err, std::abs(sol.lambda[i][node] - out[0]));
        }
    }
    return err;
}

double level_spread(const solver::SolutionField& sol, const Job& job, const std::string& level)
{
    auto c = node_coords(sol, job);
    std::vector<Expr> one{parse_over(level, c, job)};
    expr::Evaluator ev(one, c.vars);
    std::vector<double> out(1);
    // nodes sharing a level value (to 1e-9) must share every eigenvalue
    std::map<long long, std::vector<std::size_t>> groups;
    for (std::size_t node = 0; node < c.at.size(); ++node) {
        if (!defined(c.at[node]))
            continue;
        ev.eval(c.at[node], out);
        groups[std::llround(out[0] * 1e9)].push_back(node);
    }
    double spread = 0.0;
    for (const auto& [key, nodes] : groups)
        for (const auto& col : sol.lambda) {
            auto [lo, hi] = std::minmax_element(nodes.begin(), nodes.end(),
                                                [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
            spread = std::max(spread, col[*hi] - col[*lo]);
        }
    return spread;
}

bool FixtureResult::passed() const
{
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

FixtureResult run_fixture(const JobConfig& cfg)
{
    FixtureResult out;
    out.name = cfg.name;
    const auto& ex = cfg.expected;
    auto add = [&](std::string name, bool ok, std::string detail) {
        out.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    auto compare = [&](const std::string& name, const std::string& want, const std::string& got) {
        if (!want.empty())
            add(name, want == got, "expected '" + want + "', got '" + got + "'");
    };

    Job job = build_job(cfg);
    analysis::Analysis an;
    try {
        an = analysis::analyze(job.frame, job.chart, job.tol);
    } catch (const Error& e) {
        add("analyze", false, e.what());
        return out;
    }
    const auto& rep = an.report;
    add("identities", an.identities.passed,
        "symmetry " + num(an.identities.symmetry) + ", flatness " + num(an.identities.flatness));
    compare("case", ex.label, to_string(rep.label));
    if (ex.rank)
        add("rank", *ex.rank == rep.rank, "expected " + std::to_string(*ex.rank) + ", got " + std::to_string(rep.rank));
    compare("relation", ex.relation, rep.relation ? rep.relation->text : "");
    compare("compat", ex.compat, rep.compat ? (rep.compat->holds ? "holds" : "fails") : "");
    compare("family", ex.family, rep.family);
    compare("index sets", ex.index_sets, index_sets_text(rep.index_sets));
    if (!ex.forced.empty()) {
        std::string want, got;
        for (const auto& f : ex.forced)
            want += (want.empty() ? "" : " ") + f;
        for (const auto& f : rep.forced)
            got += (got.empty() ? "" : " ") + f;
        compare("forced", want, got);
    }

    bool has_data = !job.data.constants.empty() || !job.data.functions.empty();
    if (!has_data || cfg.counts.empty())
        return out;

    solver::SolutionField sol;
    try {
        sol = solver::solve(job.frame, job.chart, an, job.data, cfg.counts, job.tol, job.options);
    } catch (const Error& e) {
        add("solve", false, e.what());
        return out;
    }
    const auto& r = sol.residuals;
    add("curl", r.curl <= r.curl_limit, num(r.curl) + " (limit " + num(r.curl_limit) + ")");
    add("eigen", r.eigen <= r.eigen_limit, num(r.eigen) + " (limit " + num(r.eigen_limit) + ")");
    for (const auto& m : r.forced)
        add("multiplicity " + m.label, m.holds, "deviation " + num(m.deviation));
    if (rep.relation && !rep.relation->alpha.empty())
        add("relation on grid", r.relation <= job.tol.compat_tol, num(r.relation));
    if (!ex.closed.empty()) {
        double err = closed_form_error(sol, job, ex);
        add("closed form", err < ex.error, num(err) + " (limit " + num(ex.error) + ")");
    }
    if (!ex.level.empty()) {
        double s = level_spread(sol, job, ex.level);
        add("level sets", s < ex.level_tol, num(s) + " (limit " + num(ex.level_tol) + ")");
    }
    for (const auto& key : ex.constant) {
        const auto& col = sol.lambda[lambda_index(key, job.frame.n())];
        auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        add(key + " constant", *hi - *lo <= ex.constant_tol, "spread " + num(*hi - *lo));
    }
    if (ex.convergence && !ex.closed.empty()) {
        // 5 and 9 nodes per axis, one RK4 step per cell
        auto opt = job.options;
        opt.substeps = 1;
        double e[2];
        std::size_t k = 0;
        for (std::size_t m : {5, 9}) {
            std::vector<std::size_t> counts(job.frame.n(), m);
            auto s = solver::solve(job.frame, job.chart, an, job.data, counts, job.tol, opt);
            e[k++] = closed_form_error(s, job, ex);
        }
        bool exact = e[0] < 1e-12 && e[1] < 1e-12;
        add("convergence", exact || e[0] >= 3 * e[1],
            "errors " + num(e[0]) + " -> " + num(e[1]) + (exact ? " (exact to roundoff)" : ""));
    }
    return out;
}

std::filesystem::path examples_dir()
{
    if (const char* env = std::getenv("EIGENFRAME_EXAMPLES"); env && *env)
        return env;
    return EIGENFRAME_FIXTURE_DIR;
}

std::vector<std::filesystem::path> list_fixtures(const std::filesystem::path& dir)
{
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir))
        throw Error("fixture directory " + dir.string() + " does not exist");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".cfg")
            out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace eigenframe::cli
