#include <algorithm>

#include "eigenframe/cli.hpp"

namespace eigenframe::cli {

namespace ex = expr;

std::map<std::string, Expr> pressure_symbols(const Expr& p)
{
    Expr pv = ex::simplify(ex::differentiate(p, "v"));
    Expr pS = ex::simplify(ex::differentiate(p, "S"));
    return {{"p", p},
            {"p_v", pv},
            {"p_S", pS},
            {"p_vv", ex::simplify(ex::differentiate(pv, "v"))},
            {"p_vS", ex::simplify(ex::differentiate(pv, "S"))},
            {"p_SS", ex::simplify(ex::differentiate(pS, "S"))},
            {"pS_pv_v", ex::simplify(ex::differentiate(ex::div(pS, pv), "v"))}};
}

namespace {

class Resolver {
public:
    Resolver(const JobConfig& c) : c_(c), known_(c.vars) {}

    Expr parse(const std::string& text, const std::string& key) const
    {
        try {
            return ex::simplify(ex::substitute(ex::parse(text, known_), sym_));
        } catch (const ex::ParseError& e) {
            throw ConfigError(c_.lines.source, c_.lines.of(key), "'" + text + "': " + e.what());
        }
    }

    Expr parse_in(const std::string& text, const std::vector<std::string>& vars, const std::string& key) const
    {
        try {
            return ex::parse(text, vars);
        } catch (const ex::ParseError& e) {
            throw ConfigError(c_.lines.source, c_.lines.of(key), "'" + text + "': " + e.what());
        }
    }

    void define(const std::string& name, const Expr& e, const std::string& key)
    {
        if (std::find(known_.begin(), known_.end(), name) != known_.end())
            throw ConfigError(c_.lines.source, c_.lines.of(key), "'" + name + "' is already defined");
        known_.push_back(name);
        sym_[name] = e;
    }

    const std::map<std::string, Expr>& symbols() const { return sym_; }
    const std::vector<std::string>& known() const { return known_; }

private:
    const JobConfig& c_;
    std::vector<std::string> known_;
    std::map<std::string, Expr> sym_;
};

}  // namespace

Job build_job(const JobConfig& c)
{
    Job job;
    Resolver res(c);
    std::size_t n = c.n();
    if (!c.pressure.empty()) {
        const std::string key = "parameters.pressure";
        for (const char* v : {"v", "S"})
            if (std::find(c.vars.begin(), c.vars.end(), v) == c.vars.end())
                throw ConfigError(c.lines.source, c.lines.of(key), "a pressure law needs frame variables v and S");
        Expr p = res.parse_in(c.pressure, {"v", "S"}, key);
        for (const auto& [name, e] : pressure_symbols(p))
            res.define(name, e, key);
    }
    for (const auto& [name, text] : c.parameters) {
        std::string key = "parameters." + name;
        res.define(name, res.parse(text, key), key);
    }
    job.symbols = res.symbols();

    auto& f = job.frame;
    f.vars = c.vars;
    f.R.assign(n, std::vector<Expr>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < n; ++m)
            f.R[m][i] = res.parse(c.columns[i][m], "frame.R" + std::to_string(i + 1));
    f.domain = Box{c.lo, c.hi};
    f.base = c.base;

    if (c.chart) {
        const auto& h = *c.chart;
        geometry::RiemannChart ch;
        ch.wvars = h.vars;
        for (const auto& t : h.rho)
            ch.rho.push_back(res.parse(t, "chart.rho"));
        for (const auto& t : h.rho_inv)
            ch.rho_inv.push_back(ex::simplify(res.parse_in(t, h.vars, "chart.rho_inv")));
        ch.wbox = Box{h.lo, h.hi};
        ch.wbase = h.base;
        job.chart = std::move(ch);
    }

    job.data.constants = c.constants;
    for (const auto& [k, text] : c.constant_exprs) {
        std::string key = "initial." + k;
        Expr e = res.parse(text, key);
        ex::Point at;
        for (std::size_t i = 0; i < n; ++i)
            at.push_back({c.vars[i], c.base[i]});
        try {
            job.data.constants[k] = ex::evaluate(e, at);
        } catch (const ex::EvalError& err) {
            throw ConfigError(c.lines.source, c.lines.of(key), std::string("at the base point: ") + err.what());
        }
    }
    for (const auto& [k, text] : c.functions) {
        std::string key = "initial." + k + "(" + c.param + ")";
        Expr e = res.parse_in(text, {c.param}, key);
        if (c.param != "t")
            e = ex::substitute(e, {{c.param, Expr::variable("t")}});
        job.data.functions[k] = e;
    }
    job.tol = c.tol;
    job.options.substeps = c.substeps;
    job.options.flow_margin = c.flow_margin;
    return job;
}

}  // namespace eigenframe::cli
