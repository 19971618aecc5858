#include "internal.hpp"

namespace eigenframe::solver {

using analysis::CaseLabel;

namespace {

std::string describe(const InitialData& data)
{
    std::string s;
    char buf[64];
    for (const auto& [k, v] : data.constants) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        s += (s.empty() ? "" : "; ") + k + " = " + buf;
    }
    for (const auto& [k, f] : data.functions)
        s += (s.empty() ? "" : "; ") + k + "(t) = " + expr::to_string(f);
    return s;
}

}  // namespace

SolutionField constant_field(const geometry::Frame& frame, double value, const Grid& grid)
{
    SolutionField sol;
    sol.grid = grid;
    sol.coords = frame.vars;
    sol.u.resize(grid.size());
    for (std::size_t node = 0; node < grid.size(); ++node)
        sol.u[node] = grid.point(node);
    sol.lambda.assign(frame.n(), std::vector<double>(grid.size(), value));
    return sol;
}

SolutionField solve(const geometry::Frame& frame, const std::optional<geometry::RiemannChart>& chart,
                    const analysis::Analysis& an, const InitialData& data, const std::vector<std::size_t>& counts,
                    const Tolerances& tol, const SolveOptions& opt)
{
    const auto& rep = an.report;
    bool rich = rep.label == CaseLabel::RichRank0 || rep.label == CaseLabel::RichConstrained;
    bool trivial_only = rep.trivial || rep.label == CaseLabel::MaxRankTrivial || rep.label == CaseLabel::N3_III ||
                        rep.label == CaseLabel::UnclassifiedN4;
    auto u_grid = [&] { return Grid::uniform(frame.domain, counts, frame.base); };

    SolutionField sol;
    auto only_constant = data.constants.size() == 1 && data.constants.count("lambda") && data.functions.empty();
    if (only_constant) {
        sol = constant_field(frame, data.constants.at("lambda"), u_grid());
    } else if (trivial_only) {
        throw NotSolvableError("case " + to_string(rep.label) + " admits only the trivial solution; give a single "
                               "constant 'lambda' as initial data");
    } else if (rep.label == CaseLabel::N3_IIa) {
        if (!an.reduced || !rep.compat || !rep.compat->holds)
            throw NotSolvableError("IIa compatibility does not hold");
        sol = integrate_frobenius(*an.reduced, rep.perm, data, u_grid(), tol, opt);
    } else if (rep.label == CaseLabel::N3_IIb) {
        if (!an.reduced)
            throw NotSolvableError("IIb system was not reduced");
        sol = integrate_IIb(*an.reduced, data, u_grid(), tol, opt);
    } else if (rich) {
        if (!chart || !an.reduced)
            throw NotSolvableError("rich case: a [chart] with Riemann invariants is needed to solve");
        if (!rep.compat || !rep.compat->holds)
            throw NotSolvableError("Darboux compatibility does not hold");
        auto g = Grid::uniform(chart->wbox, counts, chart->wbase);
        sol = integrate_darboux(*an.reduced, *chart, data, g, tol, opt);
    } else {
        throw NotSolvableError("no solver for case " + to_string(rep.label));
    }
    sol.data_description = describe(data);
    reconstruct_flux(sol, frame, tol);
    double path = sol.residuals.path;
    sol.residuals = verify(sol, frame, rep, tol);
    sol.residuals.path = path;
    return sol;
}

}  // namespace eigenframe::solver
