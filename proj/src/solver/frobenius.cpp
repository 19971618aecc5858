#include <algorithm>
#include <cmath>
#include <numeric>

#include "internal.hpp"

namespace eigenframe::solver {

using analysis::ReducedSystem;

namespace {

using Field = std::vector<std::vector<double>>;  // [node][unknown]

// r_i(y_u) = coeff (y_partner - y_u) in every frame direction, so along the
// coordinate axis p, d y_u / d u^p = sum_i L^i_p r_i(y_u).
class FrobeniusRhs {
public:
    explicit FrobeniusRhs(const ReducedSystem& red) : red_(red), n_(red.n), U_(red.unknowns.size())
    {
        std::vector<Expr> batch;
        for (std::size_t u = 0; u < U_; ++u)
            for (std::size_t i = 0; i < n_; ++i) {
                if (!red.eq[u][i].prescribed)
                    throw NotSolvableError("Frobenius integration needs every derivative of '" + red.unknowns[u] +
                                           "' prescribed");
                batch.push_back(red.eq[u][i].coeff);
            }
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t p = 0; p < n_; ++p)
                batch.push_back(red.L[i][p]);
        ev_ = std::make_unique<expr::Evaluator>(batch, red.vars);
        vals_.resize(batch.size());
    }

    void operator()(const std::vector<double>& x, const std::vector<double>& y, std::size_t p, std::vector<double>& dy)
    {
        detail::eval_at(*ev_, x, vals_);
        for (std::size_t u = 0; u < U_; ++u) {
            double s = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                const auto& t = red_.eq[u][i];
                s += vals_[U_ * n_ + i * n_ + p] * vals_[u * n_ + i] * (y[t.partner] - y[u]);
            }
            dy[u] = s;
        }
    }

private:
    const ReducedSystem& red_;
    std::size_t n_, U_;
    std::unique_ptr<expr::Evaluator> ev_;
    std::vector<double> vals_;
};

Field sweep(const Grid& g, const std::vector<std::size_t>& order, const std::vector<double>& y0, FrobeniusRhs& rhs,
            int substeps)
{
    std::size_t U = y0.size();
    Field Y(g.size());
    Y[g.flat(g.base)] = y0;
    std::vector<double> k1(U), k2(U), k3(U), k4(U), tmp(U);
    for (std::size_t s = 0; s < order.size(); ++s) {
        std::size_t a = order[s];
        std::vector<bool> fixed(g.dim(), false);
        for (std::size_t r = s + 1; r < order.size(); ++r)
            fixed[order[r]] = true;
        std::size_t stride = g.stride(a), m = g.count(a), b = g.base[a];
        detail::line_starts(g, a, fixed, [&](std::size_t start) {
            std::vector<double> x = g.point(start);
            auto march = [&](long dir) {
                std::vector<double> y = Y[start];
                x[a] = g.axes[a][b];
                for (long k = static_cast<long>(b); dir > 0 ? k + 1 < static_cast<long>(m) : k > 0; k += dir) {
                    double x0 = g.axes[a][k], x1 = g.axes[a][k + dir];
                    double h = (x1 - x0) / substeps;
                    for (int q = 0; q < substeps; ++q) {
                        double t = x0 + q * h;
                        x[a] = t;
                        rhs(x, y, a, k1);
                        x[a] = t + h / 2;
                        for (std::size_t u = 0; u < U; ++u)
                            tmp[u] = y[u] + h / 2 * k1[u];
                        rhs(x, tmp, a, k2);
                        for (std::size_t u = 0; u < U; ++u)
                            tmp[u] = y[u] + h / 2 * k2[u];
                        rhs(x, tmp, a, k3);
                        x[a] = q + 1 == substeps ? x1 : t + h;
                        for (std::size_t u = 0; u < U; ++u)
                            tmp[u] = y[u] + h * k3[u];
                        rhs(x, tmp, a, k4);
                        for (std::size_t u = 0; u < U; ++u)
                            y[u] += h / 6 * (k1[u] + 2 * k2[u] + 2 * k3[u] + k4[u]);
                    }
                    Y[static_cast<std::size_t>(static_cast<long>(start) +
                                              (k + dir - static_cast<long>(b)) * static_cast<long>(stride))] = y;
                }
            };
            march(+1);
            march(-1);
        });
    }
    return Y;
}

}  // namespace

SolutionField integrate_frobenius(const ReducedSystem& red, const std::vector<std::size_t>& perm,
                                  const InitialData& data, const Grid& grid, const Tolerances& tol,
                                  const SolveOptions& opt)
{
    std::size_t n = red.n, U = red.unknowns.size();
    if (grid.dim() != n)
        throw Error("grid dimension does not match the frame");
    std::vector<double> y0(U);
    for (std::size_t u = 0; u < U; ++u) {
        auto it = data.constants.find(red.unknowns[u]);
        if (it == data.constants.end())
            throw NotSolvableError("initial data: constant '" + red.unknowns[u] + "' is required");
        y0[u] = it->second;
    }
    FrobeniusRhs rhs(red);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Field Y = sweep(grid, order, y0, rhs, opt.substeps);
    std::reverse(order.begin(), order.end());
    Field Yr = sweep(grid, order, y0, rhs, opt.substeps);

    SolutionField sol;
    sol.grid = grid;
    sol.coords = red.vars;
    double scale = 0.0, gap = 0.0;
    for (std::size_t node = 0; node < grid.size(); ++node)
        for (std::size_t u = 0; u < U; ++u) {
            scale = std::max(scale, std::abs(Y[node][u]));
            gap = std::max(gap, std::abs(Y[node][u] - Yr[node][u]));
        }
    sol.integration_path_gap = gap / (1.0 + scale);
    if (sol.integration_path_gap > tol.path_tol)
        throw IntegrationError("Frobenius integration depends on the axis order (relative gap " +
                               std::to_string(sol.integration_path_gap) + ")");

    std::vector<Expr> coeffs;
    for (const auto& terms : red.lambda_of)
        for (const auto& [u, c] : terms)
            coeffs.push_back(c);
    expr::Evaluator cev(coeffs, red.vars);
    std::vector<double> cv(coeffs.size());
    sol.lambda.assign(n, std::vector<double>(grid.size()));
    sol.u.resize(grid.size());
    for (std::size_t node = 0; node < grid.size(); ++node) {
        sol.u[node] = grid.point(node);
        detail::eval_at(cev, sol.u[node], cv);
        std::size_t q = 0;
        for (std::size_t a = 0; a < n; ++a) {
            double v = 0.0;
            for (const auto& [u, c] : red.lambda_of[a])
                v += cv[q++] * Y[node][u];
            sol.lambda[perm[a]][node] = v;
        }
    }
    return sol;
}

}  // namespace eigenframe::solver
