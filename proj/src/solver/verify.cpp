#include <algorithm>
#include <cmath>

#include "internal.hpp"

namespace eigenframe::solver {

namespace {

// Indices of a forced multiplicity label such as "λ1=λ2=λ3", 0-based.
std::vector<std::size_t> chain_indices(const std::string& label)
{
    std::vector<std::size_t> out;
    std::size_t k = 0;
    while (k < label.size()) {
        if (std::isdigit(static_cast<unsigned char>(label[k]))) {
            std::size_t e = k;
            while (e < label.size() && std::isdigit(static_cast<unsigned char>(label[e])))
                ++e;
            out.push_back(std::stoul(label.substr(k, e - k)) - 1);
            k = e;
        } else {
            ++k;
        }
    }
    return out;
}

}  // namespace

Residuals verify(const SolutionField& sol, const geometry::Frame& frame, const analysis::CaseReport& report,
                 const Tolerances& tol)
{
    const Grid& g = sol.grid;
    std::size_t n = frame.n(), N = g.size();
    Residuals res;
    res.path = sol.residuals.path;
    auto R = detail::frame_at_nodes(sol, frame);
    auto J = detail::grid_jacobian(sol, R);

    // margin 2 for fourth order differences where the axis allows it
    std::vector<std::size_t> margin(n);
    std::vector<bool> fourth(n);
    for (std::size_t a = 0; a < n; ++a) {
        fourth[a] = g.count(a) >= 5;
        margin[a] = fourth[a] ? 2 : 1;
    }
    auto inside = [&](const std::vector<std::size_t>& idx, std::size_t a) {
        return g.count(a) >= 3 && idx[a] >= margin[a] && idx[a] + margin[a] < g.count(a);
    };

    for (std::size_t node = 0; node < N; ++node) {
        auto idx = g.multi(node);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                if (!inside(idx, j) || !inside(idx, k))
                    continue;
                for (std::size_t i = 0; i < n; ++i) {
                    double dk = detail::axis_derivative(g, J[i * n + j], node, k, fourth[k]);
                    double dj = detail::axis_derivative(g, J[i * n + k], node, j, fourth[j]);
                    res.curl = std::max(res.curl, std::abs(dk - dj));
                }
            }
        if (sol.flux.size() == n) {
            bool all = true;
            for (std::size_t a = 0; a < n; ++a)
                all = all && inside(idx, a);
            if (all) {
                std::vector<double> D(n * n);
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t a = 0; a < n; ++a)
                        D[i * n + a] = detail::axis_derivative(g, sol.flux[i], node, a, fourth[a]);
                for (std::size_t e = 0; e < n; ++e) {
                    double num = 0.0, den = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                        double DfR = 0.0;
                        if (sol.in_w)
                            DfR = D[i * n + e];
                        else
                            for (std::size_t a = 0; a < n; ++a)
                                DfR += D[i * n + a] * R[a * n + e][node];
                        double target = sol.lambda[e][node] * R[i * n + e][node];
                        num += (DfR - target) * (DfR - target);
                        den += R[i * n + e][node] * R[i * n + e][node];
                    }
                    res.eigen = std::max(res.eigen, std::sqrt(num / den));
                }
            }
        }
    }

    // tolerances are set for 21 nodes per axis and grow as h^2 on coarser grids
    std::size_t fewest = g.count(0);
    for (std::size_t a = 1; a < n; ++a)
        fewest = std::min(fewest, g.count(a));
    double coarse = std::max(1.0, std::pow(20.0 / double(std::max<std::size_t>(fewest, 2) - 1), 2));
    double jmax = 0.0;
    for (const auto& c : J)
        for (double v : c)
            jmax = std::max(jmax, std::abs(v));
    res.curl_limit = tol.curl_tol * (1.0 + jmax) * coarse;
    res.eigen_limit = tol.curl_tol * coarse;

    double scale = 0.0;
    res.min_gap = n > 1 ? 1e300 : 0.0;
    for (std::size_t node = 0; node < N; ++node)
        for (std::size_t i = 0; i < n; ++i) {
            scale = std::max(scale, std::abs(sol.lambda[i][node]));
            for (std::size_t j = i + 1; j < n; ++j)
                res.min_gap = std::min(res.min_gap, std::abs(sol.lambda[i][node] - sol.lambda[j][node]));
        }
    res.strict = res.min_gap > tol.integ_tol * (1.0 + scale);

    for (const auto& label : report.forced) {
        auto chain = chain_indices(label);
        Multiplicity m;
        m.label = label;
        for (std::size_t node = 0; node < N; ++node)
            for (std::size_t a : chain)
                m.deviation = std::max(m.deviation, std::abs(sol.lambda[a][node] - sol.lambda[chain[0]][node]));
        m.holds = m.deviation <= tol.integ_tol * (1.0 + scale);
        res.forced.push_back(m);
    }

    if (report.relation && !report.relation->alpha.empty()) {
        expr::Evaluator ev(report.relation->alpha, frame.vars);
        std::vector<double> al(n);
        for (std::size_t node = 0; node < N; ++node) {
            detail::eval_at(ev, sol.u[node], al);
            double amax = 0.0, s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                amax = std::max(amax, std::abs(al[i]));
                s += al[i] * sol.lambda[i][node];
            }
            if (amax > 0)
                res.relation = std::max(res.relation, std::abs(s) / (amax * (1.0 + scale)));
        }
    }
    return res;
}

}  // namespace eigenframe::solver
