#include "eigenframe/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace eigenframe::geometry {

using namespace expr;

FrameDerivative::FrameDerivative(const std::vector<std::string>& vars, const ExprMatrix& R) : R_(R)
{
    for (const auto& v : vars)
        d_.emplace_back(v);
}

Expr FrameDerivative::operator()(std::size_t i, const Expr& f)
{
    Expr sum(0.0);
    for (std::size_t p = 0; p < d_.size(); ++p) {
        if (R_[p][i].is_zero())
            continue;
        Expr dp = d_[p](f);
        if (dp.is_zero())
            continue;
        sum = add(sum, mul(R_[p][i], dp));
    }
    return sum;
}

namespace {

ExprMatrix minor_of(const ExprMatrix& M, std::size_t r, std::size_t c)
{
    ExprMatrix out;
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (i == r)
            continue;
        std::vector<Expr> row;
        for (std::size_t j = 0; j < M.size(); ++j)
            if (j != c)
                row.push_back(M[i][j]);
        out.push_back(std::move(row));
    }
    return out;
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

Expr determinant(const ExprMatrix& M)
{
    std::size_t n = M.size();
    if (n == 1)
        return M[0][0];
    if (n == 2)
        return sub(mul(M[0][0], M[1][1]), mul(M[0][1], M[1][0]));
    Expr det(0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (M[0][j].is_zero())
            continue;
        Expr term = mul(M[0][j], determinant(minor_of(M, 0, j)));
        det = (j % 2 == 0) ? add(det, term) : sub(det, term);
    }
    return det;
}

ExprMatrix adjugate_inverse(const ExprMatrix& M)
{
    std::size_t n = M.size();
    Expr det = determinant(M);
    ExprMatrix inv(n, std::vector<Expr>(n));
    if (n == 1) {
        inv[0][0] = div(Expr(1.0), det);
        return inv;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr cof = determinant(minor_of(M, j, i));
            if ((i + j) % 2)
                cof = neg(cof);
            inv[i][j] = div(cof, det);
        }
    return inv;
}

std::vector<std::vector<double>> sample_values(std::span<const Expr> exprs,
                                               const std::vector<std::string>& vars,
                                               const std::vector<std::vector<double>>& pts)
{
    Evaluator ev(exprs, vars);
    std::vector<std::vector<double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts)
        out.push_back(ev(p));
    return out;
}

ExprMatrix invert_frame(const Frame& frame, const Tolerances& tol)
{
    std::size_t n = frame.n();
    if (n == 0 || n > 4)
        throw DegenerateError("symbolic inversion supports 1 <= n <= 4, got n = " + std::to_string(n));
    Expr det = determinant(frame.R);

    std::vector<Expr> probe{det};
    for (const auto& row : frame.R)
        probe.insert(probe.end(), row.begin(), row.end());
    Evaluator ev(probe, frame.vars);
    auto degenerate_at = [&](const std::vector<double>& x) {
        auto v = ev(x);
        double scale = std::max(1.0, max_abs(std::span(v).subspan(1)));
        return std::abs(v[0]) <= tol.rank_tol * std::pow(scale, static_cast<double>(n));
    };
    if (degenerate_at(frame.base))
        throw DegenerateError("frame determinant vanishes at the base point");

    ExprMatrix L = adjugate_inverse(frame.R);

    std::vector<Expr> prod;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr s(0.0);
            for (std::size_t m = 0; m < n; ++m)
                s = add(s, mul(L[i][m], frame.R[m][j]));
            prod.push_back(s);
        }
    auto pts = sample_points(frame.domain, tol.samples, tol.seed);
    auto vals = sample_values(prod, frame.vars, pts);
    for (std::size_t s = 0; s < pts.size(); ++s) {
        if (degenerate_at(pts[s]))
            throw DegenerateError("frame determinant vanishes inside the domain");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(vals[s][i * n + j] - (i == j ? 1.0 : 0.0)) > tol.inverse_tol)
                    throw DegenerateError("L R differs from the identity at a sample point");
    }
    return L;
}

namespace {

// D[i][m][j] = r_i(R^m_j)
std::vector<std::vector<std::vector<Expr>>> frame_derivatives(const Frame& frame)
{
    std::size_t n = frame.n();
    FrameDerivative r(frame.vars, frame.R);
    std::vector<std::vector<std::vector<Expr>>> D(n, std::vector<std::vector<Expr>>(n, std::vector<Expr>(n)));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < n; ++j)
                D[i][m][j] = r(i, frame.R[m][j]);
    return D;
}

std::vector<Expr> christoffel_from(const ExprMatrix& L,
                                   const std::vector<std::vector<std::vector<Expr>>>& D)
{
    std::size_t n = L.size();
    std::vector<Expr> g(n * n * n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Expr s(0.0);
                for (std::size_t m = 0; m < n; ++m)
                    s = add(s, mul(L[k][m], D[i][m][j]));
                g[idx3(n, k, i, j)] = s;
            }
    return g;
}

std::vector<Expr> structure_from(const ExprMatrix& L,
                                 const std::vector<std::vector<std::vector<Expr>>>& D)
{
    std::size_t n = L.size();
    std::vector<Expr> c(n * n * n);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                Expr s(0.0);
                for (std::size_t m = 0; m < n; ++m)
                    s = add(s, mul(L[k][m], sub(D[i][m][j], D[j][m][i])));
                c[idx3(n, k, i, j)] = s;
                c[idx3(n, k, j, i)] = neg(s);
            }
    return c;
}

}  // namespace

std::vector<Expr> structure_coefficients(const Frame& frame, const ExprMatrix& L)
{
    return structure_from(L, frame_derivatives(frame));
}

std::vector<Expr> christoffel(const Frame& frame, const ExprMatrix& L)
{
    return christoffel_from(L, frame_derivatives(frame));
}

Connection connection(const Frame& frame, const Tolerances& tol)
{
    Connection conn;
    conn.n = frame.n();
    conn.vars = frame.vars;
    conn.R = frame.R;
    conn.L = invert_frame(frame, tol);
    auto D = frame_derivatives(frame);
    conn.gamma = christoffel_from(conn.L, D);
    conn.c = structure_from(conn.L, D);
    return conn;
}

IdentityCheck check_flat_symmetric(const Connection& conn, const Box& domain, const Tolerances& tol)
{
    std::size_t n = conn.n;
    std::size_t n3 = n * n * n;
    std::vector<Expr> batch;
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t i = 0; i < n; ++i)
            batch.push_back(conn.R[p][i]);
    batch.insert(batch.end(), conn.gamma.begin(), conn.gamma.end());
    batch.insert(batch.end(), conn.c.begin(), conn.c.end());
    for (std::size_t p = 0; p < n; ++p) {
        Differentiator d(conn.vars[p]);
        for (const auto& g : conn.gamma)
            batch.push_back(d(g));
    }
    Evaluator ev(batch, conn.vars);

    IdentityCheck out;
    std::vector<double> v(batch.size());
    std::vector<double> rg(n3 * n);  // r_m(Gamma) at [m*n3 + idx]
    for (const auto& x : sample_points(domain, tol.samples, tol.seed)) {
        ev.eval(x, v);
        const double* R = v.data();
        const double* G = R + n * n;
        const double* C = G + n3;
        const double* dG = C + n3;
        auto g = [&](std::size_t k, std::size_t i, std::size_t j) { return G[idx3(n, k, i, j)]; };
        auto c = [&](std::size_t k, std::size_t i, std::size_t j) { return C[idx3(n, k, i, j)]; };
        double gscale = max_abs(std::span(G, n3));

        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t a = 0; a < n3; ++a) {
                double s = 0.0;
                for (std::size_t p = 0; p < n; ++p)
                    s += R[p * n + m] * dG[p * n3 + a];
                rg[m * n3 + a] = s;
            }
        double rscale = max_abs(rg);

        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t m = 0; m < n; ++m) {
                    double r = c(i, k, m) - (g(i, k, m) - g(i, m, k));
                    out.symmetry = std::max(out.symmetry, std::abs(r) / (1.0 + gscale));
                }

        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t m = 0; m < n; ++m) {
                        double lhs = rg[m * n3 + idx3(n, j, k, i)] - rg[k * n3 + idx3(n, j, m, i)];
                        double rhs = 0.0;
                        for (std::size_t s = 0; s < n; ++s)
                            rhs += g(j, k, s) * g(s, m, i) - g(j, m, s) * g(s, k, i) - c(s, k, m) * g(j, s, i);
                        double scale = 1.0 + rscale + gscale * gscale;
                        out.flatness = std::max(out.flatness, std::abs(lhs - rhs) / scale);
                    }
    }
    out.passed = out.symmetry < tol.identity_tol && out.flatness < tol.identity_tol;
    return out;
}

Pullback pullback_Z(const Frame& frame, const Connection& conn, const RiemannChart& chart,
                    const Tolerances& tol)
{
    std::size_t n = frame.n();
    if (chart.rho.size() != n || chart.rho_inv.size() != n || chart.wvars.size() != n)
        throw ChartError("chart dimension does not match the frame");
    Pullback out;

    // Normalisation: grad w^i . R_j = delta^i_j on the u side.
    {
        std::vector<Expr> batch;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                Expr s(0.0);
                for (std::size_t p = 0; p < n; ++p)
                    s = add(s, mul(differentiate(chart.rho[i], frame.vars[p]), frame.R[p][j]));
                batch.push_back(s);
            }
        for (const auto& v : sample_values(batch, frame.vars, sample_points(frame.domain, tol.samples, tol.seed)))
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    out.normalization = std::max(out.normalization, std::abs(v[i * n + j] - (i == j ? 1.0 : 0.0)));
        if (out.normalization > tol.chart_tol)
            throw ChartError("chart normalisation violated (max deviation " + std::to_string(out.normalization) +
                             "); the frame is not scaled to the chart");
    }

    auto wpts = sample_points(chart.wbox, tol.samples, tol.seed);
    Evaluator inv(chart.rho_inv, chart.wvars);
    Evaluator fwd(chart.rho, frame.vars);
    std::vector<std::vector<double>> upts;
    for (const auto& w : wpts) {
        auto u = inv(w);
        auto back = fwd(u);
        for (std::size_t i = 0; i < n; ++i)
            out.roundtrip = std::max(out.roundtrip, std::abs(back[i] - w[i]) / (1.0 + std::abs(w[i])));
        upts.push_back(std::move(u));
    }
    if (out.roundtrip > tol.chart_tol)
        throw ChartError("rho(rho_inv(w)) differs from w");

    std::map<std::string, Expr> to_w;
    for (std::size_t p = 0; p < n; ++p)
        to_w[frame.vars[p]] = chart.rho_inv[p];
    out.S.assign(n, std::vector<Expr>(n));
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j)
            out.S[m][j] = substitute(frame.R[m][j], to_w);
    ExprMatrix Sinv = adjugate_inverse(out.S);

    out.Z.assign(n * n * n, Expr(0.0));
    for (std::size_t i = 0; i < n; ++i) {
        Differentiator d(chart.wvars[i]);
        ExprMatrix dS(n, std::vector<Expr>(n));
        for (std::size_t m = 0; m < n; ++m)
            for (std::size_t j = 0; j < n; ++j)
                dS[m][j] = d(out.S[m][j]);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) {
                Expr s(0.0);
                for (std::size_t m = 0; m < n; ++m)
                    s = add(s, mul(Sinv[k][m], dS[m][j]));
                out.Z[idx3(n, k, i, j)] = s;
            }
    }

    // Cross-check against the Christoffel symbols composed with rho_inv.
    {
        auto zv = sample_values(out.Z, chart.wvars, wpts);
        auto gv = sample_values(conn.gamma, frame.vars, upts);
        for (std::size_t s = 0; s < wpts.size(); ++s) {
            double scale = max_abs(gv[s]);
            for (std::size_t a = 0; a < zv[s].size(); ++a)
                out.cross_check = std::max(out.cross_check, std::abs(zv[s][a] - gv[s][a]) / (1.0 + scale));
        }
        if (out.cross_check > tol.identity_tol)
            throw ChartError("pulled back coefficients disagree with the Christoffel symbols");
    }

    // Pin variables an entry does not depend on.
    for (std::size_t a = 0; a < out.Z.size(); ++a) {
        if (out.Z[a].is_const())
            continue;
        auto fv = free_variables(out.Z[a]);
        std::map<std::string, Expr> pin;
        for (std::size_t q = 0; q < n; ++q) {
            if (std::find(fv.begin(), fv.end(), chart.wvars[q]) == fv.end())
                continue;
            std::vector<Expr> probe{out.Z[a], differentiate(out.Z[a], chart.wvars[q])};
            bool independent = true;
            for (const auto& v : sample_values(probe, chart.wvars, wpts))
                if (!near_zero(v[1], std::abs(v[0]), tol.zero_tol))
                    independent = false;
            if (independent) {
                pin[chart.wvars[q]] = Expr(chart.wbase[q]);
                out.pinned.emplace_back(a, q);
            }
        }
        if (!pin.empty())
            out.Z[a] = substitute(out.Z[a], pin);
    }
    return out;
}

Frame relabel(const Frame& frame, const std::vector<std::size_t>& perm)
{
    Frame out = frame;
    for (std::size_t m = 0; m < frame.n(); ++m)
        for (std::size_t a = 0; a < frame.n(); ++a)
            out.R[m][a] = frame.R[m][perm[a]];
    return out;
}

}  // namespace eigenframe::geometry
