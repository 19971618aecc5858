#include <algorithm>
#include <cmath>
#include <numeric>

#include "eigenframe/analysis.hpp"

namespace eigenframe::analysis {

using namespace expr;
using geometry::Connection;
using geometry::idx3;

namespace {

double max_abs(const std::vector<double>& v, std::size_t from = 0, std::size_t to = SIZE_MAX)
{
    double m = 0.0;
    for (std::size_t i = from; i < std::min(to, v.size()); ++i)
        m = std::max(m, std::abs(v[i]));
    return m;
}

ReducedSystem frame_system(const Connection& conn, const Box& domain, const std::vector<std::size_t>& perm)
{
    ReducedSystem sys;
    sys.kind = DirectionKind::Frame;
    sys.n = conn.n;
    sys.vars = conn.vars;
    sys.R = conn.R;
    sys.L = conn.L;
    sys.c = conn.c;
    sys.domain = domain;
    sys.perm = perm;
    return sys;
}

Term term(const Expr& coeff, std::size_t partner) { return Term{true, coeff, partner}; }
Term zero_term(std::size_t self) { return Term{true, Expr(0.0), self}; }

}  // namespace

IIaReduction reduce_IIa(const Connection& conn, const Box& domain, const std::vector<std::size_t>& perm)
{
    if (conn.n != 3)
        throw ReductionError("the IIa reduction is defined for n = 3");
    auto G = [&](int k, int i, int j) { return conn.Gamma(k - 1, i - 1, j - 1); };
    geometry::FrameDerivative r(conn.vars, conn.R);
    Expr c = conn.C(0, 2, 1);
    Expr g132 = G(1, 3, 2), g123 = G(1, 2, 3);

    IIaReduction red;
    auto& p2 = red.phi[0];
    auto& p3 = red.phi[1];
    p2[0] = div(mul(G(2, 2, 1), g123), c);
    p3[0] = div(mul(G(3, 3, 1), g132), c);
    p2[1] = sub(mul(div(g123, g132), sub(G(3, 3, 2), G(1, 1, 2))), mul(div(c, g132), r(1, div(g132, c))));
    p3[1] = G(3, 3, 2);
    p3[2] = add(mul(div(g132, g123), sub(G(1, 1, 3), G(2, 2, 3))), mul(div(c, g123), r(2, div(g123, c))));
    p2[2] = neg(G(2, 2, 3));
    red.A = div(g132, c);
    red.B = div(g123, c);

    ReducedSystem sys = frame_system(conn, domain, perm);
    sys.unknowns = {"lambda2", "lambda3"};
    sys.eq.assign(2, std::vector<Term>(3));
    for (std::size_t i = 0; i < 3; ++i) {
        sys.eq[0][i] = term(neg(p2[i]), 1);
        sys.eq[1][i] = term(p3[i], 0);
    }
    sys.lambda_of = {{{0, red.A}, {1, neg(red.B)}}, {{0, Expr(1.0)}}, {{1, Expr(1.0)}}};
    red.system = std::move(sys);
    return red;
}

FrobeniusCompat check_frobenius_compat(const Connection& conn, const IIaReduction& red, const Box& domain,
                                       const Tolerances& tol)
{
    geometry::FrameDerivative r(conn.vars, conn.R);
    const auto& phi = red.phi;
    std::vector<Expr> batch;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j)
            for (std::size_t s = 0; s < 2; ++s) {
                Expr lhs = sub(r(i, phi[s][j]), r(j, phi[s][i]));
                Expr rhs = sub(mul(phi[0][j], phi[1][i]), mul(phi[0][i], phi[1][j]));
                for (std::size_t k = 0; k < 3; ++k)
                    rhs = add(rhs, mul(conn.C(k, i, j), phi[s][k]));
                batch.push_back(sub(lhs, rhs));
            }
    FrobeniusCompat out;
    out.residuals.assign(batch.size(), 0.0);
    for (const auto& v : geometry::sample_values(batch, conn.vars, sample_points(domain, tol.samples, tol.seed)))
        for (std::size_t a = 0; a < v.size(); ++a)
            out.residuals[a] = std::max(out.residuals[a], std::abs(v[a]));
    out.result.residual = max_abs(out.residuals);
    out.result.holds = out.result.residual < tol.compat_tol;
    return out;
}

IIbReduction reduce_IIb(const Connection& conn, const Box& domain, const std::vector<std::size_t>& perm,
                        const Tolerances& tol)
{
    if (conn.n != 3)
        throw ReductionError("the IIb reduction is defined for n = 3");
    auto G = [&](int k, int i, int j) { return conn.Gamma(k - 1, i - 1, j - 1); };
    std::vector<Expr> batch{conn.C(0, 2, 1), G(2, 3, 1), G(3, 2, 1), sub(G(3, 3, 1), G(2, 2, 1))};
    batch.insert(batch.end(), conn.gamma.begin(), conn.gamma.end());
    IIbReduction red;
    for (const auto& v : geometry::sample_values(batch, conn.vars, sample_points(domain, tol.samples, tol.seed))) {
        double scale = max_abs(v, 4);
        for (int a = 0; a < 3; ++a)
            if (!near_zero(v[a], scale, tol.zero_tol))
                throw ReductionError("relabeled frame violates the IIb conditions c^1_32 = Gamma^2_31 = Gamma^3_21 = 0");
        red.gamma_mismatch = std::max(red.gamma_mismatch, std::abs(v[3]));
        if (!near_zero(v[3], scale, tol.zero_tol))
            red.trivial = true;
    }
    ReducedSystem sys = frame_system(conn, domain, perm);
    sys.unknowns = {"lambda1", "lambda2"};
    sys.eq = {{Term{}, term(G(1, 1, 2), 1), term(G(1, 1, 3), 1)},
              {term(G(3, 3, 1), 0), zero_term(1), zero_term(1)}};
    sys.lambda_of = {{{0, Expr(1.0)}}, {{1, Expr(1.0)}}, {{1, Expr(1.0)}}};
    red.system = std::move(sys);
    return red;
}

RichReduction reduce_rich(std::size_t n, const std::vector<Expr>& Z, const geometry::RiemannChart& chart,
                          const Tolerances& tol)
{
    auto wpts = sample_points(chart.wbox, tol.samples, tol.seed);
    auto vals = geometry::sample_values(Z, chart.wvars, wpts);
    auto zval = [&](std::size_t s, std::size_t k, std::size_t i, std::size_t j) { return vals[s][idx3(n, k, i, j)]; };
    auto nonzero_somewhere = [&](std::size_t k, std::size_t i, std::size_t j) {
        for (std::size_t s = 0; s < vals.size(); ++s)
            if (!near_zero(zval(s, k, i, j), max_abs(vals[s]), tol.zero_tol))
                return true;
        return false;
    };

    // Classes of indices whose kappa are forced equal.
    std::vector<std::size_t> cls(n);
    std::iota(cls.begin(), cls.end(), 0);
    auto find = [&](std::size_t a) {
        while (cls[a] != a)
            a = cls[a];
        return a;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b)
            cls[std::max(a, b)] = std::min(a, b);
    };
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && k != i && k != j && nonzero_somewhere(k, i, j))
                    unite(i, j);

    auto members = [&](std::size_t root) {
        std::vector<std::size_t> m;
        for (std::size_t a = 0; a < n; ++a)
            if (find(a) == root)
                m.push_back(a);
        return m;
    };
    // Z^k_ki agree over k in the set, at every sample.
    auto uniform = [&](const std::vector<std::size_t>& set, std::size_t i) {
        for (std::size_t s = 0; s < vals.size(); ++s)
            for (std::size_t k : set) {
                double a = zval(s, set[0], set[0], i), b = zval(s, k, k, i);
                if (!near_zero(a - b, std::max(std::abs(a), std::abs(b)), tol.zero_tol))
                    return false;
            }
        return true;
    };

    for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t root = 0; root < n && !changed; ++root) {
            if (find(root) != root)
                continue;
            auto set = members(root);
            if (set.size() < 2)
                continue;
            for (std::size_t i = 0; i < n && !changed; ++i) {
                if (find(i) == root)
                    continue;
                if (!uniform(set, i)) {
                    unite(root, i);
                    changed = true;
                }
            }
        }
    }

    RichReduction red;
    std::vector<int> unknown_of(n, -1);
    for (std::size_t a = 0; a < n; ++a) {
        if (find(a) != a)
            continue;
        auto set = members(a);
        if (set.size() >= 2)
            red.sets.push_back(set);
    }
    for (std::size_t a = 0; a < n; ++a) {
        auto set = members(find(a));
        if (set.size() == 1)
            red.simple.push_back(a);
    }

    ReducedSystem sys;
    sys.kind = DirectionKind::Coordinate;
    sys.n = n;
    sys.vars = chart.wvars;
    sys.domain = chart.wbox;
    sys.perm.resize(n);
    std::iota(sys.perm.begin(), sys.perm.end(), 0);
    for (std::size_t j : red.simple) {
        unknown_of[j] = static_cast<int>(sys.unknowns.size());
        sys.unknowns.push_back("kappa" + std::to_string(j + 1));
    }
    for (std::size_t a = 0; a < red.sets.size(); ++a) {
        for (std::size_t j : red.sets[a])
            unknown_of[j] = static_cast<int>(sys.unknowns.size());
        sys.unknowns.push_back("h" + std::to_string(a + 1));
    }
    auto Zx = [&](std::size_t k, std::size_t i, std::size_t j) { return Z[idx3(n, k, i, j)]; };
    sys.eq.assign(sys.unknowns.size(), std::vector<Term>(n));
    for (std::size_t j : red.simple) {
        auto u = static_cast<std::size_t>(unknown_of[j]);
        for (std::size_t i = 0; i < n; ++i)
            if (i != j)
                sys.eq[u][i] = term(Zx(j, j, i), static_cast<std::size_t>(unknown_of[i]));
    }
    for (const auto& set : red.sets) {
        auto u = static_cast<std::size_t>(unknown_of[set[0]]);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(set.begin(), set.end(), i) != set.end())
                sys.eq[u][i] = zero_term(u);
            else
                sys.eq[u][i] = term(Zx(set[0], set[0], i), static_cast<std::size_t>(unknown_of[i]));
        }
    }
    sys.lambda_of.resize(n);
    for (std::size_t j = 0; j < n; ++j)
        sys.lambda_of[j] = {{static_cast<std::size_t>(unknown_of[j]), Expr(1.0)}};

    // Assumptions: coefficients uniform within each set, and Z^k_ij = 0 for
    // distinct indices in different classes.
    for (std::size_t s = 0; s < vals.size(); ++s) {
        double scale = 1.0 + max_abs(vals[s]);
        for (const auto& set : red.sets)
            for (std::size_t i = 0; i < n; ++i)
                if (std::find(set.begin(), set.end(), i) == set.end())
                    for (std::size_t k : set)
                        red.assumption_residual = std::max(
                            red.assumption_residual, std::abs(zval(s, k, k, i) - zval(s, set[0], set[0], i)) / scale);
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (i != j && k != i && k != j && find(i) != find(j))
                        red.assumption_residual =
                            std::max(red.assumption_residual, std::abs(zval(s, k, i, j)) / scale);
    }
    if (red.assumption_residual > tol.identity_tol)
        throw ReductionError("merged index sets do not satisfy the rich reduction assumptions");

    red.trivial = red.sets.size() == 1 && red.sets[0].size() == n;
    sys.index_sets = red.sets;
    red.system = std::move(sys);
    return red;
}

}  // namespace eigenframe::analysis
