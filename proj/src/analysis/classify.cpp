#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "eigenframe/analysis.hpp"

namespace eigenframe::analysis {

using namespace expr;
using geometry::Connection;
using geometry::idx3;

std::string to_string(CaseLabel label)
{
    switch (label) {
    case CaseLabel::RichRank0: return "Rich-Rank0";
    case CaseLabel::RichConstrained: return "Rich-Constrained";
    case CaseLabel::N3_I: return "N3-I";
    case CaseLabel::N3_IIa: return "N3-IIa";
    case CaseLabel::N3_IIb: return "N3-IIb";
    case CaseLabel::N3_III: return "N3-III";
    case CaseLabel::MaxRankTrivial: return "MaxRank-Trivial";
    case CaseLabel::UnclassifiedN4: return "Unclassified-n≥4";
    }
    return "?";
}

namespace {

double max_abs(const std::vector<double>& v, std::size_t from = 0, std::size_t to = SIZE_MAX)
{
    double m = 0.0;
    for (std::size_t i = from; i < std::min(to, v.size()); ++i)
        m = std::max(m, std::abs(v[i]));
    return m;
}

}  // namespace

LambdaSystem build_lambda_system(std::size_t n, const std::vector<std::string>& vars,
                                 const std::vector<Expr>& gamma, const Box& domain)
{
    LambdaSystem sys;
    sys.n = n;
    sys.vars = vars;
    sys.domain = domain;
    sys.gamma = gamma;
    auto G = [&](std::size_t k, std::size_t i, std::size_t j) { return gamma[idx3(n, k, i, j)]; };
    sys.pde.assign(n * n, Expr(0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j)
                sys.pde[i * n + j] = G(j, j, i);

    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (a == k || b == k)
                    continue;
                // a pair containing index 0 puts it second
                std::size_t i = a == 0 ? b : a;
                std::size_t j = a == 0 ? a : b;
                std::vector<Expr> row(n - 1, Expr(0.0));
                auto put = [&](std::size_t m, const Expr& e) {
                    if (m > 0)
                        row[m - 1] = e;
                };
                put(i, G(k, j, i));
                put(j, neg(G(k, i, j)));
                put(k, sub(G(k, i, j), G(k, j, i)));
                sys.N.push_back(std::move(row));
                sys.rows.push_back({k, i, j});
            }
    return sys;
}

LambdaSystem build_lambda_system(const Connection& conn, const Box& domain)
{
    return build_lambda_system(conn.n, conn.vars, conn.gamma, domain);
}

RankResult classify_rank(const LambdaSystem& sys, const Tolerances& tol)
{
    RankResult out;
    std::size_t rows = sys.N.size(), cols = sys.n > 0 ? sys.n - 1 : 0;
    if (rows == 0 || cols == 0) {
        out.per_sample.assign(tol.samples, 0);
        return out;
    }
    std::vector<Expr> batch;
    for (const auto& r : sys.N)
        batch.insert(batch.end(), r.begin(), r.end());
    batch.insert(batch.end(), sys.gamma.begin(), sys.gamma.end());
    Evaluator ev(batch, sys.vars);
    auto pts = sample_points(sys.domain, tol.samples, tol.seed);
    for (const auto& x : pts) {
        auto v = ev(x);
        double scale = max_abs(v, rows * cols);
        Eigen::MatrixXd M(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                M(r, c) = v[r * cols + c];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
        const auto& s = svd.singularValues();
        double cut = std::max(tol.rank_tol * (s.size() ? s(0) : 0.0), tol.zero_tol * (1.0 + scale));
        int r = 0;
        for (int i = 0; i < s.size(); ++i)
            if (s(i) > cut)
                ++r;
        out.per_sample.push_back(r);
    }
    out.rank = out.per_sample.front();
    for (std::size_t s = 0; s < out.per_sample.size(); ++s)
        if (out.per_sample[s] != out.rank) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "rank of N is not constant: %d at sample 0, %d at sample %zu",
                          out.rank, out.per_sample[s], s);
            std::string msg = buf;
            msg += " (u =";
            for (double c : pts[s]) {
                std::snprintf(buf, sizeof buf, " %.6g", c);
                msg += buf;
            }
            throw RankError(msg + ")");
        }
    return out;
}

bool is_rich(const Connection& conn, const Box& domain, const Tolerances& tol)
{
    std::size_t n = conn.n;
    std::vector<Expr> batch;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (k != i && k != j)
                    batch.push_back(conn.C(k, i, j));
    if (batch.empty())
        return true;
    std::size_t m = batch.size();
    batch.insert(batch.end(), conn.gamma.begin(), conn.gamma.end());
    for (const auto& v : geometry::sample_values(batch, conn.vars, sample_points(domain, tol.samples, tol.seed))) {
        double scale = max_abs(v, m);
        for (std::size_t a = 0; a < m; ++a)
            if (!near_zero(v[a], scale, tol.zero_tol))
                return false;
    }
    return true;
}

std::string format_relation(const std::vector<double>& alpha)
{
    auto coef_text = [](double c) {
        char buf[32];
        double r = std::round(c);
        if (std::abs(c - r) < 1e-9)
            std::snprintf(buf, sizeof buf, "%.0f", r);
        else
            std::snprintf(buf, sizeof buf, "%.6g", c);
        return std::string(buf);
    };
    auto side = [&](bool positive) {
        std::string s;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            double a = positive ? alpha[i] : -alpha[i];
            if (a <= 1e-9)
                continue;
            if (!s.empty())
                s += "+";
            if (std::abs(a - 1.0) > 1e-9)
                s += coef_text(a);
            s += "λ" + std::to_string(i + 1);
        }
        return s.empty() ? std::string("0") : s;
    };
    return side(true) + "=" + side(false);
}

Relation rank_one_relation(const Connection& conn, const Box& domain, const Tolerances& tol)
{
    if (conn.n != 3)
        throw ReductionError("the rank-one relation is defined for n = 3");
    auto G = [&](int k, int i, int j) { return conn.Gamma(k - 1, i - 1, j - 1); };
    auto C = [&](int k, int i, int j) { return conn.C(k - 1, i - 1, j - 1); };
    std::array<std::vector<Expr>, 3> rows{
        std::vector<Expr>{C(1, 3, 2), neg(G(1, 3, 2)), G(1, 2, 3)},
        std::vector<Expr>{neg(G(2, 3, 1)), C(2, 3, 1), G(2, 1, 3)},
        std::vector<Expr>{neg(G(3, 2, 1)), G(3, 1, 2), C(3, 2, 1)},
    };
    std::vector<Expr> batch;
    for (const auto& r : rows)
        batch.insert(batch.end(), r.begin(), r.end());
    batch.insert(batch.end(), conn.gamma.begin(), conn.gamma.end());
    auto vals = geometry::sample_values(batch, conn.vars, sample_points(domain, tol.samples, tol.seed));

    // Pick the row that is nonzero at every sample, preferring the largest.
    int best = -1;
    double best_norm = -1.0;
    for (int r = 0; r < 3; ++r) {
        bool ok = true;
        double norm0 = 0.0;
        for (std::size_t s = 0; s < vals.size(); ++s) {
            double scale = max_abs(vals[s], 9);
            double norm = max_abs(vals[s], 3 * r, 3 * r + 3);
            if (near_zero(norm, scale, tol.zero_tol))
                ok = false;
            if (s == 0)
                norm0 = norm;
        }
        if (ok && norm0 > best_norm) {
            best = r;
            best_norm = norm0;
        }
    }
    if (best < 0)
        throw ReductionError("no row of the rank-one relation is nonzero throughout the domain");

    Relation rel;
    rel.alpha = rows[best];
    rel.zero.assign(3, true);
    rel.constant = true;
    std::vector<double> first;
    for (std::size_t s = 0; s < vals.size(); ++s) {
        double scale = max_abs(vals[s], 9);
        std::vector<double> a(vals[s].begin() + 3 * best, vals[s].begin() + 3 * best + 3);
        for (int i = 0; i < 3; ++i)
            if (!near_zero(a[i], scale, tol.zero_tol))
                rel.zero[i] = false;
        double pivot = 0.0;
        for (double x : a)
            if (std::abs(x) > tol.zero_tol * (1.0 + scale)) {
                pivot = x;
                break;
            }
        for (double& x : a)
            x = near_zero(x, scale, tol.zero_tol) ? 0.0 : x / pivot;
        if (s == 0)
            first = a;
        else
            for (int i = 0; i < 3; ++i)
                if (std::abs(a[i] - first[i]) > 1e-7 * (1.0 + std::abs(first[i])))
                    rel.constant = false;
    }
    rel.normalized = first;
    if (rel.constant) {
        rel.text = format_relation(first);
    } else {
        rel.text = "(" + to_string(simplify(rel.alpha[0])) + ")λ1 + (" + to_string(simplify(rel.alpha[1])) +
                   ")λ2 + (" + to_string(simplify(rel.alpha[2])) + ")λ3 = 0";
    }
    return rel;
}

Connection relabel(const Connection& conn, const std::vector<std::size_t>& perm)
{
    std::size_t n = conn.n;
    Connection out = conn;
    for (std::size_t m = 0; m < n; ++m)
        for (std::size_t a = 0; a < n; ++a) {
            out.R[m][a] = conn.R[m][perm[a]];
            out.L[a][m] = conn.L[perm[a]][m];
        }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                out.gamma[idx3(n, k, i, j)] = conn.gamma[idx3(n, perm[k], perm[i], perm[j])];
                out.c[idx3(n, k, i, j)] = conn.c[idx3(n, perm[k], perm[i], perm[j])];
            }
    return out;
}

namespace {

template <class Pred>
std::vector<std::size_t> first_permutation(std::size_t n, Pred pred)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        if (pred(perm))
            return perm;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {};
}

bool all_nonzero(const Connection& conn, const std::vector<Expr>& es, const Box& domain, const Tolerances& tol)
{
    std::vector<Expr> batch = es;
    batch.insert(batch.end(), conn.gamma.begin(), conn.gamma.end());
    for (const auto& v : geometry::sample_values(batch, conn.vars, sample_points(domain, tol.samples, tol.seed))) {
        double scale = max_abs(v, es.size());
        for (std::size_t a = 0; a < es.size(); ++a)
            if (near_zero(v[a], scale, tol.zero_tol))
                return false;
    }
    return true;
}

}  // namespace

std::vector<std::size_t> find_iia_relabeling(const Connection& conn, const Box& domain, const Tolerances& tol)
{
    return first_permutation(conn.n, [&](const std::vector<std::size_t>& p) {
        Connection r = relabel(conn, p);
        return all_nonzero(r, {r.C(0, 2, 1), r.Gamma(0, 2, 1), r.Gamma(0, 1, 2)}, domain, tol);
    });
}

std::vector<std::size_t> find_iib_relabeling(const Connection& conn, const Box& domain, const Tolerances& tol)
{
    Relation rel = rank_one_relation(conn, domain, tol);
    return first_permutation(conn.n, [&](const std::vector<std::size_t>& p) { return rel.zero[p[0]]; });
}

CaseReport classify_case(const Connection& conn, const LambdaSystem& sys, const RankResult& rank,
                         const Box& domain, const Tolerances& tol)
{
    CaseReport rep;
    rep.n = conn.n;
    rep.rank = rank.rank;
    rep.rich = is_rich(conn, domain, tol);
    rep.perm.resize(conn.n);
    std::iota(rep.perm.begin(), rep.perm.end(), 0);
    (void)sys;
    std::size_t n = conn.n;

    if (rep.rich) {
        rep.label = rank.rank == 0 ? CaseLabel::RichRank0 : CaseLabel::RichConstrained;
        if (rep.label == CaseLabel::RichRank0)
            rep.family = std::to_string(n) + (n == 1 ? " function" : " functions") + " of 1 variable";
        return rep;
    }
    if (rank.rank == static_cast<int>(n) - 1) {
        rep.label = CaseLabel::MaxRankTrivial;
        rep.trivial = true;
        rep.family = "trivial only";
        return rep;
    }
    if (n >= 4) {
        rep.label = CaseLabel::UnclassifiedN4;
        rep.family = "undetermined";
        return rep;
    }
    // n == 3, rank 1, not rich
    Relation rel = rank_one_relation(conn, domain, tol);
    int zeros = static_cast<int>(std::count(rel.zero.begin(), rel.zero.end(), true));
    if (zeros == 0)
        rep.label = CaseLabel::N3_IIa;
    else if (zeros == 1)
        rep.label = CaseLabel::N3_IIb;
    else
        throw ReductionError("rank-one relation with more than one vanishing coefficient");
    rep.relation = std::move(rel);
    return rep;
}

}  // namespace eigenframe::analysis
