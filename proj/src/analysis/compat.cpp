#include <algorithm>
#include <optional>
#include <cmath>

#include "eigenframe/analysis.hpp"

namespace eigenframe::analysis {

using namespace expr;
using geometry::idx3;

CompatResult check_reduced_compat(const ReducedSystem& sys, const Tolerances& tol)
{
    std::size_t n = sys.n, U = sys.unknowns.size();
    bool frame = sys.kind == DirectionKind::Frame;

    // Batch: coefficients, then D_m of each coefficient, then c^l_mk.
    std::vector<Expr> batch;
    auto coef_at = [&](std::size_t u, std::size_t d) { return u * n + d; };
    auto dcoef_at = [&](std::size_t u, std::size_t d, std::size_t m) { return U * n + (u * n + d) * n + m; };
    std::size_t c_at = U * n + U * n * n;
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t d = 0; d < n; ++d)
            batch.push_back(sys.eq[u][d].prescribed ? sys.eq[u][d].coeff : Expr(0.0));
    std::optional<geometry::FrameDerivative> rd;
    std::vector<Differentiator> cd;
    if (frame)
        rd.emplace(sys.vars, sys.R);
    else
        for (const auto& v : sys.vars)
            cd.emplace_back(v);
    for (std::size_t u = 0; u < U; ++u)
        for (std::size_t d = 0; d < n; ++d)
            for (std::size_t m = 0; m < n; ++m) {
                const Expr& a = batch[coef_at(u, d)];
                batch.push_back(frame ? (*rd)(m, a) : cd[m](a));
            }
    if (frame)
        batch.insert(batch.end(), sys.c.begin(), sys.c.end());

    CompatResult out;
    std::vector<double> form(U + U * n);
    for (const auto& v : geometry::sample_values(batch, sys.vars, sample_points(sys.domain, tol.samples, tol.seed))) {
        auto add_D = [&](std::size_t u, std::size_t d, double factor) {
            const Term& t = sys.eq[u][d];
            if (t.prescribed) {
                double a = v[coef_at(u, d)];
                form[t.partner] += factor * a;
                form[u] -= factor * a;
            } else {
                form[U + u * n + d] += factor;
            }
        };
        for (std::size_t w = 0; w < U; ++w)
            for (std::size_t k = 0; k < n; ++k)
                for (std::size_t m = k + 1; m < n; ++m) {
                    const Term& tk = sys.eq[w][k];
                    const Term& tm = sys.eq[w][m];
                    if (!tk.prescribed || !tm.prescribed)
                        continue;
                    std::fill(form.begin(), form.end(), 0.0);
                    double ak = v[coef_at(w, k)], am = v[coef_at(w, m)];
                    double dm_ak = v[dcoef_at(w, k, m)], dk_am = v[dcoef_at(w, m, k)];
                    // D_m (a_k (P - w))
                    form[tk.partner] += dm_ak;
                    form[w] -= dm_ak;
                    add_D(tk.partner, m, ak);
                    add_D(w, m, -ak);
                    // - D_k (a_m (Q - w))
                    form[tm.partner] -= dk_am;
                    form[w] += dk_am;
                    add_D(tm.partner, k, -am);
                    add_D(w, k, am);
                    // - [D_m, D_k] w
                    if (frame)
                        for (std::size_t l = 0; l < n; ++l)
                            add_D(w, l, -v[c_at + idx3(n, l, m, k)]);
                    for (double f : form)
                        out.residual = std::max(out.residual, std::abs(f));
                }
    }
    out.holds = out.residual < tol.compat_tol;
    return out;
}

CompatResult check_darboux_compat(const RichReduction& red, const Tolerances& tol)
{
    return check_reduced_compat(red.system, tol);
}

}  // namespace eigenframe::analysis
