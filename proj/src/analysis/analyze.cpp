#include "eigenframe/analysis.hpp"

namespace eigenframe::analysis {

namespace {

std::string plural(std::size_t k, const char* what)
{
    return std::to_string(k) + " " + what + (k == 1 ? "" : "s");
}

std::string equal_chain(const std::vector<std::size_t>& idx)
{
    std::string s;
    for (std::size_t a : idx)
        s += (s.empty() ? "λ" : "=λ") + std::to_string(a + 1);
    return s;
}

}  // namespace

Analysis analyze(const geometry::Frame& frame, const std::optional<geometry::RiemannChart>& chart,
                 const Tolerances& tol)
{
    Analysis A;
    A.conn = geometry::connection(frame, tol);
    A.identities = geometry::check_flat_symmetric(A.conn, frame.domain, tol);
    if (!A.identities.passed)
        throw IdentityError("symmetry/flatness identities fail (residuals " + std::to_string(A.identities.symmetry) +
                            ", " + std::to_string(A.identities.flatness) + ")");
    A.system = build_lambda_system(A.conn, frame.domain);
    A.rank = classify_rank(A.system, tol);
    A.report = classify_case(A.conn, A.system, A.rank, frame.domain, tol);
    CaseReport& rep = A.report;
    std::size_t n = frame.n();

    switch (rep.label) {
    case CaseLabel::N3_IIa: {
        auto perm = find_iia_relabeling(A.conn, frame.domain, tol);
        if (perm.empty())
            throw ReductionError("no index relabeling makes the relation proportional to (c1)");
        rep.perm = perm;
        auto rel = relabel(A.conn, perm);
        auto red = reduce_IIa(rel, frame.domain, perm);
        auto fc = check_frobenius_compat(rel, red, frame.domain, tol);
        rep.compat = fc.result;
        if (fc.result.holds) {
            rep.family = "2 constants";
            A.reduced = red.system;
        } else {
            rep.trivial = true;
            rep.family = "trivial only";
        }
        A.iia = std::move(red);
        break;
    }
    case CaseLabel::N3_IIb: {
        auto perm = find_iib_relabeling(A.conn, frame.domain, tol);
        rep.perm = perm;
        auto rel = relabel(A.conn, perm);
        auto red = reduce_IIb(rel, frame.domain, perm, tol);
        rep.forced.push_back(equal_chain({perm[1], perm[2]}));
        if (red.trivial) {
            rep.trivial = true;
            rep.family = "trivial only";
            rep.notes.push_back("Gamma^3_31 differs from Gamma^2_21 (max gap " + std::to_string(red.gamma_mismatch) + ")");
        } else {
            rep.compat = check_reduced_compat(red.system, tol);
            rep.family = "1 function of 1 variable + 1 constant";
            A.reduced = red.system;
        }
        break;
    }
    case CaseLabel::RichRank0:
    case CaseLabel::RichConstrained: {
        if (!chart) {
            if (rep.label == CaseLabel::RichConstrained) {
                rep.family = "undetermined without a Riemann-invariant chart";
                rep.notes.push_back("supply a [chart] section to reduce this system");
            }
            break;
        }
        A.pullback = geometry::pullback_Z(frame, A.conn, *chart, tol);
        auto red = reduce_rich(n, A.pullback->Z, *chart, tol);
        rep.compat = check_darboux_compat(red, tol);
        for (const auto& s : red.sets) {
            std::vector<std::size_t> one;
            for (std::size_t a : s)
                one.push_back(a + 1);
            rep.index_sets.push_back(one);
            rep.forced.push_back(equal_chain(s));
        }
        if (red.trivial) {
            rep.trivial = true;
            rep.family = "trivial only";
        } else if (red.sets.empty()) {
            rep.family = plural(n, "function") + " of 1 variable";
        } else {
            rep.family = plural(red.simple.size(), "function") + " of 1 variable + " +
                         plural(red.sets.size(), "constant");
        }
        if (!rep.compat->holds)
            rep.notes.push_back("Darboux compatibility fails");
        A.reduced = red.system;
        break;
    }
    default: break;
    }
    return A;
}

}  // namespace eigenframe::analysis
