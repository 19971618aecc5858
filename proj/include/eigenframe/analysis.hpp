#pragma once

#include <array>
#include <optional>

#include "eigenframe/geometry.hpp"

namespace eigenframe::analysis {

enum class CaseLabel {
    RichRank0,
    RichConstrained,
    N3_I,
    N3_IIa,
    N3_IIb,
    N3_III,
    MaxRankTrivial,
    UnclassifiedN4,
};

std::string to_string(CaseLabel label);

class RankError : public Error {
public:
    using Error::Error;
};

class ReductionError : public Error {
public:
    using Error::Error;
};

// r_i(lambda^j) = pde(i,j) (lambda^i - lambda^j) for i != j, together with the
// algebraic rows N x = 0 in x^k = lambda^k - lambda^1, k = 2..n.
struct LambdaSystem {
    std::size_t n = 0;
    std::vector<std::string> vars;
    Box domain;
    std::vector<Expr> gamma;              // coefficients the system was built from
    std::vector<Expr> pde;                // pde[i*n + j] = Gamma^j_ji
    std::vector<std::vector<Expr>> N;     // rows of length n - 1
    std::vector<std::array<std::size_t, 3>> rows;  // (k, i, j) of each row

    const Expr& coeff(std::size_t i, std::size_t j) const { return pde[i * n + j]; }
};

LambdaSystem build_lambda_system(std::size_t n, const std::vector<std::string>& vars,
                                 const std::vector<Expr>& gamma, const Box& domain);
LambdaSystem build_lambda_system(const geometry::Connection& conn, const Box& domain);

struct RankResult {
    int rank = 0;
    std::vector<int> per_sample;
};

// Throws RankError when the rank differs between samples.
RankResult classify_rank(const LambdaSystem& sys, const Tolerances& tol);

// Linear relation alpha . lambda = 0 forced by a rank-one N (n = 3).
struct Relation {
    std::vector<Expr> alpha;
    std::vector<double> normalized;  // at the first sample, first nonzero entry = 1
    bool constant = false;
    std::vector<bool> zero;          // entries vanishing at every sample
    std::string text;
};

struct Term {
    bool prescribed = false;
    Expr coeff;              // D(u) = coeff (partner - u)
    std::size_t partner = 0;
};

enum class DirectionKind { Frame, Coordinate };

// Reduced first-order system for the free unknowns, in relabeled indices.
struct ReducedSystem {
    DirectionKind kind = DirectionKind::Frame;
    std::size_t n = 0;
    std::vector<std::string> vars;
    ExprMatrix R;                 // frame giving the directions (Frame kind)
    ExprMatrix L;
    std::vector<Expr> c;          // its structure coefficients
    Box domain;
    std::vector<std::string> unknowns;
    std::vector<std::vector<Term>> eq;   // eq[unknown][direction]
    // lambda^a (relabeled) as sum of coeff * unknown
    std::vector<std::vector<std::pair<std::size_t, Expr>>> lambda_of;
    std::vector<std::size_t> perm;       // relabeled a is original perm[a]
    std::vector<std::vector<std::size_t>> index_sets;  // rich reductions, original labels
};

struct CompatResult {
    bool holds = false;
    double residual = 0.0;
};

struct CaseReport {
    CaseLabel label = CaseLabel::UnclassifiedN4;
    std::size_t n = 0;
    int rank = 0;
    bool rich = false;
    std::optional<Relation> relation;
    std::vector<std::size_t> perm;
    bool trivial = false;
    std::optional<CompatResult> compat;
    std::string family;
    std::vector<std::vector<std::size_t>> index_sets;  // 1-based for display
    std::vector<std::string> forced;                   // forced multiplicities
    std::vector<std::string> notes;
};

bool is_rich(const geometry::Connection& conn, const Box& domain, const Tolerances& tol);

// Relation from the rank-one rows (c1)-(c3) of a 3-dimensional connection.
Relation rank_one_relation(const geometry::Connection& conn, const Box& domain, const Tolerances& tol);

CaseReport classify_case(const geometry::Connection& conn, const LambdaSystem& sys, const RankResult& rank,
                         const Box& domain, const Tolerances& tol);

// Connection of the frame with columns permuted: new index a is old perm[a].
geometry::Connection relabel(const geometry::Connection& conn, const std::vector<std::size_t>& perm);

// First permutation in lexicographic order making rows (c1) admissible for
// the IIa reduction; empty when none exists.
std::vector<std::size_t> find_iia_relabeling(const geometry::Connection& conn, const Box& domain,
                                             const Tolerances& tol);
std::vector<std::size_t> find_iib_relabeling(const geometry::Connection& conn, const Box& domain,
                                             const Tolerances& tol);

// phi[s][i] with r_i(lambda^s) = phi^s_i (lambda^2 - lambda^3), s = 1, 2 for
// lambda^2, lambda^3.  The connection must already be relabeled.
struct IIaReduction {
    std::array<std::array<Expr, 3>, 2> phi;
    Expr A, B;  // lambda^1 = A lambda^2 - B lambda^3
    ReducedSystem system;
};

IIaReduction reduce_IIa(const geometry::Connection& relabeled, const Box& domain,
                        const std::vector<std::size_t>& perm);

struct FrobeniusCompat {
    CompatResult result;
    std::vector<double> residuals;  // (i<j, s) in order (12,2),(12,3),(13,2),(13,3),(23,2),(23,3)
};

FrobeniusCompat check_frobenius_compat(const geometry::Connection& relabeled, const IIaReduction& red,
                                       const Box& domain, const Tolerances& tol);

struct IIbReduction {
    bool trivial = false;
    double gamma_mismatch = 0.0;  // max |Gamma^3_31 - Gamma^2_21|
    ReducedSystem system;
};

IIbReduction reduce_IIb(const geometry::Connection& relabeled, const Box& domain,
                        const std::vector<std::size_t>& perm, const Tolerances& tol);

struct RichReduction {
    std::vector<std::vector<std::size_t>> sets;  // 0-based, sorted
    std::vector<std::size_t> simple;
    bool trivial = false;
    double assumption_residual = 0.0;
    ReducedSystem system;
};

RichReduction reduce_rich(std::size_t n, const std::vector<Expr>& Z, const geometry::RiemannChart& chart,
                          const Tolerances& tol);

// Integrability of a reduced system: mixed derivatives of every unknown
// along pairs of prescribed directions must agree.
CompatResult check_reduced_compat(const ReducedSystem& sys, const Tolerances& tol);
CompatResult check_darboux_compat(const RichReduction& red, const Tolerances& tol);

// Whole analysis of a frame, optionally with a Riemann-invariant chart.
struct Analysis {
    geometry::Connection conn;
    geometry::IdentityCheck identities;
    LambdaSystem system;
    RankResult rank;
    CaseReport report;
    std::optional<geometry::Pullback> pullback;
    std::optional<ReducedSystem> reduced;
    std::optional<IIaReduction> iia;
};

Analysis analyze(const geometry::Frame& frame, const std::optional<geometry::RiemannChart>& chart,
                 const Tolerances& tol);

std::string format_relation(const std::vector<double>& alpha);

}  // namespace eigenframe::analysis
