#pragma once

#include <optional>

#include "eigenframe/common.hpp"

namespace eigenframe::geometry {

// Columns of R are the eigenfields R_1..R_n in coordinates u.
struct Frame {
    std::vector<std::string> vars;
    ExprMatrix R;  // R[m][i] = m-th component of R_i
    Box domain;
    std::vector<double> base;

    std::size_t n() const { return vars.size(); }
};

// Index helper for rank-3 arrays T^k_ij stored flat.
inline std::size_t idx3(std::size_t n, std::size_t k, std::size_t i, std::size_t j)
{
    return (k * n + i) * n + j;
}

struct Connection {
    std::size_t n = 0;
    std::vector<std::string> vars;
    ExprMatrix R;
    ExprMatrix L;               // rows are the left eigenvectors, L R = I
    std::vector<Expr> gamma;    // Gamma^k_ij at idx3(n,k,i,j)
    std::vector<Expr> c;        // c^k_ij, [r_i, r_j] = c^k_ij r_k

    const Expr& Gamma(std::size_t k, std::size_t i, std::size_t j) const { return gamma[idx3(n, k, i, j)]; }
    const Expr& C(std::size_t k, std::size_t i, std::size_t j) const { return c[idx3(n, k, i, j)]; }
};

// Directional derivatives r_i(f) = sum_p R^p_i d_p f, memoised per variable.
class FrameDerivative {
public:
    FrameDerivative(const std::vector<std::string>& vars, const ExprMatrix& R);
    Expr operator()(std::size_t i, const Expr& f);
    Expr partial(std::size_t p, const Expr& f) { return d_[p](f); }

private:
    ExprMatrix R_;
    std::vector<expr::Differentiator> d_;
};

Expr determinant(const ExprMatrix& M);
ExprMatrix adjugate_inverse(const ExprMatrix& M);

// L = adj(R)/det(R).  Fails for n > 4 or a vanishing determinant.
ExprMatrix invert_frame(const Frame& frame, const Tolerances& tol);

std::vector<Expr> structure_coefficients(const Frame& frame, const ExprMatrix& L);
std::vector<Expr> christoffel(const Frame& frame, const ExprMatrix& L);

Connection connection(const Frame& frame, const Tolerances& tol);

struct IdentityCheck {
    double symmetry = 0.0;  // c^i_km - (Gamma^i_km - Gamma^i_mk)
    double flatness = 0.0;  // curvature of the flat connection in the frame
    bool passed = false;
};

IdentityCheck check_flat_symmetric(const Connection& conn, const Box& domain, const Tolerances& tol);

// Evaluates a batch of expressions at the sample points of a box.
std::vector<std::vector<double>> sample_values(std::span<const Expr> exprs,
                                               const std::vector<std::string>& vars,
                                               const std::vector<std::vector<double>>& pts);

struct RiemannChart {
    std::vector<std::string> wvars;
    std::vector<Expr> rho;      // w(u)
    std::vector<Expr> rho_inv;  // u(w)
    Box wbox;
    std::vector<double> wbase;
};

struct Pullback {
    ExprMatrix S;            // R composed with rho_inv, in w
    std::vector<Expr> Z;     // Z^k_ij = (S^-1 dS/dw^i)^k_j
    double normalization = 0.0;
    double roundtrip = 0.0;
    double cross_check = 0.0;
    // (entry, variable) pairs found not to depend on that variable; the
    // variable is pinned at the chart base point.
    std::vector<std::pair<std::size_t, std::size_t>> pinned;

    const Expr& z(std::size_t n, std::size_t k, std::size_t i, std::size_t j) const { return Z[idx3(n, k, i, j)]; }
};

Pullback pullback_Z(const Frame& frame, const Connection& conn, const RiemannChart& chart,
                    const Tolerances& tol);

// Frame with columns permuted: new R_a = old R_perm[a].
Frame relabel(const Frame& frame, const std::vector<std::size_t>& perm);

}  // namespace eigenframe::geometry
