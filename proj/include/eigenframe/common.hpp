#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eigenframe/expr.hpp"

namespace eigenframe {

using expr::Expr;
using ExprMatrix = std::vector<std::vector<Expr>>;  // [row][column]

struct Tolerances {
    double zero_tol = 1e-9;      // sampled zero tests, scaled by 1 + magnitude
    double rank_tol = 1e-8;      // singular value cut relative to the largest
    double compat_tol = 1e-6;    // compatibility residuals
    double path_tol = 1e-5;      // path independence of integrated fields
    double integ_tol = 1e-8;     // drift of quantities held constant by construction
    double curl_tol = 1e-3;      // finite difference curl of the flux Jacobian
    double identity_tol = 1e-7;  // symmetry and flatness identities
    double chart_tol = 1e-8;     // chart normalisation and inverse
    double inverse_tol = 1e-9;   // R L = I
    int samples = 50;
    std::uint64_t seed = 20240611;

    bool operator==(const Tolerances&) const = default;
};

// Axis aligned box in named coordinates.
struct Box {
    std::vector<double> lo, hi;

    std::size_t dim() const { return lo.size(); }
    bool contains(const std::vector<double>& x, double slack = 0.0) const;
};

// Cranley-Patterson rotated Halton points in the box.  Deterministic for a
// given seed.
std::vector<std::vector<double>> sample_points(const Box& box, int count, std::uint64_t seed);

inline bool near_zero(double v, double scale, double tol)
{
    return (v < 0 ? -v : v) <= tol * (1.0 + scale);
}

class DegenerateError : public Error {
public:
    using Error::Error;
};

class ChartError : public Error {
public:
    using Error::Error;
};

class IdentityError : public Error {
public:
    using Error::Error;
};

}  // namespace eigenframe
