#include <cmath>
#include <random>

#include "eigenframe/common.hpp"

namespace eigenframe {

bool Box::contains(const std::vector<double>& x, double slack) const
{
    for (std::size_t i = 0; i < lo.size(); ++i) {
        double w = (hi[i] - lo[i]) * slack;
        if (x[i] < lo[i] - w || x[i] > hi[i] + w)
            return false;
    }
    return true;
}

namespace {

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

double radical_inverse(std::uint64_t k, int base)
{
    double f = 1.0, r = 0.0;
    while (k > 0) {
        f /= base;
        r += f * static_cast<double>(k % base);
        k /= base;
    }
    return r;
}

}  // namespace

std::vector<std::vector<double>> sample_points(const Box& box, int count, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<double> shift(box.dim());
    for (auto& s : shift)
        s = static_cast<double>(rng() >> 11) * 0x1.0p-53;

    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    for (int k = 0; k < count; ++k) {
        std::vector<double> p(box.dim());
        for (std::size_t d = 0; d < box.dim(); ++d) {
            double t = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[d % 12]) + shift[d];
            t -= std::floor(t);
            // Keep clear of the faces, where charts and frames often degenerate.
            t = 0.02 + 0.96 * t;
            p[d] = box.lo[d] + t * (box.hi[d] - box.lo[d]);
        }
        pts.push_back(std::move(p));
    }
    return pts;
}

}  // namespace eigenframe
