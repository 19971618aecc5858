#include <algorithm>
#include <cmath>

#include "eigenframe/solver.hpp"

namespace eigenframe::solver {

Grid Grid::uniform(const Box& box, const std::vector<std::size_t>& counts, const std::vector<double>& base)
{
    if (counts.size() != box.dim() || base.size() != box.dim())
        throw Error("grid: dimension mismatch");
    Grid g;
    g.requested = base;
    for (std::size_t a = 0; a < box.dim(); ++a) {
        std::size_t m = counts[a];
        if (m < 2)
            throw Error("grid: need at least 2 nodes per axis");
        if (!(box.hi[a] > box.lo[a]))
            throw Error("grid: empty interval on axis " + std::to_string(a + 1));
        std::vector<double> x(m);
        for (std::size_t k = 0; k < m; ++k)
            x[k] = k + 1 == m ? box.hi[a] : box.lo[a] + (box.hi[a] - box.lo[a]) * static_cast<double>(k) / (m - 1);
        double h = x[1] - x[0];
        long k = std::lround((base[a] - box.lo[a]) / h);
        k = std::clamp<long>(k, 0, static_cast<long>(m) - 1);
        g.base.push_back(static_cast<std::size_t>(k));
        g.axes.push_back(std::move(x));
    }
    return g;
}

std::size_t Grid::size() const
{
    std::size_t s = 1;
    for (const auto& a : axes)
        s *= a.size();
    return s;
}

std::size_t Grid::stride(std::size_t a) const
{
    std::size_t s = 1;
    for (std::size_t b = a + 1; b < axes.size(); ++b)
        s *= axes[b].size();
    return s;
}

std::size_t Grid::flat(const std::vector<std::size_t>& idx) const
{
    std::size_t f = 0;
    for (std::size_t a = 0; a < axes.size(); ++a)
        f = f * axes[a].size() + idx[a];
    return f;
}

std::vector<std::size_t> Grid::multi(std::size_t f) const
{
    std::vector<std::size_t> idx(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
        idx[a] = f % axes[a].size();
        f /= axes[a].size();
    }
    return idx;
}

std::vector<double> Grid::point(std::size_t f) const
{
    auto idx = multi(f);
    std::vector<double> x(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
        x[a] = axes[a][idx[a]];
    return x;
}

std::vector<double> Grid::base_point() const
{
    std::vector<double> x(axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
        x[a] = axes[a][base[a]];
    return x;
}

}  // namespace eigenframe::solver
