#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "internal.hpp"

namespace eigenframe::solver {

using analysis::ReducedSystem;

namespace {

// Flows of the frame fields started at the base point: first r_1 (the data
// line), then r_n, ..., r_2.
class FlowMap {
public:
    FlowMap(const ReducedSystem& red, const Expr& phi)
        : red_(red), n_(red.n), phi_(std::vector<Expr>{phi}, std::vector<std::string>{"t"})
    {
        order_.push_back(0);
        for (std::size_t i = n_; i-- > 1;)
            order_.push_back(i);
        std::vector<Expr> batch;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t m = 0; m < n_; ++m)
                batch.push_back(red.R[m][i]);
        for (std::size_t u = 0; u < 2; ++u)
            for (std::size_t i = 0; i < n_; ++i)
                batch.push_back(red.eq[u][i].prescribed ? red.eq[u][i].coeff : Expr(0.0));
        ev_ = std::make_unique<expr::Evaluator>(batch, red.vars);
        vals_.resize(batch.size());
    }

    // Position only.
    std::vector<double> position(const std::vector<double>& start, const std::vector<double>& t,
                                 const std::vector<int>& steps)
    {
        std::vector<double> x = start;
        std::vector<double> y;
        for (std::size_t i : order_)
            advance(x, y, i, 0.0, t[i], steps[i], false);
        return x;
    }

    // Position and unknowns (lambda^1, lambda^2) along the composed path.
    // Returns the drift of lambda^2 along the flows of r_2..r_n.
    double path(std::vector<double>& x, std::vector<double>& y, const std::vector<double>& t,
                const std::vector<int>& steps, const Box& box, double margin)
    {
        double drift = 0.0;
        for (std::size_t i : order_) {
            double before = y[1];
            advance(x, y, i, 0.0, t[i], steps[i], true, &box, margin);
            if (i > 0)
                drift = std::max(drift, std::abs(y[1] - before));
        }
        return drift;
    }

    double phi(double t)
    {
        double v;
        phi_.eval(std::span<const double>(&t, 1), std::span<double>(&v, 1));
        return v;
    }

private:
    void field(const std::vector<double>& x, const std::vector<double>& y, std::size_t i, double s, bool with_y,
               std::vector<double>& dx, std::vector<double>& dy)
    {
        detail::eval_at(*ev_, x, vals_);
        for (std::size_t m = 0; m < n_; ++m)
            dx[m] = vals_[i * n_ + m];
        if (!with_y)
            return;
        auto coeff = [&](std::size_t u) { return vals_[n_ * n_ + u * n_ + i]; };
        if (i == 0) {
            // lambda^1 is the data on this line
            dy[0] = 0.0;
            dy[1] = coeff(1) * (phi(s) - y[1]);
        } else {
            dy[0] = coeff(0) * (y[1] - y[0]);
            dy[1] = coeff(1) * (y[0] - y[1]);
        }
    }

    void advance(std::vector<double>& x, std::vector<double>& y, std::size_t i, double s0, double t, int steps,
                 bool with_y, const Box* box = nullptr, double margin = 0.0)
    {
        if (t == 0.0)
            return;
        double h = t / steps;
        std::size_t ny = with_y ? y.size() : 0;
        std::vector<double> k1x(n_), k2x(n_), k3x(n_), k4x(n_), tx(n_);
        std::vector<double> k1y(ny), k2y(ny), k3y(ny), k4y(ny), ty(ny);
        for (int q = 0; q < steps; ++q) {
            double s = s0 + q * h;
            field(x, y, i, s, with_y, k1x, k1y);
            for (std::size_t m = 0; m < n_; ++m)
                tx[m] = x[m] + h / 2 * k1x[m];
            for (std::size_t u = 0; u < ny; ++u)
                ty[u] = y[u] + h / 2 * k1y[u];
            field(tx, ty, i, s + h / 2, with_y, k2x, k2y);
            for (std::size_t m = 0; m < n_; ++m)
                tx[m] = x[m] + h / 2 * k2x[m];
            for (std::size_t u = 0; u < ny; ++u)
                ty[u] = y[u] + h / 2 * k2y[u];
            field(tx, ty, i, s + h / 2, with_y, k3x, k3y);
            for (std::size_t m = 0; m < n_; ++m)
                tx[m] = x[m] + h * k3x[m];
            for (std::size_t u = 0; u < ny; ++u)
                ty[u] = y[u] + h * k3y[u];
            field(tx, ty, i, s + h, with_y, k4x, k4y);
            for (std::size_t m = 0; m < n_; ++m)
                x[m] += h / 6 * (k1x[m] + 2 * k2x[m] + 2 * k3x[m] + k4x[m]);
            for (std::size_t u = 0; u < ny; ++u)
                y[u] += h / 6 * (k1y[u] + 2 * k2y[u] + 2 * k3y[u] + k4y[u]);
            if (box && !box->contains(x, margin))
                throw IntegrationError("flow of r" + std::to_string(i + 1) + " leaves the domain at " +
                                       detail::format_point(x));
        }
        if (with_y && i == 0)
            y[0] = phi(s0 + t);
    }

    const ReducedSystem& red_;
    std::size_t n_;
    std::vector<std::size_t> order_;
    expr::Evaluator phi_;
    std::unique_ptr<expr::Evaluator> ev_;
    std::vector<double> vals_;
};

double max_norm(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

SolutionField integrate_IIb(const ReducedSystem& red, const InitialData& data, const Grid& grid,
                            const Tolerances& tol, const SolveOptions& opt)
{
    std::size_t n = red.n;
    if (grid.dim() != n)
        throw Error("grid dimension does not match the frame");
    if (red.unknowns.size() != 2)
        throw NotSolvableError("IIb integration expects the unknowns (lambda1, lambda2)");
    for (std::size_t u = 0; u < 2; ++u)
        for (std::size_t i = 0; i < n; ++i)
            if (!red.eq[u][i].prescribed && !(u == 0 && i == 0))
                throw NotSolvableError("IIb integration: unexpected free derivative");
    auto c = data.constants.find(red.unknowns[1]);
    auto f = data.functions.find(red.unknowns[0]);
    if (c == data.constants.end() || f == data.functions.end())
        throw NotSolvableError("initial data: constant '" + red.unknowns[1] + "' and function '" + red.unknowns[0] +
                               "(t)' on the r1 line are required");

    FlowMap flow(red, f->second);
    std::vector<double> base = grid.base_point();
    double hmax = 1e300;
    for (std::size_t a = 0; a < n; ++a)
        hmax = std::min(hmax, grid.spacing(a));
    hmax /= opt.substeps;
    auto steps_for = [&](const std::vector<double>& t) {
        std::vector<int> s(n);
        for (std::size_t i = 0; i < n; ++i)
            s[i] = std::max(2, static_cast<int>(std::ceil(std::abs(t[i]) / hmax)));
        return s;
    };

    auto newton = [&](const std::vector<double>& target, std::vector<double> t) {
        std::vector<int> steps = steps_for(t);
        double scale = 1.0 + max_norm(target);
        for (int round = 0; round < 4; ++round) {
            bool done = false;
            for (int it = 0; it < 60 && !done; ++it) {
                auto x = flow.position(base, t, steps);
                Eigen::VectorXd F(n);
                for (std::size_t m = 0; m < n; ++m)
                    F[m] = x[m] - target[m];
                if (F.lpNorm<Eigen::Infinity>() < 1e-13 * scale) {
                    done = true;
                    break;
                }
                Eigen::MatrixXd J(n, n);
                for (std::size_t i = 0; i < n; ++i) {
                    auto tp = t;
                    double d = 1e-7 * (1.0 + std::abs(t[i]));
                    tp[i] += d;
                    auto xp = flow.position(base, tp, steps);
                    for (std::size_t m = 0; m < n; ++m)
                        J(m, i) = (xp[m] - x[m]) / d;
                }
                Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
                if (!lu.isInvertible())
                    throw IntegrationError("flow coordinates degenerate near " + detail::format_point(target));
                Eigen::VectorXd dt = -lu.solve(F);
                double fn = F.lpNorm<Eigen::Infinity>();
                double lambda = 1.0;
                std::vector<double> tn(n);
                for (int back = 0; back < 20; ++back, lambda /= 2) {
                    for (std::size_t i = 0; i < n; ++i)
                        tn[i] = t[i] + lambda * dt[i];
                    auto xn = flow.position(base, tn, steps);
                    double g = 0.0;
                    for (std::size_t m = 0; m < n; ++m)
                        g = std::max(g, std::abs(xn[m] - target[m]));
                    if (g < fn || g < 1e-13 * scale)
                        break;
                }
                t = tn;
                if (lambda * max_norm(std::vector<double>(dt.data(), dt.data() + n)) < 1e-15 * (1.0 + max_norm(t)) &&
                    fn < 1e-10 * scale)
                    done = true;
            }
            if (!done)
                throw IntegrationError("no flow path from the base point reaches " + detail::format_point(target));
            auto need = steps_for(t);
            bool enough = true;
            for (std::size_t i = 0; i < n; ++i)
                if (need[i] > steps[i])
                    enough = false;
            if (enough)
                return std::make_pair(t, steps);
            steps = need;
        }
        throw IntegrationError("flow step control did not settle at " + detail::format_point(grid.point(0)));
    };

    SolutionField sol;
    sol.grid = grid;
    sol.coords = red.vars;
    sol.u.resize(grid.size());
    std::vector<std::vector<double>> Y(grid.size());
    std::vector<std::vector<double>> T(grid.size());
    std::vector<bool> seen(grid.size(), false);
    std::deque<std::size_t> queue;
    std::size_t b = grid.flat(grid.base);
    T[b].assign(n, 0.0);
    seen[b] = true;
    queue.push_back(b);
    double drift = 0.0;
    while (!queue.empty()) {
        std::size_t node = queue.front();
        queue.pop_front();
        auto target = grid.point(node);
        auto [t, steps] = newton(target, T[node]);
        T[node] = t;
        std::vector<double> x = base, y{flow.phi(0.0), c->second};
        drift = std::max(drift, flow.path(x, y, t, steps, red.domain, opt.flow_margin));
        Y[node] = y;
        sol.u[node] = target;
        auto idx = grid.multi(node);
        for (std::size_t a = 0; a < n; ++a)
            for (int d : {-1, 1}) {
                if ((d < 0 && idx[a] == 0) || (d > 0 && idx[a] + 1 == grid.count(a)))
                    continue;
                auto j = idx;
                j[a] += d;
                std::size_t nb = grid.flat(j);
                if (!seen[nb]) {
                    seen[nb] = true;
                    T[nb] = t;
                    queue.push_back(nb);
                }
            }
    }
    sol.drift = drift;
    if (drift > tol.integ_tol)
        throw IntegrationError("lambda2 drifts along the r2/r3 flows by " + std::to_string(drift));

    sol.lambda.assign(n, std::vector<double>(grid.size()));
    for (std::size_t node = 0; node < grid.size(); ++node)
        for (std::size_t a = 0; a < n; ++a) {
            double v = 0.0;
            for (const auto& [u, coeff] : red.lambda_of[a])
                v += coeff.value() * Y[node][u];
            sol.lambda[red.perm[a]][node] = v;
        }
    return sol;
}

}  // namespace eigenframe::solver
