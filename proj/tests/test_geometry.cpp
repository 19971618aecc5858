#include <cmath>
#include <random>

#include "doctest.h"
#include "frames.hpp"
#include "random_expr.hpp"

using namespace eigenframe;
using namespace eigenframe::geometry;
using namespace testing_support;

namespace {

Tolerances tol;

std::vector<double> eval_at(const std::vector<Expr>& es, const std::vector<std::string>& vars,
                            const std::vector<double>& x)
{
    expr::Evaluator ev(es, vars);
    return ev(x);
}

double eval1(const Expr& e, const std::vector<std::string>& vars, const std::vector<double>& x)
{
    return eval_at({e}, vars, x)[0];
}

std::vector<Frame> all_frames()
{
    return {euler_frame(kNonRichPressure), euler_frame(kRichPressure), iia_trivial_frame(),
            iib_nontrivial_frame(), iib_trivial_frame(), n4_frame(), n2_frame(), orth_frame(),
            constant_frame(), rich_rank1_frame(), rich_rank2_frame(), rich_rank2_frame(false)};
}

}  // namespace

TEST_CASE("determinant and adjugate of a numeric matrix")
{
    ExprMatrix M{{Expr(2.0), Expr(1.0), Expr(0.0)}, {Expr(1.0), Expr(3.0), Expr(1.0)}, {Expr(0.0), Expr(1.0), Expr(4.0)}};
    CHECK(determinant(M).value() == doctest::Approx(18));
    auto inv = adjugate_inverse(M);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int m = 0; m < 3; ++m)
                s += inv[i][m].value() * M[m][j].value();
            CHECK(s == doctest::Approx(i == j ? 1.0 : 0.0));
        }
}

TEST_CASE("Euler left eigenvectors match the closed form")
{
    Frame f = euler_frame(kNonRichPressure);
    auto L = invert_frame(f, tol);
    for (const auto& x : sample_points(f.domain, 10, 1)) {
        double v = x[0], S = x[2];
        double pv = -1.4 * std::exp(S) * std::pow(v, -2.4);
        double pS = std::exp(S) * std::pow(v, -1.4);
        double c = std::sqrt(-pv);
        double expect[3][3] = {{0.5, 0.5 / c, 0.5 * pS / pv}, {0, 0, 1 / pv}, {0.5, -0.5 / c, 0.5 * pS / pv}};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                CHECK(eval1(L[i][j], f.vars, x) == doctest::Approx(expect[i][j]).epsilon(1e-12));
    }
}

TEST_CASE("inversion rejects n > 4 and singular frames")
{
    Frame big;
    big.vars = {"a", "b", "c", "d", "e"};
    big.R.assign(5, std::vector<Expr>(5, Expr(0.0)));
    for (int i = 0; i < 5; ++i)
        big.R[i][i] = Expr(1.0);
    big.domain = Box{{0, 0, 0, 0, 0}, {1, 1, 1, 1, 1}};
    big.base = {0, 0, 0, 0, 0};
    CHECK_THROWS_AS(invert_frame(big, tol), DegenerateError);

    Frame sing = make_frame({"x", "y"}, {{"x", "1"}, {"x", "1"}}, Box{{0, 0}, {1, 1}}, {0.5, 0.5});
    CHECK_THROWS_AS(invert_frame(sing, tol), DegenerateError);
}

TEST_CASE("Euler Christoffel symbols match the closed form")
{
    Frame f = euler_frame(kNonRichPressure);
    Connection conn = connection(f, tol);
    auto G = [&](int k, int i, int j, const std::vector<double>& x) {
        return eval1(conn.Gamma(k - 1, i - 1, j - 1), f.vars, x);
    };
    for (const auto& x : sample_points(f.domain, 10, 2)) {
        double v = x[0], S = x[2];
        double e = std::exp(S);
        double pv = -1.4 * e * std::pow(v, -2.4);
        double pvv = 3.36 * e * std::pow(v, -3.4);
        // p_S/p_v = -v/1.4, so its v-derivative is -1/1.4.
        double X = -1 / 1.4;
        CHECK(std::abs(G(2, 2, 1, x)) < 1e-12);
        CHECK(std::abs(G(2, 2, 3, x)) < 1e-12);
        CHECK(G(3, 3, 1, x) == doctest::Approx(-pvv / (4 * pv)).epsilon(1e-10));
        CHECK(G(1, 1, 3, x) == doctest::Approx(-pvv / (4 * pv)).epsilon(1e-10));
        CHECK(G(1, 1, 2, x) == doctest::Approx(-pv / 2 * X).epsilon(1e-10));
        CHECK(G(3, 3, 2, x) == doctest::Approx(-pv / 2 * X).epsilon(1e-10));
        CHECK(G(1, 3, 2, x) == doctest::Approx(-pv / 2 * X).epsilon(1e-10));
        CHECK(G(3, 1, 2, x) == doctest::Approx(-pv / 2 * X).epsilon(1e-10));
        CHECK(G(1, 2, 3, x) == doctest::Approx(-pv / 4 * X).epsilon(1e-10));
        CHECK(G(3, 2, 1, x) == doctest::Approx(-pv / 4 * X).epsilon(1e-10));
        CHECK(std::abs(G(2, 3, 1, x)) < 1e-12);
        CHECK(std::abs(G(2, 1, 3, x)) < 1e-12);
    }
}

TEST_CASE("Christoffel symbols agree with finite differences on random frames")
{
    RandomExpr gen(31337);
    std::vector<std::string> vars{"x", "y", "z"};
    int frames = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Frame f;
        f.vars = vars;
        f.R.assign(3, std::vector<Expr>(3));
        for (int m = 0; m < 3; ++m)
            for (int i = 0; i < 3; ++i)
                f.R[m][i] = expr::add(Expr(m == i ? 3.0 : 0.0), expr::mul(Expr(0.3), expr::sin(gen(3))));
        f.domain = Box{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
        f.base = {0, 0, 0};
        Connection conn = connection(f, tol);
        ++frames;
        std::vector<Expr> Rflat;
        for (int m = 0; m < 3; ++m)
            for (int i = 0; i < 3; ++i)
                Rflat.push_back(f.R[m][i]);
        expr::Evaluator Rev(Rflat, vars);
        for (const auto& x : sample_points(f.domain, 5, trial)) {
            auto Rx = Rev(x);
            // dR[p][m][j] by Richardson central differences
            double dR[3][3][3];
            for (int p = 0; p < 3; ++p) {
                auto at = [&](double h) {
                    auto y = x;
                    y[p] += h;
                    return Rev(y);
                };
                double h = 1e-3;
                auto a = at(h), b = at(-h), c = at(h / 2), d = at(-h / 2);
                for (int k = 0; k < 9; ++k)
                    dR[p][k / 3][k % 3] = (4 * (c[k] - d[k]) / h - (a[k] - b[k]) / (2 * h)) / 3;
            }
            auto L = eval_at({conn.L[0][0], conn.L[0][1], conn.L[0][2], conn.L[1][0], conn.L[1][1], conn.L[1][2],
                              conn.L[2][0], conn.L[2][1], conn.L[2][2]},
                             vars, x);
            auto G = eval_at(conn.gamma, vars, x);
            for (int k = 0; k < 3; ++k)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        double s = 0;
                        for (int m = 0; m < 3; ++m)
                            for (int p = 0; p < 3; ++p)
                                s += L[k * 3 + m] * dR[p][m][j] * Rx[p * 3 + i];
                        CHECK(std::abs(G[idx3(3, k, i, j)] - s) < 1e-7);
                    }
        }
    }
    CHECK(frames == 20);
}

TEST_CASE("structure coefficients are antisymmetric and equal torsion-free differences")
{
    for (const auto& f : all_frames()) {
        Connection conn = connection(f, tol);
        std::size_t n = conn.n;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(conn.C(k, i, i).is_zero());
                for (std::size_t j = 0; j < n; ++j)
                    CHECK(expr::equal(conn.C(k, i, j), expr::neg(conn.C(k, j, i))));
            }
    }
}

TEST_CASE("symmetry and flatness identities hold on every fixture frame")
{
    for (const auto& f : all_frames()) {
        Connection conn = connection(f, tol);
        auto chk = check_flat_symmetric(conn, f.domain, tol);
        CHECK(chk.symmetry < 1e-7);
        CHECK(chk.flatness < 1e-7);
        CHECK(chk.passed);
    }
}

TEST_CASE("the identity check notices a corrupted connection")
{
    Frame f = iia_trivial_frame();
    Connection conn = connection(f, tol);
    conn.gamma[idx3(3, 0, 2, 1)] = expr::add(conn.gamma[idx3(3, 0, 2, 1)], Expr::variable("u1"));
    auto chk = check_flat_symmetric(conn, f.domain, tol);
    CHECK_FALSE(chk.passed);
}

TEST_CASE("commutator of the IIb frame")
{
    Frame f = iib_nontrivial_frame();
    Connection conn = connection(f, tol);
    std::vector<double> x{0.2, 0.3, -0.4};
    // [r1, r3] = r2
    CHECK(eval1(conn.C(1, 0, 2), f.vars, x) == doctest::Approx(1.0));
    CHECK(std::abs(eval1(conn.C(0, 0, 2), f.vars, x)) < 1e-14);
}

TEST_CASE("pullback of the n = 2 chart")
{
    Frame f = n2_frame();
    Connection conn = connection(f, tol);
    auto pb = pullback_Z(f, conn, n2_chart(), tol);
    for (double w1 : {1.0, 1.3, 2.0})
        for (double w2 : {0.0, 0.4, 1.0}) {
            std::vector<double> w{w1, w2};
            CHECK(eval1(pb.z(2, 1, 1, 0), {"w1", "w2"}, w) == doctest::Approx(1 / (2 * w1)).epsilon(1e-10));
            CHECK(std::abs(eval1(pb.z(2, 0, 0, 1), {"w1", "w2"}, w)) < 1e-12);
        }
    CHECK(pb.normalization < 1e-10);
    CHECK(pb.cross_check < 1e-9);
}

TEST_CASE("pullback of the spherical chart")
{
    Frame f = orth_frame();
    Connection conn = connection(f, tol);
    auto chart = orth_chart();
    auto pb = pullback_Z(f, conn, chart, tol);
    for (const auto& w : sample_points(chart.wbox, 8, 4)) {
        double r = w[0], th = w[1];
        CHECK(eval1(pb.z(3, 1, 1, 0), chart.wvars, w) == doctest::Approx(1 / r).epsilon(1e-10));
        CHECK(eval1(pb.z(3, 2, 2, 0), chart.wvars, w) == doctest::Approx(1 / r).epsilon(1e-10));
        // d kappa^3 / d theta carries cot(theta)
        CHECK(eval1(pb.z(3, 2, 2, 1), chart.wvars, w) == doctest::Approx(std::cos(th) / std::sin(th)).epsilon(1e-10));
        CHECK(std::abs(eval1(pb.z(3, 0, 0, 1), chart.wvars, w)) < 1e-12);
    }
}

TEST_CASE("rich rank-1 chart gives the published coefficients")
{
    Frame f = rich_rank1_frame();
    auto chart = rich_rank1_chart();
    auto pb = pullback_Z(f, connection(f, tol), chart, tol);
    std::vector<double> w{0.2, -0.3, 0.1};
    CHECK(eval1(pb.z(3, 2, 0, 1), chart.wvars, w) == doctest::Approx(-1));
    CHECK(eval1(pb.z(3, 2, 1, 0), chart.wvars, w) == doctest::Approx(-1));
}

TEST_CASE("a frame not scaled to the chart is rejected")
{
    Frame f = rich_rank2_frame(false);
    CHECK_THROWS_AS(pullback_Z(f, connection(f, tol), rich_rank2_chart(), tol), ChartError);
    Frame g = rich_rank2_frame(true);
    CHECK_NOTHROW(pullback_Z(g, connection(g, tol), rich_rank2_chart(), tol));
}

TEST_CASE("a chart whose inverse is wrong is rejected")
{
    Frame f = rich_rank1_frame();
    auto chart = rich_rank1_chart();
    chart.rho_inv = parse_all({"w1", "w2", "w1*w2 + w3"}, chart.wvars);
    CHECK_THROWS_AS(pullback_Z(f, connection(f, tol), chart, tol), ChartError);
}

TEST_CASE("sampling is deterministic and stays inside the box")
{
    Box b{{0, -1}, {1, 1}};
    auto a = sample_points(b, 50, 9);
    auto c = sample_points(b, 50, 9);
    CHECK(a == c);
    CHECK(a != sample_points(b, 50, 10));
    for (const auto& p : a)
        CHECK(b.contains(p));
}

TEST_CASE("relabeling permutes the frame columns")
{
    Frame f = iib_nontrivial_frame();
    Frame g = relabel(f, {2, 0, 1});
    CHECK(expr::equal(g.R[0][0], f.R[0][2]));
    CHECK(expr::equal(g.R[1][1], f.R[1][0]));
}
