#include <cmath>
#include <sstream>

#include "doctest.h"
#include "eigenframe/solver.hpp"
#include "frames.hpp"

using namespace eigenframe;
using namespace eigenframe::solver;
using namespace testing_support;

namespace {

Tolerances tol;

double pv_euler(const std::vector<double>& u) { return -1.4 * std::exp(u[2]) * std::pow(u[0], -2.4); }

InitialData euler_data(double lbar, double C, const Frame& f)
{
    InitialData d;
    double c = std::sqrt(-pv_euler(f.base));
    d.constants = {{"lambda2", lbar}, {"lambda3", lbar + C * c}};
    return d;
}

double euler_error(const SolutionField& sol, double lbar, double C)
{
    double err = 0.0;
    for (std::size_t node = 0; node < sol.u.size(); ++node) {
        double c = std::sqrt(-pv_euler(sol.u[node]));
        err = std::max(err, std::abs(sol.lambda[0][node] - (lbar - C * c)));
        err = std::max(err, std::abs(sol.lambda[1][node] - lbar));
        err = std::max(err, std::abs(sol.lambda[2][node] - (lbar + C * c)));
    }
    return err;
}

Frame iib_frame_for_solving()
{
    Frame f = iib_nontrivial_frame();
    f.domain = Box{{-1, -1, -0.8}, {1, 1, 0.8}};
    return f;
}

InitialData functions(std::map<std::string, std::string> fs, std::map<std::string, double> cs = {})
{
    InitialData d;
    d.constants = std::move(cs);
    for (const auto& [k, v] : fs)
        d.functions[k] = expr::parse(v, {"t"});
    return d;
}

RiemannChart constant_chart()
{
    RiemannChart c;
    c.wvars = {"w1", "w2", "w3"};
    c.rho = parse_all({"(u1 - u2 + u3)/2", "(u1 + u2 - u3)/2", "(-u1 + u2 + u3)/2"}, {"u1", "u2", "u3"});
    c.rho_inv = parse_all({"w1 + w2", "w2 + w3", "w1 + w3"}, c.wvars);
    c.wbox = Box{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    c.wbase = {0, 0, 0};
    return c;
}

}  // namespace

TEST_CASE("grid layout and base snapping")
{
    Grid g = Grid::uniform(Box{{0, -1}, {1, 1}}, {5, 3}, {0.3, 0.2});
    CHECK(g.size() == 15);
    CHECK(g.base == std::vector<std::size_t>{1, 1});
    CHECK(g.base_point() == std::vector<double>{0.25, 0.0});
    CHECK(g.stride(0) == 3);
    for (std::size_t f = 0; f < g.size(); ++f)
        CHECK(g.flat(g.multi(f)) == f);
    CHECK(g.point(g.flat({4, 2})) == std::vector<double>{1.0, 1.0});
    CHECK_THROWS_AS(Grid::uniform(Box{{0}, {1}}, {1}, {0}), Error);
}

TEST_CASE("Euler IIa field matches the closed form")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto sol = solve(f, std::nullopt, an, euler_data(0.3, 0.7, f), {9, 9, 9}, tol);
    CHECK(euler_error(sol, 0.3, 0.7) < 1e-6);
    CHECK(sol.integration_path_gap < tol.path_tol);
    CHECK(sol.residuals.relation < 1e-12);
    CHECK(sol.residuals.curl < 1e-3);
    CHECK(sol.residuals.eigen < 1e-3);
    CHECK(sol.residuals.strict);
    CHECK(sol.residuals.passed());
}

TEST_CASE("Euler: equal constants collapse to the trivial solution")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    InitialData d;
    d.constants = {{"lambda2", 1.25}, {"lambda3", 1.25}};
    auto sol = solve(f, std::nullopt, an, d, {5, 5, 5}, tol);
    for (const auto& l : sol.lambda)
        for (double v : l)
            CHECK(v == doctest::Approx(1.25).epsilon(1e-14));
    CHECK(sol.residuals.curl < 1e-10);
    CHECK(sol.residuals.eigen < 1e-10);
}

TEST_CASE("shifting the data shifts the solution")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto d = euler_data(0.3, 0.7, f);
    auto a = solve(f, std::nullopt, an, d, {5, 5, 5}, tol);
    for (auto& [k, v] : d.constants)
        v += 1.7;
    auto b = solve(f, std::nullopt, an, d, {5, 5, 5}, tol);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t node = 0; node < a.u.size(); ++node)
            CHECK(std::abs(b.lambda[i][node] - a.lambda[i][node] - 1.7) < 1e-10);
}

TEST_CASE("Euler error decreases with the grid spacing")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto d = euler_data(0.3, 0.7, f);
    SolveOptions one;
    one.substeps = 1;
    double e1 = euler_error(solve(f, std::nullopt, an, d, {3, 3, 3}, tol, one), 0.3, 0.7);
    double e2 = euler_error(solve(f, std::nullopt, an, d, {5, 5, 5}, tol, one), 0.3, 0.7);
    double e3 = euler_error(solve(f, std::nullopt, an, d, {9, 9, 9}, tol, one), 0.3, 0.7);
    CHECK(e1 / e2 > 3);
    CHECK(e2 / e3 > 3);
}

TEST_CASE("IIa trivial-only frame refuses non-constant data")
{
    Frame f = iia_trivial_frame();
    auto an = analysis::analyze(f, std::nullopt, tol);
    InitialData d;
    d.constants = {{"lambda2", 0.0}, {"lambda3", 1.0}};
    CHECK_THROWS_AS(solve(f, std::nullopt, an, d, {3, 3, 3}, tol), NotSolvableError);
    InitialData c;
    c.constants = {{"lambda", 2.0}};
    auto sol = solve(f, std::nullopt, an, c, {4, 4, 4}, tol);
    CHECK(sol.lambda[2][7] == 2.0);
}

TEST_CASE("IIb field is a function of u3^2 - 2 u2")
{
    Frame f = iib_frame_for_solving();
    auto an = analysis::analyze(f, std::nullopt, tol);
    REQUIRE(an.report.label == analysis::CaseLabel::N3_IIb);
    auto d = functions({{"lambda1", "t"}}, {{"lambda2", 1.0}});
    auto sol = solve(f, std::nullopt, an, d, {7, 7, 7}, tol);
    double err = 0.0;
    for (std::size_t node = 0; node < sol.u.size(); ++node) {
        const auto& u = sol.u[node];
        err = std::max(err, std::abs(sol.lambda[0][node] - (u[1] - u[2] * u[2] / 2)));
        CHECK(sol.lambda[1][node] == 1.0);
        CHECK(sol.lambda[2][node] == 1.0);
    }
    CHECK(err < 1e-8);
    REQUIRE(sol.residuals.forced.size() == 1);
    CHECK(sol.residuals.forced[0].holds);
    CHECK(sol.residuals.curl < 1e-3);
}

TEST_CASE("IIb: constant data gives the trivial field; more substeps change little")
{
    Frame f = iib_frame_for_solving();
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto flat = solve(f, std::nullopt, an, functions({{"lambda1", "1"}}, {{"lambda2", 1.0}}), {5, 5, 5}, tol);
    for (const auto& l : flat.lambda)
        for (double v : l)
            CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    auto d = functions({{"lambda1", "sin(2*t)"}}, {{"lambda2", 0.5}});
    SolveOptions fine;
    fine.substeps = 8;
    auto a = solve(f, std::nullopt, an, d, {5, 5, 5}, tol);
    auto b = solve(f, std::nullopt, an, d, {5, 5, 5}, tol, fine);
    double change = 0.0;
    for (std::size_t node = 0; node < a.u.size(); ++node)
        change = std::max(change, std::abs(a.lambda[0][node] - b.lambda[0][node]));
    CHECK(change < 1e-5);
}

TEST_CASE("n = 2 Darboux field matches the quadrature formula")
{
    Frame f = n2_frame();
    auto chart = n2_chart();
    auto an = analysis::analyze(f, chart, tol);
    auto sol = solve(f, chart, an, functions({{"kappa1", "t"}, {"kappa2", "t"}}), {21, 21}, tol);
    REQUIRE(sol.in_w);
    double err = 0.0;
    for (std::size_t node = 0; node < sol.grid.size(); ++node) {
        auto w = sol.grid.point(node);
        // g = (1/2) int_1^w1 kappa1(xi)/sqrt(xi) dxi solves d1 kappa2 = (kappa1 - kappa2)/(2 w1)
        double g = (std::pow(w[0], 1.5) - 1) / 3;
        err = std::max(err, std::abs(sol.lambda[0][node] - w[0]));
        err = std::max(err, std::abs(sol.lambda[1][node] - (w[1] + g) / std::sqrt(w[0])));
    }
    CHECK(err < 1e-7);
    // the pulled-back frame is steep near w2 = 0.1, residuals only settle on finer grids
    auto mid = solve(f, chart, an, functions({{"kappa1", "t"}, {"kappa2", "t"}}), {41, 41}, tol);
    auto fine = solve(f, chart, an, functions({{"kappa1", "t"}, {"kappa2", "t"}}), {81, 81}, tol);
    CHECK(mid.residuals.curl / fine.residuals.curl > 6);
    CHECK(mid.residuals.eigen / fine.residuals.eigen > 6);
    CHECK(fine.residuals.eigen < 1e-3);
    // pulled back to u
    auto u = sol.u[sol.grid.size() - 1];
    CHECK(u[0] * u[1] == doctest::Approx(2.0));
}

TEST_CASE("n = 2 Darboux field reaches the singular edge w2 = 0")
{
    Frame f = n2_frame();
    auto chart = n2_chart(0.0);
    auto an = analysis::analyze(f, chart, tol);
    auto data = functions({{"kappa1", "t"}, {"kappa2", "t"}});
    auto g = Grid::uniform(chart.wbox, {101, 101}, chart.wbase);
    auto sol = integrate_darboux(*an.reduced, chart, data, g, tol);
    double err = 0.0;
    for (std::size_t node = 0; node < g.size(); ++node) {
        auto w = g.point(node);
        err = std::max(err, std::abs(sol.lambda[1][node] - (w[1] + (std::pow(w[0], 1.5) - 1) / 3) / std::sqrt(w[0])));
    }
    CHECK(err < 1e-10);
    CHECK(std::isnan(sol.u[0][0]));
    CHECK_THROWS_AS(reconstruct_flux(sol, f, tol), IntegrationError);
    CHECK_THROWS_AS(solve(f, chart, an, data, {11, 11}, tol), IntegrationError);
}

TEST_CASE("spherical Darboux field")
{
    Frame f = orth_frame();
    auto chart = orth_chart();
    auto an = analysis::analyze(f, chart, tol);
    auto d = functions({{"kappa1", "t"}, {"kappa2", "t"}, {"kappa3", "t"}});
    auto sol = solve(f, chart, an, d, {21, 21, 21}, tol);
    double err = 0.0;
    double th0 = 1.5;
    for (std::size_t node = 0; node < sol.grid.size(); ++node) {
        auto w = sol.grid.point(node);
        double r = w[0], th = w[1], ph = w[2];
        double g = (r * r - 1) / 2;
        double K = ph * std::sin(th0);
        double I = (th * std::sin(th) + std::cos(th)) - (th0 * std::sin(th0) + std::cos(th0));
        err = std::max(err, std::abs(sol.lambda[0][node] - r));
        err = std::max(err, std::abs(sol.lambda[1][node] - (th + g) / r));
        err = std::max(err, std::abs(sol.lambda[2][node] - ((K + I) / (r * std::sin(th)) + g / r)));
    }
    CHECK(err < 2e-5);
}

TEST_CASE("rich rank one: lambda1 = lambda2 constant, lambda3 carried by w3")
{
    Frame f = rich_rank1_frame();
    auto chart = rich_rank1_chart();
    auto an = analysis::analyze(f, chart, tol);
    auto sol = solve(f, chart, an, functions({{"kappa3", "t^2 + t"}}, {{"h1", 0.5}}), {7, 7, 7}, tol);
    double err = 0.0;
    for (std::size_t node = 0; node < sol.grid.size(); ++node) {
        const auto& u = sol.u[node];
        double w3 = u[0] * u[1] - u[2];
        CHECK(sol.lambda[0][node] == 0.5);
        CHECK(sol.lambda[1][node] == 0.5);
        err = std::max(err, std::abs(sol.lambda[2][node] - (w3 * w3 + w3)));
    }
    CHECK(err < 1e-10);
    REQUIRE(sol.residuals.forced.size() == 1);
    CHECK(sol.residuals.forced[0].label == "λ1=λ2");
    CHECK(sol.residuals.forced[0].holds);
    CHECK_FALSE(sol.residuals.strict);
}

TEST_CASE("flux of a constant field is linear")
{
    Frame f = orth_frame();
    auto g = Grid::uniform(f.domain, {4, 5, 6}, f.base);
    auto sol = constant_field(f, -0.75, g);
    reconstruct_flux(sol, f, tol);
    auto b = g.base_point();
    for (std::size_t node = 0; node < g.size(); ++node)
        for (std::size_t i = 0; i < 3; ++i)
            CHECK(std::abs(sol.flux[i][node] - -0.75 * (sol.u[node][i] - b[i])) < 1e-12);
    analysis::CaseReport rep;
    auto r = verify(sol, f, rep, tol);
    CHECK(r.curl < 1e-10);
    CHECK(r.eigen < 1e-10);
    CHECK(r.min_gap == 0.0);
}

TEST_CASE("constant frame: flux columns are antiderivatives along L^i")
{
    Frame f = constant_frame();
    auto chart = constant_chart();
    auto an = analysis::analyze(f, chart, tol);
    auto d = functions({{"kappa1", "t^2"}, {"kappa2", "sin(t)"}, {"kappa3", "exp(t)"}});
    auto sol = solve(f, chart, an, d, {9, 9, 9}, tol);
    double R[3][3] = {{1, 1, 0}, {0, 1, 1}, {1, 0, 1}};
    double err = 0.0;
    for (std::size_t node = 0; node < sol.grid.size(); ++node) {
        auto w = sol.grid.point(node);
        double F[3] = {w[0] * w[0] * w[0] / 3, 1 - std::cos(w[1]), std::exp(w[2]) - 1};
        for (int m = 0; m < 3; ++m) {
            double expect = 0;
            for (int i = 0; i < 3; ++i)
                expect += R[m][i] * F[i];
            err = std::max(err, std::abs(sol.flux[m][node] - expect));
        }
    }
    CHECK(err < 1e-5);
    CHECK(sol.residuals.eigen < 1e-4);
}

TEST_CASE("verify detects a field that is not a solution")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto sol = solve(f, std::nullopt, an, euler_data(0.3, 0.7, f), {9, 9, 9}, tol);
    for (std::size_t node = 0; node < sol.u.size(); ++node)
        sol.lambda[0][node] += 0.3 * sol.u[node][1] * sol.u[node][1];
    auto r = verify(sol, f, an.report, tol);
    CHECK(r.curl > 1e-2);
    CHECK(r.relation > 1e-2);
    CHECK_FALSE(r.passed());
}

TEST_CASE("CSV and JSON output")
{
    Frame f = euler_frame(kNonRichPressure);
    auto an = analysis::analyze(f, std::nullopt, tol);
    auto sol = solve(f, std::nullopt, an, euler_data(0.3, 0.7, f), {3, 3, 3}, tol);
    std::stringstream ss;
    write_csv(ss, sol);
    std::string text = ss.str();
    CHECK(text.rfind("u1,u2,u3,lambda1,lambda2,lambda3,f1,f2,f3\n", 0) == 0);
    auto t = read_csv(ss);
    REQUIRE(t.rows.size() == 27);
    for (std::size_t node = 0; node < 27; ++node) {
        CHECK(t.rows[node][3] == sol.lambda[0][node]);
        CHECK(t.rows[node][8] == sol.flux[2][node]);
    }
    auto j1 = report_json(an.report, &sol), j2 = report_json(an.report, &sol);
    CHECK(j1 == j2);
    for (const char* key : {"\"case\"", "\"rank\"", "\"residuals\"", "\"curl\"", "\"eigen\"", "\"hyperbolicity\"",
                            "\"family\""})
        CHECK(j1.find(key) != std::string::npos);
    std::stringstream bad("a,b\n1,x\n");
    CHECK_THROWS_AS(read_csv(bad), Error);
}
