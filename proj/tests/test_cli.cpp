#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "eigenframe/cli.hpp"
#include "frames.hpp"

using namespace eigenframe;
using namespace eigenframe::cli;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# comment
[job]
name = tiny
seed = 7

[frame]
vars = x, y
R1 = "1", "0"     # first field
R2 = "y", "1"

[domain]
lo = -1, -2
hi = 1, 2e0
base = 0, 0.5

[grid]
counts = 3, 4
)";

JobConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in, "test.cfg");
}

int line_of_error(const std::string& text)
{
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("eigenframe_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& args)
{
    std::string cmd = std::string(EIGENFRAME_BIN) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fixture(const std::string& name) { return fs::path(EIGENFRAME_FIXTURES) / (name + ".cfg"); }

}  // namespace

TEST_CASE("config: sections, lists, quoted expressions")
{
    auto c = parse(kMinimal);
    CHECK(c.name == "tiny");
    CHECK(c.tol.seed == 7);
    CHECK(c.vars == std::vector<std::string>{"x", "y"});
    REQUIRE(c.columns.size() == 2);
    CHECK(c.columns[1] == std::vector<std::string>{"y", "1"});
    CHECK(c.lo == std::vector<double>{-1, -2});
    CHECK(c.hi == std::vector<double>{1, 2});
    CHECK(c.counts == std::vector<std::size_t>{3, 4});
    CHECK(c.lines.of("frame.R2") == 9);
    CHECK(c.tol.zero_tol == Tolerances{}.zero_tol);
}

TEST_CASE("config: errors carry the line")
{
    std::string base = kMinimal;
    CHECK(line_of_error(base + "bogus = 1\n") == 18);
    CHECK(line_of_error(base + "[output]\ncsv = \"a.csv\nb\n") == 19);
    CHECK(line_of_error(base + "[tolerances]\nzero_tol = abc\n") == 19);
    CHECK(line_of_error(base + "[tolerances]\nmystery_tol = 1\n") == 19);
    CHECK(line_of_error(base + "[nothing]\n") == 18);
    CHECK(line_of_error(base + "substeps\n") == 18);
    CHECK(line_of_error(base + "[grid]\n") == 18);  // section twice
    CHECK(line_of_error("[frame]\nvars = x, y\nR1 = 1, \"0\"\n") == 3);
    CHECK(line_of_error("[frame]\nvars = x, y\nR1 = \"1\", \"0\"\nR1 = \"1\", \"0\"\n") == 4);

    auto replace = [&](const std::string& from, const std::string& to) {
        auto s = base;
        s.replace(s.find(from), from.size(), to);
        return s;
    };
    CHECK(line_of_error(replace("counts = 3, 4", "counts = 3, 1")) == 17);
    CHECK(line_of_error(replace("counts = 3, 4", "counts = 3, 4, 5")) == 17);
    CHECK(line_of_error(replace("hi = 1, 2e0", "hi = 1, -2")) == 13);
    CHECK(line_of_error(replace("base = 0, 0.5", "base = 0, 5")) == 14);
    CHECK(line_of_error(replace("R2 = \"y\", \"1\"", "R2 = \"y\"")) == 9);
    CHECK(line_of_error(replace("R2 = \"y\", \"1\"", "R3 = \"y\", \"1\"")) == 9);
}

TEST_CASE("config: bad expressions are reported at their key")
{
    std::string s = kMinimal;
    s.replace(s.find("\"y\", \"1\""), 8, "\"y +\", \"1\"");
    auto c = parse(s);
    try {
        build_job(c);
        FAIL("no error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 9);
        CHECK(std::string(e.what()).find("test.cfg:9") == 0);
    }
    s = kMinimal;
    s.replace(s.find("\"y\", \"1\""), 8, "\"z\", \"1\"");
    CHECK_THROWS_AS(build_job(parse(s)), ConfigError);
}

TEST_CASE("effective config reparses to the same job for every fixture")
{
    auto files = list_fixtures(EIGENFRAME_FIXTURES);
    CHECK(files.size() == 11);
    for (const auto& f : files) {
        CAPTURE(f);
        auto c = load_config(f);
        auto text = effective_config(c);
        std::istringstream in(text);
        auto back = parse_config(in, "effective");
        CHECK(back == c);
        CHECK(effective_config(back) == text);
    }
}

TEST_CASE("effective config keeps overridden tolerances and awkward numbers")
{
    auto c = parse(kMinimal);
    set_tolerance(c.tol, "curl_tol", "0.1");
    set_tolerance(c.tol, "seed", "99");
    set_tolerance(c.tol, "samples", "20");
    c.base = {1.0 / 3.0, 0.1 + 0.2};
    std::istringstream in(effective_config(c));
    auto back = parse_config(in);
    CHECK(back == c);
    CHECK(back.tol.curl_tol == 0.1);
    CHECK(back.tol.seed == 99);
    CHECK(back.base[0] == 1.0 / 3.0);
    CHECK_THROWS_AS(set_tolerance(c.tol, "curl", "1"), ConfigError);
    CHECK_THROWS_AS(set_tolerance(c.tol, "curl_tol", "1x"), ConfigError);
}

TEST_CASE("pressure law materialises its derivatives")
{
    auto p = expr::parse("exp(S)*v^(-7/5)", {"v", "S"});
    auto sym = pressure_symbols(p);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> V(1, 2), S(0, 1);
    for (int k = 0; k < 20; ++k) {
        double v = V(rng), s = S(rng);
        expr::Point at{{"v", v}, {"S", s}};
        double pv = -1.4 * std::exp(s) * std::pow(v, -2.4);
        CHECK(expr::evaluate(sym["p_v"], at) == doctest::Approx(pv).epsilon(1e-13));
        CHECK(expr::evaluate(sym["p_S"], at) == doctest::Approx(std::exp(s) * std::pow(v, -1.4)).epsilon(1e-13));
        CHECK(expr::evaluate(sym["p_vv"], at) ==
              doctest::Approx(3.36 * std::exp(s) * std::pow(v, -3.4)).epsilon(1e-13));
        CHECK(expr::evaluate(sym["p_vS"], at) == doctest::Approx(pv).epsilon(1e-13));
        // p_S/p_v = -v/1.4
        CHECK(expr::evaluate(sym["pS_pv_v"], at) == doctest::Approx(-1 / 1.4).epsilon(1e-13));
    }
}

TEST_CASE("job: frame, derived symbols and initial data")
{
    auto c = load_config(fixture("euler_nonrich"));
    auto job = build_job(c);
    auto ref = testing_support::euler_frame(testing_support::kNonRichPressure);
    auto pts = sample_points(ref.domain, 10, 5);
    for (const auto& x : pts) {
        expr::Point at;
        for (std::size_t i = 0; i < 3; ++i)
            at.push_back({ref.vars[i], x[i]});
        for (std::size_t m = 0; m < 3; ++m)
            for (std::size_t i = 0; i < 3; ++i)
                CHECK(expr::evaluate(job.frame.R[m][i], at) ==
                      doctest::Approx(expr::evaluate(ref.R[m][i], at)).epsilon(1e-13));
    }
    double c0 = std::sqrt(1.4 * std::exp(0.5) * std::pow(1.5, -2.4));
    CHECK(job.data.constants.at("lambda3") == doctest::Approx(0.3 + 0.7 * c0).epsilon(1e-15));
    CHECK(job.data.constants.at("lambda2") == 0.3);
    CHECK(job.frame.base == std::vector<double>{1.5, 0, 0.5});
}

TEST_CASE("job: function data in a declared variable")
{
    std::string s = kMinimal;
    s += "\n[initial]\nvariable = s\nkappa1(s) = \"s^2 + 1\"\nh = 2\n";
    auto job = build_job(parse(s));
    auto f = job.data.functions.at("kappa1");
    CHECK(expr::evaluate(f, {{"t", 3.0}}) == 10.0);
    CHECK(job.data.constants.at("h") == 2.0);
    CHECK(line_of_error(kMinimal + std::string("\n[initial]\nkappa1(s) = \"s\"\n")) == 20);
}

TEST_CASE("every bundled fixture passes")
{
    for (const auto& f : list_fixtures(EIGENFRAME_FIXTURES)) {
        auto res = run_fixture(load_config(f));
        CAPTURE(res.name);
        for (const auto& ch : res.checks) {
            CAPTURE(ch.name);
            CAPTURE(ch.detail);
            CHECK(ch.passed);
        }
        CHECK(res.passed());
    }
}

TEST_CASE("a wrong expectation is reported")
{
    auto c = load_config(fixture("rich_rank1"));
    c.expected.label = "Rich-Rank0";
    c.expected.closed["lambda3"] = "w3^2";
    auto res = run_fixture(c);
    CHECK_FALSE(res.passed());
    int failed = 0;
    for (const auto& ch : res.checks)
        if (!ch.passed) {
            ++failed;
            CHECK((ch.name == "case" || ch.name == "closed form"));
        }
    CHECK(failed == 2);
}

TEST_CASE("closed form and level-set measures")
{
    auto c = load_config(fixture("nonrich_IIb_nontrivial"));
    auto job = build_job(c);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    auto sol = solver::solve(job.frame, job.chart, an, job.data, {5, 5, 5}, job.tol);
    CHECK(closed_form_error(sol, job, c.expected) < 1e-12);
    CHECK(level_spread(sol, job, "u3^2 - 2*u2") < 1e-12);
    // lambda1 is not a function of u2 alone
    CHECK(level_spread(sol, job, "u2") > 0.1);
    Expected off = c.expected;
    off.closed = {{"lambda1", "u2"}};
    CHECK(closed_form_error(sol, job, off) == doctest::Approx(0.32));
}

TEST_CASE("CSV written by solve verifies against its config")
{
    auto c = load_config(fixture("euler_nonrich"));
    auto job = build_job(c);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    std::vector<std::size_t> counts{7, 7, 7};
    auto sol = solver::solve(job.frame, job.chart, an, job.data, counts, job.tol, job.options);
    std::stringstream csv;
    solver::write_csv(csv, sol);
    auto table = solver::read_csv(csv);
    auto back = field_from_csv(table, job, counts, false);
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(back.lambda[i] == sol.lambda[i]);
    auto r = solver::verify(back, job.frame, an.report, job.tol);
    CHECK(r.curl == doctest::Approx(sol.residuals.curl));
    CHECK(r.passed());

    for (auto& row : table.rows)
        row[3] += 0.1 * row[1] * row[1];
    auto bad = field_from_csv(table, job, counts, false);
    CHECK_FALSE(solver::verify(bad, job.frame, an.report, job.tol).passed());

    CHECK_THROWS_AS(field_from_csv(table, job, {7, 7, 8}, false), Error);
    table.rows[5][0] += 0.01;
    CHECK_THROWS_AS(field_from_csv(table, job, counts, false), Error);
}

TEST_CASE("CSV on a Riemann-invariant grid")
{
    auto c = load_config(fixture("n2"));
    auto job = build_job(c);
    auto an = analysis::analyze(job.frame, job.chart, job.tol);
    REQUIRE(solves_in_w(job, an.report));
    auto sol = solver::solve(job.frame, job.chart, an, job.data, {9, 9}, job.tol);
    std::stringstream csv;
    solver::write_csv(csv, sol);
    auto back = field_from_csv(solver::read_csv(csv), job, {9, 9}, true);
    CHECK(back.in_w);
    CHECK(back.u == sol.u);
}

TEST_CASE("command line: exit codes")
{
    auto dir = scratch("exit");
    CHECK(run("analyze " + fixture("euler_nonrich").string()) == Ok);
    CHECK(run("analyze " + fixture("maximal_rank_n4").string()) == Ok);

    write_file(dir / "broken.cfg", "[frame]\nvars = x, y\nR1 = \"1\", \"0\"\n");
    CHECK(run("analyze " + (dir / "broken.cfg").string()) == ConfigFailure);
    CHECK(run("analyze " + (dir / "missing.cfg").string()) == ConfigFailure);
    CHECK(run("frobnicate") == ConfigFailure);

    write_file(dir / "n4.cfg", R"([frame]
vars = u1, u2, u3, u4
R1 = "0", "1", "0", "0"
R2 = "1", "0", "0", "0"
R3 = "u2", "u3", "1", "0"
R4 = "0", "0", "0", "1"
[domain]
lo = -1, -1, -1, -1
hi = 1, 1, 1, 1
base = 0, 0, 0, 0
)");
    CHECK(run("analyze " + (dir / "n4.cfg").string()) == Unclassified);

    write_file(dir / "rank.cfg", R"([frame]
vars = u1, u2, u3
R1 = "1", "0", "0"
R2 = "0", "1", "0"
R3 = "(u1 + sqrt(u1^2))*u2", "0", "1"
[domain]
lo = -1, -1, -1
hi = 1, 1, 1
base = 0, 0, 0
)");
    CHECK(run("analyze " + (dir / "rank.cfg").string()) == NonConstantRank);

    auto trivial = load_config(fixture("nonrich_IIa_trivial"));
    trivial.constants.clear();
    trivial.functions["lambda1"] = "t";
    write_file(dir / "trivial.cfg", effective_config(trivial));
    CHECK(run("solve " + (dir / "trivial.cfg").string() + " --out " + dir.string()) == NotSolvable);

    auto edge = load_config(fixture("n2"));
    edge.chart->lo[1] = 0.0;
    write_file(dir / "edge.cfg", effective_config(edge));
    CHECK(run("solve " + (dir / "edge.cfg").string() + " --grid 11,11 --out " + dir.string()) == IntegrationFailure);

    CHECK(run("solve " + fixture("euler_nonrich").string() + " --grid 5,5 --out " + dir.string()) ==
          ConfigFailure);
    CHECK(run("analyze " + fixture("euler_nonrich").string() + " --tol nonsense=1") == ConfigFailure);
}

TEST_CASE("command line: solve, verify, determinism")
{
    auto a = scratch("solve_a"), b = scratch("solve_b");
    auto cfg = fixture("rich_rank1").string();
    REQUIRE(run("solve " + cfg + " --grid 5,5,5 --seed 11 --out " + a.string()) == Ok);
    REQUIRE(run("solve " + cfg + " --grid 5,5,5 --seed 11 --out " + b.string()) == Ok);
    CHECK(read_file(a / "rich_rank1.json") == read_file(b / "rich_rank1.json"));
    CHECK(read_file(a / "rich_rank1.csv") == read_file(b / "rich_rank1.csv"));
    CHECK_FALSE(read_file(a / "rich_rank1.json").empty());

    auto eff = load_config(a / "rich_rank1.effective.cfg");
    CHECK(eff.counts == std::vector<std::size_t>{5, 5, 5});
    CHECK(eff.tol.seed == 11);

    auto csv = (a / "rich_rank1.csv").string();
    CHECK(run("verify " + csv + " " + (a / "rich_rank1.effective.cfg").string()) == Ok);
    CHECK(run("verify " + csv + " " + cfg + " --grid 5,5,5") == Ok);
    CHECK(run("verify " + csv + " " + cfg) == ConfigFailure);  // grid of the fixture differs

    // swap two eigenvalue columns: no longer a solution
    std::istringstream in(read_file(a / "rich_rank1.csv"));
    auto table = solver::read_csv(in);
    std::ostringstream out;
    out << "u1,u2,u3,lambda1,lambda2,lambda3,f1,f2,f3\n";
    for (auto row : table.rows) {
        std::swap(row[3], row[5]);
        for (std::size_t k = 0; k < row.size(); ++k)
            out << (k ? "," : "") << row[k];
        out << "\n";
    }
    write_file(a / "swapped.csv", out.str());
    CHECK(run("verify " + (a / "swapped.csv").string() + " " + cfg + " --grid 5,5,5") == IntegrationFailure);
}

TEST_CASE("command line: examples and the fixture directory override")
{
    CHECK(run("examples --all") == Ok);
    CHECK(run("examples rich_rank1") == Ok);
    CHECK(run("examples no_such_fixture") == ConfigFailure);

    auto dir = scratch("fixtures");
    auto c = load_config(fixture("euler_rich"));
    c.expected.rank = 2;
    write_file(dir / "wrong.cfg", effective_config(c));
    std::string env = "EIGENFRAME_EXAMPLES=" + dir.string() + " ";
    int status = std::system((env + EIGENFRAME_BIN + " examples --all > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(status) == ConfigFailure);
    fs::remove(dir / "wrong.cfg");
    fs::copy_file(fixture("euler_rich"), dir / "euler_rich.cfg");
    status = std::system((env + EIGENFRAME_BIN + " examples euler_rich > /dev/null 2>&1").c_str());
    CHECK(WEXITSTATUS(status) == Ok);
}
