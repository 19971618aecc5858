#pragma once

#include <map>

#include "eigenframe/analysis.hpp"

namespace eigenframe::solver {

class IntegrationError : public Error {
public:
    using Error::Error;
};

// Requested solve that the case does not admit (trivial-only verdicts with
// non-constant data, missing chart, wrong data).
class NotSolvableError : public Error {
public:
    using Error::Error;
};

// Uniform tensor grid, row-major in declared axis order (last axis fastest).
struct Grid {
    std::vector<std::vector<double>> axes;
    std::vector<std::size_t> base;     // snapped base node
    std::vector<double> requested;     // base point before snapping

    static Grid uniform(const Box& box, const std::vector<std::size_t>& counts, const std::vector<double>& base);

    std::size_t dim() const { return axes.size(); }
    std::size_t size() const;
    std::size_t count(std::size_t a) const { return axes[a].size(); }
    std::size_t stride(std::size_t a) const;
    std::size_t flat(const std::vector<std::size_t>& idx) const;
    std::vector<std::size_t> multi(std::size_t flat) const;
    std::vector<double> point(std::size_t flat) const;
    std::vector<double> base_point() const;
    double spacing(std::size_t a) const { return axes[a][1] - axes[a][0]; }
};

// Constants are values at the base node.  Functions are in the single
// variable `t`: the parameter of the r_1 flow line (IIb) or the own
// coordinate w^j of kappa_j (rich).
struct InitialData {
    std::map<std::string, double> constants;
    std::map<std::string, Expr> functions;
};

struct Multiplicity {
    std::string label;  // e.g. "λ1=λ2"
    double deviation = 0.0;
    bool holds = false;
};

struct Residuals {
    double curl = 0.0;
    double eigen = 0.0;
    double curl_limit = 0.0;  // curl_tol scaled by |J| and by h^2 relative to 21 nodes per axis
    double eigen_limit = 0.0;
    double path = 0.0;        // flux: staircase order 1..n against n..1
    double relation = 0.0;    // algebraic relation of the case, on the grid
    double min_gap = 0.0;     // min over nodes of min_{i<j} |lambda^i - lambda^j|
    bool strict = false;
    std::vector<Multiplicity> forced;

    bool passed() const { return curl <= curl_limit && eigen <= eigen_limit; }
};

struct SolutionField {
    Grid grid;
    bool in_w = false;                          // grid coordinates are Riemann invariants
    std::vector<std::string> coords;
    std::vector<std::vector<double>> u;         // [node] state coordinates
    std::vector<std::vector<double>> lambda;    // [i][node], original labels
    std::vector<std::vector<double>> flux;      // [i][node]
    double integration_path_gap = 0.0;          // IIa: axis orders 1..n vs n..1
    double drift = 0.0;                         // quantities constant by construction
    Residuals residuals;
    std::string data_description;
};

struct SolveOptions {
    int substeps = 4;         // RK4 steps per cell
    double flow_margin = 0.25;  // IIb flows may leave the box by this fraction of a side
};

// Frobenius system of case IIa; the grid is in u.
SolutionField integrate_frobenius(const analysis::ReducedSystem& red, const std::vector<std::size_t>& perm,
                                  const InitialData& data, const Grid& grid, const Tolerances& tol,
                                  const SolveOptions& opt = {});

// Reduced system of case IIb; the grid is in u.
SolutionField integrate_IIb(const analysis::ReducedSystem& red, const InitialData& data, const Grid& grid,
                            const Tolerances& tol, const SolveOptions& opt = {});

// Darboux system of a rich frame; the grid is in the chart coordinates w.
SolutionField integrate_darboux(const analysis::ReducedSystem& red, const geometry::RiemannChart& chart,
                                const InitialData& data, const Grid& grid, const Tolerances& tol,
                                const SolveOptions& opt = {});

SolutionField constant_field(const geometry::Frame& frame, double value, const Grid& grid);

// Fills sol.flux with f(base) = 0 and records the gap to the reversed
// staircase in sol.residuals.path.
void reconstruct_flux(SolutionField& sol, const geometry::Frame& frame, const Tolerances& tol);

// Curl, eigen and hyperbolicity report; expects the flux.
Residuals verify(const SolutionField& sol, const geometry::Frame& frame, const analysis::CaseReport& report,
                 const Tolerances& tol);

// Chooses the integrator for the analysed case, then flux and verify.
SolutionField solve(const geometry::Frame& frame, const std::optional<geometry::RiemannChart>& chart,
                    const analysis::Analysis& analysis, const InitialData& data,
                    const std::vector<std::size_t>& counts, const Tolerances& tol, const SolveOptions& opt = {});

// I/O
void write_csv(std::ostream& os, const SolutionField& sol);
std::string report_json(const analysis::CaseReport& report, const SolutionField* sol);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv(std::istream& is);

}  // namespace eigenframe::solver
