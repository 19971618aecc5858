#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eigenframe/solver.hpp"

namespace eigenframe::solver {

void write_csv(std::ostream& os, const SolutionField& sol)
{
    std::size_t n = sol.lambda.size();
    for (const char* col : {"u", "lambda", "f"})
        for (std::size_t i = 0; i < n; ++i)
            os << (col[0] == 'u' && i == 0 ? "" : ",") << col << i + 1;
    os << '\n';
    char buf[40];
    for (std::size_t node = 0; node < sol.u.size(); ++node) {
        std::string line;
        auto put = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            if (!line.empty())
                line += ',';
            line += buf;
        };
        for (std::size_t i = 0; i < n; ++i)
            put(sol.u[node][i]);
        for (std::size_t i = 0; i < n; ++i)
            put(sol.lambda[i][node]);
        for (std::size_t i = 0; i < n; ++i)
            put(sol.flux.size() == n ? sol.flux[i][node] : 0.0);
        os << line << '\n';
    }
}

std::string report_json(const analysis::CaseReport& report, const SolutionField* sol)
{
    nlohmann::json j;
    j["case"] = to_string(report.label);
    j["rank"] = report.rank;
    j["family"] = report.family;
    if (sol) {
        const auto& r = sol->residuals;
        j["residuals"] = {{"curl", r.curl}, {"eigen", r.eigen}};
        nlohmann::json forced = nlohmann::json::array();
        for (const auto& m : r.forced)
            forced.push_back({{"multiplicity", m.label}, {"deviation", m.deviation}, {"holds", m.holds}});
        j["hyperbolicity"] = {{"strict", r.strict}, {"min_gap", r.min_gap}, {"forced", forced}};
    } else {
        j["residuals"] = nullptr;
        nlohmann::json forced = nlohmann::json::array();
        for (const auto& f : report.forced)
            forced.push_back({{"multiplicity", f}});
        j["hyperbolicity"] = {{"forced", forced}};
    }
    return j.dump(2);
}

CsvTable read_csv(std::istream& is)
{
    CsvTable t;
    std::string line;
    if (!std::getline(is, line))
        throw Error("csv: empty input");
    std::stringstream hs(line);
    for (std::string cell; std::getline(hs, cell, ',');)
        t.header.push_back(cell);
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty())
            continue;
        std::vector<double> vals;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw Error("csv: bad number '" + cell + "' on line " + std::to_string(row));
            }
        }
        if (vals.size() != t.header.size())
            throw Error("csv: line " + std::to_string(row) + " has " + std::to_string(vals.size()) + " fields");
        t.rows.push_back(std::move(vals));
    }
    return t;
}

}  // namespace eigenframe::solver
