#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "eigenframe/cli.hpp"

namespace eigenframe::cli {

namespace {

struct Item {
    std::string text;
    bool quoted = false;
};

struct Entry {
    std::string key;
    std::vector<Item> items;
    int line = 0;
};

std::string trim(const std::string& s)
{
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Comma separated items; quoted items may contain commas.  '#' starts a
// comment outside quotes.
std::vector<Item> split_items(const std::string& v, const std::string& src, int line)
{
    std::vector<Item> out;
    std::size_t k = 0;
    bool expect_item = true;
    while (k < v.size()) {
        char c = v[k];
        if (c == ' ' || c == '\t' || c == '\r') {
            ++k;
        } else if (c == '#') {
            break;
        } else if (c == ',') {
            if (expect_item)
                throw ConfigError(src, line, "empty list item");
            expect_item = true;
            ++k;
        } else {
            if (!expect_item)
                throw ConfigError(src, line, "missing ',' between list items");
            Item it;
            if (c == '"') {
                auto e = v.find('"', k + 1);
                if (e == std::string::npos)
                    throw ConfigError(src, line, "unterminated string");
                it.text = v.substr(k + 1, e - k - 1);
                it.quoted = true;
                k = e + 1;
            } else {
                auto e = v.find_first_of(",#", k);
                if (e == std::string::npos)
                    e = v.size();
                it.text = trim(v.substr(k, e - k));
                k = e;
            }
            out.push_back(std::move(it));
            expect_item = false;
        }
    }
    if (expect_item && !out.empty())
        throw ConfigError(src, line, "trailing ','");
    return out;
}

class Reader {
public:
    Reader(const std::string& src, const std::string& section, const Entry& e) : src_(src), sec_(section), e_(e) {}

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigError(src_, e_.line, "[" + sec_ + "] " + e_.key + ": " + msg);
    }

    const Item& single() const
    {
        if (e_.items.size() != 1)
            fail("expected a single value");
        return e_.items[0];
    }

    std::string text() const { return single().text; }

    std::string expression() const
    {
        if (!single().quoted)
            fail("expressions are quoted strings");
        return single().text;
    }

    std::vector<std::string> expressions() const
    {
        std::vector<std::string> out;
        for (const auto& it : e_.items) {
            if (!it.quoted)
                fail("expressions are quoted strings");
            out.push_back(it.text);
        }
        return out;
    }

    std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        for (const auto& it : e_.items) {
            if (it.quoted || it.text.empty())
                fail("expected bare names");
            out.push_back(it.text);
        }
        return out;
    }

    double number(const Item& it) const
    {
        if (it.quoted)
            fail("expected a number, got a string");
        double v = 0.0;
        const char* b = it.text.data();
        const char* e = b + it.text.size();
        if (b != e && *b == '+')
            ++b;
        auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc() || r.ptr != e)
            fail("'" + it.text + "' is not a number");
        return v;
    }

    double number() const { return number(single()); }

    std::vector<double> numbers() const
    {
        std::vector<double> out;
        for (const auto& it : e_.items)
            out.push_back(number(it));
        return out;
    }

    long long integer(const Item& it) const
    {
        long long v = 0;
        auto r = std::from_chars(it.text.data(), it.text.data() + it.text.size(), v);
        if (it.quoted || r.ec != std::errc() || r.ptr != it.text.data() + it.text.size())
            fail("'" + it.text + "' is not an integer");
        return v;
    }

    long long integer() const { return integer(single()); }

    bool boolean() const
    {
        auto t = text();
        if (t == "true" || t == "yes")
            return true;
        if (t == "false" || t == "no")
            return false;
        fail("expected true or false");
    }

private:
    const std::string& src_;
    const std::string& sec_;
    const Entry& e_;
};

const std::set<std::string> kSections = {"job",     "parameters", "frame",      "domain",   "chart",
                                         "grid",    "initial",    "tolerances", "expected", "output"};

void apply_tolerance(Tolerances& tol, const std::string& key, const std::function<double()>& num,
                     const std::function<long long()>& integer)
{
    if (key == "zero_tol")
        tol.zero_tol = num();
    else if (key == "rank_tol")
        tol.rank_tol = num();
    else if (key == "compat_tol")
        tol.compat_tol = num();
    else if (key == "path_tol")
        tol.path_tol = num();
    else if (key == "integ_tol")
        tol.integ_tol = num();
    else if (key == "curl_tol")
        tol.curl_tol = num();
    else if (key == "identity_tol")
        tol.identity_tol = num();
    else if (key == "chart_tol")
        tol.chart_tol = num();
    else if (key == "inverse_tol")
        tol.inverse_tol = num();
    else if (key == "samples")
        tol.samples = static_cast<int>(integer());
    else
        throw std::invalid_argument("unknown tolerance '" + key + "'");
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join_numbers(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

std::string join_quoted(const std::vector<std::string>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", \"" : "\"") + v[i] + "\"";
    return s;
}

std::string join_bare(const std::vector<std::string>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? ", " : "") + v[i];
    return s;
}

void validate(const JobConfig& c)
{
    const auto& L = c.lines;
    auto fail = [&](const std::string& key, const std::string& msg) {
        throw ConfigError(L.source, L.of(key), msg);
    };
    std::size_t n = c.n();
    if (n < 2)
        fail("frame.vars", "[frame] vars: at least two variables are needed");
    if (c.columns.size() != n)
        fail("frame.vars", "[frame] needs R1..R" + std::to_string(n));
    for (std::size_t i = 0; i < n; ++i)
        if (c.columns[i].size() != n)
            fail("frame.R" + std::to_string(i + 1), "[frame] R" + std::to_string(i + 1) + " needs " +
                                                        std::to_string(n) + " components");
    if (c.lo.size() != n || c.hi.size() != n)
        fail("domain.lo", "[domain] lo and hi need " + std::to_string(n) + " values");
    for (std::size_t i = 0; i < n; ++i)
        if (!(c.lo[i] < c.hi[i]))
            fail("domain.hi", "[domain] box is empty along " + c.vars[i]);
    if (c.base.size() != n)
        fail("domain.base", "[domain] base needs " + std::to_string(n) + " values");
    for (std::size_t i = 0; i < n; ++i)
        if (c.base[i] < c.lo[i] || c.base[i] > c.hi[i])
            fail("domain.base", "[domain] base point is outside the box");
    if (c.chart) {
        const auto& h = *c.chart;
        if (h.vars.size() != n || h.rho.size() != n || h.rho_inv.size() != n || h.lo.size() != n ||
            h.hi.size() != n || h.base.size() != n)
            fail("chart.vars", "[chart] vars, rho, rho_inv, lo, hi and base need " + std::to_string(n) + " entries");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(h.lo[i] < h.hi[i]))
                fail("chart.hi", "[chart] box is empty along " + h.vars[i]);
            if (h.base[i] < h.lo[i] || h.base[i] > h.hi[i])
                fail("chart.base", "[chart] base point is outside the box");
        }
    }
    if (!c.counts.empty()) {
        if (c.counts.size() != n)
            fail("grid.counts", "[grid] counts needs " + std::to_string(n) + " values");
        for (auto k : c.counts)
            if (k < 2)
                fail("grid.counts", "[grid] resolution must be at least 2");
    }
    if (c.substeps < 1)
        fail("grid.substeps", "[grid] substeps must be positive");
}

}  // namespace

void set_tolerance(Tolerances& tol, const std::string& key, const std::string& value)
{
    auto num = [&] {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument("bad number '" + value + "'");
        return v;
    };
    try {
        if (key == "seed")
            tol.seed = std::stoull(value);
        else
            apply_tolerance(tol, key, num, [&] { return std::stoll(value); });
    } catch (const std::logic_error& e) {
        throw ConfigError("--tol", 0, key + "=" + value + ": " + e.what());
    }
}

JobConfig parse_config(std::istream& is, const std::string& source)
{
    std::vector<std::pair<std::string, std::vector<Entry>>> sections;
    std::string line, current;
    int lineno = 0;
    std::set<std::string> seen_sections;
    while (std::getline(is, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';')
            continue;
        if (t[0] == '[') {
            auto e = t.find(']');
            if (e == std::string::npos || trim(t.substr(e + 1)).size() > 0)
                throw ConfigError(source, lineno, "malformed section header");
            current = trim(t.substr(1, e - 1));
            if (!kSections.count(current))
                throw ConfigError(source, lineno, "unknown section [" + current + "]");
            if (!seen_sections.insert(current).second)
                throw ConfigError(source, lineno, "section [" + current + "] appears twice");
            sections.push_back({current, {}});
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source, lineno, "expected 'key = value'");
        if (sections.empty())
            throw ConfigError(source, lineno, "key outside any [section]");
        Entry e;
        e.key = trim(t.substr(0, eq));
        e.line = lineno;
        if (e.key.empty())
            throw ConfigError(source, lineno, "empty key");
        e.items = split_items(t.substr(eq + 1), source, lineno);
        if (e.items.empty())
            throw ConfigError(source, lineno, "missing value for '" + e.key + "'");
        for (const auto& prev : sections.back().second)
            if (prev.key == e.key)
                throw ConfigError(source, lineno, "duplicate key '" + e.key + "'");
        sections.back().second.push_back(std::move(e));
    }

    JobConfig c;
    c.lines.source = source;
    std::map<std::size_t, std::vector<std::string>> cols;
    bool has_vars = false;
    for (const auto& [sec, entries] : sections) {
        if (sec == "chart")
            c.chart.emplace();
        for (const auto& e : entries) {
            Reader r(source, sec, e);
            c.lines.at[sec + "." + e.key] = e.line;
            const auto& k = e.key;
            if (sec == "job") {
                if (k == "name")
                    c.name = r.text();
                else if (k == "description")
                    c.description = r.text();
                else if (k == "seed")
                    c.tol.seed = static_cast<std::uint64_t>(r.integer());
                else
                    r.fail("unknown key");
            } else if (sec == "parameters") {
                if (k == "pressure")
                    c.pressure = r.expression();
                else
                    c.parameters.push_back({k, r.expression()});
            } else if (sec == "frame") {
                if (k == "vars") {
                    c.vars = r.names();
                    has_vars = true;
                } else if (k.size() > 1 && k[0] == 'R' && k.find_first_not_of("0123456789", 1) == std::string::npos) {
                    std::size_t i = std::stoul(k.substr(1));
                    if (i == 0)
                        r.fail("columns are numbered from 1");
                    cols[i - 1] = r.expressions();
                } else {
                    r.fail("unknown key");
                }
            } else if (sec == "domain") {
                if (k == "lo")
                    c.lo = r.numbers();
                else if (k == "hi")
                    c.hi = r.numbers();
                else if (k == "base")
                    c.base = r.numbers();
                else
                    r.fail("unknown key");
            } else if (sec == "chart") {
                auto& h = *c.chart;
                if (k == "vars")
                    h.vars = r.names();
                else if (k == "rho")
                    h.rho = r.expressions();
                else if (k == "rho_inv")
                    h.rho_inv = r.expressions();
                else if (k == "lo")
                    h.lo = r.numbers();
                else if (k == "hi")
                    h.hi = r.numbers();
                else if (k == "base")
                    h.base = r.numbers();
                else
                    r.fail("unknown key");
            } else if (sec == "grid") {
                if (k == "counts") {
                    for (const auto& it : e.items) {
                        auto v = r.integer(it);
                        if (v < 2)
                            r.fail("resolution must be at least 2");
                        c.counts.push_back(static_cast<std::size_t>(v));
                    }
                } else if (k == "substeps") {
                    c.substeps = static_cast<int>(r.integer());
                } else if (k == "flow_margin") {
                    c.flow_margin = r.number();
                } else {
                    r.fail("unknown key");
                }
            } else if (sec == "initial") {
                auto open = k.find('(');
                if (k == "variable") {
                    c.param = r.text();
                } else if (open != std::string::npos) {
                    if (k.back() != ')')
                        r.fail("function keys look like name(t)");
                    auto var = trim(k.substr(open + 1, k.size() - open - 2));
                    if (var != c.param)
                        r.fail("parameter variable '" + var + "' differs from declared '" + c.param + "'");
                    c.functions[trim(k.substr(0, open))] = r.expression();
                } else if (r.single().quoted) {
                    c.constant_exprs[k] = r.expression();
                } else {
                    c.constants[k] = r.number();
                }
            } else if (sec == "tolerances") {
                try {
                    apply_tolerance(c.tol, k, [&] { return r.number(); }, [&] { return r.integer(); });
                } catch (const std::invalid_argument&) {
                    r.fail("unknown tolerance");
                }
            } else if (sec == "expected") {
                auto& x = c.expected;
                if (k == "origin") {
                    x.origin = r.text();
                    if (x.origin != "published" && x.origin != "trivial" && x.origin != "derived")
                        r.fail("origin is published, trivial or derived");
                } else if (k == "case") {
                    x.label = r.text();
                } else if (k == "rank") {
                    x.rank = static_cast<int>(r.integer());
                } else if (k == "relation") {
                    x.relation = r.text();
                } else if (k == "compat") {
                    x.compat = r.text();
                    if (x.compat != "holds" && x.compat != "fails")
                        r.fail("compat is holds or fails");
                } else if (k == "family") {
                    x.family = r.text();
                } else if (k == "index_sets") {
                    x.index_sets = r.text();
                } else if (k == "forced") {
                    for (const auto& it : e.items)
                        x.forced.push_back(it.text);
                } else if (k.rfind("lambda", 0) == 0) {
                    x.closed[k] = r.expression();
                } else if (k == "error") {
                    x.error = r.number();
                } else if (k == "level") {
                    x.level = r.expression();
                } else if (k == "level_tol") {
                    x.level_tol = r.number();
                } else if (k == "constant") {
                    x.constant = r.names();
                } else if (k == "constant_tol") {
                    x.constant_tol = r.number();
                } else if (k == "convergence") {
                    x.convergence = r.boolean();
                } else {
                    r.fail("unknown key");
                }
            } else if (sec == "output") {
                if (k == "dir")
                    c.out_dir = r.text();
                else if (k == "csv")
                    c.csv = r.text();
                else if (k == "json")
                    c.json = r.text();
                else
                    r.fail("unknown key");
            }
        }
    }
    if (!has_vars)
        throw ConfigError(source, lineno, "[frame] vars is missing");
    for (const auto& [i, col] : cols) {
        if (i >= c.n())
            throw ConfigError(source, c.lines.of("frame.R" + std::to_string(i + 1)),
                              "[frame] R" + std::to_string(i + 1) + " exceeds the dimension");
        c.columns.resize(c.n());
        c.columns[i] = col;
    }
    if (c.name.empty())
        c.name = "job";
    validate(c);
    return c;
}

JobConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), 0, "cannot open");
    return parse_config(in, path.string());
}

std::string effective_config(const JobConfig& c)
{
    std::ostringstream o;
    o << "[job]\nname = " << c.name << "\n";
    if (!c.description.empty())
        o << "description = \"" << c.description << "\"\n";
    o << "seed = " << c.tol.seed << "\n";
    if (!c.pressure.empty() || !c.parameters.empty()) {
        o << "\n[parameters]\n";
        if (!c.pressure.empty())
            o << "pressure = \"" << c.pressure << "\"\n";
        for (const auto& [k, v] : c.parameters)
            o << k << " = \"" << v << "\"\n";
    }
    o << "\n[frame]\nvars = " << join_bare(c.vars) << "\n";
    for (std::size_t i = 0; i < c.columns.size(); ++i)
        o << "R" << i + 1 << " = " << join_quoted(c.columns[i]) << "\n";
    o << "\n[domain]\nlo = " << join_numbers(c.lo) << "\nhi = " << join_numbers(c.hi)
      << "\nbase = " << join_numbers(c.base) << "\n";
    if (c.chart) {
        const auto& h = *c.chart;
        o << "\n[chart]\nvars = " << join_bare(h.vars) << "\nrho = " << join_quoted(h.rho)
          << "\nrho_inv = " << join_quoted(h.rho_inv) << "\nlo = " << join_numbers(h.lo)
          << "\nhi = " << join_numbers(h.hi) << "\nbase = " << join_numbers(h.base) << "\n";
    }
    o << "\n[grid]\n";
    if (!c.counts.empty()) {
        o << "counts = ";
        for (std::size_t i = 0; i < c.counts.size(); ++i)
            o << (i ? ", " : "") << c.counts[i];
        o << "\n";
    }
    o << "substeps = " << c.substeps << "\nflow_margin = " << fmt(c.flow_margin) << "\n";
    o << "\n[initial]\nvariable = " << c.param << "\n";
    for (const auto& [k, v] : c.constants)
        o << k << " = " << fmt(v) << "\n";
    for (const auto& [k, v] : c.constant_exprs)
        o << k << " = \"" << v << "\"\n";
    for (const auto& [k, v] : c.functions)
        o << k << "(" << c.param << ") = \"" << v << "\"\n";
    const auto& t = c.tol;
    o << "\n[tolerances]\nzero_tol = " << fmt(t.zero_tol) << "\nrank_tol = " << fmt(t.rank_tol)
      << "\ncompat_tol = " << fmt(t.compat_tol) << "\npath_tol = " << fmt(t.path_tol)
      << "\ninteg_tol = " << fmt(t.integ_tol) << "\ncurl_tol = " << fmt(t.curl_tol)
      << "\nidentity_tol = " << fmt(t.identity_tol) << "\nchart_tol = " << fmt(t.chart_tol)
      << "\ninverse_tol = " << fmt(t.inverse_tol) << "\nsamples = " << t.samples << "\n";
    const auto& x = c.expected;
    o << "\n[expected]\n";
    if (!x.origin.empty())
        o << "origin = " << x.origin << "\n";
    if (!x.label.empty())
        o << "case = " << x.label << "\n";
    if (x.rank)
        o << "rank = " << *x.rank << "\n";
    if (!x.relation.empty())
        o << "relation = " << x.relation << "\n";
    if (!x.compat.empty())
        o << "compat = " << x.compat << "\n";
    if (!x.family.empty())
        o << "family = \"" << x.family << "\"\n";
    if (!x.index_sets.empty())
        o << "index_sets = \"" << x.index_sets << "\"\n";
    if (!x.forced.empty())
        o << "forced = " << join_bare(x.forced) << "\n";
    for (const auto& [k, v] : x.closed)
        o << k << " = \"" << v << "\"\n";
    o << "error = " << fmt(x.error) << "\n";
    if (!x.level.empty())
        o << "level = \"" << x.level << "\"\n";
    o << "level_tol = " << fmt(x.level_tol) << "\n";
    if (!x.constant.empty())
        o << "constant = " << join_bare(x.constant) << "\n";
    o << "constant_tol = " << fmt(x.constant_tol) << "\nconvergence = " << (x.convergence ? "true" : "false")
      << "\n";
    o << "\n[output]\ndir = " << c.out_dir << "\n";
    if (!c.csv.empty())
        o << "csv = " << c.csv << "\n";
    if (!c.json.empty())
        o << "json = " << c.json << "\n";
    return o.str();
}

}  // namespace eigenframe::cli
