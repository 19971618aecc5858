#include "eigenframe/expr.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <tuple>

namespace eigenframe::expr {

namespace {

[[noreturn]] void domain_error(const char* what, const Node* src)
{
    std::string text = "?";
    if (src) {
        // Rebuild a handle so the printer can be reused.
        Expr e = Expr::make(src->op, src->args);
        text = to_string(e);
    }
    throw EvalError(what, text);
}

[[noreturn]] void domain_error_leaf(const char* what, const std::string& text)
{
    throw EvalError(what, text);
}

double apply_unary(Op op, double a, const Node* src)
{
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sqrt:
        if (a < 0) domain_error("square root of negative value", src);
        return std::sqrt(a);
    case Op::Exp: return std::exp(a);
    case Op::Ln:
        if (a <= 0) domain_error("logarithm of non-positive value", src);
        return std::log(a);
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Tan: return std::tan(a);
    case Op::Arctan: return std::atan(a);
    default: break;
    }
    return 0.0;
}

double apply_binary(Op op, double a, double b, const Node* src)
{
    switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
        if (b == 0) domain_error("division by zero", src);
        return a / b;
    case Op::Pow:
        if (a < 0 && b != std::floor(b)) domain_error("non-integer power of negative value", src);
        if (a == 0 && b < 0) domain_error("negative power of zero", src);
        if (b == 2.0) return a * a;
        return std::pow(a, b);
    default: break;
    }
    return 0.0;
}

}  // namespace

double evaluate(const Expr& e, const Point& at)
{
    switch (e.op()) {
    case Op::Const: return e.value();
    case Op::Var:
        for (const auto& [n, v] : at)
            if (n == e.name())
                return v;
        domain_error_leaf("unbound variable", e.name());
    default: break;
    }
    double r;
    if (is_unary(e.op()))
        r = apply_unary(e.op(), evaluate(e.arg(0), at), e.get());
    else
        r = apply_binary(e.op(), evaluate(e.arg(0), at), evaluate(e.arg(1), at), e.get());
    if (!std::isfinite(r))
        domain_error("non-finite value", e.get());
    return r;
}

Evaluator::Evaluator(std::span<const Expr> exprs, const std::vector<std::string>& vars)
    : keep_(exprs.begin(), exprs.end()), nvars_(vars.size())
{
    using Key = std::tuple<int, std::uint64_t, std::uint32_t, std::uint32_t>;
    std::map<Key, std::uint32_t> dedupe;
    std::unordered_map<const Node*, std::uint32_t> slot_of;

    auto emit = [&](Instr ins, Key key) {
        auto [it, fresh] = dedupe.emplace(key, static_cast<std::uint32_t>(prog_.size()));
        if (fresh)
            prog_.push_back(ins);
        return it->second;
    };

    // Iterative post-order so deep trees do not exhaust the stack.
    auto compile = [&](const Expr& root) {
        std::vector<std::pair<const Expr*, bool>> stack{{&root, false}};
        while (!stack.empty()) {
            auto [e, expanded] = stack.back();
            stack.pop_back();
            if (slot_of.count(e->get()))
                continue;
            if (!expanded && !e->args().empty()) {
                stack.push_back({e, true});
                for (const auto& c : e->args())
                    stack.push_back({&c, false});
                continue;
            }
            Instr ins;
            ins.op = e->op();
            ins.src = e->get();
            Key key;
            if (e->op() == Op::Const) {
                ins.value = e->value();
                key = {0, std::bit_cast<std::uint64_t>(e->value()), 0, 0};
            } else if (e->op() == Op::Var) {
                auto it = std::find(vars.begin(), vars.end(), e->name());
                if (it == vars.end())
                    throw Error("Evaluator: unbound variable '" + e->name() + "'");
                ins.a = static_cast<std::uint32_t>(it - vars.begin());
                key = {1, ins.a, 0, 0};
            } else {
                ins.a = slot_of.at(e->arg(0).get());
                if (e->args().size() > 1)
                    ins.b = slot_of.at(e->arg(1).get());
                key = {static_cast<int>(e->op()) + 2, 0, ins.a, ins.b};
            }
            slot_of[e->get()] = emit(ins, key);
        }
        return slot_of.at(root.get());
    };

    for (const auto& e : keep_)
        outputs_.push_back(compile(e));
}

void Evaluator::eval(std::span<const double> x, std::span<double> out) const
{
    thread_local std::vector<double> reg;
    reg.resize(prog_.size());
    for (std::size_t i = 0; i < prog_.size(); ++i) {
        const Instr& p = prog_[i];
        double r;
        switch (p.op) {
        case Op::Const: r = p.value; break;
        case Op::Var: r = x[p.a]; break;
        case Op::Add: r = reg[p.a] + reg[p.b]; break;
        case Op::Sub: r = reg[p.a] - reg[p.b]; break;
        case Op::Mul: r = reg[p.a] * reg[p.b]; break;
        default:
            if (is_unary(p.op))
                r = apply_unary(p.op, reg[p.a], p.src);
            else
                r = apply_binary(p.op, reg[p.a], reg[p.b], p.src);
            if (!std::isfinite(r))
                domain_error("non-finite value", p.src);
            break;
        }
        reg[i] = r;
    }
    for (std::size_t k = 0; k < outputs_.size(); ++k)
        out[k] = reg[outputs_[k]];
}

std::vector<double> Evaluator::operator()(std::span<const double> x) const
{
    std::vector<double> out(outputs_.size());
    eval(x, out);
    return out;
}

}  // namespace eigenframe::expr
