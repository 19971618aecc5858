#include "eigenframe/expr.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace eigenframe::expr {

const char* op_name(Op op)
{
    switch (op) {
    case Op::Const: return "const";
    case Op::Var: return "var";
    case Op::Neg: return "neg";
    case Op::Sqrt: return "sqrt";
    case Op::Exp: return "exp";
    case Op::Ln: return "ln";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Tan: return "tan";
    case Op::Arctan: return "arctan";
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Div: return "/";
    case Op::Pow: return "^";
    }
    return "?";
}

bool is_unary(Op op) { return op >= Op::Neg && op <= Op::Arctan; }
bool is_binary(Op op) { return op >= Op::Add; }

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double c)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Const;
    n->value = c == 0.0 ? 0.0 : c;
    node_ = std::move(n);
}

Expr Expr::constant(double c) { return Expr(c); }

Expr Expr::variable(std::string name)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Var;
    n->name = std::move(name);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::make(Op op, std::vector<Expr> args)
{
    if (op == Op::Const || op == Op::Var)
        throw Error("Expr::make: leaf kind");
    if (args.size() != (is_unary(op) ? 1u : 2u))
        throw Error(std::string("Expr::make: wrong arity for ") + op_name(op));
    auto n = std::make_shared<Node>();
    n->op = op;
    n->args = std::move(args);
    return Expr(std::shared_ptr<const Node>(std::move(n)));
}

bool equal(const Expr& a, const Expr& b)
{
    if (a.get() == b.get())
        return true;
    if (a.op() != b.op())
        return false;
    switch (a.op()) {
    case Op::Const: return a.value() == b.value();
    case Op::Var: return a.name() == b.name();
    default: break;
    }
    for (std::size_t i = 0; i < a.args().size(); ++i)
        if (!equal(a.arg(i), b.arg(i)))
            return false;
    return true;
}

std::size_t node_count(const Expr& e)
{
    std::size_t n = 1;
    for (const auto& c : e.args())
        n += node_count(c);
    return n;
}

namespace {

bool finite(double v) { return std::isfinite(v); }

// Value of op on constants, or false when the operation is undefined.
bool fold_unary(Op op, double a, double& r)
{
    switch (op) {
    case Op::Neg: r = -a; break;
    case Op::Sqrt: if (a < 0) return false; r = std::sqrt(a); break;
    case Op::Exp: r = std::exp(a); break;
    case Op::Ln: if (a <= 0) return false; r = std::log(a); break;
    case Op::Sin: r = std::sin(a); break;
    case Op::Cos: r = std::cos(a); break;
    case Op::Tan: r = std::tan(a); break;
    case Op::Arctan: r = std::atan(a); break;
    default: return false;
    }
    return finite(r);
}

bool fold_binary(Op op, double a, double b, double& r)
{
    switch (op) {
    case Op::Add: r = a + b; break;
    case Op::Sub: r = a - b; break;
    case Op::Mul: r = a * b; break;
    case Op::Div: if (b == 0) return false; r = a / b; break;
    case Op::Pow:
        if (a < 0 && b != std::floor(b)) return false;
        if (a == 0 && b < 0) return false;
        r = std::pow(a, b);
        break;
    default: return false;
    }
    return finite(r);
}

}  // namespace

Expr neg(const Expr& a)
{
    if (a.is_const())
        return Expr(-a.value());
    if (a.op() == Op::Neg)
        return a.arg(0);
    if (a.op() == Op::Sub)
        return sub(a.arg(1), a.arg(0));
    return Expr::make(Op::Neg, {a});
}

Expr add(const Expr& a, const Expr& b)
{
    double r;
    if (a.is_const() && b.is_const() && fold_binary(Op::Add, a.value(), b.value(), r))
        return Expr(r);
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (b.op() == Op::Neg) return sub(a, b.arg(0));
    if (a.op() == Op::Neg) return sub(b, a.arg(0));
    return Expr::make(Op::Add, {a, b});
}

Expr sub(const Expr& a, const Expr& b)
{
    double r;
    if (a.is_const() && b.is_const() && fold_binary(Op::Sub, a.value(), b.value(), r))
        return Expr(r);
    if (b.is_zero()) return a;
    if (a.is_zero()) return neg(b);
    if (equal(a, b)) return Expr(0.0);
    if (b.op() == Op::Neg) return add(a, b.arg(0));
    return Expr::make(Op::Sub, {a, b});
}

Expr mul(const Expr& a, const Expr& b)
{
    double r;
    if (a.is_const() && b.is_const() && fold_binary(Op::Mul, a.value(), b.value(), r))
        return Expr(r);
    if (a.is_zero() || b.is_zero()) return Expr(0.0);
    if (a.is_const(1.0)) return b;
    if (b.is_const(1.0)) return a;
    if (a.is_const(-1.0)) return neg(b);
    if (b.is_const(-1.0)) return neg(a);
    if (a.op() == Op::Neg && b.op() == Op::Neg) return mul(a.arg(0), b.arg(0));
    return Expr::make(Op::Mul, {a, b});
}

Expr div(const Expr& a, const Expr& b)
{
    double r;
    if (a.is_const() && b.is_const() && fold_binary(Op::Div, a.value(), b.value(), r))
        return Expr(r);
    if (a.is_zero() && !b.is_zero()) return Expr(0.0);
    if (b.is_const(1.0)) return a;
    if (b.is_const(-1.0)) return neg(a);
    if (!b.is_zero() && equal(a, b)) return Expr(1.0);
    if (a.op() == Op::Neg && b.op() == Op::Neg) return div(a.arg(0), b.arg(0));
    return Expr::make(Op::Div, {a, b});
}

Expr pow(const Expr& a, const Expr& b)
{
    double r;
    if (a.is_const() && b.is_const() && fold_binary(Op::Pow, a.value(), b.value(), r))
        return Expr(r);
    if (b.is_const(1.0)) return a;
    if (b.is_zero()) return Expr(1.0);
    if (a.is_const(1.0)) return Expr(1.0);
    return Expr::make(Op::Pow, {a, b});
}

Expr apply(Op op, const Expr& a)
{
    if (op == Op::Neg)
        return neg(a);
    double r;
    if (a.is_const() && fold_unary(op, a.value(), r))
        return Expr(r);
    if (op == Op::Ln && a.op() == Op::Exp) return a.arg(0);
    return Expr::make(op, {a});
}

Expr sqrt(const Expr& a) { return apply(Op::Sqrt, a); }
Expr exp(const Expr& a) { return apply(Op::Exp, a); }
Expr ln(const Expr& a) { return apply(Op::Ln, a); }
Expr sin(const Expr& a) { return apply(Op::Sin, a); }
Expr cos(const Expr& a) { return apply(Op::Cos, a); }
Expr tan(const Expr& a) { return apply(Op::Tan, a); }
Expr arctan(const Expr& a) { return apply(Op::Arctan, a); }

namespace {

Expr rebuild(Op op, const Expr& a, const Expr& b)
{
    switch (op) {
    case Op::Add: return add(a, b);
    case Op::Sub: return sub(a, b);
    case Op::Mul: return mul(a, b);
    case Op::Div: return div(a, b);
    case Op::Pow: return pow(a, b);
    default: break;
    }
    throw Error("rebuild: not binary");
}

Expr simplify_memo(const Expr& e, std::unordered_map<const Node*, Expr>& memo)
{
    if (e.op() == Op::Const || e.op() == Op::Var)
        return e;
    if (auto it = memo.find(e.get()); it != memo.end())
        return it->second;
    Expr r;
    if (is_unary(e.op()))
        r = apply(e.op(), simplify_memo(e.arg(0), memo));
    else
        r = rebuild(e.op(), simplify_memo(e.arg(0), memo), simplify_memo(e.arg(1), memo));
    memo.emplace(e.get(), r);
    return r;
}

Expr subst_memo(const Expr& e, const std::map<std::string, Expr>& repl,
                std::unordered_map<const Node*, Expr>& memo)
{
    if (e.op() == Op::Const)
        return e;
    if (e.op() == Op::Var) {
        auto it = repl.find(e.name());
        return it == repl.end() ? e : it->second;
    }
    if (auto it = memo.find(e.get()); it != memo.end())
        return it->second;
    Expr r;
    if (is_unary(e.op()))
        r = apply(e.op(), subst_memo(e.arg(0), repl, memo));
    else
        r = rebuild(e.op(), subst_memo(e.arg(0), repl, memo), subst_memo(e.arg(1), repl, memo));
    memo.emplace(e.get(), r);
    return r;
}

void collect_vars(const Expr& e, std::set<std::string>& out, std::set<const Node*>& seen)
{
    if (!seen.insert(e.get()).second)
        return;
    if (e.op() == Op::Var)
        out.insert(e.name());
    for (const auto& c : e.args())
        collect_vars(c, out, seen);
}

}  // namespace

Expr simplify(const Expr& e)
{
    std::unordered_map<const Node*, Expr> memo;
    return simplify_memo(e, memo);
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& repl)
{
    std::unordered_map<const Node*, Expr> memo;
    return subst_memo(e, repl, memo);
}

std::vector<std::string> free_variables(const Expr& e)
{
    std::set<std::string> out;
    std::set<const Node*> seen;
    collect_vars(e, out, seen);
    return {out.begin(), out.end()};
}

Expr Differentiator::operator()(const Expr& e)
{
    switch (e.op()) {
    case Op::Const: return Expr(0.0);
    case Op::Var: return Expr(e.name() == var_ ? 1.0 : 0.0);
    default: break;
    }
    if (auto it = memo_.find(e.get()); it != memo_.end())
        return it->second;

    const Expr& a = e.arg(0);
    Expr da = (*this)(a);
    Expr r;
    switch (e.op()) {
    case Op::Neg: r = neg(da); break;
    case Op::Sqrt: r = div(da, mul(Expr(2.0), e)); break;
    case Op::Exp: r = mul(e, da); break;
    case Op::Ln: r = div(da, a); break;
    case Op::Sin: r = mul(cos(a), da); break;
    case Op::Cos: r = neg(mul(sin(a), da)); break;
    case Op::Tan: r = div(da, pow(cos(a), Expr(2.0))); break;
    case Op::Arctan: r = div(da, add(Expr(1.0), pow(a, Expr(2.0)))); break;
    default: {
        const Expr& b = e.arg(1);
        Expr db = (*this)(b);
        switch (e.op()) {
        case Op::Add: r = add(da, db); break;
        case Op::Sub: r = sub(da, db); break;
        case Op::Mul: r = add(mul(da, b), mul(a, db)); break;
        case Op::Div:
            if (db.is_zero())
                r = div(da, b);
            else
                r = div(sub(mul(da, b), mul(a, db)), pow(b, Expr(2.0)));
            break;
        case Op::Pow:
            if (db.is_zero()) {
                if (b.is_const())
                    r = mul(mul(b, pow(a, Expr(b.value() - 1.0))), da);
                else
                    r = mul(mul(b, pow(a, sub(b, Expr(1.0)))), da);
            } else if (da.is_zero()) {
                r = mul(mul(e, ln(a)), db);
            } else {
                r = mul(e, add(mul(db, ln(a)), div(mul(b, da), a)));
            }
            break;
        default: throw Error("differentiate: unknown node");
        }
    }
    }
    memo_.emplace(e.get(), r);
    keep_.push_back(e);
    return r;
}

Expr differentiate(const Expr& e, const std::string& var)
{
    Differentiator d(var);
    return d(e);
}

}  // namespace eigenframe::expr
