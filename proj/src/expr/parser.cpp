#include "eigenframe/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

namespace eigenframe::expr {

namespace {

struct FunctionInfo {
    const char* name;
    Op op;
};

constexpr FunctionInfo kFunctions[] = {
    {"sqrt", Op::Sqrt}, {"exp", Op::Exp}, {"ln", Op::Ln}, {"sin", Op::Sin},
    {"cos", Op::Cos}, {"tan", Op::Tan}, {"arctan", Op::Arctan},
};

class Parser {
public:
    Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

    Expr run()
    {
        Expr e = expr();
        skip();
        if (pos_ != s_.size())
            throw ParseError(std::string("unexpected '") + s_[pos_] + "'", pos_);
        return e;
    }

private:
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c)
    {
        if (!accept(c)) {
            if (pos_ >= s_.size())
                throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr expr()
    {
        Expr e = term();
        for (;;) {
            if (accept('+'))
                e = Expr::make(Op::Add, {e, term()});
            else if (accept('-'))
                e = Expr::make(Op::Sub, {e, term()});
            else
                return e;
        }
    }

    Expr term()
    {
        Expr e = factor();
        for (;;) {
            if (accept('*'))
                e = Expr::make(Op::Mul, {e, factor()});
            else if (accept('/'))
                e = Expr::make(Op::Div, {e, factor()});
            else
                return e;
        }
    }

    Expr factor()
    {
        skip();
        if (accept('-')) {
            Expr f = factor();
            if (f.is_const())
                return Expr::constant(-f.value());
            return Expr::make(Op::Neg, {f});
        }
        Expr b = base();
        if (accept('^'))
            return Expr::make(Op::Pow, {b, factor()});
        return b;
    }

    Expr base()
    {
        skip();
        if (pos_ >= s_.size())
            throw ParseError("unexpected end of input", pos_);
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
            return identifier();
        if (accept('(')) {
            Expr e = expr();
            expect(')');
            return e;
        }
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    Expr number()
    {
        std::size_t start = pos_;
        auto digits = [&] {
            std::size_t n = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
                ++n;
            }
            return n;
        };
        std::size_t n = digits();
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            n += digits();
        }
        if (n == 0)
            throw ParseError("malformed number", start);
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_;
            ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-'))
                ++pos_;
            if (digits() == 0)
                pos_ = save;
        }
        std::string text = s_.substr(start, pos_ - start);
        return Expr::constant(std::strtod(text.c_str(), nullptr));
    }

    Expr identifier()
    {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        std::string id = s_.substr(start, pos_ - start);
        if (accept('(')) {
            const FunctionInfo* fn = nullptr;
            for (const auto& f : kFunctions)
                if (id == f.name)
                    fn = &f;
            if (!fn)
                throw ParseError("unknown function '" + id + "'", start);
            std::vector<Expr> args{expr()};
            while (accept(','))
                args.push_back(expr());
            expect(')');
            if (args.size() != 1)
                throw ParseError("function '" + id + "' takes 1 argument, got " +
                                     std::to_string(args.size()),
                                 start);
            return Expr::make(fn->op, {args[0]});
        }
        if (std::find(vars_.begin(), vars_.end(), id) == vars_.end())
            throw ParseError("unknown identifier '" + id + "'", start);
        return Expr::variable(id);
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    std::size_t pos_ = 0;
};

int precedence(const Expr& e)
{
    switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const: return e.value() < 0 ? 3 : 5;
    default: return 5;
    }
}

std::string number_text(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    // Prefer the shortest representation that round-trips.
    for (int p = 1; p < 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) {
            s = buf;
            break;
        }
    }
    return s;
}

void print(const Expr& e, std::string& out);

void wrapped(const Expr& e, bool paren, std::string& out)
{
    if (paren)
        out += '(';
    print(e, out);
    if (paren)
        out += ')';
}

void print(const Expr& e, std::string& out)
{
    switch (e.op()) {
    case Op::Const: out += number_text(e.value()); return;
    case Op::Var: out += e.name(); return;
    case Op::Neg:
        out += '-';
        wrapped(e.arg(0), precedence(e.arg(0)) < 4, out);
        return;
    default: break;
    }
    if (is_unary(e.op())) {
        out += op_name(e.op());
        out += '(';
        print(e.arg(0), out);
        out += ')';
        return;
    }
    int p = precedence(e);
    const Expr& a = e.arg(0);
    const Expr& b = e.arg(1);
    int pa = precedence(a), pb = precedence(b);
    bool pow = e.op() == Op::Pow;
    wrapped(a, pa == 3 || (pow ? pa <= p : pa < p), out);
    switch (e.op()) {
    case Op::Add: out += " + "; break;
    case Op::Sub: out += " - "; break;
    case Op::Mul: out += '*'; break;
    case Op::Div: out += '/'; break;
    default: out += '^'; break;
    }
    wrapped(b, pb == 3 || (pow ? pb < p : pb <= p), out);
}

}  // namespace

Expr parse(const std::string& text, const std::vector<std::string>& vars)
{
    return Parser(text, vars).run();
}

std::string to_string(const Expr& e)
{
    std::string out;
    print(e, out);
    return out;
}

}  // namespace eigenframe::expr
