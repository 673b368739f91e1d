#pragma once

// Small arithmetic-expression language used for model coefficients in config
// files and for polynomial input on the command line.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//
// Variables: t, x, a1, a2 (a is an alias of a1), m1, m2, ...
// Functions: tanh exp log sqrt abs sin cos sigmoid (1 arg), min max (2 args).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mvjump/error.hpp"
#include "mvjump/symbolic.hpp"

namespace mvjump {

// Values bound to the expression variables during evaluation.
struct Bindings {
    double t = 0.0;
    double x = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    std::span<const double> m;  // m[k-1] is the value of m<k>
};

class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view text) {
        Parser p{text, 0};
        Expression e;
        e.source_ = std::string(text);
        e.root_ = p.parse_expr();
        p.skip_ws();
        if (p.pos != text.size()) throw ParseError(p.pos, "unexpected '" + std::string(1, text[p.pos]) + "'");
        return e;
    }

    [[nodiscard]] const std::string& source() const noexcept { return source_; }
    [[nodiscard]] bool empty() const noexcept { return !root_; }

    [[nodiscard]] double evaluate(const Bindings& b) const {
        if (!root_) return 0.0;
        return eval(*root_, b);
    }

    // Variable names referenced anywhere in the expression.
    [[nodiscard]] std::set<std::string> variables() const {
        std::set<std::string> out;
        if (root_) collect(*root_, out);
        return out;
    }

    // Largest k such that m<k> occurs (0 if none).
    [[nodiscard]] int max_moment_index() const {
        int k = 0;
        for (const auto& v : variables()) {
            if (v.size() > 1 && v[0] == 'm') k = std::max(k, std::stoi(v.substr(1)));
        }
        return k;
    }

    // Exact conversion to a Polynomial in x with coefficients in Q[m].
    // Throws ParseError (with the offending position) when the expression is
    // not a polynomial: functions, t/a variables, division by non-constants,
    // non-integer powers.
    [[nodiscard]] Polynomial to_polynomial() const {
        if (!root_) return {};
        return poly(*root_);
    }

private:
    struct Node;
    using NodePtr = std::shared_ptr<const Node>;

    struct Number {
        double value;
        Rational exact;
    };
    struct Variable {
        std::string name;
    };
    struct Unary {
        char op;
        NodePtr arg;
    };
    struct Binary {
        char op;
        NodePtr lhs, rhs;
    };
    struct Call {
        std::string name;
        std::vector<NodePtr> args;
    };
    struct Node {
        std::size_t pos;
        std::variant<Number, Variable, Unary, Binary, Call> v;
    };

    struct Parser {
        std::string_view s;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool accept(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        NodePtr parse_expr() {
            NodePtr lhs = parse_term();
            for (;;) {
                skip_ws();
                std::size_t at = pos;
                if (accept('+')) lhs = make(at, Binary{'+', lhs, parse_term()});
                else if (accept('-')) lhs = make(at, Binary{'-', lhs, parse_term()});
                else return lhs;
            }
        }
        NodePtr parse_term() {
            NodePtr lhs = parse_unary();
            for (;;) {
                skip_ws();
                std::size_t at = pos;
                if (accept('*')) lhs = make(at, Binary{'*', lhs, parse_unary()});
                else if (accept('/')) lhs = make(at, Binary{'/', lhs, parse_unary()});
                else return lhs;
            }
        }
        NodePtr parse_unary() {
            skip_ws();
            std::size_t at = pos;
            if (accept('-')) return make(at, Unary{'-', parse_unary()});
            if (accept('+')) return parse_unary();
            return parse_power();
        }
        NodePtr parse_power() {
            NodePtr base = parse_primary();
            skip_ws();
            std::size_t at = pos;
            if (accept('^')) return make(at, Binary{'^', base, parse_unary()});
            return base;
        }
        NodePtr parse_primary() {
            skip_ws();
            if (pos >= s.size()) throw ParseError(pos, "unexpected end of input");
            std::size_t at = pos;
            char c = s[pos];
            if (c == '(') {
                ++pos;
                NodePtr e = parse_expr();
                if (!accept(')')) throw ParseError(pos, "expected ')'");
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                std::string name(s.substr(start, pos - start));
                skip_ws();
                if (pos < s.size() && s[pos] == '(') {
                    ++pos;
                    Call call{name, {}};
                    call.args.push_back(parse_expr());
                    while (accept(',')) call.args.push_back(parse_expr());
                    if (!accept(')')) throw ParseError(pos, "expected ')' after arguments of " + name);
                    check_call(at, call);
                    return make(at, std::move(call));
                }
                check_variable(at, name);
                return make(at, Variable{name});
            }
            throw ParseError(pos, "unexpected '" + std::string(1, c) + "'");
        }
        NodePtr parse_number() {
            std::size_t start = pos;
            std::string mantissa;
            int frac_digits = 0;
            bool seen_dot = false;
            while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.')) {
                if (s[pos] == '.') {
                    if (seen_dot) throw ParseError(pos, "malformed number");
                    seen_dot = true;
                } else {
                    mantissa += s[pos];
                    if (seen_dot) ++frac_digits;
                }
                ++pos;
            }
            if (mantissa.empty()) throw ParseError(start, "malformed number");
            long exponent = 0;
            if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
                std::size_t epos = pos++;
                bool neg = false;
                if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) neg = s[pos++] == '-';
                std::string digits;
                while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) digits += s[pos++];
                if (digits.empty()) throw ParseError(epos, "malformed exponent");
                exponent = std::stol(digits) * (neg ? -1 : 1);
            }
            exponent -= frac_digits;
            mpz_class num(mantissa, 10);
            mpz_class scale;
            mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exponent)));
            Rational exact = exponent >= 0 ? Rational(num * scale) : Rational(num, scale);
            exact.canonicalize();
            return make(start, Number{exact.get_d(), exact});
        }

        static void check_variable(std::size_t at, const std::string& n) {
            if (n == "t" || n == "x" || n == "a" || n == "a1" || n == "a2") return;
            if (n.size() > 1 && n[0] == 'm' &&
                std::all_of(n.begin() + 1, n.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
                n[1] != '0')
                return;
            throw ParseError(at, "unknown variable '" + n + "'");
        }
        static void check_call(std::size_t at, const Call& c) {
            static const std::set<std::string> unary = {"tanh", "exp", "log", "sqrt", "abs", "sin", "cos", "sigmoid"};
            static const std::set<std::string> binary = {"min", "max"};
            if (unary.count(c.name)) {
                if (c.args.size() != 1) throw ParseError(at, c.name + " takes 1 argument");
            } else if (binary.count(c.name)) {
                if (c.args.size() != 2) throw ParseError(at, c.name + " takes 2 arguments");
            } else {
                throw ParseError(at, "unknown function '" + c.name + "'");
            }
        }
        template <class T>
        NodePtr make(std::size_t at, T&& v) {
            return std::make_shared<const Node>(Node{at, std::forward<T>(v)});
        }
    };

    static double eval(const Node& n, const Bindings& b) {
        return std::visit(
            [&](const auto& v) -> double {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Number>) {
                    return v.value;
                } else if constexpr (std::is_same_v<T, Variable>) {
                    const std::string& name = v.name;
                    if (name == "t") return b.t;
                    if (name == "x") return b.x;
                    if (name == "a" || name == "a1") return b.a1;
                    if (name == "a2") return b.a2;
                    std::size_t k = std::stoul(name.substr(1));
                    if (k > b.m.size()) throw MissingMomentError(static_cast<int>(k), static_cast<int>(b.m.size()));
                    return b.m[k - 1];
                } else if constexpr (std::is_same_v<T, Unary>) {
                    return -eval(*v.arg, b);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    double l = eval(*v.lhs, b);
                    double r = eval(*v.rhs, b);
                    switch (v.op) {
                        case '+': return l + r;
                        case '-': return l - r;
                        case '*': return l * r;
                        case '/': return l / r;
                        default: return std::pow(l, r);
                    }
                } else {
                    double a0 = eval(*v.args[0], b);
                    const std::string& f = v.name;
                    if (f == "min") return std::min(a0, eval(*v.args[1], b));
                    if (f == "max") return std::max(a0, eval(*v.args[1], b));
                    if (f == "tanh") return std::tanh(a0);
                    if (f == "exp") return std::exp(a0);
                    if (f == "log") return std::log(a0);
                    if (f == "sqrt") return std::sqrt(a0);
                    if (f == "abs") return std::fabs(a0);
                    if (f == "sin") return std::sin(a0);
                    if (f == "cos") return std::cos(a0);
                    return 1.0 / (1.0 + std::exp(-a0));  // sigmoid
                }
            },
            n.v);
    }

    static void collect(const Node& n, std::set<std::string>& out) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Variable>) {
                    out.insert(v.name == "a" ? "a1" : v.name);
                } else if constexpr (std::is_same_v<T, Unary>) {
                    collect(*v.arg, out);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    collect(*v.lhs, out);
                    collect(*v.rhs, out);
                } else if constexpr (std::is_same_v<T, Call>) {
                    for (const auto& a : v.args) collect(*a, out);
                }
            },
            n.v);
    }

    static Polynomial poly(const Node& n) {
        return std::visit(
            [&](const auto& v) -> Polynomial {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, Number>) {
                    return Polynomial(v.exact);
                } else if constexpr (std::is_same_v<T, Variable>) {
                    if (v.name == "x") return Polynomial::x();
                    if (v.name.size() > 1 && v.name[0] == 'm')
                        return Polynomial(MomentPolynomial::symbol(static_cast<unsigned>(std::stoul(v.name.substr(1)))));
                    throw ParseError(n.pos, "variable '" + v.name + "' is not allowed in a polynomial");
                } else if constexpr (std::is_same_v<T, Unary>) {
                    return -poly(*v.arg);
                } else if constexpr (std::is_same_v<T, Binary>) {
                    Polynomial l = poly(*v.lhs);
                    switch (v.op) {
                        case '+': return l + poly(*v.rhs);
                        case '-': return l - poly(*v.rhs);
                        case '*': return l * poly(*v.rhs);
                        case '/': {
                            Polynomial r = poly(*v.rhs);
                            if (r.degree() != 0 || !r.coefficient(0).is_constant())
                                throw ParseError(n.pos, "division by a non-constant is not a polynomial");
                            Rational inv = 1 / r.coefficient(0).constant_term();
                            return l * MomentPolynomial(inv);
                        }
                        default: {
                            Polynomial r = poly(*v.rhs);
                            if (r.is_zero()) return Polynomial(1);
                            if (r.degree() != 0 || !r.coefficient(0).is_constant())
                                throw ParseError(n.pos, "exponent must be a non-negative integer");
                            Rational e = r.coefficient(0).constant_term();
                            if (e.get_den() != 1 || e < 0 || e > 64)
                                throw ParseError(n.pos, "exponent must be a non-negative integer");
                            Polynomial out(1);
                            for (long k = 0; k < e.get_num().get_si(); ++k) out = out * l;
                            return out;
                        }
                    }
                } else {
                    throw ParseError(n.pos, "function '" + v.name + "' is not allowed in a polynomial");
                }
            },
            n.v);
    }

    std::string source_;
    NodePtr root_;
};

inline Polynomial parse_polynomial(std::string_view text) { return Expression::parse(text).to_polynomial(); }

}  // namespace mvjump
