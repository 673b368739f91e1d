#pragma once

// Exact univariate polynomials in x whose coefficients are rational
// polynomials in the formal jump-moment symbols m_1, m_2, ...
// (m_i stands for (1/i!) * E[xi^i] of the jump law).

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mvjump/error.hpp"

namespace mvjump {

using Rational = mpq_class;

enum class Notation {
    pretty,  // 2m₁x+2m₂, x³
    ascii,   // 2*m1*x + 2*m2, x^3  (re-parsable)
};

namespace detail {

inline std::string superscript(unsigned n) {
    static const char* digits[] = {"⁰", "¹", "²", "³", "⁴", "⁵", "⁶", "⁷", "⁸", "⁹"};
    std::string s = std::to_string(n);
    std::string out;
    for (char c : s) out += digits[c - '0'];
    return out;
}

inline std::string subscript(unsigned n) {
    static const char* digits[] = {"₀", "₁", "₂", "₃", "₄", "₅", "₆", "₇", "₈", "₉"};
    std::string s = std::to_string(n);
    std::string out;
    for (char c : s) out += digits[c - '0'];
    return out;
}

inline int sign_compare(int c) { return (c > 0) - (c < 0); }

}  // namespace detail

// ---------------------------------------------------------------------------
// MomentPolynomial: element of Q[m_1, ..., m_D]
// ---------------------------------------------------------------------------

// Exponent vector of m_1^{e_1} ... m_D^{e_D}; trailing zeros are trimmed so
// the constant monomial is the empty vector.
using MomentMonomial = std::vector<unsigned>;

class MomentPolynomial {
public:
    MomentPolynomial() = default;
    MomentPolynomial(const Rational& c) {  // NOLINT(google-explicit-constructor)
        if (c != 0) terms_.emplace(MomentMonomial{}, c);
    }
    MomentPolynomial(long c) : MomentPolynomial(Rational(c)) {}  // NOLINT
    MomentPolynomial(int c) : MomentPolynomial(Rational(c)) {}   // NOLINT

    // The formal symbol m_i (i >= 1).
    static MomentPolynomial symbol(unsigned i) {
        if (i == 0) throw DomainError("moment symbols are indexed from 1");
        MomentMonomial e(i, 0);
        e[i - 1] = 1;
        MomentPolynomial p;
        p.terms_.emplace(std::move(e), Rational(1));
        return p;
    }

    [[nodiscard]] const std::map<MomentMonomial, Rational>& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
    [[nodiscard]] bool is_constant() const noexcept {
        return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty());
    }
    [[nodiscard]] Rational constant_term() const {
        auto it = terms_.find(MomentMonomial{});
        return it == terms_.end() ? Rational(0) : it->second;
    }

    // Largest i such that m_i occurs.
    [[nodiscard]] unsigned max_symbol() const noexcept {
        unsigned d = 0;
        for (const auto& [mono, c] : terms_) d = std::max<unsigned>(d, static_cast<unsigned>(mono.size()));
        return d;
    }

    // m[i-1] is the numeric value substituted for m_i.
    [[nodiscard]] double evaluate(std::span<const double> m) const {
        double total = 0.0;
        for (const auto& [mono, c] : terms_) {
            double v = c.get_d();
            for (std::size_t i = 0; i < mono.size(); ++i) {
                if (mono[i] == 0) continue;
                if (i >= m.size()) throw MissingMomentError(static_cast<int>(i + 1), static_cast<int>(m.size()));
                v *= std::pow(m[i], static_cast<double>(mono[i]));
            }
            total += v;
        }
        return total;
    }

    MomentPolynomial& operator+=(const MomentPolynomial& o) {
        for (const auto& [mono, c] : o.terms_) add_term(mono, c);
        return *this;
    }
    MomentPolynomial& operator-=(const MomentPolynomial& o) {
        for (const auto& [mono, c] : o.terms_) add_term(mono, -c);
        return *this;
    }
    MomentPolynomial& operator*=(const Rational& s) {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [mono, c] : terms_) c *= s;
        return *this;
    }

    friend MomentPolynomial operator+(MomentPolynomial a, const MomentPolynomial& b) { return a += b; }
    friend MomentPolynomial operator-(MomentPolynomial a, const MomentPolynomial& b) { return a -= b; }
    friend MomentPolynomial operator-(MomentPolynomial a) {
        for (auto& [mono, c] : a.terms_) c = -c;
        return a;
    }
    friend MomentPolynomial operator*(MomentPolynomial a, const Rational& s) { return a *= s; }
    friend MomentPolynomial operator*(const Rational& s, MomentPolynomial a) { return a *= s; }
    friend MomentPolynomial operator*(const MomentPolynomial& a, const MomentPolynomial& b) {
        MomentPolynomial out;
        for (const auto& [ma, ca] : a.terms_) {
            for (const auto& [mb, cb] : b.terms_) {
                MomentMonomial m(std::max(ma.size(), mb.size()), 0);
                for (std::size_t i = 0; i < ma.size(); ++i) m[i] += ma[i];
                for (std::size_t i = 0; i < mb.size(); ++i) m[i] += mb[i];
                out.add_term(m, ca * cb);
            }
        }
        return out;
    }

    friend bool operator==(const MomentPolynomial& a, const MomentPolynomial& b) {
        return a.terms_ == b.terms_;
    }

    // Total order used for canonical ordering; -1, 0, +1.
    friend int compare(const MomentPolynomial& a, const MomentPolynomial& b) {
        auto ia = a.terms_.begin();
        auto ib = b.terms_.begin();
        for (; ia != a.terms_.end() && ib != b.terms_.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return ia->first < ib->first ? -1 : 1;
            int c = detail::sign_compare(cmp(ia->second, ib->second));
            if (c != 0) return c;
        }
        if (ia == a.terms_.end() && ib == b.terms_.end()) return 0;
        return ia == a.terms_.end() ? -1 : 1;
    }

    // Monomials in descending graded order (higher total degree first).
    [[nodiscard]] std::vector<std::pair<MomentMonomial, Rational>> display_order() const {
        std::vector<std::pair<MomentMonomial, Rational>> v(terms_.begin(), terms_.end());
        auto total = [](const MomentMonomial& m) {
            unsigned s = 0;
            for (unsigned e : m) s += e;
            return s;
        };
        std::stable_sort(v.begin(), v.end(), [&](const auto& l, const auto& r) {
            unsigned tl = total(l.first), tr = total(r.first);
            if (tl != tr) return tl > tr;
            return l.first > r.first;
        });
        return v;
    }

    static std::string monomial_string(const MomentMonomial& mono, Notation n) {
        std::string out;
        for (std::size_t i = 0; i < mono.size(); ++i) {
            if (mono[i] == 0) continue;
            if (n == Notation::pretty) {
                out += "m" + detail::subscript(static_cast<unsigned>(i + 1));
                if (mono[i] > 1) out += detail::superscript(mono[i]);
            } else {
                if (!out.empty()) out += "*";
                out += "m" + std::to_string(i + 1);
                if (mono[i] > 1) out += "^" + std::to_string(mono[i]);
            }
        }
        return out;
    }

    [[nodiscard]] std::string to_string(Notation n = Notation::ascii) const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (const auto& [mono, c] : display_order()) {
            Rational mag = abs(c);
            bool neg = c < 0;
            if (first) {
                if (neg) out += "-";
            } else {
                out += n == Notation::pretty ? (neg ? "-" : "+") : (neg ? " - " : " + ");
            }
            first = false;
            std::string m = monomial_string(mono, n);
            if (m.empty()) {
                out += mag.get_str();
            } else {
                if (mag != 1) out += mag.get_str() + (n == Notation::ascii ? "*" : "");
                out += m;
            }
        }
        return out;
    }

private:
    void add_term(MomentMonomial mono, const Rational& c) {
        while (!mono.empty() && mono.back() == 0) mono.pop_back();
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(std::move(mono), c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    std::map<MomentMonomial, Rational> terms_;
};

// ---------------------------------------------------------------------------
// NumericPolynomial: real coefficients, index = degree
// ---------------------------------------------------------------------------

class NumericPolynomial {
public:
    NumericPolynomial() = default;
    explicit NumericPolynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

    static NumericPolynomial constant(double c) { return NumericPolynomial({c}); }
    static NumericPolynomial monomial(unsigned degree, double c = 1.0) {
        std::vector<double> v(degree + 1, 0.0);
        v[degree] = c;
        return NumericPolynomial(std::move(v));
    }

    [[nodiscard]] int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    [[nodiscard]] bool is_zero() const noexcept { return coeffs_.empty(); }
    [[nodiscard]] const std::vector<double>& coefficients() const noexcept { return coeffs_; }
    [[nodiscard]] double coefficient(std::size_t k) const noexcept {
        return k < coeffs_.size() ? coeffs_[k] : 0.0;
    }

    double operator()(double x) const noexcept {
        double acc = 0.0;
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    [[nodiscard]] NumericPolynomial derivative(unsigned order = 1) const {
        if (static_cast<int>(order) > degree()) return {};
        std::vector<double> out(coeffs_.size() - order);
        for (std::size_t k = order; k < coeffs_.size(); ++k) {
            double falling = 1.0;
            for (unsigned r = 0; r < order; ++r) falling *= static_cast<double>(k - r);
            out[k - order] = coeffs_[k] * falling;
        }
        return NumericPolynomial(std::move(out));
    }

    NumericPolynomial& operator+=(const NumericPolynomial& o) {
        if (o.coeffs_.size() > coeffs_.size()) coeffs_.resize(o.coeffs_.size(), 0.0);
        for (std::size_t k = 0; k < o.coeffs_.size(); ++k) coeffs_[k] += o.coeffs_[k];
        trim();
        return *this;
    }
    NumericPolynomial& operator*=(double s) {
        for (double& c : coeffs_) c *= s;
        trim();
        return *this;
    }
    friend NumericPolynomial operator+(NumericPolynomial a, const NumericPolynomial& b) { return a += b; }
    friend NumericPolynomial operator-(NumericPolynomial a, const NumericPolynomial& b) {
        return a += b * -1.0;
    }
    friend NumericPolynomial operator*(NumericPolynomial a, double s) { return a *= s; }
    friend NumericPolynomial operator*(double s, NumericPolynomial a) { return a *= s; }
    friend NumericPolynomial operator*(const NumericPolynomial& a, const NumericPolynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return NumericPolynomial(std::move(out));
    }
    friend bool operator==(const NumericPolynomial&, const NumericPolynomial&) = default;

private:
    void trim() {
        while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
    }

    std::vector<double> coeffs_;
};

// ---------------------------------------------------------------------------
// Polynomial: sum_k c_k(m) x^k with c_k in Q[m_1..m_D]
// ---------------------------------------------------------------------------

class Polynomial {
public:
    Polynomial() = default;
    Polynomial(const MomentPolynomial& c) {  // NOLINT(google-explicit-constructor)
        if (!c.is_zero()) terms_.emplace(0u, c);
    }
    Polynomial(const Rational& c) : Polynomial(MomentPolynomial(c)) {}  // NOLINT
    Polynomial(long c) : Polynomial(Rational(c)) {}                     // NOLINT
    Polynomial(int c) : Polynomial(Rational(c)) {}                      // NOLINT

    static Polynomial monomial(unsigned degree, const MomentPolynomial& c = MomentPolynomial(1)) {
        Polynomial p;
        if (!c.is_zero()) p.terms_.emplace(degree, c);
        return p;
    }
    static Polynomial x() { return monomial(1); }

    [[nodiscard]] const std::map<unsigned, MomentPolynomial>& terms() const noexcept { return terms_; }
    [[nodiscard]] bool is_zero() const noexcept { return terms_.empty(); }
    // -1 for the zero polynomial.
    [[nodiscard]] int degree() const noexcept {
        return terms_.empty() ? -1 : static_cast<int>(terms_.rbegin()->first);
    }
    [[nodiscard]] MomentPolynomial coefficient(unsigned k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? MomentPolynomial{} : it->second;
    }
    [[nodiscard]] unsigned max_symbol() const noexcept {
        unsigned d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, c.max_symbol());
        return d;
    }

    // Exact i-th derivative; zero beyond the degree.
    [[nodiscard]] Polynomial derivative(unsigned order = 1) const {
        Polynomial out;
        for (const auto& [k, c] : terms_) {
            if (k < order) continue;
            Rational falling(1);
            for (unsigned r = 0; r < order; ++r) falling *= static_cast<long>(k - r);
            out.add_term(k - order, c * falling);
        }
        return out;
    }

    // Substitute m_i := m[i-1].
    [[nodiscard]] NumericPolynomial specialize(std::span<const double> m) const {
        if (terms_.empty()) return {};
        std::vector<double> v(static_cast<std::size_t>(degree()) + 1, 0.0);
        for (const auto& [k, c] : terms_) v[k] = c.evaluate(m);
        return NumericPolynomial(std::move(v));
    }

    Polynomial& operator+=(const Polynomial& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    Polynomial& operator-=(const Polynomial& o) {
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator-(const Polynomial& a) { return Polynomial{} - a; }
    friend Polynomial operator*(const Polynomial& a, const MomentPolynomial& s) {
        Polynomial out;
        for (const auto& [k, c] : a.terms_) out.add_term(k, c * s);
        return out;
    }
    friend Polynomial operator*(const MomentPolynomial& s, const Polynomial& a) { return a * s; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        Polynomial out;
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) out.add_term(ka + kb, ca * cb);
        return out;
    }

    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

    // Canonical total order: by degree, then coefficients from the leading
    // term downwards.
    friend int compare(const Polynomial& a, const Polynomial& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree() ? -1 : 1;
        for (int k = a.degree(); k >= 0; --k) {
            int c = compare(a.coefficient(static_cast<unsigned>(k)), b.coefficient(static_cast<unsigned>(k)));
            if (c != 0) return c;
        }
        return 0;
    }
    friend bool operator<(const Polynomial& a, const Polynomial& b) { return compare(a, b) < 0; }

    [[nodiscard]] std::string to_string(Notation n = Notation::ascii) const {
        if (terms_.empty()) return "0";
        std::string out;
        bool first = true;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [k, c] = *it;
            std::string xs;
            if (k == 1) xs = "x";
            else if (k > 1) xs = n == Notation::pretty ? "x" + detail::superscript(k) : "x^" + std::to_string(k);

            if (c.terms().size() == 1) {
                const auto& [mono, r] = *c.terms().begin();
                bool neg = r < 0;
                Rational mag = abs(r);
                if (first) {
                    if (neg) out += "-";
                } else {
                    out += n == Notation::pretty ? (neg ? "-" : "+") : (neg ? " - " : " + ");
                }
                std::string ms = MomentPolynomial::monomial_string(mono, n);
                std::string sep = n == Notation::ascii ? "*" : "";
                std::string body;
                if (mag != 1 || (ms.empty() && xs.empty())) body = mag.get_str();
                for (const std::string* part : {&ms, &xs}) {
                    if (part->empty()) continue;
                    if (!body.empty()) body += sep;
                    body += *part;
                }
                out += body;
            } else {
                if (!first) out += n == Notation::pretty ? "+" : " + ";
                out += "(" + c.to_string(n) + ")";
                if (!xs.empty()) out += (n == Notation::ascii ? "*" : "") + xs;
            }
            first = false;
        }
        return out;
    }

private:
    void add_term(unsigned k, const MomentPolynomial& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(k, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::map<unsigned, MomentPolynomial> terms_;
};

inline Polynomial derivative(const Polynomial& p, unsigned order) { return p.derivative(order); }

// sum_{i=1}^{deg p} m_i p^{(i)} with the m_i kept symbolic. This is the exact
// Taylor form of  int (p(x+y) - p(x)) gamma(dy)  once m_i = E[xi^i]/i!.
inline Polynomial jump_image(const Polynomial& p) {
    Polynomial out;
    for (int i = 1; i <= p.degree(); ++i) {
        out += p.derivative(static_cast<unsigned>(i)) * MomentPolynomial::symbol(static_cast<unsigned>(i));
    }
    return out;
}

// Numeric counterpart with m[i-1] = m_i.
inline NumericPolynomial jump_image(const NumericPolynomial& p, std::span<const double> m) {
    NumericPolynomial out;
    for (int i = 1; i <= p.degree(); ++i) {
        if (static_cast<std::size_t>(i) > m.size()) throw MissingMomentError(i, static_cast<int>(m.size()));
        out += p.derivative(static_cast<unsigned>(i)) * m[static_cast<std::size_t>(i) - 1];
    }
    return out;
}

}  // namespace mvjump
