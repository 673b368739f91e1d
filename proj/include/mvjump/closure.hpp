#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <set>
#include <vector>

#include "mvjump/symbolic.hpp"

namespace mvjump {

// The smallest set of polynomials containing `generator` that is closed under
// every derivative and under the jump image p -> sum_i m_i p^{(i)}.
// Elements are stored in canonical order, zero polynomial included.
class ClosureSet {
public:
    ClosureSet(Polynomial generator, std::vector<Polynomial> elements)
        : generator_(std::move(generator)), elements_(std::move(elements)) {
        std::sort(elements_.begin(), elements_.end());
        elements_.erase(std::unique(elements_.begin(), elements_.end()), elements_.end());
    }

    [[nodiscard]] const Polynomial& generator() const noexcept { return generator_; }
    [[nodiscard]] const std::vector<Polynomial>& elements() const noexcept { return elements_; }
    [[nodiscard]] std::size_t size() const noexcept { return elements_.size(); }

    [[nodiscard]] bool contains(const Polynomial& p) const {
        return std::binary_search(elements_.begin(), elements_.end(), p);
    }

    // True if every element of *this is an element of `other`.
    [[nodiscard]] bool is_subset_of(const ClosureSet& other) const {
        return std::includes(other.elements_.begin(), other.elements_.end(), elements_.begin(), elements_.end());
    }

private:
    Polynomial generator_;
    std::vector<Polynomial> elements_;
};

// Worklist closure with exact-equality dedup. Finite for every polynomial:
// each new element either has lower degree or is the jump image, which also
// lowers the degree by one.
inline ClosureSet star_closure(const Polynomial& f) {
    std::set<Polynomial> seen{f};
    std::deque<Polynomial> work{f};
    while (!work.empty()) {
        Polynomial p = std::move(work.front());
        work.pop_front();
        auto push = [&](Polynomial q) {
            if (seen.insert(q).second) work.push_back(std::move(q));
        };
        for (int i = 1; i <= p.degree(); ++i) push(p.derivative(static_cast<unsigned>(i)));
        push(jump_image(p));
    }
    return ClosureSet(f, std::vector<Polynomial>(seen.begin(), seen.end()));
}

// Deterministic enumeration of the union of closures of x, x^2, ..., x^K for
// the smallest K giving at least `j_max` non-zero elements. Elements are
// ordered by the first monomial degree k whose closure contains them, then by
// canonical polynomial order. The zero polynomial is left out.
inline std::vector<Polynomial> enumerate_theta(std::size_t j_max) {
    if (j_max == 0) throw DomainError("enumerate_theta: j_max must be at least 1");
    std::vector<Polynomial> out;
    std::set<Polynomial> seen;
    for (unsigned k = 1; out.size() < j_max; ++k) {
        ClosureSet chi = star_closure(Polynomial::monomial(k));
        for (const Polynomial& p : chi.elements()) {  // already canonical order
            if (p.is_zero()) continue;
            if (seen.insert(p).second) out.push_back(p);
        }
    }
    return out;
}

}  // namespace mvjump
