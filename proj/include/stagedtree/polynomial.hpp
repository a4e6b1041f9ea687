#ifndef STAGEDTREE_POLYNOMIAL_HPP
#define STAGEDTREE_POLYNOMIAL_HPP

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <iterator>
#include <utility>
#include <vector>

namespace stagedtree {

// Label shared by all vertices of a stage: edge `edge` (0-based) of stage `stage`.
struct CanonicalLabel {
    std::size_t stage;
    std::size_t edge;
    friend auto operator<=>(const CanonicalLabel&, const CanonicalLabel&) = default;
};

/// Commutative product of labels, stored as a sorted multiset.
template <typename Label>
class Monomial {
public:
    Monomial() = default;
    Monomial(std::initializer_list<Label> labels) : labels_(labels) { std::sort(labels_.begin(), labels_.end()); }
    explicit Monomial(std::vector<Label> labels) : labels_(std::move(labels)) { std::sort(labels_.begin(), labels_.end()); }

    const std::vector<Label>& labels() const noexcept { return labels_; }
    std::size_t degree() const noexcept { return labels_.size(); }
    bool is_one() const noexcept { return labels_.empty(); }

    Monomial& operator*=(const Monomial& o) {
        std::vector<Label> merged;
        merged.reserve(labels_.size() + o.labels_.size());
        std::merge(labels_.begin(), labels_.end(), o.labels_.begin(), o.labels_.end(), std::back_inserter(merged));
        labels_ = std::move(merged);
        return *this;
    }
    friend Monomial operator*(Monomial a, const Monomial& b) { return a *= b; }

    // multiplicity of a label
    std::size_t exponent(const Label& l) const {
        auto [lo, hi] = std::equal_range(labels_.begin(), labels_.end(), l);
        return static_cast<std::size_t>(hi - lo);
    }

    friend auto operator<=>(const Monomial&, const Monomial&) = default;

private:
    std::vector<Label> labels_;
};

/// Sum of monomials with unit coefficients kept as a sorted multiset, so a
/// repeated monomial stands for a coefficient above one. No relation between
/// labels is applied; equality is exact multiset equality.
template <typename Label>
class FormalPolynomial {
public:
    using monomial_type = Monomial<Label>;

    FormalPolynomial() = default;
    explicit FormalPolynomial(std::vector<monomial_type> terms) : terms_(std::move(terms)) { std::sort(terms_.begin(), terms_.end()); }

    static FormalPolynomial one() { return FormalPolynomial(std::vector<monomial_type>{monomial_type{}}); }

    const std::vector<monomial_type>& terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    FormalPolynomial& operator+=(const FormalPolynomial& o) {
        std::vector<monomial_type> merged;
        merged.reserve(terms_.size() + o.terms_.size());
        std::merge(terms_.begin(), terms_.end(), o.terms_.begin(), o.terms_.end(), std::back_inserter(merged));
        terms_ = std::move(merged);
        return *this;
    }
    friend FormalPolynomial operator+(FormalPolynomial a, const FormalPolynomial& b) { return a += b; }

    friend FormalPolynomial operator*(const FormalPolynomial& a, const FormalPolynomial& b) {
        std::vector<monomial_type> out;
        out.reserve(a.terms_.size() * b.terms_.size());
        for (const auto& x : a.terms_)
            for (const auto& y : b.terms_) out.push_back(x * y);
        return FormalPolynomial(std::move(out));
    }
    friend FormalPolynomial operator*(const FormalPolynomial& a, const monomial_type& m) {
        std::vector<monomial_type> out;
        out.reserve(a.terms_.size());
        for (const auto& x : a.terms_) out.push_back(x * m);
        return FormalPolynomial(std::move(out));
    }

    friend bool operator==(const FormalPolynomial&, const FormalPolynomial&) = default;

private:
    std::vector<monomial_type> terms_;
};

using LabelMonomial = Monomial<CanonicalLabel>;
using LabelPolynomial = FormalPolynomial<CanonicalLabel>;

}  // namespace stagedtree

#endif  // STAGEDTREE_POLYNOMIAL_HPP
