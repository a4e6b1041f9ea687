#ifndef STAGEDTREE_PARAMETERS_HPP
#define STAGEDTREE_PARAMETERS_HPP

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "stagedtree/error.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

// Sum-to-one tolerance for label simplices and atom distributions.
inline constexpr double kSumTolerance = 1e-12;

// Whether labels must lie in the open simplex or may touch its boundary.
enum class Support { Open, Closed };

/// Edge labels per stage: value(s, j) is the probability of edge j of every
/// vertex in stage s. Labels are validated against the tree's staging.
class ParameterVector {
public:
    static ParameterVector from_stage_values(const StagedTree& tree, std::vector<std::vector<double>> values,
                                             Support support = Support::Open) {
        if (values.size() != tree.stage_count())
            throw Error(ErrorCode::InvalidParameter, "expected labels for " + std::to_string(tree.stage_count()) + " stages, got " + std::to_string(values.size()));
        ParameterVector pv;
        pv.interior_ = true;
        for (std::size_t s = 0; s < values.size(); ++s) {
            const auto& st = tree.stage(s);
            if (values[s].size() != st.out_degree)
                throw Error(ErrorCode::InvalidParameter, "stage " + st.name + " needs " + std::to_string(st.out_degree) + " labels, got " + std::to_string(values[s].size()));
            double sum = 0.0;
            for (double x : values[s]) {
                if (!std::isfinite(x)) throw Error(ErrorCode::InvalidParameter, "non-finite label in stage " + st.name);
                bool inside = x > 0.0 && x < 1.0;
                if (!inside) {
                    if (support == Support::Open || x < 0.0 || x > 1.0)
                        throw Error(ErrorCode::InvalidParameter, "label " + std::to_string(x) + " of stage " + st.name + " outside (0,1)");
                    pv.interior_ = false;
                }
                sum += x;
            }
            if (std::abs(sum - 1.0) > kSumTolerance)
                throw Error(ErrorCode::InvalidParameter, "labels of stage " + st.name + " sum to " + std::to_string(sum));
        }
        pv.values_ = std::move(values);
        return pv;
    }

    static ParameterVector from_named(const StagedTree& tree, const std::map<std::string, std::vector<double>>& named,
                                      Support support = Support::Open) {
        std::vector<std::vector<double>> values(tree.stage_count());
        for (const auto& [name, vals] : named) {
            auto s = tree.find_stage(name);
            if (!s) throw Error(ErrorCode::InvalidParameter, "unknown stage " + name);
            values[*s] = vals;
        }
        for (std::size_t s = 0; s < values.size(); ++s)
            if (values[s].empty()) throw Error(ErrorCode::InvalidParameter, "missing labels for stage " + tree.stage(s).name);
        return from_stage_values(tree, std::move(values), support);
    }

    static ParameterVector uniform(const StagedTree& tree) {
        std::vector<std::vector<double>> values;
        for (const auto& st : tree.stages()) values.emplace_back(st.out_degree, 1.0 / static_cast<double>(st.out_degree));
        return from_stage_values(tree, std::move(values));
    }

    double value(std::size_t stage, std::size_t edge) const { return values_.at(stage).at(edge); }
    // label of edge `edge` out of vertex `v`
    double label(const StagedTree& tree, std::size_t v, std::size_t edge) const { return value(tree.stage_of(v), edge); }
    const std::vector<std::vector<double>>& values() const noexcept { return values_; }
    std::size_t stage_count() const noexcept { return values_.size(); }
    bool interior() const noexcept { return interior_; }

    std::map<std::string, std::vector<double>> named(const StagedTree& tree) const {
        std::map<std::string, std::vector<double>> out;
        for (std::size_t s = 0; s < values_.size(); ++s) out[tree.stage(s).name] = values_[s];
        return out;
    }

private:
    std::vector<std::vector<double>> values_;
    bool interior_ = true;
};

// Probabilities over the atoms of a tree, in atom order.
class AtomDistribution {
public:
    explicit AtomDistribution(std::vector<double> p) : p_(std::move(p)) {
        double sum = 0.0;
        for (double x : p_) {
            if (!std::isfinite(x) || x < 0.0) throw Error(ErrorCode::InvalidDistribution, "negative or non-finite atom probability");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kSumTolerance) throw Error(ErrorCode::InvalidDistribution, "atom probabilities sum to " + std::to_string(sum));
    }
    double operator[](std::size_t r) const { return p_.at(r); }
    std::size_t size() const noexcept { return p_.size(); }
    const std::vector<double>& values() const noexcept { return p_; }
    bool positive() const noexcept {
        for (double x : p_)
            if (!(x > 0.0)) return false;
        return true;
    }

private:
    std::vector<double> p_;
};

/// Product of traversed edge labels; `labels[s][j]` is the label of edge j in stage s.
/// Generic in the scalar so exact rational arithmetic can be used.
template <typename Scalar>
Scalar path_product(const StagedTree& tree, const std::vector<std::vector<Scalar>>& labels, const Atom& atom) {
    Scalar p(1);
    for (const auto& st : atom.steps) p *= labels[tree.stage_of(st.vertex)][st.edge];
    return p;
}

inline double atom_probability(const StagedTree& tree, const ParameterVector& theta, const Atom& atom) {
    return path_product(tree, theta.values(), atom);
}

inline double log_atom_probability(const StagedTree& tree, const ParameterVector& theta, const Atom& atom) {
    double lp = 0.0;
    for (const auto& st : atom.steps) lp += std::log(theta.label(tree, st.vertex, st.edge));
    return lp;
}

inline AtomDistribution distribution_from_labels(const StagedTree& tree, const ParameterVector& theta) {
    std::vector<double> p;
    p.reserve(tree.leaf_count());
    for (const auto& a : tree.atoms()) p.push_back(atom_probability(tree, theta, a));
    return AtomDistribution(std::move(p));
}

/// Conditional-probability labels of a saturated tree reproducing `p`:
/// the label of edge j at v is the mass below that edge over the mass at v.
inline ParameterVector labels_from_distribution(const StagedTree& tree, const AtomDistribution& p) {
    if (!tree.has_trivial_staging()) throw Error(ErrorCode::NontrivialStaging, "labels_from_distribution needs a saturated tree");
    if (p.size() != tree.leaf_count())
        throw Error(ErrorCode::InvalidDistribution, "expected " + std::to_string(tree.leaf_count()) + " atom probabilities, got " + std::to_string(p.size()));
    std::vector<double> mass(tree.vertex_count(), 0.0);
    for (const auto& a : tree.atoms()) {
        if (!(p[a.index] > 0.0)) throw Error(ErrorCode::ZeroMass, "atom " + std::to_string(a.index + 1) + " has zero probability");
        for (const auto& st : a.steps) mass[st.vertex] += p[a.index];
        mass[a.leaf] += p[a.index];
    }
    std::vector<std::vector<double>> values(tree.stage_count());
    for (auto v : tree.inner_vertices()) {
        auto& row = values[tree.stage_of(v)];
        for (auto c : tree.children(v)) row.push_back(mass[c] / mass[v]);
    }
    return ParameterVector::from_stage_values(tree, std::move(values));
}

}  // namespace stagedtree

#endif  // STAGEDTREE_PARAMETERS_HPP
