#ifndef STAGEDTREE_STAGE_ALGEBRA_HPP
#define STAGEDTREE_STAGE_ALGEBRA_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stagedtree/expfam.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/polynomial.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

inline CanonicalLabel canonical_label(const StagedTree& tree, std::size_t v, std::size_t j) { return {tree.stage_of(v), j}; }

/// Formal sum over v-to-leaf paths of the product of canonical labels; 1 at a leaf.
inline LabelPolynomial interpolating_polynomial(const StagedTree& tree, std::size_t v) {
    if (tree.is_leaf(v)) return LabelPolynomial::one();
    LabelPolynomial sum;
    for (std::size_t j = 0; j < tree.out_degree(v); ++j)
        sum += interpolating_polynomial(tree, tree.child(v, j)) * LabelMonomial{canonical_label(tree, v, j)};
    return sum;
}

// t_v for every vertex, bottom-up.
inline std::vector<LabelPolynomial> interpolating_polynomials(const StagedTree& tree) {
    std::vector<LabelPolynomial> t(tree.vertex_count());
    for (std::size_t v = tree.vertex_count(); v-- > 0;) {
        if (tree.is_leaf(v)) {
            t[v] = LabelPolynomial::one();
            continue;
        }
        LabelPolynomial sum;
        for (std::size_t j = 0; j < tree.out_degree(v); ++j) sum += t[tree.child(v, j)] * LabelMonomial{canonical_label(tree, v, j)};
        t[v] = std::move(sum);
    }
    return t;
}

/// Canonical labels along the all-downward path from v; empty at a leaf.
inline LabelMonomial downward_monomial(const StagedTree& tree, std::size_t v) {
    std::vector<CanonicalLabel> labels;
    while (!tree.is_leaf(v)) {
        labels.push_back(canonical_label(tree, v, tree.downward(v)));
        v = tree.downward_child(v);
    }
    return LabelMonomial(std::move(labels));
}

inline std::vector<LabelMonomial> downward_monomials(const StagedTree& tree) {
    std::vector<LabelMonomial> n(tree.vertex_count());
    for (std::size_t v = tree.vertex_count(); v-- > 0;)
        if (!tree.is_leaf(v)) n[v] = n[tree.downward_child(v)] * LabelMonomial{canonical_label(tree, v, tree.downward(v))};
    return n;
}

// Same-stage pair (i < s by vertex index) and an edge j.
struct StageTriple {
    std::size_t first;
    std::size_t second;
    std::size_t edge;
    friend auto operator<=>(const StageTriple&, const StageTriple&) = default;
};

// All same-stage pairs and edges in lexicographic order.
template <typename Fn>
void for_each_stage_triple(const StagedTree& tree, Fn&& fn) {
    std::vector<StageTriple> triples;
    for (const auto& st : tree.stages())
        for (std::size_t a = 0; a < st.members.size(); ++a)
            for (std::size_t b = a + 1; b < st.members.size(); ++b)
                for (std::size_t j = 0; j < st.out_degree; ++j) triples.push_back({st.members[a], st.members[b], j});
    std::sort(triples.begin(), triples.end());
    for (const auto& t : triples) fn(t);
}

struct RegularityResult {
    bool regular = true;
    std::vector<StageTriple> witnesses;  // ascending; front() is the smallest violation
};

/// N_ij N_sk == N_sj N_ik as canonical monomials for every same-stage pair and edge.
inline RegularityResult is_regular(const StagedTree& tree) {
    auto n = downward_monomials(tree);
    RegularityResult r;
    for_each_stage_triple(tree, [&](const StageTriple& t) {
        auto i = t.first, s = t.second;
        auto k = tree.downward(i);
        if (n[tree.child(i, t.edge)] * n[tree.child(s, k)] != n[tree.child(s, t.edge)] * n[tree.child(i, k)]) r.witnesses.push_back(t);
    });
    r.regular = r.witnesses.empty();
    return r;
}

/// t_ij t_sk == t_ik t_sj for every same-stage pair and edge.
inline bool is_balanced(const StagedTree& tree) {
    auto t = interpolating_polynomials(tree);
    bool ok = true;
    for_each_stage_triple(tree, [&](const StageTriple& x) {
        if (!ok) return;
        auto i = x.first, s = x.second;
        auto k = tree.downward(i);
        ok = t[tree.child(i, x.edge)] * t[tree.child(s, k)] == t[tree.child(i, k)] * t[tree.child(s, x.edge)];
    });
    return ok;
}

/// t_ij == t_sj for every same-stage pair and edge.
inline bool is_simple(const StagedTree& tree) {
    auto t = interpolating_polynomials(tree);
    bool ok = true;
    for_each_stage_triple(tree, [&](const StageTriple& x) {
        if (ok) ok = t[tree.child(x.first, x.edge)] == t[tree.child(x.second, x.edge)];
    });
    return ok;
}

/// Linear identifications theta_ij - theta_sj = 0 over the d0 vertex-level
/// coordinates (non-downward edges). Each stage contributes rows tying every
/// member to its first member, giving d0 - d rows.
struct ConstraintMatrix {
    std::vector<EdgeCoordinate> columns;
    std::vector<StageTriple> rows;  // (first member, other member, edge)
    Eigen::MatrixXd matrix;

    std::size_t rank() const {
        if (matrix.rows() == 0) return 0;
        return static_cast<std::size_t>(Eigen::FullPivLU<Eigen::MatrixXd>(matrix).rank());
    }
    std::size_t kernel_dimension() const { return columns.size() - rank(); }

    // h_T applied to vertex-level coordinates in column order.
    Eigen::VectorXd apply(const Eigen::VectorXd& coords) const { return matrix * coords; }
};

inline ConstraintMatrix constraint_matrix(const StagedTree& tree) {
    ConstraintMatrix cm;
    StatisticLayout layout(tree);
    cm.columns = layout.coordinates();
    for (const auto& st : tree.stages())
        for (std::size_t m = 1; m < st.members.size(); ++m)
            for (std::size_t j = 0; j < st.out_degree; ++j)
                if (j != st.downward) cm.rows.push_back({st.members.front(), st.members[m], j});
    cm.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cm.rows.size()), static_cast<Eigen::Index>(cm.columns.size()));
    for (std::size_t r = 0; r < cm.rows.size(); ++r) {
        const auto& row = cm.rows[r];
        cm.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(layout.position(tree, row.first, row.edge))) = 1.0;
        cm.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(layout.position(tree, row.second, row.edge))) = -1.0;
    }
    return cm;
}

/// Stage identification written in natural parameters:
///   eta_ij + log P_ij + log P_sk = eta_sj + log P_sj + log P_ik
/// where k is the downward edge and P_ab sums xi = exp(eta) products over the
/// paths below edge b of vertex a. `linear` holds iff the log terms cancel,
/// leaving eta_ij = eta_sj.
struct StageEquation {
    std::size_t first;
    std::size_t second;
    std::size_t edge;
    std::size_t downward;
    bool linear = false;
};

inline std::vector<StageEquation> stage_equations(const StagedTree& tree) {
    auto n = downward_monomials(tree);
    std::vector<StageEquation> out;
    for_each_stage_triple(tree, [&](const StageTriple& t) {
        auto i = t.first, s = t.second, j = t.edge;
        auto k = tree.downward(i);
        // P_ab = 1 / N_ab on the model, so the P products agree iff the
        // downward paths below them concatenate to the same multiset
        bool linear = n[tree.child(i, j)] * n[tree.child(s, k)] == n[tree.child(s, j)] * n[tree.child(i, k)];
        out.push_back({i, s, j, k, linear});
    });
    return out;
}

namespace detail {
// xi products over the paths below v, rendered in depth-first path order.
inline std::string render_path_sum(const StagedTree& tree, std::size_t v) {
    LabelNames names(tree);
    std::vector<std::string> terms;
    std::vector<std::string> factors;
    auto walk = [&](auto&& self, std::size_t u) -> void {
        if (tree.is_leaf(u)) {
            std::string term;
            for (const auto& f : factors) term += (term.empty() ? "" : "*") + f;
            terms.push_back(term.empty() ? "1" : term);
            return;
        }
        for (std::size_t j = 0; j < tree.out_degree(u); ++j) {
            bool down = j == tree.downward(u);
            if (!down) factors.push_back(names.free_label(u, j, "xi"));
            self(self, tree.child(u, j));
            if (!down) factors.pop_back();
        }
    };
    walk(walk, v);
    std::string s;
    for (const auto& t : terms) s += (s.empty() ? "" : "+") + t;
    return s;
}
}  // namespace detail

// Terms of one side: the eta term, then the two log P terms.
struct EquationSide {
    std::string eta;
    std::string log_p_first;
    std::string log_p_second;
    std::string str() const { return eta + " + " + log_p_first + " + " + log_p_second; }
};

struct RenderedEquation {
    EquationSide lhs;
    EquationSide rhs;
    std::string reduced;  // "eta_i = eta_s" when linear, empty otherwise
    std::string str() const { return lhs.str() + " = " + rhs.str(); }
};

inline RenderedEquation render_stage_equation(const StagedTree& tree, const StageEquation& eq) {
    LabelNames names(tree);
    auto eta = [&](std::size_t v, std::size_t j) { return j == tree.downward(v) ? std::string("0") : names.free_label(v, j, "eta"); };
    auto logp = [&](std::size_t v, std::size_t j) { return "log(" + detail::render_path_sum(tree, tree.child(v, j)) + ")"; };
    RenderedEquation r;
    r.lhs = {eta(eq.first, eq.edge), logp(eq.first, eq.edge), logp(eq.second, eq.downward)};
    r.rhs = {eta(eq.second, eq.edge), logp(eq.second, eq.edge), logp(eq.first, eq.downward)};
    if (eq.linear) r.reduced = r.lhs.eta + " = " + r.rhs.eta;
    return r;
}

/// P_v = sum over v-to-leaf paths of prod xi, xi = exp(eta) with xi = 1 on
/// downward edges, evaluated by explicit path enumeration.
inline std::vector<double> path_sums(const StagedTree& tree, const ExpFamForm& form) {
    StatisticLayout layout(tree);
    std::vector<double> p(tree.vertex_count(), 0.0);
    for (std::size_t v = 0; v < tree.vertex_count(); ++v) {
        double total = 0.0;
        auto walk = [&](auto&& self, std::size_t u, double log_prod) -> void {
            if (tree.is_leaf(u)) {
                total += std::exp(log_prod);
                return;
            }
            for (std::size_t j = 0; j < tree.out_degree(u); ++j) {
                auto pos = layout.position(tree, u, j);
                self(self, tree.child(u, j), log_prod + (pos == npos ? 0.0 : form.eta[pos]));
            }
        };
        walk(walk, v, 0.0);
        p[v] = total;
    }
    return p;
}

/// max |N_ij P_ij - 1| over all edges.
inline double check_np_identity(const StagedTree& tree, const ParameterVector& theta) {
    auto form = natural_parameters(tree, theta);
    auto p = path_sums(tree, form);
    double worst = 0.0;
    for (auto v : tree.inner_vertices())
        for (auto c : tree.children(v)) worst = std::max(worst, std::abs(form.n[c] * p[c] - 1.0));
    return worst;
}

// lhs - rhs of every stage equation at theta (zero on the staged model).
inline std::vector<double> stage_equation_residuals(const StagedTree& tree, const ParameterVector& theta) {
    auto form = natural_parameters(tree, theta);
    auto p = path_sums(tree, form);
    std::vector<double> out;
    for (const auto& eq : stage_equations(tree)) {
        auto i = eq.first, s = eq.second, j = eq.edge, k = eq.downward;
        double lhs = form.eta_at(tree, i, j) + std::log(p[tree.child(i, j)]) + std::log(p[tree.child(s, k)]);
        double rhs = form.eta_at(tree, s, j) + std::log(p[tree.child(s, j)]) + std::log(p[tree.child(i, k)]);
        out.push_back(lhs - rhs);
    }
    return out;
}

struct DownwardAlternative {
    std::vector<std::size_t> downward;  // 0-based per stage
    bool regular = false;
    bool balanced = false;
};

struct DownwardProbe {
    bool consistent = true;
    std::vector<DownwardAlternative> disagreements;
    std::size_t alternatives_checked = 0;
};

/// Recomputes regularity and balance with every stage pointing down along
/// edge e (clamped to its out-degree) for each e, and reports disagreements
/// with the tree's own choice.
inline DownwardProbe probe_downward_invariance(const StagedTree& tree) {
    bool base_regular = is_regular(tree).regular;
    bool base_balanced = is_balanced(tree);
    std::size_t max_kappa = 0;
    for (const auto& st : tree.stages()) max_kappa = std::max(max_kappa, st.out_degree);
    std::vector<std::size_t> current;
    for (const auto& st : tree.stages()) current.push_back(st.downward);

    DownwardProbe probe;
    std::set<std::vector<std::size_t>> seen{current};
    for (std::size_t e = 0; e < max_kappa; ++e) {
        std::vector<std::size_t> choice;
        for (const auto& st : tree.stages()) choice.push_back(std::min(e, st.out_degree - 1));
        if (!seen.insert(choice).second) continue;
        auto alt = tree.with_downward(choice);
        DownwardAlternative a{choice, is_regular(alt).regular, is_balanced(alt)};
        ++probe.alternatives_checked;
        if (a.regular != base_regular || a.balanced != base_balanced) {
            probe.consistent = false;
            probe.disagreements.push_back(std::move(a));
        }
    }
    return probe;
}

struct StagingClassification {
    bool regular = false;
    bool balanced = false;
    bool simple = false;
    std::vector<StageTriple> witnesses;
    Dimensions dims;
};

inline StagingClassification classify_staging(const StagedTree& tree) {
    StagingClassification c;
    auto reg = is_regular(tree);
    c.regular = reg.regular;
    c.witnesses = std::move(reg.witnesses);
    c.balanced = is_balanced(tree);
    c.simple = is_simple(tree);
    c.dims = dimensions(tree);
    return c;
}

}  // namespace stagedtree

#endif  // STAGEDTREE_STAGE_ALGEBRA_HPP
