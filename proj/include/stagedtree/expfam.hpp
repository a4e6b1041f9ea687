#ifndef STAGEDTREE_EXPFAM_HPP
#define STAGEDTREE_EXPFAM_HPP

#include <algorithm>
#include <compare>
#include <cmath>
#include <string>
#include <vector>

#include "stagedtree/error.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

// Edge `edge` (0-based) out of inner vertex `vertex`.
struct EdgeCoordinate {
    std::size_t vertex;
    std::size_t edge;
    friend auto operator<=>(const EdgeCoordinate&, const EdgeCoordinate&) = default;
};

/// Coordinates of the sufficient statistic: every non-downward edge of every
/// inner vertex, in vertex order then edge order. Its size is d0.
class StatisticLayout {
public:
    explicit StatisticLayout(const StagedTree& tree) : offset_(tree.vertex_count(), npos) {
        for (auto v : tree.inner_vertices()) {
            offset_[v] = coords_.size();
            for (std::size_t j = 0; j < tree.out_degree(v); ++j)
                if (j != tree.downward(v)) coords_.push_back({v, j});
        }
    }
    std::size_t size() const noexcept { return coords_.size(); }
    const std::vector<EdgeCoordinate>& coordinates() const noexcept { return coords_; }
    // position of (v, j) in the layout, npos for the downward edge
    std::size_t position(const StagedTree& tree, std::size_t v, std::size_t j) const {
        auto down = tree.downward(v);
        if (j == down) return npos;
        return offset_.at(v) + (j < down ? j : j - 1);
    }

private:
    std::vector<EdgeCoordinate> coords_;
    std::vector<std::size_t> offset_;
};

struct ExpFamForm {
    std::vector<EdgeCoordinate> layout;
    std::vector<double> eta;    // aligned with layout
    double psi = 0.0;
    std::vector<double> log_n;  // per vertex, 0 at leaves
    std::vector<double> n;      // per vertex, 1 at leaves

    // eta of any edge; the downward edge carries 0
    double eta_at(const StagedTree& tree, std::size_t v, std::size_t j) const {
        auto pos = StatisticLayout(tree).position(tree, v, j);
        return pos == npos ? 0.0 : eta[pos];
    }
};

namespace detail {
inline void require_interior(const ParameterVector& theta) {
    if (!theta.interior()) throw Error(ErrorCode::BoundaryParameter, "exponential form needs labels strictly inside (0,1)");
}
}  // namespace detail

/// log N_v: sum of log labels along the all-downward path from v (0 at leaves).
inline std::vector<double> downward_log_products(const StagedTree& tree, const ParameterVector& theta) {
    std::vector<double> log_n(tree.vertex_count(), 0.0);
    // children always carry larger breadth-first indices
    for (std::size_t v = tree.vertex_count(); v-- > 0;) {
        if (tree.is_leaf(v)) continue;
        auto down = tree.downward(v);
        log_n[v] = std::log(theta.label(tree, v, down)) + log_n[tree.child(v, down)];
    }
    return log_n;
}

inline std::vector<double> downward_products(const StagedTree& tree, const ParameterVector& theta) {
    auto log_n = downward_log_products(tree, theta);
    std::vector<double> n(log_n.size());
    std::transform(log_n.begin(), log_n.end(), n.begin(), [](double x) { return std::exp(x); });
    return n;
}

/// eta_ij = log(theta_ij N_ij / N_i) for every non-downward edge; psi = -log N_root.
inline ExpFamForm natural_parameters(const StagedTree& tree, const ParameterVector& theta) {
    detail::require_interior(theta);
    ExpFamForm form;
    StatisticLayout layout(tree);
    form.layout = layout.coordinates();
    form.log_n = downward_log_products(tree, theta);
    form.eta.reserve(layout.size());
    for (const auto& c : form.layout) {
        form.eta.push_back(std::log(theta.label(tree, c.vertex, c.edge)) + form.log_n[tree.child(c.vertex, c.edge)] - form.log_n[c.vertex]);
    }
    form.psi = -form.log_n[tree.root()];
    form.n.resize(form.log_n.size());
    std::transform(form.log_n.begin(), form.log_n.end(), form.n.begin(), [](double x) { return std::exp(x); });
    return form;
}

/// 0/1 indicators of the non-downward edges the atom traverses, in layout order.
inline std::vector<int> sufficient_statistic(const StagedTree& tree, const Atom& atom) {
    StatisticLayout layout(tree);
    std::vector<int> t(layout.size(), 0);
    for (const auto& st : atom.steps) {
        auto pos = layout.position(tree, st.vertex, st.edge);
        if (pos != npos) t[pos] = 1;
    }
    return t;
}

inline double log_density_expform(const StagedTree& tree, const ExpFamForm& form, const Atom& atom) {
    auto t = sufficient_statistic(tree, atom);
    double dot = 0.0;
    for (std::size_t p = 0; p < t.size(); ++p)
        if (t[p]) dot += form.eta[p];
    return dot - form.psi;
}

/// exp(eta . T(x) - psi)
inline double density_expform(const StagedTree& tree, const ExpFamForm& form, const Atom& atom) {
    return std::exp(log_density_expform(tree, form, atom));
}

inline double density_expform(const StagedTree& tree, const ParameterVector& theta, const Atom& atom) {
    return density_expform(tree, natural_parameters(tree, theta), atom);
}

/// Inverse of natural_parameters on a saturated tree: evaluate the unnormalized
/// exponential form on every atom, normalize, then read off conditional labels.
inline ParameterVector theta_from_eta(const StagedTree& tree, const std::vector<double>& eta) {
    if (!tree.has_trivial_staging()) throw Error(ErrorCode::NontrivialStaging, "theta_from_eta needs a saturated tree");
    StatisticLayout layout(tree);
    if (eta.size() != layout.size())
        throw Error(ErrorCode::InvalidParameter, "expected " + std::to_string(layout.size()) + " natural parameters, got " + std::to_string(eta.size()));
    for (double e : eta)
        if (!std::isfinite(e)) throw Error(ErrorCode::InvalidParameter, "non-finite natural parameter");
    std::vector<double> logit;
    logit.reserve(tree.leaf_count());
    for (const auto& a : tree.atoms()) {
        double s = 0.0;
        for (const auto& st : a.steps) {
            auto pos = layout.position(tree, st.vertex, st.edge);
            if (pos != npos) s += eta[pos];
        }
        logit.push_back(s);
    }
    double mx = *std::max_element(logit.begin(), logit.end());
    double z = 0.0;
    for (double l : logit) z += std::exp(l - mx);
    std::vector<double> p;
    p.reserve(logit.size());
    for (double l : logit) p.push_back(std::exp(l - mx) / z);
    // renormalize the rounding residue away before validation
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
    return labels_from_distribution(tree, AtomDistribution(std::move(p)));
}

// Multinomial exponential form of a star: log-odds against the reference
// (downward) edge, which is the last edge unless overridden.
struct StarForm {
    std::vector<std::size_t> statistic_edges;  // 0-based edges with an indicator
    std::vector<double> eta;
    double psi = 0.0;
};

inline StarForm star_form(const StagedTree& tree, const ParameterVector& theta) {
    if (!tree.is_star()) throw Error(ErrorCode::NotAStar, "tree has " + std::to_string(tree.inner_count()) + " inner vertices");
    detail::require_interior(theta);
    StarForm f;
    auto root = tree.root();
    auto ref = tree.downward(root);
    double log_ref = std::log(theta.label(tree, root, ref));
    for (std::size_t r = 0; r < tree.out_degree(root); ++r) {
        if (r == ref) continue;
        f.statistic_edges.push_back(r);
        f.eta.push_back(std::log(theta.label(tree, root, r)) - log_ref);
    }
    f.psi = -log_ref;
    return f;
}

// Symbolic form of a natural parameter in vertex-level labels:
// log(theta_ij * prod(numerator) / prod(denominator)), where numerator and
// denominator are the downward labels on the paths of N_ij and N_i.
struct EtaFormula {
    EdgeCoordinate coordinate;
    std::vector<std::size_t> numerator;    // vertices whose downward label appears
    std::vector<std::size_t> denominator;
};

namespace detail {
inline std::vector<std::size_t> downward_path(const StagedTree& tree, std::size_t v) {
    std::vector<std::size_t> path;
    while (!tree.is_leaf(v)) {
        path.push_back(v);
        v = tree.downward_child(v);
    }
    return path;
}
}  // namespace detail

inline std::vector<EtaFormula> eta_formulas(const StagedTree& tree) {
    std::vector<EtaFormula> out;
    StatisticLayout layout(tree);
    for (const auto& c : layout.coordinates())
        out.push_back({c, detail::downward_path(tree, tree.child(c.vertex, c.edge)), detail::downward_path(tree, c.vertex)});
    return out;
}

/// Renders labels as theta_i / (1-theta_i) when every inner vertex is binary
/// and as theta_{i,j} / (1-theta_{i,1}-...) otherwise; i is the v_i ordinal.
class LabelNames {
public:
    explicit LabelNames(const StagedTree& tree) : tree_(&tree) {
        binary_ = std::all_of(tree.inner_vertices().begin(), tree.inner_vertices().end(), [&](auto v) { return tree.out_degree(v) == 2; });
    }

    bool binary() const noexcept { return binary_; }
    std::string index(std::size_t v) const { return std::to_string(tree_->ordinal(v) + 1); }

    std::string free_label(std::size_t v, std::size_t j, const std::string& symbol = "theta") const {
        if (binary_) return symbol + "_" + index(v);
        return symbol + "_{" + index(v) + "," + std::to_string(j + 1) + "}";
    }

    std::string downward_label(std::size_t v) const {
        std::string s = "(1";
        for (std::size_t j = 0; j < tree_->out_degree(v); ++j)
            if (j != tree_->downward(v)) s += "-" + free_label(v, j);
        return s + ")";
    }

    std::string product(const std::vector<std::size_t>& vs) const {
        std::string s;
        for (auto v : vs) s += (s.empty() ? "" : "*") + downward_label(v);
        return s;
    }

private:
    const StagedTree* tree_;
    bool binary_ = false;
};

inline std::string render_eta(const StagedTree& tree, const EtaFormula& f) {
    LabelNames names(tree);
    std::string num = names.free_label(f.coordinate.vertex, f.coordinate.edge);
    if (!f.numerator.empty()) num += "*" + names.product(f.numerator);
    std::string den = names.product(f.denominator);
    if (f.denominator.size() > 1) den = "(" + den + ")";
    return "log(" + num + "/" + den + ")";
}

inline std::string render_psi(const StagedTree& tree) {
    LabelNames names(tree);
    auto path = detail::downward_path(tree, tree.root());
    if (path.size() == 1) return "-log" + names.downward_label(path.front());
    return "-log(" + names.product(path) + ")";
}

}  // namespace stagedtree

#endif  // STAGEDTREE_EXPFAM_HPP
