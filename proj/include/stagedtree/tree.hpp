#ifndef STAGEDTREE_TREE_HPP
#define STAGEDTREE_TREE_HPP

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "stagedtree/error.hpp"

namespace stagedtree {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

// Plain description of a tree as read from a file. Children are listed in
// edge order. Leaves may be listed with no children or only referenced.
struct VertexSpec {
    std::string id;
    std::vector<std::string> children;
};

// Categorical variable attached to one depth level of a product-space tree.
struct Variable {
    std::string name;
    std::vector<std::string> states;
};

struct TreeSpec {
    std::vector<VertexSpec> vertices;
    // inner vertex id -> stage id; unlisted inner vertices form singleton stages
    std::map<std::string, std::string> stages;
    // inner vertex id -> 1-based downward edge; default is the last edge
    std::map<std::string, std::size_t> downward;
    // optional per-depth variables
    std::vector<Variable> variables;
};

struct Stage {
    std::string name;
    std::size_t out_degree = 0;
    std::size_t downward = 0;  // 0-based edge index
    std::vector<std::size_t> members;  // vertex indices, ascending
};

// One traversal of an edge: the j-th (0-based) edge out of `vertex`.
struct Step {
    std::size_t vertex;
    std::size_t edge;
    friend bool operator==(const Step&, const Step&) = default;
};

// Root-to-leaf path.
struct Atom {
    std::size_t index = 0;
    std::vector<Step> steps;
    std::size_t leaf = 0;
};

/// Rooted ordered tree with a staging and a downward edge per inner vertex.
///
/// Vertices are numbered breadth-first from the root (index 0) following the
/// given child order, so inner vertex v_1..v_k of the usual notation is the
/// i-th inner vertex in this order. Atoms are enumerated depth-first following
/// edge order. Immutable after construction.
class StagedTree {
public:
    std::size_t vertex_count() const noexcept { return names_.size(); }
    std::size_t inner_count() const noexcept { return inner_.size(); }
    std::size_t leaf_count() const noexcept { return atoms_.size(); }
    std::size_t stage_count() const noexcept { return stages_.size(); }

    std::size_t root() const noexcept { return 0; }
    const std::string& name(std::size_t v) const { return names_.at(v); }
    std::span<const std::size_t> children(std::size_t v) const { return children_.at(v); }
    std::size_t child(std::size_t v, std::size_t edge) const { return children_.at(v).at(edge); }
    std::size_t out_degree(std::size_t v) const { return children_.at(v).size(); }
    std::size_t parent(std::size_t v) const { return parent_.at(v); }
    std::size_t depth(std::size_t v) const { return depth_.at(v); }
    bool is_leaf(std::size_t v) const { return children_.at(v).empty(); }

    // Inner vertices in breadth-first order; ordinal(v) + 1 is the v_i label.
    std::span<const std::size_t> inner_vertices() const noexcept { return inner_; }
    std::size_t ordinal(std::size_t v) const { return ordinal_.at(v); }

    // npos for leaves
    std::size_t stage_of(std::size_t v) const { return stage_of_.at(v); }
    const Stage& stage(std::size_t s) const { return stages_.at(s); }
    std::span<const Stage> stages() const noexcept { return stages_; }
    std::optional<std::size_t> find_stage(const std::string& stage_name) const {
        for (std::size_t s = 0; s < stages_.size(); ++s)
            if (stages_[s].name == stage_name) return s;
        return std::nullopt;
    }
    std::optional<std::size_t> find_vertex(const std::string& vertex_name) const {
        auto it = index_of_.find(vertex_name);
        if (it == index_of_.end()) return std::nullopt;
        return it->second;
    }

    // 0-based downward edge of an inner vertex.
    std::size_t downward(std::size_t v) const { return stages_.at(stage_of(v)).downward; }
    std::size_t downward_child(std::size_t v) const { return child(v, downward(v)); }

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    const std::vector<Variable>& variables() const noexcept { return variables_; }

    bool is_star() const noexcept { return inner_.size() == 1; }
    bool has_trivial_staging() const noexcept { return stages_.size() == inner_.size(); }

    // Description that rebuilds this tree. Singleton stages named after their
    // vertex are kept explicit so stage names survive a round trip.
    TreeSpec spec() const {
        TreeSpec out;
        for (std::size_t v = 0; v < vertex_count(); ++v) {
            VertexSpec vs{names_[v], {}};
            for (auto c : children_[v]) vs.children.push_back(names_[c]);
            out.vertices.push_back(std::move(vs));
        }
        for (auto v : inner_) {
            out.stages[names_[v]] = stages_[stage_of_[v]].name;
            if (downward(v) + 1 != out_degree(v)) out.downward[names_[v]] = downward(v) + 1;
        }
        out.variables = variables_;
        return out;
    }

    // Same graph, every inner vertex in its own stage named after the vertex.
    StagedTree saturated() const;
    // Same graph with stage ids assigned per vertex index (leaves ignored).
    StagedTree restaged(std::span<const std::string> stage_name_of_vertex) const;
    // Same staging with the downward edge of each stage replaced (0-based, per stage index).
    StagedTree with_downward(std::span<const std::size_t> downward_of_stage) const;

private:
    friend StagedTree build_tree(const TreeSpec& spec);

    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_of_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> depth_;
    std::vector<std::size_t> inner_;
    std::vector<std::size_t> ordinal_;
    std::vector<std::size_t> stage_of_;
    std::vector<Stage> stages_;
    std::vector<Atom> atoms_;
    std::vector<Variable> variables_;
};

/// Validates a description and builds the tree.
inline StagedTree build_tree(const TreeSpec& spec) {
    if (spec.vertices.empty()) throw Error(ErrorCode::ParseError, "tree has no vertices");

    // collect all ids, listed or referenced
    std::unordered_map<std::string, const VertexSpec*> listed;
    std::vector<std::string> order;  // first-seen order, used only for root search
    std::unordered_map<std::string, std::string> parent_of;
    for (const auto& vs : spec.vertices) {
        if (vs.id.empty()) throw Error(ErrorCode::ParseError, "vertex with empty id");
        if (!listed.emplace(vs.id, &vs).second) throw Error(ErrorCode::DuplicateVertex, vs.id);
        order.push_back(vs.id);
    }
    for (const auto& vs : spec.vertices) {
        if (vs.children.size() == 1) throw Error(ErrorCode::VertexWithOneChild, vs.id);
        for (const auto& c : vs.children) {
            if (c == vs.id) throw Error(ErrorCode::CycleDetected, "self loop at " + c);
            auto [it, fresh] = parent_of.emplace(c, vs.id);
            if (!fresh) throw Error(ErrorCode::MultipleParents, c + " has parents " + it->second + " and " + vs.id);
            if (!listed.count(c)) order.push_back(c);
        }
    }
    std::vector<std::string> roots;
    for (const auto& id : order)
        if (!parent_of.count(id)) roots.push_back(id);
    if (roots.empty()) throw Error(ErrorCode::CycleDetected, "no vertex without a parent");
    if (roots.size() > 1) throw Error(ErrorCode::MultipleRoots, roots[0] + ", " + roots[1]);

    StagedTree tree;
    auto children_of = [&](const std::string& id) -> const std::vector<std::string>* {
        auto it = listed.find(id);
        return it == listed.end() ? nullptr : &it->second->children;
    };

    std::queue<std::pair<std::string, std::size_t>> frontier;  // (id, parent index)
    frontier.emplace(roots[0], npos);
    while (!frontier.empty()) {
        auto [id, par] = frontier.front();
        frontier.pop();
        if (tree.index_of_.count(id)) throw Error(ErrorCode::CycleDetected, id);
        std::size_t v = tree.names_.size();
        tree.index_of_.emplace(id, v);
        tree.names_.push_back(id);
        tree.parent_.push_back(par);
        tree.depth_.push_back(par == npos ? 0 : tree.depth_[par] + 1);
        tree.children_.emplace_back();
        if (par != npos) tree.children_[par].push_back(v);
        if (auto* cs = children_of(id))
            for (const auto& c : *cs) frontier.emplace(c, v);
    }
    // Vertices not reachable from the root sit on a cycle (every vertex has
    // at most one parent and only the root has none).
    std::size_t total = order.size();
    if (tree.names_.size() != total) throw Error(ErrorCode::CycleDetected, "vertices unreachable from root " + roots[0]);

    tree.ordinal_.assign(total, npos);
    for (std::size_t v = 0; v < total; ++v) {
        if (!tree.children_[v].empty()) {
            tree.ordinal_[v] = tree.inner_.size();
            tree.inner_.push_back(v);
        }
    }
    if (tree.inner_.empty()) throw Error(ErrorCode::ParseError, "tree has no inner vertex");

    for (const auto& [vid, sid] : spec.stages) {
        auto it = tree.index_of_.find(vid);
        if (it == tree.index_of_.end()) throw Error(ErrorCode::UnknownVertex, "stage assigned to unknown vertex " + vid);
        if (tree.children_[it->second].empty())
            throw Error(ErrorCode::StageOutDegreeMismatch, "leaf " + vid + " cannot belong to a stage");
    }
    for (const auto& [vid, edge] : spec.downward) {
        auto it = tree.index_of_.find(vid);
        if (it == tree.index_of_.end()) throw Error(ErrorCode::UnknownVertex, "downward edge for unknown vertex " + vid);
        auto kappa = tree.children_[it->second].size();
        if (edge < 1 || edge > kappa)
            throw Error(ErrorCode::DownwardEdgeOutOfRange, vid + " has " + std::to_string(kappa) + " edges, downward " + std::to_string(edge));
    }

    tree.stage_of_.assign(total, npos);
    std::unordered_map<std::string, std::size_t> stage_index;
    for (auto v : tree.inner_) {
        const auto& id = tree.names_[v];
        auto sit = spec.stages.find(id);
        std::string sname = sit == spec.stages.end() ? id : sit->second;
        auto kappa = tree.children_[v].size();
        auto dit = spec.downward.find(id);
        std::size_t down = dit == spec.downward.end() ? kappa - 1 : dit->second - 1;
        auto [it, fresh] = stage_index.emplace(sname, tree.stages_.size());
        if (fresh) {
            tree.stages_.push_back(Stage{sname, kappa, down, {}});
        } else {
            const auto& st = tree.stages_[it->second];
            if (st.out_degree != kappa)
                throw Error(ErrorCode::StageOutDegreeMismatch,
                            "stage " + sname + " mixes out-degrees " + std::to_string(st.out_degree) + " and " + std::to_string(kappa) + " (" + id + ")");
            if (st.downward != down)
                throw Error(ErrorCode::DownwardEdgeInconsistentWithinStage,
                            "stage " + sname + " has downward edges " + std::to_string(st.downward + 1) + " and " + std::to_string(down + 1) + " (" + id + ")");
        }
        tree.stages_[it->second].members.push_back(v);
        tree.stage_of_[v] = it->second;
    }

    tree.variables_ = spec.variables;
    if (!tree.variables_.empty()) {
        for (auto v : tree.inner_) {
            auto d = tree.depth_[v];
            if (d >= tree.variables_.size())
                throw Error(ErrorCode::VariableMismatch, "no variable for depth " + std::to_string(d) + " (vertex " + tree.names_[v] + ")");
            if (tree.variables_[d].states.size() != tree.children_[v].size())
                throw Error(ErrorCode::VariableMismatch, "variable " + tree.variables_[d].name + " has " + std::to_string(tree.variables_[d].states.size()) +
                                                             " states but vertex " + tree.names_[v] + " has " + std::to_string(tree.children_[v].size()) + " edges");
        }
    }

    // depth-first atom enumeration following edge order
    std::vector<Step> path;
    auto descend = [&](auto&& self, std::size_t v) -> void {
        if (tree.children_[v].empty()) {
            tree.atoms_.push_back(Atom{tree.atoms_.size(), path, v});
            return;
        }
        for (std::size_t j = 0; j < tree.children_[v].size(); ++j) {
            path.push_back(Step{v, j});
            self(self, tree.children_[v][j]);
            path.pop_back();
        }
    };
    descend(descend, 0);
    return tree;
}

inline StagedTree StagedTree::saturated() const {
    std::vector<std::string> names(names_.begin(), names_.end());
    return restaged(names);
}

inline StagedTree StagedTree::restaged(std::span<const std::string> stage_name_of_vertex) const {
    if (stage_name_of_vertex.size() != vertex_count())
        throw Error(ErrorCode::IndexOutOfRange, "staging has wrong length");
    TreeSpec s = spec();
    s.stages.clear();
    s.downward.clear();
    for (auto v : inner_) {
        s.stages[names_[v]] = stage_name_of_vertex[v];
        if (downward(v) + 1 != out_degree(v)) s.downward[names_[v]] = downward(v) + 1;
    }
    return build_tree(s);
}

inline StagedTree StagedTree::with_downward(std::span<const std::size_t> downward_of_stage) const {
    if (downward_of_stage.size() != stage_count()) throw Error(ErrorCode::IndexOutOfRange, "downward choice has wrong length");
    TreeSpec s = spec();
    s.downward.clear();
    for (auto v : inner_) s.downward[names_[v]] = downward_of_stage[stage_of_[v]] + 1;
    return build_tree(s);
}

/// Atoms in depth-first edge order.
inline std::span<const Atom> atoms(const StagedTree& tree) noexcept { return tree.atoms(); }

/// 1 iff the atom passes through edge `edge` (0-based) of inner vertex `vertex`.
inline int indicator(const StagedTree& tree, const Atom& atom, std::size_t vertex, std::size_t edge) {
    if (vertex >= tree.vertex_count() || tree.is_leaf(vertex) || edge >= tree.out_degree(vertex))
        throw Error(ErrorCode::IndexOutOfRange, "no edge " + std::to_string(edge + 1) + " at vertex index " + std::to_string(vertex));
    for (const auto& st : atom.steps)
        if (st.vertex == vertex) return st.edge == edge ? 1 : 0;
    return 0;
}

/// 1 iff the atom visits the inner vertex.
inline int indicator_vertex(const StagedTree& tree, const Atom& atom, std::size_t vertex) {
    if (vertex >= tree.vertex_count() || tree.is_leaf(vertex))
        throw Error(ErrorCode::IndexOutOfRange, "no inner vertex with index " + std::to_string(vertex));
    for (const auto& st : atom.steps)
        if (st.vertex == vertex) return 1;
    return 0;
}

struct Dimensions {
    std::size_t saturated = 0;  // d0
    std::size_t staged = 0;     // d
};

inline Dimensions dimensions(const StagedTree& tree) {
    Dimensions d;
    for (auto v : tree.inner_vertices()) d.saturated += tree.out_degree(v) - 1;
    for (const auto& st : tree.stages()) d.staged += st.out_degree - 1;
    return d;
}

}  // namespace stagedtree

#endif  // STAGEDTREE_TREE_HPP
