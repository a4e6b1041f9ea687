#ifndef STAGEDTREE_BN_HPP
#define STAGEDTREE_BN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stagedtree/error.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/stage_algebra.hpp"
#include "stagedtree/tree.hpp"
#include "stagedtree/tree_io.hpp"

namespace stagedtree {

struct BnVariable {
    std::string name;
    std::vector<std::string> states;  // size = cardinality
    std::size_t card() const noexcept { return states.size(); }
};

// Conditional table of one variable. Rows follow the parent configurations
// in mixed-radix order over `parents` (last parent varies fastest).
struct Cpt {
    std::vector<std::size_t> parents;
    std::vector<std::vector<double>> rows;
};

/// Discrete Bayesian network: variables, an acyclic parent structure and
/// optional conditional probability tables.
class DiscreteBN {
public:
    static DiscreteBN make(std::vector<BnVariable> variables, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                           std::optional<std::vector<Cpt>> cpts = std::nullopt) {
        DiscreteBN bn;
        bn.vars_ = std::move(variables);
        auto n = bn.vars_.size();
        if (n == 0) throw Error(ErrorCode::ParseError, "network has no variables");
        if (n > 64) throw Error(ErrorCode::ParseError, "at most 64 variables are supported");
        std::unordered_set<std::string> names;
        for (const auto& v : bn.vars_) {
            if (v.card() < 2) throw Error(ErrorCode::ParseError, "variable " + v.name + " needs at least two states");
            if (!names.insert(v.name).second) throw Error(ErrorCode::ParseError, "duplicate variable " + v.name);
        }
        bn.parents_.assign(n, {});
        for (auto [a, b] : edges) {
            if (a >= n || b >= n) throw Error(ErrorCode::IndexOutOfRange, "edge endpoint out of range");
            if (a == b) throw Error(ErrorCode::CycleInGraph, "self loop at " + bn.vars_[a].name);
            auto& ps = bn.parents_[b];
            if (std::find(ps.begin(), ps.end(), a) == ps.end()) ps.push_back(a);
        }
        for (auto& ps : bn.parents_) std::sort(ps.begin(), ps.end());
        if (!bn.topological_order()) throw Error(ErrorCode::CycleInGraph, "edges contain a directed cycle");

        if (cpts) {
            if (cpts->size() != n) throw Error(ErrorCode::InvalidCPT, "expected a table for every variable");
            for (std::size_t v = 0; v < n; ++v) {
                auto& cpt = (*cpts)[v];
                auto sorted = cpt.parents;
                std::sort(sorted.begin(), sorted.end());
                if (sorted != bn.parents_[v]) throw Error(ErrorCode::InvalidCPT, "table parents of " + bn.vars_[v].name + " differ from the graph");
                std::size_t configs = 1;
                for (auto p : cpt.parents) configs *= bn.vars_[p].card();
                if (cpt.rows.size() != configs)
                    throw Error(ErrorCode::InvalidCPT, "table of " + bn.vars_[v].name + " needs " + std::to_string(configs) + " rows");
                for (const auto& row : cpt.rows) {
                    if (row.size() != bn.vars_[v].card()) throw Error(ErrorCode::InvalidCPT, "row of " + bn.vars_[v].name + " has wrong length");
                    double sum = 0.0;
                    for (double x : row) {
                        if (!(x > 0.0 && x < 1.0)) throw Error(ErrorCode::InvalidCPT, "entries of " + bn.vars_[v].name + " must lie in (0,1)");
                        sum += x;
                    }
                    if (std::abs(sum - 1.0) > kSumTolerance) throw Error(ErrorCode::InvalidCPT, "row of " + bn.vars_[v].name + " sums to " + std::to_string(sum));
                }
            }
            bn.cpts_ = std::move(cpts);
        }
        return bn;
    }

    std::size_t size() const noexcept { return vars_.size(); }
    const BnVariable& variable(std::size_t v) const { return vars_.at(v); }
    const std::vector<BnVariable>& variables() const noexcept { return vars_; }
    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
    bool has_edge(std::size_t a, std::size_t b) const {
        const auto& ps = parents_.at(b);
        return std::binary_search(ps.begin(), ps.end(), a);
    }
    bool adjacent(std::size_t a, std::size_t b) const { return has_edge(a, b) || has_edge(b, a); }
    bool has_cpts() const noexcept { return cpts_.has_value(); }
    const Cpt& cpt(std::size_t v) const { return cpts_.value().at(v); }

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t v = 0; v < vars_.size(); ++v)
            if (vars_[v].name == name) return v;
        return std::nullopt;
    }

    // Kahn's algorithm preferring the smallest declaration index; none on a cycle.
    std::optional<std::vector<std::size_t>> topological_order() const {
        auto n = vars_.size();
        std::vector<std::size_t> indeg(n, 0);
        for (std::size_t v = 0; v < n; ++v) indeg[v] = parents_[v].size();
        std::vector<std::size_t> order;
        std::vector<bool> done(n, false);
        while (order.size() < n) {
            std::size_t pick = npos;
            for (std::size_t v = 0; v < n && pick == npos; ++v)
                if (!done[v] && indeg[v] == 0) pick = v;
            if (pick == npos) return std::nullopt;
            done[pick] = true;
            order.push_back(pick);
            for (std::size_t c = 0; c < n; ++c)
                if (has_edge(pick, c)) --indeg[c];
        }
        return order;
    }

    // Row of the table of v at the parent values in a full assignment.
    const std::vector<double>& cpt_row(std::size_t v, const std::vector<std::size_t>& assignment) const {
        const auto& c = cpt(v);
        std::size_t row = 0;
        for (auto p : c.parents) row = row * vars_[p].card() + assignment[p];
        return c.rows[row];
    }

private:
    std::vector<BnVariable> vars_;
    std::vector<std::vector<std::size_t>> parents_;
    std::optional<std::vector<Cpt>> cpts_;
};

/// Network file schema:
///   {"variables": [{"name": "X", "card": 2, "states": ["0","1"]}, ...],
///    "edges": [["X", "Z"], ...],
///    "cpts": {"Z": {"parents": ["X", "Y"], "table": [[0.3, 0.7], ...]}, ...}}
/// "states" defaults to "0".."card-1"; "cpts" is optional but must cover
/// every variable when present.
inline DiscreteBN parse_bn(const json& j) {
    io::reject_unknown(j, {"variables", "edges", "cpts"}, "network");
    if (!j.contains("variables") || !j["variables"].is_array()) throw Error(ErrorCode::ParseError, "network needs a \"variables\" array");
    std::vector<BnVariable> vars;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& jv : j["variables"]) {
        io::reject_unknown(jv, {"name", "card", "states"}, "variable");
        if (!jv.contains("name")) throw Error(ErrorCode::ParseError, "variable without \"name\"");
        BnVariable v;
        v.name = io::get_as<std::string>(jv["name"], "variable name");
        if (jv.contains("states")) v.states = io::get_as<std::vector<std::string>>(jv["states"], "states of " + v.name);
        if (jv.contains("card")) {
            auto card = io::get_as<long long>(jv["card"], "card of " + v.name);
            if (card < 2) throw Error(ErrorCode::ParseError, "variable " + v.name + " needs card >= 2");
            if (v.states.empty())
                for (long long s = 0; s < card; ++s) v.states.push_back(std::to_string(s));
            else if (static_cast<long long>(v.states.size()) != card)
                throw Error(ErrorCode::ParseError, "card of " + v.name + " disagrees with its states");
        }
        if (v.states.empty()) throw Error(ErrorCode::ParseError, "variable " + v.name + " needs \"card\" or \"states\"");
        index[v.name] = vars.size();
        vars.push_back(std::move(v));
    }
    auto lookup = [&](const std::string& name) {
        auto it = index.find(name);
        if (it == index.end()) throw Error(ErrorCode::UnknownVertex, "unknown variable " + name);
        return it->second;
    };
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    if (j.contains("edges")) {
        for (const auto& je : j["edges"]) {
            auto pair = io::get_as<std::vector<std::string>>(je, "edge");
            if (pair.size() != 2) throw Error(ErrorCode::ParseError, "edge must be [parent, child]");
            edges.emplace_back(lookup(pair[0]), lookup(pair[1]));
        }
    }
    std::optional<std::vector<Cpt>> cpts;
    if (j.contains("cpts")) {
        if (!j["cpts"].is_object()) throw Error(ErrorCode::ParseError, "\"cpts\" must map variable names to tables");
        std::vector<std::optional<Cpt>> tables(vars.size());
        for (const auto& item : j["cpts"].items()) {
            auto v = lookup(item.key());
            io::reject_unknown(item.value(), {"parents", "table"}, "table of " + item.key());
            Cpt c;
            if (item.value().contains("parents"))
                for (const auto& p : io::get_as<std::vector<std::string>>(item.value()["parents"], "table parents")) c.parents.push_back(lookup(p));
            if (!item.value().contains("table")) throw Error(ErrorCode::InvalidCPT, "table of " + item.key() + " has no \"table\"");
            c.rows = io::get_as<std::vector<std::vector<double>>>(item.value()["table"], "table of " + item.key());
            tables[v] = std::move(c);
        }
        std::vector<Cpt> all;
        for (std::size_t v = 0; v < tables.size(); ++v) {
            if (!tables[v]) throw Error(ErrorCode::InvalidCPT, "missing table for " + vars[v].name);
            all.push_back(std::move(*tables[v]));
        }
        cpts = std::move(all);
    }
    return DiscreteBN::make(std::move(vars), edges, std::move(cpts));
}

inline DiscreteBN parse_bn(const std::string& text) { return parse_bn(io::parse_json_text(text, "network")); }

inline void validate_order(const DiscreteBN& bn, const std::vector<std::size_t>& order) {
    if (order.size() != bn.size()) throw Error(ErrorCode::OrderInconsistentWithDAG, "order must list every variable once");
    std::vector<std::size_t> pos(bn.size(), npos);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (order[i] >= bn.size() || pos[order[i]] != npos) throw Error(ErrorCode::OrderInconsistentWithDAG, "order must list every variable once");
        pos[order[i]] = i;
    }
    for (std::size_t c = 0; c < bn.size(); ++c)
        for (auto p : bn.parents(c))
            if (pos[p] > pos[c])
                throw Error(ErrorCode::OrderInconsistentWithDAG, "edge " + bn.variable(p).name + " -> " + bn.variable(c).name + " points backwards");
}

struct BnTree {
    StagedTree tree;
    std::optional<ParameterVector> labels;
};

/// Product-space tree over the variables in `order`. A depth-l vertex stands
/// for an assignment of the first l variables; vertices at the same depth
/// share a stage iff they agree on the parents of the variable at that depth.
/// Inner vertices are named v1.., leaves l1.., both breadth-first.
inline BnTree bn_to_staged_tree(const DiscreteBN& bn, const std::vector<std::size_t>& order) {
    validate_order(bn, order);
    auto nvars = order.size();
    auto stage_name = [&](std::size_t var, const std::vector<std::size_t>& assignment) {
        std::string s = bn.variable(var).name;
        const auto& ps = bn.parents(var);
        for (std::size_t q = 0; q < ps.size(); ++q)
            s += (q == 0 ? "|" : ",") + bn.variable(ps[q]).name + "=" + bn.variable(ps[q]).states[assignment[ps[q]]];
        return s;
    };

    TreeSpec spec;
    for (auto v : order) spec.variables.push_back({bn.variable(v).name, bn.variable(v).states});
    std::map<std::string, std::vector<double>> labels;

    // level by level; each entry is the assignment (indexed by variable) of a vertex
    std::vector<std::vector<std::size_t>> level{std::vector<std::size_t>(bn.size(), 0)};
    std::size_t inner_counter = 0, leaf_counter = 0;
    std::vector<std::string> level_names{"v" + std::to_string(++inner_counter)};
    for (std::size_t depth = 0; depth < nvars; ++depth) {
        auto var = order[depth];
        bool last = depth + 1 == nvars;
        std::vector<std::vector<std::size_t>> next;
        std::vector<std::string> next_names;
        for (std::size_t u = 0; u < level.size(); ++u) {
            VertexSpec vs{level_names[u], {}};
            for (std::size_t x = 0; x < bn.variable(var).card(); ++x) {
                auto a = level[u];
                a[var] = x;
                auto cname = last ? "l" + std::to_string(++leaf_counter) : "v" + std::to_string(++inner_counter);
                vs.children.push_back(cname);
                next.push_back(std::move(a));
                next_names.push_back(cname);
            }
            auto sname = stage_name(var, level[u]);
            spec.stages[vs.id] = sname;
            if (bn.has_cpts()) labels[sname] = bn.cpt_row(var, level[u]);
            spec.vertices.push_back(std::move(vs));
        }
        level = std::move(next);
        level_names = std::move(next_names);
    }
    BnTree out{build_tree(spec), std::nullopt};
    if (bn.has_cpts()) out.labels = ParameterVector::from_named(out.tree, labels);
    return out;
}

/// Joint probability of a full assignment by the network factorization.
inline double bn_joint(const DiscreteBN& bn, const std::vector<std::size_t>& assignment) {
    double p = 1.0;
    for (std::size_t v = 0; v < bn.size(); ++v) p *= bn.cpt_row(v, assignment)[assignment[v]];
    return p;
}

/// No immoralities and a chordal skeleton.
inline bool is_decomposable(const DiscreteBN& bn) {
    auto n = bn.size();
    for (std::size_t c = 0; c < n; ++c) {
        const auto& ps = bn.parents(c);
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = a + 1; b < ps.size(); ++b)
                if (!bn.adjacent(ps[a], ps[b])) return false;
    }
    // chordal iff simplicial vertices can be eliminated one by one
    std::vector<bool> alive(n, true);
    for (std::size_t round = 0; round < n; ++round) {
        std::size_t found = npos;
        for (std::size_t v = 0; v < n && found == npos; ++v) {
            if (!alive[v]) continue;
            std::vector<std::size_t> nb;
            for (std::size_t u = 0; u < n; ++u)
                if (alive[u] && u != v && bn.adjacent(u, v)) nb.push_back(u);
            bool clique = true;
            for (std::size_t a = 0; a < nb.size() && clique; ++a)
                for (std::size_t b = a + 1; b < nb.size() && clique; ++b) clique = bn.adjacent(nb[a], nb[b]);
            if (clique) found = v;
        }
        if (found == npos) return false;
        alive[found] = false;
    }
    return true;
}

/// A topological order in which the parents of every node after the first
/// are contained in the previous node together with its parents. Depth-first
/// search over topological extensions, memoizing failed (placed set, last
/// node) states; exponential in the worst case, meant for small networks.
inline std::optional<std::vector<std::size_t>> find_simple_ordering(const DiscreteBN& bn) {
    auto n = bn.size();
    std::vector<std::uint64_t> parent_mask(n, 0);
    for (std::size_t v = 0; v < n; ++v)
        for (auto p : bn.parents(v)) parent_mask[v] |= std::uint64_t{1} << p;

    std::set<std::pair<std::uint64_t, std::size_t>> dead;  // (placed mask, last node)
    auto key = [](std::uint64_t placed, std::size_t last) { return std::make_pair(placed, last); };
    std::vector<std::size_t> order;
    std::uint64_t full = n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;

    auto extend = [&](auto&& self, std::uint64_t placed) -> bool {
        if (placed == full) return true;
        std::size_t last = order.empty() ? npos : order.back();
        if (last != npos && dead.count(key(placed, last))) return false;
        for (std::size_t v = 0; v < n; ++v) {
            auto bit = std::uint64_t{1} << v;
            if (placed & bit) continue;
            if ((parent_mask[v] & ~placed) != 0) continue;  // not yet topological
            if (last != npos) {
                auto allowed = parent_mask[last] | (std::uint64_t{1} << last);
                if ((parent_mask[v] & ~allowed) != 0) continue;
            }
            order.push_back(v);
            if (self(self, placed | bit)) return true;
            order.pop_back();
        }
        if (last != npos) dead.insert(key(placed, last));
        return false;
    };
    if (extend(extend, 0)) return order;
    return std::nullopt;
}

struct BnClassification {
    bool decomposable = false;
    std::optional<std::vector<std::size_t>> simple_ordering;
    bool regular_certified = false;
    std::vector<std::size_t> order;  // order used for the staged-tree cross-check
    bool tree_regular = false;
    bool tree_balanced = false;
    bool tree_simple = false;
};

/// Graphical certificate of regularity plus the staged-tree cross-check. The
/// tree is built along the simple ordering when one exists, else along the
/// default topological order.
inline BnClassification classify_bn(const DiscreteBN& bn) {
    BnClassification c;
    c.decomposable = is_decomposable(bn);
    c.simple_ordering = find_simple_ordering(bn);
    c.regular_certified = c.decomposable || c.simple_ordering.has_value();
    c.order = c.simple_ordering ? *c.simple_ordering : *bn.topological_order();
    auto tree = bn_to_staged_tree(bn, c.order).tree;
    auto cls = classify_staging(tree);
    c.tree_regular = cls.regular;
    c.tree_balanced = cls.balanced;
    c.tree_simple = cls.simple;
    return c;
}

}  // namespace stagedtree

#endif  // STAGEDTREE_BN_HPP
