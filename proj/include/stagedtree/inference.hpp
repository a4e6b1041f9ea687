#ifndef STAGEDTREE_INFERENCE_HPP
#define STAGEDTREE_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "stagedtree/data.hpp"
#include "stagedtree/error.hpp"
#include "stagedtree/parallel.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

// Edge traversals and visits pooled over the members of each stage.
struct StageCounts {
    std::vector<std::vector<std::uint64_t>> edges;
    std::vector<std::uint64_t> visits;
};

inline StageCounts stage_counts(const StagedTree& tree, const AtomTable& table) {
    if (table.counts.size() != tree.leaf_count()) throw Error(ErrorCode::MalformedCsv, "table does not match the tree's atoms");
    StageCounts sc;
    for (const auto& st : tree.stages()) sc.edges.emplace_back(st.out_degree, 0);
    sc.visits.assign(tree.stage_count(), 0);
    for (const auto& a : tree.atoms()) {
        auto c = table.counts[a.index];
        if (c == 0) continue;
        for (const auto& step : a.steps) {
            auto s = tree.stage_of(step.vertex);
            sc.edges[s][step.edge] += c;
            sc.visits[s] += c;
        }
    }
    return sc;
}

/// Closed-form maximizer per stage: pooled edge counts over pooled visits.
/// Generic in the scalar so exact rationals can check the identity.
template <typename Scalar>
std::vector<std::vector<Scalar>> stage_frequencies(const StagedTree& tree, const AtomTable& table) {
    auto sc = stage_counts(tree, table);
    std::vector<std::vector<Scalar>> out(tree.stage_count());
    for (std::size_t s = 0; s < sc.visits.size(); ++s) {
        if (sc.visits[s] == 0) throw Error(ErrorCode::ZeroStageTraffic, "stage " + tree.stage(s).name + " is never visited");
        for (auto c : sc.edges[s]) out[s].push_back(Scalar(static_cast<long long>(c)) / Scalar(static_cast<long long>(sc.visits[s])));
    }
    return out;
}

struct MleResult {
    ParameterVector theta;
    bool boundary = false;  // some label is 0 or 1
};

/// Maximum likelihood labels. With alpha > 0 every edge count gets alpha
/// added (additive smoothing); with alpha = 0 a never-visited stage is an
/// error and zero counts give a boundary estimate.
inline MleResult mle(const StagedTree& tree, const AtomTable& table, double alpha = 0.0) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidConfig, "smoothing alpha must be a non-negative number");
    auto sc = stage_counts(tree, table);
    std::vector<std::vector<double>> values(tree.stage_count());
    for (std::size_t s = 0; s < sc.visits.size(); ++s) {
        auto kappa = static_cast<double>(tree.stage(s).out_degree);
        if (sc.visits[s] == 0 && alpha == 0.0) throw Error(ErrorCode::ZeroStageTraffic, "stage " + tree.stage(s).name + " is never visited");
        double denom = static_cast<double>(sc.visits[s]) + kappa * alpha;
        for (auto c : sc.edges[s]) values[s].push_back((static_cast<double>(c) + alpha) / denom);
    }
    auto theta = ParameterVector::from_stage_values(tree, std::move(values), Support::Closed);
    bool boundary = !theta.interior();
    return {std::move(theta), boundary};
}

/// sum_r counts[r] * log p(atom_r); 0 * log 0 counts as 0.
inline double log_likelihood(const StagedTree& tree, const ParameterVector& theta, const AtomTable& table) {
    if (table.counts.size() != tree.leaf_count()) throw Error(ErrorCode::MalformedCsv, "table does not match the tree's atoms");
    double ll = 0.0;
    for (const auto& a : tree.atoms()) {
        auto c = table.counts[a.index];
        if (c == 0) continue;
        double lp = 0.0;
        for (const auto& st : a.steps) {
            double x = theta.label(tree, st.vertex, st.edge);
            if (x == 0.0) return -std::numeric_limits<double>::infinity();
            lp += std::log(x);
        }
        ll += static_cast<double>(c) * lp;
    }
    return ll;
}

inline constexpr const char* kBicConvention = "bic = d*log(n_obs) - 2*log_likelihood (smaller is better)";

struct FitResult {
    ParameterVector theta;
    bool boundary = false;
    double log_likelihood = 0.0;
    std::size_t d = 0;
    std::uint64_t n_obs = 0;
    double bic = 0.0;
};

inline double bic_value(std::size_t d, std::uint64_t n_obs, double ll) {
    return static_cast<double>(d) * std::log(static_cast<double>(n_obs)) - 2.0 * ll;
}

inline FitResult bic(const StagedTree& tree, const AtomTable& table, double alpha = 0.0) {
    if (table.total == 0) throw Error(ErrorCode::EmptyTable, "cannot score a model on zero observations");
    auto est = mle(tree, table, alpha);
    FitResult f{est.theta, est.boundary, 0.0, dimensions(tree).staged, table.total, 0.0};
    f.log_likelihood = log_likelihood(tree, f.theta, table);
    f.bic = bic_value(f.d, f.n_obs, f.log_likelihood);
    return f;
}

struct SelectConfig {
    std::optional<std::size_t> max_merges;  // none = until no merge improves
    bool same_depth = true;                 // only merge stages at equal depth
    double alpha = 0.0;
    std::size_t threads = 0;                // 0 = worker_count()
};

struct MergeRecord {
    std::size_t step = 0;
    std::string kept;      // surviving stage name
    std::string absorbed;  // stage merged into it
    std::vector<std::string> members;  // vertices of the merged stage
    double bic_before = 0.0;
    double bic_after = 0.0;
    double delta = 0.0;           // bic_after - bic_before
    double log_likelihood_delta = 0.0;
    std::size_t dimension_delta = 0;  // free parameters removed
};

struct SelectionResult {
    StagedTree tree;
    std::vector<MergeRecord> trace;
    double saturated_bic = 0.0;
    double bic = 0.0;
};

namespace detail {

// log-likelihood contribution of one stage at its (smoothed) maximizer
inline double stage_log_likelihood(const std::vector<std::uint64_t>& edges, std::uint64_t visits, double alpha) {
    if (visits == 0) return 0.0;
    double denom = static_cast<double>(visits) + static_cast<double>(edges.size()) * alpha;
    double ll = 0.0;
    for (auto c : edges)
        if (c > 0) ll += static_cast<double>(c) * std::log((static_cast<double>(c) + alpha) / denom);
    return ll;
}

struct WorkingStage {
    std::vector<std::size_t> members;  // ascending vertex indices
    std::vector<std::uint64_t> edges;
    std::uint64_t visits = 0;
    std::size_t depth = 0;
    std::size_t out_degree = 0;
    std::size_t downward = 0;
    std::string name;
    double ll = 0.0;
};

}  // namespace detail

/// Greedy backward stage merging from the saturated staging of `graph`,
/// scored by BIC. Each step evaluates every admissible pair of stages (equal
/// out-degree and downward edge, and equal depth unless disabled), applies
/// the best strict improvement and stops when none remains. Equal scores are
/// broken by the lexicographically smallest (depth, first vertex, second
/// vertex). Stages that are never visited contribute no likelihood.
inline SelectionResult select_staging(const StagedTree& graph, const AtomTable& table, const SelectConfig& config = {}) {
    if (table.total == 0) throw Error(ErrorCode::EmptyTable, "cannot score a model on zero observations");
    if (!(config.alpha >= 0.0) || !std::isfinite(config.alpha)) throw Error(ErrorCode::InvalidConfig, "smoothing alpha must be a non-negative number");
    auto start = graph.saturated();
    auto sc = stage_counts(start, table);
    const double log_n = std::log(static_cast<double>(table.total));

    std::vector<detail::WorkingStage> stages;
    for (std::size_t s = 0; s < start.stage_count(); ++s) {
        const auto& st = start.stage(s);
        detail::WorkingStage w{st.members, sc.edges[s], sc.visits[s], start.depth(st.members.front()), st.out_degree, st.downward, st.name, 0.0};
        w.ll = detail::stage_log_likelihood(w.edges, w.visits, config.alpha);
        stages.push_back(std::move(w));
    }
    auto total_bic = [&] {
        double ll = 0.0;
        std::size_t d = 0;
        for (const auto& w : stages) {
            ll += w.ll;
            d += w.out_degree - 1;
        }
        return static_cast<double>(d) * log_n - 2.0 * ll;
    };

    SelectionResult result{start, {}, total_bic(), 0.0};
    double current = result.saturated_bic;
    auto threads = worker_count(config.threads);
    std::size_t merges = 0;

    while (!config.max_merges || merges < *config.max_merges) {
        struct Candidate {
            std::size_t a, b;
            double ll_delta = 0.0;
            double delta = 0.0;
        };
        std::vector<Candidate> cands;
        for (std::size_t a = 0; a < stages.size(); ++a)
            for (std::size_t b = a + 1; b < stages.size(); ++b) {
                const auto& x = stages[a];
                const auto& y = stages[b];
                if (x.out_degree != y.out_degree || x.downward != y.downward) continue;
                if (config.same_depth && x.depth != y.depth) continue;
                cands.push_back({a, b});
            }
        if (cands.empty()) break;
        parallel_for(cands.size(), threads, [&](std::size_t c) {
            auto& cand = cands[c];
            const auto& x = stages[cand.a];
            const auto& y = stages[cand.b];
            std::vector<std::uint64_t> edges(x.edges);
            for (std::size_t j = 0; j < edges.size(); ++j) edges[j] += y.edges[j];
            double merged = detail::stage_log_likelihood(edges, x.visits + y.visits, config.alpha);
            cand.ll_delta = merged - x.ll - y.ll;
            cand.delta = -static_cast<double>(x.out_degree - 1) * log_n - 2.0 * cand.ll_delta;
        });
        // stages stay sorted by first member, so candidate order is the tie-break order
        auto key = [&](const Candidate& c) {
            return std::make_tuple(stages[c.a].depth, stages[c.a].members.front(), stages[c.b].members.front());
        };
        std::size_t best = 0;
        for (std::size_t c = 1; c < cands.size(); ++c) {
            double tol = 1e-9 * std::max(1.0, std::abs(current));
            if (cands[c].delta < cands[best].delta - tol ||
                (std::abs(cands[c].delta - cands[best].delta) <= tol && key(cands[c]) < key(cands[best])))
                best = c;
        }
        const auto& win = cands[best];
        if (!(win.delta < -1e-9 * std::max(1.0, std::abs(current)))) break;

        auto& keep = stages[win.a];
        auto& gone = stages[win.b];
        MergeRecord rec;
        rec.step = ++merges;
        rec.kept = keep.name;
        rec.absorbed = gone.name;
        rec.bic_before = current;
        rec.log_likelihood_delta = win.ll_delta;
        rec.dimension_delta = keep.out_degree - 1;

        for (std::size_t j = 0; j < keep.edges.size(); ++j) keep.edges[j] += gone.edges[j];
        keep.visits += gone.visits;
        keep.members.insert(keep.members.end(), gone.members.begin(), gone.members.end());
        std::sort(keep.members.begin(), keep.members.end());
        keep.depth = std::min(keep.depth, gone.depth);
        keep.ll = detail::stage_log_likelihood(keep.edges, keep.visits, config.alpha);
        for (auto m : keep.members) rec.members.push_back(start.name(m));
        stages.erase(stages.begin() + static_cast<std::ptrdiff_t>(win.b));

        current = total_bic();
        rec.bic_after = current;
        rec.delta = rec.bic_after - rec.bic_before;
        result.trace.push_back(std::move(rec));
    }

    std::vector<std::string> names(start.vertex_count());
    for (const auto& w : stages)
        for (auto m : w.members) names[m] = w.name;
    result.tree = start.restaged(names);
    result.bic = current;
    return result;
}

}  // namespace stagedtree

#endif  // STAGEDTREE_INFERENCE_HPP
