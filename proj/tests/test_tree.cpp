#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace stagedtree;
using stk_test::vertex;

namespace {

ErrorCode code_of(const TreeSpec& spec) {
    try {
        build_tree(spec);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::ParseError;
}

}  // namespace

TEST(BuildTree, ColliderTreeShape) {
    auto t = stk_test::sample_tree("collider_tree.json");
    EXPECT_EQ(t.inner_count(), 7u);
    EXPECT_EQ(t.leaf_count(), 8u);
    EXPECT_EQ(t.stage_count(), 6u);
    EXPECT_EQ(t.stage_of(vertex(t, "v2")), t.stage_of(vertex(t, "v3")));
    EXPECT_EQ(t.root(), vertex(t, "v1"));
    // breadth-first numbering
    for (int i = 1; i <= 7; ++i) EXPECT_EQ(t.ordinal(vertex(t, "v" + std::to_string(i))), static_cast<std::size_t>(i - 1));
}

TEST(BuildTree, Star) {
    auto t = stk_test::star(4);
    EXPECT_EQ(t.inner_count(), 1u);
    EXPECT_EQ(t.out_degree(t.root()), 4u);
    EXPECT_EQ(t.leaf_count(), 4u);
    EXPECT_TRUE(t.is_star());
    EXPECT_EQ(t.downward(t.root()), 3u);
}

TEST(BuildTree, Errors) {
    TreeSpec one_child{{{"a", {"b"}}, {"b", {}}}, {}, {}, {}};
    EXPECT_EQ(code_of(one_child), ErrorCode::VertexWithOneChild);

    auto mismatch = stk_test::binary_depth3({{"v1", "s"}, {"v2", "s"}});
    mismatch.vertices[1].children.push_back("extra");
    EXPECT_EQ(code_of(mismatch), ErrorCode::StageOutDegreeMismatch);

    TreeSpec cycle{{{"r", {"a", "b"}}, {"a", {"c", "d"}}, {"c", {"a", "e"}}}, {}, {}, {}};
    auto c = code_of(cycle);
    EXPECT_TRUE(c == ErrorCode::CycleDetected || c == ErrorCode::MultipleParents) << to_string(c);

    TreeSpec loop{{{"r", {"a", "b"}}, {"x", {"y", "z"}}, {"y", {"x", "w"}}}, {}, {}, {}};
    EXPECT_EQ(code_of(loop), ErrorCode::CycleDetected);

    auto inconsistent = stk_test::binary_depth3({{"v2", "s"}, {"v3", "s"}});
    inconsistent.downward["v2"] = 1;
    EXPECT_EQ(code_of(inconsistent), ErrorCode::DownwardEdgeInconsistentWithinStage);

    auto range = stk_test::binary_depth3();
    range.downward["v1"] = 3;
    EXPECT_EQ(code_of(range), ErrorCode::DownwardEdgeOutOfRange);

    TreeSpec dup{{{"r", {"a", "b"}}, {"r", {"c", "d"}}}, {}, {}, {}};
    EXPECT_EQ(code_of(dup), ErrorCode::DuplicateVertex);

    TreeSpec two_parents{{{"r", {"a", "b"}}, {"a", {"b", "c"}}}, {}, {}, {}};
    EXPECT_EQ(code_of(two_parents), ErrorCode::MultipleParents);

    TreeSpec forest{{{"r", {"a", "b"}}, {"q", {"c", "d"}}}, {}, {}, {}};
    EXPECT_EQ(code_of(forest), ErrorCode::MultipleRoots);
}

TEST(BuildTree, DownwardOverride) {
    auto spec = stk_test::binary_depth3({{"v2", "s"}, {"v3", "s"}});
    spec.downward = {{"v2", 1}, {"v3", 1}};
    auto t = build_tree(spec);
    EXPECT_EQ(t.downward(vertex(t, "v2")), 0u);
    EXPECT_EQ(t.downward(vertex(t, "v3")), 0u);
    EXPECT_EQ(t.downward(vertex(t, "v1")), 1u);
}

TEST(Atoms, DepthFirstOrder) {
    auto t = build_tree(stk_test::binary_depth3());
    ASSERT_EQ(t.atoms().size(), 8u);
    const auto& first = t.atoms()[0];
    ASSERT_EQ(first.steps.size(), 3u);
    for (const auto& s : first.steps) EXPECT_EQ(s.edge, 0u);
    EXPECT_EQ(t.name(first.leaf), "l1");
    EXPECT_EQ(t.name(t.atoms()[7].leaf), "l8");
    auto star = stk_test::star(5);
    ASSERT_EQ(star.atoms().size(), 5u);
    for (const auto& a : star.atoms()) EXPECT_EQ(a.steps.size(), 1u);
    EXPECT_EQ(stk_test::sample_tree("simple_tree.json").atoms().size(), 8u);
}

TEST(Atoms, MatchIndependentEnumeration) {
    stk_test::Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        auto t = stk_test::random_staged_tree(rng);
        stk_test::SpecView view(t.spec());
        auto expected = stk_test::oracle_atoms(view);
        ASSERT_EQ(expected.size(), t.atoms().size());
        for (std::size_t r = 0; r < expected.size(); ++r) {
            const auto& a = t.atoms()[r];
            EXPECT_EQ(t.name(a.leaf), expected[r].leaf);
            ASSERT_EQ(a.steps.size(), expected[r].path.size());
            for (std::size_t i = 0; i < a.steps.size(); ++i) {
                EXPECT_EQ(t.name(a.steps[i].vertex), expected[r].path[i].first);
                EXPECT_EQ(a.steps[i].edge, expected[r].path[i].second);
            }
        }
    }
}

TEST(Indicator, Binary3) {
    auto t = build_tree(stk_test::binary_depth3());
    const auto& up = t.atoms()[0];
    EXPECT_EQ(indicator(t, up, vertex(t, "v1"), 0), 1);
    EXPECT_EQ(indicator(t, up, vertex(t, "v3"), 0), 0);
    EXPECT_EQ(indicator_vertex(t, up, vertex(t, "v3")), 0);
    EXPECT_EQ(indicator_vertex(t, up, vertex(t, "v2")), 1);
    EXPECT_THROW(indicator(t, up, vertex(t, "v1"), 2), Error);
    EXPECT_THROW(indicator(t, up, 99, 0), Error);
}

TEST(Indicator, LocalSumIdentity) {
    stk_test::Rng rng(5);
    int checked = 0;
    for (int rep = 0; rep < 200 && checked < 60; ++rep) {
        auto t = stk_test::random_staged_tree(rng);
        if (t.leaf_count() > 20) continue;
        ++checked;
        for (const auto& a : t.atoms())
            for (auto v : t.inner_vertices()) {
                int sum = 0, first = 0;
                auto k = t.out_degree(v);
                for (std::size_t j = 0; j < k; ++j) sum += indicator(t, a, v, j);
                for (std::size_t j = 0; j + 1 < k; ++j) first += indicator(t, a, v, j);
                EXPECT_EQ(sum, indicator_vertex(t, a, v));
                EXPECT_EQ(indicator(t, a, v, k - 1), indicator_vertex(t, a, v) * (1 - first));
            }
    }
    EXPECT_GE(checked, 20);
}

TEST(Parameters, AtomProbabilities) {
    auto t = build_tree(stk_test::binary_depth3());
    auto u = ParameterVector::uniform(t);
    for (const auto& a : t.atoms()) EXPECT_DOUBLE_EQ(atom_probability(t, u, a), 0.125);

    auto s = stk_test::star(4);
    auto th = ParameterVector::from_stage_values(s, {{0.1, 0.2, 0.3, 0.4}});
    EXPECT_DOUBLE_EQ(atom_probability(s, th, s.atoms()[2]), 0.3);

    auto fa = stk_test::sample_tree("collider_tree.json");
    std::map<std::string, std::vector<double>> named{{"u1", {0.5, 0.5}}, {"u2", {0.6, 0.4}}, {"u4", {0.7, 0.3}},
                                                     {"u5", {0.7, 0.3}}, {"u6", {0.7, 0.3}}, {"u7", {0.7, 0.3}}};
    auto tf = ParameterVector::from_named(fa, named);
    EXPECT_NEAR(atom_probability(fa, tf, fa.atoms()[0]), 0.21, 1e-15);
}

TEST(Parameters, Validation) {
    auto s = stk_test::star(3);
    EXPECT_THROW(ParameterVector::from_stage_values(s, {{0.5, 0.5}}), Error);
    EXPECT_THROW(ParameterVector::from_stage_values(s, {{0.5, 0.5, 0.1}}), Error);
    EXPECT_THROW(ParameterVector::from_stage_values(s, {{1.0, 0.0, 0.0}}), Error);
    EXPECT_NO_THROW(ParameterVector::from_stage_values(s, {{1.0, 0.0, 0.0}}, Support::Closed));
    EXPECT_THROW(ParameterVector::from_named(s, {{"unknown", {0.2, 0.3, 0.5}}}), Error);
}

TEST(Parameters, DistributionSumsToOne) {
    stk_test::Rng rng(3);
    for (int rep = 0; rep < 100; ++rep) {
        auto t = stk_test::random_staged_tree(rng);
        auto th = stk_test::random_theta(rng, t);
        auto p = distribution_from_labels(t, th);
        EXPECT_NEAR(std::accumulate(p.values().begin(), p.values().end(), 0.0), 1.0, 1e-12);
        stk_test::SpecView view(t.spec());
        auto named = th.named(t);
        auto oracle = stk_test::oracle_atoms(view);
        for (std::size_t r = 0; r < oracle.size(); ++r)
            EXPECT_NEAR(p[r], stk_test::oracle_probability(view, named, oracle[r]), 1e-15);
    }
}

TEST(Parameters, LabelsFromDistribution) {
    auto s = stk_test::star(2);
    auto th = labels_from_distribution(s, AtomDistribution({0.25, 0.75}));
    EXPECT_DOUBLE_EQ(th.value(0, 0), 0.25);

    TreeSpec d2{{{"r", {"a", "b"}}, {"a", {"x1", "x2"}}, {"b", {"x3", "x4"}}}, {}, {}, {}};
    auto t = build_tree(d2);
    auto fit = labels_from_distribution(t, AtomDistribution({0.1, 0.2, 0.3, 0.4}));
    EXPECT_NEAR(fit.label(t, vertex(t, "r"), 0), 0.3, 1e-15);
    EXPECT_NEAR(fit.label(t, vertex(t, "a"), 0), 1.0 / 3, 1e-15);
    EXPECT_NEAR(fit.label(t, vertex(t, "b"), 0), 3.0 / 7, 1e-15);

    auto uniform = labels_from_distribution(build_tree(stk_test::binary_depth3()), AtomDistribution(std::vector<double>(8, 0.125)));
    for (const auto& st : uniform.values())
        for (double x : st) EXPECT_DOUBLE_EQ(x, 0.5);

    try {
        labels_from_distribution(t, AtomDistribution({0.0, 0.2, 0.3, 0.5}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroMass);
    }
    try {
        labels_from_distribution(stk_test::sample_tree("collider_tree.json"), AtomDistribution(std::vector<double>(8, 0.125)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NontrivialStaging);
    }
}

TEST(Parameters, RoundTripOnSaturatedTrees) {
    stk_test::Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        auto t = stk_test::random_staged_tree(rng).saturated();
        auto th = stk_test::random_theta(rng, t);
        auto back = labels_from_distribution(t, distribution_from_labels(t, th));
        for (std::size_t s = 0; s < t.stage_count(); ++s)
            for (std::size_t j = 0; j < t.stage(s).out_degree; ++j) EXPECT_NEAR(back.value(s, j), th.value(s, j), 1e-12);
    }
}

TEST(Dimensions, Examples) {
    auto a = dimensions(stk_test::sample_tree("collider_tree.json"));
    auto b = dimensions(stk_test::sample_tree("simple_tree.json"));
    EXPECT_EQ(a.saturated, 7u);
    EXPECT_EQ(a.staged, 6u);
    EXPECT_EQ(b.saturated, 7u);
    EXPECT_EQ(b.staged, 4u);
    auto s = dimensions(stk_test::star(6));
    EXPECT_EQ(s.saturated, 5u);
    EXPECT_EQ(s.staged, 5u);
}

TEST(Dimensions, AdditiveOverStages) {
    stk_test::Rng rng(23);
    for (int rep = 0; rep < 200; ++rep) {
        auto t = stk_test::random_staged_tree(rng);
        auto d = dimensions(t);
        EXPECT_EQ(d.staged, stk_test::oracle_dimension(stk_test::SpecView(t.spec())));
        EXPECT_LE(d.staged, d.saturated);
        EXPECT_EQ(d.staged == d.saturated, t.has_trivial_staging());
    }
}

TEST(DerivedTrees, SaturatedAndRestaged) {
    auto b = stk_test::sample_tree("simple_tree.json");
    auto sat = b.saturated();
    EXPECT_TRUE(sat.has_trivial_staging());
    EXPECT_EQ(sat.stage(sat.stage_of(vertex(sat, "v4"))).name, "v4");
    std::vector<std::string> names(b.vertex_count());
    for (std::size_t v = 0; v < b.vertex_count(); ++v) names[v] = b.is_leaf(v) ? "" : "all" + std::to_string(b.depth(v));
    auto merged = b.restaged(names);
    EXPECT_EQ(merged.stage_count(), 3u);
    auto again = build_tree(b.spec());
    EXPECT_EQ(again.stage_count(), b.stage_count());
    for (std::size_t s = 0; s < b.stage_count(); ++s) EXPECT_EQ(again.stage(s).members, b.stage(s).members);
}
