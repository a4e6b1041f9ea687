#include <gtest/gtest.h>

#include <algorithm>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace stagedtree;
using stk_test::vertex;

namespace {

DiscreteBN binary_bn(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> edges) {
    return DiscreteBN::make(stk_test::binary_variables(n), edges);
}

std::vector<std::size_t> identity(std::size_t n) {
    std::vector<std::size_t> o(n);
    for (std::size_t i = 0; i < n; ++i) o[i] = i;
    return o;
}

// groups of vertex names sharing a stage
std::vector<std::vector<std::string>> stage_sets(const StagedTree& t) {
    std::vector<std::vector<std::string>> out;
    for (const auto& st : t.stages()) {
        std::vector<std::string> m;
        for (auto v : st.members) m.push_back(t.name(v));
        out.push_back(m);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(BnToTree, ColliderGivesColliderTree) {
    auto bn = parse_bn(stk_test::read_file(stk_test::sample_path("collider.json")));
    auto t = bn_to_staged_tree(bn, identity(3)).tree;
    EXPECT_EQ(stage_sets(t), stage_sets(stk_test::sample_tree("collider_tree.json")));
    EXPECT_FALSE(is_regular(t).regular);
}

TEST(BnToTree, ChainAndEmpty) {
    auto chain = bn_to_staged_tree(binary_bn(3, {{0, 1}, {1, 2}}), identity(3)).tree;
    EXPECT_EQ(stage_sets(chain), (std::vector<std::vector<std::string>>{{"v1"}, {"v2"}, {"v3"}, {"v4", "v6"}, {"v5", "v7"}}));
    auto empty = bn_to_staged_tree(binary_bn(3, {}), identity(3)).tree;
    EXPECT_EQ(stage_sets(empty), (std::vector<std::vector<std::string>>{{"v1"}, {"v2", "v3"}, {"v4", "v5", "v6", "v7"}}));
}

TEST(BnToTree, RejectsBadOrder) {
    auto bn = binary_bn(3, {{0, 1}, {1, 2}});
    try {
        bn_to_staged_tree(bn, {2, 1, 0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::OrderInconsistentWithDAG);
    }
    EXPECT_THROW(bn_to_staged_tree(bn, {0, 1}), Error);
    EXPECT_THROW(bn_to_staged_tree(bn, {0, 0, 1}), Error);
}

TEST(BnModel, CycleRejected) {
    try {
        binary_bn(3, {{0, 1}, {1, 2}, {2, 0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CycleInGraph);
    }
}

TEST(BnModel, CptValidation) {
    const char* bad_row = R"({"variables":[{"name":"A","card":2}],"edges":[],"cpts":{"A":{"parents":[],"table":[[0.5,0.6]]}}})";
    EXPECT_THROW(parse_bn(std::string(bad_row)), Error);
    const char* wrong_rows = R"({"variables":[{"name":"A","card":2},{"name":"B","card":2}],"edges":[["A","B"]],
        "cpts":{"A":{"parents":[],"table":[[0.5,0.5]]},"B":{"parents":["A"],"table":[[0.5,0.5]]}}})";
    EXPECT_THROW(parse_bn(std::string(wrong_rows)), Error);
    const char* unknown = R"({"variables":[{"name":"A","card":2}],"edges":[],"extra":1})";
    EXPECT_THROW(parse_bn(std::string(unknown)), Error);
}

TEST(BnModel, JointMatchesTree) {
    stk_test::Rng rng(55);
    for (int rep = 0; rep < 50; ++rep) {
        auto bn = stk_test::random_bn(rng);
        auto order = *bn.topological_order();
        auto bt = bn_to_staged_tree(bn, order);
        ASSERT_TRUE(bt.labels);
        auto p = distribution_from_labels(bt.tree, *bt.labels);
        for (const auto& a : bt.tree.atoms()) {
            std::vector<std::size_t> x(bn.size());
            for (std::size_t l = 0; l < a.steps.size(); ++l) x[order[l]] = a.steps[l].edge;
            EXPECT_NEAR(p[a.index], stk_test::oracle_bn_joint(bn, x), 1e-12);
            EXPECT_NEAR(bn_joint(bn, x), stk_test::oracle_bn_joint(bn, x), 1e-15);
        }
    }
}

TEST(Decomposable, Examples) {
    EXPECT_FALSE(is_decomposable(binary_bn(3, {{0, 2}, {1, 2}})));
    EXPECT_TRUE(is_decomposable(binary_bn(3, {{0, 1}, {1, 2}})));
    EXPECT_TRUE(is_decomposable(binary_bn(3, {{0, 1}, {0, 2}, {1, 2}})));
    // 4-cycle without chord, no v-structure possible in any orientation without one
    EXPECT_FALSE(is_decomposable(binary_bn(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}})));
}

TEST(Decomposable, MatchesBruteForce) {
    for (std::size_t n = 1; n <= 5; ++n)
        for (const auto& edges : stk_test::all_dags(n)) EXPECT_EQ(is_decomposable(binary_bn(n, edges)), stk_test::oracle_decomposable(n, edges));
}

TEST(SimpleOrdering, Examples) {
    auto chain = find_simple_ordering(binary_bn(3, {{0, 1}, {1, 2}}));
    ASSERT_TRUE(chain);
    EXPECT_EQ(*chain, identity(3));
    EXPECT_FALSE(find_simple_ordering(binary_bn(3, {{0, 2}, {1, 2}})));
    auto single = find_simple_ordering(binary_bn(1, {}));
    ASSERT_TRUE(single);
    EXPECT_EQ(single->size(), 1u);
}

TEST(SimpleOrdering, ContainmentAndSimpleTrees) {
    for (std::size_t n = 1; n <= 4; ++n)
        for (const auto& edges : stk_test::all_dags(n)) {
            auto bn = binary_bn(n, edges);
            auto o = find_simple_ordering(bn);
            if (!o) continue;
            for (std::size_t i = 1; i < o->size(); ++i) {
                auto last = (*o)[i - 1];
                for (auto p : bn.parents((*o)[i])) {
                    auto lp = bn.parents(last);
                    EXPECT_TRUE(p == last || std::find(lp.begin(), lp.end(), p) != lp.end());
                }
            }
            EXPECT_TRUE(is_simple(bn_to_staged_tree(bn, *o).tree));
        }
}

TEST(Classify, Examples) {
    auto chain = classify_bn(binary_bn(3, {{0, 1}, {1, 2}}));
    EXPECT_TRUE(chain.regular_certified);
    EXPECT_TRUE(chain.tree_regular);
    auto collider = classify_bn(binary_bn(3, {{0, 2}, {1, 2}}));
    EXPECT_FALSE(collider.regular_certified);
    EXPECT_FALSE(collider.tree_regular);
    auto empty = classify_bn(binary_bn(3, {}));
    EXPECT_TRUE(empty.decomposable);
    EXPECT_TRUE(empty.tree_regular);
}

TEST(Classify, CertifiedImpliesRegular) {
    for (std::size_t n = 1; n <= 4; ++n)
        for (const auto& edges : stk_test::all_dags(n)) {
            auto c = classify_bn(binary_bn(n, edges));
            if (c.regular_certified) { EXPECT_TRUE(c.tree_regular); }
        }
}
