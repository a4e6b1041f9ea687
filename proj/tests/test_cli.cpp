#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support/fixtures.hpp"

#ifndef STK_GOLDEN_DIR
#error "STK_GOLDEN_DIR must point at the golden output directory"
#endif

using stagedtree::json;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args, const std::string& input = "") {
    std::istringstream in(input);
    std::ostringstream out, err;
    int code = stagedtree::cli::run(args, in, out, err);
    return {code, out.str(), err.str()};
}

std::string s(const char* f) { return stk_test::sample_path(f); }

// Compares against tests/golden/<name>; STK_UPDATE_GOLDEN=1 rewrites the files.
void expect_golden(const std::string& name, const std::string& text) {
    auto path = std::filesystem::path(STK_GOLDEN_DIR) / name;
    if (const char* up = std::getenv("STK_UPDATE_GOLDEN"); up && std::string(up) == "1") {
        std::ofstream(path) << text;
        return;
    }
    ASSERT_TRUE(std::filesystem::exists(path)) << "missing golden file " << path;
    EXPECT_EQ(text, stk_test::read_file(path.string())) << name;
}

}  // namespace

TEST(Cli, GoldenOutputs) {
    struct Case {
        std::string golden;
        std::vector<std::string> args;
    };
    std::vector<Case> cases{
        {"inspect_collider_tree.json", {"inspect", s("collider_tree.json")}},
        {"expfam_binary3.json", {"expfam", s("binary3.json"), "--theta", "uniform", "--formulas"}},
        {"expfam_star4_random.json", {"--seed", "3", "expfam", s("star4.json"), "--theta", "random"}},
        {"check_collider_tree.json", {"check", s("collider_tree.json"), "--equations", "pretty"}},
        {"check_simple_tree.json", {"check", s("simple_tree.json")}},
        {"from_bn_chain.json", {"from-bn", s("chain.json")}},
        {"from_bn_collider_classify.json", {"from-bn", s("collider.json"), "--classify"}},
        {"fit_star2.json", {"fit", "--tree", s("star2.json"), "--data", s("star2_counts.csv")}},
        {"select_simple_tree.json", {"select", "--tree-graph", s("simple_tree.json"), "--data", s("simple_tree_sample.csv")}},
    };
    for (const auto& c : cases) {
        auto r = run(c.args);
        ASSERT_EQ(r.code, 0) << c.golden << ": " << r.err;
        expect_golden(c.golden, r.out);
        // byte-stable on a second run
        EXPECT_EQ(run(c.args).out, r.out);
    }
}

TEST(Cli, CheckColliderTreeMatchesDocumentedExample) {
    auto r = run({"check", s("collider_tree.json")});
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    EXPECT_FALSE(j["regular"]);
    EXPECT_FALSE(j["balanced"]);
    EXPECT_FALSE(j["simple"]);
    EXPECT_EQ(j["witness"], json::array({"v2", "v3", 1}));
    EXPECT_EQ(j["d0"], 7);
    EXPECT_EQ(j["d"], 6);
}

TEST(Cli, ExpfamUniform) {
    auto r = run({"expfam", s("binary3.json"), "--theta", "uniform"});
    ASSERT_EQ(r.code, 0);
    auto j = json::parse(r.out);
    for (const auto& e : j["eta"]) EXPECT_EQ(e["value"].get<double>(), 0.0);
    EXPECT_NEAR(j["psi"].get<double>(), std::log(8.0), 1e-11);
}

TEST(Cli, ExpfamInlineTheta) {
    auto r = run({"expfam", s("star4.json"), "--theta", R"({"r":[0.1,0.2,0.3,0.4]})"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_NEAR(j["eta"][0]["value"].get<double>(), std::log(0.25), 1e-11);
    EXPECT_EQ(j["theta_source"], "given");
}

TEST(Cli, PipeFromBnIntoCheck) {
    auto tree = run({"from-bn", s("collider.json")});
    ASSERT_EQ(tree.code, 0);
    auto r = run({"check", "-"}, tree.out);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_FALSE(json::parse(r.out)["regular"]);
    auto chain = run({"check", "-"}, run({"from-bn", s("chain.json")}).out);
    EXPECT_TRUE(json::parse(chain.out)["regular"]);
}

TEST(Cli, FromBnOrder) {
    auto ok = run({"from-bn", s("chain.json"), "--order", "X,Y,Z"});
    EXPECT_EQ(ok.code, 0);
    auto bad = run({"from-bn", s("chain.json"), "--order", "Z,Y,X"});
    EXPECT_EQ(bad.code, 2);
    EXPECT_EQ(json::parse(bad.err)["error"]["code"], "OrderInconsistentWithDAG");
}

TEST(Cli, ValidationErrors) {
    auto missing = run({"inspect", s("does_not_exist.json")});
    EXPECT_EQ(missing.code, 2);
    EXPECT_TRUE(missing.out.empty());
    EXPECT_TRUE(json::parse(missing.err)["error"].contains("message"));

    auto one_child = run({"inspect", "-"}, R"({"vertices":[{"id":"a","children":["b"]}]})");
    EXPECT_EQ(one_child.code, 2);
    EXPECT_EQ(json::parse(one_child.err)["error"]["code"], "VertexWithOneChild");

    auto unknown_field = run({"inspect", "-"}, R"({"vertices":[],"colour":"red"})");
    EXPECT_EQ(unknown_field.code, 2);

    auto unknown_flag = run({"check", s("collider_tree.json"), "--frobnicate"});
    EXPECT_EQ(unknown_flag.code, 2);
    auto no_sub = run({});
    EXPECT_EQ(no_sub.code, 2);

    auto bad_category = run({"fit", "--tree", s("collider_tree.json"), "--data", "-"}, "X,Y,Z\n0,maybe,1\n");
    EXPECT_EQ(bad_category.code, 2);
    EXPECT_EQ(json::parse(bad_category.err)["error"]["code"], "UnknownCategory");
}

TEST(Cli, SelectConfig) {
    auto dir = std::filesystem::temp_directory_path();
    auto cfg = dir / "stk_select_cfg.json";
    std::ofstream(cfg) << R"({"max_merges":0})";
    auto r = run({"select", "--tree-graph", s("simple_tree.json"), "--data", s("simple_tree_sample.csv"), "--config", cfg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = json::parse(r.out);
    EXPECT_TRUE(j["trace"].empty());
    EXPECT_EQ(j["bic"], j["saturated_bic"]);
    std::ofstream(cfg) << R"({"max_merges":0,"speed":"fast"})";
    auto bad = run({"select", "--tree-graph", s("simple_tree.json"), "--data", s("simple_tree_sample.csv"), "--config", cfg.string()});
    EXPECT_EQ(bad.code, 2);
    std::filesystem::remove(cfg);
}

TEST(Cli, OutputFile) {
    auto path = std::filesystem::temp_directory_path() / "stk_out.json";
    auto r = run({"--output", path.string(), "--pretty", "inspect", s("star4.json")});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    auto j = json::parse(stk_test::read_file(path.string()));
    EXPECT_EQ(j["n"], 4);
    std::filesystem::remove(path);
}
