#ifndef STAGEDTREE_TESTS_FIXTURES_HPP
#define STAGEDTREE_TESTS_FIXTURES_HPP

#include <fstream>
#include <iterator>
#include <string>

#include "stagedtree/stagedtree.hpp"

#ifndef STK_SAMPLES_DIR
#error "STK_SAMPLES_DIR must point at the samples directory"
#endif

namespace stk_test {

inline std::string sample_path(const std::string& file) { return std::string(STK_SAMPLES_DIR) + "/" + file; }

inline std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

inline stagedtree::TreeDocument sample_document(const std::string& file) {
    return stagedtree::parse_tree_document(read_file(sample_path(file)));
}

inline stagedtree::StagedTree sample_tree(const std::string& file) { return stagedtree::build_tree(sample_document(file).spec); }

inline std::size_t vertex(const stagedtree::StagedTree& t, const std::string& name) { return t.find_vertex(name).value(); }

// binary depth-3 graph with ids v1..v7, l1..l8 and the given stage map
inline stagedtree::TreeSpec binary_depth3(std::map<std::string, std::string> stages = {}) {
    stagedtree::TreeSpec s;
    s.vertices = {{"v1", {"v2", "v3"}}, {"v2", {"v4", "v5"}}, {"v3", {"v6", "v7"}}, {"v4", {"l1", "l2"}},
                  {"v5", {"l3", "l4"}}, {"v6", {"l5", "l6"}}, {"v7", {"l7", "l8"}}};
    s.stages = std::move(stages);
    return s;
}

inline stagedtree::StagedTree star(std::size_t n) {
    stagedtree::TreeSpec s;
    stagedtree::VertexSpec root{"r", {}};
    for (std::size_t i = 0; i < n; ++i) root.children.push_back("x" + std::to_string(i + 1));
    s.vertices.push_back(root);
    return stagedtree::build_tree(s);
}

}  // namespace stk_test

#endif  // STAGEDTREE_TESTS_FIXTURES_HPP
