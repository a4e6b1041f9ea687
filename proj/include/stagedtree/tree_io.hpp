#ifndef STAGEDTREE_TREE_IO_HPP
#define STAGEDTREE_TREE_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stagedtree/error.hpp"
#include "stagedtree/parameters.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

using json = nlohmann::json;

namespace io {

// Round to 12 significant digits so the shortest round-trip representation
// written by the JSON serializer is stable across platforms.
inline double round_sig(double x, int digits = 12) {
    if (!std::isfinite(x) || x == 0.0) return x;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

// Non-finite values have no JSON representation; emit them as strings.
inline json number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return round_sig(x);
}

inline json numbers(const std::vector<double>& xs) {
    json arr = json::array();
    for (double x : xs) arr.push_back(number(x));
    return arr;
}

inline void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed, std::string_view where) {
    if (!obj.is_object()) throw Error(ErrorCode::ParseError, std::string(where) + " must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || item.key() == a;
        if (!ok) throw Error(ErrorCode::UnknownField, "unknown field \"" + item.key() + "\" in " + std::string(where));
    }
}

inline json parse_json_text(const std::string& text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string(what) + ": " + e.what());
    }
}

template <typename T>
T get_as(const json& j, std::string_view what) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::ParseError, "bad value for " + std::string(what) + ": " + j.dump());
    }
}

}  // namespace io

// A parsed tree-description file: the tree plus optional stage labels.
struct TreeDocument {
    TreeSpec spec;
    std::optional<std::map<std::string, std::vector<double>>> labels;
};

/// Tree-description schema:
///
///   {
///     "vertices":  [{"id": "v1", "children": ["v2", "v3"]}, ...],
///     "stages":    {"v2": "s", "v3": "s"},          optional
///     "downward":  {"v1": 1},                        optional, 1-based
///     "variables": [{"name": "X", "states": ["0", "1"]}, ...],  optional, one per depth
///     "labels":    {"s": [0.6, 0.4]}                 optional, per stage id
///   }
///
/// Leaves may be omitted from "vertices". Inner vertices without a stage
/// entry form a singleton stage named after the vertex. Unknown fields are
/// rejected at every level.
inline TreeDocument parse_tree_document(const json& j) {
    io::reject_unknown(j, {"vertices", "stages", "downward", "variables", "labels"}, "tree description");
    TreeDocument doc;
    if (!j.contains("vertices") || !j["vertices"].is_array()) throw Error(ErrorCode::ParseError, "tree description needs a \"vertices\" array");
    for (const auto& jv : j["vertices"]) {
        io::reject_unknown(jv, {"id", "children"}, "vertex");
        if (!jv.contains("id")) throw Error(ErrorCode::ParseError, "vertex without \"id\"");
        VertexSpec vs;
        vs.id = io::get_as<std::string>(jv["id"], "vertex id");
        if (jv.contains("children")) vs.children = io::get_as<std::vector<std::string>>(jv["children"], "children of " + vs.id);
        doc.spec.vertices.push_back(std::move(vs));
    }
    if (j.contains("stages")) {
        if (!j["stages"].is_object()) throw Error(ErrorCode::ParseError, "\"stages\" must map vertex ids to stage ids");
        for (const auto& item : j["stages"].items()) doc.spec.stages[item.key()] = io::get_as<std::string>(item.value(), "stage of " + item.key());
    }
    if (j.contains("downward")) {
        if (!j["downward"].is_object()) throw Error(ErrorCode::ParseError, "\"downward\" must map vertex ids to edge indices");
        for (const auto& item : j["downward"].items()) {
            if (!item.value().is_number_integer() || item.value().get<long long>() < 1)
                throw Error(ErrorCode::DownwardEdgeOutOfRange, "downward edge of " + item.key() + " must be a positive integer");
            doc.spec.downward[item.key()] = item.value().get<std::size_t>();
        }
    }
    if (j.contains("variables")) {
        if (!j["variables"].is_array()) throw Error(ErrorCode::ParseError, "\"variables\" must be an array");
        for (const auto& jv : j["variables"]) {
            io::reject_unknown(jv, {"name", "states"}, "variable");
            if (!jv.contains("name") || !jv.contains("states")) throw Error(ErrorCode::ParseError, "variable needs \"name\" and \"states\"");
            Variable var{io::get_as<std::string>(jv["name"], "variable name"), io::get_as<std::vector<std::string>>(jv["states"], "variable states")};
            doc.spec.variables.push_back(std::move(var));
        }
    }
    if (j.contains("labels")) {
        if (!j["labels"].is_object()) throw Error(ErrorCode::ParseError, "\"labels\" must map stage ids to label arrays");
        std::map<std::string, std::vector<double>> labels;
        for (const auto& item : j["labels"].items()) labels[item.key()] = io::get_as<std::vector<double>>(item.value(), "labels of " + item.key());
        doc.labels = std::move(labels);
    }
    return doc;
}

inline TreeDocument parse_tree_document(const std::string& text) {
    return parse_tree_document(io::parse_json_text(text, "tree description"));
}

/// Writes a tree-description object. Vertices appear in breadth-first order,
/// leaves included; stages are listed for every inner vertex. Labels keep full
/// precision so the file re-validates under the sum-to-one tolerance.
inline json tree_to_json(const StagedTree& tree, const ParameterVector* labels = nullptr) {
    json out = json::object();
    json vertices = json::array();
    for (std::size_t v = 0; v < tree.vertex_count(); ++v) {
        json ch = json::array();
        for (auto c : tree.children(v)) ch.push_back(tree.name(c));
        vertices.push_back(json{{"id", tree.name(v)}, {"children", ch}});
    }
    out["vertices"] = vertices;
    json stages = json::object();
    json downward = json::object();
    for (auto v : tree.inner_vertices()) {
        stages[tree.name(v)] = tree.stage(tree.stage_of(v)).name;
        if (tree.downward(v) + 1 != tree.out_degree(v)) downward[tree.name(v)] = tree.downward(v) + 1;
    }
    out["stages"] = stages;
    if (!downward.empty()) out["downward"] = downward;
    if (!tree.variables().empty()) {
        json vars = json::array();
        for (const auto& var : tree.variables()) vars.push_back(json{{"name", var.name}, {"states", var.states}});
        out["variables"] = vars;
    }
    if (labels) {
        json lj = json::object();
        for (std::size_t s = 0; s < tree.stage_count(); ++s) lj[tree.stage(s).name] = labels->values()[s];
        out["labels"] = lj;
    }
    return out;
}

}  // namespace stagedtree

#endif  // STAGEDTREE_TREE_IO_HPP
