#ifndef STAGEDTREE_TOOLS_CLI_HPP
#define STAGEDTREE_TOOLS_CLI_HPP

#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stagedtree/stagedtree.hpp"

namespace stagedtree::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kValidation = 2 };

namespace detail {

struct Context {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
    std::string output = "-";
    bool pretty = false;
    unsigned long long seed = 1;
};

inline std::string read_input(Context& ctx, const std::string& path) {
    if (path == "-") return std::string(std::istreambuf_iterator<char>(ctx.in), {});
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::ParseError, "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

inline void emit(Context& ctx, const json& j) {
    std::string text = j.dump(ctx.pretty ? 2 : -1) + "\n";
    if (ctx.output == "-") {
        ctx.out << text;
        return;
    }
    std::ofstream f(ctx.output);
    if (!f) throw Error(ErrorCode::ParseError, "cannot write " + ctx.output);
    f << text;
}

struct LoadedTree {
    StagedTree tree;
    std::optional<ParameterVector> labels;
};

inline LoadedTree load_tree(Context& ctx, const std::string& path) {
    auto doc = parse_tree_document(read_input(ctx, path));
    LoadedTree lt{build_tree(doc.spec), std::nullopt};
    if (doc.labels) lt.labels = ParameterVector::from_named(lt.tree, *doc.labels);
    return lt;
}

inline json edge_ref(const StagedTree& tree, std::size_t v, std::size_t j) { return json::array({tree.name(v), j + 1}); }

inline json triple_ref(const StagedTree& tree, const StageTriple& t) {
    return json::array({tree.name(t.first), tree.name(t.second), t.edge + 1});
}

inline json labels_json(const StagedTree& tree, const ParameterVector& theta) {
    json j = json::object();
    for (std::size_t s = 0; s < tree.stage_count(); ++s) j[tree.stage(s).name] = io::numbers(theta.values()[s]);
    return j;
}

// Random labels with every entry at least 0.02 (Dirichlet(1) mixed with uniform).
inline ParameterVector random_labels(const StagedTree& tree, unsigned long long seed) {
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> ex(1.0);
    std::vector<std::vector<double>> values;
    for (const auto& st : tree.stages()) {
        std::vector<double> w(st.out_degree);
        double sum = 0.0;
        for (auto& x : w) sum += (x = ex(rng));
        double floor = 0.02, k = static_cast<double>(w.size());
        for (auto& x : w) x = floor + (1.0 - floor * k) * x / sum;
        double s2 = 0.0;
        for (auto x : w) s2 += x;
        for (auto& x : w) x /= s2;
        values.push_back(std::move(w));
    }
    return ParameterVector::from_stage_values(tree, std::move(values));
}

inline ParameterVector resolve_theta(Context& ctx, const LoadedTree& lt, const std::string& spec, std::string& source) {
    if (spec.empty()) {
        if (lt.labels) {
            source = "file";
            return *lt.labels;
        }
        source = "uniform";
        return ParameterVector::uniform(lt.tree);
    }
    if (spec == "uniform") {
        source = "uniform";
        return ParameterVector::uniform(lt.tree);
    }
    if (spec == "random") {
        source = "random";
        return random_labels(lt.tree, ctx.seed);
    }
    if (spec == "file") {
        if (!lt.labels) throw Error(ErrorCode::InvalidParameter, "tree file has no \"labels\"");
        source = "file";
        return *lt.labels;
    }
    std::string text = spec.front() == '{' ? spec : read_input(ctx, spec);
    auto j = io::parse_json_text(text, "labels");
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "labels must map stage ids to arrays");
    std::map<std::string, std::vector<double>> named;
    for (const auto& item : j.items()) named[item.key()] = io::get_as<std::vector<double>>(item.value(), "labels of " + item.key());
    source = "given";
    return ParameterVector::from_named(lt.tree, named);
}

inline json inspect(const StagedTree& tree) {
    auto dims = dimensions(tree);
    json vertices = json::array();
    for (std::size_t v = 0; v < tree.vertex_count(); ++v) {
        json jv{{"id", tree.name(v)}, {"depth", tree.depth(v)}};
        json ch = json::array();
        for (auto c : tree.children(v)) ch.push_back(tree.name(c));
        jv["children"] = ch;
        if (tree.is_leaf(v)) {
            jv["ordinal"] = nullptr;
            jv["stage"] = nullptr;
        } else {
            jv["ordinal"] = tree.ordinal(v) + 1;
            jv["stage"] = tree.stage(tree.stage_of(v)).name;
            jv["downward"] = tree.downward(v) + 1;
        }
        vertices.push_back(jv);
    }
    json stages = json::array();
    for (const auto& st : tree.stages()) {
        json members = json::array();
        for (auto m : st.members) members.push_back(tree.name(m));
        stages.push_back(json{{"id", st.name}, {"members", members}, {"out_degree", st.out_degree}, {"downward", st.downward + 1}});
    }
    json atoms = json::array();
    for (const auto& a : tree.atoms()) {
        json path = json::array();
        for (const auto& st : a.steps) path.push_back(edge_ref(tree, st.vertex, st.edge));
        atoms.push_back(json{{"index", a.index + 1}, {"path", path}, {"leaf", tree.name(a.leaf)}});
    }
    return json{{"k", tree.inner_count()}, {"n", tree.leaf_count()}, {"d0", dims.saturated}, {"d", dims.staged},
                {"trivial_staging", tree.has_trivial_staging()}, {"vertices", vertices}, {"stages", stages}, {"atoms", atoms}};
}

inline json expfam(const StagedTree& tree, const ParameterVector& theta, const std::string& source, bool formulas) {
    auto form = natural_parameters(tree, theta);
    LabelNames names(tree);
    auto symbolic = eta_formulas(tree);
    json statistic = json::array();
    json eta = json::array();
    for (std::size_t p = 0; p < form.layout.size(); ++p) {
        const auto& c = form.layout[p];
        statistic.push_back(json{{"vertex", tree.name(c.vertex)}, {"edge", c.edge + 1}, {"symbol", names.free_label(c.vertex, c.edge, "T")}});
        json e{{"vertex", tree.name(c.vertex)}, {"edge", c.edge + 1}, {"symbol", names.free_label(c.vertex, c.edge, "eta")}, {"value", io::number(form.eta[p])}};
        if (formulas) e["formula"] = render_eta(tree, symbolic[p]);
        eta.push_back(e);
    }
    json n = json::object();
    for (std::size_t v = 0; v < tree.vertex_count(); ++v)
        if (!tree.is_leaf(v)) n[tree.name(v)] = io::number(form.n[v]);
    json out{{"theta_source", source}, {"labels", labels_json(tree, theta)}, {"statistic", statistic}, {"eta", eta}, {"psi", io::number(form.psi)}, {"N", n}};
    if (formulas) {
        out["psi_formula"] = render_psi(tree);
        json lines = json::array();
        for (std::size_t p = 0; p < symbolic.size(); ++p)
            lines.push_back(names.free_label(form.layout[p].vertex, form.layout[p].edge, "eta") + " = " + render_eta(tree, symbolic[p]));
        lines.push_back("psi = " + render_psi(tree));
        out["formulas"] = lines;
    }
    return out;
}

inline json check(const StagedTree& tree, const std::string& equations_mode, bool probe) {
    auto cls = classify_staging(tree);
    json out{{"regular", cls.regular}, {"balanced", cls.balanced}, {"simple", cls.simple}, {"d0", cls.dims.saturated}, {"d", cls.dims.staged}};
    out["witness"] = cls.witnesses.empty() ? json(nullptr) : triple_ref(tree, cls.witnesses.front());
    json witnesses = json::array();
    for (const auto& w : cls.witnesses) witnesses.push_back(triple_ref(tree, w));
    out["witnesses"] = witnesses;
    auto cm = constraint_matrix(tree);
    out["constraint_rows"] = cm.rows.size();
    out["kernel_dimension"] = cm.kernel_dimension();
    if (equations_mode != "none") {
        json eqs = json::array();
        for (const auto& eq : stage_equations(tree)) {
            json e{{"pair", json::array({tree.name(eq.first), tree.name(eq.second)})}, {"edge", eq.edge + 1}, {"downward", eq.downward + 1}, {"linear", eq.linear}};
            if (equations_mode == "pretty") {
                auto r = render_stage_equation(tree, eq);
                e["form"] = r.str();
                e["reduced"] = r.reduced.empty() ? json(nullptr) : json(r.reduced);
            }
            eqs.push_back(e);
        }
        out["equations"] = eqs;
    }
    json warnings = json::array();
    if (probe) {
        auto p = probe_downward_invariance(tree);
        json dis = json::array();
        for (const auto& d : p.disagreements) {
            json choice = json::object();
            for (std::size_t s = 0; s < tree.stage_count(); ++s) choice[tree.stage(s).name] = d.downward[s] + 1;
            dis.push_back(json{{"downward", choice}, {"regular", d.regular}, {"balanced", d.balanced}});
        }
        out["downward_probe"] = json{{"consistent", p.consistent}, {"alternatives_checked", p.alternatives_checked}, {"disagreements", dis}};
        if (!p.consistent) warnings.push_back("classification changes under another choice of downward edges");
    }
    if (cls.regular && !cls.balanced) warnings.push_back("regular but not balanced staging found");
    out["warnings"] = warnings;
    return out;
}

inline json fit_json(const StagedTree& tree, const FitResult& f) {
    return json{{"theta", labels_json(tree, f.theta)}, {"boundary", f.boundary}, {"log_likelihood", io::number(f.log_likelihood)},
                {"d", f.d},  {"n_obs", f.n_obs}, {"bic", io::number(f.bic)}, {"bic_convention", kBicConvention}};
}

inline SelectConfig parse_select_config(const json& j) {
    io::reject_unknown(j, {"max_merges", "same_depth", "alpha", "threads"}, "select config");
    SelectConfig c;
    if (j.contains("max_merges") && !j["max_merges"].is_null()) {
        if (!j["max_merges"].is_number_integer() || j["max_merges"].get<long long>() < 0)
            throw Error(ErrorCode::InvalidConfig, "max_merges must be a non-negative integer or null");
        c.max_merges = j["max_merges"].get<std::size_t>();
    }
    if (j.contains("same_depth")) {
        if (!j["same_depth"].is_boolean()) throw Error(ErrorCode::InvalidConfig, "same_depth must be a boolean");
        c.same_depth = j["same_depth"].get<bool>();
    }
    if (j.contains("alpha")) {
        if (!j["alpha"].is_number() || j["alpha"].get<double>() < 0) throw Error(ErrorCode::InvalidConfig, "alpha must be a non-negative number");
        c.alpha = j["alpha"].get<double>();
    }
    if (j.contains("threads")) {
        if (!j["threads"].is_number_integer() || j["threads"].get<long long>() < 0) throw Error(ErrorCode::InvalidConfig, "threads must be a non-negative integer");
        c.threads = j["threads"].get<std::size_t>();
    }
    return c;
}

inline std::string error_json(std::string_view code, const std::string& message) {
    return json{{"error", json{{"code", code}, {"message", message}}}}.dump() + "\n";
}

}  // namespace detail

/// Entry point of the `stk` tool. JSON goes to `out`; errors are written to
/// `err` as {"error": {"code", "message"}}. Returns 0 on success, 2 on
/// invalid input and 1 on internal failure.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    detail::Context ctx{in, out, err};
    CLI::App app{"Staged tree models: exponential-family form, regularity checks, BN conversion and BIC fitting", "stk"};
    app.fallthrough();
    app.require_subcommand(1, 1);
    app.add_option("--output,-o", ctx.output, "Write JSON here instead of stdout ('-')");
    app.add_flag("--pretty", ctx.pretty, "Indent JSON output");
    app.add_option("--seed", ctx.seed, "Seed for randomized labels");

    std::string tree_path, theta_spec, equations = "summary", bn_path, order_spec, data_path, config_path;
    bool formulas = false, classify = false, no_probe = false;
    double alpha = 0.0;

    auto* inspect = app.add_subcommand("inspect", "Print vertices, stages, atoms and dimensions");
    inspect->add_option("tree", tree_path, "Tree-description file or '-'")->required();

    auto* expfam = app.add_subcommand("expfam", "Natural parameters, sufficient statistic and cumulant");
    expfam->add_option("tree", tree_path, "Tree-description file or '-'")->required();
    expfam->add_option("--theta", theta_spec, "uniform | random | file | JSON object | path to labels JSON");
    expfam->add_flag("--formulas", formulas, "Include symbolic formulas");

    auto* check = app.add_subcommand("check", "Classify the staging as regular, balanced, simple");
    check->add_option("tree", tree_path, "Tree-description file or '-'")->required();
    check->add_option("--equations", equations, "none | summary | pretty")->check(CLI::IsMember({"none", "summary", "pretty"}));
    check->add_flag("--no-probe", no_probe, "Skip the downward-edge invariance probe");

    auto* from_bn = app.add_subcommand("from-bn", "Convert a discrete Bayesian network to a staged tree");
    from_bn->add_option("network", bn_path, "Network file or '-'")->required();
    from_bn->add_option("--order", order_spec, "Comma-separated variable order");
    from_bn->add_flag("--classify", classify, "Print the regularity classification instead of the tree");

    auto* fit = app.add_subcommand("fit", "Maximum likelihood fit and BIC of a staged tree");
    fit->add_option("--tree", tree_path, "Tree-description file or '-'")->required();
    fit->add_option("--data", data_path, "CSV data file or '-'")->required();
    fit->add_option("--alpha", alpha, "Additive smoothing (default 0)")->check(CLI::NonNegativeNumber);

    auto* select = app.add_subcommand("select", "Greedy BIC stage merging from the saturated tree");
    select->add_option("--tree-graph", tree_path, "Tree-description file or '-'")->required();
    select->add_option("--data", data_path, "CSV data file or '-'")->required();
    select->add_option("--config", config_path, "JSON config {max_merges, same_depth, alpha, threads}");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << detail::error_json("UsageError", e.what());
        return kValidation;
    }

    try {
        if (*inspect) {
            detail::emit(ctx, detail::inspect(detail::load_tree(ctx, tree_path).tree));
        } else if (*expfam) {
            auto lt = detail::load_tree(ctx, tree_path);
            std::string source;
            auto theta = detail::resolve_theta(ctx, lt, theta_spec, source);
            detail::emit(ctx, detail::expfam(lt.tree, theta, source, formulas));
        } else if (*check) {
            detail::emit(ctx, detail::check(detail::load_tree(ctx, tree_path).tree, equations, !no_probe));
        } else if (*from_bn) {
            auto bn = parse_bn(detail::read_input(ctx, bn_path));
            std::vector<std::size_t> order;
            if (!order_spec.empty()) {
                std::stringstream ss(order_spec);
                for (std::string name; std::getline(ss, name, ',');) {
                    auto v = bn.find(name);
                    if (!v) throw Error(ErrorCode::OrderInconsistentWithDAG, "unknown variable " + name + " in order");
                    order.push_back(*v);
                }
            }
            if (classify) {
                auto c = classify_bn(bn);
                auto names = [&](const std::vector<std::size_t>& o) {
                    json a = json::array();
                    for (auto v : o) a.push_back(bn.variable(v).name);
                    return a;
                };
                detail::emit(ctx, json{{"decomposable", c.decomposable},
                                       {"simple_ordering", c.simple_ordering ? names(*c.simple_ordering) : json(nullptr)},
                                       {"regular_certified", c.regular_certified},
                                       {"order", names(c.order)},
                                       {"tree_regular", c.tree_regular},
                                       {"tree_balanced", c.tree_balanced},
                                       {"tree_simple", c.tree_simple}});
            } else {
                if (order.empty()) {
                    auto simple = find_simple_ordering(bn);
                    order = simple ? *simple : *bn.topological_order();
                }
                auto bt = bn_to_staged_tree(bn, order);
                detail::emit(ctx, tree_to_json(bt.tree, bt.labels ? &*bt.labels : nullptr));
            }
        } else if (*fit) {
            auto lt = detail::load_tree(ctx, tree_path);
            std::istringstream data(detail::read_input(ctx, data_path));
            auto table = ingest_csv(data, lt.tree);
            detail::emit(ctx, detail::fit_json(lt.tree, bic(lt.tree, table, alpha)));
        } else if (*select) {
            auto lt = detail::load_tree(ctx, tree_path);
            std::istringstream data(detail::read_input(ctx, data_path));
            auto table = ingest_csv(data, lt.tree);
            SelectConfig config;
            if (!config_path.empty()) config = detail::parse_select_config(io::parse_json_text(detail::read_input(ctx, config_path), "select config"));
            auto res = select_staging(lt.tree, table, config);
            json trace = json::array();
            for (const auto& r : res.trace)
                trace.push_back(json{{"step", r.step}, {"kept", r.kept}, {"absorbed", r.absorbed}, {"members", r.members},
                                     {"bic_before", io::number(r.bic_before)}, {"bic_after", io::number(r.bic_after)}, {"delta", io::number(r.delta)},
                                     {"log_likelihood_delta", io::number(r.log_likelihood_delta)}, {"dimension_delta", r.dimension_delta}});
            json outj{{"tree", tree_to_json(res.tree)}, {"trace", trace}, {"saturated_bic", io::number(res.saturated_bic)},
                      {"bic", io::number(res.bic)}, {"bic_convention", kBicConvention}};
            try {
                outj["fit"] = detail::fit_json(res.tree, bic(res.tree, table, config.alpha));
            } catch (const Error& e) {
                outj["fit"] = nullptr;
                outj["fit_error"] = json{{"code", to_string(e.code())}, {"message", e.detail()}};
            }
            detail::emit(ctx, outj);
        }
    } catch (const Error& e) {
        err << detail::error_json(to_string(e.code()), e.detail());
        return kValidation;
    } catch (const std::exception& e) {
        err << detail::error_json("InternalError", e.what());
        return kInternal;
    }
    return kOk;
}

}  // namespace stagedtree::cli

#endif  // STAGEDTREE_TOOLS_CLI_HPP
