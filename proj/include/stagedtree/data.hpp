#ifndef STAGEDTREE_DATA_HPP
#define STAGEDTREE_DATA_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stagedtree/error.hpp"
#include "stagedtree/tree.hpp"

namespace stagedtree {

// Observed counts per atom, in atom order.
struct AtomTable {
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    static AtomTable from_counts(const StagedTree& tree, std::vector<std::uint64_t> counts) {
        if (counts.size() != tree.leaf_count())
            throw Error(ErrorCode::MalformedCsv, "expected " + std::to_string(tree.leaf_count()) + " atom counts, got " + std::to_string(counts.size()));
        AtomTable t;
        t.counts = std::move(counts);
        for (auto c : t.counts) t.total += c;
        return t;
    }
};

namespace csv {

// Splits one record on commas; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    if (quoted) throw Error(ErrorCode::MalformedCsv, "unterminated quote on line " + std::to_string(line_no));
    return fields;
}

inline std::vector<std::vector<std::string>> read_records(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (line.empty()) continue;
        rows.push_back(split_record(line, line_no));
    }
    return rows;
}

inline std::uint64_t parse_count(const std::string& s, std::size_t row) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(row) + ": count \"" + s + "\" is not a non-negative integer");
    try {
        return std::stoull(s);
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(row) + ": count out of range");
    }
}

}  // namespace csv

/// Reads counts from CSV (comma separated, header row required).
///
/// Two layouts are accepted:
///  - `atom_id,count` with 1-based atom ids in atom order;
///  - one categorical column per depth level. Columns are matched by name
///    when the tree declares variables (states are the categories), and by
///    position otherwise (categories are 0-based edge indices). An optional
///    `count` column weights each row. A row must name a full root-to-leaf
///    path; cells past its leaf must be empty.
inline AtomTable ingest_csv(std::istream& in, const StagedTree& tree) {
    auto rows = csv::read_records(in);
    if (rows.empty()) throw Error(ErrorCode::MalformedCsv, "missing header row");
    const auto header = rows.front();
    std::vector<std::uint64_t> counts(tree.leaf_count(), 0);

    if (header.size() == 2 && header[0] == "atom_id" && header[1] == "count") {
        for (std::size_t r = 1; r < rows.size(); ++r) {
            if (rows[r].size() != 2) throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(r) + " needs two fields");
            auto id = csv::parse_count(rows[r][0], r);
            if (id < 1 || id > counts.size())
                throw Error(ErrorCode::UnknownCategory, "row " + std::to_string(r) + ": atom id " + rows[r][0] + " outside 1.." + std::to_string(counts.size()));
            counts[id - 1] += csv::parse_count(rows[r][1], r);
        }
        return AtomTable::from_counts(tree, std::move(counts));
    }

    std::size_t max_depth = 0;
    for (auto v : tree.inner_vertices()) max_depth = std::max(max_depth, tree.depth(v) + 1);
    const auto& vars = tree.variables();
    std::vector<std::size_t> column_of_depth(max_depth, npos);
    std::optional<std::size_t> count_column;
    for (std::size_t c = 0; c < header.size(); ++c) {
        bool is_var = false;
        if (!vars.empty()) {
            for (std::size_t d = 0; d < vars.size() && d < max_depth; ++d)
                if (vars[d].name == header[c]) {
                    if (column_of_depth[d] != npos) throw Error(ErrorCode::MalformedCsv, "duplicate column " + header[c]);
                    column_of_depth[d] = c;
                    is_var = true;
                }
        } else if (header[c] != "count" && c < max_depth) {
            column_of_depth[c] = c;
            is_var = true;
        }
        if (is_var) continue;
        if (header[c] == "count" && !count_column) {
            count_column = c;
            continue;
        }
        throw Error(ErrorCode::MalformedCsv, "unexpected column \"" + header[c] + "\"");
    }
    for (std::size_t d = 0; d < max_depth; ++d)
        if (column_of_depth[d] == npos)
            throw Error(ErrorCode::VariableMismatch, "no column for depth " + std::to_string(d) + (vars.empty() ? "" : " (" + vars[d].name + ")"));

    // atom index of each leaf
    std::vector<std::size_t> atom_of_leaf(tree.vertex_count(), npos);
    for (const auto& a : tree.atoms()) atom_of_leaf[a.leaf] = a.index;

    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        auto cell = [&](std::size_t col) -> std::string { return col < row.size() ? row[col] : std::string(); };
        std::size_t v = tree.root();
        while (!tree.is_leaf(v)) {
            auto d = tree.depth(v);
            auto value = cell(column_of_depth[d]);
            if (value.empty()) throw Error(ErrorCode::RowDoesNotReachLeaf, "row " + std::to_string(r) + " stops at vertex " + tree.name(v));
            std::size_t edge = npos;
            if (!vars.empty()) {
                const auto& states = vars[d].states;
                for (std::size_t s = 0; s < states.size(); ++s)
                    if (states[s] == value) edge = s;
            } else if (value.find_first_not_of("0123456789") == std::string::npos) {
                edge = std::stoul(value);
                if (edge >= tree.out_degree(v)) edge = npos;
            }
            if (edge == npos) throw Error(ErrorCode::UnknownCategory, "row " + std::to_string(r) + ": category \"" + value + "\" at vertex " + tree.name(v));
            v = tree.child(v, edge);
        }
        for (std::size_t d = tree.depth(v); d < max_depth; ++d)
            if (!cell(column_of_depth[d]).empty())
                throw Error(ErrorCode::MalformedCsv, "row " + std::to_string(r) + " continues past leaf " + tree.name(v));
        std::uint64_t weight = count_column ? csv::parse_count(cell(*count_column), r) : 1;
        counts[atom_of_leaf[v]] += weight;
    }
    return AtomTable::from_counts(tree, std::move(counts));
}

inline AtomTable ingest_csv(const std::string& text_or_path, const StagedTree& tree, bool is_path) {
    if (!is_path) {
        std::istringstream in(text_or_path);
        return ingest_csv(in, tree);
    }
    std::ifstream in(text_or_path);
    if (!in) throw Error(ErrorCode::MalformedCsv, "cannot open " + text_or_path);
    return ingest_csv(in, tree);
}

}  // namespace stagedtree

#endif  // STAGEDTREE_DATA_HPP
