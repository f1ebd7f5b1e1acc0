#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "latconf/errors.hpp"
#include "latconf/graph_io.hpp"
#include "latconf/text.hpp"

namespace latconf {

struct Variable {
    std::string name;
    int cardinality = 2;
    std::vector<std::string> labels; // optional, one per state

    friend bool operator==(const Variable&, const Variable&) = default;
};

// N rows of discrete observations, row-major, every cell a state index.
class Dataset {
public:
    Dataset() = default;

    Dataset(std::vector<Variable> variables, std::vector<int> cells)
        : variables_(std::move(variables)), cells_(std::move(cells)) {
        if (variables_.empty()) throw ValidationError("dataset has no variables");
        if (cells_.size() % variables_.size() != 0) throw ValidationError("ragged dataset");
        for (const auto& v : variables_)
            if (v.cardinality < 2) throw ValidationError("variable " + v.name + " needs cardinality >= 2");
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            const auto& v = variables_[i % variables_.size()];
            if (cells_[i] < 0 || cells_[i] >= v.cardinality)
                throw ValidationError("value " + std::to_string(cells_[i]) + " out of range for " + v.name);
        }
    }

    std::size_t rows() const noexcept { return variables_.empty() ? 0 : cells_.size() / variables_.size(); }
    std::size_t cols() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    int at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t c = 0; c < variables_.size(); ++c)
            if (variables_[c].name == name) return c;
        return std::nullopt;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    std::vector<Variable> variables_;
    std::vector<int> cells_;
};

// Comma-separated values with a header row. Cells are state indices, or state labels
// when `decls` declares labels for the column. Cardinalities come from `decls` when
// declared, otherwise from the largest index seen (at least 2).
inline Dataset parse_data(std::string_view text, const std::map<std::string, NodeDecl>& decls = {}) {
    const auto all = text::lines(text);
    std::size_t first = 0;
    while (first < all.size() && text::trim(all[first]).empty()) ++first;
    if (first == all.size()) throw ParseError(1, "empty data file");

    std::vector<Variable> vars;
    for (auto field : text::split(all[first], ',')) {
        const auto name = std::string(text::trim(field));
        if (name.empty()) throw ParseError(first + 1, "empty column name");
        if (name.front() == '_') throw ParseError(first + 1, "column name '" + name + "' uses the reserved '_' prefix");
        for (const auto& v : vars)
            if (v.name == name) throw ParseError(first + 1, "duplicate column '" + name + "'");
        Variable v{name, 0, {}};
        if (auto it = decls.find(name); it != decls.end()) {
            v.cardinality = it->second.cardinality;
            v.labels = it->second.labels;
        }
        vars.push_back(std::move(v));
    }

    std::vector<int> cells;
    std::vector<int> max_seen(vars.size(), 0);
    for (std::size_t li = first + 1; li < all.size(); ++li) {
        const auto line = text::trim(all[li]);
        if (line.empty()) continue;
        const auto fields = text::split(line, ',');
        if (fields.size() != vars.size())
            throw ParseError(li + 1, "expected " + std::to_string(vars.size()) + " fields, got " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < vars.size(); ++c) {
            const auto cell = text::trim(fields[c]);
            std::optional<int> value;
            if (!vars[c].labels.empty()) {
                const auto& labels = vars[c].labels;
                auto it = std::find(labels.begin(), labels.end(), cell);
                if (it != labels.end()) value = static_cast<int>(it - labels.begin());
            }
            if (!value) value = text::parse_int<int>(cell);
            if (!value || *value < 0)
                throw ParseError(li + 1, "cell '" + std::string(cell) + "' in column " + vars[c].name + " is not a state");
            if (vars[c].cardinality > 0 && *value >= vars[c].cardinality)
                throw ParseError(li + 1, "state " + std::to_string(*value) + " exceeds cardinality " +
                                             std::to_string(vars[c].cardinality) + " of " + vars[c].name);
            max_seen[c] = std::max(max_seen[c], *value);
            cells.push_back(*value);
        }
    }
    if (cells.empty()) throw ParseError(all.size(), "data file has no rows");
    for (std::size_t c = 0; c < vars.size(); ++c)
        if (vars[c].cardinality == 0) vars[c].cardinality = std::max(2, max_seen[c] + 1);
    return Dataset(std::move(vars), std::move(cells));
}

// Always writes state indices.
inline std::string serialize_data(const Dataset& data) {
    std::string out;
    for (std::size_t c = 0; c < data.cols(); ++c) out += (c ? "," : "") + data.variables()[c].name;
    out += "\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (std::size_t c = 0; c < data.cols(); ++c) out += (c ? "," : "") + std::to_string(data.at(r, c));
        out += "\n";
    }
    return out;
}

} // namespace latconf
