#pragma once

// Plain-text formats: matrix CSV (dims line + row-major values), labeled
// activation/dataset CSV (label,v1,...,vN), and a generic numeric table
// reader. Parse errors carry file and line. Doubles are written with the
// shortest round-trip representation so reruns are byte-identical.

#include "perceptor/shallow.hpp"
#include "perceptor/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace perceptor::io {

struct parse_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= line.size(); ++k) {
        if (k == line.size() || line[k] == ',') {
            out.push_back(trim(line.substr(start, k - start)));
            start = k + 1;
        }
    }
    return out;
}

inline bool try_parse_double(std::string_view token, double& value) {
    token = trim(token);
    if (token.empty()) return false;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, value);
    return res.ec == std::errc() && res.ptr == last;
}

[[noreturn]] inline void fail(const std::string& path, std::size_t line,
                              const std::string& message) {
    throw parse_error(path + ":" + std::to_string(line) + ": " + message);
}

/// Reads all non-comment lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string>> data_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error(path + ": cannot open file");
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::string_view stripped = trim(raw);
        if (stripped.empty() || stripped.front() == '#') continue;
        lines.emplace_back(number, std::string(stripped));
    }
    return lines;
}

}  // namespace detail

/// Matrix CSV: optional `#` comments, a `rows,cols` line, then row-major
/// comma-separated values, one matrix row per line.
inline Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    const auto lines = detail::data_lines(path);
    if (lines.empty()) throw parse_error(path + ": empty matrix file");
    const auto dims = detail::split_commas(lines.front().second);
    double rows_d = 0.0, cols_d = 0.0;
    if (dims.size() != 2 || !detail::try_parse_double(dims[0], rows_d) ||
        !detail::try_parse_double(dims[1], cols_d) || rows_d < 1 || cols_d < 1 ||
        rows_d != std::floor(rows_d) || cols_d != std::floor(cols_d))
        detail::fail(path, lines.front().first, "expected dimension line 'rows,cols'");
    const Eigen::Index rows = static_cast<Eigen::Index>(rows_d);
    const Eigen::Index cols = static_cast<Eigen::Index>(cols_d);
    if (static_cast<Eigen::Index>(lines.size()) - 1 != rows)
        detail::fail(path, lines.back().first,
                     "expected " + std::to_string(rows) + " data rows, found " +
                         std::to_string(lines.size() - 1));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& [line_number, text] = lines[static_cast<std::size_t>(r) + 1];
        const auto tokens = detail::split_commas(text);
        if (static_cast<Eigen::Index>(tokens.size()) != cols)
            detail::fail(path, line_number,
                         "expected " + std::to_string(cols) + " values, found " +
                             std::to_string(tokens.size()));
        for (Eigen::Index c = 0; c < cols; ++c) {
            double value = 0.0;
            if (!detail::try_parse_double(tokens[static_cast<std::size_t>(c)], value))
                detail::fail(path, line_number,
                             "bad number '" +
                                 std::string(tokens[static_cast<std::size_t>(c)]) + "'");
            m(r, c) = value;
        }
    }
    return m;
}

inline void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << m.rows() << ',' << m.cols() << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(m(r, c));
        }
        out << '\n';
    }
}

/// Labeled vectors `label,v1,...,vN` grouped into an ActivationSet. Labels
/// must be the integers 0..D-1 with every class present.
inline ActivationSet read_activations(const std::string& path) {
    const auto lines = detail::data_lines(path);
    if (lines.empty()) throw parse_error(path + ": no samples");
    std::vector<std::vector<Eigen::VectorXd>> grouped;
    Eigen::Index dim = -1;
    for (const auto& [line_number, text] : lines) {
        const auto tokens = detail::split_commas(text);
        if (tokens.size() < 2) detail::fail(path, line_number, "expected label,v1,...,vN");
        double label_d = 0.0;
        if (!detail::try_parse_double(tokens[0], label_d) || label_d < 0 ||
            label_d != std::floor(label_d))
            detail::fail(path, line_number,
                         "bad label '" + std::string(tokens[0]) + "'");
        const auto label = static_cast<std::size_t>(label_d);
        if (dim < 0) dim = static_cast<Eigen::Index>(tokens.size()) - 1;
        if (static_cast<Eigen::Index>(tokens.size()) - 1 != dim)
            detail::fail(path, line_number,
                         "expected " + std::to_string(dim) + " values");
        Eigen::VectorXd v(dim);
        for (Eigen::Index c = 0; c < dim; ++c) {
            double value = 0.0;
            if (!detail::try_parse_double(tokens[static_cast<std::size_t>(c) + 1], value))
                detail::fail(path, line_number,
                             "bad number '" +
                                 std::string(tokens[static_cast<std::size_t>(c) + 1]) + "'");
            v(c) = value;
        }
        if (label >= grouped.size()) grouped.resize(label + 1);
        grouped[label].push_back(std::move(v));
    }
    ActivationSet acts;
    for (std::size_t c = 0; c < grouped.size(); ++c) {
        if (grouped[c].empty())
            throw parse_error(path + ": class " + std::to_string(c) + " has no samples");
        Eigen::MatrixXd block(static_cast<Eigen::Index>(grouped[c].size()), dim);
        for (std::size_t r = 0; r < grouped[c].size(); ++r)
            block.row(static_cast<Eigen::Index>(r)) = grouped[c][r].transpose();
        acts.samples.push_back(std::move(block));
    }
    validate(acts);
    return acts;
}

/// Dataset CSV `label,f1,...,fF`. Arbitrary integer labels are remapped to
/// dense indices in sorted order; features are min-max normalized.
inline shallow::Dataset read_dataset(const std::string& path, const std::string& name = "") {
    const auto lines = detail::data_lines(path);
    if (lines.empty()) throw parse_error(path + ": no samples");
    std::vector<long> raw_labels;
    std::vector<std::vector<double>> rows;
    for (const auto& [line_number, text] : lines) {
        const auto tokens = detail::split_commas(text);
        if (tokens.size() < 2) detail::fail(path, line_number, "expected label,f1,...,fF");
        double label_d = 0.0;
        if (!detail::try_parse_double(tokens[0], label_d) || label_d != std::floor(label_d))
            detail::fail(path, line_number, "bad label '" + std::string(tokens[0]) + "'");
        if (!rows.empty() && tokens.size() - 1 != rows.front().size())
            detail::fail(path, line_number,
                         "expected " + std::to_string(rows.front().size()) + " features");
        std::vector<double> features(tokens.size() - 1);
        for (std::size_t c = 1; c < tokens.size(); ++c) {
            if (!detail::try_parse_double(tokens[c], features[c - 1]))
                detail::fail(path, line_number,
                             "bad number '" + std::string(tokens[c]) + "'");
        }
        raw_labels.push_back(static_cast<long>(label_d));
        rows.push_back(std::move(features));
    }
    std::vector<long> unique = raw_labels;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    shallow::Dataset ds;
    ds.name = name.empty() ? std::filesystem::path(path).stem().string() : name;
    ds.classes = static_cast<int>(unique.size());
    ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(rows.front().size()));
    ds.labels.reserve(raw_labels.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                rows[r][c];
        const auto it = std::lower_bound(unique.begin(), unique.end(), raw_labels[r]);
        ds.labels.push_back(static_cast<int>(it - unique.begin()));
    }
    shallow::normalize_unit_range(ds.features);
    shallow::validate(ds);
    return ds;
}

/// Generic table with an optional header line naming the columns. Cells are
/// kept as text; numeric_column parses on demand so that non-numeric columns
/// (labels, names) can sit next to numeric ones.
struct Table {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;  // per column

    std::size_t rows() const { return cells.empty() ? 0 : cells.front().size(); }
    std::size_t columns() const { return cells.size(); }
};

inline Table read_table(const std::string& path) {
    const auto lines = detail::data_lines(path);
    if (lines.empty()) throw parse_error(path + ": empty table");
    Table table;
    table.path = path;
    std::size_t first_data = 0;
    {
        const auto tokens = detail::split_commas(lines.front().second);
        double probe = 0.0;
        bool numeric = true;
        for (const auto& t : tokens)
            if (!detail::try_parse_double(t, probe)) numeric = false;
        if (!numeric) {
            for (const auto& t : tokens) table.header.emplace_back(t);
            first_data = 1;
        }
    }
    for (std::size_t k = first_data; k < lines.size(); ++k) {
        const auto& [line_number, text] = lines[k];
        const auto tokens = detail::split_commas(text);
        if (table.cells.empty()) table.cells.resize(tokens.size());
        if (tokens.size() != table.cells.size())
            detail::fail(path, line_number,
                         "expected " + std::to_string(table.cells.size()) + " columns");
        for (std::size_t c = 0; c < tokens.size(); ++c)
            table.cells[c].emplace_back(tokens[c]);
    }
    if (table.cells.empty()) throw parse_error(path + ": no data rows");
    return table;
}

/// Column addressed by header name or 0-based index, parsed as doubles.
inline std::vector<double> numeric_column(const Table& table, const std::string& name) {
    const std::vector<std::string>* column = nullptr;
    for (std::size_t c = 0; c < table.header.size(); ++c)
        if (table.header[c] == name) column = &table.cells[c];
    if (!column) {
        double index = -1.0;
        if (detail::try_parse_double(name, index) && index >= 0 &&
            index == std::floor(index) &&
            static_cast<std::size_t>(index) < table.columns())
            column = &table.cells[static_cast<std::size_t>(index)];
    }
    if (!column)
        throw parse_error(table.path + ": column '" + name + "' not found");
    std::vector<double> values(column->size());
    for (std::size_t r = 0; r < column->size(); ++r) {
        if (!detail::try_parse_double((*column)[r], values[r]))
            throw parse_error(table.path + ": column '" + name + "' row " +
                              std::to_string(r + 1) + ": bad number '" + (*column)[r] +
                              "'");
    }
    return values;
}

}  // namespace perceptor::io
