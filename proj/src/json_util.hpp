#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mjls/errors.hpp"
#include "mjls/matops.hpp"

namespace mjls::detail {

using json = nlohmann::ordered_json;

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

inline json matrices_to_json(const std::vector<Matrix>& ms) {
    json out = json::array();
    for (const auto& m : ms) {
        out.push_back(matrix_to_json(m));
    }
    return out;
}

/// Depth of the leading nesting of arrays: 0 for a number, 2 for a matrix.
inline int array_depth(const json& j) {
    int depth = 0;
    const json* cur = &j;
    while (cur->is_array()) {
        ++depth;
        if (cur->empty()) {
            break;
        }
        cur = &cur->front();
    }
    return depth;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError(what + ": expected a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j.front().is_array() || j.front().empty()) {
        throw ValidationError(what + ": expected each row to be a non-empty array");
    }
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ValidationError(what + ": ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            const json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) {
                throw ValidationError(what + ": non-numeric entry");
            }
            m(i, c) = v.get<double>();
        }
    }
    return m;
}

} // namespace mjls::detail
