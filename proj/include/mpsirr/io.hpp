#pragma once

// JSON (de)serialization for tensors, matrices and reports.
//
// Tensor files: {"d": int, "D": int, "matrices": d x D x D array of [re, im]}.
// Matrix files: {"rows": int, "cols": int, "entries": rows x cols of [re, im]}.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "mpsirr/core.hpp"
#include "mpsirr/tensor.hpp"

namespace mpsirr {

using json = nlohmann::ordered_json;

namespace detail {

inline cplx parse_cplx(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ValidationError(where + ": expected [re, im]");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

inline json dump_cplx(cplx z) { return json::array({z.real(), z.imag()}); }

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return j;
}

}  // namespace detail

inline MpsTensor tensor_from_json(const json& j) {
    if (!j.is_object() || !j.contains("d") || !j.contains("D") || !j.contains("matrices"))
        throw ValidationError("tensor: expected object with d, D, matrices");
    int d = j["d"].get<int>(), D = j["D"].get<int>();
    if (d < 1 || D < 1) throw ValidationError("tensor: d and D must be positive");
    const json& mats = j["matrices"];
    if (!mats.is_array() || static_cast<int>(mats.size()) != d)
        throw ValidationError("tensor: matrices must have d entries");
    std::vector<Mat> out;
    out.reserve(d);
    for (int i = 0; i < d; ++i) {
        const json& mj = mats[i];
        if (!mj.is_array() || static_cast<int>(mj.size()) != D)
            throw ValidationError("tensor: matrix " + std::to_string(i) + " must have D rows");
        Mat m(D, D);
        for (int r = 0; r < D; ++r) {
            const json& row = mj[r];
            if (!row.is_array() || static_cast<int>(row.size()) != D)
                throw ValidationError("tensor: matrix " + std::to_string(i) + " row " +
                                      std::to_string(r) + " must have D entries");
            for (int c = 0; c < D; ++c)
                m(r, c) = detail::parse_cplx(row[c], "tensor entry");
        }
        out.push_back(std::move(m));
    }
    return MpsTensor(std::move(out));
}

inline json tensor_to_json(const MpsTensor& a) {
    json mats = json::array();
    for (const Mat& m : a.mats) {
        json rows = json::array();
        for (int r = 0; r < a.D; ++r) {
            json row = json::array();
            for (int c = 0; c < a.D; ++c) row.push_back(detail::dump_cplx(m(r, c)));
            rows.push_back(std::move(row));
        }
        mats.push_back(std::move(rows));
    }
    return json{{"d", a.d}, {"D", a.D}, {"matrices", std::move(mats)}};
}

inline Mat matrix_from_json(const json& j) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("entries"))
        throw ValidationError("matrix: expected object with rows, cols, entries");
    int rows = j["rows"].get<int>(), cols = j["cols"].get<int>();
    if (rows < 1 || cols < 1) throw ValidationError("matrix: rows and cols must be positive");
    const json& e = j["entries"];
    if (!e.is_array() || static_cast<int>(e.size()) != rows)
        throw ValidationError("matrix: entries must have `rows` rows");
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        if (!e[r].is_array() || static_cast<int>(e[r].size()) != cols)
            throw ValidationError("matrix: row " + std::to_string(r) + " must have `cols` entries");
        for (int c = 0; c < cols; ++c) m(r, c) = detail::parse_cplx(e[r][c], "matrix entry");
    }
    return m;
}

inline json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(detail::dump_cplx(m(r, c)));
        rows.push_back(std::move(row));
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(rows)}};
}

inline MpsTensor load_tensor(const std::string& path) {
    return tensor_from_json(detail::read_json_file(path));
}

inline Mat load_matrix(const std::string& path) {
    return matrix_from_json(detail::read_json_file(path));
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace mpsirr
