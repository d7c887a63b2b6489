#pragma once

#include "rkmor/types.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <vector>

namespace rkmor::mm {

/// Entry list plus header info, before densification.
struct MarketData {
    Index rows = 0;
    Index cols = 0;
    bool coordinate = false;  // coordinate vs array variant
    std::vector<Eigen::Triplet<Complex>> entries;

    Real density() const {
        if (rows == 0 || cols == 0) return 0.0;
        return static_cast<Real>(entries.size()) / (static_cast<Real>(rows) * static_cast<Real>(cols));
    }
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

inline bool next_data_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        auto pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos) continue;
        if (line[pos] == '%') continue;
        return true;
    }
    return false;
}

}  // namespace detail

/// Parse a Matrix Market file (array or coordinate; real, integer or complex;
/// general, symmetric or skew-symmetric).
inline MarketData read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);

    std::string banner;
    if (!std::getline(in, banner) || banner.rfind("%%MatrixMarket", 0) != 0)
        throw ParseError(path + ": missing %%MatrixMarket banner");

    std::istringstream hs(detail::lower(banner.substr(14)));
    std::string object, format, field, symmetry;
    hs >> object >> format >> field >> symmetry;
    if (object != "matrix") throw ParseError(path + ": unsupported object '" + object + "'");
    if (format != "coordinate" && format != "array")
        throw ParseError(path + ": unsupported format '" + format + "'");
    if (field != "real" && field != "integer" && field != "complex")
        throw ParseError(path + ": unsupported field '" + field + "'");
    if (symmetry.empty()) symmetry = "general";
    if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric")
        throw ParseError(path + ": unsupported symmetry '" + symmetry + "'");

    const bool complex_field = (field == "complex");
    MarketData data;
    data.coordinate = (format == "coordinate");

    std::string line;
    if (!detail::next_data_line(in, line)) throw ParseError(path + ": missing size line");
    std::istringstream szs(line);

    auto push_symmetric = [&](Index i, Index j, Complex v) {
        data.entries.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
        if (i != j && symmetry != "general") {
            Complex mirrored = (symmetry == "skew-symmetric") ? -v : v;
            data.entries.emplace_back(static_cast<int>(j), static_cast<int>(i), mirrored);
        }
    };

    if (data.coordinate) {
        long long nnz = 0;
        if (!(szs >> data.rows >> data.cols >> nnz)) throw ParseError(path + ": bad coordinate size line");
        data.entries.reserve(static_cast<size_t>(nnz));
        for (long long k = 0; k < nnz; ++k) {
            if (!detail::next_data_line(in, line)) throw ParseError(path + ": truncated entry list");
            std::istringstream es(line);
            long long i = 0, j = 0;
            double re = 0.0, im = 0.0;
            if (!(es >> i >> j >> re)) throw ParseError(path + ": malformed coordinate entry");
            if (complex_field && !(es >> im)) throw ParseError(path + ": missing imaginary part");
            if (i < 1 || j < 1 || i > data.rows || j > data.cols)
                throw ParseError(path + ": coordinate index out of range");
            push_symmetric(i - 1, j - 1, Complex(re, im));
        }
    } else {
        if (!(szs >> data.rows >> data.cols)) throw ParseError(path + ": bad array size line");
        // array variant lists the full (or lower-triangular, if symmetric) matrix column-major
        for (Index j = 0; j < data.cols; ++j) {
            Index i0 = (symmetry == "general") ? 0 : j;
            for (Index i = i0; i < data.rows; ++i) {
                if (!detail::next_data_line(in, line)) throw ParseError(path + ": truncated array data");
                std::istringstream es(line);
                double re = 0.0, im = 0.0;
                if (!(es >> re)) throw ParseError(path + ": malformed array entry");
                if (complex_field && !(es >> im)) throw ParseError(path + ": missing imaginary part");
                if (re != 0.0 || im != 0.0) push_symmetric(i, j, Complex(re, im));
            }
        }
    }
    return data;
}

inline Matrix to_dense_real(const MarketData& data, const std::string& context) {
    Matrix m = Matrix::Zero(data.rows, data.cols);
    for (const auto& t : data.entries) {
        if (t.value().imag() != 0.0)
            throw ParseError(context + ": complex entries where a real matrix is required");
        m(t.row(), t.col()) += t.value().real();
    }
    return m;
}

inline SparseRealMatrix to_sparse_real(const MarketData& data, const std::string& context) {
    std::vector<Eigen::Triplet<double>> tr;
    tr.reserve(data.entries.size());
    for (const auto& t : data.entries) {
        if (t.value().imag() != 0.0)
            throw ParseError(context + ": complex entries where a real matrix is required");
        tr.emplace_back(t.row(), t.col(), t.value().real());
    }
    SparseRealMatrix m(data.rows, data.cols);
    m.setFromTriplets(tr.begin(), tr.end());
    m.makeCompressed();
    return m;
}

inline void write_dense_real(const std::string& path, const Eigen::Ref<const Matrix>& m) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "%%MatrixMarket matrix array real general\n";
    out << m.rows() << " " << m.cols() << "\n";
    char buf[64];
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g\n", m(i, j));
            out << buf;
        }
}

inline void write_dense_complex(const std::string& path, const Eigen::Ref<const ComplexMatrix>& m) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "%%MatrixMarket matrix array complex general\n";
    out << m.rows() << " " << m.cols() << "\n";
    char buf[128];
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", m(i, j).real(), m(i, j).imag());
            out << buf;
        }
}

inline void write_sparse_real(const std::string& path, const SparseRealMatrix& m) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    char buf[96];
    for (int k = 0; k < m.outerSize(); ++k)
        for (SparseRealMatrix::InnerIterator it(m, k); it; ++it) {
            std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(it.row() + 1),
                          static_cast<long long>(it.col() + 1), it.value());
            out << buf;
        }
}

}  // namespace rkmor::mm
