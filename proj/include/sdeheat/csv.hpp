#pragma once

// CSV output: header row, '.' decimal separator, 17 significant digits so every
// double round-trips exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdeheat/errors.hpp"
#include "sdeheat/grid.hpp"

namespace sdeheat {

inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        write_row_strings(header);
    }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << format_double(values[i]);
        }
        out_ << '\n';
    }

    void write_row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    void close() {
        out_.close();
        if (!out_) throw IoError("failed writing " + path_.string());
    }

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::vector<std::string> header;
    for (Eigen::Index k = 0; k < m.cols(); ++k) header.push_back("c" + std::to_string(k));
    CsvWriter w(path, header);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index k = 0; k < m.cols(); ++k) row[static_cast<std::size_t>(k)] = m(i, k);
        w.row(row);
    }
    w.close();
}

/// Two columns x,value.
inline void write_grid_csv(const std::filesystem::path& path, const GridFunction& g) {
    CsvWriter w(path, {"x", "value"});
    for (std::size_t i = 0; i < g.xs.size(); ++i) w.row({g.xs[i], g.values[i]});
    w.close();
}

}  // namespace sdeheat
