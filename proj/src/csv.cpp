#include "knnlap/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "knnlap/common.hpp"

namespace knnlap {

void PointCloud::validate() const {
    if (points.rows() < 1 || points.cols() < 1)
        throw invalid_parameter("point cloud must have N >= 1 points in R^m, m >= 1");
    if (!points.allFinite()) throw invalid_parameter("point cloud has non-finite coordinates");
    if (intrinsic) {
        if (intrinsic->size() != points.rows())
            throw invalid_parameter("intrinsic coordinate length does not match point count");
        for (Eigen::Index i = 0; i < intrinsic->size(); ++i) {
            double t = (*intrinsic)(i);
            if (!(t >= 0.0 && t < 1.0))
                throw invalid_parameter("intrinsic coordinates must lie in [0, 1)");
        }
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t lineno) {
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw data_error(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
    return v;
}

}  // namespace

PointCloud read_cloud_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw data_error(path + ": empty file (header row required)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line);
    if (header.empty()) throw data_error(path + ": empty header");
    bool has_t = header.back() == "t";
    std::size_t m = header.size() - (has_t ? 1 : 0);
    if (m < 1) throw data_error(path + ": no coordinate columns");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw data_error(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " columns, got " +
                             std::to_string(cells.size()));
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_cell(cells[j], path, lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw data_error(path + ": no data rows");

    PointCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    if (has_t) cloud.intrinsic = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) cloud.points(i, j) = rows[i][j];
        if (has_t) (*cloud.intrinsic)(static_cast<Eigen::Index>(i)) = rows[i][m];
    }
    cloud.validate();
    return cloud;
}

void write_cloud_csv(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    for (Eigen::Index j = 0; j < cloud.ambient_dim(); ++j) {
        if (j) out << ',';
        out << 'x' << (j + 1);
    }
    if (cloud.intrinsic) out << ",t";
    out << '\n';
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index j = 0; j < cloud.ambient_dim(); ++j) {
            if (j) out << ',';
            out << format_double(cloud.points(i, j));
        }
        if (cloud.intrinsic) out << ',' << format_double((*cloud.intrinsic)(i));
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j) out << ',';
        out << header[j];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw invalid_parameter("table row width does not match header");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out << ',';
            out << format_double(row[j]);
        }
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write " + path);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) out << ',';
        out << 'c' << j;
    }
    out << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw data_error("write failed: " + path);
}

}  // namespace knnlap
