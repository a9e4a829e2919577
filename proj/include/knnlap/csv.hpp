#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "knnlap/point_cloud.hpp"

namespace knnlap {

// Point-cloud CSV format: header row required, columns x1..xm, optional
// trailing column "t" for the intrinsic coordinate.
PointCloud read_cloud_csv(const std::string& path);
void write_cloud_csv(const std::string& path, const PointCloud& cloud);

// Generic numeric table with a header; all floats are written with 17
// significant digits so values round-trip exactly.
void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& rows);

// Dense matrix dump for debugging (header c0..c{n-1}).
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);

std::string format_double(double v);

}  // namespace knnlap
