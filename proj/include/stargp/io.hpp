#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace stargp {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

/// Numeric CSV with one header row. Every row must have the header's width.
CsvTable read_csv(const std::string& path);

/// Coordinates file: header s1,...,sd,t; one row per location-time index.
Eigen::MatrixXd read_coords_csv(const std::string& path);

/// Ensembles file: header rep,y1,...,yN; returns the n x N response block.
Eigen::MatrixXd read_ensembles_csv(const std::string& path);

/// 17 significant digits, enough for an exact double round trip.
std::string format_double(double x);

void write_text(const std::string& path, const std::string& text);
void write_coords_csv(const std::string& path, const Eigen::MatrixXd& coords);
void write_ensembles_csv(const std::string& path, const Eigen::MatrixXd& y);

/// Lower-case hex SHA-256 digest of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace stargp
