#include "stargp/io.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

#include "stargp/error.hpp"

namespace stargp {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& cell, const std::string& path, std::size_t line) {
  const std::string s = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw data_error(fmt::format("{}:{}: '{}' is not a number", path, line, s));
  }
  return v;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error(fmt::format("cannot open {}", path));
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw data_error(fmt::format("{} is empty", path));
  for (auto& h : split(line)) table.header.push_back(trim(h));
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw data_error(fmt::format("{}:{}: expected {} fields, found {}", path, line_no,
                                   table.header.size(), cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path, line_no));
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

Eigen::MatrixXd read_coords_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.header.size() < 2 || table.header.back() != "t") {
    throw data_error(fmt::format("{}: header must be s1,...,sd,t", path));
  }
  return table.values;
}

Eigen::MatrixXd read_ensembles_csv(const std::string& path) {
  CsvTable table = read_csv(path);
  if (table.header.size() < 2 || table.header.front() != "rep") {
    throw data_error(fmt::format("{}: header must be rep,y1,...,yN", path));
  }
  return table.values.rightCols(table.values.cols() - 1);
}

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(fmt::format("cannot open {} for writing", path));
  out << text;
  if (!out) throw data_error(fmt::format("failed writing {}", path));
}

void write_coords_csv(const std::string& path, const Eigen::MatrixXd& coords) {
  std::string text;
  const Eigen::Index d = coords.cols() - 1;
  for (Eigen::Index k = 0; k < d; ++k) text += fmt::format("s{},", k + 1);
  text += "t\n";
  for (Eigen::Index r = 0; r < coords.rows(); ++r) {
    for (Eigen::Index c = 0; c < coords.cols(); ++c) {
      text += format_double(coords(r, c));
      text += c + 1 < coords.cols() ? ',' : '\n';
    }
  }
  write_text(path, text);
}

void write_ensembles_csv(const std::string& path, const Eigen::MatrixXd& y) {
  std::string text = "rep";
  for (Eigen::Index k = 0; k < y.cols(); ++k) text += fmt::format(",y{}", k + 1);
  text += '\n';
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    text += fmt::format("{}", r + 1);
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      text += ',';
      text += format_double(y(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(fmt::format("cannot open {} for hashing", path));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kData, "SHA-256 initialisation failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  std::string hex;
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

}  // namespace stargp
