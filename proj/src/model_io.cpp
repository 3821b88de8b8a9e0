#include "stargp/model_io.hpp"

#include <fmt/format.h>

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "stargp/error.hpp"

namespace stargp {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "STARGP-MODEL\n";

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFFu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += 8;
    return v;
  }

  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::vector<double> array() {
    const std::uint64_t n = u64();
    if (n > (bytes_.size() - pos_) / 8) throw data_error("model file: truncated array");
    std::vector<double> v(n);
    for (auto& x : v) x = std::bit_cast<double>(u64());
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw data_error("model file is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void put_array(std::string& out, const std::vector<double>& v) {
  put_u64(out, v.size());
  for (const double x : v) put_u64(out, std::bit_cast<std::uint64_t>(x));
}

std::vector<double> row_major(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

Eigen::MatrixXd from_row_major(const std::vector<double>& v, Index rows, Index cols) {
  if (static_cast<Index>(v.size()) != rows * cols) {
    throw data_error("model file: array size does not match its declared shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd from_vec(const std::vector<double>& v, Index size) {
  if (static_cast<Index>(v.size()) != size) throw data_error("model file: vector size mismatch");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), size);
}

}  // namespace

std::string serialize_model(const FittedMap& map) {
  const Index n_points = map.size();
  const Index n_rep = map.replicates();
  json manifest;
  manifest["schema_version"] = kModelSchemaVersion;
  manifest["correlation"] = correlation_family_name();
  json theta;
  const ThetaVector tv = map.theta.as_vector();
  for (std::size_t k = 0; k < Hyperparams::kCount; ++k) {
    theta[Hyperparams::names()[k]] = tv[static_cast<Index>(k)];
  }
  manifest["theta"] = theta;
  manifest["g"] = map.g;
  manifest["m"] = map.ordering.m;
  manifest["lambda_s"] = map.scaling.lambda_s();
  manifest["lambda_t"] = map.scaling.lambda_t();
  manifest["eta"] = map.scaling.eta();
  manifest["ordering"] = to_string(map.ordering.kind);
  manifest["perm"] = map.ordering.perm;
  manifest["points"] = n_points;
  manifest["replicates"] = n_rep;
  manifest["coord_columns"] = map.raw_coords.cols();
  manifest["zero_variance_locations"] = map.response_stats.zero_variance;
  manifest["arrays"] = {"coord_mean",    "coord_sd", "response_mean", "response_sd",
                        "raw_coords",    "train",    "l",             "neighbor_count",
                        "neighbors",     "chol",     "solved",        "alpha",
                        "beta",          "alpha_tilde", "beta_tilde"};
  const std::string text = manifest.dump(1);

  std::string out = kMagic;
  put_u64(out, text.size());
  out += text;
  put_array(out, to_vec(map.coord_stats.mean));
  put_array(out, to_vec(map.coord_stats.sd));
  put_array(out, to_vec(map.response_stats.mean));
  put_array(out, to_vec(map.response_stats.sd));
  put_array(out, row_major(map.raw_coords));
  put_array(out, row_major(map.train));
  put_array(out, map.ordering.l);
  std::vector<double> counts, flat;
  for (const auto& nb : map.ordering.neighbors) {
    counts.push_back(static_cast<double>(nb.size()));
    for (const Index j : nb) flat.push_back(static_cast<double>(j));
  }
  put_array(out, counts);
  put_array(out, flat);
  std::vector<double> chol, solved, alpha, beta, alpha_t, beta_t;
  for (const TermCache& c : map.caches) {
    for (Index j = 0; j < n_rep; ++j) {
      for (Index k = 0; k <= j; ++k) chol.push_back(c.chol(j, k));
    }
    for (Index j = 0; j < n_rep; ++j) solved.push_back(c.solved[j]);
    alpha.push_back(c.alpha);
    beta.push_back(c.beta);
    alpha_t.push_back(c.alpha_tilde);
    beta_t.push_back(c.beta_tilde);
  }
  for (const auto* v : {&chol, &solved, &alpha, &beta, &alpha_t, &beta_t}) put_array(out, *v);
  return out;
}

FittedMap deserialize_model(const std::string& bytes) {
  Reader in(bytes);
  if (in.take(std::char_traits<char>::length(kMagic)) != kMagic) {
    throw data_error("not a model file (bad magic)");
  }
  const std::uint64_t len = in.u64();
  json manifest;
  try {
    manifest = json::parse(in.take(len));
  } catch (const json::exception& e) {
    throw data_error(fmt::format("model manifest is not valid JSON: {}", e.what()));
  }
  try {
    const int version = manifest.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw data_error(fmt::format("model schema version {} is not supported (expected {})",
                                   version, kModelSchemaVersion));
    }
    if (manifest.at("correlation").get<std::string>() != correlation_family_name()) {
      throw data_error("model uses an unsupported correlation family");
    }
    FittedMap map;
    ThetaVector tv;
    for (std::size_t k = 0; k < Hyperparams::kCount; ++k) {
      tv[static_cast<Index>(k)] = manifest.at("theta").at(Hyperparams::names()[k]).get<double>();
    }
    map.theta = Hyperparams::from_vector(tv);
    map.g = manifest.at("g").get<double>();
    map.scaling = ScalingParams(manifest.at("lambda_s").get<double>(),
                                manifest.at("lambda_t").get<double>());
    map.ordering.kind = ordering_kind_from_string(manifest.at("ordering").get<std::string>());
    map.ordering.m = manifest.at("m").get<Index>();
    map.ordering.perm = manifest.at("perm").get<std::vector<Index>>();
    const auto n_points = manifest.at("points").get<Index>();
    const auto n_rep = manifest.at("replicates").get<Index>();
    const auto n_cols = manifest.at("coord_columns").get<Index>();
    map.response_stats.zero_variance =
        manifest.at("zero_variance_locations").get<std::vector<Index>>();

    const auto coord_mean = in.array();
    const auto coord_sd = in.array();
    map.coord_stats.mean = from_vec(coord_mean, static_cast<Index>(coord_mean.size()));
    map.coord_stats.sd = from_vec(coord_sd, static_cast<Index>(coord_sd.size()));
    map.response_stats.mean = from_vec(in.array(), n_points);
    map.response_stats.sd = from_vec(in.array(), n_points);
    map.raw_coords = from_row_major(in.array(), n_cols == 0 ? 0 : n_points, n_cols);
    map.train = from_row_major(in.array(), n_rep, n_points);
    map.ordering.l = in.array();
    const auto counts = in.array();
    const auto flat = in.array();
    if (static_cast<Index>(counts.size()) != n_points) {
      throw data_error("model file: neighbor counts do not match the point count");
    }
    std::size_t at = 0;
    map.ordering.neighbors.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const auto c = static_cast<std::size_t>(counts[i]);
      if (at + c > flat.size()) throw data_error("model file: neighbor list truncated");
      for (std::size_t k = 0; k < c; ++k) {
        map.ordering.neighbors[i].push_back(static_cast<Index>(flat[at++]));
      }
    }
    validate_ordering(map.ordering);

    const auto chol = in.array();
    const auto solved = in.array();
    const auto alpha = in.array();
    const auto beta = in.array();
    const auto alpha_t = in.array();
    const auto beta_t = in.array();
    const auto tri = static_cast<std::size_t>(n_rep * (n_rep + 1) / 2);
    const auto np = static_cast<std::size_t>(n_points);
    if (chol.size() != np * tri || solved.size() != np * static_cast<std::size_t>(n_rep) ||
        alpha.size() != np || beta.size() != np || alpha_t.size() != np || beta_t.size() != np) {
      throw data_error("model file: cache arrays have the wrong size");
    }
    if (!in.done()) throw data_error("model file has trailing bytes");
    map.caches.resize(np);
    std::size_t ci = 0, si = 0;
    for (std::size_t i = 0; i < np; ++i) {
      TermCache& c = map.caches[i];
      c.chol = Eigen::MatrixXd::Zero(n_rep, n_rep);
      for (Index j = 0; j < n_rep; ++j) {
        for (Index k = 0; k <= j; ++k) c.chol(j, k) = chol[ci++];
      }
      c.solved.resize(n_rep);
      for (Index j = 0; j < n_rep; ++j) c.solved[j] = solved[si++];
      c.alpha = alpha[i];
      c.beta = beta[i];
      c.alpha_tilde = alpha_t[i];
      c.beta_tilde = beta_t[i];
    }
    return map;
  } catch (const json::exception& e) {
    throw data_error(fmt::format("model manifest is missing fields: {}", e.what()));
  }
}

void save_model(const std::string& path, const FittedMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(fmt::format("cannot open {} for writing", path));
  const std::string bytes = serialize_model(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw data_error(fmt::format("failed writing {}", path));
}

FittedMap load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error(fmt::format("cannot open model file {}", path));
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace stargp
