// Command-line front end: simulate, scales, order, fit, sample, forecast, score.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>

#include "stargp/error.hpp"
#include "stargp/io.hpp"
#include "stargp/model_io.hpp"
#include "stargp/oracle.hpp"
#include "stargp/pipeline.hpp"
#include "stargp/sampling.hpp"

namespace {

using nlohmann::ordered_json;
using stargp::Index;

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string coords;
  std::string ensembles;
  std::string model;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

// Echo of every option of a subcommand, as typed or defaulted.
ordered_json echo_config(const CLI::App& sub) {
  ordered_json cfg;
  cfg["subcommand"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_name() == "--help") continue;
    const std::string key = opt->get_name();
    if (opt->get_type_size() == 0) {
      cfg[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      cfg[key] = res.size() == 1 ? ordered_json(res.front()) : ordered_json(res);
    } else {
      cfg[key] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_manifest(const std::string& out, const CLI::App& sub, std::uint64_t seed,
                    const std::map<std::string, std::string>& inputs,
                    const ordered_json& extra = ordered_json::object()) {
  ordered_json manifest;
  manifest["tool"] = "stargp";
  manifest["version"] = kVersion;
  manifest["model_schema_version"] = stargp::kModelSchemaVersion;
  manifest["config"] = echo_config(sub);
  manifest["seed"] = seed;
  ordered_json hashes = ordered_json::object();
  for (const auto& [role, path] : inputs) {
    if (!path.empty()) hashes[role] = {{"path", path}, {"sha256", stargp::sha256_file(path)}};
  }
  manifest["inputs"] = hashes;
  if (!extra.empty()) manifest["results"] = extra;
  stargp::write_text(out + ".manifest.json", manifest.dump(2) + "\n");
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw stargp::config_error(fmt::format("{} is required", flag));
}

stargp::ScalingParams read_scales_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw stargp::data_error(fmt::format("cannot open {}", path));
  try {
    const auto j = nlohmann::json::parse(in);
    return {j.at("lambda_s").get<double>(), j.at("lambda_t").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw stargp::data_error(fmt::format("{}: {}", path, e.what()));
  }
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

void warn_zero_variance(const Eigen::MatrixXd& y) {
  const auto stats = stargp::response_stats(y);
  if (stats.zero_variance.empty()) return;
  std::string list;
  for (const Index k : stats.zero_variance) list += fmt::format(" {}", k + 1);
  warn(fmt::format("zero-variance locations standardized with sd = 1:{}", list));
}

std::string matrix_csv(const Eigen::MatrixXd& y, const char* row_label) {
  std::string text = row_label;
  for (Index k = 0; k < y.cols(); ++k) text += fmt::format(",y{}", k + 1);
  text += '\n';
  for (Index r = 0; r < y.rows(); ++r) {
    text += fmt::format("{}", r + 1);
    for (Index c = 0; c < y.cols(); ++c) text += "," + stargp::format_double(y(r, c));
    text += '\n';
  }
  return text;
}

std::vector<Index> parse_grid(const std::string& text) {
  std::vector<Index> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      grid.push_back(std::stol(item));
    } catch (const std::exception&) {
      throw stargp::config_error(fmt::format("bad m grid entry '{}'", item));
    }
    if (grid.back() < 1) throw stargp::config_error("m grid entries must be >= 1");
  }
  if (grid.empty()) throw stargp::config_error("m grid is empty");
  return grid;
}

void add_common(CLI::App* sub, Common& c, bool coords, bool ensembles, bool model) {
  if (coords) sub->add_option("--coords", c.coords, "Coordinates CSV (s1,...,sd,t)");
  if (ensembles) sub->add_option("--ensembles", c.ensembles, "Ensembles CSV (rep,y1,...,yN)");
  if (model) sub->add_option("--model", c.model, "Model file");
  sub->add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str();
  sub->add_option("--out", c.out, "Output path")->required();
}

int exit_code(stargp::ErrorKind kind) {
  switch (kind) {
    case stargp::ErrorKind::kConfig: return 2;
    case stargp::ErrorKind::kData: return 3;
    case stargp::ErrorKind::kNumerical: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatio-temporal autoregressive GP transport maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  Common sim;
  Index nx = 4, ny = 4, frames = 5, n_rep = 70;
  double sim_ls = 0.5, sim_lt = 0.25, variance = 1.0, nugget = 1e-4, nu = 0.5;
  bool warp = false;
  auto* simulate = app.add_subcommand("simulate", "Draw a Matern space-time GP ensemble");
  add_common(simulate, sim, true, false, false);
  simulate->get_option("--coords")->description("Existing coordinates CSV (default: regular grid)");
  simulate->get_option("--out")->description("Output directory");
  simulate->add_option("--nx", nx)->capture_default_str();
  simulate->add_option("--ny", ny)->capture_default_str();
  simulate->add_option("--frames", frames)->capture_default_str();
  simulate->add_option("--lambda-s", sim_ls)->capture_default_str();
  simulate->add_option("--lambda-t", sim_lt)->capture_default_str();
  simulate->add_option("--nu", nu, "Matern smoothness, 0.5 or 1.5")->capture_default_str();
  simulate->add_option("--variance", variance)->capture_default_str();
  simulate->add_option("--nugget", nugget)->capture_default_str();
  simulate->add_option("--n", n_rep, "Replicates")->capture_default_str();
  simulate->add_flag("--warp", warp, "Apply exp() pointwise");

  // scales
  Common sc;
  stargp::LengthscaleConfig ls_cfg;
  int repeats = 5;
  auto* scales = app.add_subcommand("scales", "Estimate space and time length scales");
  add_common(scales, sc, true, true, false);
  scales->add_option("--N-samp", ls_cfg.n_points, "Locations per repeat")->capture_default_str();
  scales->add_option("--n-samp", ls_cfg.n_replicates, "Replicates per repeat")->capture_default_str();
  scales->add_option("--repeats", repeats)->capture_default_str();
  scales->add_option("--epochs", ls_cfg.epochs)->capture_default_str();

  // order
  Common oc;
  std::string order_scales, order_kind = "maximin";
  double order_ls = 1.0, order_lt = 1.0;
  Index order_m = 30;
  auto* order = app.add_subcommand("order", "Write the ordering and conditioning sets");
  add_common(order, oc, true, false, false);
  order->add_option("--scales", order_scales, "scales.json from the scales subcommand");
  order->add_option("--lambda-s", order_ls)->capture_default_str();
  order->add_option("--lambda-t", order_lt)->capture_default_str();
  order->add_option("--ordering", order_kind)->check(CLI::IsMember({"maximin", "time"}))->capture_default_str();
  order->add_option("--m", order_m)->capture_default_str();

  // fit
  Common fc;
  std::string fit_scales, fit_kind = "maximin", m_grid = "5,10,15,20,25,30";
  stargp::FitOptions fit_opts;
  bool select = false;
  double fit_ls = 0.0, fit_lt = 0.0;
  bool fd_gradient = false;
  auto* fit = app.add_subcommand("fit", "Fit a transport map");
  add_common(fit, fc, true, true, false);
  fit->add_option("--scales", fit_scales, "scales.json (default: estimate with default settings)");
  fit->add_option("--lambda-s", fit_ls, "Spatial length scale (overrides --scales)");
  fit->add_option("--lambda-t", fit_lt, "Temporal length scale (overrides --scales)");
  fit->add_option("--ordering", fit_kind)->check(CLI::IsMember({"maximin", "time"}))->capture_default_str();
  fit->add_option("--m", fit_opts.m)->capture_default_str();
  fit->add_flag("--select-m", select, "Choose m on held-out replicates");
  fit->add_option("--m-grid", m_grid, "Comma-separated grid for --select-m")->capture_default_str();
  fit->add_option("--validation-fraction", fit_opts.validation_fraction)->capture_default_str();
  fit->add_option("--g", fit_opts.g)->capture_default_str();
  fit->add_option("--epochs", fit_opts.fit.epochs)->capture_default_str();
  fit->add_option("--min-steps", fit_opts.fit.min_steps)->capture_default_str();
  fit->add_option("--batch", fit_opts.fit.batch_size)->capture_default_str();
  fit->add_option("--step", fit_opts.fit.step)->capture_default_str();
  fit->add_flag("--fd-gradient", fd_gradient, "Forward-difference theta gradients");

  // sample
  Common smp;
  Index n_samples = 100;
  auto* sample = app.add_subcommand("sample", "Draw unconditional samples");
  add_common(sample, smp, false, false, true);
  sample->add_option("--n", n_samples)->capture_default_str();

  // forecast
  Common fcst;
  std::string observed_path;
  double cutoff = 0.0;
  Index observed_row = 1;
  auto* forecast = app.add_subcommand("forecast", "Forecast beyond a time cutoff");
  add_common(forecast, fcst, false, false, true);
  forecast->add_option("--observed", observed_path, "Raw trajectory CSV (ensembles format)")->required();
  forecast->add_option("--observed-row", observed_row, "1-based row of --observed")->capture_default_str();
  forecast->add_option("--cutoff", cutoff, "Last observed time (raw units)")->required();
  forecast->add_option("--n", n_samples)->capture_default_str();

  // score
  Common scr;
  std::string test_path;
  auto* score = app.add_subcommand("score", "Log-score held-out replicates");
  add_common(score, scr, false, false, true);
  score->add_option("--test", test_path, "Test ensembles CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) {
      std::filesystem::create_directories(sim.out);
      stargp::SimulationConfig cfg;
      cfg.lambda_s = sim_ls;
      cfg.lambda_t = sim_lt;
      if (nu == 0.5) {
        cfg.nu = stargp::MaternSmoothness::kHalf;
      } else if (nu == 1.5) {
        cfg.nu = stargp::MaternSmoothness::kThreeHalves;
      } else {
        throw stargp::config_error("--nu must be 0.5 or 1.5");
      }
      cfg.variance = variance;
      cfg.nugget = nugget;
      cfg.replicates = n_rep;
      cfg.seed = sim.seed;
      cfg.exp_warp = warp;
      const Eigen::MatrixXd x =
          sim.coords.empty() ? stargp::grid_coords(nx, ny, frames) : stargp::read_coords_csv(sim.coords);
      const Eigen::MatrixXd y = stargp::simulate_matern_gp(x, cfg);
      const std::string base = (std::filesystem::path(sim.out) / "").string();
      stargp::write_coords_csv(base + "coords.csv", x);
      stargp::write_ensembles_csv(base + "ensembles.csv", y);
      ordered_json truth;
      truth["covariance"] = "matern";
      truth["nu"] = nu;
      truth["lambda_s"] = sim_ls;
      truth["lambda_t"] = sim_lt;
      truth["eta"] = sim_ls * sim_ls / (sim_lt * sim_lt);
      truth["variance"] = variance;
      truth["nugget"] = nugget;
      truth["exp_warp"] = warp;
      truth["replicates"] = n_rep;
      truth["seed"] = sim.seed;
      stargp::write_text(base + "truth.json", truth.dump(2) + "\n");
      write_manifest(base + "simulate", *simulate, sim.seed, {{"coords", sim.coords}});
    } else if (scales->parsed()) {
      require(sc.coords, "--coords");
      require(sc.ensembles, "--ensembles");
      const Eigen::MatrixXd x = stargp::read_coords_csv(sc.coords);
      const Eigen::MatrixXd y = stargp::read_ensembles_csv(sc.ensembles);
      warn_zero_variance(y);
      ls_cfg.seed = sc.seed;
      const auto est = stargp::estimate_scales_raw(x, y, ls_cfg, repeats, sc.threads);
      for (const auto& w : est.warnings) warn(w);
      ordered_json j;
      j["lambda_s"] = est.scaling.lambda_s();
      j["lambda_t"] = est.scaling.lambda_t();
      j["eta"] = est.scaling.eta();
      j["se_lambda_s"] = est.se_lambda_s;
      j["se_lambda_t"] = est.se_lambda_t;
      ordered_json reps = ordered_json::array();
      for (const auto& r : est.repeats) {
        reps.push_back({{"lambda_s", r.params.lambda_s},
                        {"lambda_t", r.params.lambda_t},
                        {"amplitude", r.params.amplitude},
                        {"nugget", r.params.nugget},
                        {"epochs", r.trace.size()},
                        {"collapsed", r.collapsed}});
      }
      j["repeats"] = reps;
      stargp::write_text(sc.out, j.dump(2) + "\n");
      write_manifest(sc.out, *scales, sc.seed, {{"coords", sc.coords}, {"ensembles", sc.ensembles}});
    } else if (order->parsed()) {
      require(oc.coords, "--coords");
      const stargp::ScalingParams scaling =
          order_scales.empty() ? stargp::ScalingParams(order_ls, order_lt) : read_scales_json(order_scales);
      const Eigen::MatrixXd scaled =
          stargp::scaled_coordinates(stargp::read_coords_csv(oc.coords), scaling);
      const stargp::Ordering ord =
          stargp::build_ordering(scaled, stargp::ordering_kind_from_string(order_kind), order_m);
      std::string text = "pos,orig_index,l";
      for (Index k = 0; k < order_m; ++k) text += fmt::format(",neighbor_{}", k + 1);
      text += '\n';
      for (Index i = 0; i < ord.size(); ++i) {
        const auto& nb = ord.neighbors[static_cast<std::size_t>(i)];
        text += fmt::format("{},{},{}", i + 1, ord.perm[static_cast<std::size_t>(i)] + 1,
                            stargp::format_double(ord.l[static_cast<std::size_t>(i)]));
        for (Index k = 0; k < order_m; ++k) {
          text += k < static_cast<Index>(nb.size())
                      ? fmt::format(",{}", nb[static_cast<std::size_t>(k)] + 1)
                      : std::string(",-1");
        }
        text += '\n';
      }
      stargp::write_text(oc.out, text);
      write_manifest(oc.out, *order, oc.seed, {{"coords", oc.coords}, {"scales", order_scales}});
    } else if (fit->parsed()) {
      require(fc.coords, "--coords");
      require(fc.ensembles, "--ensembles");
      const Eigen::MatrixXd x = stargp::read_coords_csv(fc.coords);
      const Eigen::MatrixXd y = stargp::read_ensembles_csv(fc.ensembles);
      warn_zero_variance(y);
      stargp::ScalingParams scaling(1.0, 1.0);
      if (fit_ls > 0.0 || fit_lt > 0.0) {
        scaling = stargp::ScalingParams(fit_ls, fit_lt);
      } else if (!fit_scales.empty()) {
        scaling = read_scales_json(fit_scales);
      } else {
        stargp::LengthscaleConfig cfg;
        cfg.seed = fc.seed;
        const auto est = stargp::estimate_scales_raw(x, y, cfg, 5, fc.threads);
        for (const auto& w : est.warnings) warn(w);
        scaling = est.scaling;
      }
      fit_opts.ordering = stargp::ordering_kind_from_string(fit_kind);
      if (select) fit_opts.m_grid = parse_grid(m_grid);
      fit_opts.fit.seed = fc.seed;
      fit_opts.fit.threads = fc.threads;
      fit_opts.fit.gradient = fd_gradient ? stargp::GradientMethod::kForwardDifference
                                          : stargp::GradientMethod::kAnalytic;
      const stargp::FitOutcome outcome = stargp::fit_model(x, y, scaling, fit_opts);
      stargp::save_model(fc.out, outcome.map);
      std::string trace = "epoch,objective,step\n";
      for (std::size_t e = 0; e < outcome.fit.trace.objective.size(); ++e) {
        trace += fmt::format("{},{},{}\n", e, stargp::format_double(outcome.fit.trace.objective[e]),
                             stargp::format_double(outcome.fit.trace.step_size[e]));
      }
      stargp::write_text(fc.out + ".trace.csv", trace);
      ordered_json results;
      results["m"] = outcome.map.m();
      results["lambda_s"] = scaling.lambda_s();
      results["lambda_t"] = scaling.lambda_t();
      const stargp::ThetaVector tv = outcome.map.theta.as_vector();
      for (std::size_t k = 0; k < stargp::Hyperparams::kCount; ++k) {
        results["theta"][stargp::Hyperparams::names()[k]] = tv[static_cast<Index>(k)];
      }
      if (outcome.selection) {
        ordered_json sel = ordered_json::array();
        for (std::size_t k = 0; k < outcome.selection->grid.size(); ++k) {
          sel.push_back({{"m", outcome.selection->grid[k]},
                         {"validation_score", outcome.selection->validation_score[k]}});
        }
        results["m_selection"] = sel;
      }
      write_manifest(fc.out, *fit, fc.seed,
                     {{"coords", fc.coords}, {"ensembles", fc.ensembles}, {"scales", fit_scales}},
                     results);
    } else if (sample->parsed()) {
      require(smp.model, "--model");
      const auto map = stargp::load_model(smp.model);
      const Eigen::MatrixXd s = stargp::sample_unconditional(map, n_samples, smp.seed, smp.threads);
      stargp::write_text(smp.out, matrix_csv(s, "sample"));
      write_manifest(smp.out, *sample, smp.seed, {{"model", smp.model}});
    } else if (forecast->parsed()) {
      require(fcst.model, "--model");
      const auto map = stargp::load_model(fcst.model);
      const Eigen::MatrixXd obs = stargp::read_ensembles_csv(observed_path);
      if (observed_row < 1 || observed_row > obs.rows()) {
        throw stargp::config_error(fmt::format("--observed-row {} outside 1..{}", observed_row, obs.rows()));
      }
      const Index n0 = stargp::observed_count_for_cutoff(map, cutoff);
      const Eigen::MatrixXd s = stargp::forecast(map, obs.row(observed_row - 1).transpose(), n0,
                                                 n_samples, fcst.seed, fcst.threads);
      stargp::write_text(fcst.out, matrix_csv(s, "sample"));
      write_manifest(fcst.out, *forecast, fcst.seed,
                     {{"model", fcst.model}, {"observed", observed_path}},
                     ordered_json{{"observed_positions", n0}});
    } else if (score->parsed()) {
      require(scr.model, "--model");
      const auto map = stargp::load_model(scr.model);
      const auto result = stargp::logscore(map, stargp::read_ensembles_csv(test_path), scr.threads);
      std::string text = "replicate,score\n";
      for (std::size_t r = 0; r < result.per_replicate.size(); ++r) {
        text += fmt::format("{},{}\n", r + 1, stargp::format_double(result.per_replicate[r]));
      }
      text += fmt::format("average,{}\n", stargp::format_double(result.average));
      stargp::write_text(scr.out, text);
      std::cout << text;
      write_manifest(scr.out, *score, scr.seed, {{"model", scr.model}, {"test", test_path}});
    }
  } catch (const stargp::Error& e) {
    std::cerr << "error [" << app.get_subcommands().front()->get_name() << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [" << app.get_subcommands().front()->get_name() << "]: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
