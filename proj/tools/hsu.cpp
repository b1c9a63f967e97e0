// Command-line front end: synth, cluster, unmix, eval, experiment.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage or I/O error.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hsu/hsu.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNumerical = 1;
constexpr int kExitUsage = 2;

double parse_snr(const std::string& text) {
  if (text == "inf" || text == "infinity") return hsu::kNoiseless;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw hsu::InvalidArgument("--snr expects a number or 'inf', got '" + text + "'");
  }
  if (used != text.size() || !std::isfinite(v)) {
    throw hsu::InvalidArgument("--snr expects a number or 'inf', got '" + text + "'");
  }
  return v;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw hsu::IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

hsu::HyperspectralImage as_cube(const hsu::Matrix& m, std::size_t width, std::size_t height) {
  return hsu::HyperspectralImage(m, width, height);
}

hsu::io::Json config_json(const hsu::UnmixingConfig& cfg, std::size_t endmembers, hsu::InitMethod init,
                          double lambda) {
  hsu::io::Json j = hsu::io::Json::object();
  j["variant"] = std::string(hsu::to_string(cfg.variant));
  j["endmembers"] = endmembers;
  j["init"] = init == hsu::InitMethod::vca ? "vca" : "random";
  j["mu"] = cfg.mu;
  j["eta"] = cfg.eta;
  j["q"] = cfg.q;
  j["lambda"] = lambda;
  j["max_iter"] = cfg.max_iter;
  j["eps"] = cfg.eps;
  j["clusters"] = hsu::uses_clusters(cfg.variant) ? cfg.clusters : 0;
  j["seed"] = cfg.seed;
  return j;
}

struct SynthArgs {
  std::size_t endmembers = 6;
  std::size_t width = 40;
  std::size_t height = 40;
  std::size_t patch = 8;
  std::size_t filter = 7;
  std::string snr = "inf";
  double purity_cap = 0.8;
  std::uint64_t seed = 1;
  std::string library;
  std::string out = "scene";
};

int cmd_synth(const SynthArgs& a) {
  hsu::SynthOptions opt;
  opt.endmembers = a.endmembers;
  opt.width = a.width;
  opt.height = a.height;
  opt.patch = a.patch;
  opt.filter = a.filter;
  opt.snr_db = parse_snr(a.snr);
  opt.purity_cap = a.purity_cap;
  opt.seed = a.seed;
  const auto library = a.library.empty() ? hsu::bundled_library() : hsu::io::read_spectral_library(a.library);
  const auto scene = hsu::generate_synthetic(library, opt);

  const fs::path out(a.out);
  ensure_dir(out);
  hsu::io::write_cube(out / "Y.cube", scene.Y);
  hsu::io::write_spectral_library(out / "A_true.csv", scene.A_true);
  hsu::io::write_cube(out / "S_true.cube", as_cube(scene.S_true.data(), opt.width, opt.height));
  std::cout << "wrote " << (out / "Y.cube").string() << ", A_true.csv, S_true.cube ("
            << scene.Y.bands() << " bands, " << opt.width << "x" << opt.height << ", "
            << opt.endmembers << " endmembers, snr " << a.snr << " dB)\n";
  return kExitOk;
}

struct ClusterArgs {
  std::string input;
  std::size_t clusters = 6;
  double fuzzifier = 2.0;
  double tol = 1e-6;
  std::size_t max_iter = 300;
  std::uint64_t seed = 1;
  std::string out = "clusters";
};

int cmd_cluster(const ClusterArgs& a) {
  const auto image = hsu::io::read_cube(a.input);
  hsu::FcmOptions opt{a.fuzzifier, a.tol, a.max_iter, a.seed};
  const auto result = hsu::fcm(image, a.clusters, opt);

  const fs::path out(a.out);
  ensure_dir(out);
  hsu::Matrix labels(1, static_cast<Eigen::Index>(image.pixels()));
  for (std::size_t k = 0; k < result.labels.size(); ++k) {
    labels(0, static_cast<Eigen::Index>(k)) = static_cast<double>(result.labels[k]);
  }
  hsu::io::write_cube(out / "labels.cube", as_cube(labels, image.width(), image.height()));
  hsu::io::write_cube(out / "memberships.cube", as_cube(result.memberships, image.width(), image.height()));
  std::vector<std::string> names;
  for (std::size_t c = 0; c < result.clusters(); ++c) names.push_back("cluster" + std::to_string(c));
  hsu::io::write_spectral_library(out / "centers.csv",
                                  hsu::SignatureMatrix(result.centers.cwiseMax(0.0), names));
  std::cout << "fcm: " << result.clusters() << " clusters, " << result.iterations
            << " iterations, objective " << result.objective_history.back() << "\n";
  return kExitOk;
}

struct UnmixArgs {
  std::string input;
  std::size_t endmembers = 6;
  std::string variant = "proposed";
  std::optional<std::size_t> clusters;
  std::string init = "vca";
  double mu = 0.02;
  double eta = 0.1;
  double q = 1.0;
  std::optional<double> lambda;
  std::size_t max_iter = 1000;
  double eps = 1e-8;
  std::uint64_t seed = 1;
  std::string truth;
  std::string out = "result";
};

std::optional<std::pair<hsu::SignatureMatrix, hsu::AbundanceMatrix>> load_truth(const fs::path& dir) {
  if (dir.empty()) return std::nullopt;
  auto a = hsu::io::read_spectral_library(dir / "A_true.csv");
  auto s = hsu::io::read_cube(dir / "S_true.cube");
  return std::make_pair(std::move(a), hsu::AbundanceMatrix(s.data()));
}

int cmd_unmix(const UnmixArgs& a) {
  hsu::UnmixingConfig cfg;
  cfg.variant = hsu::parse_variant(a.variant);
  cfg.mu = a.mu;
  cfg.eta = a.eta;
  cfg.q = a.q;
  cfg.lambda = a.lambda;
  cfg.max_iter = a.max_iter;
  cfg.eps = a.eps;
  cfg.seed = a.seed;
  if (a.clusters) {
    if (!hsu::uses_clusters(cfg.variant)) {
      std::cerr << "warning: --clusters is ignored by variant '" << hsu::to_string(cfg.variant) << "'\n";
    }
    cfg.clusters = *a.clusters;
  }
  const auto init = hsu::parse_init(a.init);

  const auto image = hsu::io::read_cube(a.input);
  const auto truth = load_truth(a.truth);
  const auto out = hsu::run_pipeline(image, a.endmembers, cfg, init);
  const auto& result = out.result;

  std::optional<hsu::EvaluationReport> report;
  if (truth) report = hsu::evaluate(truth->first, truth->second, result);

  const fs::path dir(a.out);
  ensure_dir(dir);
  hsu::io::write_spectral_library(dir / "A.csv", result.A);
  hsu::io::write_cube(dir / "S.cube", as_cube(result.S.data(), image.width(), image.height()));
  hsu::io::write_report(dir / "report.json", report,
                        {result.cost_trace, result.iterations_run, std::string(hsu::to_string(result.stop_reason))},
                        config_json(cfg, a.endmembers, init, result.lambda));
  std::cout << hsu::to_string(cfg.variant) << ": " << result.iterations_run << " iterations ("
            << hsu::to_string(result.stop_reason) << "), final cost " << result.cost_trace.back();
  if (report) std::cout << ", rmsSAD " << report->rms_sad << ", rmsAAD " << report->rms_aad;
  std::cout << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string a_true, s_true, a_est, s_est;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const auto a_true = hsu::io::read_spectral_library(a.a_true);
  const auto s_true = hsu::io::read_cube(a.s_true);
  const auto a_est = hsu::io::read_spectral_library(a.a_est);
  const auto s_est = hsu::io::read_cube(a.s_est);
  const auto report = hsu::evaluate(a_true.data(), s_true.data(), a_est.data(), s_est.data());
  if (!a.out.empty()) hsu::io::write_report(a.out, report, {}, hsu::io::Json::object());
  std::cout << "rmsSAD " << report.rms_sad << " rad, rmsAAD " << report.rms_aad << " rad\n";
  for (std::size_t j = 0; j < report.per_endmember_sad.size(); ++j) {
    const auto name = a_true.names().empty() ? "em" + std::to_string(j + 1) : a_true.names()[j];
    std::cout << "  " << name << ": " << report.per_endmember_sad[j] << "\n";
  }
  return kExitOk;
}

struct ExperimentArgs {
  std::string spec;
  std::string out = "experiment";
  std::optional<std::size_t> threads;
  bool fix_signatures = false;
};

int cmd_experiment(const ExperimentArgs& a) {
  auto spec = hsu::experiment::read_spec(a.spec);
  if (a.threads) spec.threads = *a.threads;
  if (a.fix_signatures) spec.fix_signatures = true;
  const auto rows = hsu::experiment::run_experiment(spec);
  const fs::path dir(a.out);
  ensure_dir(dir);
  hsu::io::detail::spill(dir / "cells.csv", hsu::experiment::cells_csv(rows));
  const auto agg = hsu::experiment::aggregate(rows);
  hsu::io::detail::spill(dir / "aggregate.csv", hsu::experiment::aggregate_csv(agg));
  std::cout << hsu::experiment::aggregate_csv(agg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral unmixing toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scene (Y.cube, A_true.csv, S_true.cube)");
  synth_cmd->add_option("--c", synth.endmembers, "Number of endmembers")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", synth.width, "Scene width in pixels")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.height, "Scene height in pixels")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--patch", synth.patch, "Abundance block size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--filter", synth.filter, "Low-pass kernel size (odd)")
      ->check(CLI::Validator(
          [](const std::string& s) -> std::string {
            try {
              const auto v = std::stoul(s);
              return v % 2 == 1 ? "" : "filter size must be odd";
            } catch (const std::exception&) {
              return "filter size must be an odd integer";
            }
          },
          "ODD"));
  synth_cmd->add_option("--snr", synth.snr, "Target SNR in dB, or 'inf'");
  synth_cmd->add_option("--purity-cap", synth.purity_cap, "Largest allowed abundance per pixel (1 disables)");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed");
  synth_cmd->add_option("--library", synth.library, "Spectral library CSV (default: bundled)");
  synth_cmd->add_option("--out", synth.out, "Output directory");

  ClusterArgs cluster;
  auto* cluster_cmd = app.add_subcommand("cluster", "Fuzzy c-means clustering of a cube");
  cluster_cmd->add_option("input", cluster.input, "Input cube")->required();
  cluster_cmd->add_option("--clusters", cluster.clusters, "Number of clusters")->check(CLI::PositiveNumber);
  cluster_cmd->add_option("--m", cluster.fuzzifier, "Fuzzifier exponent (> 1)");
  cluster_cmd->add_option("--tol", cluster.tol, "Membership change tolerance");
  cluster_cmd->add_option("--max-iter", cluster.max_iter, "Iteration cap");
  cluster_cmd->add_option("--seed", cluster.seed, "RNG seed");
  cluster_cmd->add_option("--out", cluster.out, "Output directory");

  UnmixArgs unmix;
  auto* unmix_cmd = app.add_subcommand("unmix", "Unmix a cube (A.csv, S.cube, report.json)");
  unmix_cmd->add_option("input", unmix.input, "Input cube")->required();
  unmix_cmd->add_option("--c", unmix.endmembers, "Number of endmembers")->check(CLI::PositiveNumber);
  unmix_cmd->add_option("--variant", unmix.variant,
                        "nmf | lq_nmf | distributed | sparse_distributed | proposed | fcls");
  unmix_cmd->add_option("--clusters", unmix.clusters, "FCM cluster count (proposed only)");
  unmix_cmd->add_option("--init", unmix.init, "vca | random");
  unmix_cmd->add_option("--mu", unmix.mu, "Abundance step size");
  unmix_cmd->add_option("--eta", unmix.eta, "Neighborhood weight");
  unmix_cmd->add_option("--q", unmix.q, "Sparsity exponent in (0, 1]");
  unmix_cmd->add_option("--lambda", unmix.lambda, "Sparsity weight (default: estimated)");
  unmix_cmd->add_option("--max-iter", unmix.max_iter, "Iteration cap");
  unmix_cmd->add_option("--eps", unmix.eps, "Stopping tolerance on the objective change");
  unmix_cmd->add_option("--seed", unmix.seed, "RNG seed");
  unmix_cmd->add_option("--truth", unmix.truth, "Directory with A_true.csv and S_true.cube for metrics");
  unmix_cmd->add_option("--out", unmix.out, "Output directory");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score an estimate against ground truth");
  eval_cmd->add_option("--a-true", eval.a_true, "True signatures CSV")->required();
  eval_cmd->add_option("--s-true", eval.s_true, "True abundance cube")->required();
  eval_cmd->add_option("--a-est", eval.a_est, "Estimated signatures CSV")->required();
  eval_cmd->add_option("--s-est", eval.s_est, "Estimated abundance cube")->required();
  eval_cmd->add_option("--out", eval.out, "Report JSON path");

  ExperimentArgs exp;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a Monte-Carlo sweep from a spec file");
  exp_cmd->add_option("spec", exp.spec, "Experiment spec file")->required();
  exp_cmd->add_option("--out", exp.out, "Output directory for cells.csv and aggregate.csv");
  exp_cmd->add_option("--threads", exp.threads, "Worker threads (default: all cores)");
  exp_cmd->add_flag("--fix-signatures", exp.fix_signatures, "Use the same library columns in every scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*cluster_cmd) return cmd_cluster(cluster);
    if (*unmix_cmd) return cmd_unmix(unmix);
    if (*eval_cmd) return cmd_eval(eval);
    if (*exp_cmd) return cmd_experiment(exp);
  } catch (const hsu::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const hsu::DegenerateData& e) {
    std::cerr << "degenerate data: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const hsu::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const hsu::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
