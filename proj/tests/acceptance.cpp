// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hsu/experiment.hpp"
#include "hsu/hsu.hpp"
#include "oracles.hpp"

using hsu::Matrix;
using hsu::Vector;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0: none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Matrix uniform_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

Matrix simplex_columns(std::mt19937_64& rng, int c, int n) {
  Matrix s(c, n);
  for (int k = 0; k < n; ++k) s.col(k) = oracle::random_simplex_point(rng, c);
  return s;
}

Outcome simplex_projection() {
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> g(0.0, 2.0);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 2 + trial % 5;
    Vector v(c);
    for (int j = 0; j < c; ++j) v[j] = g(rng);
    const double dev = (hsu::project_simplex(v) - oracle::simplex_projection_active_set(v)).cwiseAbs().maxCoeff();
    worst = std::max(worst, dev);
  }
  return {worst < 1e-9, "max deviation " + fmt("%.3g", worst)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(1002);
  double worst_smooth = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix a = uniform_matrix(rng, 12, 4, 0.05, 1.0);
    const Matrix s = simplex_columns(rng, 4, 16);
    const Matrix y = a * s + 0.05 * uniform_matrix(rng, 12, 16, -1.0, 1.0);
    const auto nb = hsu::neighbor_weights(hsu::HyperspectralImage(a * s, 4, 4), hsu::build_neighborhood(4, 4));
    std::vector<std::size_t> labels(16);
    for (auto& l : labels) l = rng() % 2;
    const auto k = static_cast<std::size_t>(rng() % 16);
    hsu::Penalty p;
    p.eta = 0.1;
    const auto f = [&](const Vector& x) {
      Matrix moved = s;
      moved.col(static_cast<Eigen::Index>(k)) = x;
      return hsu::local_cost(k, y, a, moved, nb, &labels, p);
    };
    const Vector fd = oracle::finite_difference(f, s.col(static_cast<Eigen::Index>(k)), 1e-6);
    const Vector analytic = -2.0 * hsu::smooth_direction(k, y, a, s, nb, &labels, p);
    worst_smooth = std::max(worst_smooth, (analytic - fd).norm() / fd.norm());
  }

  double worst_sparse = 0.0;
  for (double q : {0.5, 1.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      const Vector s = uniform_matrix(rng, 5, 1, 0.05, 1.0);
      const auto f = [&](const Vector& x) { return hsu::lq_norm(x, q, 1e-12); };
      const Vector fd = oracle::finite_difference(f, s, 1e-6);
      const Vector g = hsu::sparsity_gradient(s, q, 1e-12);
      worst_sparse = std::max(worst_sparse, (g - fd).norm() / fd.norm());
    }
  }
  return {worst_smooth < 1e-5 && worst_sparse < 1e-5,
          "smooth rel err " + fmt("%.3g", worst_smooth) + ", sparsity rel err " + fmt("%.3g", worst_sparse)};
}

Outcome nmf_monotonicity() {
  std::mt19937_64 rng(1003);
  double worst_rise = -std::numeric_limits<double>::infinity();
  hsu::UnmixingConfig cfg;
  cfg.variant = hsu::AlgorithmVariant::nmf;
  cfg.max_iter = 200;
  cfg.eps = 1e-300;
  for (int trial = 0; trial < 100; ++trial) {
    const hsu::HyperspectralImage img(uniform_matrix(rng, 20, 50, 0.01, 1.0), 50, 1);
    const auto [a0, s0] = hsu::random_init(20, 4, 50, static_cast<std::uint64_t>(trial));
    double prev = hsu::global_cost(img.data(), a0.data().cwiseMax(1e-9), s0.data());
    const auto result = hsu::run_unmixing(img, cfg, a0, s0);
    for (double j : result.cost_trace) {
      worst_rise = std::max(worst_rise, j - prev);
      prev = j;
    }
    if (result.iterations_run != 200) return {false, "trial stopped early at " + std::to_string(result.iterations_run)};
  }
  return {worst_rise <= 1e-10, "largest per-step change " + fmt("%.3g", worst_rise)};
}

Outcome constraint_preservation() {
  std::size_t checked = 0, bad = 0;
  const auto lib = hsu::bundled_library();
  for (double snr : {20.0, hsu::kNoiseless}) {
    hsu::SynthOptions opt;
    opt.width = 16;
    opt.height = 16;
    opt.endmembers = 4;
    opt.snr_db = snr;
    opt.seed = 1004;
    const auto scene = hsu::generate_synthetic(lib, opt);
    const auto clusters = hsu::fcm(scene.Y, 3);
    for (auto init : {hsu::InitMethod::vca, hsu::InitMethod::random}) {
      const auto [a0, s0] = hsu::initialize(scene.Y, 4, init, 7);
      for (auto v : {hsu::AlgorithmVariant::nmf, hsu::AlgorithmVariant::lq_nmf, hsu::AlgorithmVariant::distributed,
                     hsu::AlgorithmVariant::sparse_distributed,
                     hsu::AlgorithmVariant::clustered_sparse_distributed, hsu::AlgorithmVariant::fcls}) {
        for (double q : {0.5, 1.0}) {
          hsu::UnmixingConfig cfg;
          cfg.variant = v;
          cfg.q = q;
          cfg.max_iter = 60;
          const auto result =
              hsu::run_unmixing(scene.Y, cfg, a0, s0, &clusters, [&](std::size_t, const Matrix& a, const Matrix& s) {
                ++checked;
                if (!hsu::validate_abundances(s, 1e-9) || a.minCoeff() < 0.0) ++bad;
              });
          ++checked;
          if (!hsu::validate_abundances(result.S.data(), 1e-9) || result.A.data().minCoeff() < 0.0) ++bad;
        }
      }
    }
  }
  return {bad == 0, std::to_string(checked) + " iterates checked, " + std::to_string(bad) + " infeasible"};
}

Outcome synthetic_ordering() {
  namespace ex = hsu::experiment;
  ex::ExperimentSpec spec;
  spec.variants = {hsu::AlgorithmVariant::nmf, hsu::AlgorithmVariant::clustered_sparse_distributed,
                   hsu::AlgorithmVariant::sparse_distributed};
  spec.snr_levels = {15, 25, 35};
  spec.cluster_counts = {6};
  spec.runs = 5;
  spec.seed = 1;
  const auto agg = ex::aggregate(ex::run_experiment(spec));
  std::map<std::pair<std::string, double>, double> mean;
  for (const auto& a : agg) mean[{a.variant, a.snr_db}] = a.mean_rms_sad;

  int wins = 0;
  bool within = true;
  std::ostringstream detail;
  for (double snr : spec.snr_levels) {
    const double prop = mean[{"proposed", snr}];
    const double nmf = mean[{"nmf", snr}];
    const double sd = mean[{"sparse_distributed", snr}];
    if (prop < nmf) ++wins;
    if (!(prop <= sd + 0.01)) within = false;
    detail << snr << "dB proposed=" << fmt("%.4f", prop) << " nmf=" << fmt("%.4f", nmf)
           << " sparse_distributed=" << fmt("%.4f", sd) << "; ";
  }
  detail << "wins over nmf " << wins << "/3";
  return {wins >= 2 && within, detail.str()};
}

Outcome single_cluster_degeneracy() {
  hsu::SynthOptions opt;
  opt.width = 20;
  opt.height = 20;
  opt.snr_db = 25;
  opt.seed = 1006;
  const auto scene = hsu::generate_synthetic(hsu::bundled_library(), opt);
  hsu::UnmixingConfig cfg;
  cfg.max_iter = 200;
  cfg.seed = 3;
  cfg.clusters = 1;
  cfg.variant = hsu::AlgorithmVariant::clustered_sparse_distributed;
  const auto clustered = hsu::run_pipeline(scene.Y, 6, cfg, hsu::InitMethod::vca);
  cfg.variant = hsu::AlgorithmVariant::sparse_distributed;
  const auto plain = hsu::run_pipeline(scene.Y, 6, cfg, hsu::InitMethod::vca);
  const auto& t1 = clustered.result.cost_trace;
  const auto& t2 = plain.result.cost_trace;
  const bool same = t1.size() == t2.size() && std::memcmp(t1.data(), t2.data(), t1.size() * sizeof(double)) == 0;
  return {same, std::to_string(t1.size()) + " vs " + std::to_string(t2.size()) + " trace entries, bitwise " +
                    (same ? "identical" : "different")};
}

Outcome fcm_properties() {
  std::mt19937_64 rng(1007);
  double worst_rise = -std::numeric_limits<double>::infinity();
  double worst_norm = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int l = 2 + trial % 6, n = 30 + trial, c = 2 + trial % 5;
    const hsu::HyperspectralImage img(uniform_matrix(rng, l, n, 0.0, 1.0), static_cast<std::size_t>(n), 1);
    hsu::FcmOptions opt;
    opt.seed = static_cast<std::uint64_t>(trial);
    opt.tol = 1e-9;
    // Re-run with growing iteration caps so the normalization check sees every iterate.
    const auto full = hsu::fcm(img, static_cast<std::size_t>(c), opt);
    for (std::size_t i = 1; i < full.objective_history.size(); ++i) {
      worst_rise = std::max(worst_rise, full.objective_history[i] - full.objective_history[i - 1]);
    }
    for (std::size_t cap = 0; cap <= std::min<std::size_t>(full.iterations, 10); ++cap) {
      opt.max_iter = cap;
      const auto partial = hsu::fcm(img, static_cast<std::size_t>(c), opt);
      for (Eigen::Index k = 0; k < partial.memberships.cols(); ++k) {
        worst_norm = std::max(worst_norm, std::abs(partial.memberships.col(k).sum() - 1.0));
      }
    }
    opt.max_iter = 300;
  }
  return {worst_rise <= 1e-10 && worst_norm <= 1e-10,
          "largest objective rise " + fmt("%.3g", worst_rise) + ", worst membership-sum error " + fmt("%.3g", worst_norm)};
}

Outcome stopping_rule() {
  std::ostringstream detail;
  bool ok = true;
  // Exact factorization: zero cost is stationary, so the second iterate repeats the first.
  {
    std::mt19937_64 rng(1008);
    const Matrix a = uniform_matrix(rng, 10, 3, 0.1, 1.0);
    const Matrix s = simplex_columns(rng, 3, 20);
    const hsu::HyperspectralImage img(a * s, 5, 4);
    hsu::UnmixingConfig cfg;
    cfg.variant = hsu::AlgorithmVariant::nmf;
    const auto r = hsu::run_unmixing(img, cfg, hsu::SignatureMatrix(a), hsu::AbundanceMatrix(s));
    ok &= r.stop_reason == hsu::StopReason::converged && r.iterations_run == 2;
    detail << "exact: " << hsu::to_string(r.stop_reason) << " at " << r.iterations_run << "; ";
  }
  // Noisy scene run to convergence: halts at the first step below 1e-8, not before.
  {
    hsu::SynthOptions opt;
    opt.width = 12;
    opt.height = 12;
    opt.endmembers = 3;
    opt.snr_db = 30;
    opt.seed = 1008;
    const auto scene = hsu::generate_synthetic(hsu::bundled_library(), opt);
    hsu::UnmixingConfig cfg;
    cfg.variant = hsu::AlgorithmVariant::sparse_distributed;
    cfg.max_iter = 100000;
    const auto [a0, s0] = hsu::initialize(scene.Y, 3, hsu::InitMethod::vca, 1);
    const auto r = hsu::run_unmixing(scene.Y, cfg, a0, s0);
    const auto& t = r.cost_trace;
    bool first_below = t.size() >= 2 && std::abs(t.back() - t[t.size() - 2]) < 1e-8;
    for (std::size_t i = 1; i + 1 < t.size(); ++i) first_below &= std::abs(t[i] - t[i - 1]) >= 1e-8;
    ok &= r.stop_reason == hsu::StopReason::converged && first_below;
    detail << "noisy: " << hsu::to_string(r.stop_reason) << " at " << r.iterations_run
           << (first_below ? " on the first sub-1e-8 step" : " (not the first sub-1e-8 step)");
  }
  return {ok, detail.str()};
}

Outcome metric_sanity() {
  const auto v = [](double x, double y) {
    Vector out(2);
    out << x, y;
    return out;
  };
  const bool examples = hsu::sad(v(0.3, 0.4), v(0.3, 0.4)) == 0.0 && hsu::sad(v(1, 0), v(0, 1)) == std::numbers::pi / 2 &&
            std::abs(hsu::sad(v(1, 0), v(1, 1)) - std::numbers::pi / 4) <= 1e-15 &&
            hsu::aad(v(0.5, 0.5), v(0.5, 0.5)) == 0.0 && hsu::aad(v(1, 0), v(0, 1)) == std::numbers::pi / 2 &&
            std::abs(hsu::aad(v(0.5, 0.5), v(1, 0)) - std::numbers::pi / 4) <= 1e-15;
  std::mt19937_64 rng(1009);
  int mismatches = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int c = 1 + trial % 6;
    const Matrix t = uniform_matrix(rng, 10, c, 0.01, 1.0);
    const Matrix e = uniform_matrix(rng, 10, c, 0.01, 1.0);
    const auto m = hsu::match_endmembers(t, e);
    double total = 0.0;
    for (int i = 0; i < c; ++i) total += hsu::sad(e.col(i), t.col(static_cast<Eigen::Index>(m[static_cast<std::size_t>(i)])));
    if (std::abs(total - oracle::best_total_angle(t, e)) > 1e-12) ++mismatches;
  }
  return {examples && mismatches == 0, "examples " + std::string(examples ? "exact" : "off") + ", matching mismatches " +
                  std::to_string(mismatches) + "/300"};
}

Outcome io_roundtrips() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "hsu_acceptance_io";
  fs::create_directories(dir);
  std::mt19937_64 rng(1010);
  bool ok = true;
  std::ostringstream detail;

  const Matrix y = uniform_matrix(rng, 5, 12, -1e6, 1e6);
  const hsu::HyperspectralImage cube(y, 4, 3);
  hsu::io::write_cube(dir / "a.cube", cube);
  const auto back = hsu::io::read_cube(dir / "a.cube");
  ok &= std::memcmp(back.data().data(), y.data(), sizeof(double) * static_cast<std::size_t>(y.size())) == 0;

  const hsu::SignatureMatrix lib(uniform_matrix(rng, 7, 3, 0.0, 1.0), {"a", "b", "c"},
                                 {0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  hsu::io::write_spectral_library(dir / "lib.csv", lib);
  ok &= hsu::io::read_spectral_library(dir / "lib.csv").data() == lib.data();

  hsu::EvaluationReport r{{0.1, std::sqrt(2.0)}, 1.0 / 7.0, std::numbers::pi / 9, {1, 0}};
  const hsu::io::RunSummary run{{3.0, 2.0 / 3.0}, 2, "max_iter"};
  hsu::io::write_report(dir / "r.json", r, run, hsu::io::Json::object());
  const auto doc = hsu::io::read_report(dir / "r.json");
  ok &= doc.report && doc.report->per_endmember_sad == r.per_endmember_sad && doc.report->rms_sad == r.rms_sad &&
        doc.report->rms_aad == r.rms_aad && doc.report->matching == r.matching && doc.run.cost_trace == run.cost_trace;
  detail << "round-trips " << (ok ? "bit-exact" : "differ");

  // Malformed inputs: every case must raise a typed I/O error.
  const std::string good = hsu::io::encode_cube(cube);
  std::vector<std::string> bad_cubes;
  bad_cubes.push_back("HSCUBEXX" + good.substr(8));
  bad_cubes.push_back(good.substr(0, good.size() - 8));
  bad_cubes.push_back(good.substr(0, 5));
  bad_cubes.push_back(good + "extra");
  std::string dtype = good;
  dtype[20] = 7;
  bad_cubes.push_back(dtype);
  std::string nan_payload = good;
  const double nan = std::nan("");
  std::memcpy(nan_payload.data() + 22, &nan, 8);
  bad_cubes.push_back(nan_payload);
  for (int i = 0; i < 500; ++i) {
    std::string fuzz = good.substr(0, rng() % (good.size() + 1));
    if (!fuzz.empty()) fuzz[rng() % fuzz.size()] = static_cast<char>(rng());
    bad_cubes.push_back(fuzz);
  }
  const std::vector<std::string> bad_libs{"", "wavelength\n", "wavelength,a\n1,x\n", "wavelength,a,b\n1,2\n",
                                          "wave,a\n1,2\n", "wavelength,a\n1,-2\n", "wavelength,a\n"};
  const std::vector<std::string> bad_reports{"", "{", "[]", "{\"config\":{}}", "{\"config\":{},\"rms_sad\":\"x\"}"};

  int untyped = 0, silent = 0;
  const auto expect_typed = [&](const std::function<void()>& fn, bool may_succeed) {
    try {
      fn();
      if (!may_succeed) ++silent;
    } catch (const hsu::IoError&) {
    } catch (...) {
      ++untyped;
    }
  };
  for (std::size_t i = 0; i < bad_cubes.size(); ++i) {
    const std::vector<std::uint8_t> bytes(bad_cubes[i].begin(), bad_cubes[i].end());
    expect_typed([&] { hsu::io::decode_cube(bytes); }, i >= 6);  // fuzzed bytes can still be valid
  }
  for (const auto& text : bad_libs) {
    expect_typed([&] {
      std::istringstream in(text);
      hsu::io::parse_spectral_library(in);
    }, false);
  }
  for (const auto& text : bad_reports) expect_typed([&] { hsu::io::parse_report(text); }, false);
  expect_typed([&] { hsu::io::read_cube(dir / "missing.cube"); }, false);
  ok &= untyped == 0 && silent == 0;
  detail << ", malformed cases: " << untyped << " untyped, " << silent << " accepted";
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "simplex projection matches active-set oracle", 5, simplex_projection},
      {2, "analytic gradients match finite differences", 10, gradient_check},
      {3, "nmf cost is monotone", 30, nmf_monotonicity},
      {4, "constraints hold on every iterate", 0, constraint_preservation},
      {5, "synthetic SNR-sweep ordering", 900, synthetic_ordering},
      {6, "single-cluster run equals unclustered run", 0, single_cluster_degeneracy},
      {7, "fcm objective and memberships", 0, fcm_properties},
      {8, "stopping rule", 0, stopping_rule},
      {9, "metric sanity and optimal matching", 0, metric_sanity},
      {10, "file format round-trips and typed errors", 0, io_roundtrips},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit_s > 0 && secs > c.time_limit_s) {
      out.pass = false;
      out.detail += " (over the " + fmt("%.0f", c.time_limit_s) + " s limit)";
    }
    if (!out.pass) ++failures;
    std::printf("criterion %2d %s: %s [%s] %.1fs\n", c.id, out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
