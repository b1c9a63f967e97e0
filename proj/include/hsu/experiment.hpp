#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hsu/clustering.hpp"
#include "hsu/io.hpp"
#include "hsu/metrics.hpp"
#include "hsu/synth.hpp"
#include "hsu/unmix.hpp"

namespace hsu::experiment {

/// Monte-Carlo sweep over variants, SNR levels and cluster counts.
struct ExperimentSpec {
  std::vector<AlgorithmVariant> variants{AlgorithmVariant::nmf,
                                         AlgorithmVariant::clustered_sparse_distributed};
  std::vector<double> snr_levels{15, 20, 25, 30, 35};
  std::vector<std::size_t> cluster_counts{6};
  std::size_t runs = 20;
  SynthOptions scene{};
  bool fix_signatures = false;
  std::filesystem::path library;  // empty: bundled library
  UnmixingConfig solver{};
  InitMethod init = InitMethod::vca;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (variants.empty()) throw InvalidArgument("experiment needs at least one variant");
    if (snr_levels.empty()) throw InvalidArgument("experiment needs at least one SNR level");
    if (cluster_counts.empty()) throw InvalidArgument("experiment needs at least one cluster count");
    if (runs == 0) throw InvalidArgument("experiment needs at least one run");
    for (auto c : cluster_counts) {
      if (c == 0) throw InvalidArgument("cluster counts must be positive");
    }
    solver.validate();
  }
};

/// One (variant, snr, clusters, run) cell. `cluster_index` is meaningless for
/// variants that do not cluster; their `clusters` column reads 0.
struct Cell {
  std::size_t variant_index = 0;
  std::size_t snr_index = 0;
  std::size_t cluster_index = 0;
  std::size_t run = 0;
};

struct CellResult {
  std::string variant;
  double snr_db = 0.0;
  std::size_t clusters = 0;
  std::size_t run = 0;
  double rms_sad = 0.0;
  double rms_aad = 0.0;
  std::size_t iterations = 0;
  std::string stop_reason;
};

/// SplitMix64 finalizer; folds a list of integers into a seed.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (auto p : parts) {
    h ^= p + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    h += 0x9E3779B97F4A7C15ULL;
    h = (h ^ (h >> 30)) * 0xBF58476D1CE4E5B9ULL;
    h = (h ^ (h >> 27)) * 0x94D049BB133111EBULL;
    h ^= h >> 31;
  }
  return h;
}

inline constexpr std::uint64_t kSceneStream = 1;
inline constexpr std::uint64_t kSolverStream = 2;
inline constexpr std::uint64_t kSignatureStream = 3;

/// Scene seed. Shared by every variant and cluster count at one (snr, run)
/// so variants are compared on identical data.
inline std::uint64_t scene_seed(const ExperimentSpec& spec, const Cell& cell) {
  return mix_seed({spec.seed, kSceneStream, cell.snr_index, cell.run});
}

inline std::uint64_t solver_seed(const ExperimentSpec& spec, const Cell& cell) {
  return mix_seed({spec.seed, kSolverStream, cell.snr_index, cell.run});
}

/// Cells in output order: variant, then SNR, then cluster count, then run.
inline std::vector<Cell> enumerate_cells(const ExperimentSpec& spec) {
  std::vector<Cell> cells;
  for (std::size_t v = 0; v < spec.variants.size(); ++v) {
    const std::size_t cluster_slots = uses_clusters(spec.variants[v]) ? spec.cluster_counts.size() : 1;
    for (std::size_t s = 0; s < spec.snr_levels.size(); ++s) {
      for (std::size_t c = 0; c < cluster_slots; ++c) {
        for (std::size_t r = 0; r < spec.runs; ++r) cells.push_back(Cell{v, s, c, r});
      }
    }
  }
  return cells;
}

inline CellResult run_cell(const ExperimentSpec& spec, const SignatureMatrix& library, const Cell& cell) {
  SynthOptions scene_opts = spec.scene;
  scene_opts.snr_db = spec.snr_levels.at(cell.snr_index);
  scene_opts.seed = scene_seed(spec, cell);
  if (spec.fix_signatures) scene_opts.signature_seed = mix_seed({spec.seed, kSignatureStream});
  const SyntheticScene scene = generate_synthetic(library, scene_opts);

  UnmixingConfig cfg = spec.solver;
  cfg.variant = spec.variants.at(cell.variant_index);
  cfg.seed = solver_seed(spec, cell);
  const bool clustered = uses_clusters(cfg.variant);
  if (clustered) cfg.clusters = spec.cluster_counts.at(cell.cluster_index);

  const auto out = run_pipeline(scene.Y, scene_opts.endmembers, cfg, spec.init);
  const auto report = evaluate(scene.A_true, scene.S_true, out.result);

  CellResult row;
  row.variant = std::string(to_string(cfg.variant));
  row.snr_db = scene_opts.snr_db;
  row.clusters = clustered ? cfg.clusters : 0;
  row.run = cell.run;
  row.rms_sad = report.rms_sad;
  row.rms_aad = report.rms_aad;
  row.iterations = out.result.iterations_run;
  row.stop_reason = std::string(to_string(out.result.stop_reason));
  return row;
}

/// Runs every cell on a worker pool. Rows come back in enumerate_cells order.
inline std::vector<CellResult> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const SignatureMatrix library =
      spec.library.empty() ? bundled_library() : io::read_spectral_library(spec.library);
  const auto cells = enumerate_cells(spec);
  std::vector<CellResult> rows(cells.size());

  std::size_t workers = spec.threads != 0 ? spec.threads : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, cells.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        rows[i] = run_cell(spec, library, cells[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

struct AggregateRow {
  std::string variant;
  double snr_db = 0.0;
  std::size_t clusters = 0;
  std::size_t runs = 0;
  double mean_rms_sad = 0.0;
  double mean_rms_aad = 0.0;
  double mean_iterations = 0.0;
};

/// Means over runs for each (variant, snr, clusters) group, in first-seen order.
inline std::vector<AggregateRow> aggregate(const std::vector<CellResult>& rows) {
  std::vector<AggregateRow> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow& a) {
      return a.variant == row.variant && a.snr_db == row.snr_db && a.clusters == row.clusters;
    });
    if (it == out.end()) {
      out.push_back(AggregateRow{row.variant, row.snr_db, row.clusters, 0, 0.0, 0.0, 0.0});
      it = std::prev(out.end());
    }
    ++it->runs;
    it->mean_rms_sad += row.rms_sad;
    it->mean_rms_aad += row.rms_aad;
    it->mean_iterations += static_cast<double>(row.iterations);
  }
  for (auto& a : out) {
    const auto n = static_cast<double>(a.runs);
    a.mean_rms_sad /= n;
    a.mean_rms_aad /= n;
    a.mean_iterations /= n;
  }
  return out;
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return io::detail::format_shortest(v);
}

inline std::string cells_csv(const std::vector<CellResult>& rows) {
  std::ostringstream out;
  out << "variant,snr_db,clusters,run,rms_sad,rms_aad,iterations,stop_reason\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << format_number(r.snr_db) << ',' << r.clusters << ',' << r.run << ','
        << format_number(r.rms_sad) << ',' << format_number(r.rms_aad) << ',' << r.iterations << ','
        << r.stop_reason << '\n';
  }
  return out.str();
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << "variant,snr_db,clusters,runs,mean_rms_sad,mean_rms_aad,mean_iterations\n";
  for (const auto& a : rows) {
    out << a.variant << ',' << format_number(a.snr_db) << ',' << a.clusters << ',' << a.runs << ','
        << format_number(a.mean_rms_sad) << ',' << format_number(a.mean_rms_aad) << ','
        << format_number(a.mean_iterations) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Spec file: one `key = value` per line, `#` starts a comment, lists are
// comma separated. Unknown keys are errors.
// ---------------------------------------------------------------------------

namespace spec_detail {

inline double parse_double(std::string_view text, std::size_t line) {
  text = io::detail::trim(text);
  if (text == "inf" || text == "infinity") return kNoiseless;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "expected a number, found '" + std::string(text) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view text, std::size_t line) {
  text = io::detail::trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(line, "expected a non-negative integer, found '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view text, std::size_t line) {
  text = io::detail::trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError(line, "expected a boolean, found '" + std::string(text) + "'");
}

}  // namespace spec_detail

inline ExperimentSpec parse_spec(std::istream& in) {
  using namespace spec_detail;
  ExperimentSpec spec;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = io::detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line, "expected 'key = value'");
    const std::string key(io::detail::trim(text.substr(0, eq)));
    const std::string_view value = io::detail::trim(text.substr(eq + 1));
    const auto items = io::detail::split(value, ',');

    try {
      if (key == "variants") {
        spec.variants.clear();
        for (auto v : items) spec.variants.push_back(parse_variant(v));
      } else if (key == "snr_levels") {
        spec.snr_levels.clear();
        for (auto v : items) spec.snr_levels.push_back(parse_double(v, line));
      } else if (key == "cluster_counts") {
        spec.cluster_counts.clear();
        for (auto v : items) {
          // `a..b` expands to the inclusive integer range.
          if (const auto dots = v.find(".."); dots != std::string_view::npos) {
            const auto lo = parse_uint(v.substr(0, dots), line);
            const auto hi = parse_uint(v.substr(dots + 2), line);
            if (lo > hi) throw ParseError(line, "empty cluster range");
            for (auto c = lo; c <= hi; ++c) spec.cluster_counts.push_back(c);
          } else {
            spec.cluster_counts.push_back(parse_uint(v, line));
          }
        }
      } else if (key == "runs") {
        spec.runs = parse_uint(value, line);
      } else if (key == "seed") {
        spec.seed = parse_uint(value, line);
      } else if (key == "threads") {
        spec.threads = parse_uint(value, line);
      } else if (key == "width") {
        spec.scene.width = parse_uint(value, line);
      } else if (key == "height") {
        spec.scene.height = parse_uint(value, line);
      } else if (key == "endmembers") {
        spec.scene.endmembers = parse_uint(value, line);
      } else if (key == "patch") {
        spec.scene.patch = parse_uint(value, line);
      } else if (key == "filter") {
        spec.scene.filter = parse_uint(value, line);
      } else if (key == "purity_cap") {
        spec.scene.purity_cap = parse_double(value, line);
      } else if (key == "fix_signatures") {
        spec.fix_signatures = parse_bool(value, line);
      } else if (key == "library") {
        spec.library = std::string(value);
      } else if (key == "mu") {
        spec.solver.mu = parse_double(value, line);
      } else if (key == "eta") {
        spec.solver.eta = parse_double(value, line);
      } else if (key == "q") {
        spec.solver.q = parse_double(value, line);
      } else if (key == "lambda") {
        spec.solver.lambda = parse_double(value, line);
      } else if (key == "max_iter") {
        spec.solver.max_iter = parse_uint(value, line);
      } else if (key == "eps") {
        spec.solver.eps = parse_double(value, line);
      } else if (key == "init") {
        spec.init = parse_init(value);
      } else {
        throw ParseError(line, "unknown key '" + key + "'");
      }
    } catch (const InvalidArgument& e) {
      throw ParseError(line, e.what());
    }
  }
  spec.validate();
  return spec;
}

inline ExperimentSpec read_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_spec(in);
}

}  // namespace hsu::experiment
