#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsu/datamodel.hpp"
#include "hsu/errors.hpp"
#include "hsu/metrics.hpp"

namespace hsu::io {

// ---------------------------------------------------------------------------
// Cube format: 22-byte header followed by a band-sequential float64 payload.
//
//   offset  size  field
//        0     8  magic "HSCUBE01"
//        8     4  width   (uint32 LE)
//       12     4  height  (uint32 LE)
//       16     4  bands   (uint32 LE)
//       20     1  dtype   (1 = float64 LE)
//       21     1  interleave (1 = band sequential)
//       22     .  payload, value(b, k) at 22 + 8 * (b * width * height + k)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCubeMagic = "HSCUBE01";
inline constexpr std::size_t kCubeHeaderSize = 22;
inline constexpr std::uint8_t kDtypeFloat64 = 1;
inline constexpr std::uint8_t kInterleaveBsq = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

inline double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spill(const std::filesystem::path& path, const std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

inline std::string format_shortest(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Serialized cube bytes (header + payload).
inline std::string encode_cube(const HyperspectralImage& image) {
  const auto& y = image.data();
  if (image.width() > UINT32_MAX || image.height() > UINT32_MAX || image.bands() > UINT32_MAX) {
    throw InvalidArgument("cube dimensions exceed 32 bits");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kCubeHeaderSize + static_cast<std::size_t>(y.size()) * 8);
  out.insert(out.end(), kCubeMagic.begin(), kCubeMagic.end());
  detail::put_u32(out, static_cast<std::uint32_t>(image.width()));
  detail::put_u32(out, static_cast<std::uint32_t>(image.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(image.bands()));
  out.push_back(kDtypeFloat64);
  out.push_back(kInterleaveBsq);
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) detail::put_f64(out, y(b, k));
  }
  return std::string(out.begin(), out.end());
}

inline HyperspectralImage decode_cube(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kCubeHeaderSize) {
    throw FormatError("header", bytes.size(),
                      "truncated header: expected " + std::to_string(kCubeHeaderSize) +
                          " bytes, found " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kCubeMagic.data(), kCubeMagic.size()) != 0) {
    throw FormatError("magic", 0, "bad magic, expected HSCUBE01");
  }
  const std::uint32_t width = detail::get_u32(bytes.data() + 8);
  const std::uint32_t height = detail::get_u32(bytes.data() + 12);
  const std::uint32_t bands = detail::get_u32(bytes.data() + 16);
  if (width == 0) throw FormatError("width", 8, "must be >= 1");
  if (height == 0) throw FormatError("height", 12, "must be >= 1");
  if (bands == 0) throw FormatError("bands", 16, "must be >= 1");
  if (bytes[20] != kDtypeFloat64) {
    throw FormatError("dtype", 20, "unsupported dtype " + std::to_string(bytes[20]));
  }
  if (bytes[21] != kInterleaveBsq) {
    throw FormatError("interleave", 21, "unsupported interleave " + std::to_string(bytes[21]));
  }
  const std::uint64_t pixels = std::uint64_t{width} * height;
  const std::uint64_t count = pixels * bands;
  const std::uint64_t expected = count * 8;
  const std::uint64_t actual = bytes.size() - kCubeHeaderSize;
  if (actual < expected) {
    throw FormatError("payload", kCubeHeaderSize + actual,
                      "truncated payload: expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(actual));
  }
  if (actual > expected) {
    throw FormatError("payload", kCubeHeaderSize + expected,
                      "trailing data: expected " + std::to_string(expected) + " bytes, found " +
                          std::to_string(actual));
  }

  Matrix y(static_cast<Eigen::Index>(bands), static_cast<Eigen::Index>(pixels));
  std::size_t offset = kCubeHeaderSize;
  for (Eigen::Index b = 0; b < y.rows(); ++b) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      const double v = detail::get_f64(bytes.data() + offset);
      if (!std::isfinite(v)) throw FormatError("payload", offset, "non-finite value");
      y(b, k) = v;
      offset += 8;
    }
  }
  return HyperspectralImage(std::move(y), width, height);
}

inline void write_cube(const std::filesystem::path& path, const HyperspectralImage& image) {
  detail::spill(path, encode_cube(image));
}

inline HyperspectralImage read_cube(const std::filesystem::path& path) {
  return decode_cube(detail::slurp(path));
}

// ---------------------------------------------------------------------------
// Spectral library CSV: header `wavelength,name1,...,namec`, one row per band.
// ---------------------------------------------------------------------------

inline SignatureMatrix parse_spectral_library(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw ParseError(std::max<std::size_t>(line_no, 1), "empty spectral library");
  const auto header = detail::split(line, ',');
  if (header.size() < 2 || header[0] != "wavelength") {
    throw ParseError(line_no, "header must be 'wavelength,<name>,...'");
  }
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i].empty()) throw ParseError(line_no, "empty material name in column " + std::to_string(i + 1));
    names.emplace_back(header[i]);
  }

  std::vector<double> wavelengths;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(cells.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto cell = cells[i];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(line_no, "non-numeric value '" + std::string(cell) + "' in column " +
                                      std::to_string(i + 1));
      }
      if (i > 0 && v < 0.0) {
        throw ParseError(line_no, "negative reflectance in column " + std::to_string(i + 1));
      }
      row[i] = v;
    }
    wavelengths.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(line_no, "spectral library has no bands");

  Matrix a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c + 1];
    }
  }
  return SignatureMatrix(std::move(a), std::move(names), std::move(wavelengths));
}

inline SignatureMatrix read_spectral_library(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return parse_spectral_library(in);
}

/// CSV text of a signature matrix. Values use the shortest round-trip form.
/// Missing wavelengths become 1-based band indices; missing names em1..emc.
inline std::string format_spectral_library(const SignatureMatrix& a) {
  std::ostringstream out;
  out << "wavelength";
  for (std::size_t j = 0; j < a.endmembers(); ++j) {
    out << ',' << (a.names().empty() ? "em" + std::to_string(j + 1) : a.names()[j]);
  }
  out << '\n';
  for (std::size_t b = 0; b < a.bands(); ++b) {
    out << (a.wavelengths().empty() ? detail::format_shortest(static_cast<double>(b + 1))
                                    : detail::format_shortest(a.wavelengths()[b]));
    for (std::size_t j = 0; j < a.endmembers(); ++j) {
      out << ',' << detail::format_shortest(a.data()(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j)));
    }
    out << '\n';
  }
  return out.str();
}

inline void write_spectral_library(const std::filesystem::path& path, const SignatureMatrix& a) {
  detail::spill(path, format_spectral_library(a));
}

// ---------------------------------------------------------------------------
// Report JSON. Keys appear in a fixed order; floats carry 17 significant digits.
// ---------------------------------------------------------------------------

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string format_17(double v) {
  if (!std::isfinite(v)) return "null";
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline void emit(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump();
        out += ':';
        emit(out, it.value());
      }
      out += '}';
      break;
    }
    case Json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ',';
        emit(out, j[i]);
      }
      out += ']';
      break;
    }
    case Json::value_t::number_float:
      out += format_17(j.get<double>());
      break;
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Compact JSON with 17-significant-digit floats and insertion key order.
inline std::string dump_json(const Json& j) {
  std::string out;
  detail::emit(out, j);
  out += '\n';
  return out;
}

struct RunSummary {
  std::vector<double> cost_trace;
  std::size_t iterations_run = 0;
  std::string stop_reason;
};

inline Json report_json(const std::optional<EvaluationReport>& report, const RunSummary& run,
                        const Json& config) {
  Json doc = Json::object();
  doc["config"] = config.is_null() ? Json::object() : config;
  if (report) {
    doc["per_endmember_sad"] = report->per_endmember_sad;
    doc["rms_sad"] = report->rms_sad;
    doc["rms_aad"] = report->rms_aad;
    doc["matching"] = report->matching;
  } else {
    doc["per_endmember_sad"] = Json::array();
    doc["rms_sad"] = nullptr;
    doc["rms_aad"] = nullptr;
    doc["matching"] = Json::array();
  }
  doc["cost_trace"] = run.cost_trace.empty() ? Json::array() : Json(run.cost_trace);
  doc["iterations_run"] = run.iterations_run;
  doc["stop_reason"] = run.stop_reason;
  return doc;
}

inline void write_report(const std::filesystem::path& path,
                         const std::optional<EvaluationReport>& report, const RunSummary& run,
                         const Json& config) {
  detail::spill(path, dump_json(report_json(report, run, config)));
}

struct ReportDocument {
  Json config;
  std::optional<EvaluationReport> report;
  RunSummary run;
};

inline ReportDocument parse_report(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("report", e.byte, e.what());
  }
  try {
    ReportDocument out;
    out.config = doc.at("config");
    if (!doc.at("rms_sad").is_null()) {
      EvaluationReport r;
      r.per_endmember_sad = doc.at("per_endmember_sad").get<std::vector<double>>();
      r.rms_sad = doc.at("rms_sad").get<double>();
      r.rms_aad = doc.at("rms_aad").get<double>();
      r.matching = doc.at("matching").get<std::vector<std::size_t>>();
      out.report = std::move(r);
    }
    out.run.cost_trace = doc.at("cost_trace").get<std::vector<double>>();
    out.run.iterations_run = doc.value("iterations_run", std::size_t{0});
    out.run.stop_reason = doc.value("stop_reason", std::string{});
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report", 0, e.what());
  }
}

inline ReportDocument read_report(const std::filesystem::path& path) {
  const auto bytes = detail::slurp(path);
  return parse_report(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace hsu::io
