#pragma once

// File formats of the command-line tool: CSV tables with 17 significant
// digits and LF line endings, and state.json for density matrices.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "mixctl/app/config.hpp"
#include "mixctl/operators.hpp"
#include "mixctl/propagation.hpp"

namespace mixctl::app {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& file, const std::vector<std::string>& header)
      : out_(file, std::ios::binary), width_(header.size()), path_(file) {
    if (!out_) throw std::runtime_error("cannot write '" + file.string() + "'");
    write_cells(header);
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    write_cells(cells);
  }

  void row(const std::vector<std::string>& cells) { write_cells(cells); }

 private:
  void write_cells(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("CSV row width mismatch in " + path_.string());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("write failed for '" + path_.string() + "'");
  }

  std::ofstream out_;
  std::size_t width_;
  std::filesystem::path path_;
};

/// {"dims": [...], "re": [...], "im": [...]} with row-major entries.
inline void write_state_json(const std::filesystem::path& file, const Operator& rho, const std::vector<Index>& dims) {
  json j;
  j["dims"] = dims;
  std::vector<double> re, im;
  re.reserve(static_cast<std::size_t>(rho.size()));
  im.reserve(static_cast<std::size_t>(rho.size()));
  for (Index r = 0; r < rho.rows(); ++r) {
    for (Index c = 0; c < rho.cols(); ++c) {
      re.push_back(rho(r, c).real());
      im.push_back(rho(r, c).imag());
    }
  }
  j["re"] = re;
  j["im"] = im;
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  out << j.dump() << '\n';
}

struct StoredState {
  std::vector<Index> dims;
  Operator matrix;
};

inline StoredState read_state_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("target.path: cannot open '" + file.string() + "'");
  StoredState s;
  try {
    const json j = json::parse(in);
    s.dims = j.at("dims").get<std::vector<Index>>();
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    Index n = 1;
    for (Index d : s.dims) n *= d;
    if (s.dims.empty() || re.size() != static_cast<std::size_t>(n * n) || im.size() != re.size()) {
      throw ConfigError("target.path: entry count does not match dims in '" + file.string() + "'");
    }
    s.matrix.resize(n, n);
    for (Index r = 0; r < n; ++r) {
      for (Index c = 0; c < n; ++c) {
        const auto k = static_cast<std::size_t>(r * n + c);
        s.matrix(r, c) = Complex(re[k], im[k]);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("target.path: " + std::string(e.what()));
  }
  return s;
}

/// controls.csv: t_mid_s followed by one column per track.
inline void write_controls_csv(const std::filesystem::path& file, const ControlSet& cs, const TimeGrid& grid) {
  std::vector<std::string> header{"t_mid_s"};
  for (const auto& t : cs.tracks()) header.push_back(t.name);
  CsvWriter w(file, header);
  for (std::size_t j = 0; j < cs.n_steps(); ++j) {
    std::vector<double> row{grid.midpoint(j)};
    for (const auto& t : cs.tracks()) row.push_back(t.samples[j]);
    w.row(row);
  }
}

/// Reads a controls.csv written by write_controls_csv. Checks track names
/// against `names`; the time column is ignored.
inline ControlSet read_controls_csv(const std::filesystem::path& file, const std::vector<std::string>& names,
                                    const char* field) {
  std::ifstream in(file);
  if (!in) throw ConfigError(std::string(field) + ": cannot open '" + file.string() + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() != names.size() + 1) {
    throw ConfigError(std::string(field) + ": expected " + std::to_string(names.size() + 1) + " columns");
  }
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (header[k + 1] != names[k]) {
      throw ConfigError(std::string(field) + ": column '" + header[k + 1] + "' where '" + names[k] + "' was expected");
    }
  }
  std::vector<ControlSet::Track> tracks;
  for (const auto& n : names) tracks.push_back({n, {}});
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col > 0 && col <= names.size()) {
        try {
          tracks[col - 1].samples.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ConfigError(std::string(field) + ": bad number '" + cell + "'");
        }
      }
      ++col;
    }
    if (col != names.size() + 1) throw ConfigError(std::string(field) + ": ragged row");
  }
  if (tracks.empty() || tracks.front().samples.empty()) throw ConfigError(std::string(field) + ": no samples");
  return ControlSet(std::move(tracks));
}

}  // namespace mixctl::app
