#pragma once

// CSV tables, JSON encodings and atomic file output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "solenoid/attractor.hpp"
#include "solenoid/common.hpp"
#include "solenoid/measure.hpp"
#include "solenoid/periodic.hpp"
#include "solenoid/separation.hpp"
#include "solenoid/symbolic.hpp"

namespace solenoid {

using json = nlohmann::json;

/// Round-trip decimal form of a double.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes to a sibling temporary file, then renames over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    require(static_cast<bool>(out), "write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { line(header); }

  CsvWriter& row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CsvWriter: wrong number of cells");
    line(cells);
    return *this;
  }

  const std::string& str() const { return text_; }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

/// Columns: base,level,index,weight.
inline std::string measure_to_csv(const DiscreteMeasure& mu) {
  CsvWriter w({"base", "level", "index", "weight"});
  const auto b = std::to_string(mu.base()), l = std::to_string(mu.level());
  for (const auto& [idx, m] : mu.entries()) w.row({b, l, std::to_string(idx), fmt(m)});
  return w.str();
}

inline DiscreteMeasure measure_from_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  require(rows.size() >= 2, "measure csv: no rows");
  require(rows[0] == std::vector<std::string>{"base", "level", "index", "weight"}, "measure csv: bad header");
  int base = 0, level = 0;
  std::vector<DiscreteMeasure::Entry> entries;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    require(rows[i].size() == 4, "measure csv: row " + std::to_string(i) + " has wrong arity");
    try {
      const int b = std::stoi(rows[i][0]), l = std::stoi(rows[i][1]);
      if (i == 1) {
        base = b;
        level = l;
      }
      require(b == base && l == level, "measure csv: mixed lattices");
      entries.emplace_back(std::stoll(rows[i][2]), std::stod(rows[i][3]));
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const rejected_input*>(&e)) throw;
      throw rejected_input("measure csv: unparsable number in row " + std::to_string(i));
    }
  }
  // Files written by measure_to_csv read back bit for bit; anything else is normalised.
  double total = 0.0;
  bool sorted = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    total += entries[i].second;
    sorted = sorted && entries[i].second > 0.0 && (i == 0 || entries[i].first > entries[i - 1].first);
  }
  if (sorted && std::abs(total - 1.0) <= 1e-9) return DiscreteMeasure::from_normalised(base, level, std::move(entries));
  return DiscreteMeasure::from_weights(base, level, std::move(entries));
}

/// Columns: x,y.
inline std::string orbit_to_csv(std::span<const OrbitPoint> pts) {
  std::string out = "x,y\n";
  for (const auto& z : pts) out += fmt(z.x) + "," + fmt(z.y) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// JSON

/// [[k, a_k, b_k], ...] for the nonzero terms.
inline json phi_to_json(const PeriodicFn& f) {
  json arr = json::array();
  for (const auto& t : f.terms()) arr.push_back({t.k, t.cos_coef, t.sin_coef});
  return arr;
}

inline PeriodicFn phi_from_json(const json& j) {
  require(j.is_array(), "phi: expected a list of [k, a, b] triples");
  std::vector<FourierTerm> terms;
  for (const auto& t : j) {
    require(t.is_array() && t.size() == 3 && t[0].is_number_integer() && t[1].is_number() && t[2].is_number(),
            "phi: each term must be [k, a, b] with integer k");
    terms.push_back({t[0].get<int>(), t[1].get<double>(), t[2].get<double>()});
  }
  return PeriodicFn::from_terms(terms);
}

inline json certificate_to_json(const TransversalityCertificate& c) {
  return {{"t", c.t},
          {"delta1", c.delta1},
          {"h", c.h.str()},
          {"h_prime", c.h_prime.str()},
          {"a", c.a.str()},
          {"x0", c.x0},
          {"grid_size", c.grid_size},
          {"grid_min_h", c.grid_min_h},
          {"grid_min_h_prime", c.grid_min_h_prime},
          {"grid_min_diff", c.grid_min_diff},
          {"modulus", c.modulus},
          {"extension_bound", c.extension_bound}};
}

inline TransversalityCertificate certificate_from_json(const json& j, int b) {
  try {
    TransversalityCertificate c;
    c.t = j.at("t").get<int>();
    c.delta1 = j.at("delta1").get<double>();
    c.h = Word::parse(j.at("h").get<std::string>(), b);
    c.h_prime = Word::parse(j.at("h_prime").get<std::string>(), b);
    c.a = Word::parse(j.at("a").get<std::string>(), b);
    c.x0 = j.at("x0").get<double>();
    c.grid_size = j.at("grid_size").get<int>();
    c.grid_min_h = j.at("grid_min_h").get<double>();
    c.grid_min_h_prime = j.at("grid_min_h_prime").get<double>();
    c.grid_min_diff = j.at("grid_min_diff").get<double>();
    c.modulus = j.at("modulus").get<double>();
    c.extension_bound = j.at("extension_bound").get<double>();
    return c;
  } catch (const json::exception& e) {
    throw rejected_input(std::string("certificate: ") + e.what());
  }
}

inline json box_count_to_json(const BoxCountResult& r) {
  return {{"levels", r.levels}, {"counts", r.counts}, {"slope", r.slope}, {"intercept", r.intercept},
          {"residuals", r.residuals}};
}

}  // namespace solenoid
