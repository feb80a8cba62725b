#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "telspin/curve.hpp"

// Table serialization for the command-line surface: CSV and JSON emission
// with the resolved run configuration embedded in every file, so any output
// can be re-run to byte-identical numeric columns.  Doubles print with 17
// significant digits throughout; a parse of an emitted file reproduces the
// exact doubles and a re-emission reproduces the exact bytes.

namespace telspin {

inline constexpr const char* kToolVersion = "telspin 0.1.0";

// %.17g, the shortest fixed policy that round-trips every finite double.
std::string g17(double x);

// FNV-1a 64-bit, the fingerprint used for ensemble and table identity.
std::uint64_t fnv1a64(std::string_view text);
std::string fnv1a64_hex(std::string_view text);

// Resolved configuration as ordered key/value pairs; values are stored as
// text so config round-trips never reformat numbers.
using ConfigMap = std::vector<std::pair<std::string, std::string>>;

// A numeric table with provenance: version line, resolved config, column
// names, rows, and free-form footer notes.  Missing values are NaN in
// memory, "nan" in CSV and null in JSON.
struct Table {
  std::string version;
  ConfigMap config;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> notes;
};

std::string table_csv(const Table& t);
std::string table_json(const Table& t);
Table table_from_csv(const std::string& text);
Table table_from_json(const std::string& text);

// Decay-curve table: columns t_us, re, im, abs, plus se when the curve
// carries per-point standard errors (sampled engines).
Table curve_table(const DecayCurve& c, const ConfigMap& config);

// Time-grid spec: "start:step:stop" (stop included when it lands on the
// grid) or an explicit comma list.  The result must be finite and strictly
// increasing.
std::vector<double> parse_grid(const std::string& spec);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace telspin
