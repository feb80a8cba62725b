#include "telspin/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace telspin {
namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bad_table(const std::string& what) {
  throw std::runtime_error("table text: " + what);
}

double parse_cell(const std::string& cell) {
  if (cell.empty()) bad_table("empty numeric cell");
  const char* s = cell.c_str();
  char* end = nullptr;
  const double x = std::strtod(s, &end);
  if (end != s + cell.size()) bad_table("malformed number '" + cell + "'");
  return x;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t at = line.find(sep, begin);
    if (at == std::string::npos) {
      out.push_back(line.substr(begin));
      return out;
    }
    out.push_back(line.substr(begin, at - begin));
    begin = at + 1;
  }
}

void check_shape(const Table& t) {
  if (t.columns.empty()) bad_table("a table needs at least one column");
  for (const auto& row : t.rows)
    if (row.size() != t.columns.size())
      bad_table("row width does not match the column count");
}

}  // namespace

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view text) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string table_csv(const Table& t) {
  check_shape(t);
  std::string out = "# ";
  out += t.version.empty() ? kToolVersion : t.version.c_str();
  out += '\n';
  for (const auto& [key, value] : t.config) {
    out += "# ";
    out += key;
    if (!value.empty()) {
      out += ' ';
      out += value;
    }
    out += '\n';
  }
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    if (c > 0) out += ',';
    out += t.columns[c];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += ',';
      out += g17(row[c]);
    }
    out += '\n';
  }
  for (const auto& note : t.notes) {
    out += "# ";
    out += note;
    out += '\n';
  }
  return out;
}

Table table_from_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  bool version_seen = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      if (!body.empty() && body[0] == ' ') body.erase(0, 1);
      if (header_seen) {
        t.notes.push_back(body);
      } else if (!version_seen) {
        t.version = body;
        version_seen = true;
      } else {
        const std::size_t sp = body.find(' ');
        if (sp == std::string::npos)
          t.config.emplace_back(body, "");
        else
          t.config.emplace_back(body.substr(0, sp), body.substr(sp + 1));
      }
      continue;
    }
    const std::vector<std::string> cells = split(line, ',');
    if (!header_seen) {
      t.columns = cells;
      header_seen = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& cell : cells) row.push_back(parse_cell(cell));
    if (row.size() != t.columns.size())
      bad_table("row width does not match the column count");
    t.rows.push_back(std::move(row));
  }
  if (!header_seen) bad_table("missing column header");
  return t;
}

std::string table_json(const Table& t) {
  check_shape(t);
  ordered_json j;
  j["version"] = t.version.empty() ? kToolVersion : t.version.c_str();
  ordered_json config = ordered_json::object();
  for (const auto& [key, value] : t.config) config[key] = value;
  j["config"] = std::move(config);
  j["columns"] = t.columns;
  ordered_json rows = ordered_json::array();
  for (const auto& row : t.rows) {
    ordered_json r = ordered_json::array();
    for (double x : row) {
      if (std::isnan(x))
        r.push_back(nullptr);
      else
        r.push_back(x);
    }
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["notes"] = t.notes;
  return j.dump(2) + "\n";
}

Table table_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    bad_table(std::string("invalid json: ") + e.what());
  }
  Table t;
  try {
    t.version = j.at("version").get<std::string>();
    for (const auto& [key, value] : j.at("config").items())
      t.config.emplace_back(key, value.get<std::string>());
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& row : j.at("rows")) {
      std::vector<double> r;
      r.reserve(row.size());
      for (const auto& cell : row)
        r.push_back(cell.is_null() ? std::nan("") : cell.get<double>());
      t.rows.push_back(std::move(r));
    }
    if (j.contains("notes"))
      t.notes = j.at("notes").get<std::vector<std::string>>();
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception& e) {
    bad_table(std::string("unexpected json shape: ") + e.what());
  }
  check_shape(t);
  return t;
}

Table curve_table(const DecayCurve& c, const ConfigMap& config) {
  Table t;
  t.version = kToolVersion;
  t.config = config;
  t.columns = {"t_us", "re", "im", "abs"};
  const bool with_se = !c.std_error.empty();
  if (with_se) t.columns.push_back("se");
  for (std::size_t k = 0; k < c.times_us.size(); ++k) {
    std::vector<double> row{c.times_us[k], c.values[k].real(),
                            c.values[k].imag(), std::abs(c.values[k])};
    if (with_se) row.push_back(c.std_error[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> parse_grid(const std::string& spec) {
  if (spec.empty()) throw std::invalid_argument("time grid: empty spec");
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    const std::vector<std::string> parts = split(spec, ':');
    if (parts.size() != 3)
      throw std::invalid_argument("time grid: expected start:step:stop");
    double start = 0.0, step = 0.0, stop = 0.0;
    try {
      start = parse_cell(parts[0]);
      step = parse_cell(parts[1]);
      stop = parse_cell(parts[2]);
    } catch (const std::runtime_error& e) {
      throw std::invalid_argument(std::string("time grid: ") + e.what());
    }
    if (!(step > 0.0) || !(stop >= start))
      throw std::invalid_argument(
          "time grid: step must be positive and stop >= start");
    const long n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long k = 0; k <= n; ++k)
      out.push_back(start + step * static_cast<double>(k));
  } else {
    for (const std::string& cell : split(spec, ',')) {
      try {
        out.push_back(parse_cell(cell));
      } catch (const std::runtime_error& e) {
        throw std::invalid_argument(std::string("time grid: ") + e.what());
      }
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!std::isfinite(out[k]))
      throw std::invalid_argument("time grid: points must be finite");
    if (k > 0 && !(out[k] > out[k - 1]))
      throw std::invalid_argument("time grid: points must strictly increase");
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("failed while reading '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed while writing '" + path + "'");
}

}  // namespace telspin
