#include "ngmm/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ngmm/errors.hpp"

namespace ngmm {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw NumericalError("format_double: to_chars failed");
  return std::string(buf, ptr);
}

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || t.empty())
    throw ValidationError("could not parse number '" + t + "' in " + what);
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(line, ',')) row.push_back(parse_double(f, path));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("empty matrix file: " + path);
  Eigen::MatrixXd mat(rows.size(), rows.front().size());
  for (int i = 0; i < mat.rows(); ++i)
    for (int j = 0; j < mat.cols(); ++j) mat(i, j) = rows[i][j];
  return mat;
}

void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& mat) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  for (int i = 0; i < mat.rows(); ++i) {
    for (int j = 0; j < mat.cols(); ++j) {
      if (j) out << ',';
      out << format_double(mat(i, j));
    }
    out << '\n';
  }
}

void write_csv_table(const std::string& path,
                     const std::vector<std::string>& header,
                     const Eigen::MatrixXd& rows) {
  if (header.size() != static_cast<size_t>(rows.cols()) && rows.rows() > 0)
    throw ValidationError("header width does not match row width");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  for (size_t j = 0; j < header.size(); ++j) {
    if (j) out << ',';
    out << header[j];
  }
  out << '\n';
  for (int i = 0; i < rows.rows(); ++i) {
    for (int j = 0; j < rows.cols(); ++j) {
      if (j) out << ',';
      out << format_double(rows(i, j));
    }
    out << '\n';
  }
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_csv_table(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty table: " + path);
  std::vector<std::string> header;
  for (auto& f : split(line, ',')) header.push_back(trim(f));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const auto& f : split(line, ',')) row.push_back(parse_double(f, path));
    if (row.size() != header.size())
      throw ValidationError("row width does not match header in " + path);
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd mat(rows.size(), header.size());
  for (int i = 0; i < mat.rows(); ++i)
    for (int j = 0; j < mat.cols(); ++j) mat(i, j) = rows[i][j];
  return {header, mat};
}

Config Config::parse_string(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ValidationError("config line " + std::to_string(lineno) +
                            ": empty key");
    cfg.values[key] = value;
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values) out += k + " = " + v + "\n";
  return out;
}

bool Config::has(const std::string& key) const { return values.count(key) > 0; }

std::string Config::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end())
    throw ValidationError("missing config key: " + key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  return parse_double(get_string(key), "config key " + key);
}

long Config::get_long(const std::string& key) const {
  double v = get_double(key);
  long l = static_cast<long>(v);
  if (static_cast<double>(l) != v)
    throw ValidationError("config key " + key + " must be an integer");
  return l;
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& f : split(get_string(key), ','))
    out.push_back(parse_double(f, "config key " + key));
  return out;
}

std::string Config::get_string_or(const std::string& key,
                                  const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}

double Config::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long Config::get_long_or(const std::string& key, long fallback) const {
  return has(key) ? get_long(key) : fallback;
}

std::uint64_t file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ngmm
