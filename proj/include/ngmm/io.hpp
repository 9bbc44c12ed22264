#ifndef NGMM_IO_HPP
#define NGMM_IO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ngmm {

// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

// Headerless comma-separated numeric matrix.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
void write_csv_matrix(const std::string& path, const Eigen::MatrixXd& mat);

// Chain output: header row with the coordinate names, one row per state.
void write_csv_table(const std::string& path,
                     const std::vector<std::string>& header,
                     const Eigen::MatrixXd& rows);
std::pair<std::vector<std::string>, Eigen::MatrixXd> read_csv_table(
    const std::string& path);

// Flat key-value config file: one `section.key = value` per line, `#`
// comments, comma-separated lists for vector values.
struct Config {
  std::map<std::string, std::string> values;

  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);
  std::string serialize() const;

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  long get_long(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  std::string get_string_or(const std::string& key,
                            const std::string& fallback) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_long_or(const std::string& key, long fallback) const;
};

// FNV-1a digest of a file's bytes, for run manifests.
std::uint64_t file_digest(const std::string& path);

}  // namespace ngmm

#endif
