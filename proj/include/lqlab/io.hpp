#ifndef LQLAB_IO_HPP
#define LQLAB_IO_HPP

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace lqlab {

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text);  // throws IoError

// Writes to a sibling temporary and renames it over `path`. Throws IoError.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);  // throws IoError

// Minimal CSV builder: optional leading '# ' comment lines, a header, rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void comment(std::string line) { comments_.push_back(std::move(line)); }
  void add_row(std::vector<std::string> cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> comments_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace lqlab

#endif  // LQLAB_IO_HPP
