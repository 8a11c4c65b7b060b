#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace rhcli {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string fmt(std::optional<double> v) { return v ? fmt(*v) : std::string(); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  auto res = std::to_chars(buf, buf + sizeof buf, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

struct Meta {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
};

/// CSV with a '#' metadata block. Rows are buffered and written in one go
/// so an aborted run never leaves a half-written file behind.
class Csv {
 public:
  Csv(std::string name, int schema_version, std::vector<std::string> columns)
      : name_(std::move(name)), version_(schema_version), columns_(std::move(columns)) {}

  class Row {
   public:
    explicit Row(Csv& csv) : csv_(csv) {}
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double v) { return *this << fmt(v); }
    Row& operator<<(std::optional<double> v) { return *this << fmt(v); }
    Row& operator<<(int v) { return *this << std::to_string(v); }
    Row& operator<<(std::size_t v) { return *this << std::to_string(v); }
    Row& operator<<(bool v) { return *this << std::string(v ? "1" : "0"); }
    ~Row() { csv_.commit(std::move(cells_)); }

   private:
    Csv& csv_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  void note(const std::string& key, const std::string& value) { notes_.emplace_back(key, value); }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::string& name() const { return name_; }

  void write(const std::filesystem::path& dir, const Meta& meta) const {
    std::ofstream out(dir / (name_ + ".csv"), std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / (name_ + ".csv")).string());
    out << "# schema: rh." << name_ << "/" << version_ << "\n";
    out << "# command: " << meta.command << "\n";
    out << "# seed: " << meta.seed << "\n";
    out << "# config_hash: " << meta.config_hash << "\n";
    for (const auto& [k, v] : notes_) out << "# " << k << ": " << v << "\n";
    write_line(out, columns_);
    for (const auto& r : rows_) write_line(out, r);
  }

 private:
  void commit(std::vector<std::string> cells) {
    if (cells.size() != columns_.size()) {
      throw std::logic_error(name_ + ": row width does not match the header");
    }
    rows_.push_back(std::move(cells));
  }
  static void write_line(std::ofstream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  }

  std::string name_;
  int version_;
  std::vector<std::string> columns_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::vector<std::vector<std::string>> rows_;
};

/// Line chart of y against x, one polyline per group key.
void write_svg(const std::filesystem::path& file, const std::string& title, const Csv& csv,
               const std::string& x_col, const std::string& y_col,
               const std::vector<std::string>& group_cols);

}  // namespace rhcli
