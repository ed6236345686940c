#include "lowrank_harness/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lowrank_harness/config.hpp"

namespace lowrank::harness {
namespace {

[[noreturn]] void bad_file(const std::string& path, const std::string& what) {
  throw UsageError("csv " + path + ": " + what);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 const char* expected_header,
                                                 std::size_t columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    bad_file(path, "cannot open");
  }
  std::string line;
  if (!std::getline(in, line) || line != expected_header) {
    bad_file(path, "unexpected header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::vector<std::string> fields = split_line(line);
    if (fields.size() != columns) {
      bad_file(path, "row " + std::to_string(rows.size() + 2) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(columns));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::uint64_t parse_u64(const std::string& path, const std::string& field) {
  errno = 0;
  char* end = nullptr;
  const std::uint64_t value = std::strtoull(field.c_str(), &end, 10);
  if (errno != 0 || end != field.c_str() + field.size() || field.empty()) {
    bad_file(path, "bad integer field \"" + field + "\"");
  }
  return value;
}

std::int64_t parse_i64(const std::string& path, const std::string& field) {
  errno = 0;
  char* end = nullptr;
  const std::int64_t value = std::strtoll(field.c_str(), &end, 10);
  if (errno != 0 || end != field.c_str() + field.size() || field.empty()) {
    bad_file(path, "bad integer field \"" + field + "\"");
  }
  return value;
}

bool parse_flag(const std::string& path, const std::string& field) {
  if (field == "0") return false;
  if (field == "1") return true;
  bad_file(path, "bad flag field \"" + field + "\"");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    bad_file(path, "cannot write");
  }
  return out;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "";
  }
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

double parse_double_field(const std::string& field) {
  if (field.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  char* end = nullptr;
  const double value = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size()) {
    throw UsageError("bad numeric field \"" + field + "\"");
  }
  return value;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  std::ofstream out = open_out(path);
  out << kTraceHeader << '\n';
  for (const TraceRow& row : rows) {
    out << row.preset << ',' << row.solver << ',' << row.seed << ',' << row.iter << ','
        << format_double(row.loss) << ',' << format_double(row.rel_error) << ','
        << format_double(row.fc) << ',' << format_double(row.grad_dual_l) << ','
        << format_double(row.grad_dual_r) << ',' << format_double(row.cos_r) << ','
        << format_double(row.cos_l) << ',' << row.wall_nanos << ','
        << (row.diverged ? '1' : '0') << '\n';
  }
  if (!out) {
    bad_file(path, "write failed");
  }
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::vector<TraceRow> rows;
  for (const auto& f : read_table(path, kTraceHeader, 13)) {
    TraceRow row;
    row.preset = f[0];
    row.solver = f[1];
    row.seed = parse_u64(path, f[2]);
    row.iter = static_cast<int>(parse_i64(path, f[3]));
    row.loss = parse_double_field(f[4]);
    row.rel_error = parse_double_field(f[5]);
    row.fc = parse_double_field(f[6]);
    row.grad_dual_l = parse_double_field(f[7]);
    row.grad_dual_r = parse_double_field(f[8]);
    row.cos_r = parse_double_field(f[9]);
    row.cos_l = parse_double_field(f[10]);
    row.wall_nanos = parse_i64(path, f[11]);
    row.diverged = parse_flag(path, f[12]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out = open_out(path);
  out << kSweepHeader << '\n';
  for (const SweepRow& row : rows) {
    out << row.preset << ',' << row.solver << ',' << format_double(row.eta) << ','
        << format_double(row.rel_error) << ',' << (row.diverged ? '1' : '0') << '\n';
  }
  if (!out) {
    bad_file(path, "write failed");
  }
}

std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::vector<SweepRow> rows;
  for (const auto& f : read_table(path, kSweepHeader, 5)) {
    SweepRow row;
    row.preset = f[0];
    row.solver = f[1];
    row.eta = parse_double_field(f[2]);
    row.rel_error = parse_double_field(f[3]);
    row.diverged = parse_flag(path, f[4]);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_psnr_csv(const std::string& path, const std::vector<PsnrRow>& rows) {
  std::ofstream out = open_out(path);
  out << kPsnrHeader << '\n';
  for (const PsnrRow& row : rows) {
    out << row.preset << ',' << row.solver << ',' << row.seed << ','
        << format_double(row.psnr_db) << '\n';
  }
  if (!out) {
    bad_file(path, "write failed");
  }
}

std::vector<PsnrRow> read_psnr_csv(const std::string& path) {
  std::vector<PsnrRow> rows;
  for (const auto& f : read_table(path, kPsnrHeader, 4)) {
    PsnrRow row;
    row.preset = f[0];
    row.solver = f[1];
    row.seed = parse_u64(path, f[2]);
    row.psnr_db = parse_double_field(f[3]);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace lowrank::harness
