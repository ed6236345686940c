#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace lowrank::harness {

/// One CSV line of a solver trace. NaN serializes as an empty field (absent
/// diagnostic); all doubles round-trip exactly through 17 significant digits.
struct TraceRow {
  std::string preset;  // panel tag, e.g. "fig1/k100"
  std::string solver;
  std::uint64_t seed = 0;
  int iter = 0;
  double loss = std::numeric_limits<double>::quiet_NaN();
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  double fc = std::numeric_limits<double>::quiet_NaN();
  double grad_dual_l = std::numeric_limits<double>::quiet_NaN();
  double grad_dual_r = std::numeric_limits<double>::quiet_NaN();
  double cos_r = std::numeric_limits<double>::quiet_NaN();
  double cos_l = std::numeric_limits<double>::quiet_NaN();
  std::int64_t wall_nanos = 0;
  bool diverged = false;
};

inline constexpr const char* kTraceHeader =
    "preset,solver,seed,iter,loss,rel_error,fc,grad_dual_l,grad_dual_r,cos_r,cos_l,"
    "wall_nanos,diverged";

/// Shortest 17-significant-digit form; NaN becomes the empty string.
std::string format_double(double value);

/// Inverse of format_double: empty string parses to NaN.
double parse_double_field(const std::string& field);

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::string& path);

/// Step-size sweep summary: final relative error after a fixed iteration
/// budget, one row per (step size, solver).
struct SweepRow {
  std::string preset;
  std::string solver;
  double eta = 0.0;
  double rel_error = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

inline constexpr const char* kSweepHeader = "preset,solver,eta,rel_error,diverged";

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

/// Image-recovery summary: one row per reconstruction.
struct PsnrRow {
  std::string preset;
  std::string solver;
  std::uint64_t seed = 0;
  double psnr_db = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr const char* kPsnrHeader = "preset,solver,seed,psnr_db";

void write_psnr_csv(const std::string& path, const std::vector<PsnrRow>& rows);
std::vector<PsnrRow> read_psnr_csv(const std::string& path);

}  // namespace lowrank::harness
