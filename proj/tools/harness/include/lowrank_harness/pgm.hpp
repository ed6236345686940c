#pragma once

#include <string>

#include "lowrank/numkit.hpp"
#include "lowrank_harness/config.hpp"

namespace lowrank::harness {

/// Malformed PGM input; the message names the byte offset of the defect.
struct PgmError : UsageError {
  using UsageError::UsageError;
};

struct PgmImage {
  Matrix pixels;     // values in [0, maxval]
  int maxval = 255;
};

/// Reads plain (P2) or binary (P5) PGM, maxval up to 65535. 16-bit binary
/// samples are big-endian per the format definition. Comments (# to end of
/// line) are allowed in the header.
PgmImage load_pgm(const std::string& path);

/// Canonical binary writer: "P5\n<w> <h>\n<maxval>\n" + raster, samples
/// rounded to nearest integer and clamped to [0, maxval]. Integer-valued
/// matrices round-trip byte-identically through load_pgm + save_pgm.
void save_pgm(const std::string& path, const Matrix& pixels, int maxval);

/// Deterministic integer-valued test image in [0, 255]: smooth ramps plus
/// oscillatory texture, full-rank by construction so low-rank truncation is a
/// genuine approximation.
Matrix synthetic_image(int n);

}  // namespace lowrank::harness
