#include "lowrank_harness/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace lowrank::harness {
namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what, std::size_t offset) {
  throw PgmError("pgm " + path + ": " + what + " at byte offset " + std::to_string(offset));
}

struct Cursor {
  const std::string& data;
  const std::string& path;
  std::size_t pos = 0;

  bool done() const { return pos >= data.size(); }

  void skip_space_and_comments() {
    while (!done()) {
      const unsigned char c = data[pos];
      if (std::isspace(c)) {
        ++pos;
      } else if (c == '#') {
        while (!done() && data[pos] != '\n') {
          ++pos;
        }
      } else {
        break;
      }
    }
  }

  std::string token(const char* what) {
    skip_space_and_comments();
    if (done()) {
      fail(path, std::string("missing ") + what, pos);
    }
    const std::size_t start = pos;
    while (!done() && !std::isspace(static_cast<unsigned char>(data[pos])) &&
           data[pos] != '#') {
      ++pos;
    }
    return data.substr(start, pos - start);
  }

  long integer(const char* what, long min_value, long max_value) {
    skip_space_and_comments();
    const std::size_t at = pos;
    const std::string t = token(what);
    long value = 0;
    bool any = false;
    for (char c : t) {
      if (c < '0' || c > '9') {
        fail(path, std::string("bad ") + what + " \"" + t + "\"", at);
      }
      value = value * 10 + (c - '0');
      any = true;
      if (value > max_value) {
        fail(path, std::string(what) + " out of range", at);
      }
    }
    if (!any || value < min_value) {
      fail(path, std::string("bad ") + what + " \"" + t + "\"", at);
    }
    return value;
  }
};

}  // namespace

PgmImage load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PgmError("pgm " + path + ": cannot open");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string data = buffer.str();
  Cursor cur{data, path};

  const std::string magic = cur.token("magic number");
  if (magic != "P2" && magic != "P5") {
    fail(path, "unsupported magic \"" + magic + "\" (expected P2 or P5)", 0);
  }
  const long width = cur.integer("width", 1, 1 << 20);
  const long height = cur.integer("height", 1, 1 << 20);
  const long maxval = cur.integer("maxval", 1, 65535);

  PgmImage image;
  image.maxval = static_cast<int>(maxval);
  image.pixels = Matrix(height, width);

  if (magic == "P2") {
    for (long i = 0; i < height; ++i) {
      for (long j = 0; j < width; ++j) {
        const std::size_t at = cur.pos;
        const long v = cur.integer("sample", 0, 65535);
        if (v > maxval) {
          fail(path, "sample exceeds maxval", at);
        }
        image.pixels(i, j) = static_cast<double>(v);
      }
    }
    return image;
  }

  // P5: exactly one whitespace byte separates the maxval from the raster.
  if (cur.done() || !std::isspace(static_cast<unsigned char>(data[cur.pos]))) {
    fail(path, "missing raster separator", cur.pos);
  }
  ++cur.pos;
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t need =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * bytes_per_sample;
  if (data.size() - cur.pos < need) {
    fail(path, "short raster payload (" + std::to_string(data.size() - cur.pos) + " of " +
                   std::to_string(need) + " bytes)",
         data.size());
  }
  const unsigned char* raster = reinterpret_cast<const unsigned char*>(data.data()) + cur.pos;
  std::size_t sample_offset = cur.pos;
  for (long i = 0; i < height; ++i) {
    for (long j = 0; j < width; ++j) {
      long v;
      if (bytes_per_sample == 2) {  // big-endian per the format definition
        v = (static_cast<long>(raster[0]) << 8) | raster[1];
      } else {
        v = raster[0];
      }
      if (v > maxval) {
        fail(path, "sample exceeds maxval", sample_offset);
      }
      raster += bytes_per_sample;
      sample_offset += bytes_per_sample;
      image.pixels(i, j) = static_cast<double>(v);
    }
  }
  return image;
}

void save_pgm(const std::string& path, const Matrix& pixels, int maxval) {
  if (maxval < 1 || maxval > 65535) {
    throw PgmError("pgm " + path + ": maxval must lie in [1, 65535]");
  }
  if (pixels.rows() < 1 || pixels.cols() < 1) {
    throw PgmError("pgm " + path + ": empty image");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw PgmError("pgm " + path + ": cannot write");
  }
  out << "P5\n" << pixels.cols() << ' ' << pixels.rows() << '\n' << maxval << '\n';
  const bool wide = maxval > 255;
  std::string raster;
  raster.reserve(static_cast<std::size_t>(pixels.size()) * (wide ? 2 : 1));
  for (Eigen::Index i = 0; i < pixels.rows(); ++i) {
    for (Eigen::Index j = 0; j < pixels.cols(); ++j) {
      long v = std::lround(pixels(i, j));
      v = std::clamp(v, 0L, static_cast<long>(maxval));
      if (wide) {
        raster.push_back(static_cast<char>((v >> 8) & 0xff));
      }
      raster.push_back(static_cast<char>(v & 0xff));
    }
  }
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  if (!out) {
    throw PgmError("pgm " + path + ": write failed");
  }
}

Matrix synthetic_image(int n) {
  if (n < 2) {
    throw std::invalid_argument("synthetic_image: n must be at least 2");
  }
  constexpr double tau = 6.283185307179586;
  Matrix img(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = static_cast<double>(i) / (n - 1);
      const double y = static_cast<double>(j) / (n - 1);
      // Ramp + separable waves + a product-frequency term and an integer
      // lattice pattern; the last two keep the spectrum genuinely full.
      double v = 90.0 + 70.0 * x + 45.0 * std::sin(3.0 * tau * x) * std::cos(2.0 * tau * y) +
                 28.0 * std::sin(5.0 * tau * x * y) +
                 10.0 * (((i * 31 + j * 17) % 23) / 22.0);
      img(i, j) = std::clamp(std::round(v), 0.0, 255.0);
    }
  }
  return img;
}

}  // namespace lowrank::harness
