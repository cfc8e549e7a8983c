#pragma once

// Gramian Angular Field encoding of unit-interval series into symmetric
// image matrices, with piecewise aggregate downsampling and per-channel
// stacking for multivariate windows.
//
// With phi_i = arccos(x_i):
//   summation  (GASF)  G_ij = cos(phi_i + phi_j) = x_i x_j - s_i s_j
//   difference (GADF)  D_ij = sin(phi_i - phi_j) = s_i x_j - x_i s_j
// where s_i = sqrt(1 - x_i^2). The closed forms are used directly so GASF is
// exactly symmetric and GADF exactly antisymmetric in floating point.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/tensor.hpp"

namespace tadkit {

enum class GafVariant { summation, difference };

inline std::string to_string(GafVariant v) {
  return v == GafVariant::summation ? "summation" : "difference";
}
inline GafVariant gaf_variant_from_string(const std::string& s) {
  if (s == "summation") return GafVariant::summation;
  if (s == "difference") return GafVariant::difference;
  throw ConfigError("gaf.variant: unknown variant '" + s + "'");
}

struct GafConfig {
  std::size_t resolution = 224;
  GafVariant variant = GafVariant::summation;

  void validate() const {
    if (resolution < 2) throw ConfigError("gaf.resolution: must be >= 2");
  }
};

inline void to_json(json& j, const GafConfig& c) {
  j = json{{"resolution", c.resolution}, {"variant", to_string(c.variant)}};
}
inline void from_json(const json& j, GafConfig& c) {
  check_keys(j, "gaf", {}, {"resolution", "variant"});
  c.resolution = get_or<std::size_t>(j, "resolution", 224);
  c.variant = gaf_variant_from_string(get_or<std::string>(j, "variant", "summation"));
  c.validate();
}

// Piecewise aggregate approximation: segment j of the output is the mean of
// input indices [floor(j*L/S), floor((j+1)*L/S)). When S > L an empty segment
// takes the single value at its left boundary (nearest-neighbour upsampling).
inline std::vector<double> paa(const std::vector<double>& x, std::size_t s) {
  const std::size_t l = x.size();
  if (l == 0 || s == 0) throw Error("paa: lengths must be >= 1");
  if (l == s) return x;
  std::vector<double> out(s);
  for (std::size_t j = 0; j < s; ++j) {
    const std::size_t begin = j * l / s;
    const std::size_t end = (j + 1) * l / s;
    if (end <= begin) {
      out[j] = x[std::min(begin, l - 1)];
      continue;
    }
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += x[i];
    out[j] = acc / static_cast<double>(end - begin);
  }
  return out;
}

namespace gaf_detail {

inline double clip_unit(double v, std::size_t index) {
  if (v < -1.0 - 1e-9 || v > 1.0 + 1e-9)
    throw Error("gaf_encode: input " + std::to_string(v) + " at index " + std::to_string(index) +
                " outside [-1, 1]");
  if (v < -1.0) return -1.0;
  if (v > 1.0) return 1.0;
  return v;
}

}  // namespace gaf_detail

// Encodes a unit-interval series of length S into an SxS matrix (row-major).
inline Tensor gaf_encode(const std::vector<double>& x, const GafConfig& config) {
  config.validate();
  const std::size_t s = x.size();
  std::vector<double> u(s), comp(s);
  for (std::size_t i = 0; i < s; ++i) {
    u[i] = gaf_detail::clip_unit(x[i], i);
    comp[i] = std::sqrt(1.0 - u[i] * u[i]);
  }
  Tensor g({s, s});
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      double v;
      if (config.variant == GafVariant::summation) {
        // Double-angle form on the diagonal keeps G_ii = 2x^2 - 1 exact.
        v = i == j ? 2.0 * u[i] * u[i] - 1.0 : u[i] * u[j] - comp[i] * comp[j];
      } else {
        v = comp[i] * u[j] - u[i] * comp[j];
      }
      g.data[i * s + j] = std::clamp(v, -1.0, 1.0);
    }
  }
  return g;
}

// One GAF image per channel, stacked in channel order: [n_channels, S, S].
struct GafStack {
  Tensor images;
  std::size_t window_id = 0;
  std::vector<std::string> channel_names;
};

// `window` is row-major [length x n_channels], already scaled to [-1, 1]
// per channel.
inline GafStack gaf_stack(const std::vector<double>& window, std::size_t length,
                          std::size_t n_channels, const GafConfig& config,
                          std::size_t window_id = 0) {
  config.validate();
  if (window.size() != length * n_channels) throw Error("gaf_stack: window size mismatch");
  const std::size_t s = config.resolution;
  GafStack stack;
  stack.window_id = window_id;
  stack.images = Tensor({n_channels, s, s});
  std::vector<double> channel(length);
  for (std::size_t c = 0; c < n_channels; ++c) {
    for (std::size_t t = 0; t < length; ++t) channel[t] = window[t * n_channels + c];
    const Tensor img = gaf_encode(paa(channel, s), config);
    std::copy(img.data.begin(), img.data.end(), stack.images.data.begin() + c * s * s);
  }
  return stack;
}

// Binary PGM (P5), 8-bit: pixel = round-half-up of (g + 1)/2 * 255.
inline void export_pgm(const Tensor& image, const std::string& path) {
  if (image.shape.size() != 2) throw Error("export_pgm: expected a rank-2 image");
  const std::size_t h = image.shape[0], w = image.shape[1];
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("export_pgm: cannot write '" + path + "'");
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const double g = image.data[i * w + j];
      if (g < -1.0 || g > 1.0) throw Error("export_pgm: pixel value outside [-1, 1]");
      row[j] = static_cast<unsigned char>(std::floor((g + 1.0) / 2.0 * 255.0 + 0.5));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(w));
  }
  if (!out) throw Error("export_pgm: write failed for '" + path + "'");
}

// Raw little-endian float32 dump with a JSON sidecar at <path>.json holding
// shape, channel names and source window id.
inline void save_stack(const GafStack& stack, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_stack: cannot write '" + path + "'");
  for (double v : stack.images.data) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    const unsigned char le[4] = {
        static_cast<unsigned char>(bits & 0xFF), static_cast<unsigned char>((bits >> 8) & 0xFF),
        static_cast<unsigned char>((bits >> 16) & 0xFF),
        static_cast<unsigned char>((bits >> 24) & 0xFF)};
    out.write(reinterpret_cast<const char*>(le), 4);
  }
  if (!out) throw Error("save_stack: write failed for '" + path + "'");
  const json sidecar = {{"shape", stack.images.shape},
                        {"channels", stack.channel_names},
                        {"window_id", stack.window_id}};
  std::ofstream side(path + ".json", std::ios::binary);
  if (!side) throw Error("save_stack: cannot write sidecar for '" + path + "'");
  side << sidecar.dump(2) << "\n";
}

}  // namespace tadkit
