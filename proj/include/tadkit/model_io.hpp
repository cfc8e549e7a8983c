#pragma once

// Weight file format:
//   bytes 0..7   magic "TADWGT01"
//   bytes 8..11  header length N, little-endian uint32
//   N bytes      JSON header {"model": <ModelSpec>, "tensors": [{name, offset,
//                count}...]} with offsets in float units into the payload
//   rest         payload, little-endian IEEE-754 32-bit floats
//
// Weights are computed in 64-bit and stored as 32-bit, so a round trip
// quantizes; on unit-scale weights the relative error is below 1e-6.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "tadkit/error.hpp"
#include "tadkit/json_util.hpp"
#include "tadkit/nn.hpp"

namespace tadkit {

namespace model_io_detail {

constexpr char kMagic[8] = {'T', 'A', 'D', 'W', 'G', 'T', '0', '1'};

inline void put_f32_le(std::vector<unsigned char>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  out.push_back(static_cast<unsigned char>(bits & 0xFF));
  out.push_back(static_cast<unsigned char>((bits >> 8) & 0xFF));
  out.push_back(static_cast<unsigned char>((bits >> 16) & 0xFF));
  out.push_back(static_cast<unsigned char>((bits >> 24) & 0xFF));
}

inline float get_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace model_io_detail

inline void save_weights(Model& model, const std::string& path) {
  auto params = model.parameters();
  auto names = model.parameter_names();

  json tensors = json::array();
  std::size_t offset = 0;
  std::vector<unsigned char> payload;
  for (std::size_t i = 0; i < params.size(); ++i) {
    tensors.push_back(
        {{"name", names[i]}, {"offset", offset}, {"count", params[i]->numel()}});
    for (double v : params[i]->data) model_io_detail::put_f32_le(payload, static_cast<float>(v));
    offset += params[i]->numel();
  }
  const json header = {{"model", model.spec()}, {"tensors", tensors}};
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_weights: cannot write '" + path + "'");
  out.write(model_io_detail::kMagic, 8);
  const auto hlen = static_cast<std::uint32_t>(header_str.size());
  const unsigned char len_le[4] = {
      static_cast<unsigned char>(hlen & 0xFF), static_cast<unsigned char>((hlen >> 8) & 0xFF),
      static_cast<unsigned char>((hlen >> 16) & 0xFF),
      static_cast<unsigned char>((hlen >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(len_le), 4);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error("save_weights: write failed for '" + path + "'");
}

inline Model load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_weights: cannot open '" + path + "'");
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, model_io_detail::kMagic, 8) != 0)
    throw Error("load_weights: bad magic in '" + path + "'");
  unsigned char len_le[4];
  if (!in.read(reinterpret_cast<char*>(len_le), 4))
    throw Error("load_weights: truncated header length");
  const std::uint32_t hlen = static_cast<std::uint32_t>(len_le[0]) |
                             (static_cast<std::uint32_t>(len_le[1]) << 8) |
                             (static_cast<std::uint32_t>(len_le[2]) << 16) |
                             (static_cast<std::uint32_t>(len_le[3]) << 24);
  std::string header_str(hlen, '\0');
  if (!in.read(header_str.data(), hlen)) throw Error("load_weights: truncated header");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw Error(std::string("load_weights: corrupt header: ") + e.what());
  }
  const ModelSpec spec = header.at("model").get<ModelSpec>();
  Model model = Model::build(spec, /*seed=*/0);

  auto params = model.parameters();
  auto names = model.parameter_names();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size())
    throw Error("load_weights: header lists " + std::to_string(tensors.size()) +
                " tensors, model has " + std::to_string(params.size()));

  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors.at(i);
    if (t.at("name").get<std::string>() != names[i] ||
        t.at("count").get<std::size_t>() != params[i]->numel())
      throw Error("load_weights: tensor " + std::to_string(i) + " does not match model spec");
    const std::size_t offset = t.at("offset").get<std::size_t>();
    if ((offset + params[i]->numel()) * 4 > payload.size())
      throw Error("load_weights: truncated payload in '" + path + "'");
    for (std::size_t k = 0; k < params[i]->numel(); ++k) {
      params[i]->data[k] =
          static_cast<double>(model_io_detail::get_f32_le(payload.data() + (offset + k) * 4));
    }
  }
  return model;
}

}  // namespace tadkit
