// SPDX-License-Identifier: Apache-2.0
#include "ordspec/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>

#include "ordspec/errors.hpp"

namespace ordspec::diff {

namespace {

constexpr std::array<char, 4> kMagic = {'O', 'S', 'P', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) throw UserError("checkpoint truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string get_bytes(std::istream& in, std::uint32_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw UserError("checkpoint truncated");
  return s;
}

}  // namespace

void write_checkpoint(std::ostream& out, const std::string& header, const ParameterStore& params) {
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id{p};
    const std::string& name = params.name(id);
    const Matrix& m = params.value(id);
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(m(r, c))));
  }
}

void write_checkpoint(const std::filesystem::path& path, const std::string& header,
                      const ParameterStore& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write checkpoint " + path.string());
  write_checkpoint(out, header, params);
}

NamedTensors read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kMagic) throw UserError("not a checkpoint file");
  if (get_u32(in) != kVersion) throw UserError("unsupported checkpoint version");
  NamedTensors out;
  out.header = get_bytes(in, get_u32(in));
  const std::uint32_t count = get_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = get_bytes(in, get_u32(in));
    const std::uint32_t rows = get_u32(in), cols = get_u32(in);
    Matrix m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = std::bit_cast<float>(get_u32(in));
    out.tensors.emplace_back(std::move(name), std::move(m));
  }
  return out;
}

NamedTensors read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UserError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

void restore_parameters(const NamedTensors& tensors, ParameterStore& params) {
  std::map<std::string, const Matrix*> by_name;
  for (const auto& [name, m] : tensors.tensors) by_name[name] = &m;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const ParamId id{p};
    auto it = by_name.find(params.name(id));
    if (it == by_name.end()) throw UserError("checkpoint lacks parameter " + params.name(id));
    Matrix& dst = params.value(id);
    if (dst.rows() != it->second->rows() || dst.cols() != it->second->cols())
      throw UserError("checkpoint shape mismatch for " + params.name(id));
    dst = *it->second;
  }
}

}  // namespace ordspec::diff
