// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ordspec/diffcore.hpp"

namespace ordspec::diff {

/// Flat named-tensor container:
///   "OSPC" | u32 version | u32 header_len | header (UTF-8 JSON)
///   u32 count | count x (u32 name_len | name | u32 rows | u32 cols | rows*cols f32)
/// All integers and floats little-endian; tensor data row-major.
struct NamedTensors {
  std::string header;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

void write_checkpoint(std::ostream& out, const std::string& header, const ParameterStore& params);
void write_checkpoint(const std::filesystem::path& path, const std::string& header,
                      const ParameterStore& params);
NamedTensors read_checkpoint(std::istream& in);
NamedTensors read_checkpoint(const std::filesystem::path& path);

/// Copies tensors into same-named parameters; every parameter must be present
/// with a matching shape.
void restore_parameters(const NamedTensors& tensors, ParameterStore& params);

}  // namespace ordspec::diff
