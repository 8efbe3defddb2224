#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "mcg/tensor.hpp"

namespace mcg {

/// On-disk tensor file (".mcgt") plus a JSON sidecar ("<file>.meta.json").
///
/// Byte layout of the tensor file. Header integers are little-endian.
///
///   offset  size      field
///   0       4         magic "MCGT"
///   4       2         format version (1)
///   6       1         element type: 1 = float64, 2 = float32
///   7       1         payload byte order: 1 = little-endian, 2 = big-endian
///   8       4         rank R (1..8)
///   12      8*R       dims, outermost first
///   12+8R   8         payload byte count (= product(dims) * element size)
///   20+8R   ...       payload, row-major
///
/// The sidecar is a JSON object with "format", "version", "dtype", "shape" and
/// a free-form "metadata" object of string key/value pairs. When present on
/// read its shape must agree with the header.
enum class DType : std::uint8_t { kFloat64 = 1, kFloat32 = 2 };

using Metadata = std::map<std::string, std::string>;

struct LoadedTensor {
    Tensor tensor;
    Metadata metadata;
    DType dtype = DType::kFloat64;
};

std::filesystem::path sidecar_path(const std::filesystem::path& path);

void write_container(const Tensor& tensor, const std::filesystem::path& path, const Metadata& metadata = {},
                     DType dtype = DType::kFloat64);

/// Throws FormatError on corrupt/truncated input or a sidecar shape mismatch.
LoadedTensor read_container_full(const std::filesystem::path& path);
Tensor read_container(const std::filesystem::path& path);

}  // namespace mcg
