#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "sau/sample.hpp"
#include "sau/tensor.hpp"

namespace sau {

// Tensor blob layout: magic "SAUT", version u32, dtype u8, rank u32,
// dims u64 each, then the row-major payload. All integers little-endian.
enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

constexpr std::uint32_t kBlobVersion = 1;

void write_tensor_blob(std::ostream& os, const Tensor& t, DType dtype);
Tensor read_tensor_blob(std::istream& is, DType* dtype_out = nullptr);

void write_tensor_blob_file(const std::filesystem::path& p, const Tensor& t, DType dtype);
Tensor read_tensor_blob_file(const std::filesystem::path& p, DType* dtype_out = nullptr);

/// Blob path convention: "x.jsonl" -> "x.blob" next to it.
std::filesystem::path blob_path_for(const std::filesystem::path& manifest);

/// Writes manifest (JSON lines: id, label, is_synthetic, quality, offset) and
/// the feature blob (single (N, ...) f32 tensor; offset is the byte position
/// of a sample's features inside the payload). Samples must share one shape.
void save_dataset(const std::filesystem::path& manifest, const std::vector<Sample>& samples);

/// Inverse of save_dataset. Errors carry the manifest line number for
/// malformed records and detect blob/manifest size mismatches.
std::vector<Sample> load_dataset(const std::filesystem::path& manifest);

}  // namespace sau
