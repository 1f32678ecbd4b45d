#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bandtint/tensor.hpp"

namespace bandtint {

/// Parameter snapshot ("BTW1"): the magic, then per parameter a u16 LE name
/// length, the UTF-8 name, a u8 rank, u32 LE extents and little-endian f32
/// values. There is no count field; the payload ends at end of input.
struct SnapshotEntry {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

std::vector<std::uint8_t> encode_snapshot(const ParamList<float>& params);
std::vector<SnapshotEntry> decode_snapshot(std::span<const std::uint8_t> bytes);

void save_snapshot(const std::filesystem::path& path, const ParamList<float>& params);
std::vector<SnapshotEntry> read_snapshot(const std::filesystem::path& path);

/// Copies snapshot values into `params`; names, order and shapes must match.
void assign_snapshot(ParamList<float>& params, const std::vector<SnapshotEntry>& entries);

}  // namespace bandtint
