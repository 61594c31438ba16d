#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evobj/geometry.hpp"

namespace evobj {

// Binary point file, little-endian, bit-exact across platforms:
//   magic "EVOB" | version u32=1 | flags u32 (bit0: has instance ids) |
//   count u32 N | N x 3 float32 xyz | [N x u32 instance ids]
// Coordinates are stored as float32; reading back yields the rounded values.
std::vector<std::uint8_t> encode_point_cloud(const PointCloud& cloud);
PointCloud decode_point_cloud(const std::vector<std::uint8_t>& bytes);

void write_point_cloud(const std::string& path, const PointCloud& cloud);
PointCloud read_point_cloud(const std::string& path);

// Rounds coordinates through float32, matching a write/read round trip.
PointCloud round_to_storage(const PointCloud& cloud);

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes);
std::uint64_t file_checksum(const std::string& path);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace evobj
