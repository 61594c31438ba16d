#include "evobj/pointio.hpp"

#include <cstring>
#include <fstream>

namespace evobj {

namespace {

constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagHasIds = 1u;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw ParseError("point file truncated");
  const std::uint32_t v = static_cast<std::uint32_t>(in[pos]) |
                          (static_cast<std::uint32_t>(in[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(in[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(in[pos + 3]) << 24);
  pos += 4;
  return v;
}

float get_f32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  const std::uint32_t bits = get_u32(in, pos);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_point_cloud(const PointCloud& cloud) {
  if (cloud.has_ids() && cloud.instance_ids.size() != cloud.size())
    throw InvalidArgument("encode_point_cloud: instance id count mismatch");
  std::vector<std::uint8_t> out;
  out.reserve(16 + cloud.size() * (cloud.has_ids() ? 16 : 12));
  out.insert(out.end(), {'E', 'V', 'O', 'B'});
  put_u32(out, kVersion);
  put_u32(out, cloud.has_ids() ? kFlagHasIds : 0u);
  put_u32(out, static_cast<std::uint32_t>(cloud.size()));
  for (const Vec3& p : cloud.points) {
    put_f32(out, static_cast<float>(p.x));
    put_f32(out, static_cast<float>(p.y));
    put_f32(out, static_cast<float>(p.z));
  }
  if (cloud.has_ids())
    for (std::uint32_t id : cloud.instance_ids) put_u32(out, id);
  return out;
}

PointCloud decode_point_cloud(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || bytes[0] != 'E' || bytes[1] != 'V' || bytes[2] != 'O' ||
      bytes[3] != 'B')
    throw ParseError("point file: bad magic");
  std::size_t pos = 4;
  const std::uint32_t version = get_u32(bytes, pos);
  if (version != kVersion) throw ParseError("point file: unsupported version");
  const std::uint32_t flags = get_u32(bytes, pos);
  const std::uint32_t n = get_u32(bytes, pos);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double x = get_f32(bytes, pos);
    const double y = get_f32(bytes, pos);
    const double z = get_f32(bytes, pos);
    cloud.points.push_back({x, y, z});
  }
  if (flags & kFlagHasIds) {
    cloud.instance_ids.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) cloud.instance_ids.push_back(get_u32(bytes, pos));
  }
  if (pos != bytes.size()) throw ParseError("point file: trailing bytes");
  return cloud;
}

void write_point_cloud(const std::string& path, const PointCloud& cloud) {
  write_file_bytes(path, encode_point_cloud(cloud));
}

PointCloud read_point_cloud(const std::string& path) {
  return decode_point_cloud(read_file_bytes(path));
}

PointCloud round_to_storage(const PointCloud& cloud) {
  PointCloud out = cloud;
  for (Vec3& p : out.points) {
    p.x = static_cast<double>(static_cast<float>(p.x));
    p.y = static_cast<double>(static_cast<float>(p.y));
    p.z = static_cast<double>(static_cast<float>(p.z));
  }
  return out;
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::string& path) { return fnv1a64(read_file_bytes(path)); }

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot read " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace evobj
