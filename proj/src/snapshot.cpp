#include "bandtint/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

namespace bandtint {
namespace {

constexpr std::uint8_t kMagic[4] = {'B', 'T', 'W', '1'};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>((v >> s) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw format_error(std::string("snapshot truncated while reading ") + what +
                         " at byte " + std::to_string(pos_));
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint8_t u8(const char* what) { return take(1, what)[0]; }
  std::uint16_t u16(const char* what) {
    auto s = take(2, what);
    return static_cast<std::uint16_t>(s[0] | (s[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    auto s = take(4, what);
    return static_cast<std::uint32_t>(s[0]) | (static_cast<std::uint32_t>(s[1]) << 8) |
           (static_cast<std::uint32_t>(s[2]) << 16) | (static_cast<std::uint32_t>(s[3]) << 24);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const ParamList<float>& params) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  for (const auto& p : params) {
    if (p.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw invalid_argument("parameter name too long: " + p.name.substr(0, 32) + "...");
    if (p.tensor.rank() > std::numeric_limits<std::uint8_t>::max())
      throw invalid_argument("parameter rank too large: " + p.name);
    put_u16(out, static_cast<std::uint16_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    out.push_back(static_cast<std::uint8_t>(p.tensor.rank()));
    for (auto e : p.tensor.shape()) {
      if (e > std::numeric_limits<std::uint32_t>::max())
        throw invalid_argument("parameter extent too large: " + p.name);
      put_u32(out, static_cast<std::uint32_t>(e));
    }
    for (float v : p.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<SnapshotEntry> decode_snapshot(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin()))
    throw format_error("snapshot has unknown magic (expected BTW1)");
  Reader r(bytes.subspan(4));
  std::vector<SnapshotEntry> entries;
  while (!r.done()) {
    SnapshotEntry e;
    const auto name_len = r.u16("name length");
    auto name = r.take(name_len, "name");
    e.name.assign(name.begin(), name.end());
    const auto rank = r.u8("rank");
    std::size_t n = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      const auto extent = r.u32("extent");
      if (extent == 0) throw format_error("snapshot parameter '" + e.name + "' has a zero extent");
      e.shape.push_back(extent);
      n *= extent;
    }
    auto raw = r.take(n * 4, "values");
    e.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                                 (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
      e.values[i] = std::bit_cast<float>(bits);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_snapshot(const std::filesystem::path& path, const ParamList<float>& params) {
  const auto bytes = encode_snapshot(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw io_error("failed writing " + path.string());
}

std::vector<SnapshotEntry> read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open snapshot " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_snapshot(bytes);
  } catch (const Error& e) {
    throw format_error(path.string() + ": " + e.what());
  }
}

void assign_snapshot(ParamList<float>& params, const std::vector<SnapshotEntry>& entries) {
  if (entries.size() != params.size())
    throw format_error("snapshot holds " + std::to_string(entries.size()) +
                       " parameters, model expects " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& e = entries[i];
    if (e.name != p.name)
      throw format_error("snapshot parameter " + std::to_string(i) + " is '" + e.name +
                         "', expected '" + p.name + "'");
    if (e.shape != p.tensor.shape())
      throw format_error("snapshot parameter '" + e.name + "' has shape " +
                         shape_string(e.shape) + ", expected " +
                         shape_string(p.tensor.shape()));
    std::copy(e.values.begin(), e.values.end(), p.tensor.mutable_data().begin());
  }
}

}  // namespace bandtint
