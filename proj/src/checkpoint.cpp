#include "diip/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "diip/image.hpp"

namespace diip {

namespace {

constexpr char kMagic[] = "DIIPCKPT1";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

std::uint32_t swap_if_big(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  v = swap_if_big(v);
  char b[4];
  std::memcpy(b, &v, 4);
  os.write(b, 4);
}

std::uint32_t get_u32(std::istream& is) {
  char b[4];
  if (!is.read(b, 4)) throw Error("checkpoint: unexpected end of file");
  std::uint32_t v;
  std::memcpy(&v, b, 4);
  return swap_if_big(v);
}

std::string get_bytes(std::istream& is, std::size_t n) {
  std::string s(n, '\0');
  if (n > 0 && !is.read(s.data(), static_cast<std::streamsize>(n))) {
    throw Error("checkpoint: unexpected end of file");
  }
  return s;
}

}  // namespace

const CheckpointArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error("checkpoint: missing metadata key '" + key + "'");
  return it->second;
}

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kMagic, kMagicLen);
  put_u32(os, Checkpoint::kVersion);
  std::string meta;
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw Error("checkpoint: metadata key/value contains a reserved character");
    }
    meta += k + "=" + v + "\n";
  }
  put_u32(os, static_cast<std::uint32_t>(meta.size()));
  os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put_u32(os, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    std::size_t n = 1;
    for (int d : a.dims) n *= static_cast<std::size_t>(d);
    if (n != a.data.size()) throw Error("checkpoint: array '" + a.name + "' shape/data mismatch");
    put_u32(os, static_cast<std::uint32_t>(a.name.size()));
    os.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_u32(os, static_cast<std::uint32_t>(a.dims.size()));
    for (int d : a.dims) put_u32(os, static_cast<std::uint32_t>(d));
  }
  for (const auto& a : ckpt.arrays) {
    for (float f : a.data) put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
  if (!os) throw Error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& is) {
  if (get_bytes(is, kMagicLen) != kMagic) throw Error("checkpoint: bad magic");
  Checkpoint ckpt;
  const std::uint32_t version = get_u32(is);
  if (version != Checkpoint::kVersion) {
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  }
  std::istringstream meta(get_bytes(is, get_u32(is)));
  for (std::string line; std::getline(meta, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("checkpoint: malformed metadata line");
    ckpt.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const std::uint32_t count = get_u32(is);
  ckpt.arrays.resize(count);
  for (auto& a : ckpt.arrays) {
    a.name = get_bytes(is, get_u32(is));
    const std::uint32_t rank = get_u32(is);
    if (rank > 8) throw Error("checkpoint: implausible rank for '" + a.name + "'");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      a.dims.push_back(static_cast<int>(get_u32(is)));
      n *= static_cast<std::size_t>(a.dims.back());
    }
    a.data.resize(n);
  }
  for (auto& a : ckpt.arrays) {
    for (float& f : a.data) f = std::bit_cast<float>(get_u32(is));
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint '" + path.string() + "'");
  try {
    return read_checkpoint(is);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace diip
