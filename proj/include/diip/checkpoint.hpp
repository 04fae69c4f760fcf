#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace diip {

struct CheckpointArray {
  std::string name;
  std::vector<int> dims;
  std::vector<float> data;
};

/// Binary layout (all integers little-endian u32):
///   "DIIPCKPT1" | version | metadata byte length | "key=value\n"... |
///   array count | per array: name length, name, rank, dims... |
///   float32 payloads in manifest order.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> meta;  // schedule, architecture, training provenance
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;
};

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace diip
