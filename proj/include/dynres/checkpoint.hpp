#pragma once

// Tensor checkpoints.
//
// Binary (little-endian):
//   "DYNRESCK" | u32 version=1 | u32 tensor_count
//   per tensor: u32 name_len | name bytes | u32 rows | u32 cols | rows*cols f64 (row-major)
//
// Manifest (text, written next to the binary as <file>.manifest):
//   # config_hash=<hex> master_seed=<u64>
//   <name> <rows> <cols>        one line per tensor, binary order

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "dynres/autodiff.hpp"
#include "dynres/episode_io.hpp"

namespace dynres {

struct NamedTensor {
  std::string name;
  ad::Matrix value;
};

std::string encode_checkpoint(const std::vector<NamedTensor> &tensors);
std::vector<NamedTensor> decode_checkpoint(const std::string &bytes);
std::string checkpoint_manifest(const std::vector<NamedTensor> &tensors, const Provenance &prov);

/// Writes `path` and `path` + ".manifest".
void save_checkpoint(const std::filesystem::path &path, const std::vector<NamedTensor> &tensors,
                     const Provenance &prov);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path &path);

const ad::Matrix &find_tensor(const std::vector<NamedTensor> &tensors, const std::string &name);

}  // namespace dynres
