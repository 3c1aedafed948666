#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rsm/nn/params.hpp"

namespace rsm::nn {

inline constexpr char kCheckpointMagic[4] = {'R', 'S', 'M', 'C'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
  bool operator==(const NamedTensor&) const = default;
};

struct Checkpoint {
  std::string config;  // key = value text of the producing RunConfig
  std::vector<NamedTensor> tensors;

  const Tensor* find(std::string_view name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);
// Written to a temporary file and renamed into place.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::vector<NamedTensor> export_params(const ParamStore<float>& store);
// Every tensor must name a parameter of the same shape and every parameter
// must be present; otherwise FormatError.
void import_params(ParamStore<float>& store, const std::vector<NamedTensor>& tensors);

}  // namespace rsm::nn
