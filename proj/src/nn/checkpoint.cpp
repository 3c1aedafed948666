#include "rsm/nn/checkpoint.hpp"

#include <cstring>
#include <set>

#include "rsm/binary_io.hpp"

namespace rsm::nn {

const Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t.tensor;
  }
  return nullptr;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  for (char c : kCheckpointMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kCheckpointVersion);
  w.put_string(ckpt.config);
  w.put(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& nt : ckpt.tensors) {
    if (!nt.tensor.consistent()) throw ValidationError("tensor " + nt.name + " has inconsistent shape");
    w.put_string(nt.name);
    w.put(static_cast<std::uint8_t>(nt.tensor.shape.size()));
    for (auto d : nt.tensor.shape) w.put(d);
    for (float v : nt.tensor.values) w.put(v);
  }
  const std::uint32_t crc = io::crc32(w.bytes());
  w.put(crc);
  return std::move(w.bytes());
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 10 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0) {
    throw FormatError("not an RSMC checkpoint (bad magic)");
  }
  const std::span<const std::uint8_t> all(bytes);
  io::ByteReader r(all);
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  if (io::crc32(all.first(body)) != stored) throw FormatError("checkpoint checksum mismatch");

  Checkpoint ckpt;
  ckpt.config = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor nt;
    nt.name = r.get_string();
    const auto rank = r.get<std::uint8_t>();
    for (int d = 0; d < rank; ++d) {
      const auto dim = r.get<std::int64_t>();
      if (dim < 0) throw FormatError("negative dimension in tensor " + nt.name);
      nt.tensor.shape.push_back(dim);
    }
    const auto n = nt.tensor.numel();
    if (static_cast<std::uint64_t>(n) * 4 > r.remaining()) throw FormatError("tensor " + nt.name + " is truncated");
    nt.tensor.values.resize(static_cast<std::size_t>(n));
    for (auto& v : nt.tensor.values) v = r.get<float>();
    ckpt.tensors.push_back(std::move(nt));
  }
  if (r.remaining() != 4) throw FormatError("trailing bytes after the last tensor");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("checkpoint file not found: " + path.string());
  return parse_checkpoint(io::read_file(path));
}

std::vector<NamedTensor> export_params(const ParamStore<float>& store) {
  std::vector<NamedTensor> out;
  out.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& p = store[i];
    NamedTensor nt;
    nt.name = p.name;
    nt.tensor.shape = {p.value.rows(), p.value.cols()};
    nt.tensor.values.assign(p.value.data(), p.value.data() + p.value.size());
    out.push_back(std::move(nt));
  }
  return out;
}

void import_params(ParamStore<float>& store, const std::vector<NamedTensor>& tensors) {
  std::set<std::string> seen;
  for (const auto& nt : tensors) {
    if (!store.contains(nt.name)) throw FormatError("checkpoint has unknown tensor " + nt.name);
    auto& p = store.at(nt.name);
    const auto& shape = nt.tensor.shape;
    if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols() || !nt.tensor.consistent()) {
      std::string got;
      for (auto d : shape) got += (got.empty() ? "" : "x") + std::to_string(d);
      throw FormatError("shape mismatch for tensor " + nt.name + ": checkpoint " + got + ", model " +
                        std::to_string(p.value.rows()) + "x" + std::to_string(p.value.cols()));
    }
    std::memcpy(p.value.data(), nt.tensor.values.data(), sizeof(float) * nt.tensor.values.size());
    if (!seen.insert(nt.name).second) throw FormatError("duplicate tensor " + nt.name);
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!seen.count(store[i].name)) throw FormatError("checkpoint is missing tensor " + store[i].name);
  }
}

}  // namespace rsm::nn
