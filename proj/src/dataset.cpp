#include "rsm/dataset.hpp"

#include <cstring>
#include <string>

#include "rsm/binary_io.hpp"
#include "rsm/error.hpp"

namespace rsm {

std::string_view env_name(EnvKind env) { return env == EnvKind::shapes ? "shapes" : "balls"; }

EnvKind parse_env(std::string_view text) {
  if (text == "shapes") return EnvKind::shapes;
  if (text == "balls") return EnvKind::balls;
  throw ValidationError("unknown env '" + std::string(text) + "' (expected shapes or balls)");
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::eval: return "eval";
    case Split::test_iid: return "test-iid";
    case Split::test_ood: return "test-ood";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "eval") return Split::eval;
  if (text == "test-iid" || text == "test_iid") return Split::test_iid;
  if (text == "test-ood" || text == "test_ood") return Split::test_ood;
  throw ValidationError("unknown split '" + std::string(text) + "' (expected train, eval, test-iid, test-ood)");
}

EnvConfig protocol_config(EnvKind env, Split split) {
  EnvConfig c;
  c.env = env;
  if (env == EnvKind::shapes) {
    c.object_count = split == Split::test_ood ? 3 : 5;
    c.radius = 0.0;
  } else {
    c.object_count = 3;
    switch (split) {
      case Split::train:
      case Split::test_iid: c.radius = 4.0; break;
      case Split::eval: c.radius = 5.0; break;
      case Split::test_ood: c.radius = 3.0; break;
    }
  }
  return c;
}

int default_episode_count(EnvKind env, Split split) {
  if (env == EnvKind::shapes) return split == Split::train ? 1000 : 10000;
  return split == Split::train ? 5000 : 1000;
}

int frames_per_observation(EnvKind env) { return env == EnvKind::balls ? 2 : 1; }

std::size_t Dataset::transition_count() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += static_cast<std::size_t>(e.length());
  return n;
}

void validate_split_config(const EnvConfig& config, Split split) {
  const EnvConfig expected = protocol_config(config.env, split);
  if (config.object_count != expected.object_count) {
    throw ValidationError(std::string(env_name(config.env)) + " split " + std::string(split_name(split)) + " requires " +
                          std::to_string(expected.object_count) + " objects, got " + std::to_string(config.object_count));
  }
  if (config.env == EnvKind::balls && config.radius != expected.radius) {
    throw ValidationError("balls split " + std::string(split_name(split)) + " requires radius " +
                          std::to_string(expected.radius) + ", got " + std::to_string(config.radius));
  }
  if (config.env == EnvKind::shapes && config.grid_size != envs::kGridSize) {
    throw ValidationError("shapes datasets use a 5x5 grid");
  }
}

Episode generate_episode(const EnvConfig& config, int episode_length, std::uint64_t seed) {
  if (episode_length < 1) throw ValidationError("episode length must be at least 1");
  Rng rng(seed);
  Episode ep;
  ep.env = config.env;
  ep.object_count = config.object_count;
  ep.seed = seed;
  if (config.env == EnvKind::shapes) {
    if (config.object_count < 1) throw ValidationError("shapes episodes need at least one object");
    auto state = envs::grid_init(config.object_count, config.grid_size, rng);
    ep.frames.push_back(envs::grid_render(state));
    for (int t = 0; t < episode_length; ++t) {
      envs::GridAction action;
      action.object_id = static_cast<int>(rng() % static_cast<std::uint64_t>(config.object_count));
      action.direction = static_cast<envs::Direction>(rng() % envs::kNumDirections);
      state = envs::grid_step(state, action);
      ep.actions.push_back(action);
      ep.frames.push_back(envs::grid_render(state));
    }
  } else {
    ep.radius = config.radius;
    auto state = envs::balls_init(config.object_count, config.radius, rng);
    ep.frames.push_back(envs::balls_render(state));
    // Two-frame observations: T transitions need T + 2 frames.
    for (int t = 0; t < episode_length + 1; ++t) {
      state = envs::balls_step(state);
      ep.frames.push_back(envs::balls_render(state));
    }
  }
  return ep;
}

std::uint64_t split_seed(std::uint64_t master_seed, Split split) {
  return derive_seed(master_seed, 1000 + static_cast<std::uint64_t>(split));
}

Dataset generate_dataset(const EnvConfig& config, Split split, int count, int episode_length, std::uint64_t seed) {
  validate_split_config(config, split);
  if (count < 0) throw ValidationError("episode count must be non-negative");
  if (episode_length < 1) throw ValidationError("episode length must be at least 1");
  Dataset ds;
  ds.header.env = config.env;
  ds.header.split = split;
  ds.header.episode_count = static_cast<std::uint32_t>(count);
  ds.header.episode_length = static_cast<std::uint32_t>(episode_length);
  ds.header.seed = seed;
  ds.header.object_count = config.object_count;
  ds.header.radius = config.env == EnvKind::balls ? config.radius : 0.0;
  if (config.env == EnvKind::shapes) ds.header.object_specs = envs::object_specs_for(config.object_count);
  ds.episodes.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    ds.episodes[static_cast<std::size_t>(i)] =
        generate_episode(config, episode_length, derive_seed(seed, static_cast<std::uint64_t>(i)));
  }
  return ds;
}

Dataset generate_dataset(EnvKind env, Split split, int count, int episode_length, std::uint64_t seed) {
  return generate_dataset(protocol_config(env, split), split, count, episode_length, seed);
}

std::vector<std::uint8_t> serialize_dataset(const Dataset& ds) {
  io::ByteWriter w;
  for (char c : kDatasetMagic) w.put(static_cast<std::uint8_t>(c));
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint8_t>(ds.header.env));
  w.put(static_cast<std::uint8_t>(ds.header.split));
  w.put(ds.header.episode_count);
  w.put(ds.header.episode_length);
  w.put(ds.header.seed);
  w.put(static_cast<std::uint8_t>(ds.header.object_count));
  w.put(ds.header.radius);
  w.put(static_cast<std::uint8_t>(ds.header.object_specs.size()));
  for (const auto& spec : ds.header.object_specs) {
    w.put(static_cast<std::uint8_t>(spec.shape));
    w.put(spec.color);
  }
  w.put(static_cast<std::uint16_t>(envs::kFrameHeight));
  w.put(static_cast<std::uint16_t>(envs::kFrameWidth));
  w.put(static_cast<std::uint8_t>(envs::kFrameChannels));
  if (ds.episodes.size() != ds.header.episode_count) throw ValidationError("header episode count does not match");
  for (const auto& ep : ds.episodes) {
    w.put(ep.seed);
    w.put(static_cast<std::uint8_t>(ep.object_count));
    w.put(ep.radius);
    w.put(static_cast<std::uint32_t>(ep.frames.size()));
    for (const auto& f : ep.frames) w.put_bytes(f.pixels);
    w.put(static_cast<std::uint32_t>(ep.actions.size()));
    for (const auto& a : ep.actions) {
      w.put(static_cast<std::uint8_t>(a.object_id));
      w.put(static_cast<std::uint8_t>(a.direction));
    }
  }
  const std::uint32_t crc = io::crc32(w.bytes());
  w.put(crc);
  return std::move(w.bytes());
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize_dataset(dataset));
}

Dataset parse_dataset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 2 + 4 || std::memcmp(bytes.data(), kDatasetMagic, 4) != 0) {
    throw FormatError("not an RSMD dataset (bad magic)");
  }
  const std::span<const std::uint8_t> all(bytes);
  io::ByteReader r(all);
  r.get_bytes(4);
  const auto version = r.get<std::uint16_t>();
  if (version != kDatasetVersion) {
    throw FormatError("dataset version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kDatasetVersion) + ")");
  }
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i) stored_crc |= static_cast<std::uint32_t>(bytes[body + static_cast<std::size_t>(i)]) << (8 * i);
  if (io::crc32(all.first(body)) != stored_crc) throw FormatError("dataset checksum mismatch");

  Dataset ds;
  auto env_raw = r.get<std::uint8_t>();
  auto split_raw = r.get<std::uint8_t>();
  if (env_raw > 1 || split_raw > 3) throw FormatError("dataset header has an unknown env or split");
  ds.header.env = static_cast<EnvKind>(env_raw);
  ds.header.split = static_cast<Split>(split_raw);
  ds.header.episode_count = r.get<std::uint32_t>();
  ds.header.episode_length = r.get<std::uint32_t>();
  ds.header.seed = r.get<std::uint64_t>();
  ds.header.object_count = r.get<std::uint8_t>();
  ds.header.radius = r.get<double>();
  const auto spec_count = r.get<std::uint8_t>();
  for (int i = 0; i < spec_count; ++i) {
    envs::ObjectSpec spec;
    const auto shape = r.get<std::uint8_t>();
    if (shape > 2) throw FormatError("unknown shape id in dataset header");
    spec.shape = static_cast<envs::Shape>(shape);
    spec.color = r.get<std::uint8_t>();
    ds.header.object_specs.push_back(spec);
  }
  const auto h = r.get<std::uint16_t>();
  const auto wdt = r.get<std::uint16_t>();
  const auto ch = r.get<std::uint8_t>();
  if (h != envs::kFrameHeight || wdt != envs::kFrameWidth || ch != envs::kFrameChannels) {
    throw FormatError("dataset frame geometry is not 50x50x3");
  }
  ds.episodes.reserve(ds.header.episode_count);
  for (std::uint32_t e = 0; e < ds.header.episode_count; ++e) {
    Episode ep;
    ep.env = ds.header.env;
    ep.seed = r.get<std::uint64_t>();
    ep.object_count = r.get<std::uint8_t>();
    ep.radius = r.get<double>();
    const auto frames = r.get<std::uint32_t>();
    ep.frames.resize(frames);
    for (auto& f : ep.frames) {
      auto raw = r.get_bytes(f.pixels.size());
      std::copy(raw.begin(), raw.end(), f.pixels.begin());
    }
    const auto actions = r.get<std::uint32_t>();
    for (std::uint32_t a = 0; a < actions; ++a) {
      envs::GridAction act;
      act.object_id = r.get<std::uint8_t>();
      const auto dir = r.get<std::uint8_t>();
      if (dir >= envs::kNumDirections) throw FormatError("invalid action direction in dataset");
      act.direction = static_cast<envs::Direction>(dir);
      ep.actions.push_back(act);
    }
    ds.episodes.push_back(std::move(ep));
  }
  if (r.remaining() != 4) throw FormatError("trailing bytes after the last episode");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw FormatError("dataset file not found: " + path.string());
  return parse_dataset(io::read_file(path));
}

}  // namespace rsm
