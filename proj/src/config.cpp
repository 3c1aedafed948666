#include "rsm/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "rsm/error.hpp"

namespace rsm {

namespace {

constexpr std::string_view kVariantNames[] = {"full", "ab01", "ab10", "ab00", "parallel", "mlp_cci", "random_mech"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "'");
  }
  return out;
}

int parse_int(std::string_view key, std::string_view value) { return parse_number<int>(key, value); }

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Line {
  std::string key;
  std::string value;
  int number = 0;
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++number;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(number) + ": expected key = value");
    }
    out.push_back({std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), number});
  }
  return out;
}

}  // namespace

std::string_view variant_name(Variant v) { return kVariantNames[static_cast<int>(v)]; }

Variant parse_variant(std::string_view text) {
  for (int i = 0; i < 7; ++i) {
    if (kVariantNames[i] == text) return static_cast<Variant>(i);
  }
  if (text == "mlp-cci") return Variant::mlp_cci;
  if (text == "random-mech") return Variant::random_mech;
  throw ValidationError("unknown variant '" + std::string(text) +
                        "' (expected full, ab01, ab10, ab00, parallel, mlp_cci, random_mech)");
}

void TransitionConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ValidationError(std::string(name) + " must be at least 1, got " + std::to_string(v));
  };
  positive(slots, "slots");
  positive(mechanisms, "mechanisms");
  positive(slot_dim, "slot_dim");
  positive(cci_dim, "cci_dim");
  positive(hidden, "hidden");
  positive(heads, "heads");
  if (action_dim < 0) throw ValidationError("action_dim must be non-negative");
  if (model_dim() % heads != 0) {
    throw ValidationError("slot_dim + action_dim = " + std::to_string(model_dim()) + " is not divisible by heads = " +
                          std::to_string(heads));
  }
  if (!(temperature > 0.0)) throw ValidationError("temperature must be positive");
}

void RunConfig::validate() const {
  transition.validate();
  if (env == EnvKind::shapes && transition.action_dim != envs::kNumDirections) {
    throw ValidationError("shapes requires action_dim = 4, got " + std::to_string(transition.action_dim));
  }
  if (env == EnvKind::balls && transition.action_dim != 0) {
    throw ValidationError("balls has no actions; action_dim must be 0, got " + std::to_string(transition.action_dim));
  }
  if (cnn_channels < 1 || encoder_hidden < 1 || decoder_hidden < 1) {
    throw ValidationError("network widths must be at least 1");
  }
  if (!(lr > 0.0)) throw ValidationError("lr must be positive");
  if (batch_size < 2) throw ValidationError("batch_size must be at least 2 (negatives come from the batch)");
  if (decoder_batch_size < 1) throw ValidationError("decoder_batch_size must be at least 1");
  if (epochs < 0 || decoder_epochs < 0) throw ValidationError("epoch counts must be non-negative");
  if (decoder_episodes < 0) throw ValidationError("decoder_episodes must be non-negative");
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
}

RunConfig default_config(EnvKind env) {
  RunConfig c;
  c.env = env;
  if (env == EnvKind::balls) {
    c.transition.slots = 3;
    c.transition.mechanisms = 7;
    c.transition.action_dim = 0;
  }
  return c;
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  auto& t = c.transition;
  if (key == "env") {
    const EnvKind env = parse_env(value);
    if (env != c.env) c = default_config(env);
  } else if (key == "slots") t.slots = parse_int(key, value);
  else if (key == "mechanisms") t.mechanisms = parse_int(key, value);
  else if (key == "slot_dim") t.slot_dim = parse_int(key, value);
  else if (key == "action_dim") t.action_dim = parse_int(key, value);
  else if (key == "cci_dim") t.cci_dim = parse_int(key, value);
  else if (key == "hidden") t.hidden = parse_int(key, value);
  else if (key == "heads") t.heads = parse_int(key, value);
  else if (key == "temperature") t.temperature = parse_number<double>(key, value);
  else if (key == "variant") t.variant = parse_variant(value);
  else if (key == "cnn_channels") c.cnn_channels = parse_int(key, value);
  else if (key == "encoder_hidden") c.encoder_hidden = parse_int(key, value);
  else if (key == "decoder_hidden") c.decoder_hidden = parse_int(key, value);
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "batch_size") c.batch_size = parse_int(key, value);
  else if (key == "epochs") c.epochs = parse_int(key, value);
  else if (key == "gamma") c.gamma = parse_number<double>(key, value);
  else if (key == "decoder_epochs") c.decoder_epochs = parse_int(key, value);
  else if (key == "decoder_batch_size") c.decoder_batch_size = parse_int(key, value);
  else if (key == "decoder_episodes") c.decoder_episodes = parse_int(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "train_data") c.train_data = value;
  else if (key == "eval_data") c.eval_data = value;
  else if (key == "test_iid_data") c.test_iid_data = value;
  else if (key == "test_ood_data") c.test_ood_data = value;
  else if (key == "out") c.out_dir = value;
  else throw ValidationError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::string_view text) {
  const auto lines = split_lines(text);
  RunConfig c;
  for (const auto& l : lines) {
    if (l.key == "env") c = default_config(parse_env(l.value));
  }
  for (const auto& l : lines) {
    if (l.key == "env") continue;
    set_config_value(c, l.key, l.value);
  }
  c.validate();
  return c;
}

std::string serialize_config(const RunConfig& c) {
  const auto& t = c.transition;
  std::ostringstream os;
  os << "env = " << env_name(c.env) << '\n'
     << "slots = " << t.slots << '\n'
     << "mechanisms = " << t.mechanisms << '\n'
     << "slot_dim = " << t.slot_dim << '\n'
     << "action_dim = " << t.action_dim << '\n'
     << "cci_dim = " << t.cci_dim << '\n'
     << "hidden = " << t.hidden << '\n'
     << "heads = " << t.heads << '\n'
     << "temperature = " << format_double(t.temperature) << '\n'
     << "variant = " << variant_name(t.variant) << '\n'
     << "cnn_channels = " << c.cnn_channels << '\n'
     << "encoder_hidden = " << c.encoder_hidden << '\n'
     << "decoder_hidden = " << c.decoder_hidden << '\n'
     << "lr = " << format_double(c.lr) << '\n'
     << "batch_size = " << c.batch_size << '\n'
     << "epochs = " << c.epochs << '\n'
     << "gamma = " << format_double(c.gamma) << '\n'
     << "decoder_epochs = " << c.decoder_epochs << '\n'
     << "decoder_batch_size = " << c.decoder_batch_size << '\n'
     << "decoder_episodes = " << c.decoder_episodes << '\n'
     << "seed = " << c.seed << '\n';
  auto path = [&](const char* key, const std::string& v) {
    if (!v.empty()) os << key << " = " << v << '\n';
  };
  path("train_data", c.train_data);
  path("eval_data", c.eval_data);
  path("test_iid_data", c.test_iid_data);
  path("test_ood_data", c.test_ood_data);
  os << "out = " << c.out_dir << '\n';
  return os.str();
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace rsm
