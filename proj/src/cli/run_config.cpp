#include "awt/cli/run_config.hpp"

#include "awt/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace awt {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) + "' as " +
                        std::string(expected));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, std::is_integral_v<T> ? "an integer" : "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "a boolean (true/false)");
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

std::string_view policy_name(DurationPolicy p) {
  return p == DurationPolicy::rate_scaled ? "rate_scaled" : "source_length";
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Entry number(std::string key, std::function<T&(RunConfig&)> field) {
  return {key,
          [key, field](RunConfig& c, std::string_view v) { field(c) = parse_number<T>(key, v); },
          [field](const RunConfig& c) {
            const T value = field(const_cast<RunConfig&>(c));
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(value);
            } else {
              return std::to_string(value);
            }
          }};
}

Entry boolean(std::string key, std::function<bool&(RunConfig&)> field) {
  return {key, [key, field](RunConfig& c, std::string_view v) { field(c) = parse_bool(key, v); },
          [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c)) ? "true" : "false"); }};
}

Entry path(std::string key, std::filesystem::path RunConfig::*field) {
  return {key, [field](RunConfig& c, std::string_view v) { c.*field = std::filesystem::path(std::string(v)); },
          [field](const RunConfig& c) { return (c.*field).string(); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    // Synthetic data.
    t.push_back(number<int>("synth.class_count", [](RunConfig& c) -> int& { return c.synth.class_count; }));
    t.push_back(number<int>("synth.samples_per_class", [](RunConfig& c) -> int& { return c.synth.samples_per_class; }));
    t.push_back(number<Index>("synth.min_length", [](RunConfig& c) -> Index& { return c.synth.min_length; }));
    t.push_back(number<Index>("synth.max_length", [](RunConfig& c) -> Index& { return c.synth.max_length; }));
    t.push_back(number<double>("synth.trajectory_rate_hz",
                               [](RunConfig& c) -> double& { return c.synth.trajectory_rate_hz; }));
    t.push_back(number<double>("synth.inertia_rate_hz", [](RunConfig& c) -> double& { return c.synth.inertia_rate_hz; }));
    t.push_back(number<double>("synth.noise_std", [](RunConfig& c) -> double& { return c.synth.noise_std; }));
    t.push_back(number<double>("synth.bias_std", [](RunConfig& c) -> double& { return c.synth.bias_std; }));
    t.push_back(number<double>("synth.scale_jitter", [](RunConfig& c) -> double& { return c.synth.scale_jitter; }));
    t.push_back(number<double>("synth.rotation_jitter_deg",
                               [](RunConfig& c) -> double& { return c.synth.rotation_jitter_deg; }));
    t.push_back(number<double>("synth.translation_jitter",
                               [](RunConfig& c) -> double& { return c.synth.translation_jitter; }));
    t.push_back(number<double>("synth.warp_strength", [](RunConfig& c) -> double& { return c.synth.warp_strength; }));
    t.push_back(number<double>("synth.z_noise", [](RunConfig& c) -> double& { return c.synth.z_noise; }));
    t.push_back(number<int>("synth.minority_class", [](RunConfig& c) -> int& { return c.synth.minority_class; }));
    t.push_back(number<double>("synth.minority_fraction",
                               [](RunConfig& c) -> double& { return c.synth.minority_fraction; }));
    t.push_back(number<std::uint64_t>("synth.seed", [](RunConfig& c) -> std::uint64_t& { return c.synth.seed; }));
    // Training.
    t.push_back(number<double>("train.lr", [](RunConfig& c) -> double& { return c.train.lr; }));
    t.push_back(number<int>("train.batch_size", [](RunConfig& c) -> int& { return c.train.batch_size; }));
    t.push_back(number<int>("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; }));
    t.push_back(number<int>("train.max_steps", [](RunConfig& c) -> int& { return c.train.max_steps; }));
    t.push_back(number<int>("train.disc_updates_per_iter",
                            [](RunConfig& c) -> int& { return c.train.disc_updates_per_iter; }));
    t.push_back(number<std::uint64_t>("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.seed; }));
    t.push_back({"train.shuffle_seed",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "none") {
                     c.train.shuffle_seed.reset();
                   } else {
                     c.train.shuffle_seed = parse_number<std::uint64_t>("train.shuffle_seed", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.train.shuffle_seed ? std::to_string(*c.train.shuffle_seed) : std::string("none");
                 }});
    t.push_back(boolean("train.enable_cls", [](RunConfig& c) -> bool& { return c.train.enable_cls; }));
    t.push_back(boolean("train.enable_gan", [](RunConfig& c) -> bool& { return c.train.enable_gan; }));
    t.push_back(boolean("train.check_finite", [](RunConfig& c) -> bool& { return c.train.check_finite; }));
    t.push_back({"train.duration_policy",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "rate_scaled") {
                     c.train.policy = DurationPolicy::rate_scaled;
                   } else if (v == "source_length") {
                     c.train.policy = DurationPolicy::source_length;
                   } else {
                     bad_value("train.duration_policy", v, "rate_scaled or source_length");
                   }
                 },
                 [](const RunConfig& c) { return std::string(policy_name(c.train.policy)); }});
    t.push_back(number<std::uint64_t>("split.seed", [](RunConfig& c) -> std::uint64_t& { return c.split_seed; }));
    t.push_back(number<double>("split.train_fraction", [](RunConfig& c) -> double& { return c.train_fraction; }));
    // Evaluation.
    t.push_back(number<int>("probe.epochs", [](RunConfig& c) -> int& { return c.probe.epochs; }));
    t.push_back(number<int>("probe.batch_size", [](RunConfig& c) -> int& { return c.probe.batch_size; }));
    t.push_back(number<double>("probe.lr", [](RunConfig& c) -> double& { return c.probe.lr; }));
    t.push_back(number<std::uint64_t>("probe.seed", [](RunConfig& c) -> std::uint64_t& { return c.probe.seed; }));
    t.push_back(number<int>("linear_probe.folds", [](RunConfig& c) -> int& { return c.linear_probe.folds; }));
    t.push_back(number<int>("linear_probe.steps", [](RunConfig& c) -> int& { return c.linear_probe.steps; }));
    t.push_back(number<double>("linear_probe.lr", [](RunConfig& c) -> double& { return c.linear_probe.lr; }));
    t.push_back(number<std::uint64_t>("linear_probe.seed",
                                      [](RunConfig& c) -> std::uint64_t& { return c.linear_probe.seed; }));
    t.push_back(boolean("eval.two_stream", [](RunConfig& c) -> bool& { return c.two_stream; }));
    t.push_back({"eval.two_stream_domain",
                 [](RunConfig& c, std::string_view v) {
                   try {
                     c.two_stream_domain = parse_domain(v);
                   } catch (const std::exception&) {
                     bad_value("eval.two_stream_domain", v, "inertia or trajectory");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.two_stream_domain)); }});
    t.push_back(boolean("eval.two_stream_control", [](RunConfig& c) -> bool& { return c.two_stream_control; }));
    t.push_back({"eval.minority_class",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "none") {
                     c.minority_class.reset();
                   } else {
                     c.minority_class = parse_number<int>("eval.minority_class", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.minority_class ? std::to_string(*c.minority_class) : std::string("none");
                 }});
    // Data files.
    t.push_back(path("data.inertia", &RunConfig::inertia_path));
    t.push_back(path("data.trajectory", &RunConfig::trajectory_path));
    t.push_back(path("data.pairs", &RunConfig::pairs_path));
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<std::string>& run_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Entry& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void set_run_config_key(RunConfig& cfg, std::string_view key, std::string_view value) {
  for (const Entry& e : entries()) {
    if (e.key == key) {
      e.set(cfg, value);
      return;
    }
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    try {
      set_run_config_key(cfg, key, trim(line.substr(eq + 1)));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!base_dir.empty()) {
    for (auto* p : {&cfg.inertia_path, &cfg.trajectory_path, &cfg.pairs_path}) {
      if (!p->empty() && p->is_relative()) *p = base_dir / *p;
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_run_config(buf.str(), std::filesystem::absolute(path).parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::string format_run_config(const RunConfig& cfg) {
  std::string out;
  for (const Entry& e : entries()) out += e.key + " = " + e.get(cfg) + "\n";
  return out;
}

void validate(const RunConfig& cfg) {
  validate(cfg.synth);
  validate(cfg.train);
  validate(cfg.probe);
  if (!(cfg.train_fraction > 0 && cfg.train_fraction < 1)) {
    throw ValidationError("split.train_fraction must lie in (0, 1)");
  }
  if (cfg.linear_probe.folds < 2) throw ValidationError("linear_probe.folds must be >= 2");
  if (cfg.linear_probe.steps < 1) throw ValidationError("linear_probe.steps must be >= 1");
  if (!(cfg.linear_probe.lr > 0)) throw ValidationError("linear_probe.lr must be positive");
}

}  // namespace awt
