#include "tce/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "tce/csv.hpp"
#include "tce/errors.hpp"

namespace tce {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw ArgumentError("expected an integer, got '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < INT32_MIN || v > INT32_MAX) throw ArgumentError("integer out of range: '" + s + "'");
  return static_cast<int>(v);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ArgumentError("expected true or false, got '" + s + "'");
}

std::vector<int> to_int_list(const std::string& s) {
  std::vector<int> out;
  if (trim(s).empty()) return out;
  for (const auto& p : split(s, ',')) out.push_back(to_int(p));
  return out;
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

std::string from_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string from_seeds(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define TCE_REAL(key, field)                                                        \
  Key { key, [](RunConfig& c, const std::string& v) { c.field = parse_double(v); }, \
        [](const RunConfig& c) { return format_double(c.field); } }
#define TCE_INT(key, field)                                                    \
  Key { key, [](RunConfig& c, const std::string& v) { c.field = to_int(v); }, \
        [](const RunConfig& c) { return std::to_string(c.field); } }
#define TCE_BOOL(key, field)                                                    \
  Key { key, [](RunConfig& c, const std::string& v) { c.field = to_bool(v); }, \
        [](const RunConfig& c) { return from_bool(c.field); } }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"run.algorithm", [](RunConfig& c, const std::string& v) { c.trainer.algorithm = parse_algorithm(v); },
          [](const RunConfig& c) { return to_string(c.trainer.algorithm); }},
      Key{"run.env",
          [](RunConfig& c, const std::string& v) {
            const auto names = env_names();
            if (std::find(names.begin(), names.end(), v) == names.end()) throw ConfigError("unknown environment '" + v + "'");
            c.trainer.env = v;
          },
          [](const RunConfig& c) { return c.trainer.env; }},
      Key{"run.seeds", [](RunConfig& c, const std::string& v) { c.seeds = parse_seed_list(v); },
          [](const RunConfig& c) { return from_seeds(c.seeds); }},
      TCE_INT("run.iterations", trainer.iterations),
      TCE_INT("run.episodes_per_iteration", trainer.episodes_per_iteration),
      TCE_INT("run.eval_episodes", trainer.eval_episodes),
      Key{"run.output", [](RunConfig& c, const std::string& v) { c.output = v; },
          [](const RunConfig& c) { return c.output; }},
      TCE_REAL("env.dt", trainer.env_options.dt),
      TCE_INT("env.horizon", trainer.env_options.horizon),
      TCE_REAL("env.max_accel", trainer.env_options.max_accel),
      TCE_BOOL("env.random_initial_position", trainer.env_options.random_initial_position),
      TCE_REAL("env.success_radius", trainer.env_options.success_radius),
      TCE_REAL("env.kp", trainer.kp),
      TCE_REAL("env.kd", trainer.kd),
      TCE_INT("mp.num_basis", trainer.mp.num_basis),
      TCE_REAL("mp.alpha", trainer.mp.alpha),
      TCE_REAL("mp.alpha_x", trainer.mp.alpha_x),
      TCE_REAL("mp.basis_overlap", trainer.mp.basis_overlap),
      TCE_INT("mp.integration_substeps", trainer.mp.integration_substeps),
      TCE_REAL("mp.forcing_gain", trainer.mp.forcing_gain),
      TCE_REAL("trust_region.eps_mean", trainer.bounds.eps_mean),
      TCE_REAL("trust_region.eps_cov", trainer.bounds.eps_cov),
      TCE_REAL("trust_region.reg_weight", trainer.bounds.reg_weight),
      TCE_REAL("gae.gamma", trainer.gae.gamma),
      TCE_REAL("gae.lam", trainer.gae.lam),
      TCE_REAL("ppo.gamma", trainer.step_gae.gamma),
      TCE_REAL("ppo.lam", trainer.step_gae.lam),
      TCE_REAL("ppo.clip_eps", trainer.clip_eps),
      TCE_INT("learner.k", trainer.segments),
      Key{"learner.segment_advantage",
          [](RunConfig& c, const std::string& v) {
            if (v == "direct") {
              c.trainer.segment_advantage = SegmentAdvantageMode::direct;
            } else if (v == "gae") {
              c.trainer.segment_advantage = SegmentAdvantageMode::gae;
            } else {
              throw ConfigError("expected direct or gae, got '" + v + "'");
            }
          },
          [](const RunConfig& c) {
            return std::string(c.trainer.segment_advantage == SegmentAdvantageMode::direct ? "direct" : "gae");
          }},
      TCE_BOOL("learner.normalize_advantages", trainer.normalize_advantages),
      TCE_REAL("learner.noise_std", trainer.noise.noise_std),
      TCE_REAL("learner.reward_scale", trainer.reward_scale),
      TCE_REAL("learner.policy_lr", trainer.policy_opt.adam.lr),
      TCE_REAL("learner.value_lr", trainer.value_adam.lr),
      TCE_INT("learner.policy_epochs", trainer.policy_opt.epochs),
      TCE_BOOL("learner.lr_decay", trainer.lr_decay),
      TCE_INT("learner.value_epochs", trainer.value_epochs),
      TCE_REAL("learner.max_grad_norm", trainer.policy_opt.max_grad_norm),
      Key{"policy.hidden", [](RunConfig& c, const std::string& v) { c.trainer.policy_hidden = to_int_list(v); },
          [](const RunConfig& c) { return from_int_list(c.trainer.policy_hidden); }},
      Key{"policy.value_hidden", [](RunConfig& c, const std::string& v) { c.trainer.value_hidden = to_int_list(v); },
          [](const RunConfig& c) { return from_int_list(c.trainer.value_hidden); }},
      Key{"policy.activation", [](RunConfig& c, const std::string& v) { c.trainer.activation = parse_activation(v); },
          [](const RunConfig& c) { return to_string(c.trainer.activation); }},
      TCE_REAL("policy.initial_std", trainer.initial_std),
      TCE_REAL("policy.weight_scale", trainer.weight_scale),
      TCE_BOOL("policy.state_dependent_cov", trainer.state_dependent_cov),
  };
  return table;
}

#undef TCE_REAL
#undef TCE_INT
#undef TCE_BOOL

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split(text, ',')) {
    const auto dash = part.find('-');
    if (dash != std::string::npos && dash > 0) {
      const long long lo = to_integer(trim(part.substr(0, dash)));
      const long long hi = to_integer(trim(part.substr(dash + 1)));
      if (lo < 0 || hi < lo) throw ArgumentError("invalid seed range '" + part + "'");
      for (long long s = lo; s <= hi; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    } else {
      const long long s = to_integer(part);
      if (s < 0) throw ArgumentError("seeds must be non-negative");
      seeds.push_back(static_cast<std::uint64_t>(s));
    }
  }
  if (seeds.empty()) throw ArgumentError("empty seed list");
  return seeds;
}

ConfigEntries parse_config_text(const std::string& text, const std::string& source) {
  ConfigEntries entries;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto hash = line.find_first_of("#;");
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']' || body.size() < 3) throw ConfigError(where + ": malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ConfigError(where + ": empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (entries.count(full) != 0) throw ConfigError(where + ": duplicate key '" + full + "'");
    entries[full] = {trim(body.substr(eq + 1)), where};
  }
  return entries;
}

void apply_override(ConfigEntries& entries, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set " + assignment + ": expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("--set " + assignment + ": empty key");
  entries[key] = {trim(assignment.substr(eq + 1)), "--set " + key};
}

RunConfig build_run_config(const ConfigEntries& entries) {
  RunConfig config;
  const auto& table = keys();
  for (const auto& [name, entry] : entries) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == name; });
    if (it == table.end()) throw ConfigError(entry.origin + ": unknown key '" + name + "'");
    try {
      it->set(config, entry.value);
    } catch (const Error& e) {
      throw ConfigError(entry.origin + ": " + name + ": " + e.what());
    }
  }
  try {
    config.trainer.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return config;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ConfigEntries entries = parse_config_text(buffer.str(), path);
  for (const auto& o : overrides) apply_override(entries, o);
  return build_run_config(entries);
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : keys()) {
    const auto dot = k.name.find('.');
    const std::string sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << k.name.substr(dot + 1) << " = " << k.get(config) << '\n';
  }
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> names;
  for (const auto& k : keys()) names.push_back(k.name);
  return names;
}

}  // namespace tce
