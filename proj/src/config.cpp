#include "marl/config.hpp"

#include "marl/csv.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace marl {

namespace {

struct RawValue {
  std::string text;
  int line = 0;
};

using Section = std::map<std::string, RawValue>;

struct RawConfig {
  std::string origin;
  std::map<std::string, Section> sections;
  std::map<std::string, int> section_lines;

  bool has(const std::string& section) const {
    return sections.count(section) != 0;
  }
};

[[noreturn]] void fail(const std::string& origin, int line,
                       const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"env",
     {"name", "agents", "actions", "payoff", "levers", "episode_limit",
      "cue_noise", "width", "height", "predators", "sight_radius",
      "capture_reward", "step_cost", "shaping"}},
    {"algo", {"mixer", "memory", "lambda", "alpha"}},
    {"memory",
     {"table_capacity", "m_size", "projection_dim", "quantization",
      "use_projection"}},
    {"training",
     {"gamma", "lr", "batch", "buffer", "sync_period", "total_steps",
      "eval_interval", "eval_episodes", "epsilon_start", "epsilon_end",
      "epsilon_anneal", "agent_hidden", "mix_embed", "critic_hidden",
      "recurrent", "append_agent_id", "rms_decay", "rms_eps",
      "updates_per_episode"}},
    {"run", {"seeds", "out", "timing"}},
};

RawConfig tokenize(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (kKnownKeys.count(section) == 0)
        fail(origin, lineno, "unknown section [" + section + "]");
      if (raw.sections.count(section))
        fail(origin, lineno, "duplicate section [" + section + "]");
      raw.sections[section] = {};
      raw.section_lines[section] = lineno;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, lineno, "expected key = value");
    if (section.empty()) fail(origin, lineno, "key before any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, lineno, "empty key");
    if (value.empty()) fail(origin, lineno, "empty value for key '" + key + "'");
    Section& sec = raw.sections[section];
    if (sec.count(key))
      fail(origin, lineno, "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = {value, lineno};
  }
  return raw;
}

// take() removes recognised keys; whatever remains at the end is unknown.
std::optional<RawValue> take(RawConfig& raw, const std::string& section,
                             const std::string& key) {
  auto sit = raw.sections.find(section);
  if (sit == raw.sections.end()) return std::nullopt;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return std::nullopt;
  RawValue v = kit->second;
  sit->second.erase(kit);
  return v;
}

double parse_double(const RawConfig& raw, const RawValue& v,
                    const std::string& key) {
  double out = 0.0;
  const auto res =
      std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size())
    fail(raw.origin, v.line, key + ": not a number: '" + v.text + "'");
  return out;
}

long long parse_int(const RawConfig& raw, const RawValue& v,
                    const std::string& key) {
  long long out = 0;
  const auto res =
      std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size())
    fail(raw.origin, v.line, key + ": not an integer: '" + v.text + "'");
  return out;
}

std::uint64_t parse_u64(const RawConfig& raw, const RawValue& v,
                        const std::string& key) {
  std::uint64_t out = 0;
  const auto res =
      std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (res.ec != std::errc() || res.ptr != v.text.data() + v.text.size())
    fail(raw.origin, v.line,
         key + ": not a non-negative integer: '" + v.text + "'");
  return out;
}

bool parse_bool(const RawConfig& raw, const RawValue& v,
                const std::string& key) {
  if (v.text == "true" || v.text == "1") return true;
  if (v.text == "false" || v.text == "0") return false;
  fail(raw.origin, v.line, key + ": expected true/false: '" + v.text + "'");
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

template <typename T, typename Parse>
void set_if(RawConfig& raw, const std::string& section, const std::string& key,
            T& field, Parse parse) {
  if (auto v = take(raw, section, key)) field = parse(raw, *v, key);
}

EnvConfig interpret_env(RawConfig& raw) {
  if (!raw.has("env")) return climbing_game();
  const auto name = take(raw, "env", "name");
  if (!name)
    fail(raw.origin, raw.section_lines.at("env"), "env.name is required");

  const auto as_int = [](const RawConfig& r, const RawValue& v,
                         const std::string& k) {
    return static_cast<int>(parse_int(r, v, k));
  };
  const auto as_double = [](const RawConfig& r, const RawValue& v,
                            const std::string& k) {
    return parse_double(r, v, k);
  };

  if (name->text == "matrix_game") {
    MatrixGameConfig cfg = climbing_game();
    bool dims_changed = false;
    if (auto v = take(raw, "env", "agents")) {
      cfg.n_agents = as_int(raw, *v, "agents");
      dims_changed = true;
    }
    if (auto v = take(raw, "env", "actions")) {
      cfg.n_actions = as_int(raw, *v, "actions");
      dims_changed = true;
    }
    if (auto v = take(raw, "env", "payoff")) {
      cfg.payoff.clear();
      for (const std::string& tok : split_ws(v->text)) {
        double x = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
          fail(raw.origin, v->line, "payoff: not a number: '" + tok + "'");
        cfg.payoff.push_back(x);
      }
      double want = 1.0;
      for (int a = 0; a < cfg.n_agents; ++a) want *= cfg.n_actions;
      if (static_cast<double>(cfg.payoff.size()) != want)
        fail(raw.origin, v->line, "payoff: expected actions^agents entries");
    } else if (dims_changed && !(cfg.n_agents == 2 && cfg.n_actions == 3)) {
      fail(raw.origin, name->line,
           "payoff is required when agents/actions differ from the default");
    }
    return cfg;
  }
  if (name->text == "lever_coordination") {
    LeverConfig cfg;
    set_if(raw, "env", "agents", cfg.n_agents, as_int);
    set_if(raw, "env", "levers", cfg.n_levers, as_int);
    set_if(raw, "env", "episode_limit", cfg.episode_limit, as_int);
    set_if(raw, "env", "cue_noise", cfg.cue_noise, as_double);
    return cfg;
  }
  if (name->text == "predator_prey_grid") {
    PredatorPreyConfig cfg;
    set_if(raw, "env", "width", cfg.width, as_int);
    set_if(raw, "env", "height", cfg.height, as_int);
    set_if(raw, "env", "predators", cfg.n_predators, as_int);
    set_if(raw, "env", "sight_radius", cfg.sight_radius, as_int);
    set_if(raw, "env", "episode_limit", cfg.episode_limit, as_int);
    set_if(raw, "env", "capture_reward", cfg.capture_reward, as_double);
    set_if(raw, "env", "step_cost", cfg.step_cost, as_double);
    set_if(raw, "env", "shaping", cfg.shaping, as_double);
    return cfg;
  }
  fail(raw.origin, name->line, "unknown env name '" + name->text + "'");
}

void interpret_algo(RawConfig& raw, TrainerConfig& t) {
  if (auto v = take(raw, "algo", "mixer")) {
    if (v->text == "vdn") t.mixer = MixerKind::vdn;
    else if (v->text == "qmix") t.mixer = MixerKind::qmix;
    else if (v->text == "wqmix") t.mixer = MixerKind::wqmix;
    else fail(raw.origin, v->line, "mixer: expected vdn|qmix|wqmix");
  }
  if (auto v = take(raw, "algo", "memory")) {
    if (v->text == "none") t.memory = MemoryMode::none;
    else if (v->text == "sem") t.memory = MemoryMode::sem;
    else if (v->text == "saem") t.memory = MemoryMode::saem;
    else fail(raw.origin, v->line, "memory: expected none|sem|saem");
  }
  if (auto v = take(raw, "algo", "lambda")) {
    t.lambda = parse_double(raw, *v, "lambda");
    if (!(t.lambda >= 0.0 && t.lambda <= 1.0))
      fail(raw.origin, v->line,
           "lambda = " + v->text + " outside [0,1]");
  }
  if (auto v = take(raw, "algo", "alpha")) {
    t.alpha = parse_double(raw, *v, "alpha");
    if (!(t.alpha > 0.0 && t.alpha <= 1.0))
      fail(raw.origin, v->line, "alpha = " + v->text + " outside (0,1]");
  }
}

void interpret_memory(RawConfig& raw, TrainerConfig& t) {
  const auto as_size = [](const RawConfig& r, const RawValue& v,
                          const std::string& k) -> std::size_t {
    return static_cast<std::size_t>(parse_u64(r, v, k));
  };
  set_if(raw, "memory", "table_capacity", t.table_capacity, as_size);
  set_if(raw, "memory", "m_size", t.m_capacity, as_size);
  if (auto v = take(raw, "memory", "projection_dim"))
    t.projection_dim = static_cast<int>(parse_int(raw, *v, "projection_dim"));
  if (auto v = take(raw, "memory", "quantization")) {
    t.key_resolution = parse_double(raw, *v, "quantization");
    if (!(t.key_resolution > 0.0))
      fail(raw.origin, v->line, "quantization must be positive");
  }
  if (auto v = take(raw, "memory", "use_projection"))
    t.use_projection = parse_bool(raw, *v, "use_projection");
}

void interpret_training(RawConfig& raw, TrainerConfig& t) {
  const auto as_int = [](const RawConfig& r, const RawValue& v,
                         const std::string& k) {
    return static_cast<int>(parse_int(r, v, k));
  };
  const auto as_ll = [](const RawConfig& r, const RawValue& v,
                        const std::string& k) { return parse_int(r, v, k); };
  const auto as_double = [](const RawConfig& r, const RawValue& v,
                            const std::string& k) {
    return parse_double(r, v, k);
  };
  const auto as_bool = [](const RawConfig& r, const RawValue& v,
                          const std::string& k) { return parse_bool(r, v, k); };

  set_if(raw, "training", "gamma", t.gamma, as_double);
  set_if(raw, "training", "lr", t.lr, as_double);
  set_if(raw, "training", "batch", t.batch_size, as_int);
  set_if(raw, "training", "buffer", t.buffer_capacity, as_int);
  set_if(raw, "training", "sync_period", t.sync_period, as_int);
  set_if(raw, "training", "total_steps", t.total_steps, as_ll);
  set_if(raw, "training", "eval_interval", t.eval_interval, as_ll);
  set_if(raw, "training", "eval_episodes", t.eval_episodes, as_int);
  set_if(raw, "training", "epsilon_start", t.epsilon.start, as_double);
  set_if(raw, "training", "epsilon_end", t.epsilon.end, as_double);
  set_if(raw, "training", "epsilon_anneal", t.epsilon.anneal_steps, as_ll);
  set_if(raw, "training", "agent_hidden", t.agent_hidden, as_int);
  set_if(raw, "training", "mix_embed", t.mix_embed, as_int);
  set_if(raw, "training", "critic_hidden", t.critic_hidden, as_int);
  set_if(raw, "training", "recurrent", t.recurrent, as_bool);
  set_if(raw, "training", "append_agent_id", t.append_agent_id, as_bool);
  set_if(raw, "training", "rms_decay", t.rms_decay, as_double);
  set_if(raw, "training", "rms_eps", t.rms_eps, as_double);
  set_if(raw, "training", "updates_per_episode", t.updates_per_episode, as_int);
}

void interpret_run(RawConfig& raw, ExperimentConfig& cfg) {
  if (auto v = take(raw, "run", "seeds")) {
    cfg.seeds.clear();
    for (const std::string& tok : split_ws(v->text)) {
      std::uint64_t s = 0;
      const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), s);
      if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        fail(raw.origin, v->line, "seeds: not an integer: '" + tok + "'");
      cfg.seeds.push_back(s);
    }
    if (cfg.seeds.empty())
      fail(raw.origin, v->line, "seeds: at least one seed required");
  }
  if (auto v = take(raw, "run", "out")) cfg.out_dir = v->text;
  if (auto v = take(raw, "run", "timing"))
    cfg.timing = parse_bool(raw, *v, "timing");
}

void reject_leftovers(const RawConfig& raw) {
  for (const auto& [section, keys] : raw.sections)
    for (const auto& [key, value] : keys)
      fail(raw.origin, value.line,
           "unknown key '" + key + "' in [" + section + "]");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  RawConfig raw = tokenize(text, origin);
  ExperimentConfig cfg;
  cfg.env = interpret_env(raw);
  interpret_algo(raw, cfg.trainer);
  interpret_memory(raw, cfg.trainer);
  interpret_training(raw, cfg.trainer);
  interpret_run(raw, cfg);
  reject_leftovers(raw);
  try {
    cfg.trainer.validate();
    std::visit([](const auto& e) { e.validate(); }, cfg.env);
  } catch (const ConfigError& err) {
    throw ConfigError(origin + ": " + err.what());
  }
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

namespace {

void write_env(std::ostream& out, const EnvConfig& env) {
  out << "[env]\n";
  if (const auto* m = std::get_if<MatrixGameConfig>(&env)) {
    out << "name = matrix_game\n";
    out << "agents = " << m->n_agents << "\n";
    out << "actions = " << m->n_actions << "\n";
    out << "payoff =";
    for (double p : m->payoff) out << " " << format_double(p);
    out << "\n";
  } else if (const auto* l = std::get_if<LeverConfig>(&env)) {
    out << "name = lever_coordination\n";
    out << "agents = " << l->n_agents << "\n";
    out << "levers = " << l->n_levers << "\n";
    out << "episode_limit = " << l->episode_limit << "\n";
    out << "cue_noise = " << format_double(l->cue_noise) << "\n";
  } else {
    const auto& p = std::get<PredatorPreyConfig>(env);
    out << "name = predator_prey_grid\n";
    out << "width = " << p.width << "\n";
    out << "height = " << p.height << "\n";
    out << "predators = " << p.n_predators << "\n";
    out << "sight_radius = " << p.sight_radius << "\n";
    out << "episode_limit = " << p.episode_limit << "\n";
    out << "capture_reward = " << format_double(p.capture_reward) << "\n";
    out << "step_cost = " << format_double(p.step_cost) << "\n";
    out << "shaping = " << format_double(p.shaping) << "\n";
  }
}

}  // namespace

void write_resolved_config(std::ostream& out, const ExperimentConfig& cfg) {
  const TrainerConfig& t = cfg.trainer;
  write_env(out, cfg.env);
  out << "\n[algo]\n";
  out << "mixer = " << to_string(t.mixer) << "\n";
  out << "memory = " << to_string(t.memory) << "\n";
  out << "lambda = " << format_double(t.lambda) << "\n";
  out << "alpha = " << format_double(t.alpha) << "\n";
  out << "\n[memory]\n";
  out << "table_capacity = " << t.table_capacity << "\n";
  out << "m_size = " << t.m_capacity << "\n";
  out << "projection_dim = " << t.projection_dim << "\n";
  out << "quantization = " << format_double(t.key_resolution) << "\n";
  out << "use_projection = " << (t.use_projection ? "true" : "false") << "\n";
  out << "\n[training]\n";
  out << "gamma = " << format_double(t.gamma) << "\n";
  out << "lr = " << format_double(t.lr) << "\n";
  out << "batch = " << t.batch_size << "\n";
  out << "buffer = " << t.buffer_capacity << "\n";
  out << "sync_period = " << t.sync_period << "\n";
  out << "total_steps = " << t.total_steps << "\n";
  out << "eval_interval = " << t.eval_interval << "\n";
  out << "eval_episodes = " << t.eval_episodes << "\n";
  out << "epsilon_start = " << format_double(t.epsilon.start) << "\n";
  out << "epsilon_end = " << format_double(t.epsilon.end) << "\n";
  out << "epsilon_anneal = " << t.epsilon.anneal_steps << "\n";
  out << "agent_hidden = " << t.agent_hidden << "\n";
  out << "mix_embed = " << t.mix_embed << "\n";
  out << "critic_hidden = " << t.critic_hidden << "\n";
  out << "recurrent = " << (t.recurrent ? "true" : "false") << "\n";
  out << "append_agent_id = " << (t.append_agent_id ? "true" : "false") << "\n";
  out << "rms_decay = " << format_double(t.rms_decay) << "\n";
  out << "rms_eps = " << format_double(t.rms_eps) << "\n";
  out << "updates_per_episode = " << t.updates_per_episode << "\n";
  out << "\n[run]\n";
  out << "seeds =";
  for (std::uint64_t s : cfg.seeds) out << " " << s;
  out << "\n";
  if (!cfg.out_dir.empty()) out << "out = " << cfg.out_dir << "\n";
  out << "timing = " << (cfg.timing ? "true" : "false") << "\n";
}

}  // namespace marl
