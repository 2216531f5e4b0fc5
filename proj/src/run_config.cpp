#include "sslr/cli.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sslr {

using nlohmann::json;

namespace {

const std::map<std::string, Command>& command_table() {
  static const std::map<std::string, Command> table{
      {"separate", Command::Separate},     {"benchmark", Command::Benchmark},
      {"selftest", Command::Selftest},     {"gen-filters", Command::GenFilters},
      {"synth", Command::Synth}};
  return table;
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    dst.reset();
    return;
  }
  T v{};
  read(j, key, v);
  dst = v;
}

json solver_json(const SolverConfig& c) {
  return {{"eps", c.eps},
          {"rank", c.rank},
          {"rank_enabled", c.rank_enabled},
          {"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
          {"tau", c.tau ? json(*c.tau) : json(nullptr)},
          {"max_inner_iters", c.max_inner_iters},
          {"inner_tol", c.inner_tol},
          {"reweight_rounds", c.reweight_rounds},
          {"reweight_floor", c.reweight_floor ? json(*c.reweight_floor) : json(nullptr)},
          {"reweight_enabled", c.reweight_enabled},
          {"seed", c.seed},
          {"norm_iterations", c.norm_iterations}};
}

void solver_from(const json& j, SolverConfig& c) {
  reject_unknown(j,
                 {"eps", "rank", "rank_enabled", "gamma", "tau",
                  "max_inner_iters", "inner_tol", "reweight_rounds",
                  "reweight_floor", "reweight_enabled", "seed",
                  "norm_iterations"},
                 "solver");
  read(j, "eps", c.eps);
  read(j, "rank", c.rank);
  read(j, "rank_enabled", c.rank_enabled);
  read_optional(j, "gamma", c.gamma);
  read_optional(j, "tau", c.tau);
  read(j, "max_inner_iters", c.max_inner_iters);
  read(j, "inner_tol", c.inner_tol);
  read(j, "reweight_rounds", c.reweight_rounds);
  read_optional(j, "reweight_floor", c.reweight_floor);
  read(j, "reweight_enabled", c.reweight_enabled);
  read(j, "seed", c.seed);
  read(j, "norm_iterations", c.norm_iterations);
}

json scenario_json(const Scenario& s) {
  return {{"id", s.id},
          {"num_mics", s.num_mics},
          {"num_samples", s.num_samples},
          {"sample_rate", s.sample_rate},
          {"filter_len", s.filter_len},
          {"filter_decay", s.filter_decay},
          {"source_rank", s.source_rank},
          {"rank_sweep", s.rank_sweep}};
}

void scenario_from(const json& j, Scenario& s) {
  reject_unknown(j,
                 {"id", "num_mics", "num_samples", "sample_rate", "filter_len",
                  "filter_decay", "source_rank", "rank_sweep"},
                 "benchmark.scenario");
  read(j, "id", s.id);
  read(j, "num_mics", s.num_mics);
  read(j, "num_samples", s.num_samples);
  read(j, "sample_rate", s.sample_rate);
  read(j, "filter_len", s.filter_len);
  read(j, "filter_decay", s.filter_decay);
  read(j, "source_rank", s.source_rank);
  read(j, "rank_sweep", s.rank_sweep);
}

json generator_json(const GeneratorSpec& g) {
  return {{"num_mics", g.num_mics},       {"num_sources", g.num_sources},
          {"num_samples", g.num_samples}, {"sample_rate", g.sample_rate},
          {"filter_len", g.filter_len},   {"filter_decay", g.filter_decay},
          {"source_rank", g.source_rank}, {"seed", g.seed}};
}

void generator_from(const json& j, GeneratorSpec& g) {
  reject_unknown(j,
                 {"num_mics", "num_sources", "num_samples", "sample_rate",
                  "filter_len", "filter_decay", "source_rank", "seed"},
                 "generator");
  read(j, "num_mics", g.num_mics);
  read(j, "num_sources", g.num_sources);
  read(j, "num_samples", g.num_samples);
  read(j, "sample_rate", g.sample_rate);
  read(j, "filter_len", g.filter_len);
  read(j, "filter_decay", g.filter_decay);
  read(j, "source_rank", g.source_rank);
  read(j, "seed", g.seed);
}

}  // namespace

std::string command_name(Command c) {
  for (const auto& [name, value] : command_table())
    if (value == c) return name;
  return "unknown";
}

std::vector<Scenario> BenchmarkSpec::scenarios() const {
  std::vector<Scenario> out;
  for (std::size_t n : num_sources) {
    for (std::uint64_t seed : seeds) {
      Scenario s = base;
      s.num_sources = n;
      s.seed = seed;
      s.id = base.id + "_N" + std::to_string(n) + "_s" + std::to_string(seed);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void RunConfig::validate() const {
  solver.validate();
  if (window_len < 1 || redundancy < 1 || window_len % redundancy != 0)
    throw ConfigError("window must be a positive multiple of redundancy");
  if (out.empty()) throw ConfigError("output directory must not be empty");
  if (command == Command::Separate) {
    if (mixture.empty()) throw ConfigError("separate: --mixture is required");
    if (filters.empty()) throw ConfigError("separate: --filters is required");
  }
  if (command == Command::Benchmark) {
    if (benchmark.seeds.empty() || benchmark.num_sources.empty())
      throw ConfigError("benchmark: seeds and num_sources must be non-empty");
    for (const Scenario& s : benchmark.scenarios()) s.validate();
  }
  if (command == Command::GenFilters || command == Command::Synth) {
    const GeneratorSpec& g = generator;
    if (g.num_mics < 1 || g.num_sources < 1 || g.num_samples < 1 ||
        g.filter_len < 1 || g.source_rank < 1)
      throw ConfigError("generator: sizes must be positive");
    if (!(g.filter_decay > 0.0) || !(g.sample_rate > 0.0))
      throw ConfigError("generator: decay and sample_rate must be positive");
  }
}

std::string manifest_json(const RunConfig& cfg) {
  std::vector<std::string> truth;
  for (const auto& p : cfg.truth) truth.push_back(p.string());
  json benchmark{{"scenario", scenario_json(cfg.benchmark.base)},
                 {"seeds", cfg.benchmark.seeds},
                 {"num_sources", cfg.benchmark.num_sources},
                 {"methods", cfg.benchmark.methods}};
  json j{{"command", command_name(cfg.command)},
         {"mixture", cfg.mixture.string()},
         {"filters", cfg.filters.string()},
         {"truth", truth},
         {"out", cfg.out.string()},
         {"solver", solver_json(cfg.solver)},
         {"stft", {{"window_len", cfg.window_len}, {"redundancy", cfg.redundancy}}},
         {"benchmark", benchmark},
         {"generator", generator_json(cfg.generator)},
         {"verbosity", cfg.verbosity}};
  return j.dump(2) + "\n";
}

RunConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  reject_unknown(j,
                 {"command", "mixture", "filters", "truth", "out", "solver",
                  "stft", "benchmark", "generator", "verbosity"},
                 "top level");
  RunConfig cfg;
  if (j.contains("command")) {
    std::string name;
    read(j, "command", name);
    auto it = command_table().find(name);
    if (it == command_table().end())
      throw ConfigError("config: unknown command '" + name + "'");
    cfg.command = it->second;
  }
  std::string path;
  if (j.contains("mixture")) read(j, "mixture", path), cfg.mixture = path;
  if (j.contains("filters")) read(j, "filters", path), cfg.filters = path;
  if (j.contains("out")) read(j, "out", path), cfg.out = path;
  std::vector<std::string> truth;
  read(j, "truth", truth);
  for (const auto& t : truth) cfg.truth.emplace_back(t);
  if (j.contains("solver")) solver_from(j.at("solver"), cfg.solver);
  if (j.contains("stft")) {
    const json& s = j.at("stft");
    reject_unknown(s, {"window_len", "redundancy"}, "stft");
    read(s, "window_len", cfg.window_len);
    read(s, "redundancy", cfg.redundancy);
  }
  if (j.contains("benchmark")) {
    const json& b = j.at("benchmark");
    reject_unknown(b, {"scenario", "seeds", "num_sources", "methods"}, "benchmark");
    if (b.contains("scenario")) scenario_from(b.at("scenario"), cfg.benchmark.base);
    read(b, "seeds", cfg.benchmark.seeds);
    read(b, "num_sources", cfg.benchmark.num_sources);
    read(b, "methods", cfg.benchmark.methods);
  }
  if (j.contains("generator")) generator_from(j.at("generator"), cfg.generator);
  read(j, "verbosity", cfg.verbosity);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_json(text.str());
}

}  // namespace sslr
