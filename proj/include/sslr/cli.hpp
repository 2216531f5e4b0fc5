#pragma once

#include "sslr/eval.hpp"
#include "sslr/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace sslr {

enum class Command { Separate, Benchmark, Selftest, GenFilters, Synth };

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitIo = 2,
  kExitDivergence = 3,
  kExitSelftest = 4,
  kExitBenchmarkPartial = 5,
};

std::string command_name(Command c);

struct BenchmarkSpec {
  Scenario base;                         // shared scenario settings
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::size_t> num_sources{3};
  std::vector<std::string> methods;      // empty: every default method

  std::vector<Scenario> scenarios() const;
};

struct GeneratorSpec {
  std::size_t num_mics = 2;
  std::size_t num_sources = 3;
  std::size_t num_samples = 16000;
  double sample_rate = 8000.0;
  std::size_t filter_len = 800;
  double filter_decay = 200.0;
  std::size_t source_rank = 5;
  std::uint64_t seed = 1;
};

struct RunConfig {
  Command command = Command::Selftest;
  std::filesystem::path mixture;
  std::filesystem::path filters;
  std::vector<std::filesystem::path> truth;
  std::filesystem::path out = "out";
  SolverConfig solver;
  std::size_t window_len = 1024;
  std::size_t redundancy = 2;
  BenchmarkSpec benchmark;
  GeneratorSpec generator;
  int verbosity = 1;

  /// Throws ConfigError; does not touch the filesystem.
  void validate() const;
};

/// JSON text of every RunConfig field; `load_config` reads it back.
std::string manifest_json(const RunConfig& cfg);
RunConfig parse_config_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Flags override the --config file. Returns false (with usage already
/// printed to `out`) when the process should exit with `exit_code`.
bool parse_command_line(int argc, const char* const* argv, RunConfig& cfg,
                        int& exit_code, std::ostream& out, std::ostream& err);

int cmd_separate(const RunConfig& cfg, std::ostream& log);
int cmd_benchmark(const RunConfig& cfg, std::ostream& log);
int cmd_selftest(const RunConfig& cfg, std::ostream& log);
int cmd_gen_filters(const RunConfig& cfg, std::ostream& log);
int cmd_synth(const RunConfig& cfg, std::ostream& log);

/// Parses, dispatches and maps exceptions to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

struct SelfTestCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed() const { return residual < tolerance; }
};

/// Adjoint, tight-frame, Parseval, prox and projection invariants at the
/// given STFT size.
std::vector<SelfTestCheck> run_selftest(std::size_t window_len,
                                        std::size_t redundancy,
                                        std::uint64_t seed);

}  // namespace sslr
