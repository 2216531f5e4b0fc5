#pragma once

#include "sslr/frame.hpp"
#include "sslr/signal.hpp"
#include "sslr/solver.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sslr {

/// SDR values are clamped to [-kSdrCapDb, kSdrCapDb].
inline constexpr double kSdrCapDb = 300.0;

/// Gain-only signal-to-distortion ratio in dB: the estimate is split into
/// its projection on `truth` and the remainder.
double sdr(std::span<const double> estimate, std::span<const double> truth);

/// One SDR per channel.
std::vector<double> sdr_per_channel(const SignalMatrix& estimates,
                                    const SignalMatrix& truth);

/// Synthetic sources with low-rank spectrograms: each channel is a sum of
/// `rank` bin-centred sinusoids, each under its own slowly varying raised-
/// cosine envelope, scaled to peak `amplitude`.
MultichannelSignal generate_lowrank_sources(std::size_t n, std::size_t t,
                                            std::size_t rank,
                                            std::uint64_t seed,
                                            const StftConfig& stft_cfg,
                                            double sample_rate = 8000.0,
                                            double amplitude = 1.0);

struct Scenario {
  std::string id = "scenario";
  std::uint64_t seed = 1;
  std::size_t num_mics = 2;     // M
  std::size_t num_sources = 3;  // N
  std::size_t num_samples = 16000;
  double sample_rate = 8000.0;
  std::size_t filter_len = 800;
  double filter_decay = 200.0;
  std::size_t source_rank = 5;
  double eps = 1e-4;
  std::vector<std::size_t> rank_sweep{5, 10, 20, 30};
  std::size_t window_len = 1024;
  std::size_t redundancy = 2;

  void validate() const;
  StftConfig stft_config() const;
};

struct Method {
  enum class Kind { MatchedFilter, Separation };
  std::string id;
  Kind kind = Kind::Separation;
  SolverConfig solver;  // eps is taken from the scenario
};

/// matched-filter baseline, SSRA, then SSLR at every r of the rank sweep.
std::vector<Method> default_methods(const std::vector<std::size_t>& rank_sweep,
                                    const SolverConfig& base);

/// Mixture realised for a scenario.
struct ScenarioData {
  MultichannelSignal sources;
  FilterBank filters;
  MultichannelSignal mixture;
};
ScenarioData realize_scenario(const Scenario& scenario);

struct BenchmarkRow {
  std::string scenario_id;
  std::string method_id;
  std::uint64_t seed = 0;
  std::size_t num_sources = 0;
  std::size_t num_mics = 0;
  std::size_t rank = 0;  // 0: no rank constraint
  double mean_sdr_db = 0.0;
  double std_sdr_db = 0.0;
  std::size_t iters = 0;
  std::uint64_t config_hash = 0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

/// Stable 64-bit FNV-1a hash of (scenario, method) settings.
std::uint64_t config_hash(const Scenario& scenario, const Method& method);

using BenchmarkProgress = std::function<void(const BenchmarkRow&)>;

/// Every (scenario, method) cell, in scenario-major order. A failing cell is
/// recorded with its error in `status` and the run continues.
std::vector<BenchmarkRow> run_benchmark(const std::vector<Scenario>& scenarios,
                                        const std::vector<Method>& methods,
                                        const BenchmarkProgress& progress = {});

/// Deterministic results table (no timing columns).
std::string benchmark_csv(const std::vector<BenchmarkRow>& rows);
/// scenario_id,method_id,wall_ms
std::string timings_csv(const std::vector<BenchmarkRow>& rows);
/// Mean +- std across scenarios of mean SDR, one line per (N, method).
std::string summary_table(const std::vector<BenchmarkRow>& rows);

}  // namespace sslr
