#pragma once

#include "sslr/frame.hpp"
#include "sslr/mixing.hpp"
#include "sslr/prox.hpp"
#include "sslr/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sslr {

struct SolverConfig {
  double eps = 1e-4;              // data-fidelity radius
  std::size_t rank = 10;          // spectrogram rank budget
  bool rank_enabled = true;       // false: SSRA (no rank term)
  std::optional<double> gamma;    // empty: auto_gamma of the matched filter
  std::optional<double> tau;      // empty: 0.9 gamma / ||K||^2
  std::size_t max_inner_iters = 500;
  double inner_tol = 1e-5;
  std::size_t reweight_rounds = 5;
  std::optional<double> reweight_floor;  // empty: 1e-3 max|s Psi| of round 0
  bool reweight_enabled = true;
  std::uint64_t seed = 0;
  std::size_t norm_iterations = 200;

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

/// Safety factor applied to the power-iteration estimate of ||A||.
inline constexpr double kNormSafety = 1.01;
/// Fraction of the step bound used by the automatic tau.
inline constexpr double kTauFraction = 0.9;
/// Relative floor of the automatic reweighting offset.
inline constexpr double kReweightFloorFraction = 1e-3;
/// Threshold scale of the automatic gamma, in RMS coefficient magnitudes.
inline constexpr double kGammaScale = 10.0;

/// Upper estimate of ||K||^2 = ||Id||^2 + ||A||^2 + ||Id||^2.
double k_norm_sq(double mixing_norm_estimate);
double auto_tau(double gamma, double mixing_norm_estimate);
/// kGammaScale rms|s Psi| / nu, so that the first-round threshold nu gamma
/// sits at kGammaScale RMS coefficient magnitudes; 1 for a silent s.
double auto_gamma(const SignalMatrix& s, const StftConfig& stft_cfg);

struct IterationRecord {
  std::size_t iter = 0;
  double residual = 0.0;     // ||x - A s||
  double objective = 0.0;    // ||s Psi||_{W,1}
  double s_change = 0.0;     // ||s_k - s_{k-1}|| / ||s_{k-1}||
  double rank_excess = 0.0;  // max_n spectrogram energy beyond rank r, relative
  double wall_ms = 0.0;
};

struct IterationDiagnostics {
  std::vector<IterationRecord> records;
  double tau = 0.0;
  bool converged = false;

  std::size_t iterations() const { return records.size(); }
};

/// Writes iter,residual,objective,s_change,rank_excess,wall_ms rows.
std::string diagnostics_csv(const IterationDiagnostics& diagnostics);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, IterationDiagnostics diagnostics)
      : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}
  const IterationDiagnostics& diagnostics() const { return diagnostics_; }

 private:
  IterationDiagnostics diagnostics_;
};

/// One f_i(L_i s) of the product-space splitting.
struct SplittingTerm {
  std::function<SignalMatrix(const SignalMatrix&)> apply;    // L_i
  std::function<SignalMatrix(const SignalMatrix&)> adjoint;  // L_i^*
  std::function<SignalMatrix(const SignalMatrix&)> prox;     // prox_{gamma f_i}
};

struct SolverState {
  SignalMatrix s;
  std::vector<SignalMatrix> z;  // scaled duals, shaped like L_i s
  std::vector<SignalMatrix> y;  // last prox outputs
  std::size_t iter = 0;
};

/// Preconditioned simultaneous-direction method of multipliers:
///   y_i <- prox_{gamma f_i}(L_i s + z_i)
///   z_i' <- z_i + L_i s - y_i
///   s <- s - tau / (gamma I) sum_i L_i^*(2 z_i' - z_i)
class Psdmm {
 public:
  Psdmm(std::vector<SplittingTerm> terms, SignalMatrix s0, double gamma,
        double tau);

  /// One sweep; returns the relative change of s. Throws DivergenceError
  /// (without diagnostics) on a non-finite iterate.
  double step();

  const SolverState& state() const { return state_; }
  /// L_i applied to the current s.
  const std::vector<SignalMatrix>& mapped() const { return mapped_; }

 private:
  std::vector<SplittingTerm> terms_;
  SolverState state_;
  std::vector<SignalMatrix> mapped_;
  double gamma_;
  double tau_;
};

/// Mixing operator for length-T signals with its norm estimate.
struct MixingModel {
  MixingModel(const FilterBank& filters, std::size_t signal_len,
              std::size_t norm_iterations, std::uint64_t seed);

  ConvolutiveMixer mixer;
  double norm_estimate;
};

struct SolveOutput {
  SignalMatrix sources;
  IterationDiagnostics diagnostics;
};

/// Weighted analysis-l1 solve under ||x - A s|| <= eps and, when enabled,
/// the spectrogram rank constraint.
SolveOutput psdmm_solve(const MixingModel& model, const SignalMatrix& x,
                        const WeightMatrix& w, const SolverConfig& cfg,
                        const StftConfig& stft_cfg, const SignalMatrix& s0);
SolveOutput psdmm_solve(const MultichannelSignal& x, const FilterBank& filters,
                        const WeightMatrix& w, const SolverConfig& cfg,
                        const StftConfig& stft_cfg,
                        const MultichannelSignal& s0);

/// w_ij = 1 / (|(s Psi)_ij| + floor).
WeightMatrix weight_update(const SignalMatrix& s, const StftConfig& stft_cfg,
                           double floor);

/// A^*(x) / max(1, ||A||_est^2).
SignalMatrix matched_filter_start(const MixingModel& model,
                                  const SignalMatrix& x);

struct SeparationResult {
  MultichannelSignal estimates;
  std::vector<IterationDiagnostics> rounds;
  std::vector<SignalMatrix> round_estimates;  // s after each round
  double reweight_floor = 0.0;                // 0 when never reweighted
  SolverConfig solver_config;
  std::size_t window_len = 0;
  std::size_t redundancy = 0;
  std::optional<std::vector<double>> sdr_per_source;

  std::size_t total_iterations() const;
};

/// Reweighted separation. Round 0 starts from the matched filter with w = 1;
/// every later round warm-starts from the previous solution with weights
/// recomputed from it and rescaled to unit mean (the minimiser of each round
/// does not depend on the scale). An unset gamma is resolved once from the
/// matched filter and recorded in solver_config. With rank disabled this is
/// SSRA.
SeparationResult sslr_separate(const MultichannelSignal& x,
                               const FilterBank& filters,
                               const SolverConfig& cfg,
                               const StftConfig& stft_cfg);

}  // namespace sslr
