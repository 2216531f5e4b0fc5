#pragma once

#include "sslr/frame.hpp"
#include "sslr/signal.hpp"

#include <complex>
#include <cstddef>

namespace sslr {

using RealTfMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Non-negative weights w_ij of ||z||_{W,1} = sum w_ij |z_ij|, N x B.
class WeightMatrix {
 public:
  explicit WeightMatrix(RealTfMatrix values);
  static WeightMatrix uniform(std::size_t num_sources, std::size_t num_coeffs,
                              double value = 1.0);

  const RealTfMatrix& values() const { return values_; }
  std::size_t rows() const { return std::size_t(values_.rows()); }
  std::size_t cols() const { return std::size_t(values_.cols()); }

 private:
  RealTfMatrix values_;
};

class RankBudget {
 public:
  explicit RankBudget(std::size_t r) : r_(r) {
    if (r_ < 1) throw ConfigError("rank budget must be >= 1");
  }
  std::size_t value() const { return r_; }

 private:
  std::size_t r_;
};

/// Frame residual tolerated by the analysis prox before refusing to run.
inline constexpr double kTightFrameTolerance = 1e-8;
/// Magnitudes at or below this carry phase 1.
inline constexpr double kZeroMagnitude = 1e-300;

/// (z / |z|) (|z| - lambda)^+.
std::complex<double> soft_threshold(std::complex<double> z, double lambda);

/// ||s Psi||_{W,1} for every source row of s.
double weighted_l1_norm(const TfTensor& coeffs, const WeightMatrix& w);

/// s + nu^-1 (soft(s Psi, nu gamma W) - s Psi) Psi^*, refused unless the
/// frame is tight. This is the prox of gamma ||. Psi||_{W,1} when the frame
/// is a basis (R = 1) and the weights are symmetric in f <-> L - f; on a
/// redundant frame it is the prox of a different, smaller convex function.
SignalMatrix prox_weighted_l1_analysis(const SignalMatrix& s,
                                       const WeightMatrix& w, double gamma,
                                       const StftConfig& cfg);
MultichannelSignal prox_weighted_l1_analysis(const MultichannelSignal& s,
                                             const WeightMatrix& w,
                                             double gamma,
                                             const StftConfig& cfg);

/// center + min(1, eps / ||z - center||) (z - center).
SignalMatrix project_l2_ball(const SignalMatrix& z, const SignalMatrix& center,
                             double eps);
MultichannelSignal project_l2_ball(const MultichannelSignal& z,
                                   const MultichannelSignal& center,
                                   double eps);

/// truncated_svd switches to a Gram-matrix eigensolver when
/// max(rows, cols) >= kGramAspectRatio * min(rows, cols).
inline constexpr Eigen::Index kGramAspectRatio = 8;

/// Nearest matrix of rank <= r in Frobenius norm (Eckart-Young).
Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& m, RankBudget r);

/// Nearest complex matrix whose element-wise magnitude has rank <= r: the
/// truncated SVD of |z| with the phases of z reattached. Negative entries of
/// the truncated magnitude are clipped to 0. When `low_rank_magnitude` is
/// given it receives the unclipped rank-r magnitude.
Eigen::MatrixXcd project_lowrank_magnitude(
    const Eigen::MatrixXcd& z, RankBudget r,
    Eigen::MatrixXd* low_rank_magnitude = nullptr);

/// Per-source low-rank magnitude projection of s Psi, before synthesis.
TfTensor project_rank_constraint_tf(const SignalMatrix& s, RankBudget r,
                                    const StftConfig& cfg);

/// Signal-domain rank projection: per source, STFT, low-rank magnitude
/// projection, then ISTFT / nu. Because the projected coefficients are
/// generally not a consistent STFT, the result's own spectrogram is only
/// approximately rank r.
SignalMatrix project_rank_constraint_set(const SignalMatrix& s, RankBudget r,
                                         const StftConfig& cfg);
MultichannelSignal project_rank_constraint_set(const MultichannelSignal& s,
                                               RankBudget r,
                                               const StftConfig& cfg);

}  // namespace sslr
