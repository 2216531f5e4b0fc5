#pragma once

#include "sslr/signal.hpp"

#include <complex>
#include <cstddef>
#include <vector>

namespace sslr {

/// Short-time Fourier frame for signals of a fixed length T.
///
/// Frames of `window_len` samples start every `hop = window_len / redundancy`
/// samples. The signal is embedded at offset `window_len - hop` inside a
/// zero-padded buffer so that every sample of [0, T) is covered by exactly
/// `redundancy` frames; synthesis restricts back to [0, T). Both maps are
/// mutual adjoints, so (stft, istft) is an exact adjoint pair.
///
/// Every frame is transformed by an unnormalized full-length DFT (F = L
/// two-sided bins). The frame constant nu of Psi Psi^* = nu Id is measured
/// at construction with an impulse probe rather than derived from the window.
class StftConfig {
 public:
  enum class Window { Cosine, Rectangular };

  StftConfig(std::size_t signal_len, std::vector<double> window,
             std::size_t redundancy);

  /// Square-root Hann window sin(pi (k + 0.5) / L).
  static StftConfig cosine(std::size_t signal_len, std::size_t window_len = 1024,
                           std::size_t redundancy = 2);
  static StftConfig rectangular(std::size_t signal_len, std::size_t window_len,
                                std::size_t redundancy = 1);
  static StftConfig make(Window kind, std::size_t signal_len,
                         std::size_t window_len, std::size_t redundancy);

  static std::vector<double> cosine_window(std::size_t window_len);

  std::size_t signal_len() const { return signal_len_; }
  std::size_t window_len() const { return window_len_; }
  std::size_t redundancy() const { return redundancy_; }
  std::size_t hop() const { return hop_; }
  std::size_t offset() const { return offset_; }
  std::size_t num_frames() const { return num_frames_; }
  std::size_t num_bins() const { return window_len_; }
  std::size_t num_coeffs() const { return num_frames_ * window_len_; }
  std::size_t padded_len() const {
    return (num_frames_ - 1) * hop_ + window_len_;
  }
  double frame_constant() const { return frame_constant_; }
  const std::vector<double>& window() const { return window_; }

  /// Residual of Psi Psi^* = nu Id on random probes, taken at construction.
  /// Cheap screening value; verify_tight_frame() is the exhaustive check.
  double probe_residual() const { return probe_residual_; }

 private:
  std::size_t signal_len_;
  std::size_t window_len_;
  std::size_t redundancy_;
  std::size_t hop_;
  std::size_t offset_;
  std::size_t num_frames_;
  std::vector<double> window_;
  double frame_constant_ = 0.0;
  double probe_residual_ = 0.0;
};

using TfMatrix =
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                  Eigen::RowMajor>;

/// STFT coefficients of N signals: N x B with B = Q * F. Row n stores the
/// Q x F coefficient matrix of source n column by column (index q + Q * f).
class TfTensor {
 public:
  TfTensor() = default;
  TfTensor(std::size_t num_sources, std::size_t num_frames,
           std::size_t num_bins);

  std::size_t num_sources() const { return std::size_t(coeffs_.rows()); }
  std::size_t num_frames() const { return num_frames_; }
  std::size_t num_bins() const { return num_bins_; }

  const TfMatrix& coeffs() const { return coeffs_; }
  TfMatrix& coeffs() { return coeffs_; }

  /// Q x F view of source n.
  Eigen::Map<Eigen::MatrixXcd> source(std::size_t n);
  Eigen::Map<const Eigen::MatrixXcd> source(std::size_t n) const;

 private:
  TfMatrix coeffs_;
  std::size_t num_frames_ = 0;
  std::size_t num_bins_ = 0;
};

/// Non-negative Q x F magnitude matrix of one source.
using Spectrogram = Eigen::MatrixXd;

/// s Psi for every row of `signal`.
TfTensor analyze(const SignalMatrix& signal, const StftConfig& cfg);
/// Real part of coeffs Psi^*. The relative size of the discarded imaginary
/// part is written to `imag_residual` when given.
SignalMatrix synthesize(const TfTensor& coeffs, const StftConfig& cfg,
                        double* imag_residual = nullptr);

TfTensor stft(const MultichannelSignal& signal, const StftConfig& cfg);
MultichannelSignal istft(const TfTensor& coeffs, const StftConfig& cfg,
                         double sample_rate = 1.0,
                         double* imag_residual = nullptr);

Spectrogram spectrogram(const TfTensor& coeffs, std::size_t source_index);

/// max_t ||Psi Psi^* delta_t - nu delta_t|| over unit impulses at every
/// position of [0, T).
double verify_tight_frame(const StftConfig& cfg);

/// Imaginary residual above this (relative) is reported as a warning.
inline constexpr double kImagResidualWarn = 1e-8;

}  // namespace sslr
