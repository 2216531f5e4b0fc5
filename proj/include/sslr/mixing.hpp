#pragma once

#include "sslr/signal.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace sslr {

/// M x N finite impulse responses a_mn, each `filter_len` taps long, stored
/// row-major: taps[(m * N + n) * filter_len + k].
class FilterBank {
 public:
  FilterBank(std::size_t num_out, std::size_t num_in, std::size_t filter_len,
             std::vector<double> taps);

  /// Filter a_mm = delta_0, zero elsewhere (M = N = n).
  static FilterBank identity(std::size_t n);

  std::size_t num_out() const { return num_out_; }
  std::size_t num_in() const { return num_in_; }
  std::size_t filter_len() const { return filter_len_; }
  std::span<const double> taps() const { return taps_; }
  std::span<const double> filter(std::size_t m, std::size_t n) const {
    return {taps_.data() + (m * num_in_ + n) * filter_len_, filter_len_};
  }
  double tap(std::size_t m, std::size_t n, std::size_t k) const {
    return taps_[(m * num_in_ + n) * filter_len_ + k];
  }
  bool is_zero() const;

  friend bool operator==(const FilterBank&, const FilterBank&) = default;

 private:
  std::size_t num_out_;
  std::size_t num_in_;
  std::size_t filter_len_;
  std::vector<double> taps_;
};

enum class ConvolutionPath { Auto, Naive, Fft };

/// Filters at or below this length use direct convolution under Auto.
inline constexpr std::size_t kNaiveConvolutionMaxLen = 64;

/// The mixing operator A for signals of length T:
///   [A s]_m(t) = sum_n (a_mn * s_n)(t),  t in [0, T),
/// i.e. full causal convolution restricted to the first T samples. The
/// adjoint zero-extends and correlates, [A^* x]_n(t) = sum_m sum_k a_mn(k)
/// x_m(t + k). Filter spectra are cached for the FFT overlap-add path.
class ConvolutiveMixer {
 public:
  ConvolutiveMixer(FilterBank filters, std::size_t signal_len,
                   ConvolutionPath path = ConvolutionPath::Auto);

  const FilterBank& filters() const { return filters_; }
  std::size_t signal_len() const { return signal_len_; }
  bool uses_fft() const { return fft_len_ > 0; }

  SignalMatrix forward(const SignalMatrix& sources) const;
  SignalMatrix adjoint(const SignalMatrix& mixture) const;

 private:
  // out_j = sum_i filter(i, j) * in_i truncated to T; `transpose` swaps the
  // roles of m and n.
  SignalMatrix convolve(const SignalMatrix& in, bool transpose) const;
  SignalMatrix convolve_naive(const SignalMatrix& in, bool transpose) const;
  SignalMatrix convolve_fft(const SignalMatrix& in, bool transpose) const;

  FilterBank filters_;
  std::size_t signal_len_;
  std::size_t fft_len_ = 0;
  std::vector<std::vector<std::complex<double>>> spectra_;  // m * N + n
};

MultichannelSignal mix_forward(const MultichannelSignal& sources,
                               const FilterBank& filters,
                               ConvolutionPath path = ConvolutionPath::Auto);
MultichannelSignal mix_adjoint(const MultichannelSignal& mixture,
                               const FilterBank& filters,
                               ConvolutionPath path = ConvolutionPath::Auto);

/// Power-iteration lower bound on ||A|| for length-T signals. The returned
/// value is the running maximum of the Rayleigh quotients, so it never
/// decreases with `iterations`. Callers needing an upper bound apply their
/// own safety factor. All-zero banks give 0.
double operator_norm_estimate(const ConvolutiveMixer& mixer,
                              std::size_t iterations, std::uint64_t seed = 0);
double operator_norm_estimate(const FilterBank& filters,
                              std::size_t signal_len, std::size_t iterations,
                              std::uint64_t seed = 0);

/// Largest direct-path delay (samples) drawn by generate_synthetic_filters.
inline constexpr double kMaxDirectDelay = 24.0;
/// Reverberant tail energy relative to the unit direct path.
inline constexpr double kReverbEnergyRatio = 0.5;

/// Pseudo-random room-like filters. Each a_mn has a unit direct path at a
/// uniform sub-sample delay in [0, kMaxDirectDelay) (split linearly between
/// two taps) followed by zero-mean Gaussian taps whose expected energy at tap
/// t is proportional to exp(-t / decay). Deterministic in `seed`.
FilterBank generate_synthetic_filters(std::size_t m, std::size_t n,
                                      std::size_t len, double decay,
                                      std::uint64_t seed);

/// Text format:
///   sslr-filterbank 1
///   M N L
///   one line of L taps per (m, n), m-major, printed with 17 significant
///   digits so that reading back is exact.
void write_filter_bank(const FilterBank& bank, const std::filesystem::path& path);
FilterBank read_filter_bank(const std::filesystem::path& path);

}  // namespace sslr
