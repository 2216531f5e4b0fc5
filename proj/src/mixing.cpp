#include "sslr/mixing.hpp"

#include "fft_plan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace sslr {

FilterBank::FilterBank(std::size_t num_out, std::size_t num_in,
                       std::size_t filter_len, std::vector<double> taps)
    : num_out_(num_out),
      num_in_(num_in),
      filter_len_(filter_len),
      taps_(std::move(taps)) {
  if (num_out_ < 1 || num_in_ < 1 || filter_len_ < 1)
    throw ConfigError("filter bank dimensions must be >= 1");
  if (taps_.size() != num_out_ * num_in_ * filter_len_)
    throw ConfigError("filter bank tap count does not match M * N * L");
  for (double t : taps_)
    if (!std::isfinite(t)) throw ConfigError("filter bank has non-finite taps");
}

FilterBank FilterBank::identity(std::size_t n) {
  std::vector<double> taps(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) taps[i * n + i] = 1.0;
  return FilterBank(n, n, 1, std::move(taps));
}

bool FilterBank::is_zero() const {
  return std::all_of(taps_.begin(), taps_.end(),
                     [](double t) { return t == 0.0; });
}

ConvolutiveMixer::ConvolutiveMixer(FilterBank filters, std::size_t signal_len,
                                   ConvolutionPath path)
    : filters_(std::move(filters)), signal_len_(signal_len) {
  if (signal_len_ < 1) throw ConfigError("mixer: signal length must be >= 1");
  const std::size_t Lf = filters_.filter_len();
  const bool fft = path == ConvolutionPath::Fft ||
                   (path == ConvolutionPath::Auto && Lf > kNaiveConvolutionMaxLen);
  if (!fft) return;

  // Blocks of fft_len - Lf + 1 input samples; no point going beyond one
  // block covering the whole signal.
  const std::size_t full = std::bit_ceil(signal_len_ + Lf - 1);
  fft_len_ = std::min(std::bit_ceil(std::max<std::size_t>(4 * Lf, 64)), full);
  fft_len_ = std::max<std::size_t>(fft_len_, 2);

  const auto plan = detail::real_dft_plan(int(fft_len_), false);
  std::vector<double> buf(fft_len_);
  spectra_.resize(filters_.num_out() * filters_.num_in());
  for (std::size_t m = 0; m < filters_.num_out(); ++m) {
    for (std::size_t n = 0; n < filters_.num_in(); ++n) {
      std::fill(buf.begin(), buf.end(), 0.0);
      const auto f = filters_.filter(m, n);
      std::copy(f.begin(), f.end(), buf.begin());
      auto& spec = spectra_[m * filters_.num_in() + n];
      spec.resize(fft_len_ / 2 + 1);
      plan->execute(buf.data(), spec.data());
    }
  }
}

SignalMatrix ConvolutiveMixer::forward(const SignalMatrix& sources) const {
  if (std::size_t(sources.rows()) != filters_.num_in() ||
      std::size_t(sources.cols()) != signal_len_) {
    std::ostringstream msg;
    msg << "mix_forward: expected " << filters_.num_in() << "x" << signal_len_
        << " sources, got " << sources.rows() << "x" << sources.cols();
    throw ConfigError(msg.str());
  }
  return convolve(sources, false);
}

SignalMatrix ConvolutiveMixer::adjoint(const SignalMatrix& mixture) const {
  if (std::size_t(mixture.rows()) != filters_.num_out() ||
      std::size_t(mixture.cols()) != signal_len_) {
    std::ostringstream msg;
    msg << "mix_adjoint: expected " << filters_.num_out() << "x" << signal_len_
        << " mixture, got " << mixture.rows() << "x" << mixture.cols();
    throw ConfigError(msg.str());
  }
  // Correlation with zero extension = time reversal, truncated convolution,
  // time reversal.
  SignalMatrix reversed = mixture.rowwise().reverse();
  SignalMatrix out = convolve(reversed, true);
  return out.rowwise().reverse();
}

SignalMatrix ConvolutiveMixer::convolve(const SignalMatrix& in,
                                        bool transpose) const {
  return uses_fft() ? convolve_fft(in, transpose)
                    : convolve_naive(in, transpose);
}

SignalMatrix ConvolutiveMixer::convolve_naive(const SignalMatrix& in,
                                              bool transpose) const {
  const std::size_t n_in = transpose ? filters_.num_out() : filters_.num_in();
  const std::size_t n_out = transpose ? filters_.num_in() : filters_.num_out();
  const auto T = signal_len_;
  const auto Lf = filters_.filter_len();
  SignalMatrix out = SignalMatrix::Zero(Eigen::Index(n_out), Eigen::Index(T));
  for (std::size_t j = 0; j < n_out; ++j) {
    double* o = out.row(Eigen::Index(j)).data();
    for (std::size_t i = 0; i < n_in; ++i) {
      const auto a = transpose ? filters_.filter(i, j) : filters_.filter(j, i);
      const double* x = in.row(Eigen::Index(i)).data();
      for (std::size_t k = 0; k < Lf; ++k) {
        if (a[k] == 0.0) continue;
        for (std::size_t t = k; t < T; ++t) o[t] += a[k] * x[t - k];
      }
    }
  }
  return out;
}

SignalMatrix ConvolutiveMixer::convolve_fft(const SignalMatrix& in,
                                            bool transpose) const {
  const std::size_t n_in = transpose ? filters_.num_out() : filters_.num_in();
  const std::size_t n_out = transpose ? filters_.num_in() : filters_.num_out();
  const std::size_t N = filters_.num_in();
  const auto T = signal_len_;
  const auto Lf = filters_.filter_len();
  const std::size_t nfft = fft_len_;
  const std::size_t nbins = nfft / 2 + 1;
  const std::size_t block = nfft - Lf + 1;
  const auto fwd = detail::real_dft_plan(int(nfft), false);
  const auto inv = detail::real_dft_plan(int(nfft), true);
  const double scale = 1.0 / double(nfft);

  SignalMatrix out = SignalMatrix::Zero(Eigen::Index(n_out), Eigen::Index(T));
  std::vector<double> buf(nfft);
  std::vector<std::vector<std::complex<double>>> in_spec(
      n_in, std::vector<std::complex<double>>(nbins));
  std::vector<std::complex<double>> acc(nbins);

  for (std::size_t start = 0; start < T; start += block) {
    const std::size_t len = std::min(block, T - start);
    for (std::size_t i = 0; i < n_in; ++i) {
      std::fill(buf.begin(), buf.end(), 0.0);
      const double* x = in.row(Eigen::Index(i)).data() + start;
      std::copy(x, x + len, buf.begin());
      fwd->execute(buf.data(), in_spec[i].data());
    }
    const std::size_t valid = std::min(nfft, T - start);
    for (std::size_t j = 0; j < n_out; ++j) {
      std::fill(acc.begin(), acc.end(), std::complex<double>{});
      for (std::size_t i = 0; i < n_in; ++i) {
        const auto& h = transpose ? spectra_[i * N + j] : spectra_[j * N + i];
        const auto& x = in_spec[i];
        for (std::size_t b = 0; b < nbins; ++b) acc[b] += h[b] * x[b];
      }
      inv->execute(acc.data(), buf.data());
      double* o = out.row(Eigen::Index(j)).data() + start;
      for (std::size_t t = 0; t < valid; ++t) o[t] += scale * buf[t];
    }
  }
  return out;
}

MultichannelSignal mix_forward(const MultichannelSignal& sources,
                               const FilterBank& filters,
                               ConvolutionPath path) {
  ConvolutiveMixer mixer(filters, sources.num_samples(), path);
  return MultichannelSignal(mixer.forward(sources.samples()),
                            sources.sample_rate());
}

MultichannelSignal mix_adjoint(const MultichannelSignal& mixture,
                               const FilterBank& filters,
                               ConvolutionPath path) {
  ConvolutiveMixer mixer(filters, mixture.num_samples(), path);
  return MultichannelSignal(mixer.adjoint(mixture.samples()),
                            mixture.sample_rate());
}

double operator_norm_estimate(const ConvolutiveMixer& mixer,
                              std::size_t iterations, std::uint64_t seed) {
  if (iterations < 1)
    throw ConfigError("operator_norm_estimate: iterations must be >= 1");
  if (mixer.filters().is_zero()) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  SignalMatrix v = SignalMatrix::NullaryExpr(
      Eigen::Index(mixer.filters().num_in()), Eigen::Index(mixer.signal_len()),
      [&] { return gauss(rng); });
  v /= v.norm();
  double best = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    const SignalMatrix av = mixer.forward(v);
    best = std::max(best, av.squaredNorm());
    v = mixer.adjoint(av);
    const double nv = v.norm();
    if (!(nv > 0.0)) break;
    v /= nv;
  }
  return std::sqrt(best);
}

double operator_norm_estimate(const FilterBank& filters,
                              std::size_t signal_len, std::size_t iterations,
                              std::uint64_t seed) {
  return operator_norm_estimate(ConvolutiveMixer(filters, signal_len),
                                iterations, seed);
}

FilterBank generate_synthetic_filters(std::size_t m, std::size_t n,
                                      std::size_t len, double decay,
                                      std::uint64_t seed) {
  if (m < 1 || n < 1 || len < 1)
    throw ConfigError("generate_synthetic_filters: sizes must be >= 1");
  if (!(decay > 0.0))
    throw ConfigError("generate_synthetic_filters: decay must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double tail_scale = std::sqrt(kReverbEnergyRatio / decay);
  const double max_delay =
      std::min(kMaxDirectDelay, double(len > 1 ? len - 1 : 0));

  std::vector<double> taps(m * n * len, 0.0);
  for (std::size_t i = 0; i < m * n; ++i) {
    double* a = taps.data() + i * len;
    const double delay = max_delay * uniform(rng);
    const auto d = std::size_t(delay);
    const double frac = delay - double(d);
    a[d] += 1.0 - frac;
    if (d + 1 < len) a[d + 1] += frac;
    for (std::size_t t = d + 2; t < len; ++t)
      a[t] = tail_scale * std::exp(-double(t) / (2.0 * decay)) * gauss(rng);
  }
  return FilterBank(m, n, len, std::move(taps));
}

}  // namespace sslr
