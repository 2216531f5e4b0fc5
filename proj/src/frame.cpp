#include "sslr/frame.hpp"

#include "fft_plan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace sslr {

namespace {

void apply_frame_operator(const StftConfig& cfg, const SignalMatrix& in,
                          SignalMatrix& out) {
  out = synthesize(analyze(in, cfg), cfg);
}

}  // namespace

StftConfig::StftConfig(std::size_t signal_len, std::vector<double> window,
                       std::size_t redundancy)
    : signal_len_(signal_len),
      window_len_(window.size()),
      redundancy_(redundancy),
      window_(std::move(window)) {
  if (signal_len_ < 1) throw ConfigError("STFT: signal length must be >= 1");
  if (window_len_ < 1) throw ConfigError("STFT: window must be non-empty");
  if (redundancy_ < 1 || window_len_ % redundancy_ != 0) {
    std::ostringstream msg;
    msg << "STFT: window length " << window_len_
        << " is not divisible by redundancy " << redundancy_;
    throw ConfigError(msg.str());
  }
  for (double w : window_)
    if (!std::isfinite(w) || w < 0.0)
      throw ConfigError("STFT: window entries must be finite and >= 0");

  hop_ = window_len_ / redundancy_;
  offset_ = window_len_ - hop_;
  num_frames_ = (offset_ + signal_len_ - 1) / hop_ + 1;

  // nu from an impulse in the middle of the signal.
  SignalMatrix probe = SignalMatrix::Zero(1, Eigen::Index(signal_len_));
  const auto mid = Eigen::Index(signal_len_ / 2);
  probe(0, mid) = 1.0;
  SignalMatrix response;
  apply_frame_operator(*this, probe, response);
  frame_constant_ = response(0, mid);
  if (!(frame_constant_ > 0.0))
    throw ConfigError("STFT: measured frame constant is not positive");

  std::mt19937_64 rng(0x5eedULL);
  std::normal_distribution<double> gauss;
  for (int i = 0; i < 2; ++i) {
    probe = SignalMatrix::NullaryExpr(1, Eigen::Index(signal_len_),
                                      [&] { return gauss(rng); });
    apply_frame_operator(*this, probe, response);
    probe_residual_ = std::max(
        probe_residual_,
        (response - frame_constant_ * probe).norm() /
            (frame_constant_ * probe.norm()));
  }
}

std::vector<double> StftConfig::cosine_window(std::size_t window_len) {
  std::vector<double> w(window_len);
  for (std::size_t k = 0; k < window_len; ++k)
    w[k] = std::sin(std::numbers::pi * (double(k) + 0.5) / double(window_len));
  return w;
}

StftConfig StftConfig::cosine(std::size_t signal_len, std::size_t window_len,
                              std::size_t redundancy) {
  return StftConfig(signal_len, cosine_window(window_len), redundancy);
}

StftConfig StftConfig::rectangular(std::size_t signal_len,
                                   std::size_t window_len,
                                   std::size_t redundancy) {
  return StftConfig(signal_len, std::vector<double>(window_len, 1.0),
                    redundancy);
}

StftConfig StftConfig::make(Window kind, std::size_t signal_len,
                            std::size_t window_len, std::size_t redundancy) {
  return kind == Window::Cosine
             ? cosine(signal_len, window_len, redundancy)
             : rectangular(signal_len, window_len, redundancy);
}

TfTensor::TfTensor(std::size_t num_sources, std::size_t num_frames,
                   std::size_t num_bins)
    : coeffs_(TfMatrix::Zero(Eigen::Index(num_sources),
                             Eigen::Index(num_frames * num_bins))),
      num_frames_(num_frames),
      num_bins_(num_bins) {}

Eigen::Map<Eigen::MatrixXcd> TfTensor::source(std::size_t n) {
  if (n >= num_sources()) throw ConfigError("TfTensor: source index out of range");
  return {coeffs_.row(Eigen::Index(n)).data(), Eigen::Index(num_frames_),
          Eigen::Index(num_bins_)};
}

Eigen::Map<const Eigen::MatrixXcd> TfTensor::source(std::size_t n) const {
  if (n >= num_sources()) throw ConfigError("TfTensor: source index out of range");
  return {coeffs_.row(Eigen::Index(n)).data(), Eigen::Index(num_frames_),
          Eigen::Index(num_bins_)};
}

TfTensor analyze(const SignalMatrix& signal, const StftConfig& cfg) {
  const std::size_t T = cfg.signal_len();
  if (std::size_t(signal.cols()) != T) {
    std::ostringstream msg;
    msg << "STFT: signal has " << signal.cols() << " samples, config expects "
        << T;
    throw ConfigError(msg.str());
  }
  const std::size_t L = cfg.window_len();
  const std::size_t Q = cfg.num_frames();
  const std::size_t hop = cfg.hop();
  const std::size_t offset = cfg.offset();
  const auto& w = cfg.window();
  const auto plan = detail::frame_dft_plan(int(L), int(Q), false);

  TfTensor out(std::size_t(signal.rows()), Q, L);
  std::vector<std::complex<double>> frames(Q * L);
  for (Eigen::Index n = 0; n < signal.rows(); ++n) {
    const double* s = signal.row(n).data();
    for (std::size_t q = 0; q < Q; ++q) {
      std::complex<double>* frame = frames.data() + q * L;
      for (std::size_t k = 0; k < L; ++k) {
        const std::size_t p = q * hop + k;  // padded index
        const bool inside = p >= offset && p - offset < T;
        frame[k] = inside ? w[k] * s[p - offset] : 0.0;
      }
    }
    plan->execute(frames.data(), out.coeffs().row(n).data());
  }
  return out;
}

SignalMatrix synthesize(const TfTensor& coeffs, const StftConfig& cfg,
                        double* imag_residual) {
  const std::size_t L = cfg.window_len();
  const std::size_t Q = cfg.num_frames();
  if (coeffs.num_frames() != Q || coeffs.num_bins() != L ||
      std::size_t(coeffs.coeffs().cols()) != cfg.num_coeffs())
    throw ConfigError("ISTFT: coefficient shape does not match config");
  const std::size_t T = cfg.signal_len();
  const std::size_t hop = cfg.hop();
  const std::size_t offset = cfg.offset();
  const auto& w = cfg.window();
  const auto plan = detail::frame_dft_plan(int(L), int(Q), true);

  const auto N = Eigen::Index(coeffs.num_sources());
  SignalMatrix out = SignalMatrix::Zero(N, Eigen::Index(T));
  std::vector<std::complex<double>> frames(Q * L);
  std::vector<std::complex<double>> padded(cfg.padded_len());
  double imag_sq = 0.0;
  for (Eigen::Index n = 0; n < N; ++n) {
    plan->execute(coeffs.coeffs().row(n).data(), frames.data());
    std::fill(padded.begin(), padded.end(), std::complex<double>{});
    for (std::size_t q = 0; q < Q; ++q) {
      const std::complex<double>* frame = frames.data() + q * L;
      std::complex<double>* dst = padded.data() + q * hop;
      for (std::size_t k = 0; k < L; ++k) dst[k] += w[k] * frame[k];
    }
    double* o = out.row(n).data();
    for (std::size_t t = 0; t < T; ++t) {
      o[t] = padded[t + offset].real();
      imag_sq += padded[t + offset].imag() * padded[t + offset].imag();
    }
  }
  if (imag_residual != nullptr) {
    const double re = out.norm();
    *imag_residual = re > 0.0 ? std::sqrt(imag_sq) / re : std::sqrt(imag_sq);
  }
  return out;
}

TfTensor stft(const MultichannelSignal& signal, const StftConfig& cfg) {
  return analyze(signal.samples(), cfg);
}

MultichannelSignal istft(const TfTensor& coeffs, const StftConfig& cfg,
                         double sample_rate, double* imag_residual) {
  return MultichannelSignal(synthesize(coeffs, cfg, imag_residual),
                            sample_rate);
}

Spectrogram spectrogram(const TfTensor& coeffs, std::size_t source_index) {
  return coeffs.source(source_index).cwiseAbs2().cwiseSqrt();
}

double verify_tight_frame(const StftConfig& cfg) {
  const auto T = Eigen::Index(cfg.signal_len());
  const auto L = Eigen::Index(cfg.window_len());
  const double nu = cfg.frame_constant();
  // Psi Psi^* only couples samples closer than L, so impulses 2L apart can
  // share one probe without their responses overlapping.
  const Eigen::Index spacing = 2 * L;
  double worst = 0.0;
  SignalMatrix probe(1, T);
  SignalMatrix response;
  for (Eigen::Index shift = 0; shift < std::min(spacing, T); ++shift) {
    probe.setZero();
    for (Eigen::Index t = shift; t < T; t += spacing) probe(0, t) = 1.0;
    apply_frame_operator(cfg, probe, response);
    for (Eigen::Index t = shift; t < T; t += spacing) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - L + 1);
      const Eigen::Index hi = std::min<Eigen::Index>(T, t + L);
      double err = 0.0;
      for (Eigen::Index u = lo; u < hi; ++u) {
        const double d = response(0, u) - (u == t ? nu : 0.0);
        err += d * d;
      }
      worst = std::max(worst, std::sqrt(err));
    }
  }
  return worst;
}

}  // namespace sslr
