#pragma once

// Hand-rolled generators and brute-force oracles shared by the test binaries.
// None of the oracles call into the library's transforms.

#include "sslr/frame.hpp"
#include "sslr/mixing.hpp"
#include "sslr/signal.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testing {

using sslr::SignalMatrix;

inline SignalMatrix gaussian(std::mt19937_64& rng, Eigen::Index rows,
                             Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  SignalMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline Eigen::MatrixXcd gaussian_complex(std::mt19937_64& rng, Eigen::Index rows,
                                         Eigen::Index cols) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = {g(rng), g(rng)};
  return m;
}

inline sslr::FilterBank random_bank(std::mt19937_64& rng, std::size_t m,
                                    std::size_t n, std::size_t len) {
  std::normal_distribution<double> g;
  std::vector<double> taps(m * n * len);
  for (double& t : taps) t = g(rng);
  return sslr::FilterBank(m, n, len, std::move(taps));
}

inline double dot(const SignalMatrix& a, const SignalMatrix& b) {
  return (a.array() * b.array()).sum();
}

/// Direct O(T L) causal convolution, truncated to T samples.
inline SignalMatrix naive_mix(const sslr::FilterBank& bank, const SignalMatrix& s) {
  const auto T = s.cols();
  SignalMatrix x = SignalMatrix::Zero(Eigen::Index(bank.num_out()), T);
  for (std::size_t m = 0; m < bank.num_out(); ++m)
    for (std::size_t n = 0; n < bank.num_in(); ++n)
      for (Eigen::Index t = 0; t < T; ++t)
        for (std::size_t k = 0; k < bank.filter_len() && Eigen::Index(k) <= t; ++k)
          x(Eigen::Index(m), t) += bank.tap(m, n, k) * s(Eigen::Index(n), t - Eigen::Index(k));
  return x;
}

/// Dense (M T) x (N T) matrix of the truncated convolution; channel-major.
inline Eigen::MatrixXd dense_mixing_matrix(const sslr::FilterBank& bank,
                                           Eigen::Index T) {
  const auto M = Eigen::Index(bank.num_out()), N = Eigen::Index(bank.num_in());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(M * T, N * T);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index n = 0; n < N; ++n)
      for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index k = 0; k < Eigen::Index(bank.filter_len()) && k <= t; ++k)
          A(m * T + t, n * T + t - k) += bank.tap(std::size_t(m), std::size_t(n), std::size_t(k));
  return A;
}

/// Explicit B x T analysis matrix of the STFT described by `cfg`: frame q
/// covers samples q hop - offset + k, k < L; row q + Q f holds
/// w[k] exp(-2 pi i f k / L).
inline Eigen::MatrixXcd dense_analysis_matrix(const sslr::StftConfig& cfg) {
  const auto T = Eigen::Index(cfg.signal_len());
  const auto L = Eigen::Index(cfg.window_len());
  const auto Q = Eigen::Index(cfg.num_frames());
  const auto hop = Eigen::Index(cfg.hop());
  const auto off = Eigen::Index(cfg.offset());
  const auto& w = cfg.window();
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(Q * L, T);
  for (Eigen::Index q = 0; q < Q; ++q)
    for (Eigen::Index f = 0; f < L; ++f)
      for (Eigen::Index k = 0; k < L; ++k) {
        const Eigen::Index t = q * hop + k - off;
        if (t < 0 || t >= T) continue;
        const double ang = -2.0 * std::numbers::pi * double(f * k % L) / double(L);
        P(q + Q * f, t) += w[std::size_t(k)] * std::complex<double>(std::cos(ang), std::sin(ang));
      }
  return P;
}

/// Random non-negative weights with w(q, f) = w(q, L - f), the symmetry of
/// any weight computed from the STFT of a real signal.
inline Eigen::Matrix<double, 1, Eigen::Dynamic> symmetric_weights(
    std::mt19937_64& rng, const sslr::StftConfig& cfg, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  const auto Q = Eigen::Index(cfg.num_frames()), F = Eigen::Index(cfg.num_bins());
  Eigen::Matrix<double, 1, Eigen::Dynamic> w(Q * F);
  for (Eigen::Index f = 0; f <= F / 2; ++f)
    for (Eigen::Index q = 0; q < Q; ++q)
      w(q + Q * f) = w(q + Q * ((F - f) % F)) = u(rng);
  return w;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() /
            ("sslr_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Reference solution of min_s sum_i w_i |(P s)_i|  s.t.  ||s - x|| <= eps
/// (identity mixing, one channel) by Chambolle-Pock on the explicit frame
/// matrix P. Returns s; the dual step projects onto |c_i| <= w_i.
inline Eigen::VectorXd reference_analysis_l1(const Eigen::MatrixXcd& P,
                                             const Eigen::VectorXd& w,
                                             const Eigen::VectorXd& x,
                                             double eps, int iterations) {
  const double norm = Eigen::JacobiSVD<Eigen::MatrixXcd>(P).singularValues()(0);
  const double sigma = 0.99 / norm, tau = 0.99 / norm;
  auto ball = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    const double d = (v - x).norm();
    return d <= eps ? v : Eigen::VectorXd(x + (eps / d) * (v - x));
  };
  // Real and imaginary parts stacked, so each step is two real products.
  const Eigen::Index K = P.rows();
  Eigen::MatrixXd R(2 * K, P.cols());
  R << P.real(), P.imag();
  Eigen::VectorXd s = x, bar = x, c = Eigen::VectorXd::Zero(2 * K);
  for (int k = 0; k < iterations; ++k) {
    c.noalias() += sigma * (R * bar);
    for (Eigen::Index i = 0; i < K; ++i) {
      const double m = std::hypot(c(i), c(K + i));
      if (m > w(i)) {
        c(i) *= w(i) / m;
        c(K + i) *= w(i) / m;
      }
    }
    const Eigen::VectorXd next = ball(s - tau * (R.transpose() * c));
    bar = 2.0 * next - s;
    s = next;
  }
  return s;
}

inline double analysis_l1(const Eigen::MatrixXcd& P, const Eigen::VectorXd& w,
                          const Eigen::VectorXd& s) {
  return w.dot((P * s.cast<std::complex<double>>()).cwiseAbs());
}

}  // namespace testing
