#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sslr {

/// channels x samples, one channel per contiguous row.
using SignalMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Invalid configuration, shape mismatch or out-of-range parameter.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable, missing or malformed file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real-valued multichannel signal (sources, mixture or noise).
class MultichannelSignal {
 public:
  MultichannelSignal() = default;
  MultichannelSignal(SignalMatrix samples, double sample_rate);
  /// All-zero signal.
  MultichannelSignal(std::size_t channels, std::size_t samples,
                     double sample_rate);

  std::size_t num_channels() const {
    return static_cast<std::size_t>(samples_.rows());
  }
  std::size_t num_samples() const {
    return static_cast<std::size_t>(samples_.cols());
  }
  double sample_rate() const { return sample_rate_; }

  const SignalMatrix& samples() const { return samples_; }
  SignalMatrix& samples() { return samples_; }

  auto channel(std::size_t c) const { return samples_.row(Eigen::Index(c)); }
  auto channel(std::size_t c) { return samples_.row(Eigen::Index(c)); }

  /// Frobenius norm over all channels.
  double norm() const { return samples_.norm(); }

  bool all_finite() const { return samples_.allFinite(); }

 private:
  SignalMatrix samples_;
  double sample_rate_ = 1.0;
};

/// Throws ConfigError naming `what` unless both signals share a shape.
void require_same_shape(const SignalMatrix& a, const SignalMatrix& b,
                        const std::string& what);

}  // namespace sslr
