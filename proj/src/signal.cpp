#include "sslr/signal.hpp"

#include <sstream>

namespace sslr {

MultichannelSignal::MultichannelSignal(SignalMatrix samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  if (samples_.rows() < 1 || samples_.cols() < 1)
    throw ConfigError("signal must have at least one channel and one sample");
  if (!(sample_rate_ > 0.0))
    throw ConfigError("sample rate must be positive");
  if (!samples_.allFinite())
    throw ConfigError("signal contains non-finite samples");
}

MultichannelSignal::MultichannelSignal(std::size_t channels,
                                       std::size_t samples, double sample_rate)
    : MultichannelSignal(
          SignalMatrix::Zero(Eigen::Index(channels), Eigen::Index(samples)),
          sample_rate) {}

void require_same_shape(const SignalMatrix& a, const SignalMatrix& b,
                        const std::string& what) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return;
  std::ostringstream msg;
  msg << what << ": shape mismatch (" << a.rows() << "x" << a.cols()
      << " vs " << b.rows() << "x" << b.cols() << ")";
  throw ConfigError(msg.str());
}

}  // namespace sslr
