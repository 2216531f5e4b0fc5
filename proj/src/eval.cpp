#include "sslr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace sslr {

namespace {
// Minimum spacing, in bins, between the tones of one source.
constexpr std::size_t kMinToneSpacing = 4;
}  // namespace

double sdr(std::span<const double> estimate, std::span<const double> truth) {
  if (estimate.size() != truth.size())
    throw ConfigError("sdr: estimate and truth lengths differ");
  double st = 0.0, tt = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    st += estimate[i] * truth[i];
    tt += truth[i] * truth[i];
  }
  if (!(tt > 0.0)) throw ConfigError("sdr: truth is identically zero");
  const double gain = st / tt;
  double target = 0.0, distortion = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double p = gain * truth[i];
    target += p * p;
    const double d = estimate[i] - p;
    distortion += d * d;
  }
  if (target == 0.0) return -kSdrCapDb;
  if (distortion == 0.0) return kSdrCapDb;
  return std::clamp(10.0 * std::log10(target / distortion), -kSdrCapDb,
                    kSdrCapDb);
}

std::vector<double> sdr_per_channel(const SignalMatrix& estimates,
                                    const SignalMatrix& truth) {
  require_same_shape(estimates, truth, "sdr");
  std::vector<double> out;
  for (Eigen::Index c = 0; c < truth.rows(); ++c) {
    const auto e = estimates.row(c);
    const auto s = truth.row(c);
    out.push_back(sdr({e.data(), std::size_t(e.size())},
                      {s.data(), std::size_t(s.size())}));
  }
  return out;
}

MultichannelSignal generate_lowrank_sources(std::size_t n, std::size_t t,
                                            std::size_t rank,
                                            std::uint64_t seed,
                                            const StftConfig& stft_cfg,
                                            double sample_rate,
                                            double amplitude) {
  if (n < 1 || t < 1) throw ConfigError("generate_lowrank_sources: empty shape");
  if (rank < 1 ||
      rank > std::min(stft_cfg.num_frames(), stft_cfg.num_bins()))
    throw ConfigError("generate_lowrank_sources: rank out of range");
  if (stft_cfg.signal_len() != t)
    throw ConfigError("generate_lowrank_sources: STFT config length differs");

  const double L = double(stft_cfg.window_len());
  const double hop = double(stft_cfg.hop());
  const std::size_t lo = std::max<std::size_t>(1, stft_cfg.window_len() / 32);
  const std::size_t hi = std::max(lo, stft_cfg.window_len() / 4);
  const bool spaced = rank * kMinToneSpacing <= hi - lo + 1;

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(lo, hi);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  SignalMatrix out = SignalMatrix::Zero(Eigen::Index(n), Eigen::Index(t));
  for (std::size_t src = 0; src < n; ++src) {
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < rank; ++k) {
      std::size_t bin = pick(rng);
      auto too_close = [&](std::size_t b) {
        return std::any_of(used.begin(), used.end(), [&](std::size_t u) {
          return (b > u ? b - u : u - b) < kMinToneSpacing;
        });
      };
      while (spaced && too_close(bin)) bin = pick(rng);
      used.push_back(bin);
      const double freq = double(bin) / L;  // cycles per sample
      const double phase = 2.0 * std::numbers::pi * uniform(rng);
      const double period = 4.0 + 8.0 * uniform(rng);  // frames
      const double env_phase = 2.0 * std::numbers::pi * uniform(rng);
      const double gain = 0.5 + 0.5 * uniform(rng);
      for (std::size_t i = 0; i < t; ++i) {
        const double env =
            0.5 * (1.0 + std::cos(2.0 * std::numbers::pi * (double(i) / hop) /
                                      period +
                                  env_phase));
        out(Eigen::Index(src), Eigen::Index(i)) +=
            gain * env *
            std::sin(2.0 * std::numbers::pi * freq * double(i) + phase);
      }
    }
    auto row = out.row(Eigen::Index(src));
    const double peak = row.cwiseAbs().maxCoeff();
    if (peak > 0.0) row *= amplitude / peak;
  }
  return MultichannelSignal(std::move(out), sample_rate);
}

}  // namespace sslr
