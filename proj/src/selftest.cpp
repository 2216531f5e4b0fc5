#include "sslr/cli.hpp"
#include "sslr/frame.hpp"
#include "sslr/mixing.hpp"
#include "sslr/prox.hpp"

#include <Eigen/SVD>

#include <random>

namespace sslr {

namespace {

SignalMatrix random_signal(std::mt19937_64& rng, Eigen::Index rows,
                           Eigen::Index cols) {
  std::normal_distribution<double> g;
  SignalMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

double inner(const SignalMatrix& a, const SignalMatrix& b) {
  return (a.array() * b.array()).sum();
}

double tf_inner_real(const TfTensor& a, const TfTensor& b) {
  return (a.coeffs().conjugate().array() * b.coeffs().array()).real().sum();
}

double mixing_adjoint_gap(std::size_t filter_len, ConvolutionPath path,
                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t T = 300;
  const FilterBank bank = generate_synthetic_filters(2, 3, filter_len, 20.0, seed);
  const ConvolutiveMixer mixer(bank, T, path);
  const SignalMatrix s = random_signal(rng, 3, Eigen::Index(T));
  const SignalMatrix x = random_signal(rng, 2, Eigen::Index(T));
  const SignalMatrix as = mixer.forward(s);
  const SignalMatrix atx = mixer.adjoint(x);
  return std::abs(inner(as, x) - inner(s, atx)) / (as.norm() * x.norm());
}

}  // namespace

std::vector<SelfTestCheck> run_selftest(std::size_t window_len,
                                        std::size_t redundancy,
                                        std::uint64_t seed) {
  std::vector<SelfTestCheck> checks;
  std::mt19937_64 rng(seed);

  checks.push_back({"mixing adjoint (naive)",
                    mixing_adjoint_gap(16, ConvolutionPath::Naive, seed), 1e-10});
  checks.push_back({"mixing adjoint (fft)",
                    mixing_adjoint_gap(200, ConvolutionPath::Fft, seed + 1), 1e-10});
  {
    const FilterBank bank = generate_synthetic_filters(2, 2, 80, 20.0, seed);
    const SignalMatrix s = random_signal(rng, 2, 500);
    const SignalMatrix a = ConvolutiveMixer(bank, 500, ConvolutionPath::Naive).forward(s);
    const SignalMatrix b = ConvolutiveMixer(bank, 500, ConvolutionPath::Fft).forward(s);
    checks.push_back({"convolution paths agree", (a - b).norm() / a.norm(), 1e-10});
  }

  const StftConfig cfg = StftConfig::cosine(4 * window_len + 17, window_len, redundancy);
  const double nu = cfg.frame_constant();
  checks.push_back({"tight frame", verify_tight_frame(cfg) / nu, 1e-10});
  {
    const SignalMatrix s = random_signal(rng, 2, Eigen::Index(cfg.signal_len()));
    const TfTensor c = analyze(s, cfg);
    checks.push_back({"frame parseval",
                      std::abs(c.coeffs().squaredNorm() - nu * s.squaredNorm()) /
                          (nu * s.squaredNorm()),
                      1e-10});
    TfTensor d(2, cfg.num_frames(), cfg.num_bins());
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < d.coeffs().size(); ++i)
      d.coeffs().data()[i] = {g(rng), g(rng)};
    // <s Psi, d> against <s, d Psi^*> including the discarded imaginary part.
    const SignalMatrix back = synthesize(d, cfg);
    const double lhs = tf_inner_real(c, d);
    const double rhs = inner(s, back);
    checks.push_back({"stft adjoint",
                      std::abs(lhs - rhs) / (c.coeffs().norm() * d.coeffs().norm()),
                      1e-10});
  }
  {
    // Sampled prox optimality on an orthogonal (rectangular, R = 1) frame
    // with Hermitian-symmetric weights, where the closed form is exact.
    const StftConfig small = StftConfig::rectangular(32, 8, 1);
    const SignalMatrix s = random_signal(rng, 1, 32);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    const auto Q = Eigen::Index(small.num_frames());
    const auto F = Eigen::Index(small.num_bins());
    RealTfMatrix wv(1, Q * F);
    for (Eigen::Index f = 0; f <= F / 2; ++f)
      for (Eigen::Index q = 0; q < Q; ++q)
        wv(0, q + Q * f) = wv(0, q + Q * ((F - f) % F)) = u(rng);
    const WeightMatrix w(std::move(wv));
    const double gamma = 0.05;
    const SignalMatrix y = prox_weighted_l1_analysis(s, w, gamma, small);
    auto objective = [&](const SignalMatrix& v) {
      return gamma * weighted_l1_norm(analyze(v, small), w) +
             0.5 * (v - s).squaredNorm();
    };
    const double at_y = objective(y);
    double excess = 0.0;
    for (int k = 0; k < 300; ++k) {
      SignalMatrix delta = random_signal(rng, 1, 32);
      delta *= 0.1 * std::uniform_real_distribution<double>(0, 1)(rng) / delta.norm();
      excess = std::max(excess, (at_y - objective(y + delta)) / at_y);
    }
    checks.push_back({"prox optimality (sampled)", excess, 1e-12});
  }
  {
    const SignalMatrix center = random_signal(rng, 2, 64);
    const SignalMatrix z = center + 3.0 * random_signal(rng, 2, 64);
    const double radius = 0.5;
    const SignalMatrix p = project_l2_ball(z, center, radius);
    const SignalMatrix pp = project_l2_ball(p, center, radius);
    checks.push_back({"l2 ball norm exact",
                      std::abs((p - center).norm() - radius) / radius, 1e-12});
    checks.push_back({"l2 ball idempotent", (pp - p).norm() / p.norm(), 1e-12});
  }
  {
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
      const Eigen::MatrixXd m = Eigen::MatrixXd(random_signal(rng, 8, 8));
      const Eigen::MatrixXd lr = truncated_svd(m, RankBudget(3));
      const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
      const double tail = sv.tail(5).squaredNorm();
      worst = std::max(worst, std::abs((m - lr).squaredNorm() - tail) / tail);
    }
    checks.push_back({"truncated svd tail energy", worst, 1e-8});
  }
  {
    Eigen::MatrixXcd z(12, 9);
    std::normal_distribution<double> g;
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = {g(rng), g(rng)};
    Eigen::MatrixXd low;
    project_lowrank_magnitude(z, RankBudget(2), &low);
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(low).singularValues();
    checks.push_back({"low-rank magnitude rank", sv(2) / sv(0), 1e-10});
  }
  return checks;
}

}  // namespace sslr
