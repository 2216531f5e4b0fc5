#include <doctest.h>

#include "sslr/prox.hpp"
#include "support.hpp"

#include <Eigen/SVD>

using namespace sslr;

namespace {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
}

Eigen::MatrixXd random_rank(std::mt19937_64& rng, Eigen::Index rows,
                            Eigen::Index cols, Eigen::Index r) {
  return testing::gaussian(rng, rows, r) * testing::gaussian(rng, r, cols);
}

double analysis_objective(const SignalMatrix& y, const SignalMatrix& s,
                          const WeightMatrix& w, double gamma,
                          const StftConfig& cfg) {
  return gamma * weighted_l1_norm(analyze(y, cfg), w) + 0.5 * (y - s).squaredNorm();
}

}  // namespace

TEST_CASE("soft threshold") {
  CHECK(soft_threshold(3.0, 1.0) == std::complex<double>(2.0, 0.0));
  CHECK(soft_threshold(0.5, 1.0) == std::complex<double>(0.0, 0.0));
  CHECK(soft_threshold(0.0, 0.0) == std::complex<double>(0.0, 0.0));
  const auto z = std::polar(4.0, 2.1);
  const auto p = soft_threshold(z, 1.0);
  CHECK(std::abs(p - std::polar(3.0, 2.1)) < 1e-14);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> lam(0.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const std::complex<double> a{g(rng), g(rng)}, b{g(rng), g(rng)};
    const double l = lam(rng);
    const auto pa = soft_threshold(a, l), pb = soft_threshold(b, l);
    // Firm nonexpansiveness.
    CHECK(std::norm(pa - pb) <= std::real(std::conj(pa - pb) * (a - b)) + 1e-14);
  }
}

TEST_CASE("weighted l1 norm") {
  TfTensor c(1, 1, 3);
  c.coeffs() << std::complex<double>(3, 4), 1.0, std::complex<double>(0, -2);
  RealTfMatrix w(1, 3);
  w << 1.0, 0.0, 0.5;
  CHECK(weighted_l1_norm(c, WeightMatrix(w)) == doctest::Approx(6.0));
  CHECK_THROWS_AS(weighted_l1_norm(c, WeightMatrix::uniform(1, 4)), ConfigError);
}

TEST_CASE("WeightMatrix rejects negative or non-finite entries") {
  RealTfMatrix w(1, 2);
  w << 1.0, -0.1;
  CHECK_THROWS_AS(WeightMatrix{w}, ConfigError);
  w << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(WeightMatrix{w}, ConfigError);
  CHECK(WeightMatrix::uniform(2, 3, 0.0).values().sum() == 0.0);
  CHECK_THROWS_AS(RankBudget(0), ConfigError);
}

TEST_CASE("analysis prox: zero weights give the identity") {
  std::mt19937_64 rng(2);
  const StftConfig cfg = StftConfig::cosine(100, 16, 2);
  const SignalMatrix s = testing::gaussian(rng, 2, 100);
  const SignalMatrix y =
      prox_weighted_l1_analysis(s, WeightMatrix::uniform(2, cfg.num_coeffs(), 0.0), 3.0, cfg);
  CHECK((y - s).norm() < 1e-12 * s.norm());
}

TEST_CASE("analysis prox with the trivial frame is element-wise soft thresholding") {
  // L = 1, R = 1: one-sample frames, a one-point DFT, so Psi = Id and nu = 1.
  const StftConfig id = StftConfig::rectangular(40, 1, 1);
  CHECK(id.frame_constant() == 1.0);
  std::mt19937_64 rng(3);
  const SignalMatrix s = testing::gaussian(rng, 2, 40);
  RealTfMatrix w = (testing::gaussian(rng, 2, 40).array().abs()).matrix();
  const double gamma = 0.4;
  const SignalMatrix y = prox_weighted_l1_analysis(s, WeightMatrix(w), gamma, id);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double v = s.data()[i], l = gamma * w.data()[i];
    const double expect = std::copysign(std::max(std::abs(v) - l, 0.0), v);
    CHECK(y.data()[i] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("analysis prox is optimal for an orthogonal frame") {
  // Rectangular R = 1 frames form an orthogonal basis; with weights symmetric
  // across f <-> L - f the closed form is the exact prox.
  std::mt19937_64 rng(4);
  const StftConfig cfg = StftConfig::rectangular(32, 8, 1);
  for (int instance = 0; instance < 5; ++instance) {
    const SignalMatrix s = testing::gaussian(rng, 1, 32);
    const WeightMatrix w(testing::symmetric_weights(rng, cfg, 0.1, 2.0));
    const double gamma = 0.05;
    const SignalMatrix y = prox_weighted_l1_analysis(s, w, gamma, cfg);
    const double best = analysis_objective(y, s, w, gamma, cfg);
    std::uniform_real_distribution<double> radius(0.0, 0.1);
    for (int k = 0; k < 1000; ++k) {
      SignalMatrix d = testing::gaussian(rng, 1, 32);
      d *= radius(rng) / d.norm();
      CHECK(best <= analysis_objective(y + d, s, w, gamma, cfg) + 1e-12);
    }
  }
}

TEST_CASE("analysis prox on a redundant frame follows the closed form") {
  // Independent evaluation of s + nu^-1 Re[P^H (soft(P s, nu gamma w) - P s)]
  // with the explicit frame matrix.
  std::mt19937_64 rng(5);
  const StftConfig cfg = StftConfig::cosine(32, 8, 2);
  const Eigen::MatrixXcd P = testing::dense_analysis_matrix(cfg);
  const double nu = cfg.frame_constant();
  const SignalMatrix s = testing::gaussian(rng, 1, 32);
  const auto wv = testing::symmetric_weights(rng, cfg, 0.1, 2.0);
  const double gamma = 0.05;
  const Eigen::VectorXcd c = P * s.row(0).transpose().cast<std::complex<double>>();
  Eigen::VectorXcd d(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double lam = nu * gamma * wv(i), mag = std::abs(c(i));
    d(i) = (mag > lam ? c(i) * (1.0 - lam / mag) : 0.0) - c(i);
  }
  const Eigen::VectorXd expect =
      s.row(0).transpose() + (P.adjoint() * d).real() / nu;
  const SignalMatrix y = prox_weighted_l1_analysis(s, WeightMatrix(wv), gamma, cfg);
  CHECK((y.row(0).transpose() - expect).norm() / expect.norm() < 1e-12);
}

TEST_CASE("analysis prox commutes with source permutation under constant weights") {
  std::mt19937_64 rng(6);
  const StftConfig cfg = StftConfig::cosine(120, 16, 2);
  const SignalMatrix s = testing::gaussian(rng, 3, 120);
  const WeightMatrix w = WeightMatrix::uniform(3, cfg.num_coeffs(), 0.7);
  const SignalMatrix y = prox_weighted_l1_analysis(s, w, 0.02, cfg);
  SignalMatrix sp(3, 120);
  sp << s.row(2), s.row(0), s.row(1);
  const SignalMatrix yp = prox_weighted_l1_analysis(sp, w, 0.02, cfg);
  CHECK(yp.row(0) == y.row(2));
  CHECK(yp.row(1) == y.row(0));
  CHECK(yp.row(2) == y.row(1));
}

TEST_CASE("analysis prox errors") {
  const StftConfig cfg = StftConfig::cosine(64, 16, 2);
  const SignalMatrix s = SignalMatrix::Zero(1, 64);
  CHECK_THROWS_AS(prox_weighted_l1_analysis(s, WeightMatrix::uniform(2, cfg.num_coeffs()), 1.0, cfg),
                  ConfigError);
  CHECK_THROWS_AS(prox_weighted_l1_analysis(s, WeightMatrix::uniform(1, cfg.num_coeffs()), 0.0, cfg),
                  ConfigError);
  CHECK_THROWS_AS(prox_weighted_l1_analysis(SignalMatrix::Zero(1, 63),
                                            WeightMatrix::uniform(1, cfg.num_coeffs()), 1.0, cfg),
                  ConfigError);
  std::vector<double> w = StftConfig::cosine_window(16);
  w[3] *= 1.5;
  const StftConfig bad(64, w, 2);
  CHECK_THROWS_AS(prox_weighted_l1_analysis(s, WeightMatrix::uniform(1, bad.num_coeffs()), 1.0, bad),
                  ConfigError);
}

TEST_CASE("l2 ball projection") {
  SignalMatrix z(1, 2), x = SignalMatrix::Zero(1, 2);
  z << 3.0, 4.0;
  const SignalMatrix p = project_l2_ball(z, x, 1.0);
  CHECK(p(0, 0) == doctest::Approx(0.6));
  CHECK(p(0, 1) == doctest::Approx(0.8));

  std::mt19937_64 rng(7);
  const SignalMatrix c = testing::gaussian(rng, 2, 50);
  SignalMatrix inside = testing::gaussian(rng, 2, 50);
  inside = c + inside * (0.25 / inside.norm());
  CHECK(project_l2_ball(inside, c, 0.5) == inside);

  for (int k = 0; k < 200; ++k) {
    const double eps = std::exp(std::uniform_real_distribution<double>(-5, 2)(rng));
    const SignalMatrix zz = c + testing::gaussian(rng, 2, 50, 3.0);
    const SignalMatrix q = project_l2_ball(zz, c, eps);
    CHECK(std::abs((q - c).norm() - eps) <= 1e-12 * eps);
    // On the segment [c, zz]: q - c is a positive multiple of zz - c.
    const double t = (q - c).norm() / (zz - c).norm();
    CHECK((q - c - t * (zz - c)).norm() <= 1e-12 * eps);
    CHECK((project_l2_ball(q, c, eps) - q).norm() <= 1e-12 * q.norm());
    // Nonexpansive.
    const SignalMatrix z2 = c + testing::gaussian(rng, 2, 50, 3.0);
    CHECK((project_l2_ball(z2, c, eps) - q).norm() <= (z2 - zz).norm() * (1 + 1e-12));
  }
  CHECK_THROWS_AS(project_l2_ball(z, x, 0.0), ConfigError);
  CHECK_THROWS_AS(project_l2_ball(z, SignalMatrix::Zero(2, 1), 1.0), ConfigError);
}

TEST_CASE("truncated SVD") {
  Eigen::MatrixXd d = Eigen::Vector3d(3, 2, 1).asDiagonal();
  const Eigen::MatrixXd p = truncated_svd(d, RankBudget(2));
  CHECK((p - Eigen::MatrixXd(Eigen::Vector3d(3, 2, 0).asDiagonal())).norm() < 1e-12);

  std::mt19937_64 rng(8);
  for (int k = 0; k < 50; ++k) {
    const Eigen::MatrixXd low = random_rank(rng, 7, 5, 2);
    CHECK((truncated_svd(low, RankBudget(2)) - low).norm() < 1e-10 * low.norm());
    CHECK((truncated_svd(low, RankBudget(9)) - low).norm() == 0.0);
  }
  for (int k = 0; k < 100; ++k) {
    const Eigen::MatrixXd m = testing::gaussian(rng, 5, 5);
    const Eigen::VectorXd sv = singular_values(m);
    const Eigen::MatrixXd out = truncated_svd(m, RankBudget(2));
    const double tail = sv.tail(3).squaredNorm();
    CHECK(std::abs((m - out).squaredNorm() - tail) / tail < 1e-8);
    const Eigen::VectorXd so = singular_values(out);
    CHECK(so(2) <= 1e-10 * so(0));
    CHECK((truncated_svd(out, RankBudget(2)) - out).norm() <= 1e-10 * out.norm());
  }
}

TEST_CASE("truncated SVD on strongly rectangular matrices") {
  // Exercises the Gram-matrix route in both orientations.
  std::mt19937_64 rng(9);
  for (auto [rows, cols] : {std::pair{6, 200}, std::pair{300, 5}}) {
    const Eigen::MatrixXd m = testing::gaussian(rng, rows, cols);
    const Eigen::VectorXd sv = singular_values(m);
    const Eigen::MatrixXd out = truncated_svd(m, RankBudget(3));
    const double tail = sv.tail(sv.size() - 3).squaredNorm();
    CHECK(std::abs((m - out).squaredNorm() - tail) / tail < 1e-8);
    const Eigen::VectorXd so = singular_values(out);
    CHECK(so(3) <= 1e-10 * so(0));
  }
}

TEST_CASE("low-rank magnitude projection: fixed points and phases") {
  std::mt19937_64 rng(10);
  const Eigen::MatrixXd nonneg = testing::gaussian(rng, 6, 2).cwiseAbs() *
                                 testing::gaussian(rng, 2, 5).cwiseAbs();
  const Eigen::MatrixXcd z = nonneg.cast<std::complex<double>>();
  CHECK((project_lowrank_magnitude(z, RankBudget(2)) - z).norm() < 1e-10 * z.norm());

  Eigen::MatrixXd theta = testing::gaussian(rng, 2, 2);
  Eigen::MatrixXcd d(2, 2);
  d << std::polar(3.0, theta(0, 0)), 0.0, 0.0, std::polar(1.0, theta(1, 1));
  const Eigen::MatrixXcd pd = project_lowrank_magnitude(d, RankBudget(1));
  CHECK(std::abs(pd(0, 0) - std::polar(3.0, theta(0, 0))) < 1e-12);
  CHECK(std::abs(pd(1, 1)) < 1e-12);
  CHECK(std::abs(pd(0, 1)) < 1e-12);

  // Zero entries take phase 1.
  Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(3, 3);
  zero(0, 0) = 2.0;
  zero(0, 1) = 2.0;
  CHECK(project_lowrank_magnitude(zero, RankBudget(1)).imag().norm() == 0.0);
}

TEST_CASE("low-rank magnitude projection: properties") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 30; ++k) {
    const Eigen::MatrixXcd z = testing::gaussian_complex(rng, 9, 7);
    Eigen::MatrixXd low;
    const Eigen::MatrixXcd out = project_lowrank_magnitude(z, RankBudget(2), &low);
    const Eigen::MatrixXd abs_z = z.cwiseAbs();
    CHECK((low - truncated_svd(abs_z, RankBudget(2))).norm() < 1e-12 * low.norm());
    CHECK((out.cwiseAbs() - low.cwiseMax(0.0)).norm() < 1e-12 * low.norm());
    const Eigen::VectorXd sv = singular_values(low);
    CHECK(sv(2) <= 1e-10 * sv(0));
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (std::abs(out.data()[i]) > 1e-12 && std::abs(z.data()[i]) > 1e-12)
        CHECK(std::abs(std::arg(out.data()[i] / z.data()[i])) < 1e-9);
    // Clipping never moves the result away from z.
    Eigen::MatrixXcd unclipped(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i)
      unclipped.data()[i] = low.data()[i] * z.data()[i] / std::abs(z.data()[i]);
    CHECK((out - z).norm() <= (unclipped - z).norm() + 1e-12);
  }
}

TEST_CASE("low-rank magnitude projection beats random feasible candidates") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
  const Eigen::MatrixXcd z = testing::gaussian_complex(rng, 6, 6);
  const double dist = (project_lowrank_magnitude(z, RankBudget(2)) - z).norm();
  for (int k = 0; k < 1000; ++k) {
    const Eigen::MatrixXd m = random_rank(rng, 6, 6, 2).cwiseAbs();
    Eigen::MatrixXcd y(6, 6);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = std::polar(m.data()[i], phase(rng));
    CHECK(dist <= (y - z).norm());
  }
}

TEST_CASE("rank-constraint set projection") {
  const StftConfig cfg = StftConfig::cosine(256, 32, 2);
  CHECK(project_rank_constraint_set(SignalMatrix::Zero(2, 256), RankBudget(1), cfg).norm() == 0.0);

  std::mt19937_64 rng(13);
  const SignalMatrix s = testing::gaussian(rng, 2, 256);
  const TfTensor tf = project_rank_constraint_tf(s, RankBudget(3), cfg);
  for (std::size_t n = 0; n < 2; ++n) {
    const Eigen::VectorXd sv = singular_values(spectrogram(tf, n));
    CHECK(sv(3) <= 1e-10 * sv(0));
  }
  const SignalMatrix y = project_rank_constraint_set(s, RankBudget(3), cfg);
  CHECK((y - synthesize(tf, cfg) / cfg.frame_constant()).norm() <= 1e-14 * y.norm());
  CHECK(project_rank_constraint_set(s, RankBudget(3), cfg) == y);
}

TEST_CASE("rank-constraint set projection fixes a consistent rank-1 source") {
  // Synthesized from a rank-1 non-negative magnitude with zero phase; the
  // R = 1 frame is a basis, so the coefficients are consistent.
  const std::size_t L = 32, T = 32 * 20;
  const StftConfig cfg = StftConfig::rectangular(T, L, 1);
  TfTensor c(1, cfg.num_frames(), cfg.num_bins());
  auto view = c.source(0);
  for (Eigen::Index q = 0; q < view.rows(); ++q) {
    view(q, 3) = view(q, Eigen::Index(L) - 3) = 2.0;
    view(q, 5) = view(q, Eigen::Index(L) - 5) = 1.0;
  }
  const SignalMatrix s = synthesize(c, cfg) / cfg.frame_constant();
  // Frame consistency: analysis reproduces the coefficients.
  REQUIRE((analyze(s, cfg).coeffs() - c.coeffs()).norm() < 1e-10 * c.coeffs().norm());
  const SignalMatrix p = project_rank_constraint_set(s, RankBudget(1), cfg);
  CHECK((p - s).norm() < 1e-6 * s.norm());
}
