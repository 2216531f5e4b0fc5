#include "sslr/prox.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace sslr {

WeightMatrix::WeightMatrix(RealTfMatrix values) : values_(std::move(values)) {
  if (!values_.allFinite() || (values_.array() < 0.0).any())
    throw ConfigError("weights must be finite and non-negative");
}

WeightMatrix WeightMatrix::uniform(std::size_t num_sources,
                                   std::size_t num_coeffs, double value) {
  return WeightMatrix(RealTfMatrix::Constant(
      Eigen::Index(num_sources), Eigen::Index(num_coeffs), value));
}

std::complex<double> soft_threshold(std::complex<double> z, double lambda) {
  const double mag = std::sqrt(std::norm(z));
  if (mag <= lambda) return {0.0, 0.0};
  return z * ((mag - lambda) / mag);
}

double weighted_l1_norm(const TfTensor& coeffs, const WeightMatrix& w) {
  if (w.rows() != coeffs.num_sources() ||
      w.cols() != std::size_t(coeffs.coeffs().cols()))
    throw ConfigError("weighted_l1_norm: weight shape mismatch");
  return (w.values().array() * coeffs.coeffs().array().abs2().sqrt()).sum();
}

SignalMatrix prox_weighted_l1_analysis(const SignalMatrix& s,
                                       const WeightMatrix& w, double gamma,
                                       const StftConfig& cfg) {
  if (!(gamma > 0.0)) throw ConfigError("prox: gamma must be positive");
  if (w.rows() != std::size_t(s.rows()) || w.cols() != cfg.num_coeffs()) {
    std::ostringstream msg;
    msg << "prox: weights are " << w.rows() << "x" << w.cols() << ", expected "
        << s.rows() << "x" << cfg.num_coeffs();
    throw ConfigError(msg.str());
  }
  if (!(cfg.probe_residual() <= kTightFrameTolerance)) {
    std::ostringstream msg;
    msg << "prox: STFT frame is not tight (residual " << cfg.probe_residual()
        << ")";
    throw ConfigError(msg.str());
  }
  const double nu = cfg.frame_constant();
  TfTensor c = analyze(s, cfg);
  auto& coeffs = c.coeffs();
  const auto& wv = w.values();
  for (Eigen::Index i = 0; i < coeffs.rows(); ++i) {
    for (Eigen::Index j = 0; j < coeffs.cols(); ++j) {
      const std::complex<double> z = coeffs(i, j);
      coeffs(i, j) = soft_threshold(z, nu * gamma * wv(i, j)) - z;
    }
  }
  return s + synthesize(c, cfg) / nu;
}

MultichannelSignal prox_weighted_l1_analysis(const MultichannelSignal& s,
                                             const WeightMatrix& w,
                                             double gamma,
                                             const StftConfig& cfg) {
  return MultichannelSignal(prox_weighted_l1_analysis(s.samples(), w, gamma, cfg),
                            s.sample_rate());
}

SignalMatrix project_l2_ball(const SignalMatrix& z, const SignalMatrix& center,
                             double eps) {
  require_same_shape(z, center, "project_l2_ball");
  if (!(eps > 0.0)) throw ConfigError("project_l2_ball: eps must be positive");
  const double dist = (z - center).norm();
  if (dist <= eps) return z;
  return center + (eps / dist) * (z - center);
}

MultichannelSignal project_l2_ball(const MultichannelSignal& z,
                                   const MultichannelSignal& center,
                                   double eps) {
  return MultichannelSignal(project_l2_ball(z.samples(), center.samples(), eps),
                            z.sample_rate());
}

Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& m, RankBudget r) {
  const auto k = Eigen::Index(r.value());
  const Eigen::Index small = std::min(m.rows(), m.cols());
  if (k >= small) return m;
  if (kGramAspectRatio * small <= std::max(m.rows(), m.cols())) {
    // Strongly rectangular (spectrograms: few frames, many bins): the
    // dominant subspace of the small Gram matrix is much cheaper than a
    // full SVD.
    const bool wide = m.rows() <= m.cols();
    const Eigen::MatrixXd gram =
        wide ? Eigen::MatrixXd(m * m.transpose())
             : Eigen::MatrixXd(m.transpose() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::MatrixXd basis = eig.eigenvectors().rightCols(k);
    if (wide) return basis * (basis.transpose() * m);
    return (m * basis) * basis.transpose();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(k) *
         svd.singularValues().head(k).asDiagonal() *
         svd.matrixV().leftCols(k).transpose();
}

Eigen::MatrixXcd project_lowrank_magnitude(const Eigen::MatrixXcd& z,
                                           RankBudget r,
                                           Eigen::MatrixXd* low_rank_magnitude) {
  const Eigen::MatrixXd mag = z.cwiseAbs2().cwiseSqrt();
  Eigen::MatrixXd projected = truncated_svd(mag, r);
  Eigen::MatrixXcd out(z.rows(), z.cols());
  const Eigen::Index size = z.size();
  const std::complex<double>* zp = z.data();
  const double* mp = mag.data();
  const double* pp = projected.data();
  std::complex<double>* op = out.data();
  for (Eigen::Index i = 0; i < size; ++i) {
    const double target = std::max(pp[i], 0.0);
    op[i] = mp[i] > kZeroMagnitude ? zp[i] * (target / mp[i])
                                   : std::complex<double>(target, 0.0);
  }
  if (low_rank_magnitude != nullptr) *low_rank_magnitude = std::move(projected);
  return out;
}

TfTensor project_rank_constraint_tf(const SignalMatrix& s, RankBudget r,
                                    const StftConfig& cfg) {
  TfTensor c = analyze(s, cfg);
  for (std::size_t n = 0; n < c.num_sources(); ++n) {
    auto src = c.source(n);
    src = project_lowrank_magnitude(src, r);
  }
  return c;
}

SignalMatrix project_rank_constraint_set(const SignalMatrix& s, RankBudget r,
                                         const StftConfig& cfg) {
  return synthesize(project_rank_constraint_tf(s, r, cfg), cfg) /
         cfg.frame_constant();
}

MultichannelSignal project_rank_constraint_set(const MultichannelSignal& s,
                                               RankBudget r,
                                               const StftConfig& cfg) {
  return MultichannelSignal(project_rank_constraint_set(s.samples(), r, cfg),
                            s.sample_rate());
}

}  // namespace sslr
