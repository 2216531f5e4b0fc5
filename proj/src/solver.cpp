#include "sslr/solver.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace sslr {

namespace {

// sqrt(sum_{i > r} sigma_i^2) / ||m||_F
double tail_energy_ratio(const Eigen::MatrixXd& m, std::size_t r) {
  const double total = m.norm();
  if (total == 0.0 || Eigen::Index(r) >= std::min(m.rows(), m.cols()))
    return 0.0;
  const bool wide = m.rows() <= m.cols();
  const Eigen::MatrixXd gram = wide ? Eigen::MatrixXd(m * m.transpose())
                                    : Eigen::MatrixXd(m.transpose() * m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram,
                                                     Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();  // ascending
  const double tail_sq = ev.head(ev.size() - Eigen::Index(r)).sum();
  return std::sqrt(std::max(tail_sq, 0.0)) / total;
}

// Complex N x B coefficients viewed as a real N x 2B matrix (re, im pairs);
// the real inner product is Re<c, d>.
SignalMatrix pack(const TfMatrix& c) {
  return Eigen::Map<const SignalMatrix>(
      reinterpret_cast<const double*>(c.data()), c.rows(), 2 * c.cols());
}

TfTensor unpack(const SignalMatrix& v, const StftConfig& cfg) {
  TfTensor t(std::size_t(v.rows()), cfg.num_frames(), cfg.num_bins());
  Eigen::Map<SignalMatrix>(reinterpret_cast<double*>(t.coeffs().data()),
                           v.rows(), v.cols()) = v;
  return t;
}

}  // namespace

void SolverConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("solver: " + msg); };
  if (!(eps > 0.0)) fail("eps must be positive");
  if (gamma && !(*gamma > 0.0)) fail("gamma must be positive");
  if (tau && !(*tau > 0.0)) fail("tau must be positive");
  if (rank < 1) fail("rank must be >= 1");
  if (max_inner_iters < 1) fail("max_inner_iters must be >= 1");
  if (!(inner_tol > 0.0)) fail("inner_tol must be positive");
  if (reweight_rounds < 1) fail("reweight_rounds must be >= 1");
  if (reweight_floor && !(*reweight_floor > 0.0))
    fail("reweight_floor must be positive");
  if (norm_iterations < 1) fail("norm_iterations must be >= 1");
}

double k_norm_sq(double mixing_norm_estimate) {
  const double a = kNormSafety * mixing_norm_estimate;
  return 2.0 + a * a;
}

double auto_tau(double gamma, double mixing_norm_estimate) {
  return kTauFraction * gamma / k_norm_sq(mixing_norm_estimate);
}

double auto_gamma(const SignalMatrix& s, const StftConfig& stft_cfg) {
  const TfMatrix c = analyze(s, stft_cfg).coeffs();
  const double rms = std::sqrt(c.cwiseAbs2().mean());
  return rms > 0.0 ? kGammaScale * rms / stft_cfg.frame_constant() : 1.0;
}

std::string diagnostics_csv(const IterationDiagnostics& diagnostics) {
  std::ostringstream out;
  out.precision(10);
  out << "iter,residual,objective,s_change,rank_excess,wall_ms\n";
  for (const auto& r : diagnostics.records)
    out << r.iter << ',' << r.residual << ',' << r.objective << ','
        << r.s_change << ',' << r.rank_excess << ',' << r.wall_ms << '\n';
  return out.str();
}

Psdmm::Psdmm(std::vector<SplittingTerm> terms, SignalMatrix s0, double gamma,
             double tau)
    : terms_(std::move(terms)), gamma_(gamma), tau_(tau) {
  if (terms_.empty()) throw ConfigError("PSDMM needs at least one term");
  state_.s = std::move(s0);
  for (const auto& term : terms_) {
    mapped_.push_back(term.apply(state_.s));
    state_.z.push_back(SignalMatrix::Zero(mapped_.back().rows(),
                                          mapped_.back().cols()));
    state_.y.push_back(mapped_.back());
  }
}

double Psdmm::step() {
  const std::size_t I = terms_.size();
  SignalMatrix direction = SignalMatrix::Zero(state_.s.rows(), state_.s.cols());
  for (std::size_t i = 0; i < I; ++i) {
    SignalMatrix v = mapped_[i] + state_.z[i];
    state_.y[i] = terms_[i].prox(v);
    SignalMatrix z_new = v - state_.y[i];
    direction += terms_[i].adjoint(2.0 * z_new - state_.z[i]);
    state_.z[i] = std::move(z_new);
  }
  SignalMatrix s_next = state_.s - (tau_ / (gamma_ * double(I))) * direction;
  if (!s_next.allFinite())
    throw DivergenceError("PSDMM iterate became non-finite", {});
  const double change =
      (s_next - state_.s).norm() / std::max(state_.s.norm(), 1e-12);
  state_.s = std::move(s_next);
  ++state_.iter;
  for (std::size_t i = 0; i < I; ++i) mapped_[i] = terms_[i].apply(state_.s);
  return change;
}

MixingModel::MixingModel(const FilterBank& filters, std::size_t signal_len,
                         std::size_t norm_iterations, std::uint64_t seed)
    : mixer(filters, signal_len),
      norm_estimate(operator_norm_estimate(mixer, norm_iterations, seed)) {}

SolveOutput psdmm_solve(const MixingModel& model, const SignalMatrix& x,
                        const WeightMatrix& w, const SolverConfig& cfg,
                        const StftConfig& stft_cfg, const SignalMatrix& s0) {
  cfg.validate();
  const auto& mixer = model.mixer;
  const auto N = Eigen::Index(mixer.filters().num_in());
  const auto M = Eigen::Index(mixer.filters().num_out());
  const auto T = Eigen::Index(mixer.signal_len());
  if (x.rows() != M || x.cols() != T)
    throw ConfigError("psdmm_solve: mixture shape does not match filters");
  if (s0.rows() != N || s0.cols() != T)
    throw ConfigError("psdmm_solve: initial sources have the wrong shape");
  if (std::size_t(T) != stft_cfg.signal_len())
    throw ConfigError("psdmm_solve: STFT config is for a different length");
  if (w.rows() != std::size_t(N) || w.cols() != stft_cfg.num_coeffs())
    throw ConfigError("psdmm_solve: weight matrix has the wrong shape");
  if (cfg.rank_enabled &&
      cfg.rank > std::min(stft_cfg.num_frames(), stft_cfg.num_bins()))
    throw ConfigError("psdmm_solve: rank exceeds min(frames, bins)");
  if (!(stft_cfg.probe_residual() <= kTightFrameTolerance))
    throw ConfigError("psdmm_solve: STFT frame is not tight");

  const double gamma = cfg.gamma.value_or(
      auto_gamma(matched_filter_start(model, x), stft_cfg));
  const double bound = k_norm_sq(model.norm_estimate);
  double tau = auto_tau(gamma, model.norm_estimate);
  if (cfg.tau) {
    if (!(*cfg.tau * bound < gamma)) {
      std::ostringstream msg;
      msg << "psdmm_solve: tau " << *cfg.tau << " violates tau < gamma/||K||^2 = "
          << gamma / bound;
      throw ConfigError(msg.str());
    }
    tau = *cfg.tau;
  }

  const double eps = cfg.eps;
  const RankBudget rank(cfg.rank);
  auto identity = [](const SignalMatrix& s) { return s; };

  // f_1 acts on L_1 s = s Psi / sqrt(nu), so ||L_1|| = 1 and its prox is an
  // element-wise soft threshold at gamma sqrt(nu) w.
  const double root_nu = std::sqrt(stft_cfg.frame_constant());
  std::vector<SplittingTerm> terms;
  terms.push_back({[&](const SignalMatrix& s) {
                     return SignalMatrix(pack(analyze(s, stft_cfg).coeffs()) / root_nu);
                   },
                   [&](const SignalMatrix& v) {
                     return SignalMatrix(synthesize(unpack(v, stft_cfg), stft_cfg) / root_nu);
                   },
                   [&](const SignalMatrix& v) {
                     TfTensor c = unpack(v, stft_cfg);
                     const RealTfMatrix& wv = w.values();
                     for (Eigen::Index i = 0; i < c.coeffs().size(); ++i)
                       c.coeffs().data()[i] =
                           soft_threshold(c.coeffs().data()[i], gamma * root_nu * wv.data()[i]);
                     return pack(c.coeffs());
                   }});
  terms.push_back({[&](const SignalMatrix& s) { return mixer.forward(s); },
                   [&](const SignalMatrix& v) { return mixer.adjoint(v); },
                   [&](const SignalMatrix& v) {
                     return project_l2_ball(v, x, eps);
                   }});
  if (cfg.rank_enabled) {
    terms.push_back({identity, identity, [&](const SignalMatrix& v) {
                       return project_rank_constraint_set(v, rank, stft_cfg);
                     }});
  }

  SolveOutput out;
  out.diagnostics.tau = tau;
  const auto start = std::chrono::steady_clock::now();
  Psdmm solver(std::move(terms), s0, gamma, tau);
  for (std::size_t k = 0; k < cfg.max_inner_iters; ++k) {
    double change = 0.0;
    try {
      change = solver.step();
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.what(), out.diagnostics);
    }
    IterationRecord rec;
    rec.iter = solver.state().iter;
    rec.residual = (x - solver.mapped()[1]).norm();
    TfTensor coeffs = unpack(solver.mapped()[0], stft_cfg);
    coeffs.coeffs() *= root_nu;
    rec.objective = weighted_l1_norm(coeffs, w);
    rec.s_change = change;
    if (cfg.rank_enabled) {
      for (std::size_t n = 0; n < coeffs.num_sources(); ++n)
        rec.rank_excess = std::max(
            rec.rank_excess,
            tail_energy_ratio(spectrogram(coeffs, n), cfg.rank));
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    out.diagnostics.records.push_back(rec);
    if (change < cfg.inner_tol) {
      out.diagnostics.converged = true;
      break;
    }
  }
  out.sources = solver.state().s;
  return out;
}

SolveOutput psdmm_solve(const MultichannelSignal& x, const FilterBank& filters,
                        const WeightMatrix& w, const SolverConfig& cfg,
                        const StftConfig& stft_cfg,
                        const MultichannelSignal& s0) {
  cfg.validate();
  if (x.num_channels() != filters.num_out())
    throw ConfigError("psdmm_solve: mixture channels do not match filters");
  const MixingModel model(filters, x.num_samples(), cfg.norm_iterations,
                          cfg.seed);
  return psdmm_solve(model, x.samples(), w, cfg, stft_cfg, s0.samples());
}

WeightMatrix weight_update(const SignalMatrix& s, const StftConfig& stft_cfg,
                           double floor) {
  if (!(floor > 0.0)) throw ConfigError("weight_update: floor must be positive");
  const TfTensor c = analyze(s, stft_cfg);
  return WeightMatrix((c.coeffs().array().abs2().sqrt() + floor).inverse().matrix());
}

SignalMatrix matched_filter_start(const MixingModel& model,
                                  const SignalMatrix& x) {
  const double norm_sq = model.norm_estimate * model.norm_estimate;
  return model.mixer.adjoint(x) / std::max(1.0, norm_sq);
}

std::size_t SeparationResult::total_iterations() const {
  std::size_t total = 0;
  for (const auto& r : rounds) total += r.iterations();
  return total;
}

SeparationResult sslr_separate(const MultichannelSignal& x,
                               const FilterBank& filters,
                               const SolverConfig& cfg,
                               const StftConfig& stft_cfg) {
  cfg.validate();
  if (x.num_channels() != filters.num_out())
    throw ConfigError("sslr_separate: mixture channels do not match filters");
  const MixingModel model(filters, x.num_samples(), cfg.norm_iterations,
                          cfg.seed);
  const std::size_t N = filters.num_in();

  SignalMatrix s = matched_filter_start(model, x.samples());
  SolverConfig round_cfg = cfg;
  if (!round_cfg.gamma) round_cfg.gamma = auto_gamma(s, stft_cfg);

  SeparationResult result;
  result.solver_config = round_cfg;
  result.window_len = stft_cfg.window_len();
  result.redundancy = stft_cfg.redundancy();

  WeightMatrix w = WeightMatrix::uniform(N, stft_cfg.num_coeffs());
  for (std::size_t round = 0; round < cfg.reweight_rounds; ++round) {
    SolveOutput solved = psdmm_solve(model, x.samples(), w, round_cfg, stft_cfg, s);
    s = std::move(solved.sources);
    result.rounds.push_back(std::move(solved.diagnostics));
    result.round_estimates.push_back(s);
    if (!cfg.reweight_enabled || round + 1 == cfg.reweight_rounds) continue;
    if (result.reweight_floor == 0.0) {
      const double peak = std::sqrt(analyze(s, stft_cfg).coeffs().cwiseAbs2().maxCoeff());
      result.reweight_floor = cfg.reweight_floor.value_or(
          std::max(kReweightFloorFraction * peak,
                   std::numeric_limits<double>::min()));
    }
    const RealTfMatrix raw = weight_update(s, stft_cfg, result.reweight_floor).values();
    w = WeightMatrix(RealTfMatrix(raw / raw.mean()));
  }
  result.estimates = MultichannelSignal(std::move(s), x.sample_rate());
  return result;
}

}  // namespace sslr
