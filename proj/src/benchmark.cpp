#include "sslr/eval.hpp"
#include "sslr/mixing.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

namespace sslr {

namespace {

std::string solver_signature(const SolverConfig& c) {
  std::ostringstream s;
  s << std::setprecision(17) << "eps=" << c.eps << ";rank=" << c.rank
    << ";rank_enabled=" << c.rank_enabled << ";gamma=" << (c.gamma ? *c.gamma : -1.0)
    << ";tau=" << (c.tau ? *c.tau : -1.0) << ";iters=" << c.max_inner_iters
    << ";tol=" << c.inner_tol << ";rounds=" << c.reweight_rounds
    << ";floor=" << (c.reweight_floor ? *c.reweight_floor : -1.0)
    << ";reweight=" << c.reweight_enabled << ";seed=" << c.seed
    << ";norm_iters=" << c.norm_iterations;
  return s.str();
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / double(v.size()))};
}

std::string csv_field(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

void Scenario::validate() const {
  auto fail = [&](const std::string& m) {
    throw ConfigError("scenario " + id + ": " + m);
  };
  if (num_mics < 1 || num_sources < 1 || num_samples < 1)
    fail("sizes must be positive");
  if (!(sample_rate > 0.0)) fail("sample_rate must be positive");
  if (filter_len < 1 || !(filter_decay > 0.0)) fail("bad filter spec");
  if (!(eps > 0.0)) fail("eps must be positive");
  if (window_len < 1 || redundancy < 1 || window_len % redundancy != 0)
    fail("window_len must be a positive multiple of redundancy");
  const StftConfig cfg = stft_config();
  const std::size_t max_rank = std::min(cfg.num_frames(), cfg.num_bins());
  if (source_rank < 1 || source_rank > max_rank) fail("source_rank out of range");
  for (std::size_t r : rank_sweep)
    if (r < 1 || r > max_rank) fail("rank sweep value out of range");
}

StftConfig Scenario::stft_config() const {
  return StftConfig::cosine(num_samples, window_len, redundancy);
}

std::vector<Method> default_methods(const std::vector<std::size_t>& rank_sweep,
                                    const SolverConfig& base) {
  std::vector<Method> methods;
  methods.push_back({"matched_filter", Method::Kind::MatchedFilter, base});
  SolverConfig ssra = base;
  ssra.rank_enabled = false;
  methods.push_back({"ssra", Method::Kind::Separation, ssra});
  for (std::size_t r : rank_sweep) {
    SolverConfig sslr = base;
    sslr.rank_enabled = true;
    sslr.rank = r;
    methods.push_back({"sslr_r" + std::to_string(r), Method::Kind::Separation, sslr});
  }
  return methods;
}

ScenarioData realize_scenario(const Scenario& sc) {
  sc.validate();
  const StftConfig stft_cfg = sc.stft_config();
  // Distinct streams for sources and filters.
  MultichannelSignal sources =
      generate_lowrank_sources(sc.num_sources, sc.num_samples, sc.source_rank,
                               sc.seed * 2 + 1, stft_cfg, sc.sample_rate);
  FilterBank filters = generate_synthetic_filters(
      sc.num_mics, sc.num_sources, sc.filter_len, sc.filter_decay, sc.seed * 2);
  MultichannelSignal mixture = mix_forward(sources, filters);
  return {std::move(sources), std::move(filters), std::move(mixture)};
}

std::uint64_t config_hash(const Scenario& sc, const Method& method) {
  std::ostringstream s;
  s << std::setprecision(17) << "seed=" << sc.seed << ";M=" << sc.num_mics
    << ";N=" << sc.num_sources << ";T=" << sc.num_samples
    << ";fs=" << sc.sample_rate << ";flen=" << sc.filter_len
    << ";decay=" << sc.filter_decay << ";srank=" << sc.source_rank
    << ";eps=" << sc.eps << ";L=" << sc.window_len << ";R=" << sc.redundancy
    << "|" << method.id << ";kind=" << int(method.kind) << ";"
    << solver_signature(method.solver);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<BenchmarkRow> run_benchmark(const std::vector<Scenario>& scenarios,
                                        const std::vector<Method>& methods,
                                        const BenchmarkProgress& progress) {
  if (scenarios.empty() || methods.empty())
    throw ConfigError("run_benchmark: scenario and method lists must be non-empty");
  std::vector<BenchmarkRow> rows;
  for (const Scenario& sc : scenarios) {
    std::optional<ScenarioData> data;
    std::optional<StftConfig> stft_cfg;
    std::string setup_error;
    try {
      data = realize_scenario(sc);
      stft_cfg = sc.stft_config();
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (const Method& method : methods) {
      BenchmarkRow row;
      row.scenario_id = sc.id;
      row.method_id = method.id;
      row.seed = sc.seed;
      row.num_sources = sc.num_sources;
      row.num_mics = sc.num_mics;
      row.rank = method.kind == Method::Kind::Separation &&
                         method.solver.rank_enabled
                     ? method.solver.rank
                     : 0;
      row.config_hash = config_hash(sc, method);
      const auto start = std::chrono::steady_clock::now();
      try {
        if (!data) throw std::runtime_error(setup_error);
        SolverConfig solver = method.solver;
        solver.eps = sc.eps;
        SignalMatrix estimate;
        if (method.kind == Method::Kind::MatchedFilter) {
          const MixingModel model(data->filters, sc.num_samples,
                                  solver.norm_iterations, solver.seed);
          estimate = matched_filter_start(model, data->mixture.samples());
        } else {
          SeparationResult result =
              sslr_separate(data->mixture, data->filters, solver, *stft_cfg);
          row.iters = result.total_iterations();
          estimate = result.estimates.samples();
        }
        const auto scores = sdr_per_channel(estimate, data->sources.samples());
        std::tie(row.mean_sdr_db, row.std_sdr_db) = mean_std(scores);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.wall_ms = std::chrono::duration<double, std::milli>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      if (progress) progress(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << "scenario_id,method_id,seed,N,M,r,mean_sdr_db,std_sdr_db,iters,"
         "config_hash,status\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << csv_field(r.scenario_id) << ',' << csv_field(r.method_id) << ','
        << r.seed << ',' << r.num_sources << ',' << r.num_mics << ','
        << r.rank << ',' << r.mean_sdr_db << ',' << r.std_sdr_db << ','
        << r.iters << ',' << std::hex << std::setw(16) << std::setfill('0')
        << r.config_hash << std::dec << std::setfill(' ') << ','
        << csv_field(r.status) << '\n';
  }
  return out.str();
}

std::string timings_csv(const std::vector<BenchmarkRow>& rows) {
  std::ostringstream out;
  out << "scenario_id,method_id,wall_ms\n" << std::fixed << std::setprecision(1);
  for (const auto& r : rows)
    out << csv_field(r.scenario_id) << ',' << csv_field(r.method_id) << ','
        << r.wall_ms << '\n';
  return out.str();
}

std::string summary_table(const std::vector<BenchmarkRow>& rows) {
  // (N, method) -> per-scenario mean SDRs, methods kept in first-seen order.
  std::map<std::size_t, std::vector<std::string>> order;
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> cells;
  for (const auto& r : rows) {
    if (r.status != "ok") continue;
    auto key = std::make_pair(r.num_sources, r.method_id);
    if (!cells.count(key)) order[r.num_sources].push_back(r.method_id);
    cells[key].push_back(r.mean_sdr_db);
  }
  std::ostringstream out;
  out << std::left << std::setw(6) << "N" << std::setw(18) << "method"
      << std::right << std::setw(12) << "SDR (dB)" << std::setw(10) << "+-"
      << std::setw(8) << "runs" << '\n'
      << std::fixed << std::setprecision(2);
  for (const auto& [n, methods] : order) {
    for (const auto& m : methods) {
      const auto& v = cells[{n, m}];
      const auto [mean, sd] = mean_std(v);
      out << std::left << std::setw(6) << n << std::setw(18) << m << std::right
          << std::setw(12) << mean << std::setw(10) << sd << std::setw(8)
          << v.size() << '\n';
    }
  }
  return out.str();
}

}  // namespace sslr
