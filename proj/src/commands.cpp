#include "sslr/cli.hpp"
#include "sslr/mixing.hpp"
#include "sslr/wav.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace sslr {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() + ": " +
                  ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path))
    throw IoError(what + " not found: " + path.string());
}

std::string rounds_csv(const std::vector<IterationDiagnostics>& rounds) {
  std::ostringstream out;
  out << "round," << "iter,residual,objective,s_change,rank_excess,wall_ms\n";
  for (std::size_t k = 0; k < rounds.size(); ++k) {
    std::istringstream lines(diagnostics_csv(rounds[k]));
    std::string line;
    std::getline(lines, line);  // header
    while (std::getline(lines, line)) out << k << ',' << line << '\n';
  }
  return out.str();
}

void write_source(const MultichannelSignal& sig, const fs::path& path,
                  std::ostream& log) {
  const std::size_t clipped = write_wav(sig, path);
  if (clipped > 0)
    log << "warning: " << clipped << " samples clipped in " << path.string() << '\n';
}

MultichannelSignal row_signal(const SignalMatrix& m, Eigen::Index row, double fs) {
  return MultichannelSignal(SignalMatrix(m.row(row)), fs);
}

MultichannelSignal read_truth(const std::vector<fs::path>& paths) {
  std::vector<MultichannelSignal> parts;
  std::size_t channels = 0;
  for (const auto& p : paths) {
    require_file(p, "truth file");
    parts.push_back(read_wav(p));
    channels += parts.back().num_channels();
    if (parts.back().num_samples() != parts.front().num_samples())
      throw ConfigError("truth files have different lengths");
  }
  SignalMatrix all(Eigen::Index(channels), Eigen::Index(parts.front().num_samples()));
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    all.middleRows(row, p.samples().rows()) = p.samples();
    row += p.samples().rows();
  }
  return MultichannelSignal(std::move(all), parts.front().sample_rate());
}

std::vector<Method> select_methods(const RunConfig& cfg) {
  const auto all = default_methods(cfg.benchmark.base.rank_sweep, cfg.solver);
  if (cfg.benchmark.methods.empty()) return all;
  std::vector<Method> picked;
  for (const auto& id : cfg.benchmark.methods) {
    auto it = std::find_if(all.begin(), all.end(),
                           [&](const Method& m) { return m.id == id; });
    if (it == all.end())
      throw ConfigError("benchmark: unknown method '" + id + "'");
    picked.push_back(*it);
  }
  return picked;
}

}  // namespace

int cmd_separate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  require_file(cfg.mixture, "mixture file");
  require_file(cfg.filters, "filters file");
  const MultichannelSignal x = read_wav(cfg.mixture);
  const FilterBank filters = read_filter_bank(cfg.filters);
  if (filters.num_out() != x.num_channels())
    throw ConfigError("filter bank has " + std::to_string(filters.num_out()) +
                      " outputs but the mixture has " +
                      std::to_string(x.num_channels()) + " channels");
  std::optional<MultichannelSignal> truth;
  if (!cfg.truth.empty()) {
    truth = read_truth(cfg.truth);
    if (truth->num_channels() != filters.num_in() ||
        truth->num_samples() != x.num_samples())
      throw ConfigError("truth must hold " + std::to_string(filters.num_in()) +
                        " channels of " + std::to_string(x.num_samples()) +
                        " samples");
  }
  ensure_dir(cfg.out);
  write_text(cfg.out / "manifest.json", manifest_json(cfg));

  const StftConfig stft_cfg =
      StftConfig::cosine(x.num_samples(), cfg.window_len, cfg.redundancy);
  SeparationResult result;
  try {
    result = sslr_separate(x, filters, cfg.solver, stft_cfg);
  } catch (const DivergenceError& e) {
    write_text(cfg.out / "diagnostics.csv", rounds_csv({e.diagnostics()}));
    throw;
  }
  write_text(cfg.out / "diagnostics.csv", rounds_csv(result.rounds));

  const SignalMatrix& est = result.estimates.samples();
  for (Eigen::Index n = 0; n < est.rows(); ++n)
    write_source(row_signal(est, n, x.sample_rate()),
                 cfg.out / ("source_" + std::to_string(n) + ".wav"), log);

  if (truth) {
    result.sdr_per_source = sdr_per_channel(est, truth->samples());
    std::ostringstream report;
    report << "source,sdr_db\n" << std::fixed << std::setprecision(4);
    for (std::size_t n = 0; n < result.sdr_per_source->size(); ++n)
      report << n << ',' << (*result.sdr_per_source)[n] << '\n';
    write_text(cfg.out / "sdr.csv", report.str());
    if (cfg.verbosity > 0) log << report.str();
  }
  if (cfg.verbosity > 0) {
    const auto& last = result.rounds.back();
    log << "separated " << est.rows() << " sources in "
        << result.total_iterations() << " iterations over "
        << result.rounds.size() << " rounds; final residual "
        << last.records.back().residual << '\n';
  }
  return kExitOk;
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto methods = select_methods(cfg);
  const auto scenarios = cfg.benchmark.scenarios();
  ensure_dir(cfg.out);
  write_text(cfg.out / "manifest.json", manifest_json(cfg));
  const auto rows = run_benchmark(scenarios, methods, [&](const BenchmarkRow& r) {
    if (cfg.verbosity > 0)
      log << r.scenario_id << ' ' << r.method_id << ' ' << std::fixed
          << std::setprecision(2) << r.mean_sdr_db << " dB " << r.status
          << std::defaultfloat << '\n';
  });
  write_text(cfg.out / "benchmark.csv", benchmark_csv(rows));
  write_text(cfg.out / "timings.csv", timings_csv(rows));
  const std::string table = summary_table(rows);
  write_text(cfg.out / "summary.txt", table);
  log << table;
  const bool all_ok = std::all_of(rows.begin(), rows.end(),
                                  [](const BenchmarkRow& r) { return r.status == "ok"; });
  return all_ok ? kExitOk : kExitBenchmarkPartial;
}

int cmd_selftest(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const auto checks = run_selftest(cfg.window_len, cfg.redundancy, cfg.solver.seed);
  std::vector<std::string> failed;
  for (const auto& c : checks) {
    log << (c.passed() ? "PASS " : "FAIL ") << std::left << std::setw(34)
        << c.name << std::right << " residual=" << std::scientific
        << std::setprecision(3) << c.residual << " tol=" << c.tolerance
        << std::defaultfloat << '\n';
    if (!c.passed()) failed.push_back(c.name);
  }
  if (failed.empty()) return kExitOk;
  log << "failed:";
  for (const auto& f : failed) log << ' ' << f;
  log << '\n';
  return kExitSelftest;
}

int cmd_gen_filters(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const GeneratorSpec& g = cfg.generator;
  ensure_dir(cfg.out);
  const FilterBank bank = generate_synthetic_filters(
      g.num_mics, g.num_sources, g.filter_len, g.filter_decay, g.seed);
  write_filter_bank(bank, cfg.out / "filters.txt");
  if (cfg.verbosity > 0)
    log << "wrote " << (cfg.out / "filters.txt").string() << '\n';
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const GeneratorSpec& g = cfg.generator;
  Scenario sc;
  sc.id = "synth";
  sc.seed = g.seed;
  sc.num_mics = g.num_mics;
  sc.num_sources = g.num_sources;
  sc.num_samples = g.num_samples;
  sc.sample_rate = g.sample_rate;
  sc.filter_len = g.filter_len;
  sc.filter_decay = g.filter_decay;
  sc.source_rank = g.source_rank;
  sc.window_len = cfg.window_len;
  sc.redundancy = cfg.redundancy;
  sc.rank_sweep = {};
  const ScenarioData data = realize_scenario(sc);
  ensure_dir(cfg.out);
  write_filter_bank(data.filters, cfg.out / "filters.txt");
  write_source(data.mixture, cfg.out / "mixture.wav", log);
  write_source(data.sources, cfg.out / "sources.wav", log);
  write_text(cfg.out / "manifest.json", manifest_json(cfg));
  if (cfg.verbosity > 0)
    log << "wrote filters.txt, mixture.wav and sources.wav to "
        << cfg.out.string() << '\n';
  return kExitOk;
}

bool parse_command_line(int argc, const char* const* argv, RunConfig& cfg,
                        int& exit_code, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reverberant source separation with sparse and low-rank priors"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path, mixture, filters, out_dir, rank;
  std::vector<std::string> truth, methods;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> sources_list, rank_sweep;
  double eps = 0, gamma = 0, decay = 0, fs = 0;
  std::size_t rounds = 0, iters = 0, window = 0, redundancy = 0, mics = 0,
              num_sources = 0, samples = 0, filter_len = 0, source_rank = 0;
  std::uint64_t seed = 0;
  int verbose = 0;
  bool quiet = false;

  auto* o_config = app.add_option("--config", config_path, "JSON run configuration");
  auto* o_mixture = app.add_option("--mixture", mixture, "mixture WAV (M channels)");
  auto* o_filters = app.add_option("--filters", filters, "filter-bank text file");
  auto* o_truth = app.add_option("--truth", truth, "ground-truth source WAVs");
  auto* o_out = app.add_option("--out", out_dir, "output directory");
  auto* o_eps = app.add_option("--eps", eps, "data-fidelity radius (default 1e-4)");
  auto* o_rank = app.add_option("--rank", rank, "rank budget, or 'off' (default 10)");
  auto* o_rounds = app.add_option("--rounds", rounds, "reweighting rounds");
  auto* o_iters = app.add_option("--iters", iters, "iterations per round");
  auto* o_gamma = app.add_option("--gamma", gamma, "proximal step gamma (default: scaled to the data)");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  auto* o_window = app.add_option("--window", window, "STFT window length");
  auto* o_red = app.add_option("--redundancy", redundancy, "STFT redundancy");
  app.add_flag("-v,--verbose", verbose, "more output");
  app.add_flag("-q,--quiet", quiet, "errors only");

  auto* sep = app.add_subcommand("separate", "separate a mixture with known filters");
  auto* bench = app.add_subcommand("benchmark", "synthetic benchmark");
  auto* o_seeds = bench->add_option("--seeds", seeds, "scenario seeds");
  auto* o_nlist = bench->add_option("--num-sources", sources_list, "values of N");
  auto* o_methods = bench->add_option("--methods", methods, "method ids");
  auto* o_sweep = bench->add_option("--rank-sweep", rank_sweep, "SSLR rank budgets (default 5 10 20 30)");
  auto* self = app.add_subcommand("selftest", "invariant checks");
  auto* gen = app.add_subcommand("gen-filters", "write synthetic mixing filters");
  auto* synth = app.add_subcommand("synth", "write a synthetic mixture");
  std::vector<CLI::Option*> gen_opts;
  for (auto* sub : {bench, gen, synth}) {
    gen_opts.push_back(sub->add_option("--mics", mics, "M"));
    gen_opts.push_back(sub->add_option("--samples", samples, "T"));
    gen_opts.push_back(sub->add_option("--filter-len", filter_len, "taps per filter"));
    gen_opts.push_back(sub->add_option("--decay", decay, "envelope decay in taps"));
    gen_opts.push_back(sub->add_option("--source-rank", source_rank, "rank of each source"));
    gen_opts.push_back(sub->add_option("--sample-rate", fs, "Hz"));
  }
  for (auto* sub : {gen, synth})
    gen_opts.push_back(sub->add_option("--sources", num_sources, "N"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    exit_code = app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    return false;
  }

  if (o_config->count()) cfg = load_config(config_path);
  if (sep->parsed()) cfg.command = Command::Separate;
  if (bench->parsed()) cfg.command = Command::Benchmark;
  if (self->parsed()) cfg.command = Command::Selftest;
  if (gen->parsed()) cfg.command = Command::GenFilters;
  if (synth->parsed()) cfg.command = Command::Synth;

  if (o_mixture->count()) cfg.mixture = mixture;
  if (o_filters->count()) cfg.filters = filters;
  if (o_truth->count()) cfg.truth.assign(truth.begin(), truth.end());
  if (o_out->count()) cfg.out = out_dir;
  if (o_eps->count()) cfg.solver.eps = eps;
  if (o_rank->count()) {
    if (rank == "off") {
      cfg.solver.rank_enabled = false;
    } else {
      try {
        std::size_t pos = 0;
        const long long r = std::stoll(rank, &pos);
        if (pos != rank.size() || r < 1) throw std::invalid_argument(rank);
        cfg.solver.rank = std::size_t(r);
        cfg.solver.rank_enabled = true;
      } catch (const std::exception&) {
        throw ConfigError("--rank expects a positive integer or 'off', got '" + rank + "'");
      }
    }
  }
  if (o_rounds->count()) cfg.solver.reweight_rounds = rounds;
  if (o_iters->count()) cfg.solver.max_inner_iters = iters;
  if (o_gamma->count()) cfg.solver.gamma = gamma;
  if (o_seed->count()) {
    cfg.solver.seed = seed;
    cfg.generator.seed = seed;
    cfg.benchmark.seeds = {seed};
  }
  if (o_window->count()) cfg.window_len = window;
  if (o_red->count()) cfg.redundancy = redundancy;
  if (o_seeds->count()) cfg.benchmark.seeds = seeds;
  if (o_nlist->count()) cfg.benchmark.num_sources = sources_list;
  if (o_methods->count()) cfg.benchmark.methods = methods;
  if (o_sweep->count()) cfg.benchmark.base.rank_sweep = rank_sweep;

  auto given = [&](std::size_t i) { return gen_opts[i]->count() > 0; };
  for (std::size_t i = 0; i < gen_opts.size(); ++i) {
    if (!given(i)) continue;
    const std::string name = gen_opts[i]->get_name();
    Scenario& b = cfg.benchmark.base;
    GeneratorSpec& g = cfg.generator;
    if (name == "--mics") b.num_mics = g.num_mics = mics;
    if (name == "--samples") b.num_samples = g.num_samples = samples;
    if (name == "--filter-len") b.filter_len = g.filter_len = filter_len;
    if (name == "--decay") b.filter_decay = g.filter_decay = decay;
    if (name == "--source-rank") b.source_rank = g.source_rank = source_rank;
    if (name == "--sample-rate") b.sample_rate = g.sample_rate = fs;
    if (name == "--sources") g.num_sources = num_sources;
  }
  // Scenario-level copies of the shared settings.
  cfg.benchmark.base.eps = cfg.solver.eps;
  cfg.benchmark.base.window_len = cfg.window_len;
  cfg.benchmark.base.redundancy = cfg.redundancy;

  if (quiet) cfg.verbosity = 0;
  cfg.verbosity += verbose;
  return true;
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  try {
    RunConfig cfg;
    int code = kExitOk;
    if (!parse_command_line(argc, argv, cfg, code, out, err)) return code;
    switch (cfg.command) {
      case Command::Separate: return cmd_separate(cfg, out);
      case Command::Benchmark: return cmd_benchmark(cfg, out);
      case Command::Selftest: return cmd_selftest(cfg, out);
      case Command::GenFilters: return cmd_gen_filters(cfg, out);
      case Command::Synth: return cmd_synth(cfg, out);
    }
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "error: solver diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace sslr
