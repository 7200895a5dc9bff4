#include "bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "chi2.hpp"
#include "errors.hpp"
#include "residual.hpp"
#include "retrieval.hpp"
#include "rng.hpp"
#include "structured.hpp"

namespace lrthcr {

namespace {

using nlohmann::json;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

bool is_failure_code(ErrorCode c) {
  return c == ErrorCode::RetrievalFailure || c == ErrorCode::InfeasibleConstraint ||
         c == ErrorCode::NonConvergence || c == ErrorCode::InsufficientSnapshots;
}

// Runs fn(0..items-1) on a small worker pool; per-item state keeps the
// aggregation order-independent. lrthcr errors inside fn must be handled by
// fn itself; anything else is rethrown after the join.
void parallel_for(int items, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, items));
  if (threads == 1) {
    for (int i = 0; i < items; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> fatal{false};
  std::string fatal_msg;
  std::mutex fatal_mutex;
  auto worker = [&]() {
    for (int i = next.fetch_add(1); i < items; i = next.fetch_add(1)) {
      if (fatal.load()) return;
      try {
        fn(i);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        fatal_msg = e.what();
        fatal.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (fatal.load()) fail(ErrorCode::InvalidInput, "worker failed: " + fatal_msg);
}

std::vector<double> to_doubles(const RVec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

RVec from_doubles(const std::vector<double>& v) {
  return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const char* mode_name(SolverMode m) {
  switch (m) {
    case SolverMode::Regularized: return "regularized";
    case SolverMode::NoisePlugged: return "noise-plugged";
    case SolverMode::Constrained: return "constrained";
  }
  return "constrained";
}

SolverMode mode_from_name(const std::string& s) {
  if (s == "regularized") return SolverMode::Regularized;
  if (s == "noise-plugged") return SolverMode::NoisePlugged;
  if (s == "constrained") return SolverMode::Constrained;
  fail(ErrorCode::ConfigError, "unknown solver mode: " + s);
}

json solver_to_json(const SolverConfig& s) {
  return json{{"mode", mode_name(s.mode)},
              {"tau", s.tau},
              {"c1", s.c1},
              {"c2", s.c2},
              {"p", s.p_deviation},
              {"rho", s.rho},
              {"max_iter", s.max_iter},
              {"tol_primal", s.tol_primal},
              {"tol_dual", s.tol_dual},
              {"bisect_iters", s.bisect_iters}};
}

void solver_from_json(const json& j, SolverConfig* s) {
  if (j.contains("mode")) s->mode = mode_from_name(j.at("mode").get<std::string>());
  s->tau = j.value("tau", s->tau);
  s->c1 = j.value("c1", s->c1);
  s->c2 = j.value("c2", s->c2);
  s->p_deviation = j.value("p", s->p_deviation);
  s->rho = j.value("rho", s->rho);
  s->max_iter = j.value("max_iter", s->max_iter);
  s->tol_primal = j.value("tol_primal", s->tol_primal);
  s->tol_dual = j.value("tol_dual", s->tol_dual);
  s->bisect_iters = j.value("bisect_iters", s->bisect_iters);
}

// Per-trial scene: fixed entries come from the config, missing ones are
// drawn from the trial's own stream (frequencies uniform on (-1/2, 1/2],
// phases uniform on (0, pi], unit powers).
HarmonicScene trial_scene(const ExperimentConfig& cfg, int k, Rng* rng) {
  RVec f, phi, r;
  if (cfg.frequencies.size() > 0) {
    f = cfg.frequencies;
    k = static_cast<int>(f.size());
  } else {
    f.resize(k);
    for (int i = 0; i < k; ++i) {
      bool distinct = false;
      while (!distinct) {
        f[i] = rng->uniform_in(-0.5, 0.5);
        distinct = true;
        for (int l = 0; l < i; ++l)
          if (f[l] == f[i]) distinct = false;
      }
    }
  }
  if (cfg.phases.size() > 0) {
    phi = cfg.phases;
  } else {
    phi.resize(k);
    for (int i = 0; i < k; ++i) phi[i] = rng->uniform_in(0.0, 3.14159265358979323846);
  }
  if (cfg.powers.size() > 0) {
    r = cfg.powers;
  } else {
    r = RVec::Ones(k);
  }
  return HarmonicScene::make(f, phi, r);
}

double auto_tau_augmented(const CMat& rz, int snapshots, const SolverConfig& s) {
  return s.tau > 0.0 ? s.tau : theorem1_tau(rz, snapshots, s.c1, s.c2);
}

// LRTHCR reconstruction under the configured mode.
CMat lrthcr_estimate(const SampleMoments& m, const MeasurementDesign& design,
                     const SolverConfig& scfg) {
  switch (scfg.mode) {
    case SolverMode::Regularized: {
      const CMat rz = build_rz(m);
      return lrthcr_regularized(rz, design,
                                auto_tau_augmented(rz, m.snapshot_count, scfg), scfg)
          .estimate.matrix;
    }
    case SolverMode::NoisePlugged: {
      const CMat rz = build_rz(m);
      return lrthcr_noise_plugged(rz, design,
                                  auto_tau_augmented(rz, m.snapshot_count, scfg), scfg)
          .estimate.matrix;
    }
    case SolverMode::Constrained:
    default: {
      const ResidualModel rm = estimate_rq(m, scfg.p_deviation);
      return lrthcr_constrained(m, design, rm, scfg).estimate.matrix;
    }
  }
}

struct SweepPoint {
  double value = 0.0;
  int snapshots = 0;
  double sigma2 = 0.0;
  int k = 0;
};

}  // namespace

void ExperimentConfig::validate() const {
  if (full_dim < 1) fail(ErrorCode::ConfigError, "M must be >= 1");
  if (omega.empty() && dense_j.size() == 0)
    fail(ErrorCode::ConfigError, "either omega or J must be given");
  if (snr_db.has_value() == sigma2.has_value())
    fail(ErrorCode::ConfigError, "exactly one of snr_db / sigma2 must be set");
  if (trials < 1) fail(ErrorCode::ConfigError, "trials must be >= 1");
  if (snapshots < 1) fail(ErrorCode::ConfigError, "L must be >= 1");
  if (!(peak_step > 0.0) || peak_step > 0.5)
    fail(ErrorCode::ConfigError, "peak_step must lie in (0, 1/2]");
  solver.validate();

  auto check_ascending = [](const auto& v, const char* name) {
    if (v.empty()) fail(ErrorCode::ConfigError, std::string(name) + " sweep is empty");
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1]))
        fail(ErrorCode::ConfigError, std::string(name) + " sweep must be ascending");
  };
  if (kind == "nee") {
    check_ascending(sweep_k, "K");
    check_ascending(sweep_l, "L");
    if (frequencies.size() > 0)
      fail(ErrorCode::ConfigError,
           "nee experiments draw random scenes; leave f unset");
  } else if (kind == "rmse-snr" || kind == "rmse-l") {
    if (kind == "rmse-snr")
      check_ascending(sweep_snr, "snr_db");
    else
      check_ascending(sweep_l, "L");
    if (frequencies.size() == 0)
      fail(ErrorCode::ConfigError, "rmse experiments need fixed frequencies");
    if (methods.empty()) fail(ErrorCode::ConfigError, "method list is empty");
    for (const auto& m : methods) {
      if (m != method_names::kConstrained && m != method_names::kRegularized &&
          m != method_names::kNoisePlugged && m != method_names::kCmra &&
          m != method_names::kNcMusicDirect)
        fail(ErrorCode::ConfigError, "unknown method: " + m);
    }
  } else {
    fail(ErrorCode::ConfigError, "unknown experiment kind: " + kind);
  }
  if (frequencies.size() > 0) {
    HarmonicScene probe{frequencies,
                        phases.size() > 0 ? phases : RVec::Zero(frequencies.size()),
                        powers.size() > 0 ? powers : RVec::Ones(frequencies.size())};
    probe.validate();
  }
}

MeasurementDesign ExperimentConfig::make_design() const {
  if (!omega.empty()) return MeasurementDesign::selection(full_dim, omega);
  return MeasurementDesign::dense(dense_j);
}

double ExperimentConfig::noise_var(double total_power, int k) const {
  if (sigma2.has_value()) return *sigma2;
  const double per_source = total_power / std::max(1, k);
  return per_source * std::pow(10.0, -(*snr_db) / 10.0);
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["kind"] = kind;
  j["M"] = full_dim;
  if (!omega.empty()) j["omega"] = omega;
  if (dense_j.size() > 0) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < dense_j.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < dense_j.cols(); ++c)
        row.push_back({dense_j(r, c).real(), dense_j(r, c).imag()});
      rows.push_back(row);
    }
    j["J"] = rows;
  }
  if (frequencies.size() > 0) j["f"] = to_doubles(frequencies);
  if (phases.size() > 0) j["phi"] = to_doubles(phases);
  if (powers.size() > 0) j["r"] = to_doubles(powers);
  j["K"] = k_sources;
  if (snr_db) j["snr_db"] = *snr_db;
  if (sigma2) j["sigma2"] = *sigma2;
  j["L"] = snapshots;
  j["trials"] = trials;
  j["seed"] = seed;
  j["threads"] = threads;
  j["methods"] = methods;
  j["solver"] = solver_to_json(solver);
  j["peak_step"] = peak_step;
  json sweep;
  if (kind == "nee") {
    sweep["K"] = sweep_k;
    sweep["L"] = sweep_l;
  } else if (kind == "rmse-snr") {
    sweep["snr_db"] = sweep_snr;
  } else {
    sweep["L"] = sweep_l;
  }
  j["sweep"] = sweep;
  if (!out_dir.empty()) j["out"] = out_dir;
  if (!csv_name.empty()) j["csv_name"] = csv_name;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.kind = j.value("kind", cfg.kind);
    cfg.full_dim = j.value("M", cfg.full_dim);
    if (j.contains("omega")) cfg.omega = j.at("omega").get<std::vector<int>>();
    if (j.contains("J")) {
      cfg.omega.clear();
      const auto& rows = j.at("J");
      const auto nr = rows.size();
      const auto nc = rows.empty() ? 0 : rows.at(0).size();
      cfg.dense_j.resize(nr, nc);
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t c = 0; c < nc; ++c) {
          const auto& cell = rows.at(r).at(c);
          cfg.dense_j(r, c) = Complex(cell.at(0).get<double>(), cell.at(1).get<double>());
        }
    }
    if (j.contains("f")) cfg.frequencies = from_doubles(j.at("f").get<std::vector<double>>());
    if (j.contains("phi")) cfg.phases = from_doubles(j.at("phi").get<std::vector<double>>());
    if (j.contains("r")) cfg.powers = from_doubles(j.at("r").get<std::vector<double>>());
    cfg.k_sources = j.value("K", cfg.k_sources);
    if (j.contains("snr_db")) cfg.snr_db = j.at("snr_db").get<double>();
    if (j.contains("sigma2")) {
      cfg.sigma2 = j.at("sigma2").get<double>();
      if (!j.contains("snr_db")) cfg.snr_db.reset();
    }
    cfg.snapshots = j.value("L", cfg.snapshots);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.threads = j.value("threads", cfg.threads);
    if (j.contains("methods"))
      cfg.methods = j.at("methods").get<std::vector<std::string>>();
    if (j.contains("solver")) solver_from_json(j.at("solver"), &cfg.solver);
    cfg.peak_step = j.value("peak_step", cfg.peak_step);
    if (j.contains("sweep")) {
      const auto& sweep = j.at("sweep");
      if (sweep.contains("K")) cfg.sweep_k = sweep.at("K").get<std::vector<int>>();
      if (sweep.contains("L")) cfg.sweep_l = sweep.at("L").get<std::vector<int>>();
      if (sweep.contains("snr_db"))
        cfg.sweep_snr = sweep.at("snr_db").get<std::vector<double>>();
    }
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.csv_name = j.value("csv_name", cfg.csv_name);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigError, std::string("config field error: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

ExperimentConfig ExperimentConfig::fig1_defaults() {
  ExperimentConfig cfg;
  cfg.kind = "nee";
  cfg.full_dim = 13;
  cfg.omega = {1, 2, 3, 4, 5, 6, 7, 13};
  cfg.frequencies = RVec();
  cfg.snr_db = 10.0;
  cfg.trials = 300;
  cfg.sweep_k = {1, 2, 3, 4, 5, 6};
  cfg.sweep_l = {100, 400, 1600};
  cfg.csv_name = "fig1";
  return cfg;
}

ExperimentConfig ExperimentConfig::fig2_defaults() {
  ExperimentConfig cfg;
  cfg.kind = "rmse-snr";
  cfg.full_dim = 7;
  cfg.omega = {1, 2, 5, 7};
  cfg.frequencies = from_doubles({-0.3, 0.0, 0.2, 0.4});
  cfg.powers = RVec::Ones(4);
  cfg.snapshots = 300;
  cfg.trials = 300;
  cfg.sweep_snr = {-10, -5, 0, 5, 10, 15, 20};
  cfg.csv_name = "fig2";
  return cfg;
}

ExperimentConfig ExperimentConfig::fig3_defaults() {
  ExperimentConfig cfg = fig2_defaults();
  cfg.kind = "rmse-l";
  cfg.snr_db = 0.0;
  cfg.sweep_l = {50, 100, 200, 400, 800, 1600, 3200};
  cfg.csv_name = "fig3";
  return cfg;
}

ToeplitzFit baseline_cmra(const SampleMoments& m, const MeasurementDesign& design,
                          const ExperimentConfig& cfg) {
  const int n = design.compressed_dim();
  const double sig2 = smallest_eig(m.cov);
  const CMat data = hermitize(m.cov) - sig2 * CMat::Identity(n, n);
  double tau = cfg.solver.tau;
  if (!(tau > 0.0)) {
    const double l = std::max(2, m.snapshot_count);
    tau = (cfg.solver.c1 * (m.cov.trace().real() - n * sig2) + cfg.solver.c2 * sig2) *
          std::sqrt(std::log(l) / l);
    tau = std::max(tau, 1e-300);
  }
  return cmra_toeplitz_fit(data, design, tau, cfg.solver);
}

RVec baseline_nc_music_direct(const SnapshotBatch& batch,
                              const MeasurementDesign& design, int k, double step) {
  if (batch.snapshot_count() < 2)
    fail(ErrorCode::InsufficientSnapshots, "direct subspace search needs L > 1");
  const CMat rz = build_rz(sample_moments(batch));
  return nc_music_spectrum_compressed(rz, design, k, step).peaks;
}

RVec method_estimate(const std::string& method, const SampleMoments& m,
                     const MeasurementDesign& design, int k,
                     const ExperimentConfig& cfg) {
  if (method == method_names::kConstrained) {
    const ResidualModel rm = estimate_rq(m, cfg.solver.p_deviation);
    SolverConfig scfg = cfg.solver;
    scfg.mode = SolverMode::Constrained;
    const SolveReport rep = lrthcr_constrained(m, design, rm, scfg);
    return nc_music_spectrum(rep.estimate.matrix, k, cfg.peak_step).peaks;
  }
  if (method == method_names::kRegularized || method == method_names::kNoisePlugged) {
    const CMat rz = build_rz(m);
    const double tau = auto_tau_augmented(rz, m.snapshot_count, cfg.solver);
    const SolveReport rep = method == method_names::kRegularized
                                ? lrthcr_regularized(rz, design, tau, cfg.solver)
                                : lrthcr_noise_plugged(rz, design, tau, cfg.solver);
    return nc_music_spectrum(rep.estimate.matrix, k, cfg.peak_step).peaks;
  }
  if (method == method_names::kCmra) {
    const ToeplitzFit fit = baseline_cmra(m, design, cfg);
    return music_spectrum(fit.matrix, k, cfg.peak_step).peaks;
  }
  if (method == method_names::kNcMusicDirect) {
    if (m.snapshot_count < 2)
      fail(ErrorCode::InsufficientSnapshots, "direct subspace search needs L > 1");
    return nc_music_spectrum_compressed(build_rz(m), design, k, cfg.peak_step).peaks;
  }
  fail(ErrorCode::ConfigError, "unknown method: " + method);
}

namespace {

std::vector<ResultRecord> run_nee(const ExperimentConfig& cfg, json* meta) {
  const MeasurementDesign design = cfg.make_design();
  std::vector<ResultRecord> records;
  json point_meta = json::array();

  std::vector<SweepPoint> points;
  for (int k : cfg.sweep_k)
    for (int l : cfg.sweep_l)
      points.push_back({static_cast<double>(k), l, cfg.noise_var(k, k), k});

  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    const SweepPoint& point = points[pt];
    std::vector<double> err(cfg.trials, 0.0), ref(cfg.trials, 0.0),
        secs(cfg.trials, 0.0);
    std::vector<int> failed(cfg.trials, 0);

    parallel_for(cfg.trials, cfg.threads, [&](int t) {
      const std::uint64_t global = pt * static_cast<std::uint64_t>(cfg.trials) + t;
      Rng scene_rng(cfg.seed, 2 * global + 1);
      const HarmonicScene scene = trial_scene(cfg, point.k, &scene_rng);
      const CMat truth =
          assemble_augmented(THParams::from_scene(scene, cfg.full_dim)).matrix;
      const SnapshotBatch batch = synthesize_snapshots(
          scene, design, point.snapshots, point.sigma2, cfg.seed, 2 * global);
      const SampleMoments m = sample_moments(batch);
      const double t0 = now_seconds();
      try {
        const CMat est = lrthcr_estimate(m, design, cfg.solver);
        err[t] = (est - truth).norm();
        ref[t] = truth.norm();
      } catch (const Error& e) {
        if (!is_failure_code(e.code())) throw;
        failed[t] = 1;
      }
      secs[t] = now_seconds() - t0;
    });

    double err_sum = 0.0, ref_sum = 0.0, wall = 0.0;
    int failures = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      failures += failed[t];
      wall += secs[t];
      if (!failed[t]) {
        err_sum += err[t];
        ref_sum += ref[t];
      }
    }
    const int used = cfg.trials - failures;
    const double nee = used > 0 && ref_sum > 0.0
                           ? err_sum / ref_sum
                           : std::numeric_limits<double>::quiet_NaN();
    ResultRecord rec{"LRTHCR", "K,L", point.value, "NEE", nee, used, failures, wall};
    records.push_back(rec);
    point_meta.push_back(json{{"K", point.k},
                              {"L", point.snapshots},
                              {"NEE", nee},
                              {"trials_used", used},
                              {"failures", failures},
                              {"wall_seconds", wall}});
  }
  (*meta)["points"] = point_meta;
  return records;
}

std::vector<ResultRecord> run_rmse(const ExperimentConfig& cfg, json* meta) {
  const MeasurementDesign design = cfg.make_design();
  const RVec truth = cfg.frequencies;
  const int k = static_cast<int>(truth.size());
  const double total_power =
      cfg.powers.size() > 0 ? cfg.powers.sum() : static_cast<double>(k);
  const bool sweep_is_snr = cfg.kind == "rmse-snr";

  std::vector<SweepPoint> points;
  if (sweep_is_snr) {
    for (double snr : cfg.sweep_snr) {
      ExperimentConfig probe = cfg;
      probe.snr_db = snr;
      probe.sigma2.reset();
      points.push_back({snr, cfg.snapshots, probe.noise_var(total_power, k), k});
    }
  } else {
    for (int l : cfg.sweep_l)
      points.push_back({static_cast<double>(l), l, cfg.noise_var(total_power, k), k});
  }

  const int n_methods = static_cast<int>(cfg.methods.size());
  std::vector<ResultRecord> records(points.size() * n_methods);
  json point_meta = json::array();

  for (std::size_t pt = 0; pt < points.size(); ++pt) {
    const SweepPoint& point = points[pt];
    std::vector<std::vector<RVec>> est(n_methods,
                                       std::vector<RVec>(cfg.trials));
    std::vector<std::vector<char>> ok(n_methods,
                                      std::vector<char>(cfg.trials, 0));
    std::vector<std::vector<double>> secs(n_methods,
                                          std::vector<double>(cfg.trials, 0.0));

    parallel_for(cfg.trials, cfg.threads, [&](int t) {
      const std::uint64_t global = pt * static_cast<std::uint64_t>(cfg.trials) + t;
      Rng scene_rng(cfg.seed, 2 * global + 1);
      const HarmonicScene scene = trial_scene(cfg, k, &scene_rng);
      const SnapshotBatch batch = synthesize_snapshots(
          scene, design, point.snapshots, point.sigma2, cfg.seed, 2 * global);
      const SampleMoments m = sample_moments(batch);
      for (int mi = 0; mi < n_methods; ++mi) {
        const double t0 = now_seconds();
        try {
          est[mi][t] = method_estimate(cfg.methods[mi], m, design, k, cfg);
          ok[mi][t] = 1;
        } catch (const Error& e) {
          if (!is_failure_code(e.code())) throw;
        }
        secs[mi][t] = now_seconds() - t0;
      }
    });

    for (int mi = 0; mi < n_methods; ++mi) {
      std::vector<RVec> good;
      double wall = 0.0;
      for (int t = 0; t < cfg.trials; ++t) {
        wall += secs[mi][t];
        if (ok[mi][t]) good.push_back(est[mi][t]);
      }
      const int used = static_cast<int>(good.size());
      const double value = used > 0 ? rmse(good, truth)
                                    : std::numeric_limits<double>::quiet_NaN();
      ResultRecord rec{cfg.methods[mi],
                       sweep_is_snr ? "snr_db" : "L",
                       point.value,
                       "RMSE",
                       value,
                       used,
                       cfg.trials - used,
                       wall};
      records[mi * points.size() + pt] = rec;
      point_meta.push_back(json{{"method", cfg.methods[mi]},
                                {sweep_is_snr ? "snr_db" : "L", point.value},
                                {"rmse", value},
                                {"trials_used", used},
                                {"failures", cfg.trials - used},
                                {"wall_seconds", wall}});
    }
  }
  (*meta)["points"] = point_meta;
  return records;
}

void write_outputs(const ExperimentConfig& cfg,
                   const std::vector<ResultRecord>& records, json meta) {
  if (cfg.out_dir.empty()) return;
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create output directory: " + cfg.out_dir);

  std::string name = cfg.csv_name.empty() ? cfg.kind : cfg.csv_name;
  const fs::path csv_path = fs::path(cfg.out_dir) / (name + ".csv");
  std::string text;
  if (cfg.kind == "nee") {
    text = "K,L,NEE\n";
    std::size_t i = 0;
    for (int k : cfg.sweep_k)
      for (int l : cfg.sweep_l) {
        text += std::to_string(k) + "," + std::to_string(l) + "," +
                fmt_g(records[i].value) + "\n";
        ++i;
      }
  } else {
    const bool sweep_is_snr = cfg.kind == "rmse-snr";
    text = sweep_is_snr ? "method,snr_db,rmse,failures\n" : "method,L,rmse,failures\n";
    for (const auto& rec : records) {
      text += rec.method + "," +
              (sweep_is_snr ? fmt_g(rec.sweep_value)
                            : std::to_string(static_cast<long long>(rec.sweep_value))) +
              "," + fmt_g(rec.value) + "," + std::to_string(rec.failures) + "\n";
    }
  }
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) fail(ErrorCode::IoError, "cannot write " + csv_path.string());
  csv << text;
  csv.close();

  meta["config"] = json::parse(cfg.to_json_text());
  meta["conventions"] = json{
      {"snr_definition", "SNR_dB = 10 log10(sum r_i / (K sigma^2))"},
      {"nee_definition", "mean ||Ra_est - Ra_true||_F / mean ||Ra_true||_F (unsquared)"},
      {"rmse_matching", "nearest wraparound frequency assignment"},
      {"failed_trials", "excluded from the metric, counted in failures"}};
  const fs::path meta_path = fs::path(cfg.out_dir) / (name + ".meta.json");
  std::ofstream ms(meta_path, std::ios::binary);
  if (!ms) fail(ErrorCode::IoError, "cannot write " + meta_path.string());
  ms << meta.dump(2) << "\n";
}

}  // namespace

std::vector<ResultRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  json meta;
  std::vector<ResultRecord> records =
      cfg.kind == "nee" ? run_nee(cfg, &meta) : run_rmse(cfg, &meta);
  write_outputs(cfg, records, std::move(meta));
  return records;
}

}  // namespace lrthcr
