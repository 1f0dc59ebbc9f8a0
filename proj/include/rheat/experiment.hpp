#pragma once

// Command implementations behind the CLI: sheet sampling, scheme runs, the
// convergence study and the self-test. Jobs run on a small worker pool;
// results are stored by job index so output never depends on scheduling.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rheat/config.hpp"
#include "rheat/error.hpp"
#include "rheat/fractional_field.hpp"
#include "rheat/galerkin.hpp"
#include "rheat/io.hpp"
#include "rheat/noise_grid.hpp"
#include "rheat/reference_solutions.hpp"
#include "rheat/sobolev.hpp"
#include "rheat/svg.hpp"

namespace rheat {

/// Runs job(0..count-1) on `threads` workers. The first exception (by job
/// index) is rethrown after all workers stop.
inline void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            job(k);
          } catch (...) {
            errors[k] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Files produced by one command plus a .meta.json sidecar listing the
/// resolved config and the git blob hash of every file.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

  void add(const std::string& name, std::string content, nlohmann::ordered_json info = nlohmann::ordered_json::object()) {
    info["name"] = name;
    info["sha1"] = git_blob_hash(content);
    index_.push_back(std::move(info));
    files_.emplace_back(name, std::move(content));
  }

  const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }

  /// Writes every file and returns the written paths (sidecar last).
  std::vector<std::filesystem::path> write(const ExperimentConfig& config, nlohmann::ordered_json extra = {}) const {
    std::vector<std::filesystem::path> paths;
    for (const auto& [name, content] : files_) {
      write_file(dir_ / name, content);
      paths.push_back(dir_ / name);
    }
    nlohmann::ordered_json meta;
    meta["command"] = command_;
    meta["config"] = to_json(config);
    meta["experimental"] = config.variant == SchemeVariant::synchronized_grid;
    if (!extra.is_null()) meta["summary"] = std::move(extra);
    meta["files"] = index_;
    const auto meta_path = dir_ / (command_ + ".meta.json");
    write_file(meta_path, meta.dump(2) + "\n");
    paths.push_back(meta_path);
    return paths;
  }

 private:
  std::filesystem::path dir_;
  std::string command_;
  std::vector<std::pair<std::string, std::string>> files_;
  nlohmann::ordered_json::array_t index_;
};

namespace detail {

inline std::string tag(int n, std::size_t replica) { return "n" + std::to_string(n) + "_r" + std::to_string(replica); }

inline SheetSample zero_sheet(const SheetConfig& config) {
  return SheetSample::tabulate(config, [](double, double) { return 0.0; });
}

/// Sheet of replica `seed` at level n; the sampler is shared per level.
inline SheetSample replica_sheet(const ExperimentConfig& cfg, const SheetSampler* sampler, int n, std::uint64_t seed) {
  const std::uint64_t s = ExperimentConfig::sheet_seed(seed, n);
  if (cfg.zero_noise || !sampler) return zero_sheet(cfg.sheet(n, s));
  return sampler->sample(s);
}

inline SchemeState run_variant(const ExperimentConfig& cfg, const SheetSample& sheet, long stride) {
  const int n = sheet.level();
  if (cfg.variant == SchemeVariant::synchronized_grid) return run_generic_scheme(sheet, synchronized_grid(n), stride);
  return run_specialized_scheme(sheet, FineGrid{n}, stride);
}

inline long variant_steps(const ExperimentConfig& cfg, int n) {
  return cfg.variant == SchemeVariant::synchronized_grid ? synchronized_grid(n).time_steps : FineGrid{n}.time_steps();
}

inline std::map<int, std::unique_ptr<SheetSampler>> make_samplers(const ExperimentConfig& cfg) {
  std::map<int, std::unique_ptr<SheetSampler>> out;
  for (int n : cfg.levels) out[n] = cfg.zero_noise ? nullptr : std::make_unique<SheetSampler>(cfg.sheet(n, 0));
  return out;
}

struct Job {
  int n;
  std::size_t replica;
};

inline std::vector<Job> jobs_of(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (int n : cfg.levels)
    for (std::size_t r = 0; r < cfg.seeds.size(); ++r) jobs.push_back({n, r});
  return jobs;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// sample-sheet

inline OutputSet cmd_sample_sheet(const ExperimentConfig& cfg) {
  OutputSet out(cfg.out_dir, "sample-sheet");
  const auto samplers = detail::make_samplers(cfg);
  const auto jobs = detail::jobs_of(cfg);
  std::vector<std::optional<SheetSample>> sheets(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& job = jobs[k];
    sheets[k] = detail::replica_sheet(cfg, samplers.at(job.n).get(), job.n, cfg.seeds[job.replica]);
  });
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& job = jobs[k];
    const SheetSample& sheet = *sheets[k];
    const std::string base = "sheet_" + detail::tag(job.n, job.replica);
    nlohmann::ordered_json info{{"level", job.n}, {"replica_seed", cfg.seeds[job.replica]}, {"sheet_seed", sheet.config().seed}};
    out.add(base + ".csv", sheet_to_csv(sheet), info);
    if (cfg.emit_plots) {
      const double edge = std::ldexp(1.0, job.n);
      out.add(base + ".svg", svg::heatmap(sheet.values(), {-edge, edge, "x"}, {0.0, 1.0, "t"},
                                          "sheet n=" + std::to_string(job.n)), info);
      out.add(base + ".dat", svg::heatmap_dat(sheet.values(), sheet.points(), sheet.times()), info);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// run-scheme

/// Saved-row stride: explicit, or about 256 rows per run.
inline long output_stride(const ExperimentConfig& cfg, long steps) {
  return cfg.thin > 0 ? cfg.thin : std::max<long>(1, steps / 256);
}

inline OutputSet cmd_run_scheme(const ExperimentConfig& cfg) {
  OutputSet out(cfg.out_dir, "run-scheme");
  const auto samplers = detail::make_samplers(cfg);
  const auto jobs = detail::jobs_of(cfg);
  std::vector<std::optional<SchemeState>> states(jobs.size());
  std::vector<std::uint64_t> sheet_seeds(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& job = jobs[k];
    const SheetSample sheet = detail::replica_sheet(cfg, samplers.at(job.n).get(), job.n, cfg.seeds[job.replica]);
    sheet_seeds[k] = sheet.config().seed;
    states[k] = detail::run_variant(cfg, sheet, output_stride(cfg, detail::variant_steps(cfg, job.n)));
  });
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& job = jobs[k];
    const SchemeState& st = *states[k];
    const std::string base = "scheme_" + detail::tag(job.n, job.replica);
    nlohmann::ordered_json info{{"level", job.n},
                                {"replica_seed", cfg.seeds[job.replica]},
                                {"sheet_seed", sheet_seeds[k]},
                                {"rows", st.coeffs.rows()},
                                {"cols", st.coeffs.cols()},
                                {"stride", st.stride}};
    out.add(base + ".csv", scheme_to_csv(st), info);
    out.add(base + ".bin", scheme_to_binary(st), info);
    if (cfg.emit_plots) {
      const double edge = st.grid.basis.big_l();
      out.add(base + ".svg", svg::heatmap(st.coeffs, {-edge, edge, "x"}, {0.0, 1.0, "t"},
                                          "scheme n=" + std::to_string(job.n)), info);
      std::vector<double> xs, ts;
      for (long j = st.grid.basis.first(); j <= st.grid.basis.last(); ++j) xs.push_back(st.grid.basis.node(j));
      for (long i : st.saved_steps) ts.push_back(st.grid.time(i));
      out.add(base + ".dat", svg::heatmap_dat(st.coeffs, xs, ts), info);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// convergence

struct ConvergenceRow {
  int level;
  std::size_t replica;
  std::uint64_t sheet_seed;
  double t;
  double error;
};

struct ConvergenceResult {
  std::vector<ConvergenceRow> rows;     // every (level, replica, time)
  std::vector<int> levels;
  std::vector<double> medians;          // per level, of the per-replica sup over times
  std::optional<ErrorReport> report;    // present with >= 2 levels and positive medians
};

/// Steps at which errors are measured: every save point after t = 0 with a
/// stride of steps/4, i.e. t = 1/4, 1/2, 3/4, 1 when the grid allows.
inline std::vector<long> evaluation_steps(long steps) {
  const long stride = std::max<long>(1, steps / 4);
  std::vector<long> out;
  for (long i = stride; i <= steps; i += stride) out.push_back(i);
  if (out.empty() || out.back() != steps) out.push_back(steps);
  return out;
}

inline ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
  const CutoffFunction rho(cfg.window_radius);
  const std::vector<double> xs = window_points(cfg.window_radius, static_cast<std::size_t>(cfg.reference_points));
  const double step = xs[1] - xs[0];
  const auto samplers = detail::make_samplers(cfg);
  const HurstPair hurst = cfg.hurst();

  ConvergenceResult result;
  for (int n : cfg.levels) {
    const long steps = detail::variant_steps(cfg, n);
    const long stride = std::max<long>(1, steps / 4);
    const std::vector<long> eval = evaluation_steps(steps);
    const double dt = 1.0 / static_cast<double>(steps);

    // Reference kernels are sheet independent: build once per level.
    std::vector<std::optional<MildKernel>> kernels(cfg.synthetic ? 0 : eval.size() * xs.size());
    parallel_for(kernels.size(), cfg.threads, [&](std::size_t k) {
      kernels[k].emplace(n, static_cast<double>(eval[k / xs.size()]) * dt, xs[k % xs.size()]);
    });

    std::vector<std::vector<double>> errors(cfg.seeds.size());
    std::vector<std::uint64_t> sheet_seeds(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t r) {
      const SheetSample sheet = detail::replica_sheet(cfg, samplers.at(n).get(), n, cfg.seeds[r]);
      sheet_seeds[r] = sheet.config().seed;
      const SchemeState state = detail::run_variant(cfg, sheet, stride);
      const DiscretizedNoise noise(sheet);
      for (std::size_t e = 0; e < eval.size(); ++e) {
        WindowSamples ref{state.grid.time(eval[e]), UniformSamples{xs.front(), step, std::vector<double>(xs.size())}};
        if (cfg.synthetic) {
          ref.samples = sample_reconstruction(state.at_step(eval[e]), state.grid.basis, ref.samples);
        } else {
          for (std::size_t p = 0; p < xs.size(); ++p) ref.samples.values[p] = kernels[e * xs.size() + p]->apply(noise);
        }
        errors[r].push_back(scheme_error(state, eval[e], ref, rho, hurst, cfg.alpha, cfg.padding));
      }
    });

    std::vector<double> sup(cfg.seeds.size());
    for (std::size_t r = 0; r < cfg.seeds.size(); ++r) {
      for (std::size_t e = 0; e < eval.size(); ++e) {
        result.rows.push_back({n, r, sheet_seeds[r], static_cast<double>(eval[e]) * dt, errors[r][e]});
      }
      sup[r] = *std::max_element(errors[r].begin(), errors[r].end());
    }
    result.levels.push_back(n);
    result.medians.push_back(detail::median(sup));
  }
  const bool positive = std::all_of(result.medians.begin(), result.medians.end(), [](double v) { return v > 0.0; });
  if (result.levels.size() >= 2 && positive) result.report = fit_rate(result.levels, result.medians, cfg.alpha);
  return result;
}

inline OutputSet convergence_outputs(const ExperimentConfig& cfg, const ConvergenceResult& res) {
  OutputSet out(cfg.out_dir, "convergence");
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.rows) {
    rows.push_back({std::to_string(r.level), std::to_string(r.replica), std::to_string(r.sheet_seed), format_double(r.t),
                    format_double(r.error)});
  }
  out.add("convergence_errors.csv", table_to_csv({"level", "replica", "sheet_seed", "t", "error"}, rows));

  std::vector<std::vector<std::string>> summary;
  for (std::size_t k = 0; k < res.levels.size(); ++k) {
    summary.push_back({std::to_string(res.levels[k]), format_double(res.medians[k]), std::to_string(cfg.seeds.size())});
  }
  out.add("convergence_summary.csv", table_to_csv({"level", "median_error", "replicas"}, summary));

  std::vector<std::vector<std::string>> fit;
  if (res.report) fit.push_back({format_double(cfg.alpha), format_double(res.report->fitted_rate), format_double(res.report->residual)});
  out.add("convergence_fit.csv", table_to_csv({"alpha", "fitted_rate", "residual"}, fit));

  svg::Series series{"median H^-alpha error", {}, {}};
  for (std::size_t k = 0; k < res.levels.size(); ++k) {
    series.x.push_back(std::ldexp(1.0, res.levels[k]));
    series.y.push_back(res.medians[k]);
  }
  out.add("convergence.svg", svg::loglog({series}, "2^n", "error", "median scheme error"));
  out.add("convergence.dat", svg::series_dat(series));
  return out;
}

inline nlohmann::ordered_json convergence_summary(const ConvergenceResult& res) {
  nlohmann::ordered_json j;
  j["levels"] = res.levels;
  j["median_errors"] = res.medians;
  if (res.report) {
    j["fitted_rate"] = res.report->fitted_rate;
    j["residual"] = res.report->residual;
  } else {
    j["fitted_rate"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// selftest

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

struct SelftestOptions {
  /// Debug hook: run the generic scheme with a sign-flipped stiffness matrix.
  bool corrupt_stiffness = false;
};

inline std::vector<CheckResult> run_selftest(const SelftestOptions& opt = {}) {
  std::vector<CheckResult> out;
  auto record = [&](std::string name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
      auto [ok, detail] = body();
      out.push_back({std::move(name), ok, std::move(detail)});
    } catch (const std::exception& e) {
      out.push_back({std::move(name), false, std::string("threw: ") + e.what()});
    }
  };
  auto sci = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return std::string(buf);
  };

  record("mass spectrum in [h/3, h]", [&] {
    bool ok = true;
    double worst = 0.0;
    for (double h : {0.25, 1.0 / 16, 1.0 / 64}) {
      for (long n_half : {8L, 32L}) {
        const Eigen::VectorXd ev =
            Eigen::SelfAdjointEigenSolver<Matrix>(mass_matrix(HatBasis(h, n_half)).dense(), Eigen::EigenvaluesOnly).eigenvalues();
        ok = ok && ev.minCoeff() >= h / 3 - 1e-12 && ev.maxCoeff() <= h + 1e-12;
        worst = std::max(worst, std::max(h / 3 - ev.minCoeff(), ev.maxCoeff() - h));
      }
    }
    return std::pair{ok, "max excess " + sci(worst)};
  });

  record("stiffness positive semidefinite", [&] {
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Matrix>(stiffness_matrix(HatBasis(1.0 / 16, 16)).dense(), Eigen::EigenvaluesOnly).eigenvalues();
    return std::pair{ev.minCoeff() > -1e-10 * ev.maxCoeff(), "min eigenvalue " + sci(ev.minCoeff())};
  });

  record("thomas solve vs dense", [&] {
    const TridiagonalMatrix a1 = TridiagonalMatrix::symmetric(5, 4.0, -1.25);
    std::vector<double> rhs{0, 0, 1, 0, 0};
    const auto x = thomas_solve(a1, rhs);
    const Eigen::VectorXd dense = a1.dense().partialPivLu().solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), 5));
    double err = 0.0;
    for (int k = 0; k < 5; ++k) err = std::max(err, std::abs(x[k] - dense[k]));
    return std::pair{err <= 1e-12, "max diff " + sci(err)};
  });

  record("bidiagonal factor E^T E = mass", [&] {
    const TridiagonalMatrix a = mass_matrix(HatBasis(0.25, 4));
    const Matrix e = cholesky_factor(a).dense();
    const double err = (e.transpose() * e - a.dense()).cwiseAbs().maxCoeff();
    return std::pair{err <= 1e-12, "max diff " + sci(err)};
  });

  record("psd square root", [&] {
    const CounterNormal normal(2024);
    Matrix g(8, 8);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 8; ++c) g(r, c) = normal(static_cast<std::uint64_t>(8 * r + c));
    const Matrix a = g.transpose() * g;
    const Matrix d = psd_sqrt(a);
    const double rel = (d * d - a).norm() / a.norm();
    return std::pair{rel <= 1e-8, "relative residual " + sci(rel)};
  });

  record("normalization constant closed form vs quadrature", [&] {
    double worst = 0.0;
    for (double h : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      const double a = normalization_integral(h), b = normalization_integral_quadrature(h);
      worst = std::max(worst, std::abs(a - b) / a);
    }
    return std::pair{worst <= 1e-8, "max relative diff " + sci(worst)};
  });

  record("sheet vanishes on t=0 and x=0", [&] {
    SheetConfig c;
    c.n = 2;
    c.m0 = 2000;
    c.m1 = 500;
    c.seed = 11;
    const SheetSample s = sample_sheet(c);
    double worst = s.values().row(0).cwiseAbs().maxCoeff();
    worst = std::max(worst, s.values().col(c.space_half_cells()).cwiseAbs().maxCoeff());
    return std::pair{worst <= 1e-10, "max |value| " + sci(worst)};
  });

  record("specialized scheme equals generic Galerkin", [&] {
    double worst = 0.0;
    for (int n : {1, 2}) {
      SheetConfig c;
      c.n = n;
      c.m0 = 2000;
      c.m1 = 500;
      const SheetSampler sampler(c);
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const SheetSample sheet = sampler.sample(seed);
        const FineGrid grid{n};
        const SchemeGrid sg = scheme_grid(grid);
        std::optional<TridiagonalMatrix> flipped;
        if (opt.corrupt_stiffness) flipped = stiffness_matrix(sg.basis).scaled(-1.0);
        const SchemeState a = run_specialized_scheme(sheet, grid);
        const SchemeState b = run_generic_scheme(sheet, sg, 1, flipped ? &*flipped : nullptr);
        const double scale = std::max(a.coeffs.cwiseAbs().maxCoeff(), 1e-300);
        const double diff = (a.coeffs - b.coeffs).cwiseAbs().maxCoeff() / scale;
        worst = std::isfinite(diff) ? std::max(worst, diff) : INFINITY;
      }
    }
    return std::pair{worst <= 1e-10, "max relative diff " + sci(worst)};
  });

  record("gamma bound |gamma_t| <= min(t, 2/|r^2+i xi|)", [&] {
    bool ok = true;
    for (double t : {0.1, 0.5, 1.0})
      for (double xi = -40; xi <= 40; xi += 2.5)
        for (double r = 0; r <= 6; r += 0.5) {
          const double bound = std::min(t, 2.0 / std::abs(Complex(r * r, xi)));
          ok = ok && std::abs(gamma(t, xi, r)) <= bound * (1 + 1e-12);
        }
    return std::pair{ok, "lattice 3 x 33 x 13"};
  });

  record("heat kernel mass", [&] {
    const double v = heat_space_integral(1.0, 0.0, -50, 50);
    return std::pair{v >= 1 - 1e-12, "integral " + format_double(v)};
  });

  record("H^-0 norm equals trapezoid L2", [&] {
    UniformSamples g{-1.0, 1.0 / 64, {}};
    double l2 = 0.0;
    for (int k = 0; k <= 128; ++k) {
      const double x = -1.0 + k / 64.0;
      const double v = std::exp(-8 * x * x) * std::sin(3 * x + 0.2);
      g.values.push_back(v);
      l2 += v * v / 64.0;
    }
    const double rel = std::abs(h_neg_alpha_norm(g, 0.0, 2.0) - std::sqrt(l2)) / std::sqrt(l2);
    return std::pair{rel <= 1e-6, "relative diff " + sci(rel)};
  });

  record("scheme tracks mild solution at n=1", [&] {
    SheetConfig c;
    c.n = 1;
    c.seed = 5;
    const SheetSample sheet = sample_sheet(c);
    const SchemeState st = run_specialized_scheme(sheet, FineGrid{1});
    const auto xs = window_points(1.0, 17);
    const auto ref = mild_solution_window(sheet, 1.0, xs);
    const auto last = st.row(st.saved_steps.size() - 1);
    double num = 0, den = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const double d = reconstruct(last, st.grid.basis, xs[k]) - ref[k];
      num += d * d;
      den += ref[k] * ref[k];
    }
    const double rel = std::sqrt(num / den);
    return std::pair{std::isfinite(rel) && rel < 0.25, "relative L2 gap " + sci(rel)};
  });

  return out;
}

}  // namespace rheat
