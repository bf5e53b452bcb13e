// mspk: command-line surface for the multi-species SK toolkit.
// Exit codes: 0 success, 1 verification failure, 2 input/validation error.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "mspk/cascades.hpp"
#include "mspk/errors.hpp"
#include "mspk/io.hpp"
#include "mspk/model.hpp"
#include "mspk/optimizer.hpp"
#include "mspk/parisi.hpp"
#include "mspk/replica_analysis.hpp"
#include "mspk/verify.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
  if (const char* env = std::getenv("MSPK_SEED"))
    return std::strtoull(env, nullptr, 10);
  return flag_seed;
}

/// Collects inputs/outputs and writes the manifest at scope end.
class ManifestScope {
 public:
  ManifestScope(std::string command, std::string path)
      : path_(std::move(path)), start_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.version = kVersion;
  }

  void input(const std::string& file) { manifest_.inputs.push_back(file); }
  void output(const std::string& file) {
    manifest_.outputs.emplace_back(file, mspk::file_digest(file));
  }
  void config(const json& doc) { manifest_.config_json = doc.dump(); }
  void seed(std::uint64_t s) { manifest_.seed = s; }

  void write() {
    manifest_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    mspk::write_text_file(path_, mspk::manifest_json(manifest_));
  }

 private:
  mspk::RunManifest manifest_;
  std::string path_;
  std::chrono::steady_clock::time_point start_;
};

mspk::QuadratureConfig make_quad(const std::string& mode, int hermite_nodes,
                                 int grid_points, double halfwidth) {
  mspk::QuadratureConfig quad;
  if (mode == "nested")
    quad.mode = mspk::QuadratureMode::nested_exact;
  else if (mode != "grid")
    throw mspk::validation_error("quadrature mode must be 'grid' or 'nested'");
  quad.hermite_nodes = hermite_nodes;
  quad.grid_points = grid_points;
  quad.grid_halfwidth_sigmas = halfwidth;
  return quad;
}

json params_to_json(const mspk::ModelSpec& spec, const mspk::RsbParams& params) {
  return json::parse(mspk::rsb_params_json(spec, params));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-species Sherrington-Kirkpatrick Parisi toolkit"};
  app.require_subcommand(1);

  std::string manifest_path = "mspk_manifest.json";
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--manifest", manifest_path, "run manifest output path");
  app.add_option("--seed", seed, "RNG seed (env MSPK_SEED overrides)");
  app.add_option("--threads", threads, "worker thread budget (0: default)");

  // parisi-eval
  auto* eval_cmd = app.add_subcommand("parisi-eval", "evaluate P(zeta, q)");
  std::string eval_model, eval_params, eval_mode = "grid";
  std::string eval_out = "parisi_eval.json";
  int eval_nodes = 40, eval_grid = 1025;
  double eval_halfwidth = 8.0;
  eval_cmd->add_option("--model", eval_model, "model spec JSON")->required();
  eval_cmd->add_option("--params", eval_params, "RSB params JSON")->required();
  eval_cmd->add_option("--mode", eval_mode, "grid | nested");
  eval_cmd->add_option("--hermite-nodes", eval_nodes, "Gauss-Hermite nodes");
  eval_cmd->add_option("--grid-points", eval_grid, "interpolation grid size");
  eval_cmd->add_option("--halfwidth", eval_halfwidth, "grid halfwidth in sigmas");
  eval_cmd->add_option("--out", eval_out, "result JSON path");

  // parisi-opt
  auto* opt_cmd = app.add_subcommand("parisi-opt", "minimize P over RSB params");
  std::string opt_model, opt_out = "parisi_opt.json", opt_trace = "parisi_opt_trace.csv";
  int opt_rmax = 3, opt_restarts = 4;
  long opt_evals = 6000;
  double opt_tol = 1e-9;
  opt_cmd->add_option("--model", opt_model, "model spec JSON")->required();
  opt_cmd->add_option("--r-max", opt_rmax, "maximum level count");
  opt_cmd->add_option("--restarts", opt_restarts, "multi-start count");
  opt_cmd->add_option("--max-evals", opt_evals, "objective evaluation budget per level");
  opt_cmd->add_option("--tol", opt_tol, "simplex convergence tolerance");
  opt_cmd->add_option("--out", opt_out, "result JSON path");
  opt_cmd->add_option("--trace", opt_trace, "CSV trace path");

  // free-energy
  auto* fe_cmd = app.add_subcommand("free-energy", "exact-enumeration F_N estimate");
  std::string fe_model, fe_out = "free_energy.json";
  int fe_n = 12, fe_samples = 500, fe_cap = mspk::kDefaultEnumerationCap;
  fe_cmd->add_option("--model", fe_model, "model spec JSON")->required();
  fe_cmd->add_option("--n", fe_n, "spin count");
  fe_cmd->add_option("--samples", fe_samples, "disorder draws");
  fe_cmd->add_option("--cap", fe_cap, "enumeration cap");
  fe_cmd->add_option("--out", fe_out, "result JSON path");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run a verification suite");
  std::string v_model, v_params, v_suite, v_out = "verify_report.json";
  int v_truncation = -1, v_samples = -1, v_shrink = -1, v_draws = -1;
  int v_replicas = -1, v_nspins = -1, v_fe_samples = -1, v_pairs = -1;
  verify_cmd->add_option("--model", v_model, "model spec JSON")->required();
  verify_cmd->add_option("--params", v_params, "RSB params JSON (all suites but covariance)");
  verify_cmd->add_option("--suite", v_suite, "cascade | gg | sync | interpolation | covariance")
      ->required();
  verify_cmd->add_option("--truncation", v_truncation, "cascade truncation M");
  verify_cmd->add_option("--samples", v_samples, "Monte Carlo samples");
  verify_cmd->add_option("--shrink-samples", v_shrink, "paired M vs 2M samples");
  verify_cmd->add_option("--draws", v_draws, "overlap/covariance draws");
  verify_cmd->add_option("--replicas", v_replicas, "replica count");
  verify_cmd->add_option("--n-spins", v_nspins, "spin count");
  verify_cmd->add_option("--fe-samples", v_fe_samples, "free-energy disorder draws");
  verify_cmd->add_option("--pairs", v_pairs, "configuration pairs");
  verify_cmd->add_option("--out", v_out, "report JSON path");

  // cascade-sample
  auto* casc_cmd = app.add_subcommand("cascade-sample", "overlap arrays from cascades");
  std::string c_model, c_params, c_out = "overlaps.csv";
  int c_m = 50, c_n = 4, c_samples = 1000;
  bool c_exact = false;
  casc_cmd->add_option("--model", c_model, "model spec JSON")->required();
  casc_cmd->add_option("--params", c_params, "RSB params JSON")->required();
  casc_cmd->add_option("--m", c_m, "truncation per node");
  casc_cmd->add_option("--n", c_n, "replicas per draw");
  casc_cmd->add_option("--samples", c_samples, "number of draws");
  casc_cmd->add_flag("--exact", c_exact,
                     "sample the untruncated cascade law (coagulation sampler)");
  casc_cmd->add_option("--out", c_out, "overlap CSV path");

  // gibbs-sample
  auto* gibbs_cmd = app.add_subcommand("gibbs-sample", "overlap arrays from exact Gibbs");
  std::string g_model, g_out = "overlaps.csv";
  int g_nspins = 12, g_replicas = 4, g_draws = 1000, g_cap = mspk::kDefaultEnumerationCap;
  bool g_perturb = false;
  double g_gamma = 0.375;
  gibbs_cmd->add_option("--model", g_model, "model spec JSON")->required();
  gibbs_cmd->add_option("--n-spins", g_nspins, "spin count");
  gibbs_cmd->add_option("--replicas", g_replicas, "replicas per draw");
  gibbs_cmd->add_option("--draws", g_draws, "number of draws");
  gibbs_cmd->add_option("--cap", g_cap, "enumeration cap");
  gibbs_cmd->add_flag("--perturb", g_perturb, "add the GG perturbation Hamiltonian");
  gibbs_cmd->add_option("--gamma", g_gamma, "perturbation exponent in (1/4, 1/2)");
  gibbs_cmd->add_option("--out", g_out, "overlap CSV path");

  // gg-delta
  auto* gg_cmd = app.add_subcommand("gg-delta", "Ghirlanda-Guerra statistic on a sample");
  std::string d_model, d_sample, d_f = "monomial", d_out = "gg_delta.json";
  int d_n = 2, d_p = 1, d_degree = 2;
  double d_threshold = 0.0;
  std::vector<double> d_w;
  gg_cmd->add_option("--model", d_model, "model spec JSON (for lambda)")->required();
  gg_cmd->add_option("--sample", d_sample, "overlap CSV")->required();
  gg_cmd->add_option("--f", d_f, "const | indicator | monomial");
  gg_cmd->add_option("--n", d_n, "identity order (needs n+1 replicas)");
  gg_cmd->add_option("--p", d_p, "overlap power");
  gg_cmd->add_option("--w", d_w, "weight vector, species order of the sample");
  gg_cmd->add_option("--threshold", d_threshold, "indicator threshold");
  gg_cmd->add_option("--degree", d_degree, "monomial degree");
  gg_cmd->add_option("--out", d_out, "result JSON path");

  // sync-fit
  auto* sync_cmd = app.add_subcommand("sync-fit", "isotonic synchronization fit");
  std::string s_sample, s_out = "sync_fit.json";
  sync_cmd->add_option("--sample", s_sample, "overlap CSV")->required();
  sync_cmd->add_option("--out", s_out, "result JSON path");

  CLI11_PARSE(app, argc, argv);

  const std::uint64_t run_seed = resolve_seed(seed);
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif

  try {
    if (*eval_cmd) {
      ManifestScope manifest("parisi-eval", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(eval_model);
      const mspk::RsbParams params = mspk::load_rsb_params(eval_params, spec);
      manifest.input(eval_model);
      manifest.input(eval_params);
      const mspk::QuadratureConfig quad =
          make_quad(eval_mode, eval_nodes, eval_grid, eval_halfwidth);
      const mspk::ParisiValue value = mspk::parisi_functional(spec, params, quad);
      json doc;
      doc["P"] = value.value;
      doc["X0"] = json::object();
      for (std::size_t s = 0; s < spec.n_species(); ++s)
        doc["X0"][spec.species[s]] = value.x0[s];
      doc["Q"] = value.paths.combined;
      doc["Qs"] = json::object();
      for (std::size_t s = 0; s < spec.n_species(); ++s)
        doc["Qs"][spec.species[s]] = value.paths.per_species[s];
      mspk::write_text_file(eval_out, doc.dump(2) + "\n");
      std::cout << "P = " << mspk::format_double(value.value) << "\n";
      manifest.config(json{{"mode", eval_mode},
                           {"hermite_nodes", eval_nodes},
                           {"grid_points", eval_grid},
                           {"halfwidth", eval_halfwidth}});
      manifest.output(eval_out);
      manifest.write();
      return 0;
    }

    if (*opt_cmd) {
      ManifestScope manifest("parisi-opt", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(opt_model);
      manifest.input(opt_model);
      mspk::OptimizerConfig config;
      config.restarts = opt_restarts;
      config.max_evals = opt_evals;
      config.tol = opt_tol;
      config.r_max = opt_rmax;
      config.seed = run_seed;
      const std::vector<mspk::OptimizationResult> levels =
          mspk::infimum_over_levels(spec, config);
      std::size_t best = 0;
      for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i].value < levels[best].value) best = i;

      std::string trace = "restart,iteration,value\n";
      for (const auto& level : levels)
        for (const mspk::TracePoint& point : level.trace)
          trace += std::to_string(point.restart) + "," +
                   std::to_string(point.iteration) + "," +
                   mspk::format_double(point.value) + "\n";
      mspk::write_text_file(opt_trace, trace);

      json doc;
      doc["best"] = {{"r", levels[best].params.r},
                     {"value", levels[best].value},
                     {"evals", levels[best].evals},
                     {"converged", levels[best].converged},
                     {"params", params_to_json(spec, levels[best].params)}};
      doc["level_values"] = json::array();
      for (const auto& level : levels) doc["level_values"].push_back(level.value);
      doc["metadata"] = {{"q_endpoints_pinned", true}};
      mspk::write_text_file(opt_out, doc.dump(2) + "\n");
      std::cout << "best P = " << mspk::format_double(levels[best].value)
                << " at r = " << levels[best].params.r << "\n";
      manifest.seed(run_seed);
      manifest.config(json{{"r_max", opt_rmax},
                           {"restarts", opt_restarts},
                           {"max_evals", opt_evals},
                           {"tol", opt_tol}});
      manifest.output(opt_out);
      manifest.output(opt_trace);
      manifest.write();
      return 0;
    }

    if (*fe_cmd) {
      ManifestScope manifest("free-energy", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(fe_model);
      manifest.input(fe_model);
      const mspk::MeanWithError fe =
          mspk::free_energy_mc(spec, fe_n, fe_samples, run_seed, fe_cap);
      json doc;
      doc["n"] = fe_n;
      doc["samples"] = fe_samples;
      doc["mean"] = fe.mean;
      doc["se"] = fe.se;
      mspk::write_text_file(fe_out, doc.dump(2) + "\n");
      std::cout << "F_" << fe_n << " = " << mspk::format_double(fe.mean)
                << " +- " << mspk::format_double(fe.se) << "\n";
      manifest.seed(run_seed);
      manifest.config(json{{"n", fe_n}, {"samples", fe_samples}, {"cap", fe_cap}});
      manifest.output(fe_out);
      manifest.write();
      return 0;
    }

    if (*verify_cmd) {
      ManifestScope manifest("verify", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(v_model);
      manifest.input(v_model);
      mspk::RsbParams params;
      if (v_suite != "covariance") {
        if (v_params.empty())
          throw mspk::validation_error("suite '" + v_suite + "' needs --params");
        params = mspk::load_rsb_params(v_params, spec);
        manifest.input(v_params);
      }
      mspk::VerifyReport report;
      if (v_suite == "cascade") {
        mspk::CascadeVerifyConfig config;
        config.seed = run_seed;
        if (v_truncation > 0) config.truncation = v_truncation;
        if (v_samples > 0) config.samples = v_samples;
        if (v_shrink >= 0) config.shrink_samples = v_shrink;
        report = mspk::verify_cascade(spec, params, config);
      } else if (v_suite == "gg") {
        mspk::GgVerifyConfig config;
        config.seed = run_seed;
        if (v_draws > 0) config.draws = v_draws;
        if (v_replicas > 0) config.n = v_replicas;
        report = mspk::verify_gg(spec, params, config);
      } else if (v_suite == "sync") {
        mspk::SyncVerifyConfig config;
        config.seed = run_seed;
        if (v_truncation > 0) config.truncation = v_truncation;
        if (v_draws > 0) config.draws = v_draws;
        if (v_replicas > 0) config.n = v_replicas;
        report = mspk::verify_sync(spec, params, config);
      } else if (v_suite == "interpolation") {
        mspk::InterpolationVerifyConfig config;
        config.seed = run_seed;
        if (v_truncation > 0) config.truncation = v_truncation;
        if (v_samples > 0) config.samples = v_samples;
        if (v_nspins > 0) config.n_spins = v_nspins;
        if (v_fe_samples > 0) config.fe_samples = v_fe_samples;
        report = mspk::verify_interpolation(spec, params, config);
      } else if (v_suite == "covariance") {
        mspk::CovarianceVerifyConfig config;
        config.seed = run_seed;
        if (v_nspins > 0) config.n_spins = v_nspins;
        if (v_draws > 0) config.draws = v_draws;
        if (v_pairs > 0) config.pairs = v_pairs;
        report = mspk::verify_covariance(spec, config);
      } else {
        throw mspk::validation_error("unknown suite: " + v_suite);
      }
      mspk::write_text_file(v_out, mspk::report_json(report));
      std::cout << mspk::report_text(report);
      manifest.seed(run_seed);
      manifest.config(json{{"suite", v_suite}});
      manifest.output(v_out);
      manifest.write();
      return report.passed() ? 0 : 1;
    }

    if (*casc_cmd) {
      ManifestScope manifest("cascade-sample", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(c_model);
      const mspk::RsbParams params = mspk::load_rsb_params(c_params, spec);
      manifest.input(c_model);
      manifest.input(c_params);
      const std::vector<double> qc = mspk::combined_q(spec, params);
      const mspk::OverlapSample sample =
          c_exact ? mspk::exact_overlap_samples(spec, params, qc, c_n, c_samples,
                                                run_seed)
                  : mspk::cascade_overlap_samples(spec, params, qc, c_m, c_n,
                                                  c_samples, run_seed);
      mspk::write_text_file(c_out, mspk::overlap_sample_csv(sample));
      std::cout << c_samples << " draws x " << c_n << " replicas -> " << c_out
                << "\n";
      manifest.seed(run_seed);
      manifest.config(json{{"m", c_m},
                           {"n", c_n},
                           {"samples", c_samples},
                           {"exact", c_exact}});
      manifest.output(c_out);
      manifest.write();
      return 0;
    }

    if (*gibbs_cmd) {
      ManifestScope manifest("gibbs-sample", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(g_model);
      manifest.input(g_model);
      mspk::PerturbationSpec pspec;
      if (g_perturb) {
        pspec = mspk::default_perturbation(spec, run_seed ^ 0x70657274ULL);
        pspec.gamma = g_gamma;
      }
      const mspk::OverlapSample sample = mspk::gibbs_replica_samples(
          spec, g_nspins, g_perturb ? &pspec : nullptr, g_replicas, g_draws,
          run_seed, g_cap);
      mspk::write_text_file(g_out, mspk::overlap_sample_csv(sample));
      std::cout << g_draws << " draws x " << g_replicas << " replicas -> "
                << g_out << "\n";
      manifest.seed(run_seed);
      manifest.config(json{{"n_spins", g_nspins},
                           {"replicas", g_replicas},
                           {"draws", g_draws},
                           {"perturb", g_perturb},
                           {"gamma", g_gamma}});
      manifest.output(g_out);
      manifest.write();
      return 0;
    }

    if (*gg_cmd) {
      ManifestScope manifest("gg-delta", manifest_path);
      const mspk::ModelSpec spec = mspk::load_model_spec(d_model);
      const mspk::OverlapSample sample = mspk::load_overlap_csv(d_sample);
      manifest.input(d_model);
      manifest.input(d_sample);
      std::vector<double> lambda;
      for (const std::string& name : sample.species) {
        bool found = false;
        for (std::size_t s = 0; s < spec.n_species(); ++s)
          if (spec.species[s] == name) {
            lambda.push_back(spec.lambda[s]);
            found = true;
          }
        if (!found)
          throw mspk::validation_error("sample species not in model: " + name);
      }
      if (d_w.empty()) d_w.assign(sample.species.size(), 1.0);
      mspk::TestFunction f;
      if (d_f == "const") {
        f.kind = mspk::TestFunction::Kind::constant;
      } else if (d_f == "indicator") {
        f.kind = mspk::TestFunction::Kind::indicator;
        f.threshold = d_threshold;
      } else if (d_f == "monomial") {
        f.kind = mspk::TestFunction::Kind::monomial;
        f.degree = d_degree;
      } else {
        throw mspk::validation_error("unknown test function: " + d_f);
      }
      const mspk::GgDeltaResult result =
          mspk::gg_delta(sample, lambda, f, d_n, d_w, d_p);
      json doc;
      doc["statistic"] = "gg_delta";
      doc["value"] = result.delta;
      doc["se"] = result.se;
      doc["config"] = {{"f", d_f},       {"n", d_n},
                       {"p", d_p},       {"w", d_w},
                       {"threshold", d_threshold}, {"degree", d_degree}};
      mspk::write_text_file(d_out, doc.dump(2) + "\n");
      std::cout << "delta = " << mspk::format_double(result.delta) << " +- "
                << mspk::format_double(result.se) << "\n";
      manifest.config(doc["config"]);
      manifest.output(d_out);
      manifest.write();
      return 0;
    }

    if (*sync_cmd) {
      ManifestScope manifest("sync-fit", manifest_path);
      const mspk::OverlapSample sample = mspk::load_overlap_csv(s_sample);
      manifest.input(s_sample);
      const std::vector<mspk::SyncFit> fits = mspk::fit_synchronization(sample);
      json doc;
      doc["statistic"] = "sync_fit";
      doc["species"] = sample.species;
      doc["fits"] = json::array();
      for (const mspk::SyncFit& fit : fits) {
        json entry;
        entry["knots_x"] = fit.knots_x;
        entry["fitted"] = fit.fitted;
        entry["max_residual"] = fit.max_residual;
        entry["lipschitz"] = fit.lipschitz;
        entry["n_points"] = fit.n_points;
        doc["fits"].push_back(entry);
      }
      mspk::write_text_file(s_out, doc.dump(2) + "\n");
      for (std::size_t s = 0; s < fits.size(); ++s)
        std::cout << sample.species[s]
                  << ": residual = " << mspk::format_double(fits[s].max_residual)
                  << ", lipschitz = " << mspk::format_double(fits[s].lipschitz)
                  << "\n";
      manifest.config(json::object());
      manifest.output(s_out);
      manifest.write();
      return 0;
    }
  } catch (const mspk::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mspk::resource_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
