// clgas: command-line front end.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "clgas/cli_io.hpp"
#include "clgas/diagnostics.hpp"
#include "clgas/integrators.hpp"
#include "clgas/lyapunov.hpp"
#include "clgas/samplers.hpp"

using namespace clgas;
using json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string config;
  std::string manifest;
  std::string out_dir;
  std::string manifest_out;
  std::vector<std::string> sets;
};

// A flag that overrides one config key when given.
struct Binding {
  CLI::Option* option;
  std::string key;
  std::shared_ptr<std::string> value;
};

class Subcommand {
 public:
  Subcommand(CLI::App& app, const std::string& name, const std::string& help) : app_(app.add_subcommand(name, help)) {
    app_->add_option("--config", common_.config, "config file (key = value lines)");
    app_->add_option("--manifest", common_.manifest, "re-run from a manifest written by an earlier run");
    app_->add_option("--set", common_.sets, "override a config key, KEY=VALUE (repeatable)");
    app_->add_option("--out-dir", common_.out_dir, "write outputs into this directory, keeping file names");
    app_->add_option("--manifest-out", common_.manifest_out, "manifest path (default: <first output>.manifest.json)");
  }

  void bind(const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    bindings_.push_back({app_->add_option(flag, *value, help + " [" + key + "]"), key, value});
  }

  CLI::App* app() const { return app_; }
  const std::string& name() const { return app_->get_name(); }

  RunConfig resolve() const {
    std::string text;
    if (!common_.manifest.empty()) {
      const auto m = manifest_from_json(read_text_file(common_.manifest));
      if (m.subcommand != name()) {
        throw Error(ErrorKind::ValidationError,
                    "manifest was written by '" + m.subcommand + "', not '" + name() + "'");
      }
      text = m.config_text;
    } else if (!common_.config.empty()) {
      text = read_text_file(common_.config);
    }
    ConfigOverrides overrides;
    for (const auto& b : bindings_) {
      if (b.option->count() > 0) overrides.emplace_back(b.key, *b.value);
    }
    for (const auto& s : common_.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "--set expects KEY=VALUE, found '" + s + "'");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    RunConfig c = parse_config(text, overrides);
    if (!common_.out_dir.empty()) {
      std::filesystem::create_directories(common_.out_dir);
      for (auto* path : {&c.out_csv, &c.out_checkpoint, &c.out_json}) {
        if (!path->empty()) *path = (std::filesystem::path(common_.out_dir) / std::filesystem::path(*path).filename()).string();
      }
    }
    return c;
  }

  void write_manifest(const RunConfig& c, const std::vector<std::string>& outputs) const {
    std::string path = common_.manifest_out;
    if (path.empty()) {
      if (outputs.empty()) return;
      path = outputs.front() + ".manifest.json";
    }
    write_text_file(path, manifest_to_json({name(), to_config_text(c), c.seed, outputs}));
  }

 private:
  CLI::App* app_;
  Common common_;
  std::vector<Binding> bindings_;
};

void require(const std::string& value, const std::string& key) {
  if (value.empty()) throw Error(ErrorKind::ValidationError, key + " is required (flag or config key)");
}

template <class Writer>
void write_csv(const std::string& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path + "' for writing");
  writer(out);
  if (!out) throw Error(ErrorKind::IoError, "write to '" + path + "' failed");
}

void write_json(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// --- simulate ---------------------------------------------------------------

int run_simulate(const Subcommand& cmd) {
  const RunConfig c = cmd.resolve();
  require(c.out_csv, "output.csv");
  ParticleState x0 = initial_state(c);
  StreamRng rng(c.seed, 0);
  if (!c.initial.checkpoint.empty()) {
    auto cp = read_checkpoint(c.initial.checkpoint);
    if (cp.state.n != c.system.N || cp.state.d != c.system.d) {
      throw Error(ErrorKind::DimensionMismatch, "checkpoint holds N = " + std::to_string(cp.state.n) + ", d = " +
                                                    std::to_string(cp.state.d) + "; config has N = " +
                                                    std::to_string(c.system.N) + ", d = " + std::to_string(c.system.d));
    }
    x0 = std::move(cp.state);
    rng = cp.rng;
  }
  const auto rec = simulate(c.system, c.integrator, x0, c.T, c.stride, rng);

  std::vector<std::string> outputs{c.out_csv};
  write_csv(c.out_csv, [&](std::ostream& out) { write_trajectory_csv(out, rec); });
  if (!c.out_checkpoint.empty()) {
    write_checkpoint(c.out_checkpoint, rec.states.back(), StreamRng::deserialize(rec.rng_states.back()));
    outputs.push_back(c.out_checkpoint);
  }
  if (!c.out_json.empty()) {
    json j;
    j["steps"] = rec.size() - 1;
    j["final_time"] = rec.times.back();
    j["termination"] = std::string(to_string(rec.termination));
    j["termination_message"] = rec.termination_message;
    j["total_halvings"] = rec.total_halvings;
    double min_dist = INFINITY;
    for (double m : rec.min_dist) min_dist = std::min(min_dist, m);
    j["min_distance"] = number(min_dist);
    j["events"] = json::array();
    for (const auto& e : rec.events) {
      j["events"].push_back({{"step", e.step}, {"time", e.time}, {"kind", std::string(to_string(e.kind))},
                             {"count", e.count}, {"message", e.message}});
    }
    write_json(c.out_json, j);
    outputs.push_back(c.out_json);
  }
  cmd.write_manifest(c, outputs);

  std::cout << "simulate: " << rec.size() - 1 << " steps to t = " << rec.times.back() << ", "
            << rec.total_halvings << " halvings, " << to_string(rec.termination) << "\n";
  if (rec.termination != Termination::Completed) {
    std::cerr << "error: " << rec.termination_message << "\n";
    return 3;
  }
  return 0;
}

// --- sample-hmc -------------------------------------------------------------

int run_sample_hmc(const Subcommand& cmd) {
  const RunConfig c = cmd.resolve();
  require(c.out_csv, "output.csv");
  const auto chain = hmc_chain(c.system, c.sampler, initial_state(c).q);
  std::vector<std::string> outputs{c.out_csv};
  write_csv(c.out_csv, [&](std::ostream& out) { write_hmc_csv(out, chain); });
  if (!c.out_json.empty()) {
    json j;
    j["iterations"] = chain.n_iterations;
    j["acceptance_rate"] = chain.acceptance_rate();
    j["mean_accept_probability"] = chain.mean_accept_prob();
    j["samples"] = chain.samples.size();
    j["rejected_collisions"] = chain.events.size();
    const auto eq = equipartition_stat(chain.samples);
    j["equipartition"] = {{"mean", eq.mean}, {"se", eq.se}, {"target", 1.0 / c.system.beta}};
    write_json(c.out_json, j);
    outputs.push_back(c.out_json);
  }
  cmd.write_manifest(c, outputs);
  std::cout << "sample-hmc: " << chain.samples.size() << " samples, acceptance " << chain.acceptance_rate() << ", "
            << chain.events.size() << " rejected collisions\n";
  return 0;
}

// --- verify-lyapunov --------------------------------------------------------

int run_verify_lyapunov(const Subcommand& cmd) {
  const RunConfig c = cmd.resolve();
  require(c.out_json, "output.json");
  const auto& constants = c.system.potential.constants();
  if (!constants) throw Error(ErrorKind::MissingConstants, "potential has no assumption constants");
  json j;
  const auto vr = validate_params(c.system, c.lyapunov, *constants);
  j["conditions"] = json::array();
  for (const auto& cond : vr.conditions) {
    j["conditions"].push_back({{"name", cond.name}, {"slack", number(cond.slack)}, {"passed", cond.passed}});
  }
  j["params_valid"] = vr.passed();
  std::vector<std::string> outputs{c.out_json};
  auto finish = [&](int code) {
    j["passed"] = code == 0;
    write_json(c.out_json, j);
    cmd.write_manifest(c, outputs);
    return code;
  };
  if (!vr.passed()) {
    std::cerr << "error: parameters fail condition '" << vr.first_failure() << "'\n";
    return finish(2);
  }

  StateSampler train(c.system.N, c.system.d, c.seed, 0), test(c.system.N, c.system.d, c.seed, 1);
  const auto fit = fit_drift_constants(c.system, c.lyapunov, train, c.n_train);
  const auto held_out = test.draw(c.n_test);
  const auto dt = test_drift_bound(c.system, c.lyapunov, fit, held_out);
  j["fit"] = {{"alpha", fit.alpha},     {"C", fit.C},           {"lambda", fit.lambda},
              {"log_R", fit.log_R},     {"log_C_W", fit.log_C_W}, {"C_lp", fit.C_lp},
              {"alpha_halvings", fit.alpha_halvings}, {"n_samples", fit.n_samples},
              {"note", "sample-dependent constants of this run; not the constants of the theorem"}};
  j["test"] = {{"n_samples", dt.n_samples}, {"violations", dt.violations}, {"worst_margin", number(dt.worst_margin)}};
  int code = dt.violations == 0 ? 0 : 3;

  if (c.replicas > 0) {
    const auto report = supermartingale_check(c.system, c.lyapunov, c.integrator, fit, initial_state(c), c.T, c.replicas,
                                              {.n_checkpoints = c.checkpoints, .bootstrap_resamples = c.bootstrap});
    json sm;
    sm["replicas"] = report.replicas;
    sm["stopped_replicas"] = report.stopped_replicas;
    sm["total_halvings"] = report.total_halvings;
    sm["passed"] = report.passed();
    sm["checkpoints"] = json::array();
    for (const auto& cp : report.checkpoints) {
      sm["checkpoints"].push_back({{"time", cp.time}, {"log_mean_w", cp.log_mean_w}, {"log_ci_low", cp.log_ci_low},
                                   {"log_ci_high", cp.log_ci_high}, {"log_bound", cp.log_bound},
                                   {"status", cp.status}});
    }
    j["supermartingale"] = sm;
    if (!c.out_csv.empty()) {
      write_csv(c.out_csv, [&](std::ostream& out) {
        out << "t,log_mean_w,log_ci_low,log_ci_high,log_bound,status\n";
        for (const auto& cp : report.checkpoints) {
          out << format_double(cp.time) << ',' << format_double(cp.log_mean_w) << ',' << format_double(cp.log_ci_low)
              << ',' << format_double(cp.log_ci_high) << ',' << format_double(cp.log_bound) << ',' << cp.status
              << '\n';
        }
      });
      outputs.push_back(c.out_csv);
    }
    if (!report.passed()) code = 3;
  }
  std::cout << "verify-lyapunov: alpha " << fit.alpha << ", lambda " << fit.lambda << ", " << dt.violations << "/"
            << dt.n_samples << " test violations\n";
  return finish(code);
}

// --- verify-lemma -----------------------------------------------------------

int run_verify_lemma(const Subcommand& cmd) {
  const RunConfig c = cmd.resolve();
  require(c.out_csv, "output.csv");
  const auto cases = lemma_sweep(c.n_configs, c.seed);
  std::size_t failures = 0;
  double worst = INFINITY;
  write_csv(c.out_csv, [&](std::ostream& out) {
    out << "index,N,d,exponent,near_collision,J,rhs,slack,relative_slack\n";
    for (std::size_t k = 0; k < cases.size(); ++k) {
      const auto& cs = cases[k];
      const double rel = cs.check.slack / cs.check.rhs;
      worst = std::min(worst, rel);
      failures += !cs.check.holds;
      out << k << ',' << cs.n << ',' << cs.d << ',' << format_double(cs.exponent) << ',' << (cs.near_collision ? 1 : 0)
          << ',' << format_double(cs.check.J) << ',' << format_double(cs.check.rhs) << ','
          << format_double(cs.check.slack) << ',' << format_double(rel) << '\n';
    }
  });
  std::vector<std::string> outputs{c.out_csv};
  if (!c.out_json.empty()) {
    write_json(c.out_json, {{"configurations", cases.size()}, {"failures", failures},
                            {"min_relative_slack", number(worst)}});
    outputs.push_back(c.out_json);
  }
  cmd.write_manifest(c, outputs);
  std::cout << "verify-lemma: " << cases.size() << " configurations, " << failures
            << " failures, min relative slack " << worst << "\n";
  return failures == 0 ? 0 : 3;
}

// --- diagnose ---------------------------------------------------------------

json decay_fit(const CsvTable& table) {
  const auto t = table.column_values("t");
  const auto lw = table.column_values("logW");
  const std::size_t blocks = std::min<std::size_t>(50, t.size());
  const std::size_t len = blocks ? t.size() / blocks : 0;
  if (blocks < 4 || len == 0) return {{"rate", nullptr}, {"error", "fewer than 4 rows"}};
  std::vector<double> bt(blocks), bl(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    double top = -INFINITY, tsum = 0.0;
    for (std::size_t k = b * len; k < (b + 1) * len; ++k) top = std::max(top, lw[k]);
    double sum = 0.0;
    for (std::size_t k = b * len; k < (b + 1) * len; ++k) {
      sum += std::exp(lw[k] - top);
      tsum += t[k];
    }
    bt[b] = tsum / static_cast<double>(len);
    bl[b] = top + std::log(sum / static_cast<double>(len));
  }
  const double ref = *std::max_element(bl.begin(), bl.end());
  std::vector<double> v(blocks);
  for (std::size_t b = 0; b < blocks; ++b) v[b] = std::exp(bl[b] - ref);
  const std::size_t tail = std::max<std::size_t>(1, blocks / 4);
  double floor = 0.0;
  for (std::size_t b = blocks - tail; b < blocks; ++b) floor += v[b] / static_cast<double>(tail);
  std::size_t cut = 0;
  while (cut < blocks && v[cut] > floor) ++cut;
  json out{{"log_W_ref", ref}, {"floor", floor}, {"blocks", blocks}, {"fitted_blocks", cut}};
  ObservableSeries series{"block mean W", {bt.begin(), bt.begin() + static_cast<std::ptrdiff_t>(cut)},
                          {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(cut)}};
  try {
    const auto fit = fit_exponential_rate(series, floor);
    out["rate"] = fit.rate;
    out["rate_se"] = fit.rate_se;
    out["log_amplitude"] = fit.log_amplitude;
    out["r_squared"] = fit.r_squared;
  } catch (const Error& e) {
    out["rate"] = nullptr;
    out["error"] = e.what();
  }
  out["note"] = "empirical decay of this run's block-mean W; not the rate constant of the theorem";
  return out;
}

int run_diagnose(const Subcommand& cmd) {
  const RunConfig c = cmd.resolve();
  require(c.diagnose_input, "diagnose.input");
  require(c.out_json, "output.json");
  std::ifstream in(c.diagnose_input, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + c.diagnose_input + "'");
  const auto table = read_csv(in);
  const auto [n, d] = particle_shape(table);
  if (table.rows.size() <= c.diagnose_burn_in + 1) {
    throw Error(ErrorKind::EmptyEnsemble, "input has " + std::to_string(table.rows.size()) +
                                              " rows, burn-in is " + std::to_string(c.diagnose_burn_in));
  }
  const bool trajectory = table.header.front() == "t";
  if (!trajectory && table.header.front() != "iteration") {
    throw Error(ErrorKind::FormatError, "input is neither a trajectory nor an HMC CSV");
  }
  const std::size_t q0 = table.column("q0_0");
  const auto burn = static_cast<std::ptrdiff_t>(c.diagnose_burn_in);

  json j;
  j["input"] = c.diagnose_input;
  j["kind"] = trajectory ? "trajectory" : "hmc";
  j["N"] = n;
  j["d"] = d;
  j["rows"] = table.rows.size();
  j["burn_in"] = c.diagnose_burn_in;

  std::vector<double> points, q2, h;
  for (auto it = table.rows.begin() + burn; it != table.rows.end(); ++it) {
    double s = 0.0;
    for (std::size_t k = 0; k < n * d; ++k) {
      points.push_back((*it)[q0 + k]);
      s += (*it)[q0 + k] * (*it)[q0 + k];
    }
    q2.push_back(s);
    h.push_back((*it)[table.column("H")]);
  }
  const auto mq2 = batch_means(q2), mh = batch_means(h);
  j["mean_q2"] = {{"mean", mq2.mean}, {"se", mq2.se}};
  j["mean_H"] = {{"mean", mh.mean}, {"se", mh.se}};

  if (trajectory) {
    auto kin = table.column_values("kinetic");
    std::vector<double> ep(kin.begin() + burn, kin.end());
    for (auto& x : ep) x = 2.0 * x / static_cast<double>(n * d);
    const auto eq = batch_means(ep);
    j["equipartition"] = {{"mean", eq.mean}, {"se", eq.se}};
    const auto md = table.column_values("minDist");
    j["min_distance"] = number(*std::min_element(md.begin(), md.end()));
    j["w_decay"] = decay_fit(table);
  } else {
    const auto acc = table.column_values("accept");
    j["acceptance_rate"] = batch_means(std::vector<double>(acc.begin() + burn, acc.end())).mean;
  }

  std::vector<std::string> outputs{c.out_json};
  if (d == 2 && points.size() / 2 >= 100) {
    j["radial_law_distance"] = radial_law_distance(points, 2);
    if (!c.out_csv.empty()) {
      const auto prof = radial_profile(points, 2, c.diagnose_bins);
      j["radial_r95"] = prof.r95;
      write_csv(c.out_csv, [&](std::ostream& out) {
        out << "r,empirical_cdf,reference_cdf\n";
        for (std::size_t b = 0; b < prof.r.size(); ++b) {
          out << format_double(prof.r[b]) << ',' << format_double(prof.empirical[b]) << ','
              << format_double(prof.reference[b]) << '\n';
        }
      });
      outputs.push_back(c.out_csv);
    }
  } else {
    j["radial_law_distance"] = nullptr;
  }
  write_json(c.out_json, j);
  cmd.write_manifest(c, outputs);
  std::cout << "diagnose: " << table.rows.size() << " rows of " << j["kind"].get<std::string>() << " input\n";
  return 0;
}

// --- checkpoint-inspect -----------------------------------------------------

int run_checkpoint_inspect(const std::string& path, const std::string& out) {
  const auto cp = read_checkpoint(path);
  json j;
  j["path"] = path;
  j["version"] = kCheckpointVersion;
  j["N"] = cp.state.n;
  j["d"] = cp.state.d;
  j["q_norm2"] = squared_norm_q(cp.state);
  j["p_norm2"] = squared_norm_p(cp.state);
  j["min_distance"] = number(min_pair_distance(cp.state));
  j["finite"] = cp.state.all_finite();
  j["rng"] = {{"seed", cp.rng.seed()}, {"stream", cp.rng.stream()}};
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clgas: Langevin dynamics of Coulomb gases, Lyapunov drift verification and HMC sampling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Subcommand simulate_cmd(app, "simulate", "integrate the Langevin dynamics and write a trajectory CSV");
  simulate_cmd.bind("--scheme", "integrator.scheme", "baoab or euler-maruyama");
  simulate_cmd.bind("--dt", "integrator.dt", "time step");
  simulate_cmd.bind("--eta", "integrator.eta", "halving guard fraction");
  simulate_cmd.bind("--T", "run.T", "final time");
  simulate_cmd.bind("--stride", "run.stride", "snapshot every stride steps");
  simulate_cmd.bind("--seed", "seed", "seed");
  simulate_cmd.bind("--out", "output.csv", "trajectory CSV");
  simulate_cmd.bind("--checkpoint", "output.checkpoint", "final-state checkpoint");
  simulate_cmd.bind("--json", "output.json", "run summary and event log");
  simulate_cmd.bind("--resume", "initial.checkpoint", "start from a checkpoint");

  Subcommand hmc_cmd(app, "sample-hmc", "sample the Gibbs measure by HMC and write a chain CSV");
  hmc_cmd.bind("--steps", "sampler.n_samples", "kept samples");
  hmc_cmd.bind("--dt", "sampler.leapfrog_dt", "leapfrog step");
  hmc_cmd.bind("--L", "sampler.leapfrog_steps", "leapfrog steps per proposal");
  hmc_cmd.bind("--n", "N", "particles");
  hmc_cmd.bind("--burn", "sampler.burn_in", "burn-in iterations");
  hmc_cmd.bind("--thin", "sampler.thin", "keep every thin-th iteration");
  hmc_cmd.bind("--refresh", "sampler.momentum_refresh", "momentum refresh in (0, 1]");
  hmc_cmd.bind("--seed", "seed", "seed");
  hmc_cmd.bind("--preset", "sampler.preset", "none or ginibre");
  hmc_cmd.bind("--out", "output.csv", "chain CSV");
  hmc_cmd.bind("--json", "output.json", "chain summary");

  Subcommand lyap_cmd(app, "verify-lyapunov", "check parameter conditions, fit and test the drift bound");
  lyap_cmd.bind("--n-train", "verify.n_train", "training states");
  lyap_cmd.bind("--n-test", "verify.n_test", "held-out test states");
  lyap_cmd.bind("--replicas", "verify.replicas", "supermartingale replicas (0 skips)");
  lyap_cmd.bind("--T", "run.T", "supermartingale horizon");
  lyap_cmd.bind("--seed", "seed", "seed");
  lyap_cmd.bind("--out", "output.json", "report JSON");
  lyap_cmd.bind("--csv", "output.csv", "supermartingale checkpoints CSV");

  Subcommand lemma_cmd(app, "verify-lemma", "sweep random configurations through the J inequality");
  lemma_cmd.bind("--configs", "verify.n_configs", "configurations");
  lemma_cmd.bind("--seed", "seed", "seed");
  lemma_cmd.bind("--out", "output.csv", "slack CSV");
  lemma_cmd.bind("--json", "output.json", "summary JSON");

  Subcommand diag_cmd(app, "diagnose", "summarize a trajectory or HMC CSV");
  diag_cmd.bind("--in", "diagnose.input", "trajectory or chain CSV");
  diag_cmd.bind("--burn", "diagnose.burn_in", "rows to skip");
  diag_cmd.bind("--bins", "diagnose.bins", "radial profile bins");
  diag_cmd.bind("--out", "output.csv", "radial profile CSV");
  diag_cmd.bind("--json", "output.json", "summary JSON");

  std::string inspect_path, inspect_out;
  auto* inspect = app.add_subcommand("checkpoint-inspect", "print a checkpoint summary as JSON");
  inspect->add_option("path", inspect_path, "checkpoint file")->required();
  inspect->add_option("--out", inspect_out, "write the JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*simulate_cmd.app()) return run_simulate(simulate_cmd);
    if (*hmc_cmd.app()) return run_sample_hmc(hmc_cmd);
    if (*lyap_cmd.app()) return run_verify_lyapunov(lyap_cmd);
    if (*lemma_cmd.app()) return run_verify_lemma(lemma_cmd);
    if (*diag_cmd.app()) return run_diagnose(diag_cmd);
    if (*inspect) return run_checkpoint_inspect(inspect_path, inspect_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
