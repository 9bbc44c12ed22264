#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#include "ngmm/bounds.hpp"
#include "ngmm/diagnostics.hpp"
#include "ngmm/drift.hpp"
#include "ngmm/io.hpp"
#include "ngmm/model.hpp"
#include "ngmm/samplers.hpp"

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonOpts {
  std::string config_path;
  std::string out_path;
  long seed = -1;  // -1: take from config
  int chains = 1;
  long iterations = -1;
  long burnin = -1;
  long thin = -1;
  std::string sampler;
  double r = -1.0;
  bool store_tau = false;
  int instances = 200;
  long samples = 50000;
  int states = 50;
  int draws = 1000;
  long mc_draws = 100000;
  double c_star = 0.0, m1 = 0.0, m2 = 0.0;
};

ngmm::SamplerKind parse_kind(const std::string& name) {
  if (name == "hybrid") return ngmm::SamplerKind::hybrid;
  if (name == "gibbs") return ngmm::SamplerKind::gibbs_deterministic;
  if (name == "random-scan") return ngmm::SamplerKind::gibbs_random_scan;
  throw ngmm::ValidationError("unknown sampler '" + name +
                              "' (expected hybrid|gibbs|random-scan)");
}

std::string kind_name(ngmm::SamplerKind kind) {
  switch (kind) {
    case ngmm::SamplerKind::hybrid: return "hybrid";
    case ngmm::SamplerKind::gibbs_deterministic: return "gibbs";
    case ngmm::SamplerKind::gibbs_random_scan: return "random-scan";
  }
  return "?";
}

ngmm::SamplerConfig sampler_from_config(const ngmm::Config& cfg,
                                        const CommonOpts& opt) {
  ngmm::SamplerConfig sc;
  sc.kind = parse_kind(opt.sampler.empty()
                           ? cfg.get_string_or("sampler.kind", "hybrid")
                           : opt.sampler);
  sc.r = opt.r > 0 ? opt.r : cfg.get_double_or("sampler.r", 0.5);
  sc.iterations = opt.iterations >= 0 ? opt.iterations
                                      : cfg.get_long_or("sampler.iterations", 1000);
  sc.burnin = opt.burnin >= 0 ? opt.burnin : cfg.get_long_or("sampler.burnin", 0);
  sc.thin = opt.thin >= 1 ? opt.thin : cfg.get_long_or("sampler.thin", 1);
  sc.seed = static_cast<std::uint64_t>(
      opt.seed >= 0 ? opt.seed : cfg.get_long_or("sampler.seed", 0));
  sc.store_tau = opt.store_tau;
  if (cfg.has("sampler.scan_probs")) {
    auto probs = cfg.get_double_list("sampler.scan_probs");
    if (probs.size() != 3)
      throw ngmm::ValidationError("sampler.scan_probs needs 3 entries");
    sc.scan_probs = {probs[0], probs[1], probs[2]};
  }
  ngmm::validate_sampler_config(sc);
  return sc;
}

json manifest_json(const ngmm::Config& cfg, const ngmm::SamplerConfig& sc,
                   double wall_seconds) {
  json inputs = json::object();
  for (const std::string key : {"model.y", "model.x"})
    if (cfg.has(key))
      inputs[cfg.get_string(key)] =
          ngmm::format_double(double(ngmm::file_digest(cfg.get_string(key))));
  for (int i = 1; i <= 64; ++i) {
    const std::string key = "model.z" + std::to_string(i);
    if (!cfg.has(key)) break;
    inputs[cfg.get_string(key)] =
        ngmm::format_double(double(ngmm::file_digest(cfg.get_string(key))));
  }
  json man;
  man["version"] = kVersion;
  man["seed"] = sc.seed;
  man["sampler"] = kind_name(sc.kind);
  man["r"] = sc.r;
  man["iterations"] = sc.iterations;
  man["burnin"] = sc.burnin;
  man["thin"] = sc.thin;
  man["wall_seconds"] = wall_seconds;
  man["input_digests"] = inputs;
  json resolved = json::object();
  for (const auto& [k, v] : cfg.values) resolved[k] = v;
  man["config"] = resolved;
  return man;
}

std::string with_chain_suffix(const std::string& path, int chain, int total) {
  if (total <= 1) return path;
  const auto dot = path.rfind('.');
  if (dot == std::string::npos)
    return path + "_" + std::to_string(chain);
  return path.substr(0, dot) + "_" + std::to_string(chain) + path.substr(dot);
}

int cmd_run(const CommonOpts& opt) {
  const auto cfg = ngmm::Config::parse_file(opt.config_path);
  auto [model, hyper] = ngmm::load_model(cfg);
  std::printf("model: n=%d p=%d m=%d q=%d\n", model.n, model.p, model.m,
              model.q);
  ngmm::SamplerConfig sc = sampler_from_config(cfg, opt);
  const std::string out =
      !opt.out_path.empty() ? opt.out_path
                            : cfg.get_string_or("io.output_path", "chain.csv");

  std::vector<ngmm::ChainOutput> outputs(opt.chains);
  std::vector<std::exception_ptr> errors(opt.chains);
  auto run_one = [&](int idx) {
    try {
      ngmm::SamplerConfig local = sc;
      local.seed = ngmm::Rng(sc.seed).substream(idx).seed();
      if (opt.chains == 1) local.seed = sc.seed;
      ngmm::Rng init_rng(local.seed + 0x517cc1b727220a95ULL);
      const ngmm::ChainState init = ngmm::default_init(model, hyper, init_rng);
      outputs[idx] = ngmm::run_chain(model, hyper, init, local);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  };
  if (opt.chains == 1) {
    run_one(0);
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < opt.chains; ++i) pool.emplace_back(run_one, i);
    for (auto& th : pool) th.join();
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  for (int i = 0; i < opt.chains; ++i) {
    const std::string path = with_chain_suffix(out, i, opt.chains);
    ngmm::write_csv_table(path, ngmm::coordinate_names(model),
                          ngmm::chain_matrix(outputs[i]));
    if (sc.store_tau && !outputs[i].taus.empty()) {
      Eigen::MatrixXd taus(outputs[i].taus.size(), model.p);
      for (size_t s = 0; s < outputs[i].taus.size(); ++s)
        taus.row(s) = outputs[i].taus[s].tau.transpose();
      std::vector<std::string> tau_names;
      for (int j = 1; j <= model.p; ++j)
        tau_names.push_back("tau_" + std::to_string(j));
      ngmm::write_csv_table(path + ".tau.csv", tau_names, taus);
    }
    json man = manifest_json(cfg, sc, outputs[i].wall_seconds);
    man["chain_index"] = i;
    man["stored_states"] = outputs[i].states.size();
    std::ofstream meta(path + ".meta.json");
    meta << man.dump(2) << '\n';
    std::printf("chain %d: %zu states -> %s (%.2fs)\n", i,
                outputs[i].states.size(), path.c_str(),
                outputs[i].wall_seconds);
  }
  return 0;
}

json certificate_json(const ngmm::CertificateReport& rep) {
  json j;
  j["cond1_full_rank_Z"] = rep.cond1;
  j["cond2_a0_above_threshold"] = rep.cond2;
  j["cond3_ai_above_one"] = rep.cond3;
  j["z_rank"] = rep.z_rank;
  j["a0_threshold"] = rep.a0_threshold;
  j["min_ai"] = rep.min_ai;
  j["r_star_upper"] = rep.r_star_upper;
  j["s_max"] = rep.s_max;
  j["C3"] = rep.C3;
  j["kappa_c"] = rep.kappa_c;
  j["constants"] = {{"c_star", rep.constants.c_star},
                    {"M1", rep.constants.M1},
                    {"M2", rep.constants.M2},
                    {"estimated", rep.constants.estimated}};
  if (rep.coefficients) {
    const auto& co = *rep.coefficients;
    j["coefficients"] = {
        {"alpha1", co.alpha1}, {"alpha2", co.alpha2}, {"alpha3", co.alpha3},
        {"alpha4", co.alpha4}, {"r", co.r},           {"C1", co.C1},
        {"C2", co.C2},         {"rho_star", co.rho_star}, {"L", co.L}};
    j["coefficients"]["delta"] = std::vector<double>(
        co.delta.data(), co.delta.data() + co.delta.size());
    j["coefficients"]["eta"] =
        std::vector<double>(co.eta.data(), co.eta.data() + co.eta.size());
    j["delta_fallback"] = rep.delta_fallback;
  }
  json rhos = json::object();
  for (const auto& [name, value] : rep.rho_values) rhos[name] = value;
  j["rho"] = rhos;
  return j;
}

int cmd_certify(const CommonOpts& opt) {
  const auto cfg = ngmm::Config::parse_file(opt.config_path);
  auto [model, hyper] = ngmm::load_model(cfg);
  ngmm::CertificateReport rep = ngmm::check_conditions(model, hyper);
  std::printf("condition (1) full column rank Z: %s (rank %d of %d)\n",
              rep.cond1 ? "pass" : "FAIL", rep.z_rank, model.q);
  std::printf("condition (2) a0 > %.17g: %s (a0 = %.17g)\n", rep.a0_threshold,
              rep.cond2 ? "pass" : "FAIL", hyper.a[0]);
  std::printf("condition (3) min a_i > 1: %s (min a_i = %.17g)\n",
              rep.cond3 ? "pass" : "FAIL", rep.min_ai);
  if (!rep.all_conditions()) {
    std::fflush(stdout);
    std::fprintf(stderr, "certificate conditions fail; nothing to derive\n");
    return 1;
  }

  ngmm::DriftConstants constants;
  if (opt.c_star > 0 || opt.m1 > 0 || opt.m2 > 0) {
    if (!(opt.c_star > 0 && opt.m1 > 0 && opt.m2 > 0))
      throw ngmm::ValidationError(
          "--c-star, --m1 and --m2 must be supplied together");
    constants = {opt.c_star, opt.m1, opt.m2, false};
  } else {
    ngmm::Rng rng(static_cast<std::uint64_t>(opt.seed >= 0 ? opt.seed : 0));
    constants.c_star = ngmm::estimate_c_star(model, 10000, rng);
    std::tie(constants.M1, constants.M2) =
        ngmm::estimate_m1_m2(hyper.c, hyper.d);
    constants.estimated = true;
  }
  rep = ngmm::derive_certificate(model, hyper, constants);
  const auto& co = *rep.coefficients;
  std::printf("constants: c*=%.6g M1=%.6g M2=%.6g (%s)\n", constants.c_star,
              constants.M1, constants.M2,
              constants.estimated ? "estimated" : "supplied");
  std::printf("r* = %.6g (upper bound %.6g)\n", co.r, rep.r_star_upper);
  for (const auto& [name, value] : rep.rho_values)
    std::printf("  %-16s %.12g\n", name.c_str(), value);
  std::printf("rho* = %.12g  L = %.6g\n", co.rho_star, co.L);

  const std::string out =
      opt.out_path.empty() ? "certificate.json" : opt.out_path;
  std::ofstream f(out);
  f << certificate_json(rep).dump(2) << '\n';
  std::printf("report written to %s\n", out.c_str());
  return 0;
}

int cmd_verify_bounds(const CommonOpts& opt) {
  const std::uint64_t seed =
      static_cast<std::uint64_t>(opt.seed >= 0 ? opt.seed : 7);
  const auto reports = ngmm::run_bounds_suite(
      opt.instances, seed, static_cast<int>(opt.mc_draws));
  const auto rows = ngmm::summarize_bounds(reports);
  bool all_pass = true;
  std::printf("%-18s %10s %16s  %s\n", "lemma", "instances", "min margin",
              "result");
  for (const auto& row : rows) {
    all_pass = all_pass && row.passed;
    std::printf("%-18s %10d %16.6g  %s\n", row.name.c_str(), row.instances,
                row.min_margin, row.passed ? "pass" : "FAIL");
  }
  if (!opt.out_path.empty()) {
    json j = json::array();
    for (const auto& rep : reports)
      j.push_back({{"name", rep.name},
                   {"lhs", rep.lhs},
                   {"rhs", rep.rhs},
                   {"margin", rep.margin},
                   {"passed", rep.passed},
                   {"c_star_dependent", rep.c_star_dependent},
                   {"seed", rep.seed},
                   {"n", rep.n},
                   {"p", rep.p},
                   {"q", rep.q}});
    std::ofstream f(opt.out_path);
    f << j.dump(2) << '\n';
  }
  return all_pass ? 0 : 3;
}

int cmd_verify_drift(const CommonOpts& opt) {
  const auto cfg = ngmm::Config::parse_file(opt.config_path);
  auto [model, hyper] = ngmm::load_model(cfg);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(opt.seed >= 0 ? opt.seed : 11);
  ngmm::Rng rng(seed);

  ngmm::DriftConstants constants;
  if (opt.c_star > 0) {
    constants = {opt.c_star, opt.m1, opt.m2, false};
  } else {
    constants.c_star = ngmm::estimate_c_star(model, 10000, rng);
    std::tie(constants.M1, constants.M2) =
        ngmm::estimate_m1_m2(hyper.c, hyper.d);
    constants.estimated = true;
  }
  const auto rep = ngmm::derive_certificate(model, hyper, constants);
  const auto& co = *rep.coefficients;
  std::printf("certificate: rho* = %.6g, L = %.6g, r* = %.6g\n", co.rho_star,
              co.L, co.r);

  bool all_pass = true;
  for (int s = 0; s < opt.states; ++s) {
    ngmm::ChainState state;
    state.beta.resize(model.p);
    for (int j = 0; j < model.p; ++j) {
      double b = rng.normal();
      while (b == 0.0) b = rng.normal();
      state.beta[j] = b;
    }
    state.u.resize(model.q);
    for (int k = 0; k < model.q; ++k) state.u[k] = rng.normal();
    state.lambda.resize(model.m + 1);
    for (int i = 0; i <= model.m; ++i)
      state.lambda[i] =
          std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));

    const double v = ngmm::drift_value(model, hyper, state, co);
    const auto est = ngmm::estimate_drift_expectation(model, hyper, state, co,
                                                      opt.draws, rng);
    const double bound = co.rho_star * v + co.L + 4.0 * est.std_error;
    const bool ok = est.estimate <= bound;
    all_pass = all_pass && ok;
    std::printf("state %2d: E-hat %.6g (se %.3g) vs rho* v + L = %.6g  %s\n",
                s, est.estimate, est.std_error, co.rho_star * v + co.L,
                ok ? "pass" : "FAIL");
  }
  return all_pass ? 0 : 3;
}

int cmd_geweke(const CommonOpts& opt) {
  const auto cfg = ngmm::Config::parse_file(opt.config_path);
  auto [model, hyper] = ngmm::load_model(cfg);
  ngmm::SamplerConfig sc = sampler_from_config(cfg, opt);
  const std::uint64_t seed =
      static_cast<std::uint64_t>(opt.seed >= 0 ? opt.seed : sc.seed);
  const auto res = ngmm::geweke_joint_test(
      model, hyper, sc, static_cast<int>(opt.samples), seed);
  std::printf("%-18s %12s %12s %8s\n", "function", "marginal", "successive",
              "z");
  for (size_t k = 0; k < res.names.size(); ++k)
    std::printf("%-18s %12.5g %12.5g %8.3f\n", res.names[k].c_str(),
                res.mean_marginal[k], res.mean_successive[k], res.z[k]);
  std::printf("max |z| = %.3f (threshold 4)\n", res.max_abs_z);
  if (!opt.out_path.empty()) {
    json j;
    j["names"] = res.names;
    j["z"] = res.z;
    j["max_abs_z"] = res.max_abs_z;
    j["samples"] = opt.samples;
    j["sampler"] = kind_name(sc.kind);
    j["seed"] = seed;
    std::ofstream f(opt.out_path);
    f << j.dump(2) << '\n';
  }
  return res.max_abs_z < 4.0 ? 0 : 3;
}

int cmd_summarize(const CommonOpts& opt) {
  auto [names, rows] = ngmm::read_csv_table(opt.config_path);
  const auto stats = ngmm::summarize(rows, names);
  std::printf("%-12s %12s %12s %10s %12s %12s %12s\n", "coord", "mean", "sd",
              "ess", "q5", "q50", "q95");
  for (const auto& cs : stats.coords)
    std::printf("%-12s %12.5g %12.5g %10.1f %12.5g %12.5g %12.5g\n",
                cs.name.c_str(), cs.mean, cs.sd, cs.ess, cs.q5, cs.q50,
                cs.q95);
  if (!opt.out_path.empty()) {
    json j = json::array();
    for (const auto& cs : stats.coords)
      j.push_back({{"name", cs.name},
                   {"mean", cs.mean},
                   {"sd", cs.sd},
                   {"ess", cs.ess},
                   {"q5", cs.q5},
                   {"q50", cs.q50},
                   {"q95", cs.q95},
                   {"acf", cs.acf}});
    std::ofstream f(opt.out_path);
    f << j.dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampler and verification toolkit for the normal-gamma "
               "shrinkage linear mixed model"};
  app.require_subcommand(1);
  CommonOpts opt;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opt.config_path, "config file");
    if (needs_config) c->required();
    sub->add_option("--out", opt.out_path, "output path");
    sub->add_option("--seed", opt.seed, "seed override");
  };

  auto* run = app.add_subcommand("run", "run MCMC chains");
  add_common(run, true);
  run->add_option("--chains", opt.chains, "number of concurrent chains");
  run->add_option("--iterations", opt.iterations, "post-burnin iterations");
  run->add_option("--burnin", opt.burnin, "burn-in iterations");
  run->add_option("--thin", opt.thin, "thinning stride");
  run->add_option("--sampler", opt.sampler, "hybrid|gibbs|random-scan");
  run->add_option("--r", opt.r, "hybrid mixing probability");
  run->add_flag("--store-tau", opt.store_tau, "also store tau draws");

  auto* certify = app.add_subcommand(
      "certify", "check ergodicity conditions and derive drift coefficients");
  add_common(certify, true);
  certify->add_option("--c-star", opt.c_star, "analysis constant c*");
  certify->add_option("--m1", opt.m1, "analysis constant M1");
  certify->add_option("--m2", opt.m2, "analysis constant M2");

  auto* bounds = app.add_subcommand("verify-bounds",
                                    "run the lemma inequality suite");
  add_common(bounds, false);
  bounds->add_option("--instances", opt.instances, "number of instances");
  bounds->add_option("--mc-draws", opt.mc_draws,
                     "Monte Carlo draws per instance");

  auto* vdrift = app.add_subcommand(
      "verify-drift", "check the one-step drift inequality empirically");
  add_common(vdrift, true);
  vdrift->add_option("--states", opt.states, "number of random states");
  vdrift->add_option("--draws", opt.draws, "replicates per state");
  vdrift->add_option("--c-star", opt.c_star, "analysis constant c*");
  vdrift->add_option("--m1", opt.m1, "analysis constant M1");
  vdrift->add_option("--m2", opt.m2, "analysis constant M2");

  auto* geweke = app.add_subcommand("geweke",
                                    "joint-distribution sampler test");
  add_common(geweke, true);
  geweke->add_option("--samples", opt.samples, "samples per stream");
  geweke->add_option("--sampler", opt.sampler, "hybrid|gibbs|random-scan");
  geweke->add_option("--r", opt.r, "hybrid mixing probability");

  auto* summ = app.add_subcommand("summarize", "summarize a chain CSV");
  summ->add_option("--chain", opt.config_path, "chain CSV file")->required();
  summ->add_option("--out", opt.out_path, "machine-readable report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(opt);
    if (certify->parsed()) return cmd_certify(opt);
    if (bounds->parsed()) return cmd_verify_bounds(opt);
    if (vdrift->parsed()) return cmd_verify_drift(opt);
    if (geweke->parsed()) return cmd_geweke(opt);
    if (summ->parsed()) return cmd_summarize(opt);
  } catch (const ngmm::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 1;
  } catch (const ngmm::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 2;
  } catch (const ngmm::SamplerError& e) {
    std::fprintf(stderr, "sampler error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
