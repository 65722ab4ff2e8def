// sncm command-line front end.
//
// Every subcommand writes its outputs plus a manifest.json (config snapshot,
// seed, version, blob ids of the outputs) into --out. Exit codes: 0 ok,
// 1 usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sncm/config.hpp"
#include "sncm/distributions.hpp"
#include "sncm/gibbs.hpp"
#include "sncm/io.hpp"
#include "sncm/model_eval.hpp"
#include "sncm/mrf.hpp"
#include "sncm/parallel.hpp"
#include "sncm/posterior.hpp"
#include "sncm/relmatrix.hpp"
#include "sncm/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sncm;

namespace {

constexpr const char* kVersion = "1.0.0";

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.out.empty()) cfg.out = c.out;
  cfg.mcmc.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

json base_manifest(const std::string& command, const RunConfig& cfg) {
  json m;
  m["tool"] = "sncm";
  m["version"] = kVersion;
  m["command"] = command;
  m["seed"] = cfg.seed;
  m["config"] = cfg.to_ini(false);
  return m;
}

std::vector<fs::path> relative_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir);
    if (rel == "manifest.json") continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string fmt(double x) { return format_double(x); }

std::string fmt_opt(const std::optional<double>& x) { return x ? format_double(*x) : "NA"; }

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_grid(const std::string& spec, const RelationshipMatrix& R) {
  if (spec == "analysis") return analysis_eta_grid();
  if (spec == "simulation") return simulation_eta_grid(R);
  std::vector<double> out;
  for (const auto& s : split_csv_list(spec)) {
    bool ok = false;
    const double v = parse_double(s, ok);
    if (!ok) throw UsageError("invalid eta grid value '" + s + "'");
    out.push_back(v);
  }
  return out;
}

/// R restricted and reordered to `names`; unnamed matrices must already match in size.
RelationshipMatrix align_relationships(const RelationshipMatrix& R, const std::vector<std::string>& names) {
  if (R.names().empty()) {
    if (R.size() != names.size())
      throw std::invalid_argument("relationship matrix has " + std::to_string(R.size()) + " predictors, data has " +
                                  std::to_string(names.size()));
    return R;
  }
  std::map<std::string, std::size_t> pos;
  for (std::size_t k = 0; k < R.names().size(); ++k) pos[R.names()[k]] = k;
  const std::size_t p = names.size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const auto a = pos.find(names[i]);
    if (a == pos.end()) throw std::invalid_argument("predictor '" + names[i] + "' missing from relationship matrix");
    for (std::size_t j = 0; j < p; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = R(a->second, pos.at(names[j]));
  }
  return RelationshipMatrix(std::move(m), names);
}

RelationshipMatrix load_relationships(const RunConfig& cfg) {
  if (!cfg.relationship_path.empty()) return read_relationship_csv(cfg.relationship_path);
  const Hierarchy h = read_hierarchy(cfg.hierarchy_path);
  const RelationshipMatrix R = build_relationship_matrix(h.root);
  return RelationshipMatrix(R.entries(), h.predictor_names);
}

EtaSearchSpec tune_spec(const RunConfig& cfg, const RelationshipMatrix& R) {
  EtaSearchSpec spec;
  spec.omega0 = cfg.omega;
  spec.candidates = parse_grid(cfg.eta_grid, R);
  spec.prior_draws = cfg.tune_draws;
  spec.burn_in = cfg.tune_burn_in;
  spec.percentile = cfg.tune_percentile;
  return spec;
}

std::string eta_table_csv(const EtaSelection& sel) {
  CsvTable t;
  t.header = {"eta", "q_size", "q_se", "mean_size", "qualifies", "chosen"};
  for (const auto& c : sel.table)
    t.rows.push_back({fmt(c.eta), std::to_string(c.quantile_size), fmt(c.quantile_se), fmt(c.mean_size),
                      c.qualifies ? "1" : "0", c.eta == sel.eta ? "1" : "0"});
  return t.to_string();
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Common& common, const std::string& scenario_name, std::optional<std::size_t> replicates) {
  RunConfig cfg = resolve_config(common);
  if (!scenario_name.empty()) cfg.scenario = scenario_name;
  if (replicates) cfg.replicates = *replicates;
  const SimScenario sc = make_scenario(scenario_from_string(cfg.scenario));
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file_atomic(out / "R.csv", relationship_to_csv(sc.R));

  std::vector<SimReplicate> reps(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    Rng rng(derive_seed(cfg.seed, r));
    reps[r] = generate_replicate(sc, rng, r);
  });
  for (const auto& rep : reps) {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%03zu", rep.index + 1);
    const fs::path dir = out / name;
    write_file_atomic(dir / "data.csv", dataset_to_csv(rep.data));
    json truth;
    truth["true_psi"] = rep.true_psi;
    truth["psi_hat"] = rep.data.psi;
    truth["gamma"] = rep.true_gamma;
    truth["beta"] = std::vector<double>(rep.true_beta.data(), rep.true_beta.data() + rep.true_beta.size());
    truth["pmv_fraction"] = 1.0 - rep.data.observed_fraction();
    write_file_atomic(dir / "truth.json", truth.dump(2) + "\n");
    if (sc.permute_R) write_file_atomic(dir / "R_fit.csv", relationship_to_csv(rep.R_fit));
  }
  json m = base_manifest("simulate", cfg);
  m["scenario"] = {{"name", to_string(sc.name)},
                   {"n", sc.n},
                   {"p", sc.p},
                   {"beta0", sc.beta0},
                   {"sigma", sc.sigma},
                   {"delta", sc.delta},
                   {"rho", sc.rho},
                   {"censor_prob", sc.censor_prob},
                   {"psi", sc.psi},
                   {"error_family", sc.error_family == ErrorFamily::log_normal ? "log_normal" : "skew_normal"},
                   {"correlated", sc.correlated},
                   {"permute_R", sc.permute_R},
                   {"calibration_seed", sc.calibration_seed}};
  m["replicates"] = cfg.replicates;
  write_manifest(out, m, relative_files(out));
  std::cout << "wrote " << cfg.replicates << " replicate(s) of " << to_string(sc.name) << " to " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------- build-rel

int cmd_build_rel(const Common& common, const std::string& hierarchy, bool simulation) {
  RunConfig cfg = resolve_config(common);
  const fs::path out = cfg.out;
  RelationshipMatrix R;
  if (simulation) {
    R = simulation_R();
  } else {
    const std::string path = hierarchy.empty() ? cfg.hierarchy_path : hierarchy;
    if (path.empty()) throw UsageError("build-rel needs --hierarchy or --simulation");
    const Hierarchy h = read_hierarchy(path);
    R = RelationshipMatrix(build_relationship_matrix(h.root).entries(), h.predictor_names);
  }
  fs::create_directories(out);
  write_file_atomic(out / "R.csv", relationship_to_csv(R));
  json m = base_manifest("build-rel", cfg);
  m["predictors"] = R.size();
  m["max_entry"] = R.max_entry();
  write_manifest(out, m, relative_files(out));
  std::cout << "wrote " << R.size() << "x" << R.size() << " relationship matrix to " << out / "R.csv" << "\n";
  return 0;
}

// ---------------------------------------------------------------- tune-eta

int cmd_tune_eta(const Common& common, const std::string& relationship, std::optional<double> omega,
                 const std::string& grid) {
  RunConfig cfg = resolve_config(common);
  if (!relationship.empty()) cfg.relationship_path = relationship;
  if (omega) cfg.omega = *omega;
  if (!grid.empty()) cfg.eta_grid = grid;
  if (cfg.relationship_path.empty() && cfg.hierarchy_path.empty())
    throw UsageError("tune-eta needs --relationship (or prior.relationship / prior.hierarchy in the config)");
  const RelationshipMatrix R = load_relationships(cfg);
  const EtaSelection sel = select_eta(tune_spec(cfg, R), R, Rng(cfg.seed), cfg.threads);
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file_atomic(out / "eta_table.csv", eta_table_csv(sel));
  json m = base_manifest("tune-eta", cfg);
  m["eta"] = sel.eta;
  m["reference_size"] = sel.reference_size;
  write_manifest(out, m, relative_files(out));
  std::cout << "eta = " << fmt(sel.eta) << " (reference q" << cfg.tune_percentile << " size " << sel.reference_size
            << ")\n";
  return 0;
}

// ---------------------------------------------------------------- fit

struct FitTask {
  std::string cohort;
  std::string response;
  std::size_t file_index;
};

struct FitResult {
  std::vector<double> pip;
  std::vector<std::string> predictors;
  SelectionResult summary;
  std::vector<std::optional<double>> cond_beta;
  ResponseTransform transform;
};

std::string trace_csv(std::span<const PosteriorChain> chains) {
  const auto traces = scalar_traces(chains);
  CsvTable t;
  t.header = {"chain", "draw"};
  for (const auto& [name, _] : traces) t.header.push_back(name);
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t d = 0; d < chains[c].draws.size(); ++d) {
      std::vector<std::string> row{std::to_string(c), std::to_string(d)};
      for (const auto& [_, per_chain] : traces) row.push_back(fmt(per_chain[c][d]));
      t.rows.push_back(std::move(row));
    }
  return t.to_string();
}

int cmd_fit(const Common& common, const std::vector<std::string>& data, const std::string& response,
            const std::string& prior, const std::string& error_model) {
  RunConfig cfg = resolve_config(common);
  if (!data.empty()) cfg.data_paths = data;
  if (!response.empty()) cfg.response = response;
  if (!prior.empty()) cfg.prior = prior;
  if (!error_model.empty()) cfg.error_model = error_model_from_string(error_model);
  cfg.validate();
  if (cfg.data_paths.empty()) throw UsageError("fit needs --data (or data.paths in the config)");

  std::vector<CsvTable> tables;
  std::vector<FitTask> tasks;
  std::set<std::string> cohorts;
  for (std::size_t f = 0; f < cfg.data_paths.size(); ++f) {
    tables.push_back(read_csv(cfg.data_paths[f]));
    std::string cohort = fs::path(cfg.data_paths[f]).stem().string();
    if (!cohorts.insert(cohort).second) cohort += "_" + std::to_string(f + 1);
    for (const auto& r : response_columns(tables.back(), cfg.response, cfg.ingest_options()))
      tasks.push_back({cohort, r, f});
  }

  std::optional<RelationshipMatrix> R;
  std::optional<EtaSelection> tuned;
  double eta = cfg.eta;
  if (cfg.prior == "mrf") {
    R = load_relationships(cfg);
    if (cfg.tune_eta) {
      tuned = select_eta(tune_spec(cfg, *R), *R, Rng(derive_seed(cfg.seed, 0xe7aULL)), cfg.threads);
      eta = tuned->eta;
    }
  }

  const fs::path out = cfg.out;
  fs::create_directories(out);
  std::vector<FitResult> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::mutex log_mutex;

  parallel_for(tasks.size(), cfg.threads, [&](std::size_t k) {
    const FitTask& task = tasks[k];
    try {
      IngestOptions opts = cfg.ingest_options();
      opts.response = task.response;
      if (opts.predictors.empty()) {
        // Other response columns never act as predictors.
        const auto responses = response_columns(tables[task.file_index], cfg.response, opts);
        for (const auto& h : tables[task.file_index].header)
          if (std::find(responses.begin(), responses.end(), h) == responses.end() &&
              std::find(opts.confounders.begin(), opts.confounders.end(), h) == opts.confounders.end())
            opts.predictors.push_back(h);
      }
      CensoredDataset ds = dataset_from_table(tables[task.file_index], opts, cfg.data_paths[task.file_index]);
      ResponseTransform tr;
      if (cfg.standardize) std::tie(ds, tr) = standardize_with_pmv(ds);

      const MrfPrior selection = R ? MrfPrior(cfg.omega, eta, align_relationships(*R, ds.predictor_names))
                                   : MrfPrior::independent(cfg.omega, ds.p());
      const Hyperparams hyper = cfg.hyperparams(ds, selection);
      SamplerOptions sopts;
      sopts.error_model = cfg.error_model;
      sopts.store_latents = false;
      const Rng task_rng(derive_seed(cfg.seed, k));
      std::vector<PosteriorChain> chains;
      for (std::size_t c = 0; c < cfg.mcmc.chains; ++c)
        chains.push_back(run_chain(ds, hyper, cfg.mcmc, sopts, task_rng.split(c), c));

      const fs::path dir = out / "fits" / task.cohort / task.response;
      write_file_atomic(dir / "data.csv", dataset_to_csv(ds));
      for (std::size_t c = 0; c < chains.size(); ++c)
        write_chain_bundle(dir / ("chain_" + std::to_string(c + 1)), chains[c], ds.predictor_names,
                           ds.confounder_names);
      write_file_atomic(dir / "trace.csv", trace_csv(chains));
      if (chains.size() >= 2) {
        CsvTable t;
        t.header = {"parameter", "rhat", "ess", "flagged"};
        for (const auto& d : convergence_report(chains))
          t.rows.push_back({d.name, fmt(d.rhat), fmt(d.ess), d.flagged ? "1" : "0"});
        write_file_atomic(dir / "convergence.csv", t.to_string());
      }
      json fm;
      fm["cohort"] = task.cohort;
      fm["response"] = task.response;
      fm["prior"] = cfg.prior;
      fm["error_model"] = to_string(cfg.error_model);
      fm["eta"] = eta;
      fm["omega"] = cfg.omega;
      fm["task_seed"] = derive_seed(cfg.seed, k);
      fm["psi"] = ds.psi;
      fm["transform"] = {{"center", tr.center}, {"scale", tr.scale}};
      fm["chains"] = chains.size();
      fm["nu_sq"] = hyper.nu_sq;
      fm["rho_prior"] = {hyper.rho0, hyper.rho1};
      write_file_atomic(dir / "fit.json", fm.dump(2) + "\n");

      FitResult& res = results[k];
      res.summary = summarize(chains, cfg.fdr_target);
      res.pip = res.summary.pip;
      res.cond_beta = conditional_beta_estimates(chains);
      res.predictors = ds.predictor_names;
      res.transform = tr;
      std::lock_guard lock(log_mutex);
      std::cerr << "fit " << task.cohort << "/" << task.response << ": " << res.summary.selected.size()
                << " selected\n";
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < tasks.size(); ++k)
    if (!errors[k].empty())
      throw std::runtime_error("fit " + tasks[k].cohort + "/" + tasks[k].response + ": " + errors[k]);

  std::vector<std::vector<double>> all_pips;
  for (const auto& r : results) all_pips.push_back(r.pip);
  const bool pooled = cfg.pool_fdr && tasks.size() > 1;
  const std::optional<double> pooled_t = pooled ? pooled_fdr_threshold(all_pips, cfg.fdr_target) : std::nullopt;

  CsvTable pips, selection, coefs;
  pips.header = {"cohort", "response", "predictor", "pip"};
  selection.header = {"cohort", "response", "predictor", "pip", "threshold", "beta_hat", "beta_hat_original"};
  coefs.header = {"cohort", "response", "parameter", "estimate"};
  std::size_t total_selected = 0;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const FitResult& r = results[k];
    const std::optional<double> t = pooled ? pooled_t : r.summary.threshold;
    for (std::size_t j = 0; j < r.pip.size(); ++j) {
      pips.rows.push_back({tasks[k].cohort, tasks[k].response, r.predictors[j], fmt(r.pip[j])});
      if (t && r.pip[j] >= *t) {
        ++total_selected;
        const auto b = r.cond_beta[j];
        selection.rows.push_back({tasks[k].cohort, tasks[k].response, r.predictors[j], fmt(r.pip[j]), fmt(*t),
                                  fmt_opt(b),
                                  b ? fmt(r.transform.coefficient_to_original(*b)) : std::string("NA")});
      }
    }
    auto add = [&](const std::string& name, double v) {
      coefs.rows.push_back({tasks[k].cohort, tasks[k].response, name, fmt(v)});
    };
    add("beta0", r.summary.beta0_hat);
    add("sigma_sq", r.summary.sigma_sq_hat);
    add("delta", r.summary.delta_hat);
    add("rho", r.summary.rho_hat);
    for (Eigen::Index a = 0; a < r.summary.alpha_hat.size(); ++a)
      add("alpha_" + std::to_string(a + 1), r.summary.alpha_hat[a]);
  }
  write_file_atomic(out / "pip.csv", pips.to_string());
  write_file_atomic(out / "selection.csv", selection.to_string());
  write_file_atomic(out / "coefficients.csv", coefs.to_string());
  if (tuned) write_file_atomic(out / "eta_table.csv", eta_table_csv(*tuned));

  json m = base_manifest("fit", cfg);
  m["tasks"] = tasks.size();
  m["eta"] = eta;
  m["prior"] = cfg.prior;
  m["error_model"] = to_string(cfg.error_model);
  m["pooled_threshold"] = pooled_t ? json(*pooled_t) : json(nullptr);
  write_manifest(out, m, relative_files(out));
  std::cout << "fitted " << tasks.size() << " response model(s); " << total_selected << " selected\n";
  return 0;
}

// ---------------------------------------------------------------- evaluate

std::vector<PosteriorChain> load_chains(const fs::path& dir) {
  std::vector<fs::path> chain_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("chain_", 0) == 0) chain_dirs.push_back(e.path());
  std::sort(chain_dirs.begin(), chain_dirs.end(), [](const fs::path& a, const fs::path& b) {
    return std::stoul(a.filename().string().substr(6)) < std::stoul(b.filename().string().substr(6));
  });
  if (chain_dirs.empty()) throw std::runtime_error("no chain bundles under '" + dir.string() + "'");
  std::vector<PosteriorChain> chains;
  for (const auto& d : chain_dirs) chains.push_back(read_chain_bundle(d));
  return chains;
}

int cmd_evaluate(const Common& common, const std::vector<std::string>& fit_dirs) {
  RunConfig cfg = resolve_config(common);
  if (fit_dirs.empty()) throw UsageError("evaluate needs at least one --fits directory");
  struct Row {
    std::string cohort, error_model, prior;
    ElpdReport report;
    std::size_t models;
  };
  std::vector<Row> rows;
  for (const auto& fd : fit_dirs) {
    const json run = json::parse(read_file(fs::path(fd) / "manifest.json"));
    if (run.value("command", std::string{}) != "fit") throw std::invalid_argument("'" + fd + "' is not a fit output");
    std::vector<fs::path> cohorts;
    for (const auto& e : fs::directory_iterator(fs::path(fd) / "fits"))
      if (e.is_directory()) cohorts.push_back(e.path());
    std::sort(cohorts.begin(), cohorts.end());
    for (const auto& cdir : cohorts) {
      std::vector<fs::path> responses;
      for (const auto& e : fs::directory_iterator(cdir))
        if (e.is_directory()) responses.push_back(e.path());
      std::sort(responses.begin(), responses.end());
      std::vector<ElpdReport> per_model;
      for (const auto& rdir : responses) per_model.push_back(elpd_report(pooled_loglik(load_chains(rdir))));
      rows.push_back({cdir.filename().string(), run.at("error_model").get<std::string>(),
                      run.at("prior").get<std::string>(), aggregate_elpd(per_model), per_model.size()});
    }
  }
  CsvTable longt;
  longt.header = {"cohort", "error_model", "prior", "models", "elpd_is", "elpd_waic", "p_waic", "unstable_is_points"};
  for (const auto& r : rows)
    longt.rows.push_back({r.cohort, r.error_model, r.prior, std::to_string(r.models), fmt(r.report.elpd_is),
                          fmt(r.report.elpd_waic), fmt(r.report.p_waic), std::to_string(r.report.unstable_is_points)});

  // Wide layout: one row per (cohort, estimator), one column per error model x prior.
  std::vector<std::string> columns;
  for (const auto& r : rows) {
    const std::string col = r.error_model + "/" + r.prior;
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
  }
  std::vector<std::string> cohort_order;
  for (const auto& r : rows)
    if (std::find(cohort_order.begin(), cohort_order.end(), r.cohort) == cohort_order.end())
      cohort_order.push_back(r.cohort);
  CsvTable wide;
  wide.header = {"cohort", "estimator"};
  wide.header.insert(wide.header.end(), columns.begin(), columns.end());
  for (const auto& cohort : cohort_order)
    for (const std::string est : {"IS", "WAIC"}) {
      std::vector<std::string> line{cohort, est};
      for (const auto& col : columns) {
        std::string cell = "NA";
        for (const auto& r : rows)
          if (r.cohort == cohort && r.error_model + "/" + r.prior == col)
            cell = fmt(est == "IS" ? r.report.elpd_is : r.report.elpd_waic);
        line.push_back(cell);
      }
      wide.rows.push_back(std::move(line));
    }
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file_atomic(out / "elpd.csv", longt.to_string());
  write_file_atomic(out / "elpd_table.csv", wide.to_string());
  json m = base_manifest("evaluate", cfg);
  m["inputs"] = fit_dirs;
  write_manifest(out, m, relative_files(out));
  std::cout << wide.to_string();
  return 0;
}

// ---------------------------------------------------------------- score

int cmd_score(const Common& common, const std::string& sim_dir, const std::string& methods_spec,
              std::optional<double> eta_override, std::optional<std::size_t> iterations,
              std::optional<std::size_t> burn_in, std::optional<std::size_t> thin) {
  RunConfig cfg = resolve_config(common);
  if (sim_dir.empty()) throw UsageError("score needs --sim (a simulate output directory)");
  const json sim = json::parse(read_file(fs::path(sim_dir) / "manifest.json"));
  if (sim.value("command", std::string{}) != "simulate")
    throw std::invalid_argument("'" + sim_dir + "' is not a simulate output");
  const SimScenario sc = make_scenario(scenario_from_string(sim.at("scenario").at("name").get<std::string>()));
  const std::size_t reps = sim.at("replicates").get<std::size_t>();

  FitSettings settings;
  settings.mcmc = McmcConfig::simulation_defaults();
  if (!common.config_path.empty()) settings.mcmc = cfg.mcmc;
  if (iterations) settings.mcmc.iterations = *iterations;
  if (burn_in) settings.mcmc.burn_in = *burn_in;
  if (thin) settings.mcmc.thin = *thin;
  settings.mcmc.chains = 1;
  settings.mcmc.validate();
  settings.fdr_target = cfg.fdr_target;
  settings.error_model = cfg.error_model;

  const auto methods = split_csv_list(methods_spec);
  for (const auto& m : methods)
    if (m != "independent" && m != "mrf" && m != "forced_rho_1" && m != "half_min_impute")
      throw UsageError("unknown method '" + m + "'");
  std::optional<EtaSelection> tuned;
  if (std::find(methods.begin(), methods.end(), "mrf") != methods.end()) {
    if (eta_override) {
      settings.eta = *eta_override;
    } else {
      tuned = tune_scenario_eta(sc, settings.omega, Rng(derive_seed(cfg.seed, 0xe7aULL)), cfg.threads);
      settings.eta = tuned->eta;
    }
  }

  std::vector<std::vector<ReplicateResult>> results(methods.size(), std::vector<ReplicateResult>(reps));
  BitVector truth;
  Eigen::VectorXd true_beta;
  {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%03d", 1);
    const json t = json::parse(read_file(fs::path(sim_dir) / name / "truth.json"));
    truth = t.at("gamma").get<BitVector>();
    const auto b = t.at("beta").get<std::vector<double>>();
    true_beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
  }
  const RelationshipMatrix R_shared = read_relationship_csv(fs::path(sim_dir) / "R.csv");
  std::mutex log_mutex;
  parallel_for(reps, cfg.threads, [&](std::size_t r) {
    char name[32];
    std::snprintf(name, sizeof name, "replicate_%03zu", r + 1);
    const fs::path dir = fs::path(sim_dir) / name;
    IngestOptions opts;
    opts.response = "y";
    const CensoredDataset data = ingest_csv(dir / "data.csv", opts);
    const RelationshipMatrix R_fit = fs::exists(dir / "R_fit.csv") ? read_relationship_csv(dir / "R_fit.csv") : R_shared;
    const Rng rng(derive_seed(cfg.seed, r));
    for (std::size_t m = 0; m < methods.size(); ++m) {
      FitOutcome fo;
      if (methods[m] == "independent")
        fo = fit_dataset(data, PriorKind::independent, settings, R_fit, {}, rng);
      else if (methods[m] == "mrf")
        fo = fit_dataset(data, PriorKind::mrf, settings, R_fit, {}, rng);
      else if (methods[m] == "forced_rho_1")
        fo = run_baseline_methods(data, BaselineMethod::forced_rho_1, settings, rng);
      else
        fo = run_baseline_methods(data, BaselineMethod::half_min_impute, settings, rng);
      results[m][r] = {fo.selection.selected, fo.conditional_beta};
    }
    std::lock_guard lock(log_mutex);
    std::cerr << "scored replicate " << r + 1 << "/" << reps << "\n";
  });

  CsvTable metrics, variables, per_rep;
  metrics.header = {"scenario", "method", "replicates", "tpr", "tpr_sd", "fdr", "fdr_sd"};
  variables.header = {"method", "predictor", "true_beta", "tpr", "bias", "rmse", "estimates"};
  per_rep.header = {"replicate", "method", "tpr", "fdr", "selected"};
  for (std::size_t m = 0; m < methods.size(); ++m) {
    const MetricsReport rep = score(results[m], truth, true_beta);
    metrics.rows.push_back({to_string(sc.name), methods[m], std::to_string(rep.replicates), fmt(rep.overall_tpr),
                            fmt(rep.tpr_sd), fmt(rep.fdr), fmt(rep.fdr_sd)});
    for (std::size_t a = 0; a < rep.true_predictors.size(); ++a) {
      const std::size_t j = rep.true_predictors[a];
      variables.rows.push_back({methods[m], "x" + std::to_string(j + 1), fmt(true_beta[static_cast<Eigen::Index>(j)]),
                                fmt(rep.variable_tpr[a]), fmt(rep.bias[a]), fmt(rep.rmse[a]),
                                std::to_string(rep.estimate_count[a])});
    }
    for (std::size_t r = 0; r < reps; ++r) {
      const ReplicateScore s = score_replicate(results[m][r].selected, truth);
      per_rep.rows.push_back({std::to_string(r + 1), methods[m], fmt(s.tpr), fmt(s.fdr), std::to_string(s.selected)});
    }
  }
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file_atomic(out / "metrics.csv", metrics.to_string());
  write_file_atomic(out / "variables.csv", variables.to_string());
  write_file_atomic(out / "replicates.csv", per_rep.to_string());
  if (tuned) write_file_atomic(out / "eta_table.csv", eta_table_csv(*tuned));
  json man = base_manifest("score", cfg);
  man["input"] = sim_dir;
  man["mcmc"] = mcmc_config_json(settings.mcmc);
  man["eta"] = settings.eta;
  man["methods"] = methods;
  write_manifest(out, man, relative_files(out));
  std::cout << metrics.to_string();
  return 0;
}

// ---------------------------------------------------------------- predict

int cmd_predict(const Common& common, const std::string& fit_dir, std::size_t draws) {
  RunConfig cfg = resolve_config(common);
  if (fit_dir.empty()) throw UsageError("predict needs --fit (one fitted response directory)");
  const fs::path dir = fit_dir;
  IngestOptions opts;
  const json fm = json::parse(read_file(dir / "fit.json"));
  opts.response = fm.at("response").get<std::string>();
  opts.psi = fm.at("psi").get<double>();
  const CsvTable table = read_csv(dir / "data.csv");
  for (const auto& h : table.header)
    if (h != opts.response) opts.predictors.push_back(h);
  // Confounders were written after predictors; recover the split from the chains.
  const auto chains = load_chains(dir);
  const std::size_t s = chains.front().draws.empty() ? 0 : static_cast<std::size_t>(chains.front().draws[0].alpha.size());
  opts.confounders.assign(opts.predictors.end() - static_cast<std::ptrdiff_t>(s), opts.predictors.end());
  opts.predictors.resize(opts.predictors.size() - s);
  const CensoredDataset data = dataset_from_table(table, opts, (dir / "data.csv").string());

  Rng rng(cfg.seed);
  const auto pred = posterior_predictive_sample(chains, data, draws, rng);
  CsvTable samples, summary;
  samples.header = {"draw"};
  for (std::size_t i = 0; i < data.n(); ++i) samples.header.push_back("row" + std::to_string(i + 1));
  summary.header = {"draw", "pmv_fraction", "observed_mean"};
  for (std::size_t d = 0; d < pred.size(); ++d) {
    std::vector<std::string> row{std::to_string(d)};
    double sum = 0.0;
    std::size_t obs = 0;
    for (const auto& v : pred[d]) {
      row.push_back(v ? fmt(*v) : "NA");
      if (v) {
        sum += *v;
        ++obs;
      }
    }
    samples.rows.push_back(std::move(row));
    summary.rows.push_back({std::to_string(d), fmt(1.0 - static_cast<double>(obs) / static_cast<double>(data.n())),
                            obs ? fmt(sum / static_cast<double>(obs)) : "NA"});
  }
  const fs::path out = cfg.out;
  fs::create_directories(out);
  write_file_atomic(out / "predictive.csv", samples.to_string());
  write_file_atomic(out / "predictive_summary.csv", summary.to_string());
  json m = base_manifest("predict", cfg);
  m["input"] = fit_dir;
  m["draws"] = draws;
  m["empirical_pmv_fraction"] = 1.0 - data.observed_fraction();
  write_manifest(out, m, relative_files(out));
  std::cout << "wrote " << draws << " predictive draw(s) to " << out << "\n";
  return 0;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "INI configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "master seed");
  app->add_option("--threads", c.threads, "worker threads");
  app->add_option("--out", c.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Skew-normal censored mixture regression with structured variable selection"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the default configuration and exit");

  Common common;
  std::string scenario, hierarchy, relationship, grid, response, prior, error_model, sim_dir, methods = "independent,mrf",
                                                                                              fit_dir;
  std::optional<std::size_t> replicates, iterations, burn_in, thin;
  std::optional<double> omega, eta;
  std::vector<std::string> data, fit_dirs;
  bool simulation_R_flag = false;
  std::size_t draws = 200;

  auto* sim = app.add_subcommand("simulate", "generate replicate datasets of a simulation scenario");
  add_common(sim, common);
  sim->add_option("--scenario", scenario, "scenario name");
  sim->add_option("--replicates", replicates, "number of replicates");

  auto* rel = app.add_subcommand("build-rel", "relationship matrix from a predictor hierarchy");
  add_common(rel, common);
  rel->add_option("--hierarchy", hierarchy, "hierarchy JSON file");
  rel->add_flag("--simulation", simulation_R_flag, "emit the simulation design's matrix");

  auto* tune = app.add_subcommand("tune-eta", "choose the MRF eta by prior model-size percentiles");
  add_common(tune, common);
  tune->add_option("--relationship", relationship, "relationship matrix CSV")->check(CLI::ExistingFile);
  tune->add_option("--omega", omega, "omega0 of the reference independent prior");
  tune->add_option("--grid", grid, "analysis | simulation | comma separated eta values");

  auto* fit = app.add_subcommand("fit", "fit one or many response columns");
  add_common(fit, common);
  fit->add_option("--data", data, "data CSV file(s)")->check(CLI::ExistingFile);
  fit->add_option("--response", response, "response column(s), comma separated, or *");
  fit->add_option("--prior", prior, "independent | mrf");
  fit->add_option("--error-model", error_model, "skew-normal | normal");

  auto* eval = app.add_subcommand("evaluate", "ELPD comparison of fit outputs");
  add_common(eval, common);
  eval->add_option("--fits", fit_dirs, "fit output directories")->check(CLI::ExistingDirectory);

  auto* sc = app.add_subcommand("score", "fit and score the replicates of a simulate output");
  add_common(sc, common);
  sc->add_option("--sim", sim_dir, "simulate output directory")->check(CLI::ExistingDirectory);
  sc->add_option("--methods", methods, "comma list of independent, mrf, forced_rho_1, half_min_impute");
  sc->add_option("--eta", eta, "fixed eta for the mrf prior (default: tuned)");
  sc->add_option("--iterations", iterations, "MCMC sweeps");
  sc->add_option("--burn-in", burn_in, "burn-in sweeps");
  sc->add_option("--thin", thin, "thinning interval");

  auto* pr = app.add_subcommand("predict", "posterior predictive draws for one fitted response");
  add_common(pr, common);
  pr->add_option("--fit", fit_dir, "fitted response directory (out/fits/<cohort>/<response>)")
      ->check(CLI::ExistingDirectory);
  pr->add_option("--draws", draws, "number of predictive draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (print_config) {
      std::cout << RunConfig{}.to_ini();
      return 0;
    }
    if (sim->parsed()) return cmd_simulate(common, scenario, replicates);
    if (rel->parsed()) return cmd_build_rel(common, hierarchy, simulation_R_flag);
    if (tune->parsed()) return cmd_tune_eta(common, relationship, omega, grid);
    if (fit->parsed()) return cmd_fit(common, data, response, prior, error_model);
    if (eval->parsed()) return cmd_evaluate(common, fit_dirs);
    if (sc->parsed()) return cmd_score(common, sim_dir, methods, eta, iterations, burn_in, thin);
    if (pr->parsed()) return cmd_predict(common, fit_dir, draws);
    std::cerr << app.help();
    return 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
