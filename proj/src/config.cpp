#include "sncm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "sncm/posterior.hpp"

namespace sncm {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"seed", "threads", "out"}},
      {"data", {"paths", "response", "predictors", "confounders", "na_token", "psi", "standardize"}},
      {"prior", {"kind", "omega", "eta", "tune_eta", "relationship", "hierarchy"}},
      {"model", {"error_model", "nu0_sq", "nu_sq", "nud_sq", "lambda_sq", "xi0", "sigma0_sq", "rho0", "rho1"}},
      {"mcmc", {"iterations", "burn_in", "thin", "chains"}},
      {"selection", {"fdr_target", "pool_fdr"}},
      {"simulate", {"scenario", "replicates"}},
      {"tune", {"percentile", "draws", "burn_in", "grid"}},
  };
  return keys;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_list(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + v[k];
  return out;
}

template <class T>
T get_typed(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_child_optional(key);
  if (!node) return fallback;
  const auto v = node->get_value_optional<T>();
  if (!v) throw std::invalid_argument("config: key '" + key + "' has invalid value '" + node->data() + "'");
  return *v;
}

std::optional<double> get_optional_number(const pt::ptree& tree, const std::string& key,
                                          std::optional<double> fallback) {
  const auto node = tree.get_child_optional(key);
  if (!node) return fallback;
  if (node->data() == "auto" || node->data().empty()) return std::nullopt;
  const auto v = node->get_value_optional<double>();
  if (!v) throw std::invalid_argument("config: key '" + key + "' must be a number or 'auto'");
  return *v;
}

std::string optional_text(const std::optional<double>& v) { return v ? format_shortest(*v) : "auto"; }

}  // namespace

RunConfig RunConfig::from_ini(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw std::invalid_argument("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      (void)value;
      if (!it->second.count(key))
        throw std::invalid_argument("config: unknown key '" + key + "' in [" + section + "]");
    }
  }
  RunConfig c;
  c.seed = get_typed<std::uint64_t>(tree, "run.seed", c.seed);
  c.threads = get_typed<std::size_t>(tree, "run.threads", c.threads);
  c.out = get_typed<std::string>(tree, "run.out", c.out);

  c.data_paths = split_list(get_typed<std::string>(tree, "data.paths", join_list(c.data_paths)));
  c.response = get_typed<std::string>(tree, "data.response", c.response);
  c.predictors = split_list(get_typed<std::string>(tree, "data.predictors", ""));
  c.confounders = split_list(get_typed<std::string>(tree, "data.confounders", ""));
  c.na_token = get_typed<std::string>(tree, "data.na_token", c.na_token);
  c.psi = get_optional_number(tree, "data.psi", c.psi);
  c.standardize = get_typed<bool>(tree, "data.standardize", c.standardize);

  c.prior = get_typed<std::string>(tree, "prior.kind", c.prior);
  c.omega = get_typed<double>(tree, "prior.omega", c.omega);
  c.eta = get_typed<double>(tree, "prior.eta", c.eta);
  c.tune_eta = get_typed<bool>(tree, "prior.tune_eta", c.tune_eta);
  c.relationship_path = get_typed<std::string>(tree, "prior.relationship", c.relationship_path);
  c.hierarchy_path = get_typed<std::string>(tree, "prior.hierarchy", c.hierarchy_path);

  c.error_model = error_model_from_string(get_typed<std::string>(tree, "model.error_model", to_string(c.error_model)));
  c.nu0_sq = get_typed<double>(tree, "model.nu0_sq", c.nu0_sq);
  c.nu_sq = get_optional_number(tree, "model.nu_sq", c.nu_sq);
  c.nud_sq = get_typed<double>(tree, "model.nud_sq", c.nud_sq);
  c.lambda_sq = get_typed<double>(tree, "model.lambda_sq", c.lambda_sq);
  c.xi0 = get_typed<double>(tree, "model.xi0", c.xi0);
  c.sigma0_sq = get_typed<double>(tree, "model.sigma0_sq", c.sigma0_sq);
  c.rho0 = get_optional_number(tree, "model.rho0", c.rho0);
  c.rho1 = get_optional_number(tree, "model.rho1", c.rho1);

  c.mcmc.iterations = get_typed<std::size_t>(tree, "mcmc.iterations", c.mcmc.iterations);
  c.mcmc.burn_in = get_typed<std::size_t>(tree, "mcmc.burn_in", c.mcmc.burn_in);
  c.mcmc.thin = get_typed<std::size_t>(tree, "mcmc.thin", c.mcmc.thin);
  c.mcmc.chains = get_typed<std::size_t>(tree, "mcmc.chains", c.mcmc.chains);

  c.fdr_target = get_typed<double>(tree, "selection.fdr_target", c.fdr_target);
  c.pool_fdr = get_typed<bool>(tree, "selection.pool_fdr", c.pool_fdr);

  c.scenario = get_typed<std::string>(tree, "simulate.scenario", c.scenario);
  c.replicates = get_typed<std::size_t>(tree, "simulate.replicates", c.replicates);

  c.tune_percentile = get_typed<double>(tree, "tune.percentile", c.tune_percentile);
  c.tune_draws = get_typed<std::size_t>(tree, "tune.draws", c.tune_draws);
  c.tune_burn_in = get_typed<std::size_t>(tree, "tune.burn_in", c.tune_burn_in);
  c.eta_grid = get_typed<std::string>(tree, "tune.grid", c.eta_grid);
  c.mcmc.seed = c.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) { return from_ini(read_file(path)); }

std::string RunConfig::to_ini(bool with_runtime) const {
  std::ostringstream o;
  auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[run]\nseed = " << seed << "\n";
  if (with_runtime) o << "threads = " << threads << "\nout = " << out << "\n";
  o << "\n";
  o << "[data]\npaths = " << join_list(data_paths) << "\nresponse = " << response
    << "\npredictors = " << join_list(predictors) << "\nconfounders = " << join_list(confounders)
    << "\nna_token = " << na_token << "\npsi = " << optional_text(psi) << "\nstandardize = " << b(standardize)
    << "\n\n";
  o << "[prior]\nkind = " << prior << "\nomega = " << format_shortest(omega) << "\neta = " << format_shortest(eta)
    << "\ntune_eta = " << b(tune_eta) << "\nrelationship = " << relationship_path
    << "\nhierarchy = " << hierarchy_path << "\n\n";
  o << "[model]\nerror_model = " << to_string(error_model) << "\nnu0_sq = " << format_shortest(nu0_sq)
    << "\nnu_sq = " << optional_text(nu_sq) << "\nnud_sq = " << format_shortest(nud_sq)
    << "\nlambda_sq = " << format_shortest(lambda_sq) << "\nxi0 = " << format_shortest(xi0)
    << "\nsigma0_sq = " << format_shortest(sigma0_sq) << "\nrho0 = " << optional_text(rho0)
    << "\nrho1 = " << optional_text(rho1) << "\n\n";
  o << "[mcmc]\niterations = " << mcmc.iterations << "\nburn_in = " << mcmc.burn_in << "\nthin = " << mcmc.thin
    << "\nchains = " << mcmc.chains << "\n\n";
  o << "[selection]\nfdr_target = " << format_shortest(fdr_target) << "\npool_fdr = " << b(pool_fdr) << "\n\n";
  o << "[simulate]\nscenario = " << scenario << "\nreplicates = " << replicates << "\n\n";
  o << "[tune]\npercentile = " << format_shortest(tune_percentile) << "\ndraws = " << tune_draws
    << "\nburn_in = " << tune_burn_in << "\ngrid = " << eta_grid << "\n";
  return o.str();
}

void RunConfig::validate() const {
  if (threads == 0) throw std::invalid_argument("config: run.threads must be positive");
  if (prior != "independent" && prior != "mrf")
    throw std::invalid_argument("config: prior.kind must be 'independent' or 'mrf'");
  if (prior == "mrf" && relationship_path.empty() && hierarchy_path.empty())
    throw std::invalid_argument("config: the mrf prior needs prior.relationship or prior.hierarchy");
  for (const auto& p : data_paths)
    if (!std::filesystem::exists(p)) throw std::invalid_argument("config: data file '" + p + "' does not exist");
  if (!relationship_path.empty() && !std::filesystem::exists(relationship_path))
    throw std::invalid_argument("config: relationship file '" + relationship_path + "' does not exist");
  if (!hierarchy_path.empty() && !std::filesystem::exists(hierarchy_path))
    throw std::invalid_argument("config: hierarchy file '" + hierarchy_path + "' does not exist");
  if (!(fdr_target > 0.0 && fdr_target < 1.0)) throw std::invalid_argument("config: fdr_target must be in (0,1)");
  if (!(tune_percentile > 0.0 && tune_percentile < 1.0))
    throw std::invalid_argument("config: tune.percentile must be in (0,1)");
  if (rho0.has_value() != rho1.has_value())
    throw std::invalid_argument("config: set both model.rho0 and model.rho1 or neither");
  if (eta < 0.0) throw std::invalid_argument("config: prior.eta must be non-negative");
  mcmc.validate();
}

IngestOptions RunConfig::ingest_options() const {
  IngestOptions o;
  o.predictors = predictors;
  o.confounders = confounders;
  o.na_token = na_token;
  o.psi = psi;
  return o;
}

Hyperparams RunConfig::hyperparams(const CensoredDataset& data, const MrfPrior& selection) const {
  Hyperparams h(selection);
  h.nu0_sq = nu0_sq;
  h.nu_sq = nu_sq ? *nu_sq : empirical_slab_variance(data);
  h.nud_sq = nud_sq;
  h.lambda_sq.assign(data.s(), lambda_sq);
  h.xi0 = xi0;
  h.sigma0_sq = sigma0_sq;
  if (rho0) {
    h.rho0 = *rho0;
    h.rho1 = *rho1;
  } else {
    const BetaPrior bp = adaptive_beta_prior(data.observed_fraction());
    h.rho0 = bp.rho0;
    h.rho1 = bp.rho1;
  }
  h.validate(data.p(), data.s());
  return h;
}

}  // namespace sncm
