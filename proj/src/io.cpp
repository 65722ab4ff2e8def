#include "sncm/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

#include "sncm/distributions.hpp"

namespace sncm {

namespace fs = std::filesystem;
using nlohmann::json;

ParseError::ParseError(const std::string& file, std::size_t row, std::size_t col, const std::string& what)
    : std::runtime_error([&] {
        std::string msg = file;
        if (row) msg += ":row " + std::to_string(row);
        if (col) msg += ":col " + std::to_string(col);
        return msg + ": " + what;
      }()),
      row_(row),
      col_(col) {}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_shortest(double x) {
  if (!std::isfinite(x)) return format_double(x);
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, bool& ok) {
  ok = false;
  if (s.empty()) return 0.0;
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size()) return 0.0;
  if (errno == ERANGE && std::abs(v) > 1.0) return 0.0;
  ok = true;
  return v;
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument("no column named '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k) out += ',';
      out += quote_if_needed(row[k]);
    }
    out += '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return out;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> record_line;
  std::vector<std::string> rec;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  std::size_t line = 1;
  std::size_t start_line = 1;

  auto end_field = [&] {
    rec.push_back(field_quoted ? field : trim(field));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = rec.size() == 1 && rec[0].empty();
    if (!blank) {
      records.push_back(std::move(rec));
      record_line.push_back(start_line);
    }
    rec.clear();
  };

  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (in_quotes) {
      if (c == '"') {
        if (k + 1 < text.size() && text[k + 1] == '"') {
          field += '"';
          ++k;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && trim(field).empty()) {
      field.clear();
      in_quotes = true;
      field_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // tolerated before \n
    } else if (c == '\n') {
      end_record();
      ++line;
      start_line = line;
    } else {
      field += c;
    }
  }
  if (in_quotes) throw ParseError(origin, start_line, 0, "unterminated quoted field");
  if (!field.empty() || !rec.empty()) end_record();
  if (records.empty()) throw ParseError(origin, 0, 0, "empty file (a header row is required)");

  CsvTable t;
  t.header = std::move(records.front());
  std::set<std::string> seen;
  for (std::size_t k = 0; k < t.header.size(); ++k) {
    if (t.header[k].empty()) throw ParseError(origin, 1, k + 1, "empty column name");
    if (!seen.insert(t.header[k]).second)
      throw ParseError(origin, 1, k + 1, "duplicate column name '" + t.header[k] + "'");
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size())
      throw ParseError(origin, record_line[r], 0,
                       "ragged row: " + std::to_string(records[r].size()) + " fields, header has " +
                           std::to_string(t.header.size()));
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CsvTable read_csv(const fs::path& path) { return parse_csv(read_file(path), path.string()); }

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

std::vector<std::string> response_columns(const CsvTable& table, const std::string& spec,
                                          const IngestOptions& opts) {
  std::vector<std::string> out;
  if (spec.empty()) {
    out.push_back(table.header.at(0));
  } else if (spec == "*") {
    std::set<std::string> taken(opts.predictors.begin(), opts.predictors.end());
    taken.insert(opts.confounders.begin(), opts.confounders.end());
    for (const auto& h : table.header)
      if (!taken.count(h)) out.push_back(h);
  } else {
    std::stringstream ss(spec);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name = trim(name);
      if (name.empty()) continue;
      table.column(name);
      out.push_back(name);
    }
  }
  if (out.empty()) throw std::invalid_argument("no response columns selected");
  return out;
}

CensoredDataset dataset_from_table(const CsvTable& table, const IngestOptions& opts, const std::string& origin) {
  const std::string response = opts.response.empty() ? table.header.at(0) : opts.response;
  auto find_col = [&](const std::string& name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) throw ParseError(origin, 1, 0, "no column named '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t ycol = find_col(response);
  std::vector<std::size_t> ccols;
  for (const auto& c : opts.confounders) ccols.push_back(find_col(c));
  std::vector<std::size_t> xcols;
  if (opts.predictors.empty()) {
    for (std::size_t k = 0; k < table.header.size(); ++k)
      if (k != ycol && std::find(ccols.begin(), ccols.end(), k) == ccols.end()) xcols.push_back(k);
  } else {
    for (const auto& x : opts.predictors) xcols.push_back(find_col(x));
  }
  if (std::find(xcols.begin(), xcols.end(), ycol) != xcols.end())
    throw std::invalid_argument("response '" + response + "' also listed as a predictor");

  const std::size_t n = table.rows.size();
  CensoredDataset d;
  d.response_name = response;
  d.y.assign(n, std::nullopt);
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(xcols.size()));
  d.C.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(ccols.size()));
  for (auto k : xcols) d.predictor_names.push_back(table.header[k]);
  for (auto k : ccols) d.confounder_names.push_back(table.header[k]);

  auto numeric = [&](std::size_t r, std::size_t k) {
    const std::string& cell = table.rows[r][k];
    bool ok = false;
    const double v = parse_double(cell, ok);
    if (!ok || !std::isfinite(v))
      throw ParseError(origin, r + 2, k + 1, "non-numeric value '" + cell + "' in column '" + table.header[k] + "'");
    return v;
  };
  for (std::size_t r = 0; r < n; ++r) {
    const std::string& cell = table.rows[r][ycol];
    if (!cell.empty() && cell != opts.na_token) d.y[r] = numeric(r, ycol);
    for (std::size_t a = 0; a < xcols.size(); ++a)
      d.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = numeric(r, xcols[a]);
    for (std::size_t a = 0; a < ccols.size(); ++a)
      d.C(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = numeric(r, ccols[a]);
  }
  if (d.observed_count() == 0)
    throw ParseError(origin, 0, ycol + 1, "response column '" + response + "' has no observed values");
  d.psi = opts.psi ? *opts.psi : d.min_observed();
  d.validate();
  return d;
}

CensoredDataset ingest_csv(const fs::path& path, const IngestOptions& opts) {
  return dataset_from_table(read_csv(path), opts, path.string());
}

std::string dataset_to_csv(const CensoredDataset& data, const std::string& na_token) {
  CsvTable t;
  t.header.push_back(data.response_name);
  for (std::size_t j = 0; j < data.p(); ++j)
    t.header.push_back(j < data.predictor_names.size() ? data.predictor_names[j] : "x" + std::to_string(j + 1));
  for (std::size_t j = 0; j < data.s(); ++j)
    t.header.push_back(j < data.confounder_names.size() ? data.confounder_names[j] : "c" + std::to_string(j + 1));
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::vector<std::string> row;
    row.reserve(t.header.size());
    row.push_back(data.y[i] ? format_double(*data.y[i]) : na_token);
    const auto ii = static_cast<Eigen::Index>(i);
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) row.push_back(format_double(data.X(ii, j)));
    for (Eigen::Index j = 0; j < data.C.cols(); ++j) row.push_back(format_double(data.C(ii, j)));
    t.rows.push_back(std::move(row));
  }
  return t.to_string();
}

std::string relationship_to_csv(const RelationshipMatrix& R) {
  CsvTable t;
  const std::size_t p = R.size();
  for (std::size_t j = 0; j < p; ++j)
    t.header.push_back(j < R.names().size() ? R.names()[j] : "x" + std::to_string(j + 1));
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < p; ++j) row.push_back(format_double(R(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t.to_string();
}

RelationshipMatrix read_relationship_csv(const fs::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t p = t.header.size();
  if (t.rows.size() != p)
    throw ParseError(path.string(), 0, 0,
                     "relationship matrix must be square: " + std::to_string(t.rows.size()) + " rows, " +
                         std::to_string(p) + " columns");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) {
      bool ok = false;
      const double v = parse_double(t.rows[i][j], ok);
      if (!ok) throw ParseError(path.string(), i + 2, j + 1, "non-numeric entry '" + t.rows[i][j] + "'");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  return RelationshipMatrix(std::move(m), t.header);
}

namespace {

HierarchyNode parse_group(const json& g, const std::unordered_map<std::string, std::size_t>& index_of) {
  HierarchyNode node;
  node.name = g.value("name", std::string{});
  if (g.contains("members")) {
    for (const auto& m : g.at("members")) {
      if (m.is_number_unsigned()) {
        node.members.push_back(m.get<std::size_t>());
      } else if (m.is_string()) {
        const auto it = index_of.find(m.get<std::string>());
        if (it == index_of.end())
          throw std::invalid_argument("hierarchy: unknown predictor '" + m.get<std::string>() + "' in group '" +
                                      node.name + "'");
        node.members.push_back(it->second);
      } else {
        throw std::invalid_argument("hierarchy: members must be names or non-negative indices (group '" +
                                    node.name + "')");
      }
    }
  }
  if (g.contains("children"))
    for (const auto& c : g.at("children")) node.children.push_back(parse_group(c, index_of));
  return node;
}

json group_to_json(const HierarchyNode& node, const std::vector<std::string>& names) {
  json g;
  g["name"] = node.name;
  json members = json::array();
  for (auto m : node.members) {
    if (m < names.size())
      members.push_back(names[m]);
    else
      members.push_back(m);
  }
  g["members"] = members;
  json children = json::array();
  for (const auto& c : node.children) children.push_back(group_to_json(c, names));
  g["children"] = children;
  return g;
}

}  // namespace

Hierarchy parse_hierarchy_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("hierarchy: malformed JSON: ") + e.what());
  }
  Hierarchy h;
  std::unordered_map<std::string, std::size_t> index_of;
  if (j.contains("predictors")) {
    h.predictor_names = j.at("predictors").get<std::vector<std::string>>();
    for (std::size_t k = 0; k < h.predictor_names.size(); ++k)
      if (!index_of.emplace(h.predictor_names[k], k).second)
        throw std::invalid_argument("hierarchy: duplicate predictor name '" + h.predictor_names[k] + "'");
  }
  if (!j.contains("groups")) throw std::invalid_argument("hierarchy: missing 'groups'");
  for (const auto& g : j.at("groups")) h.root.children.push_back(parse_group(g, index_of));
  const std::size_t p = hierarchy_predictor_count(h.root);
  if (!h.predictor_names.empty() && h.predictor_names.size() != p)
    throw std::invalid_argument("hierarchy: " + std::to_string(h.predictor_names.size()) +
                                " predictor names but " + std::to_string(p) + " predictors in groups");
  return h;
}

Hierarchy read_hierarchy(const fs::path& path) { return parse_hierarchy_json(read_file(path)); }

std::string hierarchy_to_json(const Hierarchy& h) {
  json j;
  j["predictors"] = h.predictor_names;
  json groups = json::array();
  for (const auto& c : h.root.children) groups.push_back(group_to_json(c, h.predictor_names));
  j["groups"] = groups;
  return j.dump(2) + "\n";
}

std::string git_blob_sha1(const std::string& contents) {
  const std::string head = "blob " + std::to_string(contents.size()) + std::string(1, '\0');
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, head.data(), head.size()) == 1 &&
                  EVP_DigestUpdate(ctx, contents.data(), contents.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    const unsigned char b = digest[k];
    out += hex[b >> 4];
    out += hex[b & 15];
  }
  return out;
}

json mcmc_config_json(const McmcConfig& c) {
  return {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
          {"chains", c.chains},         {"seed", c.seed}};
}

McmcConfig mcmc_config_from_json(const json& j) {
  McmcConfig c;
  c.iterations = j.at("iterations").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.thin = j.at("thin").get<std::size_t>();
  c.chains = j.at("chains").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

void write_manifest(const fs::path& dir, json manifest, const std::vector<fs::path>& files) {
  json hashes = json::object();
  for (const auto& f : files) hashes[f.generic_string()] = git_blob_sha1(read_file(dir / f));
  manifest["files"] = hashes;
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

namespace {

std::string matrix_csv(const std::vector<std::string>& header, std::size_t rows,
                       const std::function<double(std::size_t, std::size_t)>& at) {
  CsvTable t;
  t.header = header;
  t.rows.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::string> row;
    row.reserve(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) row.push_back(format_double(at(r, c)));
    t.rows.push_back(std::move(row));
  }
  return t.to_string();
}

std::vector<std::string> default_names(const std::vector<std::string>& names, std::size_t k, const char* prefix) {
  if (names.size() == k) return names;
  std::vector<std::string> out;
  for (std::size_t j = 0; j < k; ++j) out.push_back(prefix + std::to_string(j + 1));
  return out;
}

Eigen::MatrixXd table_matrix(const CsvTable& t, const fs::path& path) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t c = 0; c < t.header.size(); ++c) {
      bool ok = false;
      const std::string& cell = t.rows[r][c];
      double v = parse_double(cell, ok);
      if (!ok) {
        if (cell == "-inf") v = -kInf;
        else if (cell == "inf") v = kInf;
        else throw ParseError(path.string(), r + 2, c + 1, "non-numeric entry '" + cell + "'");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  return m;
}

}  // namespace

void write_chain_bundle(const fs::path& dir, const PosteriorChain& chain,
                        const std::vector<std::string>& predictor_names,
                        const std::vector<std::string>& confounder_names) {
  fs::create_directories(dir);
  const std::size_t draws = chain.draws.size();
  const std::size_t p = draws ? static_cast<std::size_t>(chain.draws[0].beta_star.size()) : predictor_names.size();
  const std::size_t s = draws ? static_cast<std::size_t>(chain.draws[0].alpha.size()) : confounder_names.size();
  const auto xnames = default_names(predictor_names, p, "x");
  const auto cnames = default_names(confounder_names, s, "c");
  std::vector<fs::path> files;

  write_file_atomic(dir / "scalars.csv",
                    matrix_csv({"draw", "beta0", "sigma_sq", "delta", "rho"}, draws, [&](std::size_t r, std::size_t c) {
                      const ModelState& st = chain.draws[r];
                      switch (c) {
                        case 0: return static_cast<double>(r);
                        case 1: return st.beta0;
                        case 2: return st.sigma_sq;
                        case 3: return st.delta;
                        default: return st.rho;
                      }
                    }));
  files.emplace_back("scalars.csv");
  write_file_atomic(dir / "beta_star.csv", matrix_csv(xnames, draws, [&](std::size_t r, std::size_t c) {
                      return chain.draws[r].beta_star[static_cast<Eigen::Index>(c)];
                    }));
  files.emplace_back("beta_star.csv");
  {
    CsvTable t;
    t.header = xnames;
    for (const auto& st : chain.draws) {
      std::vector<std::string> row;
      for (auto g : st.gamma) row.push_back(g ? "1" : "0");
      t.rows.push_back(std::move(row));
    }
    write_file_atomic(dir / "gamma.csv", t.to_string());
    files.emplace_back("gamma.csv");
  }
  if (s > 0) {
    write_file_atomic(dir / "alpha.csv", matrix_csv(cnames, draws, [&](std::size_t r, std::size_t c) {
                        return chain.draws[r].alpha[static_cast<Eigen::Index>(c)];
                      }));
    files.emplace_back("alpha.csv");
  }
  if (chain.loglik.size() > 0) {
    std::vector<std::string> rows;
    for (Eigen::Index i = 0; i < chain.loglik.cols(); ++i) rows.push_back("row" + std::to_string(i + 1));
    write_file_atomic(dir / "loglik.csv", matrix_csv(rows, static_cast<std::size_t>(chain.loglik.rows()),
                                                     [&](std::size_t r, std::size_t c) {
                                                       return chain.loglik(static_cast<Eigen::Index>(r),
                                                                           static_cast<Eigen::Index>(c));
                                                     }));
    files.emplace_back("loglik.csv");
  }
  json m;
  m["format"] = "sncm-chain";
  m["format_version"] = kBundleFormatVersion;
  m["config"] = mcmc_config_json(chain.config);
  m["seed"] = chain.seed;
  m["chain_index"] = chain.chain_index;
  m["error_model"] = to_string(chain.options.error_model);
  m["fix_rho_one"] = chain.options.fix_rho_one;
  m["draws"] = draws;
  m["predictors"] = p;
  m["confounders"] = s;
  write_manifest(dir, m, files);
}

PosteriorChain read_chain_bundle(const fs::path& dir) {
  const json m = json::parse(read_file(dir / "manifest.json"));
  if (m.value("format", std::string{}) != "sncm-chain")
    throw std::invalid_argument("'" + dir.string() + "' is not a chain bundle");
  if (m.at("format_version").get<int>() != kBundleFormatVersion)
    throw std::invalid_argument("unsupported chain bundle version in '" + dir.string() + "'");
  for (const auto& [file, hash] : m.at("files").items()) {
    if (git_blob_sha1(read_file(dir / file)) != hash.get<std::string>())
      throw std::runtime_error("content hash mismatch for '" + (dir / file).string() + "'");
  }
  PosteriorChain chain;
  chain.config = mcmc_config_from_json(m.at("config"));
  chain.seed = m.at("seed").get<std::uint64_t>();
  chain.chain_index = m.at("chain_index").get<std::size_t>();
  chain.options.error_model = error_model_from_string(m.at("error_model").get<std::string>());
  chain.options.fix_rho_one = m.at("fix_rho_one").get<bool>();
  chain.options.store_latents = false;
  const auto draws = m.at("draws").get<std::size_t>();
  const auto s = m.at("confounders").get<std::size_t>();

  const Eigen::MatrixXd scal = table_matrix(read_csv(dir / "scalars.csv"), dir / "scalars.csv");
  const Eigen::MatrixXd beta = table_matrix(read_csv(dir / "beta_star.csv"), dir / "beta_star.csv");
  const Eigen::MatrixXd gam = table_matrix(read_csv(dir / "gamma.csv"), dir / "gamma.csv");
  Eigen::MatrixXd alpha(static_cast<Eigen::Index>(draws), static_cast<Eigen::Index>(s));
  if (s > 0) alpha = table_matrix(read_csv(dir / "alpha.csv"), dir / "alpha.csv");
  if (static_cast<std::size_t>(scal.rows()) != draws || beta.rows() != scal.rows() || gam.rows() != scal.rows() ||
      alpha.rows() != scal.rows())
    throw std::runtime_error("chain bundle '" + dir.string() + "' has inconsistent draw counts");
  chain.draws.resize(draws);
  for (std::size_t r = 0; r < draws; ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    ModelState& st = chain.draws[r];
    st.beta0 = scal(rr, 1);
    st.sigma_sq = scal(rr, 2);
    st.delta = scal(rr, 3);
    st.rho = scal(rr, 4);
    st.beta_star = beta.row(rr).transpose();
    st.gamma.resize(static_cast<std::size_t>(gam.cols()));
    for (Eigen::Index j = 0; j < gam.cols(); ++j) st.gamma[static_cast<std::size_t>(j)] = gam(rr, j) != 0.0;
    st.alpha = alpha.row(rr).transpose();
  }
  if (fs::exists(dir / "loglik.csv")) chain.loglik = table_matrix(read_csv(dir / "loglik.csv"), dir / "loglik.csv");
  chain.options.store_loglik = chain.loglik.size() > 0;
  return chain;
}

}  // namespace sncm
