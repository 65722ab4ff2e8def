#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sncm/gibbs.hpp"
#include "sncm/relmatrix.hpp"

namespace sncm {

/// Input file problem; carries 1-based row/column coordinates when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t row, std::size_t col, const std::string& what);
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// 17 significant digits: parsing the text gives back the same double.
std::string format_double(double x);
/// Fewest significant digits that still parse back to x.
std::string format_shortest(double x);
double parse_double(const std::string& s, bool& ok);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if absent
  std::string to_string() const;
};

/// Comma separated, optional double quotes, header required, rectangular.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& origin = "<memory>");

/// Writes via a temporary sibling file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

struct IngestOptions {
  std::string response;                  // empty: first column
  std::vector<std::string> predictors;   // empty: all columns not used otherwise
  std::vector<std::string> confounders;
  std::string na_token = "NA";           // an empty cell is always a PMV
  std::optional<double> psi;             // default: min observed response
};

/// Response column names an IngestOptions would fit when `response` lists several (comma separated) or "*".
std::vector<std::string> response_columns(const CsvTable& table, const std::string& spec,
                                          const IngestOptions& opts);

CensoredDataset dataset_from_table(const CsvTable& table, const IngestOptions& opts,
                                   const std::string& origin = "<memory>");
CensoredDataset ingest_csv(const std::filesystem::path& path, const IngestOptions& opts = {});

/// Columns: response, predictors, confounders; PMVs written as `na_token`.
std::string dataset_to_csv(const CensoredDataset& data, const std::string& na_token = "NA");

/// Dense matrix with a header row of predictor names.
std::string relationship_to_csv(const RelationshipMatrix& R);
RelationshipMatrix read_relationship_csv(const std::filesystem::path& path);

/**
 * Hierarchy file (JSON):
 *   {"predictors": ["x1", ...],
 *    "groups": [{"name": "A", "members": ["x1"], "children": [...]}, ...]}
 * Members may be predictor names or 0-based indices. The top-level groups
 * become children of an implicit root.
 */
struct Hierarchy {
  HierarchyNode root;
  std::vector<std::string> predictor_names;
};
Hierarchy parse_hierarchy_json(const std::string& text);
Hierarchy read_hierarchy(const std::filesystem::path& path);
std::string hierarchy_to_json(const Hierarchy& h);

/// Git blob object id: SHA-1 of "blob <size>\0<contents>", lowercase hex.
std::string git_blob_sha1(const std::string& contents);

/**
 * Chain bundle layout (format version 1), one directory per chain:
 *   scalars.csv   draw, beta0, sigma_sq, delta, rho
 *   beta_star.csv one column per predictor
 *   gamma.csv     one column per predictor (0/1)
 *   alpha.csv     one column per confounder (omitted when s = 0)
 *   loglik.csv    one column per row (omitted when not stored)
 * and a manifest.json with the config, seed and blob ids of every file.
 */
inline constexpr int kBundleFormatVersion = 1;

nlohmann::json mcmc_config_json(const McmcConfig& c);
McmcConfig mcmc_config_from_json(const nlohmann::json& j);

void write_chain_bundle(const std::filesystem::path& dir, const PosteriorChain& chain,
                        const std::vector<std::string>& predictor_names,
                        const std::vector<std::string>& confounder_names);
PosteriorChain read_chain_bundle(const std::filesystem::path& dir);

/// Writes `manifest` (plus blob ids of `files`, relative to dir) to dir/manifest.json.
void write_manifest(const std::filesystem::path& dir, nlohmann::json manifest,
                    const std::vector<std::filesystem::path>& files);

}  // namespace sncm
