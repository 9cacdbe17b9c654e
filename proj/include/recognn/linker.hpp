#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "recognn/dataset.hpp"
#include "recognn/joinplan.hpp"

namespace recognn {

/// An auxiliary tuple paired with one base tuple it links to; carries that
/// base tuple's label (class index or regression value).
struct LabeledTuple {
  std::string table;
  std::string key;
  std::size_t row = 0;
  std::string base_key;
  std::size_t base_row = 0;
  double label = 0.0;

  auto operator<=>(const LabeledTuple&) const = default;
};

struct LinkOptions {
  std::size_t per_tuple_label_cap = 5;
  std::uint64_t seed = 0;
};

/// Instantiates the meta-path on the data. Emits one LabeledTuple per distinct
/// (aux tuple, base tuple) link, at most `per_tuple_label_cap` per aux tuple
/// (seeded uniform sample when exceeded). Output is ordered by aux row, then
/// base row.
std::vector<LabeledTuple> link_tuples(const RelationalDataset& ds, const MetaPath& path,
                                      const LinkOptions& options = {});

/// Either an absolute count or a fraction of the base table.
using SampleSize = std::variant<std::size_t, double>;

struct CoresetConfig {
  SampleSize base_sample_size = std::size_t{2000};
  std::size_t per_tuple_label_cap = 5;
  std::uint64_t seed = 0;
};

struct Coreset {
  std::vector<std::size_t> base_rows;  // ascending
  std::map<std::string, std::vector<LabeledTuple>> links;  // per auxiliary table
  bool clamped = false;
};

/// Stratified base-tuple sample: per-class proportional (at least one per
/// non-empty class) for classification, ten target-quantile strata for
/// regression. Keeps exactly the links whose base tuple was sampled.
Coreset build_coreset(const RelationalDataset& ds,
                      const std::map<std::string, std::vector<LabeledTuple>>& links,
                      const CoresetConfig& config);

/// Sizes proportional to `counts` summing to `total`, each non-empty stratum
/// receiving at least one when total allows (largest-remainder rounding).
std::vector<std::size_t> allocate_proportional(const std::vector<std::size_t>& counts,
                                               std::size_t total);

/// Assigns each value to one of `strata` equal-frequency quantile bins.
std::vector<std::size_t> quantile_strata(const std::vector<double>& values, std::size_t strata);

}  // namespace recognn
