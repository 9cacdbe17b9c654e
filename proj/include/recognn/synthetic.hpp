#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "recognn/dataset.hpp"

namespace recognn {

enum class LabelRule { xor_sign, and_sign };

std::string to_string(LabelRule r);
LabelRule parse_label_rule(const std::string& s);

/// Star-plus-chain schema with a planted cross-table signal:
///   customers (base, label) --n:1--> events --n:1--> venues
///   logs --n:1--> customers        (a 1:n fan-out from the base side)
/// The label is rule(planted_a, planted_b) of the customer's event, flipped
/// with probability `label_noise`. Every other attribute is independent noise.
struct SyntheticSpec {
  std::size_t base_tuples = 2000;
  std::size_t aux_tables = 3;  // 1: events; 2: + venues; 3: + logs
  std::size_t noise_attributes = 3;  // numerical noise columns in the planted table
  std::string planted_table = "events";
  std::string planted_a = "p_a";
  std::string planted_b = "p_b";
  LabelRule rule = LabelRule::xor_sign;
  double label_noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Builds the dataset in memory. Numeric values are rounded to six decimals
/// so the in-memory dataset equals what load_dataset reads back from disk.
RelationalDataset generate_synthetic(const SyntheticSpec& spec);

/// generate_synthetic followed by write_dataset.
RelationalDataset write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir);

/// The noiseless planted rule for one pair of values.
int planted_label(LabelRule rule, double a, double b);

}  // namespace recognn
