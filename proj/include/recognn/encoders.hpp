#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "recognn/dataset.hpp"
#include "recognn/optim.hpp"

namespace recognn {

enum class Modality { numerical, categorical, text };

std::string to_string(Modality m);
Modality modality_of(ColumnKind kind);

struct EncoderDims {
  int d_num = 8;
  int d_cat = 16;
  int d_text = 32;
  int d_out = 32;

  int input_dim(Modality m) const;
  auto operator<=>(const EncoderDims&) const = default;
};

inline constexpr std::size_t kOverflowRows = 64;
inline constexpr double kStdEpsilon = 1e-8;

/// Learnable state for one feature column.
struct ColumnEncoder {
  std::string name;
  std::size_t column = 0;  // index in the owning table
  Modality modality = Modality::numerical;

  // numerical: z = (x - mean) / max(stddev, eps); e = weight .* z + bias
  double mean = 0.0;
  double stddev = 0.0;
  Eigen::VectorXd weight;
  Eigen::VectorXd bias;

  // categorical: one row per seen token, then kOverflowRows hashed rows
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> token_row;
  Eigen::MatrixXd embedding;

  Eigen::VectorXd null_vector;

  std::size_t row_of_token(const std::string& token) const;
};

/// Bookkeeping from a forward encode, needed by the backward pass.
struct EncodedCell {
  Eigen::VectorXd raw;  // e, before projection
  bool null = false;
  double z = 0.0;        // standardized value (numerical)
  std::size_t row = 0;   // embedding row (categorical)
};

/// Encoders and projection matrices for the feature columns of one table.
class TableEncoder {
 public:
  TableEncoder() = default;

  /// Fits column statistics and vocabularies on `table` and draws every
  /// learnable tensor from uniform(-1/sqrt(d), 1/sqrt(d)).
  static TableEncoder create(const Table& table, const std::vector<std::size_t>& columns,
                             const EncoderDims& dims, std::uint64_t seed);

  const std::string& table() const { return table_; }
  const EncoderDims& dims() const { return dims_; }
  const std::vector<ColumnEncoder>& columns() const { return columns_; }
  std::vector<ColumnEncoder>& columns() { return columns_; }
  /// Slot of a table column within this encoder.
  std::size_t slot_of(std::size_t table_column) const;
  bool has_column(std::size_t table_column) const;

  const Eigen::MatrixXd& projection(Modality m) const;
  Eigen::MatrixXd& projection(Modality m);

  EncodedCell encode(std::size_t slot, const Cell& cell) const;
  /// encode followed by project: a d_out vector.
  Eigen::VectorXd embed(std::size_t slot, const Cell& cell) const;

  /// Accumulates into `grads` the gradient of a loss whose derivative w.r.t.
  /// the projected vector of this cell is `grad_out`.
  void backward(std::size_t slot, const EncodedCell& enc, const Eigen::VectorXd& grad_out,
                TableEncoder& grads) const;

  /// Same shapes, all zeros. Used as a gradient accumulator.
  TableEncoder zeros_like() const;
  std::vector<TensorView> tensors();

  void save(std::ostream& out) const;
  static TableEncoder load(std::istream& in);

 private:
  std::string table_;
  EncoderDims dims_;
  std::vector<ColumnEncoder> columns_;
  std::map<std::size_t, std::size_t> slot_;
  Eigen::MatrixXd w_num_, w_cat_, w_text_;  // d_in x d_out
};

/// f_num: standardize then per-column affine. Null or non-finite input yields
/// the column's null vector (non-finite also counts a warning).
EncodedCell encode_numerical(std::optional<double> value, const ColumnEncoder& col);

/// f_cat: embedding row for seen tokens; unseen tokens hash into one of the
/// overflow rows.
EncodedCell encode_categorical(const std::optional<std::string>& token, const ColumnEncoder& col);

/// f_text: frozen signed hashing of character 3-grams (with ^/$ boundary
/// marks) into d_text buckets, L2-normalized. Empty string gives zeros.
Eigen::VectorXd encode_text(std::string_view text, int d_text);

/// h = e W for the modality's projection matrix.
Eigen::VectorXd project(const Eigen::VectorXd& e, Modality m, const TableEncoder& params);

std::uint64_t nonfinite_input_count();

/// Per-table encoders for a whole dataset.
using EncoderBank = std::map<std::string, TableEncoder>;

void save_encoder_bank(const EncoderBank& bank, const std::string& path);
EncoderBank load_encoder_bank(const std::string& path);

}  // namespace recognn
