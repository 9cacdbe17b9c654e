#include "recognn/encoders.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "recognn/binio.hpp"
#include "recognn/common.hpp"

namespace recognn {

namespace {

std::atomic<std::uint64_t> g_nonfinite{0};

void init_uniform(Eigen::Ref<Eigen::MatrixXd> m, int fan, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max(fan, 1)));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -bound, bound);
}

}  // namespace

std::string to_string(Modality m) {
  switch (m) {
    case Modality::numerical: return "numerical";
    case Modality::categorical: return "categorical";
    case Modality::text: return "text";
  }
  return "?";
}

Modality modality_of(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numerical: return Modality::numerical;
    case ColumnKind::categorical: return Modality::categorical;
    case ColumnKind::text: return Modality::text;
    default: throw std::invalid_argument("key columns are not encoded");
  }
}

int EncoderDims::input_dim(Modality m) const {
  switch (m) {
    case Modality::numerical: return d_num;
    case Modality::categorical: return d_cat;
    case Modality::text: return d_text;
  }
  return 0;
}

std::size_t ColumnEncoder::row_of_token(const std::string& token) const {
  auto it = token_row.find(token);
  if (it != token_row.end()) return it->second;
  return vocab.size() + fnv1a(token) % kOverflowRows;
}

EncodedCell encode_numerical(std::optional<double> value, const ColumnEncoder& col) {
  EncodedCell out;
  if (value && !std::isfinite(*value)) {
    ++g_nonfinite;
    warn("column " + col.name + ": non-finite numerical input treated as null");
    value.reset();
  }
  if (!value) {
    out.null = true;
    out.raw = col.null_vector;
    return out;
  }
  out.z = (*value - col.mean) / std::max(col.stddev, kStdEpsilon);
  out.raw = col.weight * out.z + col.bias;
  return out;
}

EncodedCell encode_categorical(const std::optional<std::string>& token, const ColumnEncoder& col) {
  EncodedCell out;
  if (!token) {
    out.null = true;
    out.raw = col.null_vector;
    return out;
  }
  out.row = col.row_of_token(*token);
  out.raw = col.embedding.row(static_cast<Eigen::Index>(out.row)).transpose();
  return out;
}

Eigen::VectorXd encode_text(std::string_view text, int d_text) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d_text);
  if (text.empty() || d_text <= 0) return v;
  std::string padded;
  padded.reserve(text.size() + 2);
  padded += '^';
  padded += text;
  padded += '$';
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    std::uint64_t h = fnv1a(std::string_view(padded).substr(i, 3));
    auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(d_text));
    v[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  double n = v.norm();
  if (n > 0.0) v /= n;
  return v;
}

Eigen::VectorXd project(const Eigen::VectorXd& e, Modality m, const TableEncoder& params) {
  const Eigen::MatrixXd& w = params.projection(m);
  if (e.size() != w.rows())
    throw std::invalid_argument("project: " + to_string(m) + " input has dimension " +
                                std::to_string(e.size()) + ", expected " +
                                std::to_string(w.rows()));
  return w.transpose() * e;
}

std::uint64_t nonfinite_input_count() { return g_nonfinite; }

TableEncoder TableEncoder::create(const Table& table, const std::vector<std::size_t>& columns,
                                  const EncoderDims& dims, std::uint64_t seed) {
  TableEncoder enc;
  enc.table_ = table.name();
  enc.dims_ = dims;
  Rng rng(seed);
  for (std::size_t c : columns) {
    const ColumnSpec& spec = table.columns().at(c);
    ColumnEncoder col;
    col.name = spec.name;
    col.column = c;
    col.modality = modality_of(spec.kind);
    const int d = dims.input_dim(col.modality);
    col.null_vector.resize(d);
    init_uniform(col.null_vector, d, rng);
    if (col.modality == Modality::numerical) {
      ColumnStats s = column_statistics(table, spec.name);
      col.mean = s.mean;
      col.stddev = s.stddev;
      col.weight.resize(d);
      col.bias.resize(d);
      init_uniform(col.weight, d, rng);
      init_uniform(col.bias, d, rng);
    } else if (col.modality == Modality::categorical) {
      std::set<std::string> tokens;
      for (const auto& t : table.tuples())
        if (auto* s = std::get_if<std::string>(&t.values[c])) tokens.insert(*s);
      col.vocab.assign(tokens.begin(), tokens.end());
      for (std::size_t i = 0; i < col.vocab.size(); ++i) col.token_row[col.vocab[i]] = i;
      col.embedding.resize(static_cast<Eigen::Index>(col.vocab.size() + kOverflowRows), d);
      init_uniform(col.embedding, d, rng);
    }
    enc.slot_[c] = enc.columns_.size();
    enc.columns_.push_back(std::move(col));
  }
  enc.w_num_.resize(dims.d_num, dims.d_out);
  enc.w_cat_.resize(dims.d_cat, dims.d_out);
  enc.w_text_.resize(dims.d_text, dims.d_out);
  init_uniform(enc.w_num_, dims.d_num, rng);
  init_uniform(enc.w_cat_, dims.d_cat, rng);
  init_uniform(enc.w_text_, dims.d_text, rng);
  return enc;
}

std::size_t TableEncoder::slot_of(std::size_t table_column) const {
  auto it = slot_.find(table_column);
  if (it == slot_.end())
    throw std::out_of_range("encoder for " + table_ + " has no column " +
                            std::to_string(table_column));
  return it->second;
}

bool TableEncoder::has_column(std::size_t table_column) const {
  return slot_.count(table_column) > 0;
}

const Eigen::MatrixXd& TableEncoder::projection(Modality m) const {
  switch (m) {
    case Modality::numerical: return w_num_;
    case Modality::categorical: return w_cat_;
    case Modality::text: return w_text_;
  }
  throw std::logic_error("bad modality");
}

Eigen::MatrixXd& TableEncoder::projection(Modality m) {
  return const_cast<Eigen::MatrixXd&>(std::as_const(*this).projection(m));
}

EncodedCell TableEncoder::encode(std::size_t slot, const Cell& cell) const {
  const ColumnEncoder& col = columns_.at(slot);
  switch (col.modality) {
    case Modality::numerical: {
      std::optional<double> v;
      if (auto* d = std::get_if<double>(&cell)) v = *d;
      return encode_numerical(v, col);
    }
    case Modality::categorical: {
      std::optional<std::string> tok;
      if (!is_null(cell)) tok = cell_to_string(cell);
      return encode_categorical(tok, col);
    }
    case Modality::text: {
      EncodedCell out;
      if (is_null(cell)) {
        out.null = true;
        out.raw = col.null_vector;
      } else {
        out.raw = encode_text(cell_to_string(cell), dims_.d_text);
      }
      return out;
    }
  }
  throw std::logic_error("bad modality");
}

Eigen::VectorXd TableEncoder::embed(std::size_t slot, const Cell& cell) const {
  return project(encode(slot, cell).raw, columns_.at(slot).modality, *this);
}

void TableEncoder::backward(std::size_t slot, const EncodedCell& enc,
                            const Eigen::VectorXd& grad_out, TableEncoder& grads) const {
  const ColumnEncoder& col = columns_.at(slot);
  const Eigen::MatrixXd& w = projection(col.modality);
  grads.projection(col.modality).noalias() += enc.raw * grad_out.transpose();
  Eigen::VectorXd de = w * grad_out;
  ColumnEncoder& g = grads.columns_[slot];
  if (enc.null) {
    g.null_vector += de;
    return;
  }
  switch (col.modality) {
    case Modality::numerical:
      g.weight += de * enc.z;
      g.bias += de;
      break;
    case Modality::categorical:
      g.embedding.row(static_cast<Eigen::Index>(enc.row)) += de.transpose();
      break;
    case Modality::text:
      break;  // frozen
  }
}

TableEncoder TableEncoder::zeros_like() const {
  TableEncoder z = *this;
  for (auto& t : z.tensors()) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<TensorView> TableEncoder::tensors() {
  std::vector<TensorView> out;
  auto view = [](Eigen::MatrixXd& m) {
    return std::span<double>(m.data(), static_cast<std::size_t>(m.size()));
  };
  auto vview = [](Eigen::VectorXd& v) {
    return std::span<double>(v.data(), static_cast<std::size_t>(v.size()));
  };
  const std::string p = "enc." + table_ + ".";
  for (auto& col : columns_) {
    out.push_back({p + col.name + ".null", vview(col.null_vector)});
    if (col.modality == Modality::numerical) {
      out.push_back({p + col.name + ".weight", vview(col.weight)});
      out.push_back({p + col.name + ".bias", vview(col.bias)});
    } else if (col.modality == Modality::categorical) {
      out.push_back({p + col.name + ".embedding", view(col.embedding)});
    }
  }
  out.push_back({p + "W_num", view(w_num_)});
  out.push_back({p + "W_cat", view(w_cat_)});
  out.push_back({p + "W_text", view(w_text_)});
  return out;
}

void TableEncoder::save(std::ostream& out) const {
  binio::Writer w(out);
  w.magic("recognn.table_encoder", 1);
  w.str(table_);
  w.u32(static_cast<std::uint32_t>(dims_.d_num));
  w.u32(static_cast<std::uint32_t>(dims_.d_cat));
  w.u32(static_cast<std::uint32_t>(dims_.d_text));
  w.u32(static_cast<std::uint32_t>(dims_.d_out));
  w.u64(columns_.size());
  for (const auto& c : columns_) {
    w.str(c.name);
    w.u64(c.column);
    w.u32(static_cast<std::uint32_t>(c.modality));
    w.f64(c.mean);
    w.f64(c.stddev);
    w.vector(c.weight);
    w.vector(c.bias);
    w.u64(c.vocab.size());
    for (const auto& tok : c.vocab) w.str(tok);
    w.matrix(c.embedding);
    w.vector(c.null_vector);
  }
  w.matrix(w_num_);
  w.matrix(w_cat_);
  w.matrix(w_text_);
}

TableEncoder TableEncoder::load(std::istream& in) {
  binio::Reader r(in);
  if (r.magic("recognn.table_encoder") != 1)
    throw std::runtime_error("unsupported table encoder version");
  TableEncoder enc;
  enc.table_ = r.str();
  enc.dims_.d_num = static_cast<int>(r.u32());
  enc.dims_.d_cat = static_cast<int>(r.u32());
  enc.dims_.d_text = static_cast<int>(r.u32());
  enc.dims_.d_out = static_cast<int>(r.u32());
  auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    ColumnEncoder c;
    c.name = r.str();
    c.column = r.u64();
    c.modality = static_cast<Modality>(r.u32());
    c.mean = r.f64();
    c.stddev = r.f64();
    c.weight = r.vector();
    c.bias = r.vector();
    auto vn = r.u64();
    for (std::uint64_t k = 0; k < vn; ++k) {
      c.vocab.push_back(r.str());
      c.token_row[c.vocab.back()] = k;
    }
    c.embedding = r.matrix();
    c.null_vector = r.vector();
    enc.slot_[c.column] = enc.columns_.size();
    enc.columns_.push_back(std::move(c));
  }
  enc.w_num_ = r.matrix();
  enc.w_cat_ = r.matrix();
  enc.w_text_ = r.matrix();
  return enc;
}

void save_encoder_bank(const EncoderBank& bank, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  binio::Writer w(out);
  w.magic("recognn.encoder_bank", 1);
  w.u64(bank.size());
  for (const auto& [name, enc] : bank) enc.save(out);
}

EncoderBank load_encoder_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  binio::Reader r(in);
  if (r.magic("recognn.encoder_bank") != 1)
    throw std::runtime_error("unsupported encoder bank version");
  EncoderBank bank;
  auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    TableEncoder enc = TableEncoder::load(in);
    std::string name = enc.table();
    bank.emplace(std::move(name), std::move(enc));
  }
  return bank;
}

}  // namespace recognn
