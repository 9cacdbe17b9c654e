#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace recognn::binio {

// Little-endian checkpoint encoding: fixed-width integers, IEEE doubles,
// length-prefixed strings and matrices (rows, cols, column-major data).

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void magic(const std::string& tag, std::uint32_t version) {
    str(tag);
    u32(version);
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& m) {
    u64(static_cast<std::uint64_t>(m.rows()));
    u64(static_cast<std::uint64_t>(m.cols()));
    raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  void vector(const Eigen::VectorXd& v) {
    u64(static_cast<std::uint64_t>(v.size()));
    raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }

 private:
  void raw(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw std::runtime_error("binio: write failed");
  }
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Checks the tag and returns the stored version.
  std::uint32_t magic(const std::string& tag) {
    if (str() != tag) throw std::runtime_error("binio: expected a " + tag + " file");
    return u32();
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    auto n = u64();
    if (n > (1ULL << 32)) throw std::runtime_error("binio: corrupt string length");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  Eigen::MatrixXd matrix() {
    auto r = u64();
    auto c = u64();
    if (r * c > (1ULL << 34)) throw std::runtime_error("binio: corrupt matrix shape");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    raw(m.data(), sizeof(double) * r * c);
    return m;
  }
  Eigen::VectorXd vector() {
    auto n = u64();
    if (n > (1ULL << 34)) throw std::runtime_error("binio: corrupt vector length");
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    raw(v.data(), sizeof(double) * n);
    return v;
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in_) throw std::runtime_error("binio: truncated input");
  }
  std::istream& in_;
};

}  // namespace recognn::binio
