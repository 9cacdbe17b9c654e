#include "recognn/common.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <iostream>
#include <numbers>

namespace recognn {

namespace {
std::atomic<bool> g_quiet{false};
std::atomic<std::uint64_t> g_warnings{0};
}  // namespace

double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void warn(const std::string& message) {
  ++g_warnings;
  if (!g_quiet) std::clog << "[warn] " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet = quiet; }

std::uint64_t warning_count() { return g_warnings; }

std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace recognn
