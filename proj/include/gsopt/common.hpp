#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gsopt {

using cdouble = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kLn2 = 0.693147180559945309417232121458176568;

// Bad user input: unparsable files, invalid constellations, bad flags.
// The CLI maps this to exit code 2.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Finite-ness test that survives -ffast-math (which folds std::isfinite to true).
inline bool is_finite(double v) noexcept {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  return ((bits >> 52) & 0x7ffu) != 0x7ffu;
}

inline bool is_power_of_two(std::size_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

inline int log2_exact(std::size_t v) noexcept { return std::countr_zero(v); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace gsopt
