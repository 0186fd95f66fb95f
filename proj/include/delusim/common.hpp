#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace delusim {

// Exit-code-mapped error categories (see tools/delusim.cpp).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DependencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

// All module RNG streams derive from the global seed and a stable name, so a
// stage reruns identically no matter which other stages ran before it.
inline std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view module_name) {
  return fnv1a64(module_name) ^ (global_seed * 0x9e3779b97f4a7c15ull);
}

// Uniform double in [0,1) from the top 53 bits; avoids distribution objects so
// streams are reproducible independent of the standard library.
inline double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double next_gaussian(std::mt19937_64& rng) {
  // Box-Muller, one value per call (the spare is discarded for simplicity).
  double u1 = next_unit(rng);
  double u2 = next_unit(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

std::string sha256_hex(std::string_view data);

// UTF-8 aware word tokenization: tokens are maximal runs of alphanumeric
// code units (non-ASCII bytes count as word characters); ASCII is lowercased.
std::vector<std::string> tokenize(std::string_view text);

std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace delusim
