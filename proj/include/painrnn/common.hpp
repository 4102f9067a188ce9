// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace painrnn {

inline constexpr std::string_view kVersion = "0.1.0";

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Rows are time steps, columns are channels.
using Series = Eigen::MatrixXd;

enum class ErrorKind {
  InvalidArgument,
  Shape,
  Io,
  Format,
  NonFinite,
  Divergence,
  State,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `kind()` is stable and used by the CLI for its
/// machine-parsable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string &what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string &what) {
  if (!cond) fail(kind, what);
}

/// splitmix64 finalizer; used to derive independent sub-seeds from a run seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace painrnn
