// SPDX-License-Identifier: Apache-2.0
#include "painrnn/common.hpp"

namespace painrnn {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::NonFinite: return "non_finite";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::State: return "state";
  }
  return "unknown";
}

}  // namespace painrnn
