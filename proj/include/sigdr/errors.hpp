#pragma once

#include <stdexcept>

namespace sigdr {

// Raised when a computation fails for numerical reasons (indefinite Gram
// matrix, factorization breakdown, non-PSD circulant embedding, ...) as
// opposed to a caller error, which is reported as std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sigdr
