#pragma once

#include "sigdr/streams.hpp"
#include "sigdr/tensor.hpp"

#include <vector>

namespace sigdr {

// Truncated signature of the piecewise-linear path through the samples,
// computed as the left-to-right Chen product of the increment exponentials
// exp(x_k - x_{k-1}). Depends only on the values, never the timestamps.
// Zero increments contribute the unit tensor and are skipped.
TruncatedTensor signature(const TimeSeries& ts, int level);

// Running signature stream: element k (0-based) is the signature of the
// prefix up to sample k; element 0 is the unit tensor and the last element
// equals signature(ts, level).
std::vector<TruncatedTensor> pathwise_signature(const TimeSeries& ts, int level);

}  // namespace sigdr
