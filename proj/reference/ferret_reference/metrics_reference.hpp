#pragma once

#include "ferret/metrics.hpp"

namespace ferret::reference {

/// Average precision by full rank enumeration: for every rank k the
/// precision and recall are recounted from scratch over the first k ranked
/// samples, and AP sums precision * (recall step). Quadratic and slow on
/// purpose.
double average_precision(const metrics::ScoredBatch& batch);

}  // namespace ferret::reference
