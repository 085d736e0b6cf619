#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace varexp {

/// Global cap on worker threads used by parallel_for. 0 means "auto"
/// (hardware concurrency). Initialized once from the VAREXP_THREADS
/// environment variable; set explicitly to override. Not thread-safe:
/// set it before launching work.
void set_max_threads(unsigned n);
unsigned max_threads();

/// Sum with a fixed pairwise reduction tree. The result depends only on
/// the order of the input values, never on thread count or chunking.
double pairwise_sum(std::span<const double> values);

/// Run fn(i) for i in [0, count). Each index must be independent and
/// write only to its own output slot; the partition among workers is an
/// implementation detail and cannot affect results. Exceptions thrown
/// by fn are collected and the first one rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace varexp
