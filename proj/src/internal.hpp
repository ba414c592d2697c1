#pragma once

// Helpers shared by the mixture sources. Not installed.

#include <cstdint>
#include <exception>

#include "skewmix/mixture.hpp"

namespace skewmix::internal {

// Calls body(j) for j in [0, n), serially or under OpenMP. Exceptions from
// worker threads are rethrown on the caller (the first one wins).
template <class Body>
void for_rows(int n, Exec exec, Body&& body) {
  if (exec == Exec::serial) {
    for (int j = 0; j < n; ++j) body(j);
    return;
  }
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (int j = 0; j < n; ++j) {
    try {
      body(j);
    } catch (...) {
#pragma omp critical(skewmix_rows_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

// Σ_{j<n} term(j) for matrix-valued terms, in a fixed pairwise order that
// depends on n only.
template <class Term>
Matrix pairwise_accumulate(int begin, int end, Term&& term) {
  constexpr int kBlock = 16;
  if (end - begin <= kBlock) {
    Matrix acc = term(begin);
    for (int j = begin + 1; j < end; ++j) acc += term(j);
    return acc;
  }
  const int mid = begin + (end - begin) / 2;
  return pairwise_accumulate(begin, mid, term) + pairwise_accumulate(mid, end, term);
}

// Rows normalized in log space; also returns the row log-normalizers.
Matrix normalize_rows(const Matrix& log_weighted, Vector& row_log);

// splitmix64 finalizer, used to derive per-row MC streams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace skewmix::internal
