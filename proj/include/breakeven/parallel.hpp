#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <vector>

namespace breakeven {

// Every parallel kernel has a serial reference path selected by this flag.
// Both paths produce bitwise-identical results: work items are independent and
// reductions happen afterwards in a fixed order.
enum class Exec { serial, parallel };

// Runs fn(i) for i in [0, n). Exceptions cannot cross an OpenMP region, so the
// parallel path collects them and rethrows the one from the lowest index,
// which is the same exception the serial path would have raised first.
template <class Fn>
void for_each_index(Exec exec, std::size_t n, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

int max_threads();

}  // namespace breakeven
