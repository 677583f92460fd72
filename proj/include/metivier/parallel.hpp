#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace metivier {

// Parallel-map capability handed to numerical routines. body(i) is called
// exactly once for every i in [0, n); the caller stores per-index results and
// reduces them itself, so the outcome never depends on scheduling.
using ParallelFor =
    std::function<void(std::size_t n, const std::function<void(std::size_t)>& body)>;

ParallelFor serial_for();

// Fixed-shape pairwise reduction; identical input gives identical bits.
double tree_sum(std::span<const double> v);
std::complex<double> tree_sum(std::span<const std::complex<double>> v);

// Worker pool owned by the command-line tool. Library code only ever sees the
// ParallelFor returned by as_parallel_for().
class WorkerPool {
 public:
  explicit WorkerPool(unsigned threads);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  unsigned size() const { return threads_; }
  void run(std::size_t n, const std::function<void(std::size_t)>& body);
  ParallelFor as_parallel_for();

 private:
  struct State;
  unsigned threads_;
  std::unique_ptr<State> state_;
};

// Thread count from an explicit request, else METIVIER_LAB_THREADS, else 1.
unsigned resolve_thread_count(int requested);

}  // namespace metivier
