#include "metivier/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

namespace metivier {

ParallelFor serial_for() {
  return [](std::size_t n, const std::function<void(std::size_t)>& body) {
    for (std::size_t i = 0; i < n; ++i) body(i);
  };
}

namespace {

template <class T>
T tree_sum_impl(std::span<const T> v) {
  if (v.empty()) return T{};
  if (v.size() == 1) return v[0];
  if (v.size() <= 8) {
    T s{};
    for (const T& x : v) s += x;
    return s;
  }
  std::size_t h = v.size() / 2;
  return tree_sum_impl(v.subspan(0, h)) + tree_sum_impl(v.subspan(h));
}

}  // namespace

double tree_sum(std::span<const double> v) { return tree_sum_impl(v); }
std::complex<double> tree_sum(std::span<const std::complex<double>> v) {
  return tree_sum_impl(v);
}

struct WorkerPool::State {
  std::mutex m;
  std::condition_variable cv_work;
  std::condition_variable cv_done;
  std::vector<std::thread> workers;
  const std::function<void(std::size_t)>* body = nullptr;
  std::atomic<std::size_t> n{0};
  std::atomic<std::size_t> next{0};
  std::size_t active = 0;
  std::uint64_t generation = 0;
  bool stop = false;
  std::exception_ptr error;

  void drain() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n.load()) break;
      try {
        (*body)(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(m);
        if (!error) error = std::current_exception();
        next.store(n.load());
      }
    }
  }
};

WorkerPool::WorkerPool(unsigned threads)
    : threads_(threads == 0 ? 1 : threads), state_(std::make_unique<State>()) {
  for (unsigned t = 1; t < threads_; ++t) {
    state_->workers.emplace_back([s = state_.get()] {
      std::uint64_t seen = 0;
      for (;;) {
        {
          std::unique_lock<std::mutex> lk(s->m);
          s->cv_work.wait(lk, [&] { return s->stop || s->generation != seen; });
          if (s->stop) return;
          seen = s->generation;
          ++s->active;
        }
        s->drain();
        {
          std::lock_guard<std::mutex> lk(s->m);
          --s->active;
        }
        s->cv_done.notify_all();
      }
    });
  }
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard<std::mutex> lk(state_->m);
    state_->stop = true;
  }
  state_->cv_work.notify_all();
  for (auto& w : state_->workers) w.join();
}

void WorkerPool::run(std::size_t n, const std::function<void(std::size_t)>& body) {
  if (n == 0) return;
  if (threads_ == 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  State& s = *state_;
  {
    std::lock_guard<std::mutex> lk(s.m);
    s.body = &body;
    s.n.store(n);
    s.next.store(0);
    s.error = nullptr;
    ++s.generation;
  }
  s.cv_work.notify_all();
  s.drain();
  std::unique_lock<std::mutex> lk(s.m);
  s.cv_done.wait(lk, [&] { return s.active == 0 && s.next.load() >= n; });
  s.body = nullptr;
  if (s.error) std::rethrow_exception(s.error);
}

ParallelFor WorkerPool::as_parallel_for() {
  return [this](std::size_t n, const std::function<void(std::size_t)>& body) {
    run(n, body);
  };
}

unsigned resolve_thread_count(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("METIVIER_LAB_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (...) {
    }
  }
  return 1;
}

}  // namespace metivier
