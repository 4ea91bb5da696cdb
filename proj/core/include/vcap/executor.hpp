#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace vcap {

/// Computes fn(i) for i in [0, n) on up to `workers` threads and hands each
/// result to `deliver` on the calling thread in index order. When deliver
/// returns false no further indices are started; in-flight work is drained
/// and discarded. An exception from fn is rethrown when its index is due.
template <class R>
void ordered_map(std::size_t n, std::size_t workers, const std::function<R(std::size_t)>& fn,
                 const std::function<bool(std::size_t, R&&)>& deliver) {
  if (n == 0) return;
  workers = std::clamp<std::size_t>(workers, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!deliver(i, fn(i))) return;
    }
    return;
  }

  struct Slot {
    std::optional<R> value;
    std::exception_ptr error;
    bool ready = false;
  };
  std::vector<Slot> slots(n);
  std::mutex mutex;
  std::condition_variable ready_cv;
  std::condition_variable window_cv;
  std::size_t next = 0;
  std::size_t delivered = 0;
  bool stop = false;
  // Bound how far workers may run ahead of delivery so memory stays flat.
  const std::size_t window = workers * 4;

  auto work = [&] {
    while (true) {
      std::size_t i;
      {
        std::unique_lock lock(mutex);
        window_cv.wait(lock, [&] { return stop || next >= n || next < delivered + window; });
        if (stop || next >= n) return;
        i = next++;
      }
      Slot result;
      try {
        result.value.emplace(fn(i));
      } catch (...) {
        result.error = std::current_exception();
      }
      {
        std::lock_guard lock(mutex);
        slots[i].value = std::move(result.value);
        slots[i].error = result.error;
        slots[i].ready = true;
      }
      ready_cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(work);

  std::exception_ptr failure;
  for (std::size_t i = 0; i < n && !failure; ++i) {
    Slot slot;
    {
      std::unique_lock lock(mutex);
      ready_cv.wait(lock, [&] { return slots[i].ready; });
      slot.value = std::move(slots[i].value);
      slot.error = slots[i].error;
      slots[i].value.reset();
    }
    bool keep_going = false;
    if (slot.error) {
      failure = slot.error;
    } else {
      try {
        keep_going = deliver(i, std::move(*slot.value));
      } catch (...) {
        failure = std::current_exception();
      }
    }
    {
      std::lock_guard lock(mutex);
      delivered = i + 1;
      if (!keep_going) stop = true;
    }
    window_cv.notify_all();
    if (!keep_going) break;
  }
  {
    std::lock_guard lock(mutex);
    stop = true;
  }
  window_cv.notify_all();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// ordered_map collecting every result.
template <class R>
std::vector<R> parallel_map(std::size_t n, std::size_t workers,
                            const std::function<R(std::size_t)>& fn) {
  std::vector<R> out;
  out.reserve(n);
  ordered_map<R>(n, workers, fn, [&](std::size_t, R&& r) {
    out.push_back(std::move(r));
    return true;
  });
  return out;
}

}  // namespace vcap
