#include "nlaid/parallel.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <thread>

namespace nlaid {

struct Executor::Arena {
  explicit Arena(int workers) : arena(workers) {}
  tbb::task_arena arena;
};

Executor::Executor(int workers) : workers_(std::max(1, workers)) {
  if (workers_ > 1) arena_ = std::make_unique<Arena>(workers_);
}

Executor::~Executor() = default;
Executor::Executor(Executor&&) noexcept = default;
Executor& Executor::operator=(Executor&&) noexcept = default;

void Executor::for_each(std::size_t count, const std::function<void(std::size_t)>& body) const {
  if (!arena_ || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  arena_->arena.execute([&] {
    tbb::parallel_for(tbb::blocked_range<std::size_t>(0, count), [&](const auto& range) {
      for (std::size_t i = range.begin(); i != range.end(); ++i) body(i);
    });
  });
}

int default_workers() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

}  // namespace nlaid
