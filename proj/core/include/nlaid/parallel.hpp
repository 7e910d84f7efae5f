#pragma once

#include <cstddef>
#include <functional>
#include <memory>

namespace nlaid {

/// Runs index-parallel loops on a bounded worker pool. Each index must write
/// only to its own output slot so results do not depend on scheduling.
class Executor {
 public:
  /// workers <= 1 runs every loop sequentially on the calling thread.
  explicit Executor(int workers = 1);
  ~Executor();
  Executor(Executor&&) noexcept;
  Executor& operator=(Executor&&) noexcept;

  int workers() const { return workers_; }
  void for_each(std::size_t count, const std::function<void(std::size_t)>& body) const;

 private:
  struct Arena;
  int workers_;
  std::unique_ptr<Arena> arena_;
};

/// Number of hardware threads, at least 1.
int default_workers();

}  // namespace nlaid
