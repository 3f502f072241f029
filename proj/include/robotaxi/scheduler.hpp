#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

#include <boost/asio/io_context.hpp>
#include <boost/asio/steady_timer.hpp>

namespace robotaxi {

using Millis = std::chrono::milliseconds;
using TimerId = std::uint64_t;

/// Source of time and delayed tasks for the dispatch engine and monitor.
class Scheduler {
 public:
  virtual ~Scheduler() = default;

  /// Milliseconds since the scheduler's epoch.
  virtual Millis now() const = 0;
  /// Runs `task` once after `delay`. Tasks may schedule or cancel others.
  virtual TimerId schedule_after(Millis delay, std::function<void()> task) = 0;
  /// Cancels a pending task; a no-op if it already ran.
  virtual void cancel(TimerId id) = 0;
};

/// Virtual clock. Time moves only through advance_to; due tasks run in
/// (due time, scheduling order), which makes runs reproducible.
class ManualScheduler final : public Scheduler {
 public:
  Millis now() const override;
  TimerId schedule_after(Millis delay, std::function<void()> task) override;
  void cancel(TimerId id) override;

  /// Runs every task due at or before `t`, then sets now() to `t`.
  void advance_to(Millis t);
  std::size_t pending() const;

 private:
  mutable std::mutex mu_;
  Millis now_{0};
  TimerId next_id_ = 1;
  // key: (due, id) keeps FIFO order among equal due times
  std::map<std::pair<Millis, TimerId>, std::function<void()>> queue_;
  std::unordered_map<TimerId, Millis> due_of_;
};

/// Wall-clock scheduler on an asio io_context (steady clock).
class AsioScheduler final : public Scheduler {
 public:
  explicit AsioScheduler(boost::asio::io_context& io);
  ~AsioScheduler() override;

  Millis now() const override;
  TimerId schedule_after(Millis delay, std::function<void()> task) override;
  void cancel(TimerId id) override;
  void cancel_all();

 private:
  boost::asio::io_context& io_;
  std::chrono::steady_clock::time_point epoch_;
  std::mutex mu_;
  TimerId next_id_ = 1;
  std::unordered_map<TimerId, std::shared_ptr<boost::asio::steady_timer>> timers_;
};

}  // namespace robotaxi
