#include "robotaxi/scheduler.hpp"

namespace robotaxi {

Millis ManualScheduler::now() const {
  std::lock_guard lock(mu_);
  return now_;
}

TimerId ManualScheduler::schedule_after(Millis delay, std::function<void()> task) {
  std::lock_guard lock(mu_);
  const TimerId id = next_id_++;
  const Millis due = now_ + std::max(delay, Millis{0});
  queue_.emplace(std::pair{due, id}, std::move(task));
  due_of_.emplace(id, due);
  return id;
}

void ManualScheduler::cancel(TimerId id) {
  std::lock_guard lock(mu_);
  const auto it = due_of_.find(id);
  if (it == due_of_.end()) return;
  queue_.erase(std::pair{it->second, id});
  due_of_.erase(it);
}

void ManualScheduler::advance_to(Millis t) {
  for (;;) {
    std::function<void()> task;
    {
      std::lock_guard lock(mu_);
      if (queue_.empty() || queue_.begin()->first.first > t) {
        if (t > now_) now_ = t;
        return;
      }
      auto node = queue_.extract(queue_.begin());
      now_ = std::max(now_, node.key().first);
      due_of_.erase(node.key().second);
      task = std::move(node.mapped());
    }
    task();
  }
}

std::size_t ManualScheduler::pending() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

AsioScheduler::AsioScheduler(boost::asio::io_context& io)
    : io_(io), epoch_(std::chrono::steady_clock::now()) {}

AsioScheduler::~AsioScheduler() { cancel_all(); }

Millis AsioScheduler::now() const {
  return std::chrono::duration_cast<Millis>(std::chrono::steady_clock::now() - epoch_);
}

TimerId AsioScheduler::schedule_after(Millis delay, std::function<void()> task) {
  auto timer = std::make_shared<boost::asio::steady_timer>(io_, delay);
  TimerId id;
  {
    std::lock_guard lock(mu_);
    id = next_id_++;
    timers_.emplace(id, timer);
  }
  timer->async_wait([this, id, timer, task = std::move(task)](const boost::system::error_code& ec) {
    {
      std::lock_guard lock(mu_);
      if (timers_.erase(id) == 0) return;  // cancelled
    }
    if (!ec) task();
  });
  return id;
}

void AsioScheduler::cancel(TimerId id) {
  std::shared_ptr<boost::asio::steady_timer> timer;
  {
    std::lock_guard lock(mu_);
    const auto it = timers_.find(id);
    if (it == timers_.end()) return;
    timer = std::move(it->second);
    timers_.erase(it);
  }
  timer->cancel();
}

void AsioScheduler::cancel_all() {
  std::unordered_map<TimerId, std::shared_ptr<boost::asio::steady_timer>> timers;
  {
    std::lock_guard lock(mu_);
    timers.swap(timers_);
  }
  for (auto& [id, t] : timers) t->cancel();
}

}  // namespace robotaxi
