#pragma once

#include <mutex>
#include <vector>

#include "robotaxi/protocol.hpp"
#include "robotaxi/stream.hpp"

/// Stream that keeps every message; can be switched to fail sends.
class RecordingStream final : public robotaxi::Stream {
 public:
  bool send(const robotaxi::protocol::Message& m) override {
    std::lock_guard lock(mu_);
    if (!open_) return false;
    sent_.push_back(m);
    return true;
  }
  bool is_open() const override {
    std::lock_guard lock(mu_);
    return open_;
  }
  void set_open(bool open) {
    std::lock_guard lock(mu_);
    open_ = open;
  }
  std::vector<robotaxi::protocol::Message> take() {
    std::lock_guard lock(mu_);
    return std::exchange(sent_, {});
  }
  template <typename T>
  std::vector<T> take_all() {
    std::vector<T> out;
    for (auto& m : take()) {
      if (auto* t = std::get_if<T>(&m)) out.push_back(*t);
    }
    return out;
  }

 private:
  mutable std::mutex mu_;
  bool open_ = true;
  std::vector<robotaxi::protocol::Message> sent_;
};
