#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>

namespace bipolar {

// Sliding-window limiter: no window of length `window()` ever contains more
// than `capacity()` acquisitions. A fractional rate such as 0.5/min becomes
// one request per 120 s.
class SlidingWindowLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using NowFn = std::function<Clock::time_point()>;
  using SleepUntilFn = std::function<void(Clock::time_point)>;

  explicit SlidingWindowLimiter(double requests_per_minute,
                                NowFn now = [] { return Clock::now(); },
                                SleepUntilFn sleep_until = [](Clock::time_point t) { std::this_thread::sleep_until(t); })
      : now_(std::move(now)), sleep_until_(std::move(sleep_until)) {
    if (requests_per_minute > 0) {
      capacity_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(requests_per_minute)));
      window_ = std::chrono::duration_cast<Clock::duration>(
          std::chrono::duration<double>(60.0 * static_cast<double>(capacity_) / requests_per_minute));
    }
  }

  bool unlimited() const { return capacity_ == 0; }
  std::size_t capacity() const { return capacity_; }
  Clock::duration window() const { return window_; }

  void acquire() {
    if (unlimited()) return;
    for (;;) {
      Clock::time_point wake;
      {
        std::lock_guard lock(mu_);
        const auto now = now_();
        while (!stamps_.empty() && stamps_.front() + window_ <= now) stamps_.pop_front();
        if (stamps_.size() < capacity_) {
          stamps_.push_back(now);
          return;
        }
        wake = stamps_.front() + window_;
      }
      sleep_until_(wake);
    }
  }

 private:
  NowFn now_;
  SleepUntilFn sleep_until_;
  std::size_t capacity_ = 0;
  Clock::duration window_{};
  std::mutex mu_;
  std::deque<Clock::time_point> stamps_;
};

}  // namespace bipolar
