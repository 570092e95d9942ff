#pragma once

#include <dsfd/linalg.hpp>

#include <deque>

namespace dsfd {

/// A direction dumped from an FD sketch once its squared norm reached the
/// dump threshold. `start` is the first timestamp whose mass it may contain,
/// `dump` the timestamp at which it was recorded.
struct Snapshot {
    Vector v;
    Timestamp start = 0;
    Timestamp dump = 0;
};

/// FIFO of snapshots, oldest at the front.
///
/// prev_t is the dump time of the most recently appended snapshot and survives
/// pops; the next snapshot covers from prev_t + 1. A fresh queue is seeded with
/// the last timestamp processed before its sketch process started.
class SnapshotQueue {
public:
    explicit SnapshotQueue(Timestamp prev_t = 0) : prev_t_(prev_t) {}

    void push(Vector v, Timestamp t) {
        items_.push_back(Snapshot{std::move(v), prev_t_ + 1, t});
        prev_t_ = t;
    }

    /// Drops snapshots with dump + window <= now. Returns how many were dropped.
    std::size_t expire(Timestamp now, Timestamp window) {
        std::size_t dropped = 0;
        while (!items_.empty() && items_.front().dump + window <= now) {
            items_.pop_front();
            ++dropped;
        }
        return dropped;
    }

    std::size_t cap(std::size_t max_items) {
        std::size_t dropped = 0;
        while (items_.size() > max_items) {
            items_.pop_front();
            ++dropped;
        }
        return dropped;
    }

    /// First timestamp whose mass is fully accounted for by this queue plus
    /// its residual sketch.
    Timestamp coverage_start() const { return items_.empty() ? prev_t_ + 1 : items_.front().start; }

    Timestamp prev_t() const noexcept { return prev_t_; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }
    const Snapshot& front() const { return items_.front(); }
    const Snapshot& back() const { return items_.back(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

    void clear(Timestamp prev_t) {
        items_.clear();
        prev_t_ = prev_t;
    }

private:
    std::deque<Snapshot> items_;
    Timestamp prev_t_;
};

}  // namespace dsfd
