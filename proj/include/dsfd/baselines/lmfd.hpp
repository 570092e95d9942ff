#pragma once

// LM-FD: an exponential histogram whose blocks are FD sketches. The newest
// block collects up to ell raw rows; sealed blocks enter level 0 and, when a
// level holds more than b = ceil(1/eps) blocks, its two oldest merge into one
// block of the next level.

#include <dsfd/errors.hpp>
#include <dsfd/frequent_directions.hpp>
#include <dsfd/linalg.hpp>
#include <dsfd/sliding_fd.hpp>

#include <cmath>
#include <deque>
#include <string>
#include <vector>

namespace dsfd {

class LmFd {
public:
    struct Block {
        DenseMatrix sketch;      // at most ell rows
        double mass = 0.0;
        std::size_t rows = 0;    // stream rows summarized
        Timestamp first_ts = 0;
        Timestamp last_ts = 0;
    };

    LmFd(Index dim, double epsilon, Timestamp window)
        : dim_(dim),
          ell_(sketch_rows_for(epsilon, dim)),
          per_level_(static_cast<std::size_t>(std::ceil(1.0 / epsilon - 1e-9))),
          window_(window),
          open_(DenseMatrix::Zero(ell_, dim)) {
        if (window < 1) throw ConfigError("window must be >= 1");
    }

    Index ell() const noexcept { return ell_; }
    std::size_t blocks_per_level() const noexcept { return per_level_; }
    std::size_t level_count() const noexcept { return levels_.size(); }
    const std::deque<Block>& level(std::size_t k) const { return levels_.at(k); }
    std::size_t merges() const noexcept { return merges_; }

    void update(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        detail::require_dim(dim_, a.size(), "lmfd_update");
        if (ts < now_) throw InputError("timestamps must be non-decreasing");
        advance(ts);
        const double mass = a.squaredNorm();
        if (mass == 0.0) return;
        if (open_rows_ == 0) open_first_ts_ = ts;
        open_.row(open_rows_++) = a;
        open_mass_ += mass;
        open_last_ts_ = ts;
        if (open_rows_ == ell_) seal();
    }

    /// Moves the clock and drops blocks whose newest row left the window.
    void advance(Timestamp now) {
        if (now > now_) now_ = now;
        for (std::size_t k = levels_.size(); k-- > 0;) {
            auto& lvl = levels_[k];
            while (!lvl.empty() && lvl.front().last_ts + window_ <= now_) lvl.pop_front();
        }
        while (!levels_.empty() && levels_.back().empty()) levels_.pop_back();
        if (open_rows_ > 0 && open_last_ts_ + window_ <= now_) {
            open_.setZero();
            open_rows_ = 0;
            open_mass_ = 0.0;
        }
    }

    /// FD_ell of every live block plus the open block.
    DenseMatrix query() const {
        std::vector<DenseMatrix> groups;
        for (const auto& lvl : levels_) {
            for (const auto& b : lvl) groups.push_back(b.sketch);
        }
        if (open_rows_ > 0) groups.push_back(open_.topRows(open_rows_));
        return fd_merge(ell_, dim_, groups);
    }

    std::size_t live_blocks() const {
        std::size_t total = 0;
        for (const auto& lvl : levels_) total += lvl.size();
        return total;
    }

    std::size_t held_rows() const {
        std::size_t total = static_cast<std::size_t>(open_rows_);
        for (const auto& lvl : levels_) {
            for (const auto& b : lvl) total += static_cast<std::size_t>(b.sketch.rows());
        }
        return total;
    }

private:
    void seal() {
        Block b;
        b.sketch = open_;
        b.mass = open_mass_;
        b.rows = static_cast<std::size_t>(open_rows_);
        b.first_ts = open_first_ts_;
        b.last_ts = open_last_ts_;
        open_.setZero();
        open_rows_ = 0;
        open_mass_ = 0.0;

        if (levels_.empty()) levels_.emplace_back();
        levels_[0].push_back(std::move(b));
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            if (levels_[k].size() <= per_level_) break;
            Block older = std::move(levels_[k].front());
            levels_[k].pop_front();
            Block newer = std::move(levels_[k].front());
            levels_[k].pop_front();
            Block merged;
            const DenseMatrix pair[2] = {older.sketch, newer.sketch};
            merged.sketch = fd_merge(ell_, dim_, std::span<const DenseMatrix>(pair, 2));
            merged.mass = older.mass + newer.mass;
            merged.rows = older.rows + newer.rows;
            merged.first_ts = older.first_ts;
            merged.last_ts = newer.last_ts;
            ++merges_;
            if (k + 1 == levels_.size()) levels_.emplace_back();
            levels_[k + 1].push_back(std::move(merged));
        }
    }

    Index dim_;
    Index ell_;
    std::size_t per_level_;
    Timestamp window_;
    Timestamp now_ = 0;

    DenseMatrix open_;
    Index open_rows_ = 0;
    double open_mass_ = 0.0;
    Timestamp open_first_ts_ = 0;
    Timestamp open_last_ts_ = 0;

    std::vector<std::deque<Block>> levels_;  // front = oldest
    std::size_t merges_ = 0;
};

}  // namespace dsfd
