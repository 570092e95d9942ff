#pragma once

// Row sampling over a sliding window, with (SWR) and without (SWOR)
// replacement. A row of squared norm w gets priority u^(1/w) for a uniform u;
// the maximum-priority row of a window is then a norm-squared-proportional
// sample of it. Priorities are compared in log space: log(u) / w.

#include <dsfd/errors.hpp>
#include <dsfd/frequent_directions.hpp>
#include <dsfd/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

namespace dsfd {

namespace detail {

/// Uniform double in (0, 1) from the top 53 bits of a 64-bit draw.
inline double open_unit(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Running squared Frobenius norm of the rows in the window.
class WindowMass {
public:
    explicit WindowMass(Timestamp window) : window_(window) {}

    void add(double mass, Timestamp ts) {
        advance(ts);
        if (mass > 0.0) {
            entries_.push_back({mass, ts});
            total_ += mass;
        }
    }

    void advance(Timestamp now) {
        if (now > now_) now_ = now;
        while (!entries_.empty() && entries_.front().second + window_ <= now_) {
            total_ -= entries_.front().first;
            entries_.pop_front();
        }
        if (entries_.empty()) total_ = 0.0;
    }

    double total() const noexcept { return total_; }
    Timestamp now() const noexcept { return now_; }

private:
    Timestamp window_;
    Timestamp now_ = 0;
    std::deque<std::pair<double, Timestamp>> entries_;
    double total_ = 0.0;
};

inline Vector rescaled(const Vector& row, double frob, std::size_t k) {
    return row * std::sqrt(frob / static_cast<double>(k)) / row.norm();
}

}  // namespace detail

/// SWR: `samplers` independent priority samplers. Each keeps the skyline of
/// in-window rows whose priority beats every later arrival; its head is the
/// current sample.
class SwrSampler {
public:
    struct Entry {
        double log_priority;
        Timestamp ts;
        Vector row;
    };

    SwrSampler(Index dim, std::size_t samplers, Timestamp window, std::uint64_t seed)
        : dim_(dim), window_(window), rng_(seed), mass_(window), skylines_(samplers) {
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (samplers < 1) throw ConfigError("need at least one sampler");
        if (window < 1) throw ConfigError("window must be >= 1");
    }

    std::size_t samplers() const noexcept { return skylines_.size(); }

    void update(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        detail::require_dim(dim_, a.size(), "swr_update");
        if (ts < mass_.now()) throw InputError("timestamps must be non-decreasing");
        advance(ts);
        const double w = a.squaredNorm();
        mass_.add(w, ts);
        if (w == 0.0) return;
        for (auto& sky : skylines_) {
            const double p = std::log(detail::open_unit(rng_)) / w;
            while (!sky.empty() && sky.back().log_priority <= p) sky.pop_back();
            sky.push_back(Entry{p, ts, Vector(a)});
        }
    }

    void advance(Timestamp now) {
        mass_.advance(now);
        for (auto& sky : skylines_) {
            while (!sky.empty() && sky.front().ts + window_ <= mass_.now()) sky.pop_front();
        }
    }

    /// One row per sampler, each the sampled row rescaled to norm sqrt(frob / samplers).
    DenseMatrix estimate(double frob) const {
        DenseMatrix out = DenseMatrix::Zero(static_cast<Index>(skylines_.size()), dim_);
        if (frob <= 0.0) return out;
        for (std::size_t i = 0; i < skylines_.size(); ++i) {
            if (skylines_[i].empty()) continue;
            out.row(static_cast<Index>(i)) = detail::rescaled(skylines_[i].front().row, frob, skylines_.size());
        }
        return out;
    }

    /// Uses the sampler's own window-mass tracker.
    DenseMatrix estimate() const { return estimate(mass_.total()); }

    std::size_t held_rows() const {
        std::size_t total = 0;
        for (const auto& sky : skylines_) total += sky.size();
        return total;
    }

    const std::deque<Entry>& skyline(std::size_t i) const { return skylines_.at(i); }

private:
    Index dim_;
    Timestamp window_;
    std::mt19937_64 rng_;
    detail::WindowMass mass_;
    std::vector<std::deque<Entry>> skylines_;
};

/// SWOR: the `samples` highest-priority in-window rows, one shared priority
/// per row. Keeps every in-window row (O(window) memory); it is a baseline.
class SworSampler {
public:
    SworSampler(Index dim, std::size_t samples, Timestamp window, std::uint64_t seed)
        : dim_(dim), samples_(samples), window_(window), rng_(seed), mass_(window) {
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (samples < 1) throw ConfigError("need at least one sample");
        if (window < 1) throw ConfigError("window must be >= 1");
    }

    void update(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        detail::require_dim(dim_, a.size(), "swor_update");
        if (ts < mass_.now()) throw InputError("timestamps must be non-decreasing");
        advance(ts);
        const double w = a.squaredNorm();
        mass_.add(w, ts);
        if (w == 0.0) return;
        rows_.push_back(Entry{std::log(detail::open_unit(rng_)) / w, ts, arrivals_++, Vector(a)});
    }

    void advance(Timestamp now) {
        mass_.advance(now);
        while (!rows_.empty() && rows_.front().ts + window_ <= mass_.now()) rows_.pop_front();
    }

    /// Indices (into the live rows, oldest first) of the selected rows.
    /// Ties on priority go to the more recent row.
    std::vector<std::size_t> selected() const {
        std::vector<std::size_t> order(rows_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const std::size_t k = std::min(samples_, order.size());
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t x, std::size_t y) {
                              if (rows_[x].log_priority != rows_[y].log_priority) {
                                  return rows_[x].log_priority > rows_[y].log_priority;
                              }
                              return rows_[x].arrival > rows_[y].arrival;
                          });
        order.resize(k);
        return order;
    }

    DenseMatrix estimate(double frob) const {
        const auto picks = selected();
        DenseMatrix out = DenseMatrix::Zero(static_cast<Index>(std::max<std::size_t>(picks.size(), 1)), dim_);
        if (frob <= 0.0 || picks.empty()) return out;
        for (std::size_t i = 0; i < picks.size(); ++i) {
            out.row(static_cast<Index>(i)) = detail::rescaled(rows_[picks[i]].row, frob, picks.size());
        }
        return out;
    }

    DenseMatrix estimate() const { return estimate(mass_.total()); }

    std::size_t held_rows() const noexcept { return rows_.size(); }

private:
    struct Entry {
        double log_priority;
        Timestamp ts;
        std::uint64_t arrival;
        Vector row;
    };

    Index dim_;
    std::size_t samples_;
    Timestamp window_;
    std::mt19937_64 rng_;
    detail::WindowMass mass_;
    std::deque<Entry> rows_;
    std::uint64_t arrivals_ = 0;
};

}  // namespace dsfd
