#pragma once

// Seq-DS-FD and Time-DS-FD: L+1 DS-FD layers with geometric dump thresholds.
// Low layers dump often and keep a short, capped history; high layers dump
// rarely and cover long histories. A query answers from the lowest layer
// whose snapshots still cover the whole window.

#include <dsfd/errors.hpp>
#include <dsfd/linalg.hpp>
#include <dsfd/sliding_fd.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace dsfd {

enum class WindowMode { sequence, time };

struct LayeredConfig {
    WindowMode mode = WindowMode::sequence;
    Index dim = 0;
    double epsilon = 0.1;
    /// Rows (sequence mode) or time units (time mode).
    Timestamp window = 0;
    /// Upper bound on row squared norms; rows have ‖a‖² in [1, R] (or 0 in time mode).
    double big_r = 1.0;
    double beta = 1.0;

    Index ell() const { return sketch_rows_for(epsilon, dim); }

    /// Index L of the top layer; layers are 0..L.
    int top_layer() const {
        const double span = mode == WindowMode::sequence
                                ? big_r
                                : epsilon * static_cast<double>(window) * big_r;
        if (span <= 1.0) return 0;
        return static_cast<int>(std::ceil(std::log2(span) - 1e-12));
    }

    /// 2^j eps N (sequence) or 2^j (time).
    double threshold(int layer) const {
        const double scale = std::ldexp(1.0, layer);
        return mode == WindowMode::sequence ? scale * epsilon * static_cast<double>(window) : scale;
    }

    /// Mass a layer's auxiliary process absorbs before it replaces the primary.
    double epoch_mass(int layer) const { return threshold(layer) / epsilon; }

    /// Snapshots kept per layer queue: floor(2 (1 + 4/beta) / eps).
    std::size_t queue_cap() const {
        return static_cast<std::size_t>(std::floor(2.0 * (1.0 + 4.0 / beta) / epsilon + 1e-9));
    }

    void validate() const {
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
        if (window < 1) throw ConfigError("window must be >= 1");
        if (!(big_r >= 1.0)) throw ConfigError("R must be >= 1");
        if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    }
};

enum class LayerSearch { linear, binary };

struct LayeredQuery {
    DenseMatrix sketch;
    int layer = 0;
    /// False when no layer covers the window and the top layer was used anyway.
    bool covered = true;
};

template <class Residual>
class LayeredSlidingFd {
public:
    explicit LayeredSlidingFd(const LayeredConfig& config) : config_((config.validate(), config)) {
        const Index ell = config_.ell();
        const int top = config_.top_layer();
        layers_.reserve(static_cast<std::size_t>(top) + 1);
        for (int j = 0; j <= top; ++j) layers_.emplace_back(config_.dim, ell, config_.threshold(j));
    }

    const LayeredConfig& config() const noexcept { return config_; }
    std::size_t layer_count() const noexcept { return layers_.size(); }
    const DualSketch<Residual>& layer(std::size_t j) const { return layers_.at(j); }
    Timestamp now() const noexcept { return now_; }

    /// Sequence mode: the row arrives at the next step.
    void update(const Eigen::Ref<const Vector>& a) {
        if (config_.mode != WindowMode::sequence) {
            throw InputError("time-mode sketch needs a timestamp per row");
        }
        ingest(a, now_ + 1);
    }

    /// Time mode: the row arrives at ts (non-decreasing). Zero rows only advance time.
    void update(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        if (config_.mode == WindowMode::sequence) {
            update(a);
            return;
        }
        if (ts < now_) {
            throw InputError("timestamp " + std::to_string(ts) + " precedes " + std::to_string(now_));
        }
        if (ts < 1) throw InputError("timestamps must be >= 1");
        ingest(a, ts);
    }

    /// Lowest layer whose primary queue covers [max(1, now - N + 1), now].
    /// Returns {top layer, false} when none does.
    std::pair<int, bool> select_layer(LayerSearch search = LayerSearch::linear) const {
        const Timestamp start = window_start();
        const int top = static_cast<int>(layers_.size()) - 1;
        auto covers = [&](int j) { return layers_[static_cast<std::size_t>(j)].main_queue().coverage_start() <= start; };
        if (search == LayerSearch::linear) {
            for (int j = 0; j <= top; ++j) {
                if (covers(j)) return {j, true};
            }
            return {top, false};
        }
        // Coverage starts are non-increasing in the layer index, so the
        // covering layers form a suffix.
        int lo = 0;
        int hi = top + 1;
        while (lo < hi) {
            const int mid = lo + (hi - lo) / 2;
            if (covers(mid)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        if (lo > top) return {top, false};
        return {lo, true};
    }

    LayeredQuery query(LayerSearch search = LayerSearch::linear) const {
        const auto [j, covered] = select_layer(search);
        return LayeredQuery{layers_[static_cast<std::size_t>(j)].estimate_compressed(), j, covered};
    }

    std::size_t held_rows() const {
        std::size_t total = 0;
        for (const auto& layer : layers_) total += layer.held_rows();
        return total;
    }

    Timestamp window_start() const { return std::max<Timestamp>(1, now_ - config_.window + 1); }

private:
    void ingest(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        detail::require_dim(config_.dim, a.size(), "layered_update");
        const double norm2 = a.squaredNorm();
        const bool idle = config_.mode == WindowMode::time && norm2 == 0.0;
        if (!idle) {
            const double lo = 1.0 - kNormalizedTolerance;
            const double hi = config_.big_r * (1.0 + kNormalizedTolerance);
            if (norm2 < lo || norm2 > hi) {
                throw InputError("row at " + std::to_string(ts) + " has squared norm " + std::to_string(norm2) +
                                 " outside [1, " + std::to_string(config_.big_r) + "]");
            }
        }

        const Timestamp previous = now_;
        now_ = ts;
        const std::size_t cap = config_.queue_cap();
        for (std::size_t j = 0; j < layers_.size(); ++j) {
            auto& layer = layers_[j];
            // Relative slack absorbs rounding in sums of unit squared norms.
            if (!idle && layer.epoch_mass() >= config_.epoch_mass(static_cast<int>(j)) * (1.0 - 1e-6)) {
                layer.restart(previous);
            }
            layer.expire(now_, config_.window);
            layer.cap(cap);
            if (idle) continue;
            if (reaches(norm2, layer.theta())) {
                layer.insert_direct(a, now_);
            } else {
                layer.insert(a, now_);
            }
            layer.cap(cap);
        }
    }

    LayeredConfig config_;
    std::vector<DualSketch<Residual>> layers_;
    Timestamp now_ = 0;
};

using SeqDsFd = LayeredSlidingFd<FastResidual>;
using TimeDsFd = LayeredSlidingFd<FastResidual>;

}  // namespace dsfd
