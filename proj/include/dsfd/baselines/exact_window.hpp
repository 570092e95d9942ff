#pragma once

#include <dsfd/errors.hpp>
#include <dsfd/frequent_directions.hpp>
#include <dsfd/linalg.hpp>

#include <deque>
#include <string>

namespace dsfd {

/// Exact sliding window: every row with ts in (now - N, now], its Gram matrix
/// and its squared Frobenius norm. Used as the measurement oracle.
///
/// The Gram is maintained incrementally and rebuilt from the buffer after
/// every `window` evictions so rounding drift stays bounded.
class ExactWindow {
public:
    ExactWindow(Index dim, Timestamp window)
        : dim_(dim), window_(window), gram_(DenseMatrix::Zero(dim, dim)) {
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (window < 1) throw ConfigError("window must be >= 1");
    }

    Index dim() const noexcept { return dim_; }
    Timestamp window() const noexcept { return window_; }
    Timestamp now() const noexcept { return now_; }

    void update(const Eigen::Ref<const Vector>& a, Timestamp ts) {
        detail::require_dim(dim_, a.size(), "exact_update");
        if (ts < now_) {
            throw InputError("timestamp " + std::to_string(ts) + " precedes " + std::to_string(now_));
        }
        advance(ts);
        const double mass = a.squaredNorm();
        if (mass == 0.0) return;
        rows_.push_back(Entry{Vector(a), ts});
        gram_.noalias() += a.transpose() * a;
        frob_ += mass;
    }

    /// Moves the clock to ts and evicts expired rows.
    void advance(Timestamp ts) {
        if (ts > now_) now_ = ts;
        bool evicted = false;
        while (!rows_.empty() && rows_.front().ts + window_ <= now_) {
            const Vector& r = rows_.front().row;
            gram_.noalias() -= r.transpose() * r;
            frob_ -= r.squaredNorm();
            rows_.pop_front();
            evicted = true;
            if (++evictions_ >= static_cast<std::size_t>(window_)) rebuild_pending_ = true;
        }
        if (evicted && rebuild_pending_) rebuild();
        if (rows_.empty()) {
            gram_.setZero();
            frob_ = 0.0;
        }
    }

    const DenseMatrix& gram() const noexcept { return gram_; }
    double frobenius2() const noexcept { return frob_; }
    std::size_t size() const noexcept { return rows_.size(); }

    DenseMatrix rows() const {
        DenseMatrix out(static_cast<Index>(rows_.size()), dim_);
        Index at = 0;
        for (const auto& e : rows_) out.row(at++) = e.row;
        return out;
    }

    /// Gram and mass recomputed from the buffer.
    DenseMatrix recompute_gram() const { return linalg::gram(rows()); }

    double recompute_frobenius2() const {
        double total = 0.0;
        for (const auto& e : rows_) total += e.row.squaredNorm();
        return total;
    }

private:
    struct Entry {
        Vector row;
        Timestamp ts;
    };

    void rebuild() {
        gram_ = recompute_gram();
        frob_ = recompute_frobenius2();
        evictions_ = 0;
        rebuild_pending_ = false;
    }

    Index dim_;
    Timestamp window_;
    Timestamp now_ = 0;
    std::deque<Entry> rows_;
    DenseMatrix gram_;
    double frob_ = 0.0;
    std::size_t evictions_ = 0;
    bool rebuild_pending_ = false;
};

}  // namespace dsfd
