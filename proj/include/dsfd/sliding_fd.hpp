#pragma once

// DS-FD: FrequentDirections over a sequence-based sliding window of
// normalized rows. Directions whose squared norm reaches the dump threshold
// leave the sketch as timestamped snapshots, which expire with the window;
// what stays in the sketch is the small residual. Two sketch processes run
// staggered by one window so the primary never absorbs more than two windows
// of mass ("restart every N steps").
//
// The residual sketch is pluggable: EagerResidual runs an SVD per row,
// FastResidual (Fast-DS-FD) buffers up to 2*ell rows and tracks an upper
// bound on the top singular value so it only decomposes when a dump is possible.

#include <dsfd/errors.hpp>
#include <dsfd/frequent_directions.hpp>
#include <dsfd/linalg.hpp>
#include <dsfd/snapshot.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

namespace dsfd {

/// ell = min(ceil(1/eps), d).
inline Index sketch_rows_for(double epsilon, Index dim) {
    if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("epsilon must lie in (0, 1]");
    const auto inv = static_cast<Index>(std::ceil(1.0 / epsilon - 1e-9));
    return std::max<Index>(1, std::min(inv, dim));
}

/// Tolerance on |‖a‖² - 1| for rows in normalized mode.
inline constexpr double kNormalizedTolerance = 1e-9;

/// Relative slack on dump decisions: energies recovered from a decomposition
/// can land a few ulps below a threshold they reach exactly.
inline constexpr double kDumpSlack = 1e-10;

inline bool reaches(double norm2, double theta) { return norm2 >= theta * (1.0 - kDumpSlack); }

/// Removes direction v (unit norm) from D and keeps K = D D^T in step:
/// w = D v is taken before D changes, then D -= w v^T and K -= w w^T.
inline void deflate(Eigen::Ref<DenseMatrix> d, Eigen::Ref<DenseMatrix> k, const Vector& v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) throw InputError("deflate: direction must have unit norm");
    if (v.size() != d.cols()) throw ShapeError("deflate: direction length does not match D");
    if (k.rows() != d.rows() || k.cols() != d.rows()) throw ShapeError("deflate: K must be rows(D) square");
    const Eigen::VectorXd w = d * v.transpose();
    d.noalias() -= w * v;
    k.noalias() -= w * w.transpose();
}

/// Eager residual: an FdSketch kept in Sigma V^T form, so the top row is
/// checked against the threshold after every insert.
class EagerResidual {
public:
    EagerResidual(Index dim, Index ell) : sketch_(dim, ell) {}

    Index dim() const noexcept { return sketch_.dim(); }
    Index ell() const noexcept { return sketch_.ell(); }

    template <class Dump>
    void insert(const Vector& a, double theta, Dump&& dump) {
        sketch_.update(a);
        while (reaches(sketch_.top_norm2(), theta)) dump(sketch_.pop_top());
    }

    auto rows() const { return sketch_.rows().topRows(sketch_.ell()); }
    Index held_rows() const noexcept { return sketch_.ell(); }
    const FdSketch& sketch() const noexcept { return sketch_; }
    void reset() { sketch_.reset(); }

private:
    FdSketch sketch_;
};

/// Fast-DS-FD residual: buffer D of up to 2*ell rows, its Gram K = D D^T and an
/// upper bound on sigma_1(D)^2.
class FastResidual {
public:
    FastResidual(Index dim, Index ell)
        : ell_(ell), d_(DenseMatrix::Zero(2 * ell, dim)), k_(DenseMatrix::Zero(2 * ell, 2 * ell)) {
        detail::require_sketch_size(dim, ell);
    }

    Index dim() const noexcept { return d_.cols(); }
    Index ell() const noexcept { return ell_; }

    template <class Dump>
    void insert(const Vector& a, double theta, Dump&& dump) {
        const Index n = count_;
        d_.row(n) = a;
        count_ = n + 1;
        sigma1_hat2_ += a.squaredNorm();

        if (count_ >= 2 * ell_) {
            DenseMatrix shrunk = linalg::fd_shrink(d_.topRows(count_), ell_);
            ++decompositions_;
            Index top = 0;
            while (top < ell_ && reaches(shrunk.row(top).squaredNorm(), theta)) {
                dump(Vector(shrunk.row(top)));
                ++top;
            }
            // Keep only the non-zero rows that were not dumped.
            Index kept = 0;
            d_.setZero();
            for (Index r = top; r < ell_; ++r) {
                if (shrunk.row(r).norm() > kZeroRowNorm) d_.row(kept++) = shrunk.row(r);
            }
            count_ = kept;
            recompute_gram();
            sigma1_hat2_ = kept > 0 ? d_.row(0).squaredNorm() : 0.0;
            return;
        }

        // K gains one row and column: [K, D a^T; a D^T, a a^T].
        const Eigen::VectorXd cross = d_.topRows(count_) * a.transpose();
        k_.block(n, 0, 1, count_) = cross.transpose();
        k_.block(0, n, count_, 1) = cross;

        if (!reaches(sigma1_hat2_, theta)) return;

        const SymEigResult eig = linalg::sym_eig(k_.topLeftCorner(count_, count_));
        ++decompositions_;
        double remaining = 0.0;
        for (Index j = 0; j < eig.values.size(); ++j) {
            const double lambda = eig.values(j);
            if (!reaches(lambda, theta)) {
                remaining = std::max(lambda, 0.0);
                break;
            }
            // sigma_j v_j^T = u_j^T D
            Vector scaled = eig.vectors.col(j).transpose() * d_.topRows(count_);
            const double sigma = scaled.norm();
            if (sigma <= kZeroRowNorm) continue;
            const Vector direction = scaled / sigma;
            dump(std::move(scaled));
            deflate(d_.topRows(count_), k_.topLeftCorner(count_, count_), direction);
        }
        sigma1_hat2_ = remaining;
    }

    auto rows() const { return d_.topRows(count_); }
    Index held_rows() const noexcept { return count_; }
    auto gram() const { return k_.topLeftCorner(count_, count_); }
    double sigma1_hat2() const noexcept { return sigma1_hat2_; }
    std::size_t decompositions() const noexcept { return decompositions_; }

    void reset() {
        d_.setZero();
        k_.setZero();
        count_ = 0;
        sigma1_hat2_ = 0.0;
    }

private:
    void recompute_gram() {
        k_.setZero();
        if (count_ > 0) k_.topLeftCorner(count_, count_) = d_.topRows(count_) * d_.topRows(count_).transpose();
    }

    Index ell_;
    DenseMatrix d_;
    DenseMatrix k_;
    Index count_ = 0;
    double sigma1_hat2_ = 0.0;
    std::size_t decompositions_ = 0;
};

/// Primary and auxiliary sketch processes, each with its snapshot queue.
template <class Residual>
class DualSketch {
public:
    DualSketch(Index dim, Index ell, double theta)
        : theta_(theta), main_(dim, ell), aux_(dim, ell) {
        if (!(theta > 0.0)) throw ConfigError("dump threshold theta must be > 0");
    }

    Index dim() const noexcept { return main_.dim(); }
    Index ell() const noexcept { return main_.ell(); }
    double theta() const noexcept { return theta_; }

    /// Primary <- auxiliary (sketch and queue); the auxiliary restarts empty.
    /// last_ts is the last timestamp processed before the new auxiliary starts.
    void restart(Timestamp last_ts) {
        std::swap(main_, aux_);
        std::swap(main_queue_, aux_queue_);
        aux_.reset();
        aux_queue_.clear(last_ts);
        epoch_mass_ = 0.0;
    }

    std::size_t expire(Timestamp now, Timestamp window) { return main_queue_.expire(now, window); }

    void cap(std::size_t max_items) {
        main_queue_.cap(max_items);
        aux_queue_.cap(max_items);
    }

    /// Feeds a to both processes, dumping directions that reach theta.
    void insert(const Vector& a, Timestamp now) {
        main_.insert(a, theta_, [&](Vector v) { main_queue_.push(std::move(v), now); });
        aux_.insert(a, theta_, [&](Vector v) { aux_queue_.push(std::move(v), now); });
        epoch_mass_ += a.squaredNorm();
    }

    /// Stores a verbatim as a snapshot in both queues.
    void insert_direct(const Vector& a, Timestamp now) {
        main_queue_.push(a, now);
        aux_queue_.push(a, now);
        epoch_mass_ += a.squaredNorm();
    }

    /// Snapshot vectors stacked on top of the primary residual rows.
    DenseMatrix estimate_rows() const {
        const auto residual = main_.rows();
        DenseMatrix out(static_cast<Index>(main_queue_.size()) + residual.rows(), dim());
        Index at = 0;
        for (const auto& s : main_queue_) out.row(at++) = s.v;
        out.bottomRows(residual.rows()) = residual;
        return out;
    }

    /// FD_ell of the snapshot stack and the primary residual.
    DenseMatrix estimate_compressed() const {
        const DenseMatrix stacked = estimate_rows();
        return fd_merge(ell(), dim(), std::span<const DenseMatrix>(&stacked, 1));
    }

    /// d-dimensional rows held: both residuals and both queues.
    std::size_t held_rows() const {
        return static_cast<std::size_t>(main_.held_rows() + aux_.held_rows()) + main_queue_.size() +
               aux_queue_.size();
    }

    double epoch_mass() const noexcept { return epoch_mass_; }
    const Residual& main_sketch() const noexcept { return main_; }
    const Residual& aux_sketch() const noexcept { return aux_; }
    const SnapshotQueue& main_queue() const noexcept { return main_queue_; }
    const SnapshotQueue& aux_queue() const noexcept { return aux_queue_; }

private:
    double theta_;
    Residual main_;
    Residual aux_;
    SnapshotQueue main_queue_;
    SnapshotQueue aux_queue_;
    double epoch_mass_ = 0.0;
};

struct SlidingFdConfig {
    Index dim = 0;
    Index ell = 0;
    Timestamp window = 0;
    double theta = 0.0;

    /// ell = min(ceil(1/eps), d), theta = eps * N.
    static SlidingFdConfig for_epsilon(Index dim, double epsilon, Timestamp window) {
        return SlidingFdConfig{dim, sketch_rows_for(epsilon, dim), window,
                               epsilon * static_cast<double>(window)};
    }

    void validate() const {
        if (dim < 1) throw ConfigError("dim must be >= 1");
        if (ell < 1) throw ConfigError("ell must be >= 1");
        if (window < 1) throw ConfigError("window must be >= 1");
        if (!(theta > 0.0)) throw ConfigError("theta must be > 0");
    }
};

/// DS-FD over the last `window` normalized rows.
template <class Residual>
class BasicSlidingFd {
public:
    explicit BasicSlidingFd(const SlidingFdConfig& config)
        : config_((config.validate(), config)), dual_(config.dim, config.ell, config.theta) {}

    const SlidingFdConfig& config() const noexcept { return config_; }
    Timestamp step() const noexcept { return step_; }

    void update(const Eigen::Ref<const Vector>& a) {
        detail::require_dim(config_.dim, a.size(), "ds_update");
        const double norm2 = a.squaredNorm();
        if (std::abs(norm2 - 1.0) > kNormalizedTolerance) {
            throw InputError("ds_update: row at step " + std::to_string(step_ + 1) +
                             " is not normalized (squared norm " + std::to_string(norm2) + ")");
        }
        ++step_;
        if ((step_ - 1) % config_.window == 0) dual_.restart(step_ - 1);
        dual_.expire(step_, config_.window);
        dual_.insert(a, step_);
    }

    /// Uncompressed estimator: every live snapshot plus the residual rows.
    DenseMatrix query_rows() const { return dual_.estimate_rows(); }

    /// The same estimator shrunk to ell rows.
    DenseMatrix query_compressed() const { return dual_.estimate_compressed(); }

    std::size_t held_rows() const { return dual_.held_rows(); }
    const DualSketch<Residual>& state() const noexcept { return dual_; }

private:
    SlidingFdConfig config_;
    DualSketch<Residual> dual_;
    Timestamp step_ = 0;
};

using SlidingFd = BasicSlidingFd<EagerResidual>;
using FastSlidingFd = BasicSlidingFd<FastResidual>;

}  // namespace dsfd
