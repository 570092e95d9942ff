#pragma once

// FrequentDirections over the full stream: the eager variant (one SVD per
// update once the sketch is full) and the buffered Fast-FD variant.

#include <dsfd/errors.hpp>
#include <dsfd/linalg.hpp>

#include <span>
#include <string>
#include <vector>

namespace dsfd {

namespace detail {

inline void require_dim(Index expected, Index got, const char* op) {
    if (expected != got) {
        throw ShapeError(std::string(op) + ": expected dimension " + std::to_string(expected) +
                         ", got " + std::to_string(got));
    }
}

inline void require_sketch_size(Index dim, Index ell) {
    if (dim < 1) throw ConfigError("sketch dimension must be >= 1");
    if (ell < 1) throw ConfigError("sketch size ell must be >= 1");
}

}  // namespace detail

/// Row norms at or below this are treated as empty slots.
inline constexpr double kZeroRowNorm = 1e-12;

/// Eager FrequentDirections sketch of ell rows.
///
/// After every update the rows are in Sigma V^T form: mutually orthogonal and
/// sorted by non-increasing norm, so row 0 is always the top singular direction.
/// DS-FD relies on that to decide when to dump.
class FdSketch {
public:
    FdSketch(Index dim, Index ell) : rows_(DenseMatrix::Zero(ell, dim)) {
        detail::require_sketch_size(dim, ell);
    }

    Index dim() const noexcept { return rows_.cols(); }
    Index ell() const noexcept { return rows_.rows(); }
    const DenseMatrix& rows() const noexcept { return rows_; }

    /// Sum of squared norms of every row ever inserted (or absorbed on a restart).
    double total_mass() const noexcept { return total_mass_; }

    void update(const Eigen::Ref<const Vector>& a) {
        detail::require_dim(dim(), a.size(), "fd_update");
        total_mass_ += a.squaredNorm();

        // Shrinking by the (ell+1)-th squared singular value of the stack is
        // a no-op while a still fits, i.e. plain insertion into a zero row.
        DenseMatrix stacked(ell() + 1, dim());
        stacked.topRows(ell()) = rows_;
        stacked.row(ell()) = a;
        rows_ = linalg::detail::principal_rows(stacked, ell(), ell() + 1);
    }

    double top_norm2() const { return rows_.row(0).squaredNorm(); }

    /// Removes row 0; the remaining rows shift up and a zero row is appended.
    Vector pop_top() {
        Vector top = rows_.row(0);
        const Index n = ell();
        if (n > 1) rows_.topRows(n - 1) = rows_.bottomRows(n - 1).eval();
        rows_.row(n - 1).setZero();
        return top;
    }

    Index nonzero_rows() const {
        Index count = 0;
        for (Index r = 0; r < ell(); ++r) {
            if (rows_.row(r).norm() > kZeroRowNorm) ++count;
        }
        return count;
    }

    void reset() {
        rows_.setZero();
        total_mass_ = 0.0;
    }

private:
    DenseMatrix rows_;
    double total_mass_ = 0.0;
};

/// Fast-FD: rows are appended to a buffer of capacity 2*ell and the SVD runs
/// only when the buffer fills, shrinking it back to ell rows.
class FastFdSketch {
public:
    FastFdSketch(Index dim, Index ell) : ell_(ell), buffer_(DenseMatrix::Zero(2 * ell, dim)) {
        detail::require_sketch_size(dim, ell);
    }

    Index dim() const noexcept { return buffer_.cols(); }
    Index ell() const noexcept { return ell_; }
    Index buffered_rows() const noexcept { return count_; }
    double total_mass() const noexcept { return total_mass_; }

    auto rows() const { return buffer_.topRows(count_); }

    void update(const Eigen::Ref<const Vector>& a) {
        detail::require_dim(dim(), a.size(), "fastfd_update");
        total_mass_ += a.squaredNorm();
        buffer_.row(count_++) = a;
        if (count_ >= 2 * ell_) {
            const DenseMatrix shrunk = linalg::fd_shrink(buffer_, ell_);
            buffer_.setZero();
            buffer_.topRows(ell_) = shrunk;
            count_ = ell_;
        }
    }

    /// The ell-row sketch: the buffer compressed once more when it holds more than ell rows.
    DenseMatrix sketch() const {
        if (count_ <= ell_) {
            DenseMatrix out = DenseMatrix::Zero(ell_, dim());
            out.topRows(count_) = buffer_.topRows(count_);
            return out;
        }
        return linalg::fd_shrink(buffer_.topRows(count_), ell_);
    }

    void reset() {
        buffer_.setZero();
        count_ = 0;
        total_mass_ = 0.0;
    }

private:
    Index ell_;
    DenseMatrix buffer_;
    Index count_ = 0;
    double total_mass_ = 0.0;
};

/// FD_ell of the stacked row groups, shrunk once. Fewer than ell stacked rows
/// are returned as-is, zero padded.
inline DenseMatrix fd_merge(Index ell, Index dim, std::span<const DenseMatrix> groups) {
    detail::require_sketch_size(dim, ell);
    Index total = 0;
    for (const auto& g : groups) {
        detail::require_dim(dim, g.cols(), "fd_merge");
        total += g.rows();
    }
    DenseMatrix stacked = DenseMatrix::Zero(std::max(total, ell), dim);
    Index at = 0;
    for (const auto& g : groups) {
        stacked.middleRows(at, g.rows()) = g;
        at += g.rows();
    }
    if (total <= ell) return stacked;
    return linalg::fd_shrink(stacked, ell);
}

inline DenseMatrix fd_merge(Index ell, Index dim, const std::vector<DenseMatrix>& groups) {
    return fd_merge(ell, dim, std::span<const DenseMatrix>(groups));
}

}  // namespace dsfd
