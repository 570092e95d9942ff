#pragma once

// Dense linear-algebra primitives shared by every sketch in the library.
// All routines are pure functions of their inputs.

#include <dsfd/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace dsfd {

using Index = Eigen::Index;
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::RowVectorXd;
using Timestamp = std::int64_t;

struct SvdResult {
    DenseMatrix u;                   // rows x r
    Eigen::VectorXd singular_values; // r, non-increasing
    DenseMatrix vt;                  // r x cols
};

struct SymEigResult {
    Eigen::VectorXd values;  // non-increasing
    DenseMatrix vectors;     // column j pairs with values(j)
};

namespace linalg {

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kRelativeFloor = 1e-12;

inline bool all_finite(const DenseMatrix& m) { return m.allFinite(); }

inline void require_square(const DenseMatrix& m, const char* op) {
    if (m.rows() != m.cols()) {
        throw ShapeError(std::string(op) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

/// A^T A.
inline DenseMatrix gram(const DenseMatrix& m) {
    DenseMatrix g = DenseMatrix::Zero(m.cols(), m.cols());
    if (m.rows() > 0) {
        g.selfadjointView<Eigen::Lower>().rankUpdate(m.transpose());
        g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    }
    return g;
}

/// Thin SVD with r = min(rows, cols) factors.
inline SvdResult svd_thin(const DenseMatrix& m) {
    if (!all_finite(m)) throw NumericalError("svd_thin: non-finite input");
    SvdResult out;
    const Index r = std::min(m.rows(), m.cols());
    if (r == 0) {
        out.u = DenseMatrix::Zero(m.rows(), 0);
        out.singular_values = Eigen::VectorXd::Zero(0);
        out.vt = DenseMatrix::Zero(0, m.cols());
        return out;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("svd_thin: backend failure");
    out.u = svd.matrixU();
    out.singular_values = svd.singularValues();
    out.vt = svd.matrixV().transpose();
    return out;
}

/// Eigendecomposition of a symmetric matrix, eigenvalues sorted non-increasing.
/// The input is symmetrized first, so tiny asymmetries from rounding are harmless.
inline SymEigResult sym_eig(const DenseMatrix& k) {
    require_square(k, "sym_eig");
    if (!all_finite(k)) throw NumericalError("sym_eig: non-finite input");
    SymEigResult out;
    const Index n = k.rows();
    if (n == 0) {
        out.values = Eigen::VectorXd::Zero(0);
        out.vectors = DenseMatrix::Zero(0, 0);
        return out;
    }
    const Eigen::MatrixXd sym = 0.5 * (k + k.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("sym_eig: backend failure");
    // Eigen returns ascending order.
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();
    return out;
}

/// max |lambda_i(M)| of a symmetric matrix via a full eigendecomposition.
inline double spectral_norm_sym(const DenseMatrix& m) {
    require_square(m, "spectral_norm_sym");
    if (m.rows() == 0) return 0.0;
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_norm_sym: backend failure");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

// Writes Sigma * V^T of m into the first min(rows, out_rows) rows of the result,
// rows sorted by non-increasing singular value. When shrink_rank > 0 every
// squared singular value is reduced by the shrink_rank-th largest one.
inline DenseMatrix principal_rows(const DenseMatrix& m, Index out_rows, Index shrink_rank) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    DenseMatrix out = DenseMatrix::Zero(out_rows, cols);
    if (rows == 0 || cols == 0) return out;

    DenseMatrix basis;           // rows are Sigma * V^T, before shrinking
    Eigen::VectorXd energies;    // squared singular values, non-increasing
    if (rows <= cols) {
        // U^T M = Sigma V^T; the m x m Gram is cheap for the short, wide
        // matrices a sketch holds.
        DenseMatrix g = DenseMatrix::Zero(rows, rows);
        g.selfadjointView<Eigen::Lower>().rankUpdate(m);
        g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
        const SymEigResult eig = sym_eig(g);
        basis = eig.vectors.transpose() * m;
        energies = eig.values.cwiseMax(0.0);
    } else {
        const SvdResult svd = svd_thin(m);
        basis = svd.singular_values.asDiagonal() * svd.vt;
        energies = svd.singular_values.cwiseAbs2();
    }

    const Index available = basis.rows();
    const double top = energies.size() > 0 ? energies(0) : 0.0;
    const double floor = top * kRelativeFloor * kRelativeFloor;
    double shrink = 0.0;
    if (shrink_rank > 0 && shrink_rank <= available) shrink = energies(shrink_rank - 1);

    const Index keep = std::min(out_rows, available);
    for (Index i = 0; i < keep; ++i) {
        const double e = energies(i);
        if (e <= floor || top <= 0.0) continue;
        const double target = std::max(e - shrink, 0.0);
        if (target <= 0.0) continue;
        out.row(i) = basis.row(i) * std::sqrt(target / e);
    }
    return out;
}

}  // namespace detail

/// The FrequentDirections rescale-and-forget step: Sigma' V^T restricted to
/// ell rows, with Sigma'_i = sqrt(max(sigma_i^2 - sigma_ell^2, 0)). Row ell
/// (1-based) and everything after it come out zero.
inline DenseMatrix fd_shrink(const DenseMatrix& m, Index ell) {
    if (ell < 1 || ell > m.rows()) {
        throw ShapeError("fd_shrink: need 1 <= ell <= rows, got ell=" + std::to_string(ell) +
                         " rows=" + std::to_string(m.rows()));
    }
    return detail::principal_rows(m, ell, ell);
}

/// Rotates m into Sigma V^T form without discarding anything; the Gram matrix
/// is unchanged when out_rows >= rank(m). Output has out_rows rows (zero padded).
inline DenseMatrix rotate_to_principal(const DenseMatrix& m, Index out_rows) {
    return detail::principal_rows(m, out_rows, 0);
}

}  // namespace linalg
}  // namespace dsfd
