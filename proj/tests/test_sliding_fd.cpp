#include "oracle.hpp"

#include <dsfd/sliding_fd.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using dsfd::DenseMatrix;
using dsfd::FastResidual;
using dsfd::FastSlidingFd;
using dsfd::Index;
using dsfd::SlidingFd;
using dsfd::SlidingFdConfig;
using dsfd::Timestamp;
using dsfd::Vector;

namespace {

Vector unit(Index d, Index i) {
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    return e;
}

struct StreamCheck {
    double max_rows_error = 0.0;
    double max_compressed_error = 0.0;
    std::size_t max_main_queue = 0;
    std::size_t max_aux_queue = 0;
    std::size_t max_held = 0;
};

template <class Sketch>
StreamCheck replay(Sketch& sketch, std::mt19937_64& rng, int n, int query_every) {
    const auto& c = sketch.config();
    std::vector<Vector> rows;
    std::vector<Timestamp> ts;
    StreamCheck out;
    for (int i = 1; i <= n; ++i) {
        rows.push_back(oracle::random_unit(rng, c.dim));
        ts.push_back(i);
        sketch.update(rows.back());
        out.max_main_queue = std::max(out.max_main_queue, sketch.state().main_queue().size());
        out.max_aux_queue = std::max(out.max_aux_queue, sketch.state().aux_queue().size());
        out.max_held = std::max(out.max_held, sketch.held_rows());
        if (i % query_every != 0) continue;
        const DenseMatrix exact = oracle::window_gram(rows, ts, i, c.window, c.dim);
        const DenseMatrix raw = sketch.query_rows();
        const DenseMatrix compressed = sketch.query_compressed();
        out.max_rows_error =
            std::max(out.max_rows_error, oracle::spectral_norm(exact - raw.transpose() * raw));
        out.max_compressed_error =
            std::max(out.max_compressed_error, oracle::spectral_norm(exact - compressed.transpose() * compressed));
    }
    return out;
}

}  // namespace

TEST(SlidingFd, FreshStateIsZero) {
    SlidingFd s(SlidingFdConfig{4, 2, 10, 2.0});
    EXPECT_EQ(s.step(), 0);
    EXPECT_EQ(s.query_rows().norm(), 0.0);
    EXPECT_EQ(s.query_compressed().rows(), 2);
    EXPECT_EQ(s.query_compressed().norm(), 0.0);
    EXPECT_EQ(s.held_rows(), 4u);
    EXPECT_TRUE(s.state().main_queue().empty());
}

TEST(SlidingFd, RepeatedDirectionDumpsSnapshot) {
    SlidingFd s(SlidingFdConfig{2, 1, 4, 2.0});
    s.update(unit(2, 0));
    EXPECT_TRUE(s.state().main_queue().empty());
    s.update(unit(2, 0));
    ASSERT_EQ(s.state().main_queue().size(), 1u);
    const auto& snap = s.state().main_queue().front();
    EXPECT_NEAR(std::abs(snap.v(0)), std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(snap.v(1), 0.0, 1e-12);
    EXPECT_EQ(snap.dump, 2);
    EXPECT_EQ(snap.start, 1);
    EXPECT_LE(s.state().main_sketch().rows().norm(), 1e-12);

    const DenseMatrix g = dsfd::linalg::gram(s.query_rows());
    DenseMatrix expect = DenseMatrix::Zero(2, 2);
    expect(0, 0) = 2.0;
    EXPECT_LE((g - expect).norm(), 1e-12);
}

TEST(SlidingFd, NoDumpBelowThreshold) {
    SlidingFd s(SlidingFdConfig{4, 3, 10, 1.5});
    s.update(unit(4, 0));
    s.update(unit(4, 1));
    EXPECT_TRUE(s.state().main_queue().empty());
    EXPECT_TRUE(s.state().aux_queue().empty());
}

TEST(SlidingFd, RejectsUnnormalizedRow) {
    SlidingFd s(SlidingFdConfig::for_epsilon(3, 0.5, 10));
    EXPECT_THROW(s.update(unit(3, 0) * 2.0), dsfd::InputError);
    EXPECT_THROW(s.update(Vector::Zero(3)), dsfd::InputError);
    EXPECT_THROW(s.update(unit(4, 0)), dsfd::ShapeError);
}

TEST(SlidingFd, ConfigValidation) {
    EXPECT_THROW(SlidingFd(SlidingFdConfig{0, 1, 10, 1.0}), dsfd::ConfigError);
    EXPECT_THROW(SlidingFd(SlidingFdConfig{3, 1, 0, 1.0}), dsfd::ConfigError);
    EXPECT_THROW(SlidingFd(SlidingFdConfig{3, 1, 10, 0.0}), dsfd::ConfigError);
    EXPECT_THROW(SlidingFdConfig::for_epsilon(3, 0.0, 10), dsfd::ConfigError);
    EXPECT_THROW(SlidingFdConfig::for_epsilon(3, 1.5, 10), dsfd::ConfigError);
}

TEST(SlidingFd, SketchRowsFollowEpsilon) {
    EXPECT_EQ(dsfd::sketch_rows_for(0.1, 32), 10);
    EXPECT_EQ(dsfd::sketch_rows_for(0.1, 4), 4);
    EXPECT_EQ(dsfd::sketch_rows_for(0.3, 32), 4);
    EXPECT_EQ(dsfd::sketch_rows_for(1.0, 32), 1);
}

TEST(SlidingFd, RestartSwapsQueues) {
    SlidingFd s(SlidingFdConfig{2, 1, 3, 2.0});
    for (int i = 0; i < 3; ++i) s.update(unit(2, 0));
    const std::size_t aux_before = s.state().aux_queue().size();
    s.update(unit(2, 1));  // step 4 = 1 mod 3: restart
    EXPECT_EQ(s.state().aux_queue().prev_t(), 3);
    EXPECT_TRUE(s.state().aux_queue().empty());
    EXPECT_GE(s.state().main_queue().size() + 1, aux_before);
}

TEST(SlidingFd, MainQueueStaysShort) {
    std::mt19937_64 rng(31);
    SlidingFd s(SlidingFdConfig::for_epsilon(8, 0.1, 100));
    const auto r = replay(s, rng, 300, 1000);
    EXPECT_LE(r.max_main_queue, 20u);
}

TEST(SlidingFd, WindowErrorWithinBounds) {
    std::mt19937_64 rng(32);
    SlidingFd s(SlidingFdConfig::for_epsilon(16, 0.1, 500));
    const auto r = replay(s, rng, 2000, 25);
    EXPECT_LE(r.max_rows_error, 200.0);
    EXPECT_LE(r.max_compressed_error, 400.0);
    EXPECT_LE(r.max_main_queue, 20u);
    EXPECT_LE(r.max_held, 2u * 10u + 2u * 20u);
}

TEST(SlidingFd, CompressedMatchesRowsWhenSmall) {
    SlidingFd s(SlidingFdConfig{4, 4, 10, 100.0});
    s.update(unit(4, 0));
    s.update(unit(4, 1));
    const DenseMatrix a = dsfd::linalg::gram(s.query_rows());
    const DenseMatrix b = dsfd::linalg::gram(s.query_compressed());
    EXPECT_LE((a - b).norm(), 1e-12);
}

TEST(FastSlidingFd, WindowErrorWithinBounds) {
    std::mt19937_64 rng(33);
    FastSlidingFd s(SlidingFdConfig::for_epsilon(16, 0.1, 500));
    const auto r = replay(s, rng, 2000, 25);
    EXPECT_LE(r.max_rows_error, 200.0);
    EXPECT_LE(r.max_compressed_error, 400.0);
}

TEST(FastResidual, NoDecompositionWhileDormant) {
    FastResidual f(3, 2);
    int dumps = 0;
    for (int i = 0; i < 3; ++i) f.insert(unit(3, i), 10.0, [&](Vector) { ++dumps; });
    EXPECT_EQ(f.held_rows(), 3);
    EXPECT_EQ(f.decompositions(), 0u);
    EXPECT_EQ(dumps, 0);
}

TEST(FastResidual, DumpsTopEigenpair) {
    FastResidual f(2, 2);
    std::vector<Vector> dumped;
    auto dump = [&](Vector v) { dumped.push_back(std::move(v)); };
    f.insert(unit(2, 0) * 2.0, 4.0, dump);  // sigma1_hat^2 = 4 triggers at once
    ASSERT_EQ(dumped.size(), 1u);
    dumped.clear();

    FastResidual g(2, 2);
    g.insert(unit(2, 1), 4.5, dump);
    g.insert(unit(2, 0) * 2.0, 4.5, dump);  // sigma1_hat^2 = 5 >= 4.5, but lambda_max = 4 < 4.5
    EXPECT_TRUE(dumped.empty());
    EXPECT_EQ(g.decompositions(), 1u);
    EXPECT_NEAR(g.sigma1_hat2(), 4.0, 1e-12);
}

TEST(FastResidual, HandDeflation) {
    // D = [[2,0],[0,1]] with theta = 4: the sigma^2 = 4 pair is dumped.
    FastResidual f(2, 3);
    std::vector<Vector> dumped;
    auto dump = [&](Vector v) { dumped.push_back(std::move(v)); };
    f.insert(unit(2, 1), 4.0, dump);
    f.insert(unit(2, 0) * 2.0, 4.0, dump);
    ASSERT_EQ(dumped.size(), 1u);
    EXPECT_NEAR(std::abs(dumped[0](0)), 2.0, 1e-12);
    EXPECT_NEAR(dumped[0](1), 0.0, 1e-12);
    const DenseMatrix d = f.rows();
    DenseMatrix expect_d(2, 2);
    expect_d << 0, 1, 0, 0;
    EXPECT_LE((d - expect_d).norm(), 1e-12);
    DenseMatrix expect_k(2, 2);
    expect_k << 1, 0, 0, 0;
    EXPECT_LE((DenseMatrix(f.gram()) - expect_k).norm(), 1e-12);
}

TEST(FastResidual, GramTracksBuffer) {
    std::mt19937_64 rng(34);
    FastResidual f(6, 4);
    for (int i = 0; i < 100; ++i) {
        f.insert(oracle::random_unit(rng, 6), 3.0, [](Vector) {});
        const DenseMatrix d = f.rows();
        const DenseMatrix k = f.gram();
        EXPECT_LE((d * d.transpose() - k).norm(), 1e-8 * (1.0 + k.norm()));
        EXPECT_LE(f.held_rows(), 8);
        if (d.rows() > 0) {
            const double top = dsfd::linalg::spectral_norm_sym(k);
            EXPECT_GE(f.sigma1_hat2(), top - 1e-6 * (1.0 + top));
        }
    }
}

TEST(Deflate, OrthogonalDirectionIsNoOp) {
    DenseMatrix d(2, 3);
    d << 1, 0, 0, 0, 2, 0;
    DenseMatrix k = d * d.transpose();
    const DenseMatrix d0 = d, k0 = k;
    dsfd::deflate(d, k, unit(3, 2));
    EXPECT_EQ(d, d0);
    EXPECT_EQ(k, k0);
}

TEST(Deflate, Identity) {
    DenseMatrix d = DenseMatrix::Identity(2, 2);
    DenseMatrix k = DenseMatrix::Identity(2, 2);
    dsfd::deflate(d, k, unit(2, 0));
    DenseMatrix expect = DenseMatrix::Zero(2, 2);
    expect(1, 1) = 1.0;
    EXPECT_EQ(d, expect);
    EXPECT_EQ(k, expect);
}

TEST(Deflate, RemovesSingularRow) {
    std::mt19937_64 rng(35);
    for (int j = 0; j < 6; ++j) {
        DenseMatrix d = oracle::random_matrix(rng, 10, 6);
        DenseMatrix k = d * d.transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeFullV);
        const Vector v = svd.matrixV().col(j).transpose();
        DenseMatrix sv = svd.singularValues().asDiagonal() * svd.matrixV().transpose();
        sv.row(j).setZero();
        dsfd::deflate(d, k, v);
        EXPECT_LE((d.transpose() * d - sv.transpose() * sv).norm(), 1e-8);
        EXPECT_LE((d * d.transpose() - k).norm(), 1e-8);
    }
}

TEST(Deflate, RejectsNonUnitDirection) {
    DenseMatrix d = DenseMatrix::Identity(2, 2);
    DenseMatrix k = DenseMatrix::Identity(2, 2);
    EXPECT_THROW(dsfd::deflate(d, k, unit(2, 0) * 2.0), dsfd::InputError);
}
