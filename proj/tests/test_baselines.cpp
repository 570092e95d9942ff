#include "oracle.hpp"

#include <dsfd/baselines/exact_window.hpp>
#include <dsfd/baselines/lmfd.hpp>
#include <dsfd/baselines/sampling.hpp>

#include <gtest/gtest.h>

#include <random>

using dsfd::DenseMatrix;
using dsfd::ExactWindow;
using dsfd::Index;
using dsfd::LmFd;
using dsfd::SworSampler;
using dsfd::SwrSampler;
using dsfd::Timestamp;
using dsfd::Vector;

namespace {

Vector unit(Index d, Index i) {
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    return e;
}

}  // namespace

TEST(ExactWindow, EmptyIsZero) {
    ExactWindow w(3, 5);
    EXPECT_EQ(w.gram().norm(), 0.0);
    EXPECT_EQ(w.frobenius2(), 0.0);
}

TEST(ExactWindow, TwoUnitRows) {
    ExactWindow w(4, 5);
    w.update(unit(4, 0), 1);
    w.update(unit(4, 1), 2);
    DenseMatrix expect = DenseMatrix::Zero(4, 4);
    expect(0, 0) = expect(1, 1) = 1.0;
    EXPECT_EQ(w.gram(), expect);
    EXPECT_EQ(w.frobenius2(), 2.0);
}

TEST(ExactWindow, MatchesRecomputation) {
    std::mt19937_64 rng(51);
    ExactWindow w(6, 200);
    std::vector<Vector> rows;
    std::vector<Timestamp> ts;
    for (int i = 1; i <= 1000; ++i) {
        rows.push_back(oracle::random_matrix(rng, 1, 6));
        ts.push_back(i);
        w.update(rows.back(), i);
        if (i % 97 != 0) continue;
        const DenseMatrix exact = oracle::window_gram(rows, ts, i, 200, 6);
        EXPECT_LE((w.gram() - exact).norm(), 1e-9 * exact.norm());
        EXPECT_NEAR(w.frobenius2(), oracle::window_mass(rows, ts, i, 200), 1e-9 * w.frobenius2());
        EXPECT_EQ(w.size(), std::min<std::size_t>(static_cast<std::size_t>(i), 200));
    }
}

TEST(ExactWindow, TimeBasedExpiry) {
    ExactWindow w(2, 10);
    w.update(unit(2, 0), 1);
    w.update(unit(2, 1), 5);
    w.advance(11);
    EXPECT_EQ(w.size(), 1u);
    w.advance(15);
    EXPECT_EQ(w.size(), 0u);
    EXPECT_EQ(w.gram().norm(), 0.0);
    EXPECT_THROW(w.update(unit(2, 0), 3), dsfd::InputError);
}

TEST(SwrSampler, SingleRowWindow) {
    SwrSampler s(3, 4, 10, 7);
    Vector a(3);
    a << 3, 0, 4;
    s.update(a, 1);
    const DenseMatrix est = s.estimate();
    ASSERT_EQ(est.rows(), 4);
    for (Index i = 0; i < 4; ++i) {
        EXPECT_NEAR(est.row(i).norm(), std::sqrt(25.0 / 4.0), 1e-12);
        EXPECT_NEAR(std::abs(est.row(i).dot(a)) / (est.row(i).norm() * 5.0), 1.0, 1e-12);
    }
}

TEST(SwrSampler, IdenticalRowsGiveExactGram) {
    SwrSampler s(3, 8, 50, 9);
    Vector a(3);
    a << 1, 2, 2;
    for (int t = 1; t <= 30; ++t) s.update(a, t);
    const DenseMatrix g = dsfd::linalg::gram(s.estimate());
    const Vector r = a / a.norm();
    const DenseMatrix expect = 30.0 * 9.0 * r.transpose() * r;
    EXPECT_LE((g - expect).norm(), 1e-9 * expect.norm());
}

TEST(SwrSampler, EmptyWindowIsZero) {
    SwrSampler s(2, 3, 5, 1);
    s.update(unit(2, 0), 1);
    s.advance(100);
    EXPECT_EQ(s.estimate().norm(), 0.0);
    EXPECT_EQ(s.held_rows(), 0u);
}

TEST(SwrSampler, SkylineHasDecreasingPriorities) {
    std::mt19937_64 rng(52);
    SwrSampler s(4, 3, 40, 11);
    for (int t = 1; t <= 300; ++t) s.update(oracle::random_row_log_uniform(rng, 4, 8.0), t);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& sky = s.skyline(i);
        ASSERT_FALSE(sky.empty());
        for (std::size_t k = 1; k < sky.size(); ++k) {
            EXPECT_GT(sky[k - 1].log_priority, sky[k].log_priority);
            EXPECT_LT(sky[k - 1].ts, sky[k].ts);
        }
        EXPECT_GT(sky.front().ts + 40, 300);
    }
}

TEST(SwrSampler, MeanGramIsUnbiased) {
    std::mt19937_64 rng(53);
    const Index d = 6;
    std::vector<Vector> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back(oracle::random_row_log_uniform(rng, d, 4.0));
    const DenseMatrix exact = oracle::gram_of(rows, d);
    DenseMatrix mean = DenseMatrix::Zero(d, d);
    const int runs = 100;
    for (int run = 0; run < runs; ++run) {
        SwrSampler s(d, 64, 1000, 1000 + run);
        for (std::size_t i = 0; i < rows.size(); ++i) s.update(rows[i], static_cast<Timestamp>(i + 1));
        mean += dsfd::linalg::gram(s.estimate());
    }
    mean /= runs;
    EXPECT_LE((mean - exact).norm(), 0.05 * exact.norm());
}

TEST(SworSampler, SmallWindowSelectsEverything) {
    SworSampler s(3, 10, 100, 3);
    for (int t = 1; t <= 4; ++t) s.update(unit(3, t % 3) * t, t);
    EXPECT_EQ(s.selected().size(), 4u);
}

TEST(SworSampler, SelectsDistinctRows) {
    std::mt19937_64 rng(54);
    SworSampler s(4, 5, 30, 5);
    for (int t = 1; t <= 100; ++t) s.update(oracle::random_row_log_uniform(rng, 4, 8.0), t);
    auto picks = s.selected();
    ASSERT_EQ(picks.size(), 5u);
    std::sort(picks.begin(), picks.end());
    EXPECT_EQ(std::unique(picks.begin(), picks.end()), picks.end());
    EXPECT_EQ(s.held_rows(), 30u);
}

TEST(SworSampler, MeanGramIsClose) {
    std::mt19937_64 rng(55);
    const Index d = 6;
    std::vector<Vector> rows;
    for (int i = 0; i < 1000; ++i) rows.push_back(oracle::random_unit(rng, d));
    const DenseMatrix exact = oracle::gram_of(rows, d);
    DenseMatrix mean = DenseMatrix::Zero(d, d);
    const int runs = 100;
    for (int run = 0; run < runs; ++run) {
        SworSampler s(d, 64, 1000, 2000 + run);
        for (std::size_t i = 0; i < rows.size(); ++i) s.update(rows[i], static_cast<Timestamp>(i + 1));
        mean += dsfd::linalg::gram(s.estimate());
    }
    mean /= runs;
    EXPECT_LE((mean - exact).norm(), 0.05 * exact.norm());
}

TEST(LmFd, ShortStreamIsExact) {
    std::mt19937_64 rng(56);
    LmFd s(8, 0.25, 100);  // ell = 4
    std::vector<Vector> rows;
    for (int t = 1; t <= 3; ++t) {
        rows.push_back(oracle::random_unit(rng, 8));
        s.update(rows.back(), t);
    }
    EXPECT_LE((dsfd::linalg::gram(s.query()) - oracle::gram_of(rows, 8)).norm(), 1e-12);
    EXPECT_EQ(s.live_blocks(), 0u);
}

TEST(LmFd, OverflowMergesOnce) {
    LmFd s(4, 0.5, 1000);  // ell = 2, two blocks per level
    for (int t = 1; t <= 6; ++t) s.update(unit(4, t % 4), t);
    EXPECT_EQ(s.merges(), 1u);
    ASSERT_EQ(s.level_count(), 2u);
    EXPECT_EQ(s.level(0).size(), 1u);
    EXPECT_EQ(s.level(1).size(), 1u);
    EXPECT_EQ(s.level(1).front().rows, 4u);
}

TEST(LmFd, WindowErrorWithinBound) {
    std::mt19937_64 rng(57);
    LmFd s(16, 0.1, 1000);
    std::vector<Vector> rows;
    std::vector<Timestamp> ts;
    double worst = 0.0;
    for (int t = 1; t <= 5000; ++t) {
        rows.push_back(oracle::random_unit(rng, 16));
        ts.push_back(t);
        s.update(rows.back(), t);
        if (t % 100 != 0) continue;
        const DenseMatrix b = s.query();
        worst = std::max(worst, oracle::spectral_norm(oracle::window_gram(rows, ts, t, 1000, 16) -
                                                      b.transpose() * b));
    }
    EXPECT_LE(worst, 8 * 0.1 * 1000);
}
