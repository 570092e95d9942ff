// Sketch the last 1000 rows of a random unit-norm stream and compare the
// estimate with the exact window covariance.

#include <dsfd/baselines/exact_window.hpp>
#include <dsfd/sliding_fd.hpp>

#include <iostream>
#include <random>

int main() {
    const dsfd::Index d = 32;
    const double eps = 0.1;
    const dsfd::Timestamp window = 1000;

    dsfd::FastSlidingFd sketch(dsfd::SlidingFdConfig::for_epsilon(d, eps, window));
    dsfd::ExactWindow exact(d, window);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> normal;
    for (dsfd::Timestamp t = 1; t <= 5000; ++t) {
        dsfd::Vector a(d);
        for (dsfd::Index i = 0; i < d; ++i) a(i) = normal(rng);
        a.normalize();
        sketch.update(a);
        exact.update(a, t);
    }

    const dsfd::DenseMatrix b = sketch.query_compressed();
    const double err = dsfd::linalg::spectral_norm_sym(exact.gram() - dsfd::linalg::gram(b));
    std::cout << "sketch rows held: " << sketch.held_rows() << " (window holds " << exact.size() << ")\n"
              << "covariance error: " << err << " (bound " << 4 * eps * static_cast<double>(window) << ")\n"
              << "relative error:   " << err / exact.frobenius2() << '\n';
}
