#pragma once

// Replays a stream through one sketch and the exact window in lockstep,
// queries every `query_every` rows and records the covariance error.
// The sketch never sees the oracle: measurement flows one way.

#include <dsfd/baselines/exact_window.hpp>
#include <dsfd/baselines/lmfd.hpp>
#include <dsfd/baselines/sampling.hpp>
#include <dsfd/errors.hpp>
#include <dsfd/layered.hpp>
#include <dsfd/linalg.hpp>
#include <dsfd/sliding_fd.hpp>
#include <dsfd/streamgen.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dsfd::bench {

enum class Algo { dsfd, fast_dsfd, seq_dsfd, time_dsfd, lmfd, swr, swor, exact };

inline const char* algo_name(Algo a) {
    switch (a) {
        case Algo::dsfd: return "dsfd";
        case Algo::fast_dsfd: return "fast-dsfd";
        case Algo::seq_dsfd: return "seq-dsfd";
        case Algo::time_dsfd: return "time-dsfd";
        case Algo::lmfd: return "lmfd";
        case Algo::swr: return "swr";
        case Algo::swor: return "swor";
        case Algo::exact: return "exact";
    }
    return "?";
}

inline Algo parse_algo(const std::string& name) {
    for (Algo a : {Algo::dsfd, Algo::fast_dsfd, Algo::seq_dsfd, Algo::time_dsfd, Algo::lmfd, Algo::swr,
                   Algo::swor, Algo::exact}) {
        if (name == algo_name(a)) return a;
    }
    throw ConfigError("unknown algorithm '" + name + "'");
}

/// Sequence-window algorithms index rows 1, 2, 3, ... and ignore stream timestamps.
inline bool uses_row_index(Algo a) { return a == Algo::dsfd || a == Algo::fast_dsfd || a == Algo::seq_dsfd; }

struct SyntheticSource {
    std::size_t n = 0;
    Index dim = 0;
    double zeta = 10.0;
};

struct CsvSource {
    std::string path;
    std::optional<std::size_t> ts_column;
};

struct AdversarialSource {
    Index dim = 32;
};

struct StreamSpec {
    std::variant<SyntheticSource, CsvSource, AdversarialSource> source = SyntheticSource{};
    /// Replace timestamps with a Poisson arrival process of this rate.
    std::optional<double> poisson_lambda;
};

struct RunConfig {
    Algo algo = Algo::dsfd;
    StreamSpec stream;
    Timestamp window = 0;
    double epsilon = 0.1;
    double beta = 1.0;
    std::optional<double> big_r;
    std::size_t query_every = 1;
    std::uint64_t seed = 0;
    /// Query DS-FD with the ell-row compressed estimator (default) or the raw stack.
    bool compressed_query = true;
    /// Rescale every non-zero row to unit norm on ingestion.
    bool normalize = false;
    /// Record wall-clock timings (makes reports non-reproducible).
    bool timing = false;

    void validate() const {
        if (window < 1) throw ConfigError("--window must be >= 1");
        if (!(epsilon > 0.0) || epsilon > 1.0) throw ConfigError("--epsilon must lie in (0, 1]");
        if (!(beta > 0.0)) throw ConfigError("--beta must be > 0");
        if (big_r && !(*big_r >= 1.0)) throw ConfigError("--R must be >= 1");
        if (query_every < 1) throw ConfigError("--query-every must be >= 1");
        if (stream.poisson_lambda && !(*stream.poisson_lambda > 0.0)) throw ConfigError("--poisson must be > 0");
    }
};

struct MaterializedStream {
    std::vector<StreamRow> rows;
    Index dim = 0;
    double min_norm2 = 0.0;  // smallest non-zero squared norm
    double max_norm2 = 0.0;
};

inline void scan_norms(MaterializedStream& s) {
    s.min_norm2 = std::numeric_limits<double>::infinity();
    s.max_norm2 = 0.0;
    for (const auto& r : s.rows) {
        const double n2 = r.values.squaredNorm();
        if (n2 > 0.0) s.min_norm2 = std::min(s.min_norm2, n2);
        s.max_norm2 = std::max(s.max_norm2, n2);
    }
    if (!std::isfinite(s.min_norm2)) s.min_norm2 = 0.0;
}

/// Generates or loads the whole stream. Sources get independent seeds derived from `seed`.
inline MaterializedStream materialize(const RunConfig& config) {
    MaterializedStream out;
    const auto& src = config.stream.source;
    if (const auto* syn = std::get_if<SyntheticSource>(&src)) {
        SyntheticStream gen(syn->n, syn->dim, syn->zeta, config.seed);
        while (auto r = gen.next()) out.rows.push_back(std::move(*r));
        out.dim = syn->dim;
    } else if (const auto* csv = std::get_if<CsvSource>(&src)) {
        out.rows = load_csv(csv->path, csv->ts_column);
        if (out.rows.empty()) throw InputError("CSV stream " + csv->path + " has no rows");
        out.dim = out.rows.front().values.size();
    } else {
        const auto& adv = std::get<AdversarialSource>(src);
        const Index ell = sketch_rows_for(config.epsilon, adv.dim);
        AdversarialStream gen(adv.dim, ell, config.window, config.big_r.value_or(16.0), config.seed + 2);
        while (auto r = gen.next()) out.rows.push_back(std::move(*r));
        out.dim = adv.dim;
    }
    if (config.stream.poisson_lambda) {
        PoissonTimestamps ts(*config.stream.poisson_lambda, config.seed + 1);
        for (auto& r : out.rows) r.ts = ts.next();
    }
    if (uses_row_index(config.algo)) {
        Timestamp i = 0;
        for (auto& r : out.rows) r.ts = ++i;
    }
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        if (out.rows[i].ts < 1) {
            throw InputError("row " + std::to_string(i + 1) + " has timestamp " + std::to_string(out.rows[i].ts) +
                             "; timestamps must be >= 1");
        }
    }
    if (config.normalize) {
        for (auto& r : out.rows) {
            const double n = r.values.norm();
            if (n > 0.0) r.values /= n;
        }
    }
    scan_norms(out);
    return out;
}

/// Interface the harness drives. `estimate_gram` returns B^T B of the current estimate.
class SketchUnderTest {
public:
    virtual ~SketchUnderTest() = default;
    virtual void update(const Vector& a, Timestamp ts) = 0;
    virtual DenseMatrix estimate_gram() = 0;
    virtual std::size_t held_rows() const = 0;
    /// True when the last estimate could not cover the whole window.
    virtual bool coverage_incomplete() const { return false; }
};

template <class Residual>
class SlidingFdUnderTest final : public SketchUnderTest {
public:
    SlidingFdUnderTest(const SlidingFdConfig& c, bool compressed) : sketch_(c), compressed_(compressed) {}
    void update(const Vector& a, Timestamp) override { sketch_.update(a); }
    DenseMatrix estimate_gram() override {
        return linalg::gram(compressed_ ? sketch_.query_compressed() : sketch_.query_rows());
    }
    std::size_t held_rows() const override { return sketch_.held_rows(); }

private:
    BasicSlidingFd<Residual> sketch_;
    bool compressed_;
};

class LayeredUnderTest final : public SketchUnderTest {
public:
    explicit LayeredUnderTest(const LayeredConfig& c) : sketch_(c) {}
    void update(const Vector& a, Timestamp ts) override { sketch_.update(a, ts); }
    DenseMatrix estimate_gram() override {
        auto q = sketch_.query();
        incomplete_ = !q.covered;
        return linalg::gram(q.sketch);
    }
    std::size_t held_rows() const override { return sketch_.held_rows(); }
    bool coverage_incomplete() const override { return incomplete_; }

private:
    LayeredSlidingFd<FastResidual> sketch_;
    bool incomplete_ = false;
};

class LmFdUnderTest final : public SketchUnderTest {
public:
    LmFdUnderTest(Index dim, double eps, Timestamp window) : sketch_(dim, eps, window) {}
    void update(const Vector& a, Timestamp ts) override { sketch_.update(a, ts); }
    DenseMatrix estimate_gram() override { return linalg::gram(sketch_.query()); }
    std::size_t held_rows() const override { return sketch_.held_rows(); }

private:
    LmFd sketch_;
};

template <class Sampler>
class SamplerUnderTest final : public SketchUnderTest {
public:
    SamplerUnderTest(Index dim, std::size_t samples, Timestamp window, std::uint64_t seed)
        : sketch_(dim, samples, window, seed) {}
    void update(const Vector& a, Timestamp ts) override { sketch_.update(a, ts); }
    DenseMatrix estimate_gram() override { return linalg::gram(sketch_.estimate()); }
    std::size_t held_rows() const override { return sketch_.held_rows(); }

private:
    Sampler sketch_;
};

class ExactUnderTest final : public SketchUnderTest {
public:
    ExactUnderTest(Index dim, Timestamp window) : window_(dim, window) {}
    void update(const Vector& a, Timestamp ts) override { window_.update(a, ts); }
    DenseMatrix estimate_gram() override { return window_.gram(); }
    std::size_t held_rows() const override { return window_.size(); }

private:
    ExactWindow window_;
};

/// Number of samples used by SWR/SWOR: ceil(1/eps^2).
inline std::size_t sample_count(double epsilon) {
    return static_cast<std::size_t>(std::ceil(1.0 / (epsilon * epsilon) - 1e-9));
}

struct PreparedRun {
    std::unique_ptr<SketchUnderTest> sketch;
    double big_r = 1.0;  // R handed to layered sketches (1 for the rest)
};

/// Builds the sketch for config.algo, rescaling the stream in place when a
/// layered sketch needs ‖a‖² >= 1 and no R was supplied.
inline PreparedRun prepare(const RunConfig& config, MaterializedStream& stream) {
    PreparedRun out;
    const Index d = stream.dim;
    switch (config.algo) {
        case Algo::dsfd:
            out.sketch = std::make_unique<SlidingFdUnderTest<EagerResidual>>(
                SlidingFdConfig::for_epsilon(d, config.epsilon, config.window), config.compressed_query);
            break;
        case Algo::fast_dsfd:
            out.sketch = std::make_unique<SlidingFdUnderTest<FastResidual>>(
                SlidingFdConfig::for_epsilon(d, config.epsilon, config.window), config.compressed_query);
            break;
        case Algo::seq_dsfd:
        case Algo::time_dsfd: {
            if (config.big_r) {
                out.big_r = *config.big_r;
            } else {
                if (stream.min_norm2 <= 0.0) throw InputError("stream has no non-zero rows");
                const double scale = 1.0 / std::sqrt(stream.min_norm2);
                for (auto& r : stream.rows) r.values *= scale;
                scan_norms(stream);
                out.big_r = std::max(1.0, stream.max_norm2);
            }
            LayeredConfig lc;
            lc.mode = config.algo == Algo::seq_dsfd ? WindowMode::sequence : WindowMode::time;
            lc.dim = d;
            lc.epsilon = config.epsilon;
            lc.window = config.window;
            lc.big_r = out.big_r;
            lc.beta = config.beta;
            out.sketch = std::make_unique<LayeredUnderTest>(lc);
            break;
        }
        case Algo::lmfd:
            out.sketch = std::make_unique<LmFdUnderTest>(d, config.epsilon, config.window);
            break;
        case Algo::swr:
            out.sketch = std::make_unique<SamplerUnderTest<SwrSampler>>(d, sample_count(config.epsilon),
                                                                        config.window, config.seed + 3);
            break;
        case Algo::swor:
            out.sketch = std::make_unique<SamplerUnderTest<SworSampler>>(d, sample_count(config.epsilon),
                                                                         config.window, config.seed + 3);
            break;
        case Algo::exact:
            out.sketch = std::make_unique<ExactUnderTest>(d, config.window);
            break;
    }
    return out;
}

struct QueryRecord {
    std::size_t step = 0;
    Timestamp ts = 0;
    double abs_error = 0.0;
    double window_mass = 0.0;
    double relative_error = 0.0;
    std::size_t sketch_rows = 0;
};

struct Aggregates {
    std::size_t max_sketch_rows = 0;
    double avg_relative_error = 0.0;
    double max_relative_error = 0.0;
    double max_abs_error = 0.0;
    std::optional<double> mean_update_us;
    std::optional<double> mean_query_us;
};

struct Report {
    RunConfig config;
    std::size_t stream_rows = 0;
    Index dim = 0;
    double norm_ratio = 0.0;  // max / min non-zero squared norm of the stream as replayed
    double big_r = 1.0;
    std::vector<QueryRecord> records;
    std::optional<Aggregates> aggregates;
    bool coverage_incomplete = false;
};

/// Covariance error ‖G_exact - G_est‖₂ and its ratio to ‖A_W‖_F². For an
/// empty window the ratio falls back to the absolute error.
inline std::pair<double, double> covariance_error(const DenseMatrix& exact, double frob, const DenseMatrix& estimate) {
    const double err = linalg::spectral_norm_sym(exact - estimate);
    return {err, frob > 0.0 ? err / frob : err};
}

inline Report run_stream(const RunConfig& config, MaterializedStream stream) {
    config.validate();
    Report report;
    report.config = config;
    PreparedRun run = prepare(config, stream);
    report.stream_rows = stream.rows.size();
    report.dim = stream.dim;
    report.norm_ratio = stream.min_norm2 > 0.0 ? stream.max_norm2 / stream.min_norm2 : 0.0;
    report.big_r = run.big_r;

    ExactWindow oracle(stream.dim, config.window);
    using clock = std::chrono::steady_clock;
    double update_ns = 0.0;
    double query_ns = 0.0;
    std::size_t max_rows = 0;
    double rel_sum = 0.0;
    Aggregates agg;

    std::size_t step = 0;
    for (const auto& row : stream.rows) {
        ++step;
        const auto t0 = clock::now();
        try {
            run.sketch->update(row.values, row.ts);
        } catch (const InputError& e) {
            throw InputError("step " + std::to_string(step) + ": " + e.what());
        }
        const auto t1 = clock::now();
        update_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
        oracle.update(row.values, row.ts);
        max_rows = std::max(max_rows, run.sketch->held_rows());

        if (step % config.query_every != 0) continue;
        const auto q0 = clock::now();
        const DenseMatrix estimate = run.sketch->estimate_gram();
        const auto q1 = clock::now();
        query_ns += std::chrono::duration<double, std::nano>(q1 - q0).count();
        if (run.sketch->coverage_incomplete()) report.coverage_incomplete = true;

        const auto [err, rel] = covariance_error(oracle.gram(), oracle.frobenius2(), estimate);
        QueryRecord rec;
        rec.step = step;
        rec.ts = row.ts;
        rec.abs_error = err;
        rec.window_mass = oracle.frobenius2();
        rec.relative_error = rel;
        rec.sketch_rows = run.sketch->held_rows();
        report.records.push_back(rec);
        rel_sum += rel;
        agg.max_relative_error = std::max(agg.max_relative_error, rel);
        agg.max_abs_error = std::max(agg.max_abs_error, err);
    }

    if (!report.records.empty()) {
        agg.max_sketch_rows = max_rows;
        agg.avg_relative_error = rel_sum / static_cast<double>(report.records.size());
        if (config.timing) {
            agg.mean_update_us = update_ns / 1e3 / static_cast<double>(std::max<std::size_t>(step, 1));
            agg.mean_query_us = query_ns / 1e3 / static_cast<double>(report.records.size());
        }
        report.aggregates = agg;
    }
    return report;
}

inline Report run_stream(const RunConfig& config) {
    config.validate();
    return run_stream(config, materialize(config));
}

}  // namespace dsfd::bench
