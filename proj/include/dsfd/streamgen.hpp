#pragma once

// Stream sources: the noisy low-rank synthetic generator, CSV replay, Poisson
// arrival timestamps and an adversarial block stream for stress tests.
// Every generator is deterministic for a fixed seed.

#include <dsfd/errors.hpp>
#include <dsfd/linalg.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dsfd {

struct StreamRow {
    Vector values;
    Timestamp ts = 0;
};

/// Rows A = S D U + noise / zeta, one row at a time. S and the noise are
/// standard normal, D_ii = 1 - (i-1)/d and U is a seeded random orthonormal basis.
class SyntheticStream {
public:
    SyntheticStream(std::size_t n, Index dim, double zeta, std::uint64_t seed)
        : n_(n), dim_(dim), zeta_(zeta), signal_rng_(seed), noise_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
        if (n < 1) throw ConfigError("synthetic stream needs n >= 1");
        if (dim < 1) throw ConfigError("synthetic stream needs d >= 1");
        if (!(zeta > 0.0)) throw ConfigError("zeta must be > 0");

        std::mt19937_64 basis_rng(seed ^ 0xd1b54a32d192ed03ULL);
        std::normal_distribution<double> normal;
        Eigen::MatrixXd gauss(dim, dim);
        for (Index r = 0; r < dim; ++r) {
            for (Index c = 0; c < dim; ++c) gauss(r, c) = normal(basis_rng);
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
        basis_ = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);

        scales_.resize(dim);
        for (Index i = 0; i < dim; ++i) scales_(i) = 1.0 - static_cast<double>(i) / static_cast<double>(dim);
    }

    const DenseMatrix& basis() const noexcept { return basis_; }
    const Vector& scales() const noexcept { return scales_; }
    std::size_t size() const noexcept { return n_; }

    std::optional<StreamRow> next() {
        if (emitted_ == n_) return std::nullopt;
        std::normal_distribution<double> normal;
        Vector s(dim_);
        for (Index i = 0; i < dim_; ++i) s(i) = normal(signal_rng_);
        Vector row = s.cwiseProduct(scales_) * basis_;
        Vector noise(dim_);
        for (Index i = 0; i < dim_; ++i) noise(i) = normal(noise_rng_);
        if (std::isfinite(zeta_)) row += noise / zeta_;
        ++emitted_;
        return StreamRow{std::move(row), static_cast<Timestamp>(emitted_)};
    }

private:
    std::size_t n_;
    Index dim_;
    double zeta_;
    std::mt19937_64 signal_rng_;
    std::mt19937_64 noise_rng_;
    DenseMatrix basis_;
    Vector scales_;
    std::size_t emitted_ = 0;
};

/// Arrival times ceil(sum of Exp(lambda) gaps): integers, non-decreasing.
class PoissonTimestamps {
public:
    PoissonTimestamps(double lambda, std::uint64_t seed) : gap_(lambda), rng_(seed) {
        if (!(lambda > 0.0)) throw ConfigError("Poisson rate lambda must be > 0");
    }

    Timestamp next() {
        clock_ += gap_(rng_);
        return std::max<Timestamp>(1, static_cast<Timestamp>(std::ceil(clock_)));
    }

private:
    std::exponential_distribution<double> gap_;
    std::mt19937_64 rng_;
    double clock_ = 0.0;
};

inline std::vector<Timestamp> gen_poisson_ts(std::size_t n, double lambda, std::uint64_t seed) {
    PoissonTimestamps gen(lambda, seed);
    std::vector<Timestamp> out(n);
    for (auto& t : out) t = gen.next();
    return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

/// Comma-separated decimal rows. With a timestamp column, that column holds
/// non-decreasing integers and is removed from the row; without one rows get
/// ts = 1, 2, 3, ...
class CsvStream {
public:
    explicit CsvStream(const std::string& path, std::optional<std::size_t> ts_column = std::nullopt)
        : owned_(std::make_unique<std::ifstream>(path)), in_(owned_.get()), ts_column_(ts_column) {
        if (!*owned_) throw IoError("cannot open " + path);
    }

    CsvStream(std::istream& in, std::optional<std::size_t> ts_column = std::nullopt)
        : in_(&in), ts_column_(ts_column) {}

    std::optional<StreamRow> next() {
        std::string line;
        while (std::getline(*in_, line)) {
            ++line_no_;
            if (detail::trim(line).empty()) continue;
            return parse(line);
        }
        return std::nullopt;
    }

private:
    StreamRow parse(const std::string& line) {
        std::vector<double> cells;
        std::optional<Timestamp> ts;
        std::size_t col = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            const std::string_view cell = detail::trim(rest.substr(0, comma));
            if (ts_column_ && col == *ts_column_) {
                Timestamp value = 0;
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
                    throw FormatError(line_no_, "timestamp cell '" + std::string(cell) + "' is not an integer");
                }
                ts = value;
            } else {
                double value = 0.0;
                const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
                if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() ||
                    !std::isfinite(value)) {
                    throw FormatError(line_no_, "cell " + std::to_string(col + 1) + " '" + std::string(cell) +
                                                    "' is not a finite number");
                }
                cells.push_back(value);
            }
            ++col;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (ts_column_ && !ts) throw FormatError(line_no_, "missing timestamp column");
        if (width_ == 0) {
            width_ = cells.size();
            if (width_ == 0) throw FormatError(line_no_, "row has no data columns");
        } else if (cells.size() != width_) {
            throw FormatError(line_no_, "expected " + std::to_string(width_) + " data columns, got " +
                                            std::to_string(cells.size()));
        }
        Timestamp stamp = ts ? *ts : last_ts_ + 1;
        if (ts && stamp < last_ts_) {
            throw FormatError(line_no_, "timestamp " + std::to_string(stamp) + " decreases (previous " +
                                            std::to_string(last_ts_) + ")");
        }
        last_ts_ = stamp;
        Vector row = Eigen::Map<const Vector>(cells.data(), static_cast<Index>(cells.size()));
        return StreamRow{std::move(row), stamp};
    }

    std::unique_ptr<std::ifstream> owned_;
    std::istream* in_;
    std::optional<std::size_t> ts_column_;
    std::size_t line_no_ = 0;
    std::size_t width_ = 0;
    Timestamp last_ts_ = 0;
};

inline std::vector<StreamRow> load_csv(const std::string& path, std::optional<std::size_t> ts_column = std::nullopt) {
    CsvStream stream(path, ts_column);
    std::vector<StreamRow> rows;
    while (auto r = stream.next()) rows.push_back(std::move(*r));
    return rows;
}

/// Stress stream shaped like the lower-bound construction: blocks i = L..0
/// (L = ceil(log2 R)), block i built from max(1, ell/4) random orthonormal rows
/// carrying total mass 2^i N / 4, rows split into equal copies so every
/// squared norm stays <= R, followed by N one-hot rows.
class AdversarialStream {
public:
    AdversarialStream(Index dim, Index ell, Timestamp window, double big_r, std::uint64_t seed) {
        if (dim < 1 || ell < 1) throw ConfigError("adversarial stream needs d >= 1 and ell >= 1");
        if (!(big_r >= 1.0)) throw ConfigError("adversarial stream needs R >= 1");
        const double need = 0.5 * static_cast<double>(ell) * std::log2(static_cast<double>(ell) * big_r);
        if (static_cast<double>(window) < need) {
            throw ConfigError("adversarial stream needs N >= (ell/2) log2(ell R) = " + std::to_string(need));
        }
        const Index per_block = std::max<Index>(1, ell / 4);
        if (per_block > dim) throw ConfigError("adversarial stream needs d >= ell/4");
        if (static_cast<double>(window) / (4.0 * static_cast<double>(per_block)) < 1.0) {
            throw ConfigError("adversarial stream rows would fall below unit norm");
        }
        levels_ = big_r <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(big_r) - 1e-12));

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal;
        for (int i = levels_; i >= 0; --i) {
            Eigen::MatrixXd gauss(dim, per_block);
            for (Index r = 0; r < dim; ++r) {
                for (Index c = 0; c < per_block; ++c) gauss(r, c) = normal(rng);
            }
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
            const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, per_block);
            const double row_mass = std::ldexp(static_cast<double>(window), i) / (4.0 * static_cast<double>(per_block));
            const auto copies = static_cast<std::size_t>(std::max(1.0, std::ceil(row_mass / big_r - 1e-12)));
            const double scale = std::sqrt(row_mass / static_cast<double>(copies));
            for (Index c = 0; c < per_block; ++c) {
                const Vector row = q.col(c).transpose() * scale;
                for (std::size_t k = 0; k < copies; ++k) rows_.push_back(row);
            }
            block_ends_.push_back(rows_.size());
        }
        for (Timestamp t = 0; t < window; ++t) {
            Vector e = Vector::Zero(dim);
            e(static_cast<Index>(t % dim)) = 1.0;
            rows_.push_back(std::move(e));
        }
    }

    int top_block() const noexcept { return levels_; }
    /// End offsets of the blocks, in emission order (block L first).
    const std::vector<std::size_t>& block_ends() const noexcept { return block_ends_; }
    const std::vector<Vector>& rows() const noexcept { return rows_; }

    std::optional<StreamRow> next() {
        if (at_ == rows_.size()) return std::nullopt;
        ++at_;
        return StreamRow{rows_[at_ - 1], static_cast<Timestamp>(at_)};
    }

private:
    int levels_ = 0;
    std::vector<Vector> rows_;
    std::vector<std::size_t> block_ends_;
    std::size_t at_ = 0;
};

}  // namespace dsfd
