#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>

namespace bsdegame {

/// Largest state or noise dimension handled by the lattice solvers.
inline constexpr std::size_t kMaxStateDim = 2;

/// Fixed-capacity real vector for states, noise increments and control points.
///
/// Capacity covers control points of dimension up to four; states and noise
/// never exceed kMaxStateDim. No heap allocation, so it is cheap to pass by
/// value through the inner loops of the backward solvers.
class Vec {
public:
    static constexpr std::size_t kCapacity = 4;

    Vec() = default;
    explicit Vec(std::size_t n, double fill = 0.0) : size_(n) {
        if (n > kCapacity) {
            throw std::length_error("Vec: dimension exceeds capacity");
        }
        std::fill_n(data_.begin(), n, fill);
    }
    Vec(std::initializer_list<double> values) : Vec(values.size()) {
        std::copy(values.begin(), values.end(), data_.begin());
    }
    explicit Vec(std::span<const double> values) : Vec(values.size()) {
        std::copy(values.begin(), values.end(), data_.begin());
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double* begin() noexcept { return data_.data(); }
    double* end() noexcept { return data_.data() + size_; }
    const double* begin() const noexcept { return data_.data(); }
    const double* end() const noexcept { return data_.data() + size_; }
    std::span<const double> span() const noexcept { return {data_.data(), size_}; }

    double norm() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < size_; ++i) s += data_[i] * data_[i];
        return std::sqrt(s);
    }

    bool all_finite() const noexcept {
        return std::all_of(begin(), end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const Vec& a, const Vec& b) noexcept {
        return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
    }

    Vec& operator+=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < size_; ++i) data_[i] += o.data_[i];
        return *this;
    }
    Vec& operator-=(const Vec& o) noexcept {
        for (std::size_t i = 0; i < size_; ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Vec& operator*=(double s) noexcept {
        for (std::size_t i = 0; i < size_; ++i) data_[i] *= s;
        return *this;
    }
    friend Vec operator+(Vec a, const Vec& b) noexcept { return a += b; }
    friend Vec operator-(Vec a, const Vec& b) noexcept { return a -= b; }
    friend Vec operator*(Vec a, double s) noexcept { return a *= s; }
    friend Vec operator*(double s, Vec a) noexcept { return a *= s; }

private:
    std::array<double, kCapacity> data_{};
    std::size_t size_ = 0;
};

/// Dense row-major matrix with at most kMaxStateDim rows and columns.
class Mat {
public:
    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols) {
        if (rows > kMaxStateDim || cols > kMaxStateDim) {
            throw std::length_error("Mat: dimension exceeds capacity");
        }
        data_.fill(0.0);
        std::fill_n(data_.begin(), rows * cols, fill);
    }

    static Mat identity(std::size_t n, double scale = 1.0) {
        Mat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = scale;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    /// Frobenius norm.
    double norm() const noexcept {
        double s = 0.0;
        for (std::size_t i = 0; i < rows_ * cols_; ++i) s += data_[i] * data_[i];
        return std::sqrt(s);
    }

    bool all_finite() const noexcept {
        for (std::size_t i = 0; i < rows_ * cols_; ++i) {
            if (!std::isfinite(data_[i])) return false;
        }
        return true;
    }

    /// this * v
    Vec apply(const Vec& v) const noexcept {
        Vec out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols_; ++c) s += (*this)(r, c) * v[c];
            out[r] = s;
        }
        return out;
    }

    /// thisᵀ * v
    Vec apply_transpose(const Vec& v) const noexcept {
        Vec out(cols_);
        for (std::size_t c = 0; c < cols_; ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < rows_; ++r) s += (*this)(r, c) * v[r];
            out[c] = s;
        }
        return out;
    }

    friend Mat operator-(const Mat& a, const Mat& b) {
        Mat out(a.rows_, a.cols_);
        for (std::size_t i = 0; i < a.rows_ * a.cols_; ++i) out.data_[i] = a.data_[i] - b.data_[i];
        return out;
    }

    friend bool operator==(const Mat& a, const Mat& b) noexcept {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::array<double, kMaxStateDim * kMaxStateDim> data_{};
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

enum class Player : int { First = 1, Second = 2 };

inline std::size_t player_index(Player p) noexcept { return p == Player::First ? 0 : 1; }
inline Player other(Player p) noexcept { return p == Player::First ? Player::Second : Player::First; }
inline Player player_from_int(int j) {
    if (j == 1) return Player::First;
    if (j == 2) return Player::Second;
    throw std::invalid_argument("player must be 1 or 2, got " + std::to_string(j));
}

/// Indices into the control sets U and V.
struct IndexPair {
    std::size_t u = 0;
    std::size_t v = 0;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
};

/// Caller error: bad arguments, mismatched shapes, out-of-range indices.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The numerics broke down (non-finite values, non-contracting fixed point).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bsdegame
