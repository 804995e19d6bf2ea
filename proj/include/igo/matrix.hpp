#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>

#include "igo/error.hpp"

namespace igo {

/// Fixed-size column vector. Dimensions above 4 are not supported; the
/// library works with third-order plants and leaves one spare dimension.
template <int N>
class Vector {
    static_assert(N >= 1 && N <= 4, "small-dimension kernel only");

  public:
    constexpr Vector() = default;

    constexpr Vector(std::initializer_list<double> xs) {
        int i = 0;
        for (double x : xs) {
            if (i >= N) break;
            v_[i++] = x;
        }
    }

    static constexpr Vector zero() { return Vector{}; }

    static constexpr Vector unit(int i) {
        Vector e;
        e.v_[i] = 1.0;
        return e;
    }

    constexpr double& operator[](int i) { return v_[i]; }
    constexpr double operator[](int i) const { return v_[i]; }

    static constexpr int size() { return N; }

    friend constexpr Vector operator+(Vector a, const Vector& b) {
        for (int i = 0; i < N; ++i) a.v_[i] += b.v_[i];
        return a;
    }
    friend constexpr Vector operator-(Vector a, const Vector& b) {
        for (int i = 0; i < N; ++i) a.v_[i] -= b.v_[i];
        return a;
    }
    friend constexpr Vector operator*(double s, Vector a) {
        for (int i = 0; i < N; ++i) a.v_[i] *= s;
        return a;
    }
    friend constexpr Vector operator*(Vector a, double s) { return s * a; }
    friend constexpr Vector operator-(Vector a) { return -1.0 * a; }

    [[nodiscard]] double dot(const Vector& b) const {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += v_[i] * b.v_[i];
        return s;
    }

    [[nodiscard]] double norm2() const { return std::sqrt(dot(*this)); }

    [[nodiscard]] double norm_inf() const {
        double m = 0.0;
        for (int i = 0; i < N; ++i) m = std::max(m, std::abs(v_[i]));
        return m;
    }

    [[nodiscard]] bool all_finite() const {
        for (int i = 0; i < N; ++i)
            if (!std::isfinite(v_[i])) return false;
        return true;
    }

  private:
    std::array<double, N> v_{};
};

/// Dense square matrix of fixed small dimension, row-major.
template <int N>
class SmallMatrix {
    static_assert(N >= 1 && N <= 4, "small-dimension kernel only");

  public:
    constexpr SmallMatrix() = default;

    static constexpr SmallMatrix zero() { return SmallMatrix{}; }

    static constexpr SmallMatrix identity() {
        SmallMatrix m;
        for (int i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }

    constexpr double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * N + j]; }
    constexpr double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * N + j]; }

    static constexpr int size() { return N; }

    friend constexpr SmallMatrix operator+(SmallMatrix a, const SmallMatrix& b) {
        for (std::size_t k = 0; k < N * N; ++k) a.a_[k] += b.a_[k];
        return a;
    }
    friend constexpr SmallMatrix operator-(SmallMatrix a, const SmallMatrix& b) {
        for (std::size_t k = 0; k < N * N; ++k) a.a_[k] -= b.a_[k];
        return a;
    }
    friend constexpr SmallMatrix operator*(double s, SmallMatrix a) {
        for (std::size_t k = 0; k < N * N; ++k) a.a_[k] *= s;
        return a;
    }
    friend constexpr SmallMatrix operator*(SmallMatrix a, double s) { return s * a; }

    friend constexpr SmallMatrix operator*(const SmallMatrix& a, const SmallMatrix& b) {
        SmallMatrix c;
        for (int i = 0; i < N; ++i)
            for (int k = 0; k < N; ++k) {
                const double aik = a(i, k);
                for (int j = 0; j < N; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend constexpr Vector<N> operator*(const SmallMatrix& a, const Vector<N>& x) {
        Vector<N> y;
        for (int i = 0; i < N; ++i) {
            double s = 0.0;
            for (int j = 0; j < N; ++j) s += a(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    [[nodiscard]] constexpr Vector<N> col(int j) const {
        Vector<N> c;
        for (int i = 0; i < N; ++i) c[i] = (*this)(i, j);
        return c;
    }

    [[nodiscard]] constexpr Vector<N> row(int i) const {
        Vector<N> r;
        for (int j = 0; j < N; ++j) r[j] = (*this)(i, j);
        return r;
    }

    [[nodiscard]] double trace() const {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += (*this)(i, i);
        return s;
    }

    /// Maximum absolute column sum.
    [[nodiscard]] double norm_1() const {
        double m = 0.0;
        for (int j = 0; j < N; ++j) {
            double s = 0.0;
            for (int i = 0; i < N; ++i) s += std::abs((*this)(i, j));
            m = std::max(m, s);
        }
        return m;
    }

    [[nodiscard]] double norm_inf() const {
        double m = 0.0;
        for (int i = 0; i < N; ++i) {
            double s = 0.0;
            for (int j = 0; j < N; ++j) s += std::abs((*this)(i, j));
            m = std::max(m, s);
        }
        return m;
    }

    [[nodiscard]] bool all_finite() const {
        for (std::size_t k = 0; k < N * N; ++k)
            if (!std::isfinite(a_[k])) return false;
        return true;
    }

    [[nodiscard]] bool lower_triangular() const {
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j)
                if ((*this)(i, j) != 0.0) return false;
        return true;
    }

    [[nodiscard]] bool upper_triangular() const {
        for (int i = 1; i < N; ++i)
            for (int j = 0; j < i; ++j)
                if ((*this)(i, j) != 0.0) return false;
        return true;
    }

  private:
    std::array<double, static_cast<std::size_t>(N) * N> a_{};
};

using Vec3 = Vector<3>;
using Mat3 = SmallMatrix<3>;

}  // namespace igo
