#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sessrl/errors.hpp"

namespace sessrl {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
struct Tensor2 {
    int rows = 0;
    int cols = 0;
    Vec data;

    Tensor2() = default;
    Tensor2(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return data.size(); }
    void fill(double v) { std::fill(data.begin(), data.end(), v); }
};

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError("shape mismatch: " + what);
}

/// y = A x
inline void matvec(const Tensor2& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double* w = a.row(r);
        double acc = 0.0;
        for (int c = 0; c < a.cols; ++c) acc += w[c] * x[c];
        y[r] = acc;
    }
}

/// y += A x
inline void matvec_acc(const Tensor2& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double* w = a.row(r);
        double acc = 0.0;
        for (int c = 0; c < a.cols; ++c) acc += w[c] * x[c];
        y[r] += acc;
    }
}

/// y += A^T x  (x has a.rows entries, y has a.cols entries)
inline void matvec_t_acc(const Tensor2& a, const double* x, double* y) {
    for (int r = 0; r < a.rows; ++r) {
        const double* w = a.row(r);
        const double xr = x[r];
        for (int c = 0; c < a.cols; ++c) y[c] += xr * w[c];
    }
}

/// A += u v^T
inline void outer_acc(Tensor2& a, const double* u, const double* v) {
    for (int r = 0; r < a.rows; ++r) {
        double* w = a.row(r);
        const double ur = u[r];
        for (int c = 0; c < a.cols; ++c) w[c] += ur * v[c];
    }
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

inline bool all_finite(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

inline bool all_finite(const Vec& v) { return all_finite(v.data(), v.size()); }
inline bool all_finite(const Tensor2& t) { return all_finite(t.data); }

} // namespace sessrl
