#include "refed/kernels.hpp"

namespace refed::kernels {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sq_norm_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_scalar(const double* w, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_scalar(w + r * cols, x, cols);
    }
}

void matvec_t_scalar(const double* w, const double* x, double* y, std::size_t rows,
                     std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double xr = x[r];
        const double* row = w + r * cols;
        for (std::size_t j = 0; j < cols; ++j) y[j] += row[j] * xr;
    }
}

void ger_scalar(double alpha, const double* x, const double* y, double* a, std::size_t rows,
                std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double ax = alpha * x[r];
        double* row = a + r * cols;
        for (std::size_t j = 0; j < cols; ++j) row[j] += ax * y[j];
    }
}

void prox_sgd_step_scalar(double* v, const double* g, const double* anchor, double eta,
                          double pull, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        v[i] -= eta * g[i] + pull * (v[i] - anchor[i]);
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t{dot_scalar,      sq_norm_scalar, axpy_scalar,         matvec_scalar,
                         matvec_t_scalar, ger_scalar,     prox_sgd_step_scalar};
    return t;
}

}  // namespace refed::kernels
