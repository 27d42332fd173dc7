#pragma once

#include <cstddef>

// Double-precision kernels behind the model math. A scalar reference
// implementation always exists; an AVX2+FMA variant is compiled on x86-64 and
// selected at runtime when the CPU supports it (REFED_KERNELS=scalar|avx2|auto
// overrides). Elementwise kernels (axpy, ger, matvec_t, prox_sgd_step) are
// bit-identical across backends; reduction kernels (dot, sq_norm, matvec)
// differ only in summation order.
namespace refed::kernels {

enum class Backend { scalar, avx2 };

const char* backend_name(Backend b);
bool backend_available(Backend b);
Backend active_backend();
// Throws std::invalid_argument if the backend is unavailable on this machine.
void set_backend(Backend b);

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sq_norm)(const double*, std::size_t);
    // y += alpha * x
    void (*axpy)(double, const double*, double*, std::size_t);
    // y = W x, W row-major (rows x cols)
    void (*matvec)(const double*, const double*, double*, std::size_t, std::size_t);
    // y = W^T x, W row-major (rows x cols), y has cols entries
    void (*matvec_t)(const double*, const double*, double*, std::size_t, std::size_t);
    // A += alpha * x y^T, A row-major (rows x cols)
    void (*ger)(double, const double*, const double*, double*, std::size_t, std::size_t);
    // v[i] -= eta * g[i] + pull * (v[i] - anchor[i])
    void (*prox_sgd_step)(double*, const double*, const double*, double, double, std::size_t);
};

// Direct table access for equivalence tests.
const Table& table(Backend b);

double dot(const double* a, const double* b, std::size_t n);
double sq_norm(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void matvec(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
void matvec_t(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols);
void ger(double alpha, const double* x, const double* y, double* a, std::size_t rows, std::size_t cols);
void prox_sgd_step(double* v, const double* g, const double* anchor, double eta, double pull,
                   std::size_t n);

}  // namespace refed::kernels
