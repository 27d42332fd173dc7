#include "refed/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace refed::kernels {

const Table& scalar_table();
#if REFED_HAVE_AVX2
const Table& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if REFED_HAVE_AVX2
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    const char* env = std::getenv("REFED_KERNELS");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (env != nullptr && std::strcmp(env, "avx2") == 0) {
        if (!cpu_has_avx2()) {
            throw std::runtime_error("REFED_KERNELS=avx2 but AVX2/FMA is unavailable");
        }
        return Backend::avx2;
    }
    return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

std::atomic<const Table*>& current_table() {
    static std::atomic<const Table*> current{&table(initial_backend())};
    return current;
}

}  // namespace

const char* backend_name(Backend b) {
    return b == Backend::scalar ? "scalar" : "avx2";
}

bool backend_available(Backend b) {
    return b == Backend::scalar || cpu_has_avx2();
}

const Table& table(Backend b) {
#if REFED_HAVE_AVX2
    if (b == Backend::avx2) return avx2_table();
#else
    if (b == Backend::avx2) {
        throw std::invalid_argument("avx2 kernels not compiled into this binary");
    }
#endif
    return scalar_table();
}

Backend active_backend() {
    return current_table().load(std::memory_order_relaxed) == &scalar_table() ? Backend::scalar
                                                                              : Backend::avx2;
}

void set_backend(Backend b) {
    if (!backend_available(b)) {
        throw std::invalid_argument(std::string("kernel backend unavailable: ") + backend_name(b));
    }
    current_table().store(&table(b), std::memory_order_relaxed);
}

double dot(const double* a, const double* b, std::size_t n) {
    return current_table().load(std::memory_order_relaxed)->dot(a, b, n);
}
double sq_norm(const double* x, std::size_t n) {
    return current_table().load(std::memory_order_relaxed)->sq_norm(x, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
    current_table().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}
void matvec(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
    current_table().load(std::memory_order_relaxed)->matvec(w, x, y, rows, cols);
}
void matvec_t(const double* w, const double* x, double* y, std::size_t rows, std::size_t cols) {
    current_table().load(std::memory_order_relaxed)->matvec_t(w, x, y, rows, cols);
}
void ger(double alpha, const double* x, const double* y, double* a, std::size_t rows,
         std::size_t cols) {
    current_table().load(std::memory_order_relaxed)->ger(alpha, x, y, a, rows, cols);
}
void prox_sgd_step(double* v, const double* g, const double* anchor, double eta, double pull,
                   std::size_t n) {
    current_table().load(std::memory_order_relaxed)->prox_sgd_step(v, g, anchor, eta, pull, n);
}

}  // namespace refed::kernels
