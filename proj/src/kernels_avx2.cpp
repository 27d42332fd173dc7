#include "refed/kernels.hpp"

#include <immintrin.h>

namespace refed::kernels {

namespace {

inline double hsum4(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    }
    double sum = hsum4(acc);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

double sq_norm_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(x + i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double sum = hsum4(acc);
    for (; i < n; ++i) sum += x[i] * x[i];
    return sum;
}

// Elementwise kernels use mul+add instead of fmadd so they round exactly like
// the scalar reference.
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* w, const double* x, double* y, std::size_t rows,
                 std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        y[r] = dot_avx2(w + r * cols, x, cols);
    }
}

void matvec_t_avx2(const double* w, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
    std::size_t j = 0;
    const __m256d zero = _mm256_setzero_pd();
    for (; j + 4 <= cols; j += 4) _mm256_storeu_pd(y + j, zero);
    for (; j < cols; ++j) y[j] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double xr = x[r];
        const __m256d vx = _mm256_set1_pd(xr);
        const double* row = w + r * cols;
        std::size_t i = 0;
        for (; i + 4 <= cols; i += 4) {
            const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(row + i), vx);
            _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
        }
        for (; i < cols; ++i) y[i] += row[i] * xr;
    }
}

void ger_avx2(double alpha, const double* x, const double* y, double* a, std::size_t rows,
              std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double ax = alpha * x[r];
        const __m256d vax = _mm256_set1_pd(ax);
        double* row = a + r * cols;
        std::size_t j = 0;
        for (; j + 4 <= cols; j += 4) {
            const __m256d prod = _mm256_mul_pd(vax, _mm256_loadu_pd(y + j));
            _mm256_storeu_pd(row + j, _mm256_add_pd(_mm256_loadu_pd(row + j), prod));
        }
        for (; j < cols; ++j) row[j] += ax * y[j];
    }
}

void prox_sgd_step_avx2(double* v, const double* g, const double* anchor, double eta,
                        double pull, std::size_t n) {
    const __m256d veta = _mm256_set1_pd(eta);
    const __m256d vpull = _mm256_set1_pd(pull);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vv = _mm256_loadu_pd(v + i);
        const __m256d vg = _mm256_loadu_pd(g + i);
        const __m256d va = _mm256_loadu_pd(anchor + i);
        const __m256d step =
            _mm256_add_pd(_mm256_mul_pd(veta, vg), _mm256_mul_pd(vpull, _mm256_sub_pd(vv, va)));
        _mm256_storeu_pd(v + i, _mm256_sub_pd(vv, step));
    }
    for (; i < n; ++i) {
        v[i] -= eta * g[i] + pull * (v[i] - anchor[i]);
    }
}

}  // namespace

const Table& avx2_table() {
    static const Table t{dot_avx2,      sq_norm_avx2, axpy_avx2,         matvec_avx2,
                         matvec_t_avx2, ger_avx2,     prox_sgd_step_avx2};
    return t;
}

}  // namespace refed::kernels
