#ifdef QRLAB_HAVE_AVX2

#include "qrlab/kernels.hpp"

#include <immintrin.h>

#include <cmath>

// AVX2 + FMA backend.  Reductions use 4-way accumulators with FMA; the
// elementwise kernels mirror the scalar operation structure exactly (mul/add,
// no contraction) so that scalar and AVX2 results are bit-identical.

namespace qrlab::kern {
namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, swapped));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
        acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 8), _mm256_loadu_pd(b + i + 8), acc2);
        acc3 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 12), _mm256_loadu_pd(b + i + 12), acc3);
    }
    for (; i + 4 <= n; i += 4)
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    double acc = hsum(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void matvec_avx2(const double* w, const double* x, const double* bias, double* y,
                 std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double acc = dot_avx2(w + i * cols, x, cols);
        y[i] = bias ? acc + bias[i] : acc;
    }
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void matvec_t_avx2(const double* w, const double* v, double* out, std::size_t rows,
                   std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) axpy_avx2(v[i], w + i * cols, out, cols);
}

void rank1_acc_avx2(double* g, const double* u, const double* v, std::size_t rows,
                    std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) axpy_avx2(u[i], v, g + i * cols, cols);
}

void relu_avx2(const double* z, double* a, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vz = _mm256_loadu_pd(z + i);
        __m256d mask = _mm256_cmp_pd(vz, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(a + i, _mm256_and_pd(vz, mask));
    }
    for (; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void step01_avx2(const double* z, double* a, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(z + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(a + i, _mm256_and_pd(one, mask));
    }
    for (; i < n; ++i) a[i] = z[i] > 0.0 ? 1.0 : 0.0;
}

void quantize_avx2(const double* w, double* out, std::size_t n, double m) {
    const __m256d vone = _mm256_set1_pd(1.0);
    const __m256d vhalf_m = _mm256_set1_pd(0.5 * m);
    const __m256d vhalf = _mm256_set1_pd(0.5);
    const __m256d vzero = _mm256_setzero_pd();
    const __m256d vm = _mm256_set1_pd(m);
    const __m256d vtwo = _mm256_set1_pd(2.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d u = _mm256_mul_pd(_mm256_add_pd(_mm256_loadu_pd(w + i), vone), vhalf_m);
        __m256d k = _mm256_floor_pd(_mm256_add_pd(u, vhalf));
        k = _mm256_blendv_pd(k, vzero, _mm256_cmp_pd(k, vzero, _CMP_LT_OQ));
        k = _mm256_blendv_pd(k, vm, _mm256_cmp_pd(k, vm, _CMP_GT_OQ));
        __m256d q = _mm256_div_pd(_mm256_sub_pd(_mm256_mul_pd(vtwo, k), vm), vm);
        _mm256_storeu_pd(out + i, q);
    }
    const double half_m = 0.5 * m;
    for (; i < n; ++i) {
        double u = (w[i] + 1.0) * half_m;
        double k = std::floor(u + 0.5);
        if (k < 0.0) k = 0.0;
        if (k > m) k = m;
        out[i] = (2.0 * k - m) / m;
    }
}

void clip_avx2(double* w, std::size_t n, double lo, double hi) {
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_loadu_pd(w + i);
        v = _mm256_blendv_pd(v, vlo, _mm256_cmp_pd(v, vlo, _CMP_LT_OQ));
        v = _mm256_blendv_pd(v, vhi, _mm256_cmp_pd(v, vhi, _CMP_GT_OQ));
        _mm256_storeu_pd(w + i, v);
    }
    for (; i < n; ++i) {
        double v = w[i];
        v = v < lo ? lo : v;
        v = v > hi ? hi : v;
        w[i] = v;
    }
}

void adam_update_avx2(double* p, double* m, double* v, const double* g, std::size_t n,
                      double alpha, double beta1, double beta2, double eps, double c1,
                      double c2, double lo, double hi) {
    const double om1s = 1.0 - beta1;
    const double om2s = 1.0 - beta2;
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vom1 = _mm256_set1_pd(om1s);
    const __m256d vom2 = _mm256_set1_pd(om2s);
    const __m256d vc1 = _mm256_set1_pd(c1);
    const __m256d vc2 = _mm256_set1_pd(c2);
    const __m256d valpha = _mm256_set1_pd(alpha);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlo = _mm256_set1_pd(lo);
    const __m256d vhi = _mm256_set1_pd(hi);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                   _mm256_mul_pd(vom1, vg));
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(vom2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_mul_pd(vm, vc1);
        __m256d vhat = _mm256_mul_pd(vv, vc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d vp = _mm256_sub_pd(_mm256_loadu_pd(p + i),
                                   _mm256_mul_pd(valpha, _mm256_div_pd(mhat, denom)));
        vp = _mm256_blendv_pd(vp, vlo, _mm256_cmp_pd(vp, vlo, _CMP_LT_OQ));
        vp = _mm256_blendv_pd(vp, vhi, _mm256_cmp_pd(vp, vhi, _CMP_GT_OQ));
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        double mi = beta1 * m[i] + om1s * g[i];
        double vi = beta2 * v[i] + om2s * (g[i] * g[i]);
        m[i] = mi;
        v[i] = vi;
        double pi = p[i] - alpha * ((mi * c1) / (std::sqrt(vi * c2) + eps));
        pi = pi < lo ? lo : pi;
        pi = pi > hi ? hi : pi;
        p[i] = pi;
    }
}

void fgsm_apply_avx2(const double* u, const double* g, double* out, std::size_t n,
                     double eps) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d neg_one = _mm256_set1_pd(-1.0);
    const __m256d veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d pos = _mm256_and_pd(one, _mm256_cmp_pd(vg, zero, _CMP_GT_OQ));
        __m256d neg = _mm256_and_pd(neg_one, _mm256_cmp_pd(vg, zero, _CMP_LT_OQ));
        __m256d s = _mm256_or_pd(pos, neg);
        _mm256_storeu_pd(out + i,
                         _mm256_add_pd(_mm256_loadu_pd(u + i), _mm256_mul_pd(veps, s)));
    }
    for (; i < n; ++i) {
        double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        out[i] = u[i] + eps * s;
    }
}

}  // namespace

const Ops avx2_ops = {
    "avx2",        matvec_avx2, matvec_t_avx2, rank1_acc_avx2,
    dot_avx2,      axpy_avx2,   relu_avx2,     step01_avx2,
    quantize_avx2, clip_avx2,   adam_update_avx2, fgsm_apply_avx2,
};

}  // namespace qrlab::kern

#endif  // QRLAB_HAVE_AVX2
