#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops used by the network, attack, and sampler code.
// Every kernel has a scalar reference implementation and (on x86-64) an AVX2
// variant; the active backend is resolved once at startup from CPUID and the
// QRLAB_KERNELS environment variable ("scalar", "avx2", or "auto").
//
// Elementwise kernels (quantize, relu, step01, fgsm_apply, adam_update, clip)
// are written with identical operation structure in both backends and must
// produce bit-identical results.  Reduction kernels (dot, matvec, matvec_t)
// reassociate and use FMA in the AVX2 variant, so they agree only to rounding.

namespace qrlab::kern {

enum class Backend { scalar, avx2 };

struct Ops {
    const char* name;

    // y = W x (+ bias), W row-major rows x cols.
    void (*matvec)(const double* w, const double* x, const double* bias, double* y,
                   std::size_t rows, std::size_t cols);
    // out = W^T v, out length cols.
    void (*matvec_t)(const double* w, const double* v, double* out, std::size_t rows,
                     std::size_t cols);
    // G += u v^T.
    void (*rank1_acc)(double* g, const double* u, const double* v, std::size_t rows,
                      std::size_t cols);
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);

    void (*relu)(const double* z, double* a, std::size_t n);
    void (*step01)(const double* z, double* a, std::size_t n);

    // Round each w onto the grid {(2k - m)/m : k = 0..m}; ties toward +inf.
    void (*quantize)(const double* w, double* out, std::size_t n, double m);
    void (*clip)(double* w, std::size_t n, double lo, double hi);

    // One Adam step with bias-correction factors precomputed by the caller:
    // c1 = 1/(1-beta1^t), c2 = 1/(1-beta2^t).  Clips parameters to [lo, hi].
    void (*adam_update)(double* p, double* m, double* v, const double* g, std::size_t n,
                        double alpha, double beta1, double beta2, double eps, double c1,
                        double c2, double lo, double hi);

    // out = u + eps * sgn(g), with sgn(0) = 0.
    void (*fgsm_apply)(const double* u, const double* g, double* out, std::size_t n,
                       double eps);
};

extern const Ops scalar_ops;
#ifdef QRLAB_HAVE_AVX2
extern const Ops avx2_ops;
#endif

bool cpu_supports_avx2();

/// Active kernel table, resolved once (thread-safe since C++11 static init).
const Ops& ops();
const char* backend_name();

// Convenience forwarding wrappers.
inline void matvec(const double* w, const double* x, const double* bias, double* y,
                   std::size_t rows, std::size_t cols) {
    ops().matvec(w, x, bias, y, rows, cols);
}
inline void matvec_t(const double* w, const double* v, double* out, std::size_t rows,
                     std::size_t cols) {
    ops().matvec_t(w, v, out, rows, cols);
}
inline void rank1_acc(double* g, const double* u, const double* v, std::size_t rows,
                      std::size_t cols) {
    ops().rank1_acc(g, u, v, rows, cols);
}
inline double dot(const double* a, const double* b, std::size_t n) {
    return ops().dot(a, b, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    ops().axpy(a, x, y, n);
}
inline void relu(const double* z, double* a, std::size_t n) { ops().relu(z, a, n); }
inline void step01(const double* z, double* a, std::size_t n) { ops().step01(z, a, n); }
inline void quantize(const double* w, double* out, std::size_t n, double m) {
    ops().quantize(w, out, n, m);
}
inline void clip(double* w, std::size_t n, double lo, double hi) {
    ops().clip(w, n, lo, hi);
}
inline void adam_update(double* p, double* m, double* v, const double* g, std::size_t n,
                        double alpha, double beta1, double beta2, double eps, double c1,
                        double c2, double lo, double hi) {
    ops().adam_update(p, m, v, g, n, alpha, beta1, beta2, eps, c1, c2, lo, hi);
}
inline void fgsm_apply(const double* u, const double* g, double* out, std::size_t n,
                       double eps) {
    ops().fgsm_apply(u, g, out, n, eps);
}

}  // namespace qrlab::kern
