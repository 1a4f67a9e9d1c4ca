#include "qrlab/kernels.hpp"

#include <cmath>

// Reference backend.  Straight loops, no reassociation; this is the
// semantics the SIMD variants are equivalence-tested against.

namespace qrlab::kern {
namespace {

void matvec_scalar(const double* w, const double* x, const double* bias, double* y,
                   std::size_t rows, std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w + i * cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j] * x[j];
        y[i] = bias ? acc + bias[i] : acc;
    }
}

void matvec_t_scalar(const double* w, const double* v, double* out, std::size_t rows,
                     std::size_t cols) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        const double* row = w + i * cols;
        const double vi = v[i];
        for (std::size_t j = 0; j < cols; ++j) out[j] += vi * row[j];
    }
}

void rank1_acc_scalar(double* g, const double* u, const double* v, std::size_t rows,
                      std::size_t cols) {
    for (std::size_t i = 0; i < rows; ++i) {
        double* row = g + i * cols;
        const double ui = u[i];
        for (std::size_t j = 0; j < cols; ++j) row[j] += ui * v[j];
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_scalar(const double* z, double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
}

void step01_scalar(const double* z, double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) a[i] = z[i] > 0.0 ? 1.0 : 0.0;
}

void quantize_scalar(const double* w, double* out, std::size_t n, double m) {
    const double half_m = 0.5 * m;
    for (std::size_t i = 0; i < n; ++i) {
        double u = (w[i] + 1.0) * half_m;
        double k = std::floor(u + 0.5);  // ties toward +inf
        if (k < 0.0) k = 0.0;
        if (k > m) k = m;
        out[i] = (2.0 * k - m) / m;
    }
}

void clip_scalar(double* w, std::size_t n, double lo, double hi) {
    for (std::size_t i = 0; i < n; ++i) {
        double v = w[i];
        v = v < lo ? lo : v;
        v = v > hi ? hi : v;
        w[i] = v;
    }
}

void adam_update_scalar(double* p, double* m, double* v, const double* g, std::size_t n,
                        double alpha, double beta1, double beta2, double eps, double c1,
                        double c2, double lo, double hi) {
    const double om1 = 1.0 - beta1;
    const double om2 = 1.0 - beta2;
    for (std::size_t i = 0; i < n; ++i) {
        double mi = beta1 * m[i] + om1 * g[i];
        double vi = beta2 * v[i] + om2 * (g[i] * g[i]);
        m[i] = mi;
        v[i] = vi;
        double mhat = mi * c1;
        double vhat = vi * c2;
        double pi = p[i] - alpha * (mhat / (std::sqrt(vhat) + eps));
        pi = pi < lo ? lo : pi;
        pi = pi > hi ? hi : pi;
        p[i] = pi;
    }
}

void fgsm_apply_scalar(const double* u, const double* g, double* out, std::size_t n,
                       double eps) {
    for (std::size_t i = 0; i < n; ++i) {
        double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        out[i] = u[i] + eps * s;
    }
}

}  // namespace

const Ops scalar_ops = {
    "scalar",          matvec_scalar, matvec_t_scalar, rank1_acc_scalar,
    dot_scalar,        axpy_scalar,   relu_scalar,     step01_scalar,
    quantize_scalar,   clip_scalar,   adam_update_scalar, fgsm_apply_scalar,
};

}  // namespace qrlab::kern
