// Scalar reference kernels. Loop structure (k outer, row updates inner)
// matches the SIMD variants so both accumulate in the same k order.

#include "oim/kernels.hpp"

namespace oim::kernels {
namespace {

void gemm_rc_scalar(cplx* c, const double* a, const cplx* b, int n) {
    for (int i = 0; i < n; ++i) {
        cplx* ci = c + static_cast<std::size_t>(i) * n;
        for (int m = 0; m < n; ++m) ci[m] = 0.0;
        const double* ai = a + static_cast<std::size_t>(i) * n;
        for (int k = 0; k < n; ++k) {
            const double aik = ai[k];
            const cplx* bk = b + static_cast<std::size_t>(k) * n;
            for (int m = 0; m < n; ++m) ci[m] += aik * bk[m];
        }
    }
}

void gemm_tc_scalar(cplx* c, const cplx* a, const cplx* b, int n, bool conj_a) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    for (std::size_t i = 0; i < nn; ++i) c[i] = 0.0;
    for (int k = 0; k < n; ++k) {
        const cplx* ak = a + static_cast<std::size_t>(k) * n;
        const cplx* bk = b + static_cast<std::size_t>(k) * n;
        for (int i = 0; i < n; ++i) {
            const cplx w = conj_a ? std::conj(ak[i]) : ak[i];
            cplx* ci = c + static_cast<std::size_t>(i) * n;
            for (int m = 0; m < n; ++m) ci[m] += w * bk[m];
        }
    }
}

void matvec_tc_scalar(cplx* y, const cplx* a, const cplx* x, int n, bool conj_a) {
    for (int i = 0; i < n; ++i) y[i] = 0.0;
    for (int k = 0; k < n; ++k) {
        const cplx* ak = a + static_cast<std::size_t>(k) * n;
        const cplx xk = x[k];
        if (conj_a) {
            for (int i = 0; i < n; ++i) y[i] += std::conj(ak[i]) * xk;
        } else {
            for (int i = 0; i < n; ++i) y[i] += ak[i] * xk;
        }
    }
}

void axpy_step_scalar(cplx* x, double dt, const cplx* d, const cplx* s, std::size_t m) {
    if (s) {
        for (std::size_t i = 0; i < m; ++i) x[i] += dt * d[i] + s[i];
    } else {
        for (std::size_t i = 0; i < m; ++i) x[i] += dt * d[i];
    }
}

}  // namespace

const Ops& scalar_ops() {
    static const Ops ops{"scalar", gemm_rc_scalar, gemm_tc_scalar, matvec_tc_scalar,
                         axpy_step_scalar};
    return ops;
}

}  // namespace oim::kernels
