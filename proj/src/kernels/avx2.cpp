// AVX2+FMA kernel variants. Complex values are interleaved (re, im); a
// 256-bit register holds two complex doubles. Complex multiply by a broadcast
// scalar uses the permute/fmaddsub pattern:
//   even lanes: wr*br - wi*bi, odd lanes: wr*bi + wi*br.
// This translation unit is compiled with -mavx2 -mfma; availability is
// re-checked at runtime before the variant is handed out.

#include "oim/kernels.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace oim::kernels {
namespace {

inline void cplx_axpy_row(double* c, const double* b, double wr, double wi, int n) {
    const __m256d wrv = _mm256_set1_pd(wr);
    const __m256d wiv = _mm256_set1_pd(wi);
    int m = 0;
    for (; m + 2 <= n; m += 2) {
        const __m256d bv = _mm256_loadu_pd(b + 2 * m);
        const __m256d bs = _mm256_permute_pd(bv, 0x5);
        const __m256d t = _mm256_mul_pd(wiv, bs);
        __m256d cv = _mm256_loadu_pd(c + 2 * m);
        cv = _mm256_add_pd(cv, _mm256_fmaddsub_pd(wrv, bv, t));
        _mm256_storeu_pd(c + 2 * m, cv);
    }
    if (m < n) {
        const double br = b[2 * m], bi = b[2 * m + 1];
        c[2 * m] += wr * br - wi * bi;
        c[2 * m + 1] += wr * bi + wi * br;
    }
}

void gemm_rc_avx2(cplx* c, const double* a, const cplx* b, int n) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    for (std::size_t i = 0; i < nn; ++i) c[i] = 0.0;
    const int nd = 2 * n;  // doubles per row
    for (int i = 0; i < n; ++i) {
        double* ci = reinterpret_cast<double*>(c + static_cast<std::size_t>(i) * n);
        const double* ai = a + static_cast<std::size_t>(i) * n;
        for (int k = 0; k < n; ++k) {
            const __m256d av = _mm256_set1_pd(ai[k]);
            const double* bk = reinterpret_cast<const double*>(b + static_cast<std::size_t>(k) * n);
            int m = 0;
            for (; m + 4 <= nd; m += 4) {
                __m256d cv = _mm256_loadu_pd(ci + m);
                cv = _mm256_fmadd_pd(av, _mm256_loadu_pd(bk + m), cv);
                _mm256_storeu_pd(ci + m, cv);
            }
            for (; m < nd; ++m) ci[m] += ai[k] * bk[m];
        }
    }
}

void gemm_tc_avx2(cplx* c, const cplx* a, const cplx* b, int n, bool conj_a) {
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    for (std::size_t i = 0; i < nn; ++i) c[i] = 0.0;
    for (int k = 0; k < n; ++k) {
        const cplx* ak = a + static_cast<std::size_t>(k) * n;
        const double* bk = reinterpret_cast<const double*>(b + static_cast<std::size_t>(k) * n);
        for (int i = 0; i < n; ++i) {
            const double wr = ak[i].real();
            const double wi = conj_a ? -ak[i].imag() : ak[i].imag();
            double* ci = reinterpret_cast<double*>(c + static_cast<std::size_t>(i) * n);
            cplx_axpy_row(ci, bk, wr, wi, n);
        }
    }
}

void matvec_tc_avx2(cplx* y, const cplx* a, const cplx* x, int n, bool conj_a) {
    for (int i = 0; i < n; ++i) y[i] = 0.0;
    double* yd = reinterpret_cast<double*>(y);
    // y[i] += op(a)[k][i] * x[k]: conjugation applies to the loaded row, which
    // amounts to negating its imaginary lanes before the scalar multiply.
    const __m256d conj_mask = _mm256_set_pd(-0.0, 0.0, -0.0, 0.0);
    for (int k = 0; k < n; ++k) {
        const double* ak = reinterpret_cast<const double*>(a + static_cast<std::size_t>(k) * n);
        const double xr = x[k].real(), xi = x[k].imag();
        const __m256d xrv = _mm256_set1_pd(xr);
        const __m256d xiv = _mm256_set1_pd(xi);
        int i = 0;
        for (; i + 2 <= n; i += 2) {
            __m256d av = _mm256_loadu_pd(ak + 2 * i);
            if (conj_a) av = _mm256_xor_pd(av, conj_mask);
            const __m256d as = _mm256_permute_pd(av, 0x5);
            const __m256d t = _mm256_mul_pd(xiv, as);
            __m256d yv = _mm256_loadu_pd(yd + 2 * i);
            yv = _mm256_add_pd(yv, _mm256_fmaddsub_pd(xrv, av, t));
            _mm256_storeu_pd(yd + 2 * i, yv);
        }
        for (; i < n; ++i) {
            const double ar = ak[2 * i], ai = conj_a ? -ak[2 * i + 1] : ak[2 * i + 1];
            yd[2 * i] += ar * xr - ai * xi;
            yd[2 * i + 1] += ar * xi + ai * xr;
        }
    }
}

void axpy_step_avx2(cplx* x, double dt, const cplx* d, const cplx* s, std::size_t m) {
    double* xd = reinterpret_cast<double*>(x);
    const double* dd = reinterpret_cast<const double*>(d);
    const std::size_t md = 2 * m;
    const __m256d dtv = _mm256_set1_pd(dt);
    std::size_t i = 0;
    if (s) {
        const double* sd = reinterpret_cast<const double*>(s);
        for (; i + 4 <= md; i += 4) {
            const __m256d t = _mm256_fmadd_pd(dtv, _mm256_loadu_pd(dd + i),
                                              _mm256_loadu_pd(sd + i));
            _mm256_storeu_pd(xd + i, _mm256_add_pd(_mm256_loadu_pd(xd + i), t));
        }
        for (; i < md; ++i) xd[i] += dt * dd[i] + sd[i];
    } else {
        for (; i + 4 <= md; i += 4) {
            const __m256d xv = _mm256_fmadd_pd(dtv, _mm256_loadu_pd(dd + i),
                                               _mm256_loadu_pd(xd + i));
            _mm256_storeu_pd(xd + i, xv);
        }
        for (; i < md; ++i) xd[i] += dt * dd[i];
    }
}

}  // namespace

const Ops* avx2_ops_impl() {
    static const bool supported =
        __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    static const Ops ops{"avx2", gemm_rc_avx2, gemm_tc_avx2, matvec_tc_avx2, axpy_step_avx2};
    return supported ? &ops : nullptr;
}

}  // namespace oim::kernels

#else  // translation unit built without AVX2 support

namespace oim::kernels {
const Ops* avx2_ops_impl() { return nullptr; }
}  // namespace oim::kernels

#endif
