#pragma once

// Dense complex kernels behind the trajectory stepper. A scalar reference
// implementation always exists; an AVX2+FMA variant is compiled on x86-64 and
// selected at runtime (override with OIM_KERNELS=scalar|avx2 or set_active).
// The variants are equivalence-tested against each other; a given selection
// is bitwise deterministic run-to-run.

#include <complex>
#include <cstddef>

namespace oim::kernels {

using cplx = std::complex<double>;

struct Ops {
    const char* name;

    // C = A * B with A real n x n, B complex n x n (row-major).
    void (*gemm_rc)(cplx* c, const double* a, const cplx* b, int n);

    // C = A^T * B (conj_a = false) or A^dagger * B (conj_a = true),
    // A and B complex n x n.
    void (*gemm_tc)(cplx* c, const cplx* a, const cplx* b, int n, bool conj_a);

    // y = A^T * x or A^dagger * x.
    void (*matvec_tc)(cplx* y, const cplx* a, const cplx* x, int n, bool conj_a);

    // x[i] += dt * d[i] + s[i]; s may be null (pure Euler update).
    void (*axpy_step)(cplx* x, double dt, const cplx* d, const cplx* s, std::size_t m);
};

const Ops& scalar_ops();

// Null when not compiled in or the CPU lacks AVX2/FMA.
const Ops* avx2_ops();

// Dispatched selection: OIM_KERNELS env var if set, else best available.
const Ops& active_ops();
void set_active(const Ops& ops);

}  // namespace oim::kernels
