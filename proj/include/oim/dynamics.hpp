#pragma once

// Gaussian quantum trajectory integration: stochastic evolution of the first
// moments alpha and second moments u = <aa> - <a><a>, v = <adag a> - <a>*<a>
// under two-photon drive G, one-photon loss (rate gamma - Sum|J|), two-photon
// loss (rate eta) and the non-local dissipative Ising coupling encoded in J.
//
// Explicit Euler-Maruyama in Ito convention; after each step u is
// re-symmetrized and v re-Hermitized, and the size of those corrections is
// reported (they stay at rounding level for a correct drift).

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "oim/graph.hpp"
#include "oim/kernels.hpp"
#include "oim/rng.hpp"

namespace oim {

using cplx = std::complex<double>;

// Reading of the one-photon damping rate inside the channel-summed quadratic
// terms of the second-moment equations: the rate of the summed mode j
// (default; preserves u-symmetry and the dissipative structure) or of the
// row mode n (kept for numerical A/B comparison only).
enum class RateIndexReading { summed_mode, row_mode };

struct SimParams {
    double gamma = 1.0;           // one-photon base rate; the unit of time is 1/gamma
    double eta = 0.0;             // two-photon loss rate
    double pump = 0.0;            // two-photon drive amplitude G (real)
    double dt = 1e-3;             // integration step
    double t_max = 0.0;           // total integration time
    double sample_interval = 0.1; // time between recorded samples
    double burn_in = 0.0;         // discarded initial time
    std::uint64_t seed = 0;       // trajectory seed (noise + init sub-streams)
    bool noise = true;            // false: freeze all Wiener increments at zero
    bool mean_field = false;      // noiseless first-moment dynamics, u = v = 0
    double init_perturbation = 0.0;  // stddev of the random initial alpha
    double blowup_limit = 1e6;    // |alpha_i| beyond this aborts integration
    RateIndexReading rate_reading = RateIndexReading::summed_mode;

    void validate() const;  // throws param_error
};

struct GaussianState {
    int n = 0;
    double t = 0.0;
    std::vector<cplx> alpha;  // n
    std::vector<cplx> u;      // n x n, symmetric
    std::vector<cplx> v;      // n x n, Hermitian, real diagonal

    static GaussianState vacuum(int n);

    cplx& uref(int i, int k) { return u[static_cast<std::size_t>(i) * n + k]; }
    cplx& vref(int i, int k) { return v[static_cast<std::size_t>(i) * n + k]; }
    cplx uat(int i, int k) const { return u[static_cast<std::size_t>(i) * n + k]; }
    cplx vat(int i, int k) const { return v[static_cast<std::size_t>(i) * n + k]; }

    double max_u_asymmetry() const;       // max |u - u^T| / 2
    double max_v_herm_deviation() const;  // max |v - v^dagger| / 2
};

// One heterodyne Wiener increment per decay channel: z1/z2 are per-mode
// (one- and two-photon loss), z3 is per mode pair i > j, flat index
// i(i-1)/2 + j. Each entry has E|dZ|^2 = dt.
struct NoiseDraw {
    std::vector<cplx> z1, z2, z3;

    static NoiseDraw sample(int n, double dt, GaussianRng& rng);
    static NoiseDraw zero(int n);
    NoiseDraw negated_linear_channels() const;  // z1, z3 -> -z1, -z3; z2 kept
};

struct Increments {
    std::vector<cplx> dalpha, du, dv;
    explicit Increments(int n = 0)
        : dalpha(n), du(static_cast<std::size_t>(n) * n), dv(static_cast<std::size_t>(n) * n) {}
};

struct StepDiagnostics {
    double sym_correction = 0.0;   // relative to max(1, |u|, |v|)
    double herm_correction = 0.0;
    double vdiag_imag = 0.0;       // |Im v_ii| before re-Hermitization

    void merge(const StepDiagnostics& o);
};

// Holds the per-graph precomputation (residual rates, coupling pairs) and the
// scratch buffers of one trajectory. Not thread-safe; use one engine per
// concurrent trajectory.
class TrajectoryEngine {
  public:
    TrajectoryEngine(const CouplingGraph& g, const SimParams& params);

    // Deterministic increments per unit time (all dt-proportional terms).
    void drift(const GaussianState& st, Increments& out) const;

    // Stochastic increments for the given noise draw (already carries sqrt(dt)).
    void diffusion(const GaussianState& st, const NoiseDraw& noise, Increments& out) const;

    // Euler-Maruyama update followed by symmetrization of u and
    // Hermitization of v; throws numeric_error on overflow/NaN.
    StepDiagnostics step(GaussianState& st, GaussianRng& rng);
    StepDiagnostics step_with(GaussianState& st, const NoiseDraw& noise);

    // First-moment dynamics with second moments pinned at zero.
    void mean_field_step(GaussianState& st) const;

    const SimParams& params() const { return params_; }
    int n() const { return n_; }

  private:
    StepDiagnostics apply(GaussianState& st, const Increments& det, const Increments* sto);

    int n_;
    SimParams params_;
    std::vector<double> jmat_;      // row-major copy of J
    std::vector<double> row_abs_;   // a_i = Sum_k |J_ik|
    std::vector<double> sqrt_gt_;   // sqrt(gamma - a_i)
    struct Pair {
        int i, j, flat;
        double sqrtj, sign;
    };
    std::vector<Pair> pairs_;       // nonzero couplings only
    const kernels::Ops* ops_;

    // scratch (mutable: drift/diffusion are logically const)
    mutable std::vector<cplx> ju_, jv_, mu_, mv_, x_, c1_, c2_, s_, sv_, su_;
    mutable std::vector<cplx> jal_, zeta_, zconj_, y1_, y2_, w1_, w2m_, t1_, t2_;
    mutable std::vector<double> psq_, w2diag_;
    Increments det_, sto_;
};

GaussianState init_vacuum(int n);
Increments drift(const GaussianState& st, const SimParams& params, const CouplingGraph& g);
Increments diffusion(const GaussianState& st, const SimParams& params, const CouplingGraph& g,
                     const NoiseDraw& noise);
void mean_field_step(GaussianState& st, const SimParams& params, const CouplingGraph& g);

using SampleObserver = std::function<void(double t, std::span<const cplx> alpha)>;

struct RunResult {
    std::uint64_t samples = 0;
    double t_final = 0.0;
    StepDiagnostics max_diag;
    const char* kernel = "";
};

// Integrates from the (optionally perturbed) vacuum to t_max, invoking the
// observer every sample_interval after burn_in; emits
// floor((t_max - burn_in)/sample_interval) samples. Noise stream is seeded
// from derive_seed(params.seed, "noise"), the initial perturbation from
// derive_seed(params.seed, "init"). On numerical blowup throws numeric_error
// carrying the number of samples collected so far.
RunResult run_trajectory(const CouplingGraph& g, const SimParams& params,
                         const SampleObserver& observer);

}  // namespace oim
