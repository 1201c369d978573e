#include "oim/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oim/errors.hpp"

namespace oim {

void SimParams::validate() const {
    if (!(gamma > 0.0)) throw param_error("gamma must be positive");
    if (!(eta >= 0.0)) throw param_error("eta must be non-negative");
    if (!(pump >= 0.0)) throw param_error("pump must be non-negative");
    if (!(dt > 0.0)) throw param_error("dt must be positive");
    if (!(dt <= sample_interval)) throw param_error("dt must not exceed sample_interval");
    if (!(sample_interval <= t_max)) throw param_error("sample_interval must not exceed t_max");
    if (!(burn_in >= 0.0) || !(burn_in < t_max))
        throw param_error("burn_in must lie in [0, t_max)");
}

GaussianState GaussianState::vacuum(int n) {
    if (n < 1) throw param_error("mode count must be >= 1");
    GaussianState st;
    st.n = n;
    st.t = 0.0;
    st.alpha.assign(n, cplx{});
    st.u.assign(static_cast<std::size_t>(n) * n, cplx{});
    st.v.assign(static_cast<std::size_t>(n) * n, cplx{});
    return st;
}

double GaussianState::max_u_asymmetry() const {
    double m = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) m = std::max(m, 0.5 * std::abs(uat(i, k) - uat(k, i)));
    return m;
}

double GaussianState::max_v_herm_deviation() const {
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
        m = std::max(m, 0.5 * std::abs(vat(i, i) - std::conj(vat(i, i))));
        for (int k = i + 1; k < n; ++k)
            m = std::max(m, 0.5 * std::abs(vat(i, k) - std::conj(vat(k, i))));
    }
    return m;
}

NoiseDraw NoiseDraw::sample(int n, double dt, GaussianRng& rng) {
    NoiseDraw d;
    d.z1.resize(n);
    d.z2.resize(n);
    d.z3.resize(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (auto& z : d.z1) z = rng.wiener(dt);
    for (auto& z : d.z2) z = rng.wiener(dt);
    for (auto& z : d.z3) z = rng.wiener(dt);
    return d;
}

NoiseDraw NoiseDraw::zero(int n) {
    NoiseDraw d;
    d.z1.assign(n, cplx{});
    d.z2.assign(n, cplx{});
    d.z3.assign(static_cast<std::size_t>(n) * (n - 1) / 2, cplx{});
    return d;
}

NoiseDraw NoiseDraw::negated_linear_channels() const {
    NoiseDraw d = *this;
    for (auto& z : d.z1) z = -z;
    for (auto& z : d.z3) z = -z;
    return d;
}

void StepDiagnostics::merge(const StepDiagnostics& o) {
    sym_correction = std::max(sym_correction, o.sym_correction);
    herm_correction = std::max(herm_correction, o.herm_correction);
    vdiag_imag = std::max(vdiag_imag, o.vdiag_imag);
}

TrajectoryEngine::TrajectoryEngine(const CouplingGraph& g, const SimParams& params)
    : n_(g.n), params_(params), jmat_(g.j), det_(g.n), sto_(g.n) {
    const std::vector<double> residual = validate_rates(g, params.gamma);
    row_abs_.resize(n_);
    sqrt_gt_.resize(n_);
    for (int i = 0; i < n_; ++i) {
        row_abs_[i] = g.row_abs_sum(i);
        sqrt_gt_[i] = std::sqrt(residual[i]);
    }
    for (int i = 1; i < n_; ++i)
        for (int j = 0; j < i; ++j) {
            const double jij = g.at(i, j);
            if (jij == 0.0) continue;  // zero-amplitude jump operator: whole pair term skipped
            pairs_.push_back({i, j, i * (i - 1) / 2 + j, std::sqrt(std::abs(jij)),
                              jij > 0.0 ? 1.0 : -1.0});
        }
    ops_ = &kernels::active_ops();

    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    for (auto* b : {&ju_, &jv_, &mu_, &mv_, &x_, &c1_, &c2_, &s_, &sv_, &su_, &w1_, &w2m_,
                    &t1_, &t2_})
        b->assign(nn, cplx{});
    for (auto* b : {&jal_, &zeta_, &zconj_, &y1_, &y2_}) b->assign(n_, cplx{});
    psq_.assign(n_, 0.0);
    w2diag_.assign(n_, 0.0);
}

void TrajectoryEngine::drift(const GaussianState& st, Increments& out) const {
    const int n = n_;
    const double gamma = params_.gamma, eta = params_.eta, pump = params_.pump;
    const auto& K = *ops_;
    const bool row_reading = params_.rate_reading == RateIndexReading::row_mode;

    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        const double* jr = jmat_.data() + static_cast<std::size_t>(i) * n;
        for (int k = 0; k < n; ++k) acc += jr[k] * st.alpha[k];
        jal_[i] = acc;
        psq_[i] = std::norm(st.alpha[i]);
        w2diag_[i] = 4.0 * eta * psq_[i];
    }

    K.gemm_rc(ju_.data(), jmat_.data(), st.u.data(), n);
    K.gemm_rc(jv_.data(), jmat_.data(), st.v.data(), n);

    // M = gamma*I - J + diag(4 eta |alpha|^2) collects the one-photon,
    // coupling-pair and two-photon quadratic (measurement) channel weights;
    // the Riccati terms then read -(Mv)^T u - transpose for u and
    // -(Mv)^dag v - (Mu)^dag u for v. Under the row_mode comparison reading
    // the one-photon weight is pulled out of M and applied per output row.
    for (int j = 0; j < n; ++j) {
        const double diag = (row_reading ? row_abs_[j] : gamma) + w2diag_[j];
        const std::size_t off = static_cast<std::size_t>(j) * n;
        for (int m = 0; m < n; ++m) {
            mu_[off + m] = diag * st.u[off + m] - ju_[off + m];
            mv_[off + m] = diag * st.v[off + m] - jv_[off + m];
        }
    }
    K.gemm_tc(x_.data(), mv_.data(), st.u.data(), n, false);
    K.gemm_tc(c1_.data(), mv_.data(), st.v.data(), n, true);
    K.gemm_tc(c2_.data(), mu_.data(), st.u.data(), n, true);
    if (row_reading) {
        K.gemm_tc(s_.data(), st.v.data(), st.u.data(), n, false);
        K.gemm_tc(sv_.data(), st.v.data(), st.v.data(), n, true);
        K.gemm_tc(su_.data(), st.u.data(), st.u.data(), n, true);
    }

    for (int i = 0; i < n; ++i) {
        const cplx a = st.alpha[i];
        const cplx unn = st.u[static_cast<std::size_t>(i) * n + i];
        const cplx vnn = st.v[static_cast<std::size_t>(i) * n + i];
        out.dalpha[i] = -0.5 * gamma * a + pump * std::conj(a) -
                        eta * (psq_[i] * a + 2.0 * a * vnn + std::conj(a) * unn) +
                        0.5 * jal_[i];
    }

    for (int r = 0; r < n; ++r) {
        const std::size_t ro = static_cast<std::size_t>(r) * n;
        const cplx ur_loc = st.u[ro + r] + st.alpha[r] * st.alpha[r];
        const double vr = st.v[ro + r].real();
        for (int c = 0; c < n; ++c) {
            const std::size_t rc = ro + c;
            const std::size_t cr = static_cast<std::size_t>(c) * n + r;
            const double delta = (r == c) ? 1.0 : 0.0;
            const cplx uc_loc =
                st.u[static_cast<std::size_t>(c) * n + c] + st.alpha[c] * st.alpha[c];
            const double vc = st.v[static_cast<std::size_t>(c) * n + c].real();
            const double locsum = (vr + vc) + (psq_[r] + psq_[c]);

            cplx du = -gamma * st.u[rc] + 0.5 * (ju_[rc] + ju_[cr]) +
                      pump * (delta + st.v[rc] + st.v[cr]) -
                      eta * (ur_loc * (delta + st.v[rc]) + uc_loc * st.v[cr] +
                             2.0 * st.u[rc] * locsum) -
                      (x_[rc] + x_[cr]);

            cplx dv = -gamma * st.v[rc] + 0.5 * (jv_[rc] + std::conj(jv_[cr])) +
                      pump * (std::conj(st.u[rc]) + st.u[rc]) -
                      eta * (std::conj(ur_loc) * st.u[rc] + uc_loc * std::conj(st.u[rc]) +
                             2.0 * st.v[rc] * locsum) -
                      (c1_[rc] + c2_[rc]);

            if (row_reading) {
                const double w = gamma - row_abs_[r];
                du -= w * (s_[rc] + s_[cr]);
                dv -= w * (sv_[rc] + su_[rc]);
            }
            out.du[rc] = du;
            out.dv[rc] = dv;
        }
    }
}

void TrajectoryEngine::diffusion(const GaussianState& st, const NoiseDraw& noise,
                                 Increments& out) const {
    const int n = n_;
    if (static_cast<int>(noise.z1.size()) != n || static_cast<int>(noise.z2.size()) != n ||
        noise.z3.size() != static_cast<std::size_t>(n) * (n - 1) / 2)
        throw param_error("noise draw dimensions do not match mode count");
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const double eta = params_.eta;
    const double two_se = 2.0 * std::sqrt(eta);
    const auto& K = *ops_;

    // Per-mode noise collector: channel 1 and 2 are diagonal, channel 3
    // spreads each pair increment onto its two modes with opposite signs.
    for (int j = 0; j < n; ++j)
        zeta_[j] = sqrt_gt_[j] * noise.z1[j] + two_se * std::conj(st.alpha[j]) * noise.z2[j];
    for (const auto& p : pairs_) {
        const cplx z = p.sqrtj * noise.z3[p.flat];
        zeta_[p.i] += z;
        zeta_[p.j] -= p.sign * z;
    }
    K.matvec_tc(y1_.data(), st.v.data(), zeta_.data(), n, false);
    for (int j = 0; j < n; ++j) zconj_[j] = std::conj(zeta_[j]);
    K.matvec_tc(y2_.data(), st.u.data(), zconj_.data(), n, false);
    for (int i = 0; i < n; ++i) out.dalpha[i] = y1_[i] + y2_[i];

    // Second moments receive only two-photon (channel 2) noise; the linear
    // channels' contributions cancel against those of alpha alpha.
    if (eta > 0.0) {
        for (int j = 0; j < n; ++j) {
            const cplx dj = two_se * noise.z2[j];
            const cplx djc = std::conj(dj);
            const std::size_t off = static_cast<std::size_t>(j) * n;
            for (int m = 0; m < n; ++m) {
                w1_[off + m] = dj * st.v[off + m];
                w2m_[off + m] = djc * st.u[off + m];
            }
        }
        K.gemm_tc(t1_.data(), st.v.data(), w1_.data(), n, false);
        K.gemm_tc(t2_.data(), st.u.data(), w2m_.data(), n, false);
        for (std::size_t i = 0; i < nn; ++i) out.du[i] = t1_[i] + t2_[i];
        K.gemm_tc(t1_.data(), st.u.data(), w1_.data(), n, true);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                out.dv[static_cast<std::size_t>(r) * n + c] =
                    t1_[static_cast<std::size_t>(r) * n + c] +
                    std::conj(t1_[static_cast<std::size_t>(c) * n + r]);
    } else {
        std::fill(out.du.begin(), out.du.end(), cplx{});
        std::fill(out.dv.begin(), out.dv.end(), cplx{});
    }
}

StepDiagnostics TrajectoryEngine::apply(GaussianState& st, const Increments& det,
                                        const Increments* sto) {
    const int n = n_;
    const std::size_t nn = static_cast<std::size_t>(n) * n;
    const double dt = params_.dt;
    const auto& K = *ops_;

    K.axpy_step(st.alpha.data(), dt, det.dalpha.data(), sto ? sto->dalpha.data() : nullptr, n);
    K.axpy_step(st.u.data(), dt, det.du.data(), sto ? sto->du.data() : nullptr, nn);
    K.axpy_step(st.v.data(), dt, det.dv.data(), sto ? sto->dv.data() : nullptr, nn);
    st.t += dt;

    StepDiagnostics diag;
    double maxmom = 0.0;
    for (int r = 0; r < n; ++r) {
        const std::size_t ro = static_cast<std::size_t>(r) * n;
        diag.vdiag_imag = std::max(diag.vdiag_imag, std::abs(st.v[ro + r].imag()));
        st.v[ro + r] = st.v[ro + r].real();
        maxmom = std::max(maxmom, std::abs(st.u[ro + r].real()));
        maxmom = std::max(maxmom, std::abs(st.v[ro + r].real()));
        for (int c = r + 1; c < n; ++c) {
            const std::size_t rc = ro + c, cr = static_cast<std::size_t>(c) * n + r;
            const cplx um = 0.5 * (st.u[rc] + st.u[cr]);
            diag.sym_correction = std::max(diag.sym_correction, std::abs(st.u[rc] - um));
            st.u[rc] = st.u[cr] = um;
            const cplx vm = 0.5 * (st.v[rc] + std::conj(st.v[cr]));
            diag.herm_correction = std::max(diag.herm_correction, std::abs(st.v[rc] - vm));
            st.v[rc] = vm;
            st.v[cr] = std::conj(vm);
            maxmom = std::max({maxmom, std::abs(um.real()), std::abs(um.imag()),
                               std::abs(vm.real()), std::abs(vm.imag())});
        }
    }
    double maxa = 0.0;
    for (int i = 0; i < n; ++i)
        maxa = std::max({maxa, std::abs(st.alpha[i].real()), std::abs(st.alpha[i].imag())});
    if (!std::isfinite(maxa) || !std::isfinite(maxmom) || maxa > params_.blowup_limit) {
        std::ostringstream msg;
        msg << "integration blow-up at t=" << st.t << " (max|alpha|~" << maxa
            << "); reduce dt (current dt=" << dt << ")";
        throw numeric_error(msg.str(), st.t, 0);
    }
    const double denom = std::max(1.0, maxmom);
    diag.sym_correction /= denom;
    diag.herm_correction /= denom;
    return diag;
}

StepDiagnostics TrajectoryEngine::step(GaussianState& st, GaussianRng& rng) {
    drift(st, det_);
    if (params_.noise) {
        const NoiseDraw nd = NoiseDraw::sample(n_, params_.dt, rng);
        diffusion(st, nd, sto_);
        return apply(st, det_, &sto_);
    }
    return apply(st, det_, nullptr);
}

StepDiagnostics TrajectoryEngine::step_with(GaussianState& st, const NoiseDraw& noise) {
    drift(st, det_);
    diffusion(st, noise, sto_);
    return apply(st, det_, &sto_);
}

void TrajectoryEngine::mean_field_step(GaussianState& st) const {
    const int n = n_;
    const double gamma = params_.gamma, eta = params_.eta, pump = params_.pump,
                 dt = params_.dt;
    for (int i = 0; i < n; ++i) {
        cplx acc = 0.0;
        const double* jr = jmat_.data() + static_cast<std::size_t>(i) * n;
        for (int k = 0; k < n; ++k) acc += jr[k] * st.alpha[k];
        jal_[i] = acc;
    }
    for (int i = 0; i < n; ++i) {
        const cplx a = st.alpha[i];
        st.alpha[i] += dt * (-0.5 * gamma * a + pump * std::conj(a) -
                             eta * std::norm(a) * a + 0.5 * jal_[i]);
    }
    st.t += params_.dt;
}

GaussianState init_vacuum(int n) { return GaussianState::vacuum(n); }

Increments drift(const GaussianState& st, const SimParams& params, const CouplingGraph& g) {
    TrajectoryEngine eng(g, params);
    Increments out(g.n);
    eng.drift(st, out);
    return out;
}

Increments diffusion(const GaussianState& st, const SimParams& params, const CouplingGraph& g,
                     const NoiseDraw& noise) {
    TrajectoryEngine eng(g, params);
    Increments out(g.n);
    eng.diffusion(st, noise, out);
    return out;
}

void mean_field_step(GaussianState& st, const SimParams& params, const CouplingGraph& g) {
    for (const cplx& x : st.u)
        if (x != cplx{}) throw param_error("mean-field step requires u == 0");
    for (const cplx& x : st.v)
        if (x != cplx{}) throw param_error("mean-field step requires v == 0");
    TrajectoryEngine eng(g, params);
    eng.mean_field_step(st);
}

RunResult run_trajectory(const CouplingGraph& g, const SimParams& params,
                         const SampleObserver& observer) {
    params.validate();
    TrajectoryEngine engine(g, params);
    GaussianState st = GaussianState::vacuum(g.n);
    if (params.init_perturbation > 0.0) {
        GaussianRng init_rng(derive_seed(params.seed, "init"));
        for (auto& a : st.alpha)
            a = params.init_perturbation * cplx{init_rng.normal(), init_rng.normal()};
    }
    GaussianRng noise_rng(derive_seed(params.seed, "noise"));

    const auto steps = static_cast<std::int64_t>(std::llround(params.t_max / params.dt));
    const auto burn = static_cast<std::int64_t>(std::llround(params.burn_in / params.dt));
    const auto stride = std::max<std::int64_t>(
        1, static_cast<std::int64_t>(std::llround(params.sample_interval / params.dt)));

    RunResult res;
    res.kernel = kernels::active_ops().name;
    try {
        for (std::int64_t k = 1; k <= steps; ++k) {
            if (params.mean_field) {
                engine.mean_field_step(st);
            } else {
                res.max_diag.merge(engine.step(st, noise_rng));
            }
            if (k > burn && (k - burn) % stride == 0) {
                if (observer) observer(st.t, std::span<const cplx>(st.alpha));
                ++res.samples;
            }
        }
    } catch (const numeric_error& e) {
        throw numeric_error(e.what(), e.t_failed, res.samples);
    }
    res.t_final = st.t;
    return res;
}

}  // namespace oim
