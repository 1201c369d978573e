#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oim/errors.hpp"
#include "oim/sampling.hpp"
#include "oracles.hpp"

using namespace oim;

TEST_CASE("read_spins: signs, tie-break, antisymmetry, validation") {
    const std::vector<cplx> a = {cplx{1.0, 0.0}, cplx{-2.0, 5.0}};
    CHECK(read_spins(a) == std::vector<int>{1, -1});

    const std::vector<cplx> tie = {cplx{0.0, 3.0}};
    CHECK(read_spins(tie)[0] == 1);
    CHECK(read_spins(tie, -1)[0] == -1);

    GaussianRng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<cplx> x(6), nx(6);
        for (int i = 0; i < 6; ++i) {
            x[i] = cplx{rng.normal(), rng.normal()};
            nx[i] = -x[i];
        }
        auto s = read_spins(x), ns = read_spins(nx);
        for (int i = 0; i < 6; ++i) CHECK(ns[i] == -s[i]);
    }

    const std::vector<cplx> bad = {cplx{std::nan(""), 0.0}};
    CHECK_THROWS_AS(read_spins(bad), param_error);
}

TEST_CASE("histogram canonicalization and merging") {
    const auto g = gen_sk(4, 0.1, 3);
    EnergyHistogram h(4, graph_hash(g));
    CHECK(h.total == 0);

    const std::vector<int> s = {1, -1, 1, -1};
    std::vector<int> neg(4);
    for (int i = 0; i < 4; ++i) neg[i] = -s[i];
    h.add_spins(s);
    h.add_spins(neg);
    CHECK(h.total == 2);
    CHECK(h.counts.size() == 1);  // same canonical bucket
    CHECK(h.counts.begin()->second == 2);

    const std::vector<int> wrong = {1, 1};
    CHECK_THROWS_AS(h.add_spins(wrong), param_error);

    EnergyHistogram h2(4, graph_hash(g));
    h2.add_spins(s);
    h2.merge(h);
    CHECK(h2.total == 3);

    EnergyHistogram other(4, 12345);
    CHECK_THROWS_AS(other.merge(h), param_error);
}

TEST_CASE("histogram merge is associative and commutative") {
    const auto g = gen_sk(5, 0.1, 9);
    const auto hash = graph_hash(g);
    Xoshiro256pp rng(71);
    std::vector<std::uint64_t> masks(300);
    for (auto& m : masks) m = rng.next_u64() & 0x1f;

    auto build = [&](std::size_t lo, std::size_t hi) {
        EnergyHistogram h(5, hash);
        for (std::size_t i = lo; i < hi; ++i) h.add_mask(masks[i]);
        return h;
    };
    auto a = build(0, 100), b = build(100, 180), c = build(180, 300);

    auto ab_c = a;
    ab_c.merge(b);
    ab_c.merge(c);
    auto c_ba = c;
    c_ba.merge(b);
    c_ba.merge(a);
    CHECK(ab_c.total == c_ba.total);
    CHECK(ab_c.counts == c_ba.counts);
}

TEST_CASE("per-energy probabilities against the spectrum") {
    const double c = 0.4;
    std::vector<double> j = {0.0, c, c, 0.0};
    const auto g = make_custom(2, j);
    const auto spec = enumerate_spectrum(g);

    SUBCASE("all samples in the ground configuration") {
        EnergyHistogram h(2, graph_hash(g));
        for (int k = 0; k < 10; ++k) h.add_mask(0);  // ++
        const auto stats = per_energy_probabilities(h, g, spec);
        REQUIRE(stats.size() == 2);
        CHECK(stats[0].p_energy == doctest::Approx(1.0));
        CHECK(stats[1].p_energy == 0.0);
        CHECK(stats[1].count == 0);
        CHECK(success_probability(h, g, spec) == doctest::Approx(1.0));
    }
    SUBCASE("fair-coin spins split evenly between the two levels") {
        EnergyHistogram h(2, graph_hash(g));
        Xoshiro256pp rng(8);
        const int m = 100000;
        for (int k = 0; k < m; ++k) h.add_mask(rng.next_u64() & 3);
        const auto stats = per_energy_probabilities(h, g, spec);
        const double sigma = 0.5 / std::sqrt(static_cast<double>(m));
        CHECK(std::abs(stats[0].p_energy - 0.5) < 3.0 * sigma);
        CHECK(std::abs(stats[1].p_energy - 0.5) < 3.0 * sigma);
    }
    SUBCASE("graph mismatch is rejected") {
        EnergyHistogram h(2, 999);
        h.add_mask(0);
        CHECK_THROWS_AS(per_energy_probabilities(h, g, spec), param_error);
    }
}

TEST_CASE("SK per-configuration probability is P(E)/2") {
    const auto g = gen_sk(6, 0.08, 44);
    const auto spec = enumerate_spectrum(g, 0.0);
    EnergyHistogram h(6, graph_hash(g));
    Xoshiro256pp rng(4);
    for (int k = 0; k < 5000; ++k) h.add_mask(rng.next_u64() & 0x3f);
    for (const auto& row : per_energy_probabilities(h, g, spec)) {
        CHECK(row.multiplicity == 2);
        CHECK(row.p_per_config == doctest::Approx(row.p_energy / 2.0));
    }
}

TEST_CASE("fit_temperature recovers exact synthetic Boltzmann data") {
    const auto g = gen_sk(8, 0.1, 5);
    const auto spec = enumerate_spectrum(g, 0.0);
    const double t0 = 0.8;
    std::vector<FitPoint> pts;
    for (const auto& l : spec.levels) {
        const double p_cfg = std::exp(-(l.energy - spec.ground_energy()) / t0);
        pts.push_back({l.energy, p_cfg, 1000000});  // counts only weight the fit
    }
    const auto fit = fit_temperature(pts, 20);
    CHECK(fit.t_eff == doctest::Approx(t0).epsilon(1e-6));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fit.std_err < 1e-6);
    CHECK(fit.n_points == static_cast<int>(pts.size()));
}

TEST_CASE("fit_temperature on multinomial draws lands within 3 standard errors") {
    const auto g = gen_sk(8, 0.1, 6);
    const auto spec = enumerate_spectrum(g, 0.0);
    const double t0 = 0.5 * g.max_abs() * 8;
    const auto probs = boltzmann_exact(spec, t0);
    Xoshiro256pp rng(15);
    const auto counts = oracles::multinomial_draw(rng, probs, 200000);

    std::vector<FitPoint> pts;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] == 0) continue;
        const double p_energy = static_cast<double>(counts[i]) / 200000.0;
        pts.push_back({spec.levels[i].energy,
                       p_energy / static_cast<double>(spec.levels[i].multiplicity), counts[i]});
    }
    const auto fit = fit_temperature(pts, 20);
    CHECK(std::abs(fit.t_eff - t0) < 3.0 * fit.std_err);
    CHECK(fit.r_squared > 0.99);
}

TEST_CASE("fit_temperature error paths") {
    std::vector<FitPoint> two = {{0.0, 0.5, 100}, {1.0, 0.1, 100}};
    CHECK_THROWS_AS(fit_temperature(two, 10), param_error);

    // Rising probabilities: non-negative slope must be reported, not clamped.
    std::vector<FitPoint> rising = {{0.0, 0.1, 100}, {1.0, 0.2, 100}, {2.0, 0.4, 100}};
    CHECK_THROWS_AS(fit_temperature(rising, 10), param_error);

    std::vector<FitPoint> sparse = {{0.0, 0.5, 5}, {1.0, 0.3, 5}, {2.0, 0.2, 5}};
    CHECK_THROWS_AS(fit_temperature(sparse, 20), param_error);
}

TEST_CASE("fit is invariant under count rescaling; energies rescale t_eff") {
    const auto g = gen_sk(8, 0.1, 7);
    const auto spec = enumerate_spectrum(g, 0.0);
    const auto probs = boltzmann_exact(spec, 0.6);
    Xoshiro256pp rng(16);
    const auto counts = oracles::multinomial_draw(rng, probs, 100000);

    auto points = [&](double count_scale, double energy_scale) {
        std::vector<FitPoint> pts;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] == 0) continue;
            const double p = static_cast<double>(counts[i]) / 100000.0 /
                             static_cast<double>(spec.levels[i].multiplicity);
            pts.push_back({energy_scale * spec.levels[i].energy, p,
                           static_cast<std::uint64_t>(count_scale * counts[i])});
        }
        return pts;
    };
    const auto base = fit_temperature(points(1.0, 1.0), 20);
    const auto scaled_counts = fit_temperature(points(7.0, 1.0), 20 * 7);
    CHECK(scaled_counts.t_eff == doctest::Approx(base.t_eff).epsilon(1e-12));
    CHECK(scaled_counts.std_err == doctest::Approx(base.std_err).epsilon(1e-12));
    CHECK(scaled_counts.r_squared == doctest::Approx(base.r_squared).epsilon(1e-12));

    const double cscale = 2.5;
    const auto scaled_e = fit_temperature(points(1.0, cscale), 20);
    CHECK(scaled_e.t_eff == doctest::Approx(cscale * base.t_eff).epsilon(1e-12));
}

TEST_CASE("statistics are invariant under a global sign flip of the alpha stream") {
    GaussianRng rng(33);
    const auto g = gen_sk(4, 0.1, 2);
    const auto hash = graph_hash(g);
    EnergyHistogram h1(4, hash), h2(4, hash);
    for (int k = 0; k < 500; ++k) {
        std::vector<cplx> a(4), na(4);
        for (int i = 0; i < 4; ++i) {
            a[i] = cplx{rng.normal(), rng.normal()};
            na[i] = -a[i];
        }
        h1.add_spins(read_spins(a));
        h2.add_spins(read_spins(na));
    }
    CHECK(h1.counts == h2.counts);
}

TEST_CASE("integrated autocorrelation time estimates") {
    SUBCASE("i.i.d. series has tau ~ 1") {
        GaussianRng rng(5);
        std::vector<double> x(200000);
        for (auto& e : x) e = rng.normal();
        CHECK(integrated_autocorrelation_time(x) == doctest::Approx(1.0).epsilon(0.05));
    }
    SUBCASE("AR(1) series has tau = (1+rho)/(1-rho)") {
        const double rho = 0.8;
        GaussianRng rng(6);
        std::vector<double> x(400000);
        x[0] = rng.normal();
        for (std::size_t i = 1; i < x.size(); ++i)
            x[i] = rho * x[i - 1] + std::sqrt(1.0 - rho * rho) * rng.normal();
        const double expect = (1.0 + rho) / (1.0 - rho);  // 9
        CHECK(integrated_autocorrelation_time(x) == doctest::Approx(expect).epsilon(0.15));
    }
    SUBCASE("constant series yields NaN") {
        std::vector<double> x(100, 3.0);
        CHECK(std::isnan(integrated_autocorrelation_time(x)));
    }
}

TEST_CASE("run_sampling aggregates a short noisy run") {
    const auto g = gen_sk(4, 0.05, 50);
    SimParams p;
    p.eta = 0.1;
    p.pump = 1.1 * threshold_pump(g, 1.0);
    p.t_max = 50.0;
    p.sample_interval = 0.1;
    p.burn_in = 5.0;
    p.seed = 11;
    const auto run = run_sampling(g, p);
    CHECK(run.completed);
    CHECK(run.hist.total == run.run.samples);
    CHECK(run.energies.size() == run.run.samples);
    CHECK(run.run.samples == 450);
    const auto spec = enumerate_spectrum(g);
    const auto stats = per_energy_probabilities(run.hist, g, spec);
    std::uint64_t total = 0;
    for (const auto& row : stats) total += row.count;
    CHECK(total == run.hist.total);
}
