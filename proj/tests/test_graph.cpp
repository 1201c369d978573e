#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oim/errors.hpp"
#include "oim/graph.hpp"
#include "oim/spectrum.hpp"
#include "oracles.hpp"

using namespace oim;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove(p);
    return p;
}

}  // namespace

TEST_CASE("gen_sk produces symmetric zero-diagonal matrices, deterministically") {
    const auto g = gen_sk(2, 0.3, 7);
    CHECK(g.at(0, 1) == g.at(1, 0));
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(1, 1) == 0.0);

    const auto a = gen_sk(10, 0.05, 42);
    const auto b = gen_sk(10, 0.05, 42);
    CHECK(a.j == b.j);  // bitwise
    const auto c = gen_sk(10, 0.05, 43);
    CHECK(a.j != c.j);

    CHECK_THROWS_AS(gen_sk(1, 0.1, 0), param_error);
    CHECK_THROWS_AS(gen_sk(4, 0.0, 0), param_error);
    CHECK_THROWS_AS(gen_sk(4, -1.0, 0), param_error);
}

TEST_CASE("gen_sk entry variance matches the requested std_dev within 1%") {
    // ~1e6 upper-triangle entries; the variance estimator's own relative
    // error is sqrt(2/M) ~ 0.14%.
    const int n = 1415;
    const double sd = 0.7;
    const auto g = gen_sk(n, sd, 99);
    double sum = 0.0, sum2 = 0.0;
    std::size_t m = 0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
            const double x = g.at(i, k);
            sum += x;
            sum2 += x * x;
            ++m;
        }
    const double mean = sum / static_cast<double>(m);
    const double var = sum2 / static_cast<double>(m) - mean * mean;
    CHECK(var == doctest::Approx(sd * sd).epsilon(0.01));
}

TEST_CASE("gen_k draws +-j0 with fair signs") {
    const auto g = gen_k(4, 1.0, 5);
    for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k)
            if (i != k) CHECK(std::abs(g.at(i, k)) == 1.0);

    const auto g2 = gen_k(2, 0.25, 11);
    CHECK((g2.at(0, 1) == 0.25 || g2.at(0, 1) == -0.25));

    const int n = 1415;  // ~1e6 sign draws
    const auto big = gen_k(n, 1.0, 123);
    std::size_t pos = 0, m = 0;
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k) {
            pos += big.at(i, k) > 0.0;
            ++m;
        }
    const double frac = static_cast<double>(pos) / static_cast<double>(m);
    const double sigma = 0.5 / std::sqrt(static_cast<double>(m));
    CHECK(std::abs(frac - 0.5) < 3.0 * sigma);
}

TEST_CASE("validate_rates returns residual rates and flags infeasibility") {
    auto g0 = make_custom(3, std::vector<double>(9, 0.0));
    const auto r0 = validate_rates(g0, 1.0);
    for (double r : r0) CHECK(r == 1.0);

    std::vector<double> j = {0.0, 0.3, 0.3, 0.0};
    const auto g = make_custom(2, j);
    const auto r = validate_rates(g, 1.0);
    CHECK(r[0] == doctest::Approx(0.7));
    CHECK(r[1] == doctest::Approx(0.7));

    // Over-strong coupling becomes feasible again after rescaling by 0.5.
    std::vector<double> j2 = {0.0, 0.6, 0.6, 0.0};
    const auto g2 = make_custom(2, j2);
    const auto r2 = validate_rates(rescaled(g2, 0.5), 1.0);
    CHECK(r2[0] == doctest::Approx(0.7));
    CHECK(r2[1] == doctest::Approx(0.7));

    std::vector<double> j3 = {0.0, 1.5, 1.5, 0.0};
    const auto g3 = make_custom(2, j3);
    try {
        validate_rates(g3, 1.0);
        FAIL("expected infeasible_error");
    } catch (const infeasible_error& e) {
        CHECK(e.worst_mode >= 0);
        CHECK(e.max_rescale == doctest::Approx(1.0 / 1.5));
        CHECK(std::string(e.what()).find("mode") != std::string::npos);
    }
}

TEST_CASE("max_eigenvalue: trivial cases and the power-iteration oracle") {
    auto g0 = make_custom(3, std::vector<double>(9, 0.0));
    CHECK(max_eigenvalue(g0) == 0.0);

    // 2x2 symmetric with zero diagonal has eigenvalues +-c.
    for (double c : {0.5, -0.5}) {
        std::vector<double> j = {0.0, c, c, 0.0};
        CHECK(max_eigenvalue(make_custom(2, j)) == doctest::Approx(std::abs(c)).epsilon(1e-12));
    }

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto g = gen_sk(8, 0.1, seed);
        const double jac = max_eigenvalue(g);
        const double pow_it = oracles::power_iteration_lambda_max(g);
        CHECK(jac == doctest::Approx(pow_it).epsilon(1e-8));
    }
}

TEST_CASE("threshold_pump follows (gamma - lambda_max)/2") {
    auto g0 = make_custom(2, std::vector<double>(4, 0.0));
    CHECK(threshold_pump(g0, 1.0) == doctest::Approx(0.5));

    std::vector<double> j = {0.0, 0.4, 0.4, 0.0};
    CHECK(threshold_pump(make_custom(2, j), 1.0) == doctest::Approx(0.3));

    const auto g = gen_sk(10, 0.03, 21);
    CHECK(threshold_pump(g, 1.0) ==
          doctest::Approx(0.5 * (1.0 - max_eigenvalue(g))).epsilon(1e-15));

    // Scaling J up lowers the threshold monotonically (lambda_max > 0 here).
    const double t1 = threshold_pump(g, 1.0);
    const double t2 = threshold_pump(rescaled(g, 1.5), 1.0);
    const double t3 = threshold_pump(rescaled(g, 2.0), 1.0);
    CHECK(t1 > t2);
    CHECK(t2 > t3);
}

TEST_CASE("ising_energy basics and global-flip symmetry") {
    auto g0 = make_custom(3, std::vector<double>(9, 0.0));
    const std::vector<int> s0 = {1, -1, 1};
    CHECK(ising_energy(g0, s0) == 0.0);

    const double c = 0.8;
    std::vector<double> j = {0.0, c, c, 0.0};
    const auto g2 = make_custom(2, j);
    const std::vector<int> up = {1, 1};
    CHECK(ising_energy(g2, up) == doctest::Approx(-c));

    const auto g = gen_sk(10, 0.2, 17);
    Xoshiro256pp rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> s(10), neg(10);
        for (int i = 0; i < 10; ++i) {
            s[i] = (rng.next_u64() >> 63) ? 1 : -1;
            neg[i] = -s[i];
        }
        CHECK(ising_energy(g, s) == doctest::Approx(ising_energy(g, neg)).epsilon(1e-14));
    }

    const std::vector<int> bad_len = {1, 1, 1};
    CHECK_THROWS_AS(ising_energy(g2, bad_len), param_error);
    const std::vector<int> bad_val = {1, 2};
    CHECK_THROWS_AS(ising_energy(g2, bad_val), param_error);
}

TEST_CASE("energy multiset is gauge covariant and rescales linearly") {
    const int n = 8;
    const auto g = gen_sk(n, 0.1, 33);

    // Gauge transform J -> S J S with a diagonal sign matrix.
    std::vector<int> sgn(n);
    Xoshiro256pp rng(9);
    for (auto& s : sgn) s = (rng.next_u64() >> 63) ? 1 : -1;
    std::vector<double> jg(g.j);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) jg[static_cast<std::size_t>(i) * n + k] *= sgn[i] * sgn[k];
    const auto gg = make_custom(n, jg);

    auto energies = [&](const CouplingGraph& graph) {
        std::vector<double> e;
        for (std::uint64_t m = 0; m < (1u << n); ++m) {
            const auto s = mask_to_spins(m, n);
            e.push_back(ising_energy(graph, s));
        }
        std::sort(e.begin(), e.end());
        return e;
    };
    const auto e1 = energies(g), e2 = energies(gg);
    for (std::size_t i = 0; i < e1.size(); ++i)
        CHECK(e1[i] == doctest::Approx(e2[i]).epsilon(1e-10));

    // J -> cJ rescales every energy by c and keeps the argmin configuration.
    const double cscale = 2.5;
    const auto gs = rescaled(g, cscale);
    const auto spec = enumerate_spectrum(g, 0.0);
    const auto spec_s = enumerate_spectrum(gs, 0.0);
    CHECK(spec_s.ground_energy() == doctest::Approx(cscale * spec.ground_energy()));
    CHECK(spec_s.ground_states == spec.ground_states);
}

TEST_CASE("graph file round-trips bitwise and rejects malformed input") {
    const auto g = gen_sk(10, 0.07, 4242);
    const auto p = temp_file("oim_graph_roundtrip.txt");
    save_graph(g, p);
    const auto g2 = load_graph(p);
    CHECK(g2.n == g.n);
    CHECK(g2.j == g.j);  // bitwise
    CHECK(g2.kind == GraphKind::sk);
    CHECK(g2.seed == g.seed);
    fs::remove(p);

    auto write_and_try = [&](const char* body) {
        const auto bad = temp_file("oim_graph_bad.txt");
        std::ofstream out(bad);
        out << body;
        out.close();
        CHECK_THROWS_AS(load_graph(bad), io_error);
        fs::remove(bad);
    };
    write_and_try("ising-graph v1 n=2 kind=custom seed=none\n1 0 0.5\n");   // lower triangle
    write_and_try("ising-graph v1 n=2 kind=custom seed=none\n0 0 0.5\n");   // diagonal
    write_and_try("ising-graph v1 n=2 kind=custom seed=none\n0 1 x\n");     // non-numeric
    write_and_try("ising-graph v1 n=2 kind=custom seed=none\n0 1 0.5\n0 1 0.5\n");  // duplicate
    write_and_try("not-a-graph v1 n=2\n");

    // Missing pairs default to zero.
    const auto sparse = temp_file("oim_graph_sparse.txt");
    {
        std::ofstream out(sparse);
        out << "ising-graph v1 n=3 kind=custom seed=none\n0 2 0.125\n";
    }
    const auto g3 = load_graph(sparse);
    CHECK(g3.at(0, 1) == 0.0);
    CHECK(g3.at(0, 2) == 0.125);
    CHECK(g3.at(2, 0) == 0.125);
    fs::remove(sparse);
}

TEST_CASE("make_custom validates symmetry and diagonal") {
    std::vector<double> asym = {0.0, 0.1, 0.2, 0.0};
    CHECK_THROWS_AS(make_custom(2, asym), param_error);
    std::vector<double> diag = {0.5, 0.1, 0.1, 0.0};
    CHECK_THROWS_AS(make_custom(2, diag), param_error);
}
