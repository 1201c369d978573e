#include "oim/spectrum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "oim/errors.hpp"

namespace oim {

std::vector<int> mask_to_spins(std::uint64_t mask, int n) {
    std::vector<int> s(n);
    for (int i = 0; i < n; ++i) s[i] = (mask >> i) & 1 ? -1 : 1;
    return s;
}

std::uint64_t spins_to_mask(std::span<const int> sigma) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < sigma.size(); ++i)
        if (sigma[i] < 0) m |= std::uint64_t{1} << i;
    return m;
}

std::uint64_t canonical_mask(std::uint64_t mask, int n) {
    if (mask & 1) {
        const std::uint64_t all = (n >= 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1);
        return mask ^ all;
    }
    return mask;
}

std::string mask_to_string(std::uint64_t mask, int n) {
    std::string s(n, '+');
    for (int i = 0; i < n; ++i)
        if ((mask >> i) & 1) s[i] = '-';
    return s;
}

std::uint64_t SpectrumTable::total_multiplicity() const {
    std::uint64_t t = 0;
    for (const auto& l : levels) t += l.multiplicity;
    return t;
}

std::size_t SpectrumTable::find_level(double energy) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), energy,
                               [](const SpectrumLevel& l, double e) { return l.energy < e; });
    std::size_t best = levels.size();
    double best_d = std::numeric_limits<double>::infinity();
    if (it != levels.end()) {
        best = static_cast<std::size_t>(it - levels.begin());
        best_d = std::abs(it->energy - energy);
    }
    if (it != levels.begin()) {
        const auto prev = it - 1;
        const double d = std::abs(prev->energy - energy);
        if (d < best_d) {
            best = static_cast<std::size_t>(prev - levels.begin());
            best_d = d;
        }
    }
    // Slack absorbs the difference between incremental (Gray-code) and direct
    // energy evaluation; level spacings are far larger in practice.
    const double span = levels.empty() ? 0.0
                                       : std::max(std::abs(levels.front().energy),
                                                  std::abs(levels.back().energy));
    const double slack = std::max(tol, 1e-9 * std::max(1e-300, span));
    if (best >= levels.size() || best_d > slack)
        throw param_error("energy does not match any spectrum level (graph mismatch?)");
    return best;
}

SpectrumTable enumerate_spectrum(const CouplingGraph& g, double tol) {
    const int n = g.n;
    if (n > kMaxEnumerationModes)
        throw param_error("enumeration is limited to n <= " +
                          std::to_string(kMaxEnumerationModes) + ", got n=" + std::to_string(n));
    if (tol < 0.0) tol = 1e-9 * g.max_abs();

    const std::uint64_t count = std::uint64_t{1} << (n - 1);
    std::vector<double> energy(count);
    std::vector<std::uint32_t> mask(count);

    // Gray-code walk over the n-1 free spins (sigma_0 fixed to +1); one spin
    // flip per step keeps the energy update O(n).
    std::vector<int> sigma(n, 1);
    double e = ising_energy(g, sigma);
    energy[0] = e;
    mask[0] = 0;
    for (std::uint64_t k = 1; k < count; ++k) {
        const int b = std::countr_zero(k) + 1;
        double field = 0.0;
        const double* r = g.row(b);
        for (int j = 0; j < n; ++j) field += r[j] * sigma[j];
        e += 2.0 * sigma[b] * field;
        sigma[b] = -sigma[b];
        energy[k] = e;
        mask[k] = static_cast<std::uint32_t>((k ^ (k >> 1)) << 1);
    }

    std::vector<std::uint32_t> order(count);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (energy[a] != energy[b]) return energy[a] < energy[b];
        return mask[a] < mask[b];
    });

    SpectrumTable table;
    table.n = n;
    table.tol = tol;
    table.graph_hash = graph_hash(g);

    double anchor = 0.0;
    for (std::uint64_t idx = 0; idx < count; ++idx) {
        const std::uint32_t o = order[idx];
        if (table.levels.empty() || energy[o] - anchor > tol) {
            anchor = energy[o];
            table.levels.push_back({energy[o], 2, mask[o]});
        } else {
            table.levels.back().multiplicity += 2;
        }
    }

    const double ground = table.levels.front().energy;
    for (std::uint64_t idx = 0; idx < count && energy[order[idx]] - ground <= tol; ++idx)
        table.ground_states.push_back(mask[order[idx]]);
    return table;
}

std::vector<double> boltzmann_exact(const SpectrumTable& spec, double temperature) {
    if (!(temperature > 0.0)) throw param_error("temperature must be positive");
    const double e0 = spec.ground_energy();
    std::vector<double> p(spec.levels.size());
    double z = 0.0;
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        p[i] = static_cast<double>(spec.levels[i].multiplicity) *
               std::exp(-(spec.levels[i].energy - e0) / temperature);
        z += p[i];
    }
    for (double& x : p) x /= z;
    return p;
}

double delta_energy(const CouplingGraph& g, std::span<const int> sigma, int i) {
    if (static_cast<int>(sigma.size()) != g.n)
        throw param_error("spin vector length does not match graph size");
    if (i < 0 || i >= g.n) throw param_error("spin index out of range");
    double field = 0.0;
    const double* r = g.row(i);
    for (int j = 0; j < g.n; ++j) field += r[j] * sigma[j];
    return 2.0 * sigma[i] * field;
}

void write_spectrum_csv(const SpectrumTable& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "energy,multiplicity,example_configuration\n";
    char buf[64];
    for (const auto& l : spec.levels) {
        std::snprintf(buf, sizeof buf, "%.17g,%llu,", l.energy,
                      static_cast<unsigned long long>(l.multiplicity));
        out << buf << mask_to_string(l.example, spec.n) << '\n';
    }
    if (!out) throw io_error("write failure on " + path.string());
}

}  // namespace oim
