#pragma once

// Brute-force reference for small instances: exact energy spectrum with
// multiplicities, ground states, and exact Boltzmann distributions.
//
// Spin configurations are encoded as bitmasks: bit i set <=> sigma_i = -1.
// The canonical representative of the pair {sigma, -sigma} has sigma_0 = +1
// (bit 0 clear); enumeration visits canonical configurations only and doubles
// the multiplicities.

#include <cstdint>
#include <string>
#include <vector>

#include "oim/graph.hpp"

namespace oim {

constexpr int kMaxEnumerationModes = 24;

std::vector<int> mask_to_spins(std::uint64_t mask, int n);
std::uint64_t spins_to_mask(std::span<const int> sigma);
std::uint64_t canonical_mask(std::uint64_t mask, int n);
// "+-++" style string, one character per spin.
std::string mask_to_string(std::uint64_t mask, int n);

struct SpectrumLevel {
    double energy = 0.0;
    std::uint64_t multiplicity = 0;   // over all 2^n configurations
    std::uint64_t example = 0;        // canonical representative
};

struct SpectrumTable {
    int n = 0;
    double tol = 0.0;
    std::uint64_t graph_hash = 0;
    std::vector<SpectrumLevel> levels;          // ascending energy
    std::vector<std::uint64_t> ground_states;   // canonical configs at the minimum

    double ground_energy() const { return levels.front().energy; }
    std::uint64_t total_multiplicity() const;

    // Index of the level matching `energy` within max(tol, matching slack);
    // throws param_error if no level matches (graph mismatch).
    std::size_t find_level(double energy) const;
};

// Visits the 2^(n-1) canonical configurations in Gray-code order with
// incremental energy updates, then groups energies within tol (levels whose
// span from the group anchor exceeds tol start a new group). tol < 0 selects
// the default 1e-9 * max|J|. Guarded at n <= 24.
SpectrumTable enumerate_spectrum(const CouplingGraph& g, double tol = -1.0);

// Per-level probabilities P(E) = n(E) exp(-E/T) / Z for temperature T > 0
// (k_B absorbed: E and T share units). Sums to 1 within 1e-12.
std::vector<double> boltzmann_exact(const SpectrumTable& spec, double temperature);

// Energy change of flipping spin i: 2 sigma_i Sum_j J[i][j] sigma_j.
double delta_energy(const CouplingGraph& g, std::span<const int> sigma, int i);

// CSV export: energy, multiplicity, example_configuration.
void write_spectrum_csv(const SpectrumTable& spec, const std::filesystem::path& path);

}  // namespace oim
