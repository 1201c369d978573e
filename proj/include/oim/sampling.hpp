#pragma once

// Spin readout, occupancy statistics keyed on canonical configurations, the
// effective-temperature fit, and the trajectory -> histogram pipeline.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "oim/dynamics.hpp"
#include "oim/graph.hpp"
#include "oim/spectrum.hpp"

namespace oim {

// sigma_i = sign(Re alpha_i); an exact zero resolves to tie_break (+1 or -1).
std::vector<int> read_spins(std::span<const cplx> alpha, int tie_break = 1);

// Counts per canonical configuration (sigma_0 = +1 representative of the
// {sigma, -sigma} pair). Merging is plain count addition, so histograms from
// independent runs reduce associatively and commutatively.
struct EnergyHistogram {
    int n = 0;
    std::uint64_t graph_hash = 0;
    std::uint64_t total = 0;
    std::unordered_map<std::uint64_t, std::uint64_t> counts;

    EnergyHistogram() = default;
    EnergyHistogram(int n_, std::uint64_t hash) : n(n_), graph_hash(hash) {}

    void add_spins(std::span<const int> sigma);
    void add_mask(std::uint64_t mask);  // canonicalized internally
    void merge(const EnergyHistogram& other);
};

struct EnergyLevelStat {
    double energy = 0.0;
    std::uint64_t multiplicity = 0;
    std::uint64_t count = 0;
    double p_energy = 0.0;      // level count / total samples
    double p_per_config = 0.0;  // p_energy / multiplicity
};

// One row per spectrum level (zero-count levels included with P == 0).
std::vector<EnergyLevelStat> per_energy_probabilities(const EnergyHistogram& hist,
                                                      const CouplingGraph& g,
                                                      const SpectrumTable& spec);

// Fraction of samples whose configuration attains the ground energy.
double success_probability(const EnergyHistogram& hist, const CouplingGraph& g,
                           const SpectrumTable& spec);

struct FitPoint {
    double energy = 0.0;
    double probability = 0.0;  // per-configuration (or per-energy, caller's choice)
    std::uint64_t count = 0;
};

struct TempFit {
    double t_eff = 0.0;
    double std_err = 0.0;
    double r_squared = 0.0;
    int n_points = 0;
    double slope = 0.0;      // of ln P vs E
    double intercept = 0.0;
};

// Weighted least squares of ln(probability) vs energy with weights = count;
// levels below min_count are dropped. Slope s < 0 gives t_eff = -1/s with the
// chi^2-scaled slope standard error (invariant under uniform count rescaling).
// Throws param_error on fewer than 3 usable levels or a non-negative slope.
TempFit fit_temperature(const std::vector<FitPoint>& levels, std::uint64_t min_count);

// Integrated autocorrelation time of a stationary series, adaptive window
// (smallest W with W >= 5 tau(W)). Returns NaN for a constant series.
double integrated_autocorrelation_time(std::span<const double> series);

// Runs one trajectory and accumulates spin statistics. On integration
// blow-up the partial statistics are returned with completed == false.
struct SamplingRun {
    EnergyHistogram hist;
    std::vector<double> energies;  // Ising energy of every recorded sample
    RunResult run;
    bool completed = true;
    std::string error;

    double autocorrelation_time() const;
};

SamplingRun run_sampling(const CouplingGraph& g, const SimParams& params,
                         const SampleObserver& tee = nullptr);

}  // namespace oim
