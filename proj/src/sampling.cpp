#include "oim/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oim/errors.hpp"

namespace oim {

std::vector<int> read_spins(std::span<const cplx> alpha, int tie_break) {
    if (tie_break != 1 && tie_break != -1) throw param_error("tie_break must be +1 or -1");
    std::vector<int> sigma(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        const double re = alpha[i].real();
        if (!std::isfinite(re) || !std::isfinite(alpha[i].imag()))
            throw param_error("non-finite amplitude in spin readout");
        sigma[i] = re > 0.0 ? 1 : (re < 0.0 ? -1 : tie_break);
    }
    return sigma;
}

void EnergyHistogram::add_spins(std::span<const int> sigma) {
    if (static_cast<int>(sigma.size()) != n)
        throw param_error("sample dimension does not match histogram");
    add_mask(spins_to_mask(sigma));
}

void EnergyHistogram::add_mask(std::uint64_t mask) {
    ++counts[canonical_mask(mask, n)];
    ++total;
}

void EnergyHistogram::merge(const EnergyHistogram& other) {
    if (other.n != n || other.graph_hash != graph_hash)
        throw param_error("cannot merge histograms of different graphs");
    for (const auto& [mask, c] : other.counts) counts[mask] += c;
    total += other.total;
}

std::vector<EnergyLevelStat> per_energy_probabilities(const EnergyHistogram& hist,
                                                      const CouplingGraph& g,
                                                      const SpectrumTable& spec) {
    if (hist.n != g.n || spec.n != g.n || hist.graph_hash != graph_hash(g) ||
        spec.graph_hash != hist.graph_hash)
        throw param_error("histogram, spectrum and graph do not describe the same instance");

    std::vector<EnergyLevelStat> out(spec.levels.size());
    for (std::size_t i = 0; i < spec.levels.size(); ++i) {
        out[i].energy = spec.levels[i].energy;
        out[i].multiplicity = spec.levels[i].multiplicity;
    }
    for (const auto& [mask, c] : hist.counts) {
        const auto sigma = mask_to_spins(mask, g.n);
        out[spec.find_level(ising_energy(g, sigma))].count += c;
    }
    const double tot = hist.total > 0 ? static_cast<double>(hist.total) : 1.0;
    for (auto& row : out) {
        row.p_energy = static_cast<double>(row.count) / tot;
        row.p_per_config = row.p_energy / static_cast<double>(row.multiplicity);
    }
    return out;
}

double success_probability(const EnergyHistogram& hist, const CouplingGraph& g,
                           const SpectrumTable& spec) {
    return per_energy_probabilities(hist, g, spec).front().p_energy;
}

TempFit fit_temperature(const std::vector<FitPoint>& levels, std::uint64_t min_count) {
    std::vector<FitPoint> used;
    for (const auto& l : levels)
        if (l.count >= min_count && l.probability > 0.0) used.push_back(l);
    if (used.size() < 3)
        throw param_error("insufficient data: " + std::to_string(used.size()) +
                          " levels with count >= " + std::to_string(min_count) +
                          " (need at least 3)");

    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (const auto& l : used) {
        const double w = static_cast<double>(l.count);
        sw += w;
        swx += w * l.energy;
        swy += w * std::log(l.probability);
    }
    const double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& l : used) {
        const double w = static_cast<double>(l.count);
        const double dx = l.energy - xbar;
        sxx += w * dx * dx;
        sxy += w * dx * (std::log(l.probability) - ybar);
    }
    if (sxx <= 0.0) throw param_error("degenerate fit: all levels at the same energy");
    const double slope = sxy / sxx;
    const double intercept = ybar - slope * xbar;

    double chi2 = 0.0, sstot = 0.0;
    for (const auto& l : used) {
        const double w = static_cast<double>(l.count);
        const double y = std::log(l.probability);
        const double resid = y - (intercept + slope * l.energy);
        chi2 += w * resid * resid;
        sstot += w * (y - ybar) * (y - ybar);
    }
    if (slope >= 0.0)
        throw param_error("no thermal fit: ln P vs E slope is non-negative (" +
                          std::to_string(slope) + ")");

    TempFit fit;
    fit.slope = slope;
    fit.intercept = intercept;
    fit.t_eff = -1.0 / slope;
    const double dof = static_cast<double>(used.size()) - 2.0;
    const double slope_var = (chi2 / dof) / sxx;
    fit.std_err = std::sqrt(slope_var) / (slope * slope);
    fit.r_squared = sstot > 0.0 ? 1.0 - chi2 / sstot : 1.0;
    fit.n_points = static_cast<int>(used.size());
    return fit;
}

double integrated_autocorrelation_time(std::span<const double> series) {
    const std::size_t len = series.size();
    if (len < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(len);
    double c0 = 0.0;
    for (double x : series) c0 += (x - mean) * (x - mean);
    c0 /= static_cast<double>(len);
    if (c0 <= 0.0) return std::numeric_limits<double>::quiet_NaN();

    double tau = 1.0;
    const std::size_t wmax = len / 3;
    for (std::size_t w = 1; w < wmax; ++w) {
        double cw = 0.0;
        for (std::size_t i = 0; i + w < len; ++i)
            cw += (series[i] - mean) * (series[i + w] - mean);
        cw /= static_cast<double>(len - w);
        tau += 2.0 * cw / c0;
        if (static_cast<double>(w) >= 5.0 * tau) break;  // Sokal window
    }
    return std::max(tau, 1e-12);
}

double SamplingRun::autocorrelation_time() const {
    return integrated_autocorrelation_time(energies);
}

SamplingRun run_sampling(const CouplingGraph& g, const SimParams& params,
                         const SampleObserver& tee) {
    SamplingRun out;
    out.hist = EnergyHistogram(g.n, graph_hash(g));
    const auto observer = [&](double t, std::span<const cplx> alpha) {
        const auto sigma = read_spins(alpha);
        out.hist.add_spins(sigma);
        out.energies.push_back(ising_energy(g, sigma));
        if (tee) tee(t, alpha);
    };
    try {
        out.run = run_trajectory(g, params, observer);
    } catch (const numeric_error& e) {
        out.completed = false;
        out.error = e.what();
        out.run.samples = e.samples_collected;
        out.run.t_final = e.t_failed;
    }
    return out;
}

}  // namespace oim
