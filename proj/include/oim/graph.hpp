#pragma once

// Ising coupling matrices: generation, validation, spectral quantities and
// the text file format. All operations are pure; CouplingGraph values are
// immutable after construction and safe to share between threads.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oim {

enum class GraphKind { sk, k, custom };

std::string kind_name(GraphKind k);

struct CouplingGraph {
    int n = 0;
    std::vector<double> j;  // n*n row-major, symmetric, zero diagonal
    GraphKind kind = GraphKind::custom;
    std::optional<std::uint64_t> seed;

    double at(int i, int k) const { return j[static_cast<std::size_t>(i) * n + k]; }
    const double* row(int i) const { return j.data() + static_cast<std::size_t>(i) * n; }

    // Sum_k |J[i][k]| for row i.
    double row_abs_sum(int i) const;
    double max_abs() const;
};

// Fully connected graph with Gaussian couplings ~ N(0, std_dev^2) on the
// upper triangle (row-major draw order), mirrored below.
CouplingGraph gen_sk(int n, double std_dev, std::uint64_t seed);

// Fully connected graph with couplings +-j0, fair sign per edge.
CouplingGraph gen_k(int n, double j0, std::uint64_t seed);

// Wraps a caller-provided matrix; throws param_error unless it is square,
// exactly symmetric with zero diagonal.
CouplingGraph make_custom(int n, std::vector<double> j);

// Uniform rescale J -> c*J, c > 0.
CouplingGraph rescaled(const CouplingGraph& g, double c);

// Residual one-photon rates r_i = gamma - Sum_k |J[i][k]|. Throws
// infeasible_error (naming the worst mode and the maximal admissible uniform
// rescale factor) if any r_i < 0.
std::vector<double> validate_rates(const CouplingGraph& g, double gamma);

// Largest eigenvalue of J (symmetric, so real). Cyclic Jacobi; accurate to
// better than 1e-10 relative for n <= 64.
double max_eigenvalue(const CouplingGraph& g);

// Oscillation threshold G_th = (gamma - lambda_max)/2. Requires feasible rates.
double threshold_pump(const CouplingGraph& g, double gamma);

// E[sigma] = -(1/2) Sum_{i,j} J[i][j] sigma_i sigma_j, sigma_i in {-1,+1}.
double ising_energy(const CouplingGraph& g, std::span<const int> sigma);

// Text format, exact decimal round-trip:
//   ising-graph v1 n=<N> kind=<SK|K|custom> seed=<int|none>
//   <i> <j> <J_ij>     (upper triangle, i < j, 0-based; missing pairs are 0)
void save_graph(const CouplingGraph& g, const std::filesystem::path& path);
CouplingGraph load_graph(const std::filesystem::path& path);

// FNV-1a over (n, upper-triangle bytes); identifies the instance in
// histograms and manifests.
std::uint64_t graph_hash(const CouplingGraph& g);

}  // namespace oim
