#include "oim/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "oim/errors.hpp"
#include "oim/rng.hpp"

namespace oim {

std::string kind_name(GraphKind k) {
    switch (k) {
        case GraphKind::sk: return "SK";
        case GraphKind::k: return "K";
        default: return "custom";
    }
}

double CouplingGraph::row_abs_sum(int i) const {
    double s = 0.0;
    const double* r = row(i);
    for (int k = 0; k < n; ++k) s += std::abs(r[k]);
    return s;
}

double CouplingGraph::max_abs() const {
    double m = 0.0;
    for (double x : j) m = std::max(m, std::abs(x));
    return m;
}

namespace {

void check_gen_args(int n) {
    if (n < 2) throw param_error("graph generation requires n >= 2, got n=" + std::to_string(n));
}

}  // namespace

CouplingGraph gen_sk(int n, double std_dev, std::uint64_t seed) {
    check_gen_args(n);
    if (!(std_dev > 0.0)) throw param_error("gen_sk requires std_dev > 0");
    CouplingGraph g;
    g.n = n;
    g.j.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.kind = GraphKind::sk;
    g.seed = seed;
    GaussianRng rng(seed);
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k < n; ++k) {
            const double val = std_dev * rng.normal();
            g.j[static_cast<std::size_t>(i) * n + k] = val;
            g.j[static_cast<std::size_t>(k) * n + i] = val;
        }
    }
    return g;
}

CouplingGraph gen_k(int n, double j0, std::uint64_t seed) {
    check_gen_args(n);
    if (!(j0 > 0.0)) throw param_error("gen_k requires j0 > 0");
    CouplingGraph g;
    g.n = n;
    g.j.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.kind = GraphKind::k;
    g.seed = seed;
    Xoshiro256pp rng(seed);
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k < n; ++k) {
            const double val = (rng.next_u64() >> 63) ? -j0 : j0;
            g.j[static_cast<std::size_t>(i) * n + k] = val;
            g.j[static_cast<std::size_t>(k) * n + i] = val;
        }
    }
    return g;
}

CouplingGraph make_custom(int n, std::vector<double> j) {
    if (n < 1) throw param_error("graph requires n >= 1");
    if (j.size() != static_cast<std::size_t>(n) * n)
        throw param_error("coupling matrix size does not match n");
    for (int i = 0; i < n; ++i) {
        if (j[static_cast<std::size_t>(i) * n + i] != 0.0)
            throw param_error("coupling matrix has nonzero diagonal at mode " + std::to_string(i));
        for (int k = i + 1; k < n; ++k) {
            if (j[static_cast<std::size_t>(i) * n + k] != j[static_cast<std::size_t>(k) * n + i])
                throw param_error("coupling matrix is not symmetric at (" + std::to_string(i) +
                                  "," + std::to_string(k) + ")");
        }
    }
    CouplingGraph g;
    g.n = n;
    g.j = std::move(j);
    g.kind = GraphKind::custom;
    return g;
}

CouplingGraph rescaled(const CouplingGraph& g, double c) {
    if (!(c > 0.0)) throw param_error("rescale factor must be positive");
    CouplingGraph out = g;
    for (double& x : out.j) x *= c;
    return out;
}

std::vector<double> validate_rates(const CouplingGraph& g, double gamma) {
    if (!(gamma > 0.0)) throw param_error("gamma must be positive");
    std::vector<double> r(g.n);
    int worst = -1;
    double worst_sum = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double s = g.row_abs_sum(i);
        r[i] = gamma - s;
        if (s > worst_sum) {
            worst_sum = s;
            worst = i;
        }
    }
    if (worst >= 0 && r[worst] < 0.0) {
        const double rescale = gamma / worst_sum;
        std::ostringstream msg;
        msg << "infeasible rates: mode " << worst << " has sum_k |J| = " << worst_sum
            << " > gamma = " << gamma << "; rescaling J by a factor <= " << rescale
            << " restores feasibility";
        throw infeasible_error(msg.str(), worst, rescale);
    }
    return r;
}

double max_eigenvalue(const CouplingGraph& g) {
    const int n = g.n;
    if (n == 1) return 0.0;
    std::vector<double> a = g.j;
    auto at = [&](int p, int q) -> double& { return a[static_cast<std::size_t>(p) * n + q]; };

    double scale = 0.0;
    for (double x : a) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(at(p, q)));
        if (off <= 1e-15 * scale) break;

        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    double lmax = at(0, 0);
    for (int i = 1; i < n; ++i) lmax = std::max(lmax, at(i, i));
    return lmax;
}

double threshold_pump(const CouplingGraph& g, double gamma) {
    validate_rates(g, gamma);
    return 0.5 * (gamma - max_eigenvalue(g));
}

double ising_energy(const CouplingGraph& g, std::span<const int> sigma) {
    if (static_cast<int>(sigma.size()) != g.n)
        throw param_error("spin vector length does not match graph size");
    for (int s : sigma)
        if (s != 1 && s != -1) throw param_error("spin entries must be +1 or -1");
    double e = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double* r = g.row(i);
        for (int k = i + 1; k < g.n; ++k) e -= r[k] * sigma[i] * sigma[k];
    }
    return e;
}

void save_graph(const CouplingGraph& g, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path.string() + " for writing");
    out << "ising-graph v1 n=" << g.n << " kind=" << kind_name(g.kind) << " seed=";
    if (g.seed)
        out << *g.seed;
    else
        out << "none";
    out << '\n';
    char buf[40];
    for (int i = 0; i < g.n; ++i) {
        for (int k = i + 1; k < g.n; ++k) {
            const double val = g.at(i, k);
            if (val == 0.0) continue;
            // shortest decimal that round-trips exactly
            const auto res = std::to_chars(buf, buf + sizeof buf, val);
            out << i << ' ' << k << ' ' << std::string_view(buf, res.ptr - buf) << '\n';
        }
    }
    if (!out) throw io_error("write failure on " + path.string());
}

CouplingGraph load_graph(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw io_error(path.string() + ": empty file");

    std::istringstream hs(line);
    std::string magic, ver, tok;
    hs >> magic >> ver;
    if (magic != "ising-graph" || ver != "v1")
        throw io_error(path.string() + " line 1: expected 'ising-graph v1' header");

    int n = -1;
    GraphKind kind = GraphKind::custom;
    std::optional<std::uint64_t> seed;
    while (hs >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw io_error(path.string() + " line 1: malformed header field '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "n") {
            n = std::stoi(val);
        } else if (key == "kind") {
            if (val == "SK")
                kind = GraphKind::sk;
            else if (val == "K")
                kind = GraphKind::k;
            else if (val == "custom")
                kind = GraphKind::custom;
            else
                throw io_error(path.string() + " line 1: unknown kind '" + val + "'");
        } else if (key == "seed") {
            if (val != "none") seed = std::stoull(val);
        } else {
            throw io_error(path.string() + " line 1: unknown header field '" + key + "'");
        }
    }
    if (n < 1) throw io_error(path.string() + " line 1: missing or invalid n");

    CouplingGraph g;
    g.n = n;
    g.j.assign(static_cast<std::size_t>(n) * n, 0.0);
    g.kind = kind;
    g.seed = seed;

    std::vector<bool> seen(static_cast<std::size_t>(n) * n, false);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        int i, k;
        double val;
        if (!(ls >> i >> k >> val))
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": expected '<i> <j> <J_ij>'");
        std::string rest;
        if (ls >> rest)
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": trailing content '" + rest + "'");
        if (i < 0 || k < 0 || i >= n || k >= n)
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": index out of range");
        if (i == k)
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": diagonal entries must be zero (omit them)");
        if (i > k)
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": entries must be upper triangle (i < j), got i=" + std::to_string(i) +
                           " j=" + std::to_string(k));
        const std::size_t idx = static_cast<std::size_t>(i) * n + k;
        if (seen[idx])
            throw io_error(path.string() + " line " + std::to_string(lineno) +
                           ": duplicate pair (" + std::to_string(i) + "," + std::to_string(k) + ")");
        seen[idx] = true;
        g.j[idx] = val;
        g.j[static_cast<std::size_t>(k) * n + i] = val;
    }
    return g;
}

std::uint64_t graph_hash(const CouplingGraph& g) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 0x100000001b3ULL;
        }
    };
    const std::uint64_t n64 = static_cast<std::uint64_t>(g.n);
    mix(&n64, sizeof n64);
    for (int i = 0; i < g.n; ++i)
        for (int k = i + 1; k < g.n; ++k) {
            const double v = g.at(i, k);
            mix(&v, sizeof v);
        }
    return h;
}

}  // namespace oim
