// oim: coupled-OPO Ising machine trajectory sampler.
//
// Subcommands: generate-graph, enumerate, simulate, fit, sweep-pump.
// Exit codes: 0 success, 1 usage/input error, 2 infeasible physics,
// 3 numerical failure.
//
// All randomness derives from one base seed: the trajectory of sweep point i
// (and of `simulate`, which is point 0) uses derive_seed(base, "trajectory", i);
// inside a trajectory the noise and initial-perturbation streams are
// derive_seed(traj_seed, "noise") and derive_seed(traj_seed, "init").

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "oim/dynamics.hpp"
#include "oim/errors.hpp"
#include "oim/graph.hpp"
#include "oim/kernels.hpp"
#include "oim/rng.hpp"
#include "oim/sampling.hpp"
#include "oim/spectrum.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace oim;

namespace {

constexpr const char* kVersion = "1.0.0";

// Shortest decimal that round-trips exactly.
std::string fmt(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// The config file is plain `key=value` lines (comments start with '#'),
// mirroring the long option names of the subcommand. It is expanded into
// arguments injected right after the subcommand token, so command-line flags
// (parsed later, take-last) override file values.
std::vector<std::string> expand_config_args(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::string cfg;
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            cfg = args[i + 1];
            ++i;
        } else if (args[i].rfind("--config=", 0) == 0) {
            cfg = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (cfg.empty()) return rest;

    std::size_t sub = 0;
    while (sub < rest.size() && !rest[sub].empty() && rest[sub][0] == '-') ++sub;
    if (sub == rest.size()) throw param_error("--config requires a subcommand");

    std::ifstream in(cfg);
    if (!in) throw io_error("cannot open config file " + cfg);
    std::vector<std::string> injected;
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw io_error(cfg + " line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty())
            throw io_error(cfg + " line " + std::to_string(lineno) + ": empty key");
        injected.push_back("--" + key + "=" + value);
    }
    std::vector<std::string> out(rest.begin(), rest.begin() + sub + 1);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin() + sub + 1, rest.end());
    return out;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw io_error("cannot open " + p.string() + " for writing");
    return out;
}

void write_json(const fs::path& p, const json& j) {
    auto out = open_out(p);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// shared simulation options
// ---------------------------------------------------------------------------

struct BudgetOpts {
    double gamma = 1.0;
    double eta = 0.1;
    double dt = 1e-3;
    double t_max = 5000.0;
    double sample_interval = 0.1;
    double burn_in = 100.0;
    double tol = -1.0;
    std::uint64_t min_count = 20;
    std::string fit_probability = "per-config";
    std::string rate_reading = "j";

    void attach(CLI::App* cmd) {
        cmd->add_option("--gamma", gamma, "One-photon loss rate (time unit 1/gamma)")
            ->capture_default_str();
        cmd->add_option("--eta", eta, "Two-photon loss rate")->capture_default_str();
        cmd->add_option("--dt", dt, "Integration step")->capture_default_str();
        cmd->add_option("--t-max", t_max, "Total integration time")->capture_default_str();
        cmd->add_option("--sample-interval", sample_interval, "Time between recorded samples")
            ->capture_default_str();
        cmd->add_option("--burn-in", burn_in, "Discarded initial time")->capture_default_str();
        cmd->add_option("--tol", tol, "Energy-level grouping tolerance (<0: 1e-9 max|J|)")
            ->capture_default_str();
        cmd->add_option("--min-count", min_count, "Minimum samples per level used in the fit")
            ->capture_default_str();
        cmd->add_option("--fit-probability", fit_probability,
                        "Probability fed to the fit: per-config or per-energy")
            ->check(CLI::IsMember({"per-config", "per-energy"}))
            ->capture_default_str();
        cmd->add_option("--rate-reading", rate_reading,
                        "Damping-rate index inside channel sums: j (summed mode) or n (row)")
            ->check(CLI::IsMember({"j", "n"}))
            ->capture_default_str();
    }

    SimParams params(double pump, std::uint64_t traj_seed) const {
        SimParams p;
        p.gamma = gamma;
        p.eta = eta;
        p.pump = pump;
        p.dt = dt;
        p.t_max = t_max;
        p.sample_interval = sample_interval;
        p.burn_in = burn_in;
        p.seed = traj_seed;
        p.rate_reading =
            rate_reading == "n" ? RateIndexReading::row_mode : RateIndexReading::summed_mode;
        return p;
    }
};

struct PumpOpts {
    double ratio = -1.0;
    double absolute = -1.0;

    void attach(CLI::App* cmd) {
        auto* r = cmd->add_option("--pump-ratio", ratio, "Pump as G/G_th");
        auto* a = cmd->add_option("--pump", absolute, "Pump as absolute G (units of gamma)");
        r->excludes(a);
    }

    // Returns {G, ratio or nan}; ratio mode requires a valid threshold.
    std::pair<double, double> resolve(const CouplingGraph& g, double gamma) const {
        if (ratio >= 0.0) {
            const double gth = threshold_pump(g, gamma);
            if (gth <= 0.0)
                throw infeasible_error("threshold pump is non-positive (lambda_max >= gamma)",
                                       -1, 0.0);
            return {ratio * gth, ratio};
        }
        if (absolute >= 0.0) return {absolute, std::numeric_limits<double>::quiet_NaN()};
        throw param_error("one of --pump-ratio or --pump is required");
    }
};

void apply_kernel_choice(const std::string& choice) {
    if (choice == "scalar") {
        kernels::set_active(kernels::scalar_ops());
    } else if (choice == "avx2") {
        const auto* ops = kernels::avx2_ops();
        if (!ops) throw param_error("AVX2 kernels are not available on this CPU/build");
        kernels::set_active(*ops);
    }
}

// ---------------------------------------------------------------------------
// output writers
// ---------------------------------------------------------------------------

void write_histogram_csv(const std::vector<EnergyLevelStat>& stats, const fs::path& p) {
    auto out = open_out(p);
    out << "energy,multiplicity,count,p_energy,p_per_config\n";
    for (const auto& row : stats)
        out << fmt(row.energy) << ',' << row.multiplicity << ',' << row.count << ','
            << fmt(row.p_energy) << ',' << fmt(row.p_per_config) << '\n';
}

void write_configs_csv(const EnergyHistogram& hist, const fs::path& p) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> rows(hist.counts.begin(),
                                                              hist.counts.end());
    std::sort(rows.begin(), rows.end());
    auto out = open_out(p);
    out << "configuration,count\n";
    for (const auto& [mask, c] : rows) out << mask_to_string(mask, hist.n) << ',' << c << '\n';
}

json fit_to_json(const TempFit& fit, double autocorr, std::uint64_t total_samples) {
    json j;
    j["t_eff"] = fit.t_eff;
    j["std_err"] = fit.std_err;
    j["r_squared"] = fit.r_squared;
    j["n_points"] = fit.n_points;
    if (std::isnan(autocorr))
        j["autocorrelation_time"] = nullptr;
    else
        j["autocorrelation_time"] = autocorr;
    j["total_samples"] = total_samples;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    return j;
}

std::vector<FitPoint> fit_points(const std::vector<EnergyLevelStat>& stats, bool per_config) {
    std::vector<FitPoint> pts;
    for (const auto& row : stats) {
        if (row.count == 0) continue;
        pts.push_back({row.energy, per_config ? row.p_per_config : row.p_energy, row.count});
    }
    return pts;
}

// Binary sample stream: magic "OIMTRJ01", u32 version, u32 n, then records of
// (t, re alpha_0, im alpha_0, ...) as little-endian f64.
class BinSampleWriter {
  public:
    BinSampleWriter(const fs::path& p, int n) : out_(p, std::ios::binary) {
        if (!out_) throw io_error("cannot open " + p.string() + " for writing");
        out_.write("OIMTRJ01", 8);
        const std::uint32_t version = 1, nn = static_cast<std::uint32_t>(n);
        out_.write(reinterpret_cast<const char*>(&version), 4);
        out_.write(reinterpret_cast<const char*>(&nn), 4);
    }
    void append(double t, std::span<const cplx> alpha) {
        buf_.clear();
        buf_.push_back(t);
        for (const auto& a : alpha) {
            buf_.push_back(a.real());
            buf_.push_back(a.imag());
        }
        out_.write(reinterpret_cast<const char*>(buf_.data()),
                   static_cast<std::streamsize>(buf_.size() * sizeof(double)));
    }

  private:
    std::ofstream out_;
    std::vector<double> buf_;
};

class CsvSampleWriter {
  public:
    CsvSampleWriter(const fs::path& p, int n) : out_(open_out(p)) {
        out_ << "t";
        for (int i = 0; i < n; ++i) out_ << ",re_alpha_" << i << ",im_alpha_" << i;
        out_ << '\n';
    }
    void append(double t, std::span<const cplx> alpha) {
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.12g", t);
        out_ << buf;
        for (const auto& a : alpha) {
            std::snprintf(buf, sizeof buf, ",%.12g,%.12g", a.real(), a.imag());
            out_ << buf;
        }
        out_ << '\n';
    }

  private:
    std::ofstream out_;
};

json graph_json(const CouplingGraph& g, const std::string& file) {
    json j;
    j["file"] = file;
    j["n"] = g.n;
    j["kind"] = kind_name(g.kind);
    j["hash"] = hash_hex(graph_hash(g));
    return j;
}

json params_json(const SimParams& p, double pump_ratio, double gth) {
    json j;
    j["gamma"] = p.gamma;
    j["eta"] = p.eta;
    j["pump"] = p.pump;
    if (std::isnan(pump_ratio))
        j["pump_ratio"] = nullptr;
    else
        j["pump_ratio"] = pump_ratio;
    j["g_th"] = gth;
    j["dt"] = p.dt;
    j["t_max"] = p.t_max;
    j["sample_interval"] = p.sample_interval;
    j["burn_in"] = p.burn_in;
    j["mean_field"] = p.mean_field;
    j["init_perturbation"] = p.init_perturbation;
    j["rate_reading"] = p.rate_reading == RateIndexReading::row_mode ? "n" : "j";
    return j;
}

// ---------------------------------------------------------------------------
// generate-graph
// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string kind;
    int n = 0;
    std::uint64_t seed = 1;
    double gamma = 1.0;
    double std_dev = -1.0;
    double j0 = -1.0;
    std::string out;
    bool rescale = false;
};

int run_generate(const GenerateArgs& a) {
    CouplingGraph g;
    if (a.kind == "sk") {
        const double sd = a.std_dev > 0.0 ? a.std_dev : 0.4 * a.gamma / a.n;
        g = gen_sk(a.n, sd, a.seed);
    } else {
        const double j0 = a.j0 > 0.0 ? a.j0 : 0.4 * a.gamma / (a.n - 1);
        g = gen_k(a.n, j0, a.seed);
    }

    double applied_rescale = 1.0;
    try {
        validate_rates(g, a.gamma);
    } catch (const infeasible_error& e) {
        if (!a.rescale) throw;
        applied_rescale = 0.99 * e.max_rescale;  // 1% margin
        const GraphKind kind = g.kind;
        g = rescaled(g, applied_rescale);
        g.kind = kind;
        g.seed = a.seed;
        validate_rates(g, a.gamma);
    }

    const auto residual = validate_rates(g, a.gamma);
    const double lmax = max_eigenvalue(g);
    const double gth = 0.5 * (a.gamma - lmax);
    save_graph(g, a.out);

    std::printf("graph: kind=%s n=%d seed=%llu -> %s\n", kind_name(g.kind).c_str(), g.n,
                static_cast<unsigned long long>(a.seed), a.out.c_str());
    if (applied_rescale != 1.0)
        std::printf("rescaled couplings by %.6g to restore feasibility\n", applied_rescale);
    std::printf("lambda_max = %.12g\n", lmax);
    std::printf("G_th = %.12g (G_th/gamma = %.12g)\n", gth, gth / a.gamma);
    std::printf("min residual one-photon rate = %.12g (feasible)\n",
                *std::min_element(residual.begin(), residual.end()));
    return 0;
}

// ---------------------------------------------------------------------------
// enumerate
// ---------------------------------------------------------------------------

struct EnumerateArgs {
    std::string graph;
    double tol = -1.0;
    std::string out;
};

int run_enumerate(const EnumerateArgs& a) {
    const auto g = load_graph(a.graph);
    const auto spec = enumerate_spectrum(g, a.tol);
    write_spectrum_csv(spec, a.out);
    std::printf("n = %d, configurations = %llu, canonical = %llu\n", g.n,
                static_cast<unsigned long long>(spec.total_multiplicity()),
                static_cast<unsigned long long>(spec.total_multiplicity() / 2));
    std::printf("levels = %zu (tol = %.3g)\n", spec.levels.size(), spec.tol);
    std::printf("ground energy = %.12g, multiplicity = %llu, example = %s\n",
                spec.ground_energy(),
                static_cast<unsigned long long>(spec.levels.front().multiplicity),
                mask_to_string(spec.levels.front().example, g.n).c_str());
    std::printf("spectrum -> %s\n", a.out.c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string graph;
    std::string out_dir;
    PumpOpts pump;
    BudgetOpts budget;
    std::uint64_t seed = 1;
    bool mean_field = false;
    double init_perturbation = -1.0;
    std::string save_samples = "none";
    std::string kernels_choice = "auto";
};

int run_simulate(const SimulateArgs& a) {
    const auto g = load_graph(a.graph);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);

    apply_kernel_choice(a.kernels_choice);
    const auto [pump, ratio] = a.pump.resolve(g, a.budget.gamma);
    const double gth = threshold_pump(g, a.budget.gamma);

    const std::uint64_t traj_seed = derive_seed(a.seed, "trajectory", 0);
    SimParams params = a.budget.params(pump, traj_seed);
    params.mean_field = a.mean_field;
    params.noise = !a.mean_field;
    params.init_perturbation =
        a.init_perturbation >= 0.0 ? a.init_perturbation : (a.mean_field ? 1e-3 : 0.0);
    params.validate();

    std::optional<CsvSampleWriter> csv_writer;
    std::optional<BinSampleWriter> bin_writer;
    SampleObserver tee = nullptr;
    if (a.save_samples == "csv") {
        csv_writer.emplace(dir / "samples.csv", g.n);
        tee = [&](double t, std::span<const cplx> al) { csv_writer->append(t, al); };
    } else if (a.save_samples == "bin") {
        bin_writer.emplace(dir / "samples.bin", g.n);
        tee = [&](double t, std::span<const cplx> al) { bin_writer->append(t, al); };
    }

    const auto run = run_sampling(g, params, tee);

    json manifest;
    manifest["tool"] = "oim";
    manifest["version"] = kVersion;
    manifest["created_utc"] = utc_now();
    manifest["command"] = "simulate";
    manifest["graph"] = graph_json(g, a.graph);
    manifest["params"] = params_json(params, ratio, gth);
    manifest["seeds"] = {{"base", a.seed}, {"trajectory", traj_seed}};
    manifest["kernels"] = kernels::active_ops().name;
    manifest["status"] = run.completed ? "ok" : "partial";
    if (!run.completed) manifest["error"] = run.error;
    manifest["samples"] = run.run.samples;
    manifest["t_final"] = run.run.t_final;
    manifest["diagnostics"] = {{"max_sym_correction", run.run.max_diag.sym_correction},
                               {"max_herm_correction", run.run.max_diag.herm_correction},
                               {"max_vdiag_imag", run.run.max_diag.vdiag_imag}};

    write_configs_csv(run.hist, dir / "configs.csv");
    json outputs;
    outputs["configs"] = "configs.csv";
    if (a.save_samples != "none") outputs["samples"] = "samples." + a.save_samples;

    if (g.n <= kMaxEnumerationModes && run.hist.total > 0) {
        const auto spec = enumerate_spectrum(g, a.budget.tol);
        const auto stats = per_energy_probabilities(run.hist, g, spec);
        write_histogram_csv(stats, dir / "histogram.csv");
        outputs["histogram"] = "histogram.csv";

        json fit_report;
        try {
            const auto fit = fit_temperature(
                fit_points(stats, a.budget.fit_probability == "per-config"), a.budget.min_count);
            fit_report = fit_to_json(fit, run.autocorrelation_time(), run.hist.total);
            fit_report["probability"] = a.budget.fit_probability;
            fit_report["min_count"] = a.budget.min_count;
            fit_report["success_probability"] = success_probability(run.hist, g, spec);
            std::printf("t_eff = %.6g +- %.3g (r^2 = %.4f, %d levels, %llu samples)\n",
                        fit.t_eff, fit.std_err, fit.r_squared, fit.n_points,
                        static_cast<unsigned long long>(run.hist.total));
        } catch (const param_error& e) {
            fit_report["error"] = e.what();
            std::printf("fit unavailable: %s\n", e.what());
        }
        write_json(dir / "fit.json", fit_report);
        outputs["fit"] = "fit.json";
    } else if (g.n > kMaxEnumerationModes) {
        std::fprintf(stderr,
                     "note: n > %d, spectrum-based histogram and fit are skipped "
                     "(configs.csv still written)\n",
                     kMaxEnumerationModes);
    }

    manifest["outputs"] = outputs;
    write_json(dir / "manifest.json", manifest);
    std::printf("outputs -> %s (%llu samples, %s)\n", a.out_dir.c_str(),
                static_cast<unsigned long long>(run.run.samples),
                run.completed ? "complete" : "PARTIAL");
    if (!run.completed) {
        std::fprintf(stderr, "numerical failure: %s\n", run.error.c_str());
        return 3;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// fit (re-fit an existing histogram)
// ---------------------------------------------------------------------------

struct FitArgs {
    std::string histogram;
    std::uint64_t min_count = 20;
    std::string fit_probability = "per-config";
    std::string out;
};

int run_fit(const FitArgs& a) {
    std::ifstream in(a.histogram);
    if (!in) throw io_error("cannot open " + a.histogram);
    std::string line;
    if (!std::getline(in, line) || line.rfind("energy,multiplicity,count", 0) != 0)
        throw io_error(a.histogram + ": expected histogram CSV header "
                                     "'energy,multiplicity,count,p_energy,p_per_config'");
    struct Row {
        double energy;
        std::uint64_t mult, count;
    };
    std::vector<Row> rows;
    std::uint64_t total = 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Row r;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> r.energy >> c1 >> r.mult >> c2 >> r.count) || c1 != ',' || c2 != ',')
            throw io_error(a.histogram + " line " + std::to_string(lineno) + ": malformed row");
        rows.push_back(r);
        total += r.count;
    }
    if (total == 0) throw param_error("histogram has no samples");

    std::vector<FitPoint> pts;
    for (const auto& r : rows) {
        if (r.count == 0) continue;
        const double p_energy = static_cast<double>(r.count) / static_cast<double>(total);
        const double p = a.fit_probability == "per-config"
                             ? p_energy / static_cast<double>(r.mult)
                             : p_energy;
        pts.push_back({r.energy, p, r.count});
    }
    const auto fit = fit_temperature(pts, a.min_count);
    json j = fit_to_json(fit, std::numeric_limits<double>::quiet_NaN(), total);
    j["probability"] = a.fit_probability;
    j["min_count"] = a.min_count;
    std::cout << j.dump(2) << '\n';
    if (!a.out.empty()) write_json(a.out, j);
    return 0;
}

// ---------------------------------------------------------------------------
// sweep-pump
// ---------------------------------------------------------------------------

struct SweepArgs {
    std::string graph;
    std::string out_dir;
    std::vector<double> ratios;
    std::vector<double> ratio_range;  // lo hi step
    BudgetOpts budget;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::string kernels_choice = "auto";
};

struct PointResult {
    double ratio = 0.0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    TempFit fit;
    std::uint64_t samples = 0;
    double autocorr = 0.0;
    std::vector<EnergyLevelStat> stats;
};

int run_sweep(const SweepArgs& a) {
    const auto g = load_graph(a.graph);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    apply_kernel_choice(a.kernels_choice);

    std::vector<double> ratios = a.ratios;
    if (!a.ratio_range.empty()) {
        if (a.ratio_range.size() != 3 || a.ratio_range[2] <= 0.0)
            throw param_error("--ratio-range expects LO HI STEP with STEP > 0");
        for (double r = a.ratio_range[0]; r <= a.ratio_range[1] + 1e-12; r += a.ratio_range[2])
            ratios.push_back(r);
    }
    if (ratios.empty()) throw param_error("no pump ratios given (--ratios or --ratio-range)");
    if (g.n > kMaxEnumerationModes)
        throw param_error("sweep-pump requires n <= " + std::to_string(kMaxEnumerationModes) +
                          " (spectrum-based fits)");

    const double gth = threshold_pump(g, a.budget.gamma);
    if (gth <= 0.0)
        throw infeasible_error("threshold pump is non-positive (lambda_max >= gamma)", -1, 0.0);
    const auto spec = enumerate_spectrum(g, a.budget.tol);

    std::vector<PointResult> results(ratios.size());
    std::atomic<std::size_t> next{0};
    const unsigned nworkers =
        a.workers > 0 ? a.workers : std::max(1u, std::thread::hardware_concurrency());

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= ratios.size()) return;
            PointResult& res = results[i];
            res.ratio = ratios[i];
            res.seed = derive_seed(a.seed, "trajectory", i);
            try {
                const SimParams params = a.budget.params(ratios[i] * gth, res.seed);
                params.validate();
                const auto run = run_sampling(g, params);
                if (!run.completed) throw numeric_error(run.error, run.run.t_final, 0);
                res.stats = per_energy_probabilities(run.hist, g, spec);
                res.fit = fit_temperature(
                    fit_points(res.stats, a.budget.fit_probability == "per-config"),
                    a.budget.min_count);
                res.samples = run.hist.total;
                res.autocorr = run.autocorrelation_time();
                res.ok = true;
            } catch (const std::exception& e) {
                res.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < nworkers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    {
        auto out = open_out(dir / "sweep.csv");
        out << "g_ratio,t_eff,std_err,r_squared,samples\n";
        for (const auto& r : results) {
            if (r.ok)
                out << fmt(r.ratio) << ',' << fmt(r.fit.t_eff) << ',' << fmt(r.fit.std_err) << ','
                    << fmt(r.fit.r_squared) << ',' << r.samples << '\n';
            else
                out << fmt(r.ratio) << ",nan,nan,nan,0\n";
        }
    }
    {
        // Overlay data: the fitted Boltzmann lines evaluated on the energies
        // that entered each fit (they intersect within a narrow energy range).
        auto out = open_out(dir / "fitlines.csv");
        out << "g_ratio,energy,ln_p_per_config_fit\n";
        for (const auto& r : results) {
            if (!r.ok) continue;
            for (const auto& row : r.stats) {
                if (row.count < a.budget.min_count) continue;
                out << fmt(r.ratio) << ',' << fmt(row.energy) << ','
                    << fmt(r.fit.intercept + r.fit.slope * row.energy) << '\n';
            }
        }
    }
    for (std::size_t i = 0; i < results.size(); ++i)
        if (results[i].ok)
            write_histogram_csv(results[i].stats, dir / ("hist_" + std::to_string(i) + ".csv"));

    json manifest;
    manifest["tool"] = "oim";
    manifest["version"] = kVersion;
    manifest["created_utc"] = utc_now();
    manifest["command"] = "sweep-pump";
    manifest["graph"] = graph_json(g, a.graph);
    manifest["g_th"] = gth;
    manifest["budget"] = {{"gamma", a.budget.gamma},
                          {"eta", a.budget.eta},
                          {"dt", a.budget.dt},
                          {"t_max", a.budget.t_max},
                          {"sample_interval", a.budget.sample_interval},
                          {"burn_in", a.budget.burn_in},
                          {"min_count", a.budget.min_count},
                          {"fit_probability", a.budget.fit_probability}};
    manifest["seeds"] = {{"base", a.seed}};
    manifest["kernels"] = kernels::active_ops().name;
    manifest["workers"] = nworkers;
    json points = json::array();
    bool any_failed = false;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        json pj;
        pj["index"] = i;
        pj["g_ratio"] = r.ratio;
        pj["pump"] = r.ratio * gth;
        pj["seed"] = r.seed;
        pj["status"] = r.ok ? "ok" : "failed";
        if (r.ok) {
            pj["t_eff"] = r.fit.t_eff;
            pj["std_err"] = r.fit.std_err;
            pj["r_squared"] = r.fit.r_squared;
            pj["samples"] = r.samples;
            if (!std::isnan(r.autocorr)) pj["autocorrelation_time"] = r.autocorr;
        } else {
            pj["error"] = r.error;
            any_failed = true;
        }
        points.push_back(pj);
    }
    manifest["points"] = points;
    write_json(dir / "manifest.json", manifest);

    for (const auto& r : results) {
        if (r.ok)
            std::printf("G/G_th = %-6g t_eff = %-10.6g +- %-9.3g r^2 = %.4f\n", r.ratio,
                        r.fit.t_eff, r.fit.std_err, r.fit.r_squared);
        else
            std::printf("G/G_th = %-6g FAILED: %s\n", r.ratio, r.error.c_str());
    }
    std::printf("outputs -> %s\n", a.out_dir.c_str());
    return any_failed ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"oim: quantum-trajectory sampler for dissipatively coupled "
                 "parametric-oscillator Ising machines"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    // Config-file values are injected before command-line flags; take-last
    // makes the command line override the file.
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    std::string config_dummy;
    auto add_config_help = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_dummy,
                        "key=value config file mirroring these flags (flags override)");
    };

    GenerateArgs gen;
    auto* cmd_gen = app.add_subcommand("generate-graph", "Generate an Ising coupling matrix");
    add_config_help(cmd_gen);
    cmd_gen->add_option("--kind", gen.kind, "Graph ensemble: sk or k")
        ->required()
        ->check(CLI::IsMember({"sk", "k"}));
    cmd_gen->add_option("--n", gen.n, "Mode count")->required()->check(CLI::PositiveNumber);
    cmd_gen->add_option("--seed", gen.seed, "Generation seed")->capture_default_str();
    cmd_gen->add_option("--gamma", gen.gamma, "One-photon rate used for feasibility")
        ->capture_default_str();
    cmd_gen->add_option("--std-dev", gen.std_dev, "SK coupling std dev (default 0.4 gamma/n)");
    cmd_gen->add_option("--j0", gen.j0, "K coupling magnitude (default 0.4 gamma/(n-1))");
    cmd_gen->add_option("--out", gen.out, "Output graph file")->required();
    cmd_gen->add_flag("--rescale-to-feasible", gen.rescale,
                      "Apply the maximal uniform rescale (1% margin) instead of failing");

    EnumerateArgs enu;
    auto* cmd_enum = app.add_subcommand("enumerate", "Exact spectrum by exhaustive enumeration");
    add_config_help(cmd_enum);
    cmd_enum->add_option("--graph", enu.graph, "Graph file")->required();
    cmd_enum->add_option("--tol", enu.tol, "Level grouping tolerance (<0: 1e-9 max|J|)")
        ->capture_default_str();
    cmd_enum->add_option("--out", enu.out, "Spectrum CSV path")->required();

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Run one Gaussian quantum trajectory");
    add_config_help(cmd_sim);
    cmd_sim->add_option("--graph", sim.graph, "Graph file")->required();
    cmd_sim->add_option("--out", sim.out_dir, "Output directory")->required();
    sim.pump.attach(cmd_sim);
    sim.budget.attach(cmd_sim);
    cmd_sim->add_option("--seed", sim.seed, "Base seed")->capture_default_str();
    cmd_sim->add_flag("--mean-field", sim.mean_field,
                      "Noiseless mean-field dynamics (second moments pinned at zero)");
    cmd_sim->add_option("--init-perturbation", sim.init_perturbation,
                        "Stddev of the random initial alpha (default 1e-3 in mean-field mode)");
    cmd_sim->add_option("--save-samples", sim.save_samples, "Sample stream format")
        ->check(CLI::IsMember({"none", "csv", "bin"}))
        ->capture_default_str();
    cmd_sim->add_option("--kernels", sim.kernels_choice, "Kernel variant")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "Re-fit an existing histogram CSV");
    add_config_help(cmd_fit);
    cmd_fit->add_option("--histogram", fit.histogram, "histogram.csv from simulate")->required();
    cmd_fit->add_option("--min-count", fit.min_count, "Minimum samples per level")
        ->capture_default_str();
    cmd_fit->add_option("--fit-probability", fit.fit_probability, "per-config or per-energy")
        ->check(CLI::IsMember({"per-config", "per-energy"}))
        ->capture_default_str();
    cmd_fit->add_option("--out", fit.out, "Also write the fit report to this path");

    SweepArgs sweep;
    auto* cmd_sweep = app.add_subcommand("sweep-pump", "T_eff vs G/G_th over many trajectories");
    add_config_help(cmd_sweep);
    cmd_sweep->add_option("--graph", sweep.graph, "Graph file")->required();
    cmd_sweep->add_option("--out", sweep.out_dir, "Output directory")->required();
    cmd_sweep->add_option("--ratios", sweep.ratios, "Comma-separated list of G/G_th values")
        ->delimiter(',');
    cmd_sweep->add_option("--ratio-range", sweep.ratio_range, "LO HI STEP")->expected(3);
    sweep.budget.attach(cmd_sweep);
    cmd_sweep->add_option("--seed", sweep.seed, "Base seed")->capture_default_str();
    cmd_sweep->add_option("--workers", sweep.workers, "Concurrent trajectories (0 = hardware)")
        ->capture_default_str();
    cmd_sweep->add_option("--kernels", sweep.kernels_choice, "Kernel variant")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();

    std::vector<std::string> expanded;
    try {
        expanded = expand_config_args(argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::vector<const char*> cargv;
    cargv.push_back(argv[0]);
    for (const auto& s : expanded) cargv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (cmd_gen->parsed()) return run_generate(gen);
        if (cmd_enum->parsed()) return run_enumerate(enu);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_fit->parsed()) return run_fit(fit);
        if (cmd_sweep->parsed()) return run_sweep(sweep);
    } catch (const infeasible_error& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 2;
    } catch (const numeric_error& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const param_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
