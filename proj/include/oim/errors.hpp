#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace oim {

// Invalid arguments or malformed inputs. The CLI maps this to exit code 1.
struct param_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable or unparsable files. Exit code 1.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Physically infeasible rates: some residual one-photon rate would be
// negative. Exit code 2.
struct infeasible_error : std::runtime_error {
    int worst_mode = -1;
    double max_rescale = 0.0;  // largest uniform factor on J that restores feasibility

    infeasible_error(const std::string& msg, int mode, double rescale)
        : std::runtime_error(msg), worst_mode(mode), max_rescale(rescale) {}
};

// Numerical failure during integration (overflow / NaN). Exit code 3.
struct numeric_error : std::runtime_error {
    double t_failed = 0.0;
    std::uint64_t samples_collected = 0;

    numeric_error(const std::string& msg, double t, std::uint64_t samples)
        : std::runtime_error(msg), t_failed(t), samples_collected(samples) {}
};

}  // namespace oim
