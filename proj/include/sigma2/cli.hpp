#pragma once

// Configuration and dispatch for the sigma2-cli executable.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace sigma2 {

/// Every field is also a command-line flag of the same name (--name).
struct RunConfig {
    std::string command;

    // model
    std::string model = "cap";
    int dim = 3;
    double rho1 = 1.5707963267948966;
    double r0 = 0.5235987755982988;
    double r1 = 1.0471975511965976;
    std::vector<double> warp_a{1.0};
    std::vector<double> warp_b{1.0};
    double slab_r0 = 0.0;
    double slab_r1 = 1.0;
    double slab_period = 6.283185307179586;
    std::string base = "cap";
    double amplitude = 0.0;
    std::uint64_t seed = 1;
    std::vector<int> resolution;  // empty: 129 (radial) or 17 16 16

    // problem
    double t = 1.0;
    std::string f = "schouten";  // number, "schouten" or "sphere"
    std::string c = "0";         // number or "h"
    std::string form = "sqrt";   // sqrt | squared
    double u0_amplitude = 0.0;

    // Newton
    double tol = 1e-8;
    int max_iter = 30;
    double backtrack = 0.5;
    double theta = 0.1;
    double margin_floor = 1e-8;
    std::string linear = "auto";

    // continuation / eigen
    double initial_step = 0.1;
    double min_step = 1e-4;
    int eps_levels = 10;
    double cauchy_tol = 0.0;  // 0: 10 * tol

    // checks
    long samples = 10000;
    int coarse = 17;
    int refinements = 3;

    std::string out = "sigma2-out";

    void validate() const;
    [[nodiscard]] std::string to_json() const;
    [[nodiscard]] static RunConfig from_json(const std::string& text);
};

/// Runs one subcommand and writes its outputs under cfg.out.
/// Returns 0 on success, 1 on numerical failure or failed checks.
int run(const RunConfig& cfg, std::ostream& log);

/// Parses flags (and an optional --config JSON file), then runs.
/// Usage errors return 2.
int cli_main(int argc, char** argv);

}  // namespace sigma2
