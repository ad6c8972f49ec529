#pragma once

// Seeded property suites run by `sigma2-cli check-algebra` and
// `check-geometry`.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sigma2 {

struct PropertyResult {
    PropertyResult() = default;
    explicit PropertyResult(std::string n) : name(std::move(n)) {}

    std::string name;
    long samples = 0;
    long failures = 0;
    double worst = 0.0;  // worst observed value of the checked quantity
    std::string detail;

    [[nodiscard]] bool passed() const noexcept { return samples > 0 && failures == 0; }
};

/// Seven algebraic properties over `samples` random symmetric pairs (W, g),
/// n cycling through 3..6.
[[nodiscard]] std::vector<PropertyResult> algebra_suite(long samples, std::uint64_t seed);

struct GeometryStudy {
    std::vector<int> levels;          // radial node counts (cap) / r node counts (band)
    std::vector<double> cap_ricci;    // max FD Ricci error per level
    std::vector<double> band_ricci;
    std::vector<double> fermi_normal; // max |Gamma^n_ab - L_ab| (band)
    std::vector<double> fermi_hess;   // max |Hess d + L| (band)
    double cap_h_error = 0.0;
    double band_h_error = 0.0;
};

/// Curvature and boundary checks over successive refinements of cap and band.
[[nodiscard]] GeometryStudy geometry_study(int coarse = 17, int refinements = 3, int band_tangential = 8);
[[nodiscard]] std::vector<PropertyResult> geometry_suite(const GeometryStudy& study);

/// Observed orders log2(e_k / e_{k+1}) for halving spacings.
[[nodiscard]] std::vector<double> observed_orders(const std::vector<double>& errors);

}  // namespace sigma2
