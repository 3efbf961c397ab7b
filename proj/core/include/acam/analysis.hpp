#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acam/array.hpp"
#include "acam/device.hpp"
#include "acam/kernel.hpp"

namespace acam {

// ---------------------------------------------------------------- density

/// Device parameters plus the match-line background leakage that bounds the
/// margin from above when windows are wide.
struct DensityConfig {
    DeviceDefaults device{};
    double ml_leakage = 0.0;

    void validate() const;
};

/// Keys: every device key plus `ml_leakage`.
DensityConfig parse_density_config(std::string_view text, const std::string& source = {});
DensityConfig load_density_config(const std::filesystem::path& path);

struct DensityPoint {
    int bits = 1;
    double window_width = 0.0;
    double sense_margin = 1.0;
    /// Window narrower than two subthreshold decades of gate swing.
    bool degenerate = false;
};

/// Splits the range into 2^bits abutting windows. Margin is the smallest,
/// over windows and neighbours, of
///   (I_cell(query at neighbour center) + I_leak) / (I_cell(query at own center) + I_leak).
DensityPoint sense_margin(int bits, const DensityConfig& config);

// ------------------------------------------------------- kernel regression

/// y = sin(frequency · x) + N(0, label_noise), x uniform in [x_min, x_max].
struct DatasetSpec {
    double frequency = 5.0;
    double x_min = 0.0;
    double x_max = 1.0;
    std::size_t n_train = 64;
    std::size_t n_test = 256;
    double label_noise = 0.2;
};

struct RegressionData {
    RowMatrix train_x;
    Eigen::VectorXd train_y;
    RowMatrix test_x;
    Eigen::VectorXd test_y;      // noisy labels
    Eigen::VectorXd test_truth;  // noiseless f(x)
};

/// `x_scale` multiplies every input after sampling; the noise realization
/// does not depend on it.
RegressionData make_dataset(const DatasetSpec& spec, std::uint64_t seed, double x_scale = 1.0);

struct RegressionScore {
    double mse_truth = 0.0;   // against noiseless f(x)
    double mse_labels = 0.0;  // against noisy test labels
};

/// Fits with `kernel`/`lambda`, evaluates test points through an ACAM
/// kernel machine (or exactly when `acam` is empty).
RegressionScore evaluate_regression(const RegressionData& data, const KernelSpec& kernel,
                                    double lambda, const std::optional<AcamKernelConfig>& acam);

struct KernelSweepOptions {
    DatasetSpec dataset{};
    std::vector<double> gammas{0.1};
    std::vector<std::optional<int>> quant_bits{4};
    std::vector<double> noise_stds{0.0};
    double lambda = 1e-3;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;
    VoltageRange range{};
    unsigned threads = 1;
};

struct KernelSweepCell {
    double gamma = 0.1;
    std::optional<int> quant_bits;
    double noise_std = 0.0;
    double mse_truth = 0.0;
    double mse_labels = 0.0;
    std::size_t repeats = 0;
};

/// MSE per (γ, bits, σ) cell, averaged over `repeats` datasets. Repeat r
/// uses dataset seed (seed, r) and window noise seed (seed, r, 1) in every
/// cell, so cells differ only in their own parameters.
std::vector<KernelSweepCell> kernel_sweep(const KernelSweepOptions& options);

void write_kernel_sweep_csv(std::ostream& out, std::span<const KernelSweepCell> cells);

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    std::size_t total() const noexcept;
};

struct ResidualStats {
    double noise_std = 0.0;
    double mean = 0.0;
    double variance = 0.0;
    /// Standard deviation of the per-seed means (0 for one repeat).
    double mean_spread = 0.0;
    std::size_t samples = 0;
    Histogram histogram;
};

struct ResidualOptions {
    DatasetSpec dataset{};
    std::vector<double> noise_stds{0.0, 0.01, 0.02, 0.04, 0.08};
    double gamma = 0.1;
    double lambda = 1e-3;
    std::optional<int> quant_bits;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;
    VoltageRange range{};
    std::size_t bins = 41;
    double hist_half_width = 1.0;
};

/// Residuals ŷ_noise − f(x) on the test points. Mean and variance are the
/// per-seed moments averaged over repeats; the histogram pools all seeds.
std::vector<ResidualStats> residual_stats(const ResidualOptions& options);

void write_residuals_csv(std::ostream& out, std::span<const ResidualStats> stats);

struct ScalingCase {
    double frequency;
    double gamma_opt;
    double scale;  // k; the scaled fit uses k·γ_opt
};

/// sin(20x)…sin(1.125x) paired with their device-friendly scale factors.
std::vector<ScalingCase> default_scaling_family();

struct ScalingPair {
    ScalingCase scase;
    double mse_unscaled = 0.0;
    double mse_scaled = 0.0;
};

struct ScalingOptions {
    std::vector<ScalingCase> family = default_scaling_family();
    DatasetSpec dataset{};
    double lambda = 1e-3;
    std::uint64_t seed = 0;
};

/// Fits each case on [0,1] at γ_opt and on k·[0,1] at k·γ_opt with the same
/// noise realization; both are evaluated with the surrogate kernel.
std::vector<ScalingPair> gamma_scaling_check(const ScalingOptions& options);

/// Coefficient of determination of the points (mse_unscaled, mse_scaled)
/// against the line y = x.
double identity_r_squared(std::span<const ScalingPair> pairs);

void write_scaling_csv(std::ostream& out, std::span<const ScalingPair> pairs);

// ----------------------------------------------------------- op counting

enum class OpMode { ExactSoftware, Acam };

/// EXACT_SOFTWARE: each of the m kernel terms costs d subtractions, d
/// squares and d additions for the distance, one scale and one exp (3d + 2),
/// then one multiply and one add to accumulate α_i·K: m·(3d + 4) in total.
/// ACAM: one analog evaluation step.
std::uint64_t op_count(std::size_t m, std::size_t d, OpMode mode);

inline constexpr const char* kOpCountFormula = "m*(3*d+2) + 2*m";

}  // namespace acam
