#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "acam/array.hpp"

namespace acam {

/// Row-major so that each sample is a contiguous span.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index r) {
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

enum class KernelKind { Rbf, Laplace, AcamSurrogate };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& name);

struct KernelSpec {
    KernelKind kind = KernelKind::AcamSurrogate;
    double gamma = 0.1;  // V; RBF and surrogate width
    double c = 1.0;      // Laplace rate

    void validate() const;
    double operator()(std::span<const double> x, std::span<const double> x_prime) const;
};

double squared_distance(std::span<const double> x, std::span<const double> x_prime);

/// max{0, 2 - exp(r^2 / 2γ^2)} from a squared distance.
double surrogate_from_sq(double r2, double gamma) noexcept;

double surrogate_kernel(std::span<const double> x, std::span<const double> x_prime, double gamma);
double rbf_kernel(std::span<const double> x, std::span<const double> x_prime, double gamma);
double laplace_kernel(std::span<const double> x, std::span<const double> x_prime, double c);

/// Distance beyond which the surrogate kernel is exactly zero: γ√(2 ln 2).
inline double surrogate_support_radius(double gamma) noexcept {
    return gamma * 1.1774100225154747;  // sqrt(2 ln 2)
}

/// Rows of `train_x` are samples.
Eigen::MatrixXd gram_matrix(const RowMatrix& train_x, const KernelSpec& spec);

enum class SolverPath { Cholesky, PivotedLu, FullPivotLu };

std::string to_string(SolverPath path);

struct KernelModel {
    RowMatrix train_x;
    Eigen::VectorXd alpha;
    KernelSpec spec;
    double lambda = 1e-3;
    /// ‖(K + λmI)α − y‖ / ‖y‖ at fit time.
    double fit_residual = 0.0;
    SolverPath solver = SolverPath::Cholesky;

    std::size_t m() const noexcept { return static_cast<std::size_t>(train_x.rows()); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(train_x.cols()); }
};

/// Solve (A) x = b with Cholesky, falling back to partial- then full-pivot
/// LU when the matrix is not positive definite or the residual is poor.
/// Throws SingularSystem with a condition estimate when all paths fail.
struct LinearSolve {
    Eigen::VectorXd x;
    double relative_residual = 0.0;
    SolverPath path = SolverPath::Cholesky;
};
LinearSolve solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b);

/// Kernel ridge regression: α = (K + λ m I)^-1 y, K built with `spec`.
KernelModel fit(const RowMatrix& train_x, const Eigen::VectorXd& y, const KernelSpec& spec,
                double lambda = 1e-3);

/// Σ α_i K(x_i, x).
double predict_exact(const KernelModel& model, std::span<const double> x);

/// How the trained model is written into an ACAM array.
struct AcamKernelConfig {
    std::optional<int> quant_bits;  // none = analog centers
    NoiseSpec noise{};
    VoltageRange range{};
    double window_width = 0.0;

    void validate() const;
};

/// One row per training point: window centers hold (quantized, perturbed)
/// x_i, drain weight holds α_i. The match line sums α_i K^ACAM per row; for
/// d > 1 each dimension is one cell and per-cell kernels are summed.
class AcamKernelMachine {
public:
    AcamKernelMachine(const KernelModel& model, const AcamKernelConfig& config);

    double predict(std::span<const double> x) const;
    const AcamArray& array() const noexcept { return array_; }
    double gamma() const noexcept { return gamma_; }

private:
    AcamArray array_;
    double gamma_;
};

double predict_acam(const KernelModel& model, std::span<const double> x,
                    const AcamKernelConfig& config);

/// `{"train_x":[[..]..],"alpha":[..],"gamma":g,"lambda":l,"kind":"..."}`
std::string model_to_json(const KernelModel& model);
KernelModel model_from_json(const std::string& text);

}  // namespace acam
