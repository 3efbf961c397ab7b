#include "acam/kernel.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "acam/errors.hpp"
#include "json.hpp"

namespace acam {

std::string to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Laplace: return "laplace";
        case KernelKind::AcamSurrogate: return "acam";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    if (name == "rbf") return KernelKind::Rbf;
    if (name == "laplace") return KernelKind::Laplace;
    if (name == "acam" || name == "surrogate") return KernelKind::AcamSurrogate;
    throw InvalidArgument("unknown kernel kind '" + name + "' (expected rbf, laplace or acam)");
}

std::string to_string(SolverPath path) {
    switch (path) {
        case SolverPath::Cholesky: return "cholesky";
        case SolverPath::PivotedLu: return "pivoted_lu";
        case SolverPath::FullPivotLu: return "full_pivot_lu";
    }
    return "unknown";
}

void KernelSpec::validate() const {
    if (kind == KernelKind::Laplace) {
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("Laplace rate c must be > 0");
    } else if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw InvalidArgument("kernel gamma must be > 0");
    }
}

double squared_distance(std::span<const double> x, std::span<const double> x_prime) {
    if (x.size() != x_prime.size()) {
        throw InvalidArgument("kernel arguments differ in length (" + std::to_string(x.size()) +
                              " vs " + std::to_string(x_prime.size()) + ")");
    }
    double r2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double diff = x[j] - x_prime[j];
        r2 += diff * diff;
    }
    return r2;
}

double surrogate_from_sq(double r2, double gamma) noexcept {
    const double exponent = r2 / (2.0 * gamma * gamma);
    // 2 - e^t <= 0 for t >= ln 2; skipping exp also avoids overflow far out.
    if (!(exponent < std::numbers::ln2)) return 0.0;
    return std::max(0.0, 2.0 - std::exp(exponent));
}

double surrogate_kernel(std::span<const double> x, std::span<const double> x_prime, double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("surrogate kernel gamma must be > 0");
    return surrogate_from_sq(squared_distance(x, x_prime), gamma);
}

double rbf_kernel(std::span<const double> x, std::span<const double> x_prime, double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("RBF kernel gamma must be > 0");
    return std::exp(-squared_distance(x, x_prime) / (2.0 * gamma * gamma));
}

double laplace_kernel(std::span<const double> x, std::span<const double> x_prime, double c) {
    if (!(c > 0.0)) throw InvalidArgument("Laplace kernel rate c must be > 0");
    return std::exp(-c * std::sqrt(squared_distance(x, x_prime)));
}

double KernelSpec::operator()(std::span<const double> x, std::span<const double> x_prime) const {
    switch (kind) {
        case KernelKind::Rbf: return rbf_kernel(x, x_prime, gamma);
        case KernelKind::Laplace: return laplace_kernel(x, x_prime, c);
        case KernelKind::AcamSurrogate: return surrogate_kernel(x, x_prime, gamma);
    }
    return 0.0;
}

Eigen::MatrixXd gram_matrix(const RowMatrix& train_x, const KernelSpec& spec) {
    spec.validate();
    const Eigen::Index m = train_x.rows();
    Eigen::MatrixXd k(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v = spec(row_span(train_x, i), row_span(train_x, j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

namespace {

double relative_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const double r = (a * x - b).norm();
    const double scale = b.norm();
    return scale > 0.0 ? r / scale : r;
}

constexpr double kAcceptResidual = 1e-10;

}  // namespace

LinearSolve solve_symmetric(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
    if (a.rows() != a.cols() || a.rows() != b.size()) {
        throw InvalidArgument("solve_symmetric: shape mismatch");
    }
    const double eps = std::numeric_limits<double>::epsilon();
    const double n = static_cast<double>(std::max<Eigen::Index>(a.rows(), 1));

    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
        LinearSolve out{llt.solve(b), 0.0, SolverPath::Cholesky};
        out.relative_residual = relative_residual(a, out.x, b);
        // A nearly singular SPD matrix falls through so the pivoted path can
        // report its condition estimate.
        if (out.x.allFinite() && out.relative_residual <= kAcceptResidual && llt.rcond() > eps * n) {
            return out;
        }
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rcond = lu.rcond();
    if (rcond > eps * n) {
        LinearSolve out{lu.solve(b), 0.0, SolverPath::PivotedLu};
        out.relative_residual = relative_residual(a, out.x, b);
        if (out.x.allFinite() && out.relative_residual <= kAcceptResidual) return out;
    }

    Eigen::FullPivLU<Eigen::MatrixXd> full(a);
    const double full_rcond = full.rcond();
    if (full.isInvertible() && full_rcond > eps * n) {
        LinearSolve out{full.solve(b), 0.0, SolverPath::FullPivotLu};
        out.relative_residual = relative_residual(a, out.x, b);
        if (out.x.allFinite()) return out;
    }
    const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    throw SingularSystem("kernel system is numerically singular (condition estimate " +
                             std::to_string(cond) + "); increase lambda",
                         cond);
}

KernelModel fit(const RowMatrix& train_x, const Eigen::VectorXd& y, const KernelSpec& spec,
                double lambda) {
    spec.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
    if (train_x.rows() < 1) throw InvalidArgument("fit needs at least one training point");
    if (train_x.rows() != y.size()) {
        throw InvalidArgument("fit: " + std::to_string(train_x.rows()) + " inputs but " +
                              std::to_string(y.size()) + " targets");
    }
    const auto m = static_cast<double>(train_x.rows());
    Eigen::MatrixXd system = gram_matrix(train_x, spec);
    system.diagonal().array() += lambda * m;
    LinearSolve solved = solve_symmetric(system, y);

    KernelModel model;
    model.train_x = train_x;
    model.alpha = std::move(solved.x);
    model.spec = spec;
    model.lambda = lambda;
    model.fit_residual = solved.relative_residual;
    model.solver = solved.path;
    return model;
}

double predict_exact(const KernelModel& model, std::span<const double> x) {
    if (x.size() != model.d()) {
        throw InvalidArgument("query has " + std::to_string(x.size()) + " elements, model expects " +
                              std::to_string(model.d()));
    }
    double y = 0.0;
    for (Eigen::Index i = 0; i < model.train_x.rows(); ++i) {
        y += model.alpha[i] * model.spec(row_span(model.train_x, i), x);
    }
    return y;
}

void AcamKernelConfig::validate() const {
    range.validate();
    noise.validate();
    if (!(window_width >= 0.0)) throw InvalidArgument("window_width must be >= 0");
    if (quant_bits && (*quant_bits < 1 || *quant_bits > 30)) {
        throw InvalidArgument("quant_bits must be in [1, 30]");
    }
}

namespace {

AcamArray program_kernel_array(const KernelModel& model, const AcamKernelConfig& cfg) {
    if (model.spec.kind != KernelKind::AcamSurrogate) {
        throw InvalidArgument("ACAM inference requires an acam-surrogate model, got " +
                              to_string(model.spec.kind));
    }
    if (model.alpha.size() != model.train_x.rows()) throw InvalidArgument("model alpha/train_x mismatch");
    cfg.validate();
    const std::size_t m = model.m();
    const std::size_t d = model.d();
    std::vector<MatchWindow> windows;
    windows.reserve(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            windows.push_back(make_window(model.train_x(static_cast<Eigen::Index>(i),
                                                        static_cast<Eigen::Index>(j)),
                                          cfg.window_width, cfg.quant_bits, cfg.range));
        }
    }
    std::vector<double> weights(model.alpha.data(), model.alpha.data() + m);
    return perturb_windows(AcamArray(m, d, std::move(windows), std::move(weights), cfg.range), cfg.noise);
}

}  // namespace

AcamKernelMachine::AcamKernelMachine(const KernelModel& model, const AcamKernelConfig& config)
    : array_(program_kernel_array(model, config)), gamma_(model.spec.gamma) {}

double AcamKernelMachine::predict(std::span<const double> x) const {
    if (x.size() != array_.cols()) {
        throw InvalidArgument("query has " + std::to_string(x.size()) + " elements, array expects d = " +
                              std::to_string(array_.cols()));
    }
    const auto weights = array_.drain_weights();
    double y = 0.0;
    for (std::size_t i = 0; i < array_.rows(); ++i) {
        const auto cells = array_.row(i);
        double k = 0.0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            const double diff = cells[j].center() - x[j];
            k += surrogate_from_sq(diff * diff, gamma_);
        }
        y += weights[i] * k;
    }
    return y;
}

double predict_acam(const KernelModel& model, std::span<const double> x, const AcamKernelConfig& config) {
    return AcamKernelMachine(model, config).predict(x);
}

std::string model_to_json(const KernelModel& model) {
    nlohmann::ordered_json j;
    j["kind"] = to_string(model.spec.kind);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.train_x.rows(); ++i) {
        const auto r = row_span(model.train_x, i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    j["train_x"] = std::move(rows);
    j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
    j["gamma"] = model.spec.gamma;
    j["c"] = model.spec.c;
    j["lambda"] = model.lambda;
    return j.dump();
}

KernelModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model json", 0, e.what());
    }
    try {
        KernelModel model;
        model.spec.kind = kernel_kind_from_string(j.value("kind", std::string("acam")));
        model.spec.gamma = j.at("gamma").get<double>();
        model.spec.c = j.value("c", 1.0);
        model.lambda = j.at("lambda").get<double>();
        const auto rows = j.at("train_x").get<std::vector<std::vector<double>>>();
        const auto alpha = j.at("alpha").get<std::vector<double>>();
        if (rows.size() != alpha.size()) throw InvalidArgument("train_x and alpha lengths differ");
        const std::size_t d = rows.empty() ? 0 : rows.front().size();
        model.train_x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != d) throw InvalidArgument("ragged train_x");
            for (std::size_t c = 0; c < d; ++c) {
                model.train_x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
            }
        }
        model.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
        model.spec.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model json", 0, e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError("model json", 0, e.what());
    }
}

}  // namespace acam
