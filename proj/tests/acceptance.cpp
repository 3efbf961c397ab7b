// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "acam/analysis.hpp"
#include "acam/fewshot.hpp"
#include "acam/kernel.hpp"
#include "acam/search.hpp"
#include "oracles.hpp"

using namespace acam;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double time_limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

// Tolerances.
constexpr double kSymmetryTol = 1e-12;
constexpr double kSupportTol = 1e-15;
constexpr double kRidgeResidualTol = 1e-8;
constexpr double kMseTarget = 0.03;
constexpr double kMseSlack = 0.02;
constexpr double kResidualMeanTol = 0.05;
constexpr double kScalingPairTol = 1e-9;
constexpr double kScalingR2 = 0.99;
constexpr double kMargin3Lo = 700, kMargin3Hi = 1300;
constexpr double kMargin4Lo = 70, kMargin4Hi = 130;
constexpr double kPlateauSpread = 0.05;
constexpr double kNoiseDrop = 0.10;
constexpr double kPipelineTol = 1e-12;

Outcome surrogate_identities() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-0.3, 2.0);
    std::uniform_real_distribution<double> gam(0.01, 0.5);
    std::uniform_real_distribution<double> beyond(0.0, 3.0);
    double worst_sym = 0.0, worst_support = 0.0;
    bool diag_exact = true;
    for (int i = 0; i < 1000; ++i) {
        const double g = gam(rng);
        const std::vector<double> x{u(rng), u(rng)}, y{u(rng), u(rng)};
        diag_exact = diag_exact && surrogate_kernel(x, x, g) == 1.0;
        worst_sym = std::max(worst_sym, std::fabs(surrogate_kernel(x, y, g) - surrogate_kernel(y, x, g)));
        // Points at and beyond the support radius along a random direction.
        const double theta = u(rng);
        const double r = surrogate_support_radius(g) * (1.0 + (i % 10 == 0 ? 0.0 : beyond(rng)));
        const std::vector<double> z{x[0] + r * std::cos(theta), x[1] + r * std::sin(theta)};
        if (oracle::distance(x, z) >= surrogate_support_radius(g)) {
            worst_support = std::max(worst_support, std::fabs(surrogate_kernel(x, z, g)));
        }
    }
    const bool pass = diag_exact && worst_sym <= kSymmetryTol && worst_support <= kSupportTol;
    return {pass, std::string("K(x,x)==1 ") + (diag_exact ? "yes" : "no") +
                      fmt("; max|K| at/beyond radius %.2e; max asymmetry %.2e", worst_support, worst_sym)};
}

Outcome ridge_oracle() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<int> size(1, 32);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> n;
    double worst = 0.0, worst_alpha = 0.0;
    for (int t = 0; t < 50; ++t) {
        const int m = size(rng);
        const int d = 1 + t % 3;
        RowMatrix x(m, d);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
        Eigen::VectorXd y(m);
        for (auto& v : y) v = n(rng);
        const KernelSpec spec{static_cast<KernelKind>(t % 3), 0.1 + 0.1 * (t % 4), 2.0};
        const double lambda = t % 5 == 0 ? 1e-6 : 1e-3;
        const KernelModel model = fit(x, y, spec, lambda);
        std::vector<std::vector<double>> a(m, std::vector<double>(m));
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
                const double r = oracle::distance(std::vector<double>(x.row(i).begin(), x.row(i).end()),
                                                  std::vector<double>(x.row(j).begin(), x.row(j).end()));
                a[i][j] = spec.kind == KernelKind::Rbf       ? oracle::rbf(r, spec.gamma)
                          : spec.kind == KernelKind::Laplace ? std::exp(-spec.c * r)
                                                             : oracle::surrogate(r, spec.gamma);
            }
            a[i][i] += lambda * m;
        }
        const std::vector<double> yv(y.data(), y.data() + m);
        const auto ref = oracle::solve(a, yv);
        std::vector<double> res(m);
        for (int i = 0; i < m; ++i) {
            long double s = -static_cast<long double>(yv[i]);
            for (int j = 0; j < m; ++j) s += static_cast<long double>(a[i][j]) * model.alpha[j];
            res[i] = static_cast<double>(s);
            worst_alpha = std::max(worst_alpha, std::fabs(model.alpha[i] - ref[i]) / (1.0 + std::fabs(ref[i])));
        }
        worst = std::max(worst, oracle::norm2(res) / oracle::norm2(yv));
    }
    return {worst <= kRidgeResidualTol,
            fmt("max relative residual %.2e (limit 1e-8); max |alpha - oracle| %.2e", worst, worst_alpha)};
}

Outcome four_bit_regression() {
    KernelSweepOptions o;
    o.gammas = {0.1};
    o.quant_bits = {4};
    o.noise_stds = {0.0, 0.1, 0.2, 0.3};
    o.lambda = 1e-3;
    o.repeats = 10;
    o.seed = 2024;
    const auto cells = kernel_sweep(o);
    double worst = 0.0;
    std::string detail = "mean test MSE vs f(x) at 4 bits:";
    for (const auto& c : cells) {
        worst = std::max(worst, c.mse_truth);
        detail += fmt(" s=%.1f:%.4g", c.noise_std, c.mse_truth);
    }
    detail += fmt(" (limit %.2f)", kMseTarget + kMseSlack);
    return {worst < kMseTarget + kMseSlack, detail};
}

Outcome gamma_ordering() {
    KernelSweepOptions o;
    o.gammas = {0.02, 0.1, 0.4};
    o.quant_bits = {std::nullopt};
    o.noise_stds = {0.0};
    o.lambda = 1e-3;
    o.repeats = 10;
    o.seed = 2024;
    const auto c = kernel_sweep(o);
    const bool pass = c[1].mse_truth < c[2].mse_truth && c[1].mse_truth < c[0].mse_truth;
    return {pass, fmt("MSE gamma=0.02: %.4g, 0.1: %.4g, 0.4: %.4g", c[0].mse_truth, c[1].mse_truth, c[2].mse_truth)};
}

Outcome residual_trend() {
    ResidualOptions o;
    o.noise_stds = {0.01, 0.02, 0.04, 0.08};
    o.gamma = 0.1;
    o.lambda = 1e-3;
    o.repeats = 10;
    o.seed = 2024;
    const auto stats = residual_stats(o);
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < stats.size(); ++i) {
        pass = pass && std::fabs(stats[i].mean) <= kResidualMeanTol;
        if (i > 0) pass = pass && stats[i].variance >= stats[i - 1].variance;
        detail += fmt("s=%.2f mu=%.3g var=%.3g; ", stats[i].noise_std, stats[i].mean, stats[i].variance);
    }
    return {pass, detail + "limits |mu|<=0.05, var nondecreasing"};
}

Outcome scaling_law() {
    ScalingOptions o;
    o.seed = 2024;
    const auto pairs = gamma_scaling_check(o);
    double worst = 0.0;
    bool gamma_ok = true;
    for (const auto& p : pairs) {
        worst = std::max(worst, std::fabs(p.mse_unscaled - p.mse_scaled));
        gamma_ok = gamma_ok && std::fabs(p.scase.scale * p.scase.gamma_opt - 0.1) < 1e-12;
    }
    const double r2 = identity_r_squared(pairs);
    return {pairs.size() == 5 && gamma_ok && worst <= kScalingPairTol && r2 > kScalingR2,
            fmt("%g pairs, max |dMSE| %.2e, R^2 %.6f", static_cast<double>(pairs.size()), worst, r2)};
}

Outcome density_calibration() {
    const DensityConfig cfg = load_density_config(ACAM_TEST_CONFIG_DIR "/density_calibration.cfg");
    std::vector<double> m;
    for (int b = 1; b <= 6; ++b) m.push_back(sense_margin(b, cfg).sense_margin);
    bool decreasing = true;
    for (std::size_t i = 1; i < m.size(); ++i) decreasing = decreasing && std::log10(m[i]) < std::log10(m[i - 1]);
    const bool pass = m[2] >= kMargin3Lo && m[2] <= kMargin3Hi && m[3] >= kMargin4Lo && m[3] <= kMargin4Hi && decreasing;
    return {pass, fmt("margin 3b=%.1f 4b=%.2f; 1b=%.2f 6b=%.3f", m[2], m[3], m[0], m[5]) +
                      (decreasing ? " strictly decreasing" : " NOT strictly decreasing")};
}

Outcome fewshot_properties() {
    const VoltageRange range{};
    SweepOptions o;
    o.episodes = 500;
    o.seed = 31;
    o.window_sizes = {0.4};

    const auto separable = synth_embeddings(20, 20, 64, 0.02 * range.span(), 7, range);
    const double acc_sep = sweep_accuracy(separable, 5, 5, o).cells[0].accuracy;

    const auto clustered = load_embeddings(ACAM_TEST_DATA_DIR "/embeddings_synth.csv");
    SweepOptions plateau = o;
    plateau.window_sizes = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    const auto cells = sweep_accuracy(clustered, 5, 5, plateau).cells;
    double lo = 1.0, hi = 0.0;
    for (const auto& c : cells) lo = std::min(lo, c.accuracy), hi = std::max(hi, c.accuracy);

    SweepOptions noisy = o;
    noisy.noise_stds = {0.0, 0.1};
    const auto nc = sweep_accuracy(clustered, 5, 5, noisy).cells;
    const double drop = nc[0].accuracy - nc[1].accuracy;

    const bool pass = acc_sep == 1.0 && hi - lo < kPlateauSpread && drop < kNoiseDrop;
    return {pass, fmt("(a) acc %.3f; (b) windows 0.2-0.7 spread %.3f; (c) drop at s=0.1 %.3f", acc_sep, hi - lo, drop)};
}

Outcome search_oracle() {
    std::mt19937_64 rng(909);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    std::uniform_real_distribution<double> u(-0.3, 2.0);
    int mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t m = dim(rng), d = dim(rng);
        std::vector<MatchWindow> w;
        std::vector<std::vector<oracle::Interval>> rows(m);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                double a = u(rng), b = u(rng);
                if (a > b) std::swap(a, b);
                w.push_back({a, b});
                rows[i].push_back({a, b});
            }
        }
        std::vector<double> q(d);
        for (auto& v : q) v = u(rng);
        if (analog_hamming(AcamArray(m, d, w), q).scores != oracle::membership_count(rows, q)) ++mismatches;
    }
    return {mismatches == 0, fmt("%g of 100 arrays differ from the membership oracle", mismatches)};
}

Outcome pipeline_identity() {
    const auto data = make_dataset({}, 77);
    const KernelModel model = fit(data.train_x, data.train_y, {KernelKind::AcamSurrogate, 0.1, 1.0}, 1e-3);
    std::mt19937_64 rng(78);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> q{u(rng)};
        worst = std::max(worst, std::fabs(predict_acam(model, q, {}) - predict_exact(model, q)));
    }
    return {worst <= kPipelineTol, fmt("max |acam - exact| %.2e over 100 queries", worst)};
}

Outcome op_counting() {
    const std::uint64_t exact = op_count(64, 64, OpMode::ExactSoftware);
    const std::uint64_t tally = 64 * (3 * 64 + 2) + 2 * 64;
    const bool order = exact >= 4096 / 10 && exact <= 4096 * 10;
    bool acam_one = true;
    for (std::size_t m : {1, 7, 64, 1000})
        for (std::size_t d : {1, 3, 64}) acam_one = acam_one && op_count(m, d, OpMode::Acam) == 1;
    return {exact == tally && order && acam_one,
            fmt("exact(64,64)=%g, tally %g, ratio to 4096 %.2f; acam=1 everywhere: ", static_cast<double>(exact),
                static_cast<double>(tally), static_cast<double>(exact) / 4096.0) +
                (acam_one ? "yes" : "no") + " [" + kOpCountFormula + "]"};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "surrogate kernel identities", 1.0, surrogate_identities},
        {2, "ridge fit vs elimination oracle", 5.0, ridge_oracle},
        {3, "4-bit kernel regression MSE under window noise", 10.0, four_bit_regression},
        {4, "fitting-regime ordering in gamma", 10.0, gamma_ordering},
        {5, "residual trend under window noise", 20.0, residual_trend},
        {6, "gamma scaling law", 20.0, scaling_law},
        {7, "sense-margin calibration", 1.0, density_calibration},
        {8, "few-shot property suite", 60.0, fewshot_properties},
        {9, "search oracle equivalence", 5.0, search_oracle},
        {10, "pipeline identity", 1.0, pipeline_identity},
        {11, "op-count accounting", 1.0, op_counting},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.time_limit_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::printf("%s  %2d  %-48s %s (%.2fs, limit %.0fs%s)\n", pass ? "PASS" : "FAIL", c.id, c.name,
                    o.detail.c_str(), secs, c.time_limit_s, in_time ? "" : ", TOO SLOW");
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
