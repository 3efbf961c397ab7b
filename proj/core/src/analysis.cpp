#include "acam/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "acam/errors.hpp"
#include "acam/io.hpp"
#include "acam/rng.hpp"
#include "device_keys.hpp"
#include "parallel.hpp"

namespace acam {

void DensityConfig::validate() const {
    device.validate();
    if (!std::isfinite(ml_leakage) || ml_leakage < 0.0) throw InvalidArgument("ml_leakage must be finite and >= 0");
}

DensityConfig parse_density_config(std::string_view text, const std::string& source) {
    const io::KeyValueMap kv = io::parse_key_values(text, source);
    DensityConfig cfg;
    for (const auto& [key, entry] : kv) {
        if (key == "ml_leakage") {
            cfg.ml_leakage = io::parse_double(entry.value, source, entry.line);
        } else if (!detail::apply_device_key(cfg.device, key, entry, source)) {
            throw ParseError(source, entry.line, "unknown density key '" + key + "'");
        }
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(source, 0, e.what());
    }
    return cfg;
}

DensityConfig load_density_config(const std::filesystem::path& path) {
    return parse_density_config(io::read_file(path), path.string());
}

DensityPoint sense_margin(int bits, const DensityConfig& config) {
    if (bits < 1 || bits > 20) throw InvalidArgument("bits must be in [1, 20]");
    config.validate();
    const VoltageRange& range = config.device.range;
    const std::size_t n = std::size_t{1} << bits;
    const double width = range.span() / static_cast<double>(n);

    auto window = [&](std::size_t k) {
        const double lo = range.v_min + width * static_cast<double>(k);
        return MatchWindow{lo, k + 1 == n ? range.v_max : lo + width};
    };

    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        const MatchWindow own = window(k);
        const double on = cell_current(own, own.center(), config.device) + config.ml_leakage;
        for (std::size_t nb : {k - 1, k + 1}) {
            if (nb >= n) continue;  // wraps for k == 0
            const double off = cell_current(own, window(nb).center(), config.device) + config.ml_leakage;
            margin = std::min(margin, off / on);
        }
    }
    DensityPoint out;
    out.bits = bits;
    out.window_width = width;
    out.sense_margin = margin;
    out.degenerate = width < 2.0 * config.device.subthreshold_swing_mv / 1000.0;
    return out;
}

RegressionData make_dataset(const DatasetSpec& spec, std::uint64_t seed, double x_scale) {
    if (spec.n_train < 1 || spec.n_test < 1) throw InvalidArgument("dataset needs n_train, n_test >= 1");
    if (!(spec.x_max > spec.x_min)) throw InvalidArgument("dataset needs x_max > x_min");
    if (!(spec.label_noise >= 0.0)) throw InvalidArgument("label_noise must be >= 0");
    if (!(x_scale > 0.0) || !std::isfinite(x_scale)) throw InvalidArgument("x_scale must be finite and > 0");

    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uniform(spec.x_min, spec.x_max);
    auto draw = [&](std::size_t n, RowMatrix& x, Eigen::VectorXd& y, Eigen::VectorXd& truth) {
        x.resize(static_cast<Eigen::Index>(n), 1);
        y.resize(static_cast<Eigen::Index>(n));
        truth.resize(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double u = uniform(rng);
            truth[i] = std::sin(spec.frequency * u);
            y[i] = truth[i] + spec.label_noise * standard_normal(rng);
            x(i, 0) = u * x_scale;
        }
    };
    RegressionData data;
    Eigen::VectorXd train_truth;
    draw(spec.n_train, data.train_x, data.train_y, train_truth);
    draw(spec.n_test, data.test_x, data.test_y, data.test_truth);
    return data;
}

namespace {

template <typename Predict>
RegressionScore score(const RegressionData& data, Predict&& predict) {
    RegressionScore s;
    const auto n = data.test_x.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y_hat = predict(row_span(data.test_x, i));
        s.mse_truth += (y_hat - data.test_truth[i]) * (y_hat - data.test_truth[i]);
        s.mse_labels += (y_hat - data.test_y[i]) * (y_hat - data.test_y[i]);
    }
    s.mse_truth /= static_cast<double>(n);
    s.mse_labels /= static_cast<double>(n);
    return s;
}

RegressionScore score_model(const RegressionData& data, const KernelModel& model,
                            const std::optional<AcamKernelConfig>& acam) {
    if (!acam) return score(data, [&](std::span<const double> x) { return predict_exact(model, x); });
    const AcamKernelMachine machine(model, *acam);
    return score(data, [&](std::span<const double> x) { return machine.predict(x); });
}

}  // namespace

RegressionScore evaluate_regression(const RegressionData& data, const KernelSpec& kernel, double lambda,
                                    const std::optional<AcamKernelConfig>& acam) {
    const KernelModel model = fit(data.train_x, data.train_y, kernel, lambda);
    return score_model(data, model, acam);
}

std::vector<KernelSweepCell> kernel_sweep(const KernelSweepOptions& options) {
    if (options.repeats == 0) throw InvalidArgument("kernel sweep needs repeats >= 1");
    options.range.validate();
    const std::size_t n_cells = options.gammas.size() * options.quant_bits.size() * options.noise_stds.size();
    std::vector<std::vector<RegressionScore>> per_repeat(options.repeats, std::vector<RegressionScore>(n_cells));

    detail::parallel_for(options.repeats, options.threads, [&](std::size_t r) {
        const RegressionData data = make_dataset(options.dataset, derive_seed(options.seed, {r}));
        std::size_t cell = 0;
        for (double gamma : options.gammas) {
            const KernelModel model = fit(data.train_x, data.train_y, {KernelKind::AcamSurrogate, gamma, 1.0},
                                          options.lambda);
            for (const auto& bits : options.quant_bits) {
                for (double s : options.noise_stds) {
                    AcamKernelConfig cfg;
                    cfg.quant_bits = bits;
                    cfg.range = options.range;
                    cfg.noise.std = s;
                    cfg.noise.seed = derive_seed(options.seed, {r, 1});
                    per_repeat[r][cell++] = score_model(data, model, cfg);
                }
            }
        }
    });

    std::vector<KernelSweepCell> cells;
    cells.reserve(n_cells);
    std::size_t cell = 0;
    for (double gamma : options.gammas) {
        for (const auto& bits : options.quant_bits) {
            for (double s : options.noise_stds) {
                KernelSweepCell c{gamma, bits, s, 0.0, 0.0, options.repeats};
                for (const auto& rep : per_repeat) {
                    c.mse_truth += rep[cell].mse_truth;
                    c.mse_labels += rep[cell].mse_labels;
                }
                c.mse_truth /= static_cast<double>(options.repeats);
                c.mse_labels /= static_cast<double>(options.repeats);
                cells.push_back(c);
                ++cell;
            }
        }
    }
    return cells;
}

void write_kernel_sweep_csv(std::ostream& out, std::span<const KernelSweepCell> cells) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "gamma,quant_bits,noise_std,mse_truth,mse_labels,repeats\n";
    for (const auto& c : cells) {
        buf << c.gamma << ',';
        if (c.quant_bits) buf << *c.quant_bits;
        else buf << "analog";
        buf << ',' << c.noise_std << ',' << c.mse_truth << ',' << c.mse_labels << ',' << c.repeats << '\n';
    }
    out << buf.str();
}

std::size_t Histogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::vector<ResidualStats> residual_stats(const ResidualOptions& options) {
    if (options.repeats == 0) throw InvalidArgument("residual stats need repeats >= 1");
    if (options.bins == 0) throw InvalidArgument("histogram needs bins >= 1");
    if (!(options.hist_half_width > 0.0)) throw InvalidArgument("hist_half_width must be > 0");

    const double lo = -options.hist_half_width;
    const double hi = options.hist_half_width;
    const double bin_width = (hi - lo) / static_cast<double>(options.bins);

    std::vector<ResidualStats> out;
    std::vector<std::vector<double>> seed_means(options.noise_stds.size());
    for (double s : options.noise_stds) {
        ResidualStats st;
        st.noise_std = s;
        st.histogram = {lo, hi, std::vector<std::size_t>(options.bins, 0)};
        out.push_back(std::move(st));
    }

    for (std::size_t r = 0; r < options.repeats; ++r) {
        const RegressionData data = make_dataset(options.dataset, derive_seed(options.seed, {r}));
        const KernelModel model =
            fit(data.train_x, data.train_y, {KernelKind::AcamSurrogate, options.gamma, 1.0}, options.lambda);
        for (std::size_t k = 0; k < options.noise_stds.size(); ++k) {
            AcamKernelConfig cfg;
            cfg.quant_bits = options.quant_bits;
            cfg.range = options.range;
            cfg.noise.std = options.noise_stds[k];
            cfg.noise.seed = derive_seed(options.seed, {r, 1});
            const AcamKernelMachine machine(model, cfg);

            const auto n = data.test_x.rows();
            Eigen::VectorXd res(n);
            for (Eigen::Index i = 0; i < n; ++i) res[i] = machine.predict(row_span(data.test_x, i)) - data.test_truth[i];
            const double mean = res.mean();
            const double var = (res.array() - mean).square().mean();

            ResidualStats& st = out[k];
            st.mean += mean;
            st.variance += var;
            st.samples += static_cast<std::size_t>(n);
            seed_means[k].push_back(mean);
            for (double v : res) {
                // Out-of-range residuals land in the edge bins.
                const auto b = static_cast<long long>(std::floor((v - lo) / bin_width));
                const auto idx = std::clamp<long long>(b, 0, static_cast<long long>(options.bins) - 1);
                ++st.histogram.counts[static_cast<std::size_t>(idx)];
            }
        }
    }

    const auto reps = static_cast<double>(options.repeats);
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].mean /= reps;
        out[k].variance /= reps;
        if (options.repeats > 1) {
            double ss = 0.0;
            for (double m : seed_means[k]) ss += (m - out[k].mean) * (m - out[k].mean);
            out[k].mean_spread = std::sqrt(ss / (reps - 1.0));
        }
    }
    return out;
}

void write_residuals_csv(std::ostream& out, std::span<const ResidualStats> stats) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "noise_std,bin_lo,bin_hi,count,mean,variance,mean_spread\n";
    for (const auto& st : stats) {
        const auto& h = st.histogram;
        const double w = (h.hi - h.lo) / static_cast<double>(h.counts.size());
        for (std::size_t b = 0; b < h.counts.size(); ++b) {
            buf << st.noise_std << ',' << h.lo + w * static_cast<double>(b) << ','
                << h.lo + w * static_cast<double>(b + 1) << ',' << h.counts[b] << ',' << st.mean << ','
                << st.variance << ',' << st.mean_spread << '\n';
        }
    }
    out << buf.str();
}

std::vector<ScalingCase> default_scaling_family() {
    return {{20.0, 0.025, 4.0}, {10.0, 0.05, 2.0}, {5.0, 0.1, 1.0}, {2.5, 0.2, 0.5}, {1.125, 0.4, 0.25}};
}

std::vector<ScalingPair> gamma_scaling_check(const ScalingOptions& options) {
    std::vector<ScalingPair> out;
    for (std::size_t i = 0; i < options.family.size(); ++i) {
        const ScalingCase& sc = options.family[i];
        if (!(sc.scale > 0.0) || !(sc.gamma_opt > 0.0)) throw InvalidArgument("scaling case needs scale, gamma > 0");
        DatasetSpec spec = options.dataset;
        spec.frequency = sc.frequency;
        const std::uint64_t seed = derive_seed(options.seed, {i});
        const RegressionData plain = make_dataset(spec, seed);
        const RegressionData scaled = make_dataset(spec, seed, sc.scale);
        ScalingPair p{sc, 0.0, 0.0};
        p.mse_unscaled =
            evaluate_regression(plain, {KernelKind::AcamSurrogate, sc.gamma_opt, 1.0}, options.lambda, std::nullopt)
                .mse_truth;
        p.mse_scaled = evaluate_regression(scaled, {KernelKind::AcamSurrogate, sc.scale * sc.gamma_opt, 1.0},
                                           options.lambda, std::nullopt)
                           .mse_truth;
        out.push_back(p);
    }
    return out;
}

double identity_r_squared(std::span<const ScalingPair> pairs) {
    if (pairs.empty()) throw InvalidArgument("identity_r_squared needs at least one pair");
    double mean_y = 0.0;
    for (const auto& p : pairs) mean_y += p.mse_scaled;
    mean_y /= static_cast<double>(pairs.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (const auto& p : pairs) {
        ss_res += (p.mse_scaled - p.mse_unscaled) * (p.mse_scaled - p.mse_unscaled);
        ss_tot += (p.mse_scaled - mean_y) * (p.mse_scaled - mean_y);
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
    return 1.0 - ss_res / ss_tot;
}

void write_scaling_csv(std::ostream& out, std::span<const ScalingPair> pairs) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "frequency,gamma_opt,scale,gamma_scaled,mse_unscaled,mse_scaled\n";
    for (const auto& p : pairs) {
        buf << p.scase.frequency << ',' << p.scase.gamma_opt << ',' << p.scase.scale << ','
            << p.scase.scale * p.scase.gamma_opt << ',' << p.mse_unscaled << ',' << p.mse_scaled << '\n';
    }
    out << buf.str();
}

std::uint64_t op_count(std::size_t m, std::size_t d, OpMode mode) {
    if (mode == OpMode::Acam) return 1;
    return static_cast<std::uint64_t>(m) * (3 * static_cast<std::uint64_t>(d) + 4);
}

}  // namespace acam
