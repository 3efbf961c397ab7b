#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "acam/analysis.hpp"
#include "acam/array.hpp"
#include "acam/device.hpp"
#include "acam/errors.hpp"
#include "acam/fewshot.hpp"
#include "acam/io.hpp"
#include "acam/kernel.hpp"
#include "acam/search.hpp"

namespace acam::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class UsageError : public Error {
public:
    using Error::Error;
};

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out_dir = ".";
    unsigned threads = 1;
    std::vector<std::string> argv;
};

std::uint64_t require_seed(const Globals& g, const std::string& command) {
    if (!g.seed) throw UsageError("--seed is required for '" + command + "'");
    return *g.seed;
}

std::optional<int> parse_bits(const std::string& text) {
    if (text == "none" || text == "analog") return std::nullopt;
    int bits = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), bits);
    if (ec != std::errc{} || ptr != text.data() + text.size() || bits < 1 || bits > 30) {
        throw UsageError("--bits must be an integer in [1, 30] or 'none', got '" + text + "'");
    }
    return bits;
}

/// "1..6" or "1,3,5".
std::vector<int> parse_bit_list(const std::string& text) {
    std::vector<int> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const auto lo = parse_bits(text.substr(0, dots));
        const auto hi = parse_bits(text.substr(dots + 2));
        if (!lo || !hi || *lo > *hi) throw UsageError("bad bit range '" + text + "'");
        for (int b = *lo; b <= *hi; ++b) out.push_back(b);
        return out;
    }
    for (auto token : io::split(text, ',')) {
        const auto b = parse_bits(std::string(io::trim(token)));
        if (!b) throw UsageError("bit list entries must be integers");
        out.push_back(*b);
    }
    return out;
}

json bits_json(const std::optional<int>& bits) {
    return bits ? json(*bits) : json("none");
}

DeviceDefaults device_from(const Globals& g) {
    return g.config.empty() ? DeviceDefaults{} : load_device_config(g.config);
}

std::string read_text(const std::string& path) {
    try {
        return io::read_file(path);
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception& e) {
        throw ParseError(path, 0, e.what());
    }
}

/// Writes `content` to out_dir/name and the re-run config next to it.
void write_output(const Globals& g, const std::string& command, const std::string& name,
                  const std::string& content, const json& params) {
    const fs::path dir(g.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    auto write = [](const fs::path& path, const std::string& text) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path.string());
        f << text;
        if (!f) throw Error("write failed for " + path.string());
    };
    write(dir / name, content);
    json sidecar;
    sidecar["command"] = command;
    sidecar["argv"] = g.argv;
    sidecar["seed"] = g.seed ? json(*g.seed) : json(nullptr);
    sidecar["config"] = g.config;
    sidecar["threads"] = g.threads;
    sidecar["params"] = params;
    write(dir / (name + ".config.json"), sidecar.dump(2) + "\n");
}

// ------------------------------------------------------------------ search

struct SearchArgs {
    std::string array_path;
    std::string query_path;
};

int cmd_search(const Globals& g, const SearchArgs& a, std::ostream& out) {
    std::istringstream array_in(read_text(a.array_path));
    const AcamArray array = read_array_csv(array_in, a.array_path);
    std::istringstream query_in(read_text(a.query_path));
    const auto rows = io::read_numeric_csv(query_in, a.query_path, false);
    if (rows.size() != 1) {
        throw ParseError(a.query_path, 0, "expected exactly one query row, found " + std::to_string(rows.size()));
    }
    if (rows[0].size() != array.cols()) {
        throw UsageError("query has " + std::to_string(rows[0].size()) + " values, array expects d = " +
                         std::to_string(array.cols()));
    }
    const std::string result = to_json(analog_hamming(array, rows[0]));
    write_output(g, "search", "search.json", result + "\n",
                 {{"array", a.array_path}, {"query", a.query_path}});
    out << result << '\n';
    return kOk;
}

// ------------------------------------------------------------------ kernel

struct KernelArgs {
    std::string train_path;
    std::string test_path;
    double gamma = 0.1;
    double lambda = 1e-3;
    std::string bits = "4";
    double noise_std = 0.0;
    std::string kind = "acam";
};

struct LabeledTable {
    std::vector<std::string> feature_names;
    RowMatrix x;
    Eigen::VectorXd y;
    std::optional<Eigen::VectorXd> truth;
};

/// Header names every column: features, then `y`, then optionally `truth`.
LabeledTable read_labeled_csv(const std::string& path) {
    std::istringstream in(read_text(path));
    io::LineReader reader(in, path);
    std::string line;
    if (!reader.next(line)) throw ParseError(path, 0, "empty file, expected header like 'x,y'");
    std::vector<std::string> names;
    for (auto cell : io::split(line, ',')) names.emplace_back(io::trim(cell));
    const bool has_truth = !names.empty() && names.back() == "truth";
    const std::size_t y_col = names.size() - (has_truth ? 2 : 1);
    if (names.size() < 2 + (has_truth ? 1 : 0) || names[y_col] != "y") {
        throw ParseError(path, reader.line_number(), "header must be '<features...>,y[,truth]'");
    }
    LabeledTable t;
    t.feature_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(y_col));
    std::vector<std::vector<double>> rows;
    while (reader.next(line)) {
        const auto cells = io::split(line, ',');
        if (cells.size() != names.size()) {
            throw ParseError(path, reader.line_number(),
                             "row has " + std::to_string(cells.size()) + " cells, header has " +
                                 std::to_string(names.size()));
        }
        auto& row = rows.emplace_back();
        for (auto cell : cells) row.push_back(io::parse_double(cell, path, reader.line_number()));
    }
    if (rows.empty()) throw ParseError(path, reader.line_number(), "no data rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    t.x.resize(n, static_cast<Eigen::Index>(y_col));
    t.y.resize(n);
    if (has_truth) t.truth = Eigen::VectorXd(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        for (std::size_t j = 0; j < y_col; ++j) t.x(r, static_cast<Eigen::Index>(j)) = row[j];
        t.y[r] = row[y_col];
        if (has_truth) (*t.truth)[r] = row[y_col + 1];
    }
    return t;
}

int cmd_kernel(const Globals& g, const KernelArgs& a, std::ostream& out) {
    const auto bits = parse_bits(a.bits);
    KernelSpec spec;
    spec.kind = kernel_kind_from_string(a.kind);
    spec.gamma = a.gamma;
    if (spec.kind == KernelKind::Laplace) spec.c = a.gamma;
    spec.validate();
    if (a.noise_std > 0.0) require_seed(g, "kernel");

    const LabeledTable train = read_labeled_csv(a.train_path);
    const LabeledTable test = a.test_path.empty() ? train : read_labeled_csv(a.test_path);
    if (test.x.cols() != train.x.cols()) {
        throw UsageError("test file has " + std::to_string(test.x.cols()) + " features, train has d = " +
                         std::to_string(train.x.cols()));
    }
    const KernelModel model = fit(train.x, train.y, spec, a.lambda);

    std::optional<AcamKernelMachine> machine;
    if (spec.kind == KernelKind::AcamSurrogate) {
        AcamKernelConfig cfg;
        cfg.quant_bits = bits;
        cfg.range = device_from(g).range;
        cfg.noise.std = a.noise_std;
        cfg.noise.seed = g.seed.value_or(0);
        machine.emplace(model, cfg);
    }

    std::ostringstream csv;
    csv.precision(17);
    for (const auto& name : test.feature_names) csv << name << ',';
    csv << "y,y_hat" << (test.truth ? ",truth" : "") << '\n';
    double mse = 0.0;
    double mse_truth = 0.0;
    for (Eigen::Index i = 0; i < test.x.rows(); ++i) {
        const auto x = row_span(test.x, i);
        const double y_hat = machine ? machine->predict(x) : predict_exact(model, x);
        mse += (y_hat - test.y[i]) * (y_hat - test.y[i]);
        for (double v : x) csv << v << ',';
        csv << test.y[i] << ',' << y_hat;
        if (test.truth) {
            mse_truth += (y_hat - (*test.truth)[i]) * (y_hat - (*test.truth)[i]);
            csv << ',' << (*test.truth)[i];
        }
        csv << '\n';
    }
    const auto n = static_cast<double>(test.x.rows());

    const json params = {{"train", a.train_path}, {"test", a.test_path},  {"kind", to_string(spec.kind)},
                         {"gamma", a.gamma},      {"lambda", a.lambda},   {"bits", bits_json(bits)},
                         {"noise_std", a.noise_std}};
    json summary = {{"n_train", model.m()},
                    {"n_test", test.x.rows()},
                    {"mse", mse / n},
                    {"mse_truth", test.truth ? json(mse_truth / n) : json(nullptr)},
                    {"solver", to_string(model.solver)},
                    {"fit_residual", model.fit_residual}};
    write_output(g, "kernel", "predictions.csv", csv.str(), params);
    write_output(g, "kernel", "summary.json", summary.dump(2) + "\n", params);
    out << summary.dump() << '\n';
    return kOk;
}

// ----------------------------------------------------------------- fewshot

struct FewshotArgs {
    std::string embeddings;
    std::size_t classes = 20;
    std::size_t per_class = 20;
    std::size_t dim = kDefaultEmbeddingDim;
    double cluster_std = 0.4;
    int n_way = 5;
    int k_shot = 5;
    std::size_t episodes = 100;
    std::vector<double> windows{0.4};
    std::vector<double> noise_stds{0.0};
    std::string bits = "4";
    std::string mode = "per-sample";
};

int cmd_fewshot(const Globals& g, const FewshotArgs& a, std::ostream& out) {
    const std::uint64_t seed = require_seed(g, "fewshot");
    const DeviceDefaults dev = device_from(g);
    SweepOptions o;
    o.episodes = a.episodes;
    o.window_sizes = a.windows;
    o.noise_stds = a.noise_stds;
    o.seed = seed;
    o.threads = g.threads;
    o.base.quant_bits = parse_bits(a.bits);
    o.base.embed_range = dev.range;
    if (a.mode == "per-sample") o.base.mode = SupportMode::PerSample;
    else if (a.mode == "centroid") o.base.mode = SupportMode::Centroid;
    else throw UsageError("--mode must be 'per-sample' or 'centroid'");

    const EmbeddingTable table = a.embeddings.empty()
                                     ? synth_embeddings(a.classes, a.per_class, a.dim, a.cluster_std,
                                                        derive_seed(seed, {0xE}), dev.range)
                                     : load_embeddings(a.embeddings);
    const SweepResult r = sweep_accuracy(table, a.n_way, a.k_shot, o);

    std::ostringstream csv;
    write_accuracy_csv(csv, r.cells);
    json params = {{"embeddings", a.embeddings}, {"n_way", a.n_way},         {"k_shot", a.k_shot},
                   {"episodes", a.episodes},     {"windows", a.windows},     {"noise_stds", a.noise_stds},
                   {"bits", bits_json(o.base.quant_bits)}, {"mode", a.mode}};
    if (a.embeddings.empty()) {
        params["synthetic"] = {{"classes", a.classes}, {"per_class", a.per_class}, {"dim", a.dim},
                               {"cluster_std", a.cluster_std}};
    }
    write_output(g, "fewshot", "fewshot_accuracy.csv", csv.str(), params);

    json summary;
    summary["cosine_accuracy"] = r.cosine_accuracy;
    summary["cells"] = json::array();
    for (const auto& c : r.cells) {
        summary["cells"].push_back({{"window_size", c.window_size}, {"noise_std", c.noise_std},
                                    {"accuracy", c.accuracy}, {"n_episodes", c.n_episodes}});
    }
    if (!a.embeddings.empty()) {
        // Informational comparison for user-supplied embeddings; never affects the exit code.
        json band = {{"lo", 0.90}, {"hi", 0.95}, {"cells", json::array()}};
        for (const auto& c : r.cells) {
            band["cells"].push_back(c.accuracy < 0.90 ? "below" : c.accuracy > 0.95 ? "above" : "inside");
        }
        summary["reference_band"] = band;
    }
    out << summary.dump() << '\n';
    return kOk;
}

// ----------------------------------------------------------------- density

int cmd_density(const Globals& g, const std::string& bits_text, std::ostream& out) {
    std::string path = g.config;
#ifdef ACAM_CONFIG_DIR
    if (path.empty()) {
        const std::string shipped = std::string(ACAM_CONFIG_DIR) + "/density_calibration.cfg";
        if (fs::exists(shipped)) path = shipped;
    }
#endif
    const DensityConfig cfg = path.empty() ? DensityConfig{} : load_density_config(path);
    std::ostringstream csv;
    csv.precision(17);
    csv << "bits,window_width,sense_margin,log10_margin,degenerate\n";
    json rows = json::array();
    for (int b : parse_bit_list(bits_text)) {
        const DensityPoint p = sense_margin(b, cfg);
        csv << p.bits << ',' << p.window_width << ',' << p.sense_margin << ',' << std::log10(p.sense_margin) << ','
            << (p.degenerate ? 1 : 0) << '\n';
        rows.push_back({{"bits", p.bits}, {"window_width", p.window_width}, {"sense_margin", p.sense_margin},
                        {"degenerate", p.degenerate}});
    }
    write_output(g, "density", "density.csv", csv.str(), {{"bits", bits_text}, {"calibration", path}});
    out << json{{"points", rows}}.dump() << '\n';
    return kOk;
}

// ----------------------------------------------------------------- scaling

struct DatasetArgs {
    std::size_t n_train = 64;
    std::size_t n_test = 256;
    double label_noise = 0.2;
    double lambda = 1e-3;

    DatasetSpec spec() const {
        DatasetSpec s;
        s.n_train = n_train;
        s.n_test = n_test;
        s.label_noise = label_noise;
        return s;
    }
    json to_json() const {
        return {{"n_train", n_train}, {"n_test", n_test}, {"label_noise", label_noise}, {"lambda", lambda}};
    }
};

void add_dataset_options(CLI::App* sub, DatasetArgs& d) {
    sub->add_option("--n-train", d.n_train, "Training points")->capture_default_str();
    sub->add_option("--n-test", d.n_test, "Test points")->capture_default_str();
    sub->add_option("--label-noise", d.label_noise, "Label noise std")->capture_default_str();
    sub->add_option("--lambda", d.lambda, "Ridge parameter")->capture_default_str();
}

int cmd_scaling(const Globals& g, const DatasetArgs& d, std::ostream& out) {
    ScalingOptions o;
    o.dataset = d.spec();
    o.lambda = d.lambda;
    o.seed = require_seed(g, "scaling");
    const auto pairs = gamma_scaling_check(o);
    std::ostringstream csv;
    write_scaling_csv(csv, pairs);
    write_output(g, "scaling", "scaling.csv", csv.str(), d.to_json());
    double max_diff = 0.0;
    for (const auto& p : pairs) max_diff = std::max(max_diff, std::abs(p.mse_scaled - p.mse_unscaled));
    out << json{{"pairs", pairs.size()}, {"r_squared", identity_r_squared(pairs)}, {"max_abs_diff", max_diff}}.dump()
        << '\n';
    return kOk;
}

// --------------------------------------------------------------- residuals

struct ResidualArgs {
    DatasetArgs data;
    std::vector<double> noise_stds{0.0, 0.01, 0.02, 0.04, 0.08};
    double gamma = 0.1;
    std::string bits = "none";
    std::size_t repeats = 10;
    std::size_t bins = 41;
    double half_width = 1.0;
};

int cmd_residuals(const Globals& g, const ResidualArgs& a, std::ostream& out) {
    ResidualOptions o;
    o.dataset = a.data.spec();
    o.lambda = a.data.lambda;
    o.noise_stds = a.noise_stds;
    o.gamma = a.gamma;
    o.quant_bits = parse_bits(a.bits);
    o.repeats = a.repeats;
    o.seed = require_seed(g, "residuals");
    o.range = device_from(g).range;
    o.bins = a.bins;
    o.hist_half_width = a.half_width;
    const auto stats = residual_stats(o);
    std::ostringstream csv;
    write_residuals_csv(csv, stats);
    json params = a.data.to_json();
    params.update({{"noise_stds", a.noise_stds}, {"gamma", a.gamma},   {"bits", bits_json(o.quant_bits)},
                   {"repeats", a.repeats},       {"bins", a.bins},     {"half_width", a.half_width}});
    write_output(g, "residuals", "residuals.csv", csv.str(), params);
    json rows = json::array();
    for (const auto& s : stats) {
        rows.push_back({{"noise_std", s.noise_std}, {"mean", s.mean}, {"variance", s.variance},
                        {"mean_spread", s.mean_spread}, {"samples", s.samples}});
    }
    out << json{{"stats", rows}}.dump() << '\n';
    return kOk;
}

// ----------------------------------------------------------------- opcount

int cmd_opcount(std::size_t m, std::size_t d, std::ostream& out) {
    out << json{{"m", m},
                {"d", d},
                {"exact_software", op_count(m, d, OpMode::ExactSoftware)},
                {"acam", op_count(m, d, OpMode::Acam)},
                {"formula", kOpCountFormula}}
               .dump()
        << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Behavioral simulator for FeFET analog CAM search, kernel regression and few-shot experiments",
                 "acamsim"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    g.argv = args;
    app.add_option("--seed", g.seed, "RNG seed (required by stochastic subcommands)");
    app.add_option("--config", g.config, "Device or calibration config file");
    app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::PositiveNumber)->capture_default_str();

    SearchArgs search;
    auto* s = app.add_subcommand("search", "Generalized Hamming search of one query against an array");
    s->add_option("--array", search.array_path, "Array CSV")->required();
    s->add_option("--query", search.query_path, "Query CSV (one row)")->required();

    KernelArgs kernel;
    auto* k = app.add_subcommand("kernel", "Kernel ridge fit and ACAM inference on a CSV dataset");
    k->add_option("--train", kernel.train_path, "Training CSV with header '<x...>,y'")->required();
    k->add_option("--test", kernel.test_path, "Test CSV '<x...>,y[,truth]' (default: training set)");
    k->add_option("--gamma", kernel.gamma, "Kernel width (V)")->capture_default_str();
    k->add_option("--lambda", kernel.lambda, "Ridge parameter")->capture_default_str();
    k->add_option("--bits", kernel.bits, "Center quantization bits or 'none'")->capture_default_str();
    k->add_option("--noise-std", kernel.noise_std, "Window bound noise std (V)")->capture_default_str();
    k->add_option("--kind", kernel.kind, "acam, rbf or laplace")->capture_default_str();

    FewshotArgs few;
    auto* f = app.add_subcommand("fewshot", "N-way K-shot accuracy grid over window size and noise");
    f->add_option("--embeddings", few.embeddings, "Embedding CSV 'label,e0,...' (default: synthetic)");
    f->add_option("--classes", few.classes, "Synthetic classes")->capture_default_str();
    f->add_option("--per-class", few.per_class, "Synthetic samples per class")->capture_default_str();
    f->add_option("--dim", few.dim, "Synthetic embedding dimension")->capture_default_str();
    f->add_option("--cluster-std", few.cluster_std, "Synthetic cluster std (V)")->capture_default_str();
    f->add_option("--n-way", few.n_way, "Classes per episode")->capture_default_str();
    f->add_option("--k-shot", few.k_shot, "Support samples per class")->capture_default_str();
    f->add_option("--episodes", few.episodes, "Episodes per grid cell")->capture_default_str();
    f->add_option("--windows", few.windows, "Window sizes (V)")->delimiter(',')->capture_default_str();
    f->add_option("--noise-stds", few.noise_stds, "Window noise stds (V)")->delimiter(',')->capture_default_str();
    f->add_option("--bits", few.bits, "Center quantization bits or 'none'")->capture_default_str();
    f->add_option("--mode", few.mode, "per-sample or centroid")->capture_default_str();

    std::string density_bits = "1..6";
    auto* dn = app.add_subcommand("density", "Sense margin versus bits per cell");
    dn->add_option("--bits", density_bits, "Bit range '1..6' or list '3,4'")->capture_default_str();

    DatasetArgs scaling;
    auto* sc = app.add_subcommand("scaling", "Paired MSE of scaled and unscaled kernel widths");
    add_dataset_options(sc, scaling);

    ResidualArgs resid;
    auto* rs = app.add_subcommand("residuals", "Residual histograms under window noise");
    add_dataset_options(rs, resid.data);
    rs->add_option("--noise-stds", resid.noise_stds, "Window noise stds (V)")->delimiter(',')->capture_default_str();
    rs->add_option("--gamma", resid.gamma, "Kernel width (V)")->capture_default_str();
    rs->add_option("--bits", resid.bits, "Center quantization bits or 'none'")->capture_default_str();
    rs->add_option("--repeats", resid.repeats, "Datasets to average")->capture_default_str();
    rs->add_option("--bins", resid.bins, "Histogram bins")->capture_default_str();
    rs->add_option("--half-width", resid.half_width, "Histogram half width")->capture_default_str();

    std::size_t op_m = 64;
    std::size_t op_d = 64;
    auto* oc = app.add_subcommand("opcount", "Operation count of one exact prediction versus one ACAM step");
    oc->add_option("--m", op_m, "Training points")->capture_default_str();
    oc->add_option("--d", op_d, "Input dimension")->capture_default_str();

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        if (*s) return cmd_search(g, search, out);
        if (*k) return cmd_kernel(g, kernel, out);
        if (*f) return cmd_fewshot(g, few, out);
        if (*dn) return cmd_density(g, density_bits, out);
        if (*sc) return cmd_scaling(g, scaling, out);
        if (*rs) return cmd_residuals(g, resid, out);
        if (*oc) return cmd_opcount(op_m, op_d, out);
    } catch (const UsageError& e) {
        err << "acamsim: " << e.what() << '\n';
        return kUsageError;
    } catch (const ParseError& e) {
        err << "acamsim: " << e.what() << '\n';
        return kUsageError;
    } catch (const InvalidArgument& e) {
        err << "acamsim: " << e.what() << '\n';
        return kUsageError;
    } catch (const OutOfRange& e) {
        err << "acamsim: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "acamsim: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsageError;
}

}  // namespace acam::cli
