#include "acam/fewshot.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "acam/errors.hpp"
#include "acam/io.hpp"
#include "acam/search.hpp"
#include "parallel.hpp"

namespace acam {

EmbeddingTable read_embeddings(std::istream& in, const std::string& source) {
    io::LineReader reader(in, source);
    std::string line;
    if (!reader.next(line)) throw ParseError(source, 0, "missing header 'label,e0,...'");
    const auto header = io::split(line, ',');
    if (header.size() < 2 || io::trim(header[0]) != "label") {
        throw ParseError(source, reader.line_number(), "header must start with 'label' followed by features");
    }
    const std::size_t d = header.size() - 1;
    for (std::size_t j = 0; j < d; ++j) {
        if (io::trim(header[j + 1]) != "e" + std::to_string(j)) {
            throw ParseError(source, reader.line_number(),
                             "feature column " + std::to_string(j + 1) + " must be named e" + std::to_string(j));
        }
    }
    std::vector<int> labels;
    std::vector<double> values;
    while (reader.next(line)) {
        const auto cells = io::split(line, ',');
        if (cells.size() != d + 1) {
            throw ParseError(source, reader.line_number(),
                             "row has " + std::to_string(cells.size() - 1) + " features, expected " +
                                 std::to_string(d));
        }
        labels.push_back(static_cast<int>(io::parse_int(cells[0], source, reader.line_number())));
        for (std::size_t j = 1; j < cells.size(); ++j) {
            values.push_back(io::parse_double(cells[j], source, reader.line_number()));
        }
    }
    EmbeddingTable table;
    table.labels = std::move(labels);
    table.features = Eigen::Map<RowMatrix>(values.data(), static_cast<Eigen::Index>(table.labels.size()),
                                           static_cast<Eigen::Index>(d));
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string(), 0, "cannot open file");
    return read_embeddings(in, path.string());
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "label";
    for (std::size_t j = 0; j < table.dim(); ++j) buf << ",e" << j;
    buf << '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        buf << table.labels[i];
        for (std::size_t j = 0; j < table.dim(); ++j) {
            buf << ',' << table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        buf << '\n';
    }
    out << buf.str();
}

EmbeddingTable synth_embeddings(std::size_t n_classes, std::size_t per_class, std::size_t d,
                                double cluster_std, std::uint64_t seed, const VoltageRange& range) {
    if (n_classes < 1 || per_class < 1 || d < 1) throw InvalidArgument("synth_embeddings: counts must be >= 1");
    if (!(cluster_std >= 0.0)) throw InvalidArgument("synth_embeddings: cluster_std must be >= 0");
    range.validate();
    Rng rng = make_rng(seed);
    std::uniform_real_distribution<double> uniform(range.v_min, range.v_max);
    EmbeddingTable table;
    const auto rows = static_cast<Eigen::Index>(n_classes * per_class);
    table.features.resize(rows, static_cast<Eigen::Index>(d));
    table.labels.reserve(static_cast<std::size_t>(rows));
    Eigen::VectorXd centroid(static_cast<Eigen::Index>(d));
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (auto& v : centroid) v = uniform(rng);
        for (std::size_t s = 0; s < per_class; ++s, ++r) {
            for (Eigen::Index j = 0; j < centroid.size(); ++j) {
                table.features(r, j) = centroid[j] + cluster_std * standard_normal(rng);
            }
            table.labels.push_back(static_cast<int>(c));
        }
    }
    return table;
}

EmbeddingTable rescale_to_range(const EmbeddingTable& table, const VoltageRange& range) {
    range.validate();
    EmbeddingTable out = table;
    if (table.features.size() == 0) return out;
    const double lo = table.features.minCoeff();
    const double hi = table.features.maxCoeff();
    if (hi == lo) {
        out.features.setConstant(0.5 * (range.v_min + range.v_max));
        return out;
    }
    const double scale = range.span() / (hi - lo);
    out.features = ((table.features.array() - lo) * scale + range.v_min).matrix();
    // Rounding can leave the extremes an ulp outside the range.
    out.features = out.features.cwiseMax(range.v_min).cwiseMin(range.v_max);
    return out;
}

void Episode::validate() const {
    if (n_way < 1 || k_shot < 1) throw InvalidArgument("episode needs n_way >= 1 and k_shot >= 1");
    const auto expected = static_cast<std::size_t>(n_way) * static_cast<std::size_t>(k_shot);
    if (static_cast<std::size_t>(support.rows()) != expected || support_labels.size() != expected) {
        throw InvalidArgument("episode support must have n*k = " + std::to_string(expected) + " rows");
    }
    if (query.size() != support.cols()) throw InvalidArgument("episode query dimension differs from support");
    std::map<int, int> counts;
    for (int label : support_labels) ++counts[label];
    if (counts.size() != static_cast<std::size_t>(n_way)) {
        throw InvalidArgument("episode support must contain exactly n_way classes");
    }
    for (const auto& [label, count] : counts) {
        if (count != k_shot) {
            throw InvalidArgument("class " + std::to_string(label) + " appears " + std::to_string(count) +
                                  " times, expected k_shot = " + std::to_string(k_shot));
        }
    }
    if (!counts.contains(query_label)) throw InvalidArgument("query label is not among the support classes");
}

void FewshotConfig::validate() const {
    if (!(window_size >= 0.0)) throw InvalidArgument("window_size must be >= 0");
    if (quant_bits && (*quant_bits < 1 || *quant_bits > 30)) throw InvalidArgument("quant_bits must be in [1, 30]");
    noise.validate();
    embed_range.validate();
}

Episode sample_episode(const EmbeddingTable& table, int n_way, int k_shot, Rng& rng) {
    if (n_way < 1 || k_shot < 1) throw InvalidArgument("n_way and k_shot must be >= 1");
    std::map<int, std::vector<Eigen::Index>> by_class;
    for (std::size_t i = 0; i < table.size(); ++i) by_class[table.labels[i]].push_back(static_cast<Eigen::Index>(i));
    std::vector<int> eligible;
    for (const auto& [label, rows] : by_class) {
        if (rows.size() >= static_cast<std::size_t>(k_shot) + 1) eligible.push_back(label);
    }
    if (eligible.size() < static_cast<std::size_t>(n_way)) {
        throw InvalidArgument("need " + std::to_string(n_way) + " classes with >= " + std::to_string(k_shot + 1) +
                              " samples, table has " + std::to_string(eligible.size()));
    }
    // Partial Fisher-Yates keeps sampling uniform and without replacement.
    auto pick = [&rng](auto& pool, std::size_t count) {
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> dist(i, pool.size() - 1);
            std::swap(pool[i], pool[dist(rng)]);
        }
    };
    pick(eligible, static_cast<std::size_t>(n_way));
    std::uniform_int_distribution<int> which(0, n_way - 1);
    const int query_class_slot = which(rng);

    Episode ep;
    ep.n_way = n_way;
    ep.k_shot = k_shot;
    ep.support.resize(static_cast<Eigen::Index>(n_way) * k_shot, table.features.cols());
    Eigen::Index r = 0;
    for (int c = 0; c < n_way; ++c) {
        std::vector<Eigen::Index> pool = by_class[eligible[static_cast<std::size_t>(c)]];
        pick(pool, static_cast<std::size_t>(k_shot) + 1);
        for (int s = 0; s < k_shot; ++s, ++r) {
            ep.support.row(r) = table.features.row(pool[static_cast<std::size_t>(s)]);
            ep.support_labels.push_back(eligible[static_cast<std::size_t>(c)]);
        }
        if (c == query_class_slot) {
            ep.query = table.features.row(pool[static_cast<std::size_t>(k_shot)]).transpose();
            ep.query_label = eligible[static_cast<std::size_t>(c)];
        }
    }
    return ep;
}

namespace {

// Support rows as stored: per-sample, or one centroid per class in order of
// first appearance.
RowMatrix stored_support(const Episode& ep, SupportMode mode, std::vector<int>& labels) {
    if (mode == SupportMode::PerSample) {
        labels = ep.support_labels;
        return ep.support;
    }
    labels.clear();
    std::map<int, std::size_t> slot;
    for (int label : ep.support_labels) {
        if (slot.emplace(label, labels.size()).second) labels.push_back(label);
    }
    RowMatrix centroids = RowMatrix::Zero(static_cast<Eigen::Index>(labels.size()), ep.support.cols());
    std::vector<int> counts(labels.size(), 0);
    for (std::size_t i = 0; i < ep.support_labels.size(); ++i) {
        const auto s = slot[ep.support_labels[i]];
        centroids.row(static_cast<Eigen::Index>(s)) += ep.support.row(static_cast<Eigen::Index>(i));
        ++counts[s];
    }
    for (std::size_t s = 0; s < labels.size(); ++s) centroids.row(static_cast<Eigen::Index>(s)) /= counts[s];
    return centroids;
}

}  // namespace

AcamArray build_support_array(const Episode& episode, const FewshotConfig& cfg) {
    cfg.validate();
    std::vector<int> labels;
    const RowMatrix rows = stored_support(episode, cfg.mode, labels);
    const auto m = static_cast<std::size_t>(rows.rows());
    const auto d = static_cast<std::size_t>(rows.cols());
    std::vector<MatchWindow> windows;
    windows.reserve(m * d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const double v = cfg.embed_range.clamp(rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            windows.push_back(make_window(v, cfg.window_size, cfg.quant_bits, cfg.embed_range));
        }
    }
    return perturb_windows(AcamArray(m, d, std::move(windows), cfg.embed_range), cfg.noise);
}

std::vector<int> support_row_labels(const Episode& episode, const FewshotConfig& cfg) {
    std::vector<int> labels;
    stored_support(episode, cfg.mode, labels);
    return labels;
}

int classify(const Episode& episode, const FewshotConfig& cfg) {
    const AcamArray array = build_support_array(episode, cfg);
    const std::vector<int> labels = support_row_labels(episode, cfg);
    std::vector<double> query(episode.query.data(), episode.query.data() + episode.query.size());
    const SimilarityResult result = analog_hamming(array, query);
    return labels.at(result.best_row);
}

int classify_cosine(const Episode& episode) {
    std::vector<double> scores(static_cast<std::size_t>(episode.support.rows()));
    const std::span<const double> q(episode.query.data(), static_cast<std::size_t>(episode.query.size()));
    for (Eigen::Index i = 0; i < episode.support.rows(); ++i) {
        scores[static_cast<std::size_t>(i)] = cosine_similarity(row_span(episode.support, i), q);
    }
    return episode.support_labels.at(rank_scores(std::move(scores)).best_row);
}

SweepResult sweep_accuracy(const EmbeddingTable& table, int n_way, int k_shot, const SweepOptions& options) {
    options.base.validate();
    if (options.episodes == 0) throw InvalidArgument("sweep needs at least one episode");
    const EmbeddingTable scaled = rescale_to_range(table, options.base.embed_range);
    {
        // Fail early with a clear message if the table cannot supply an episode.
        Rng probe = make_rng(options.seed);
        (void)sample_episode(scaled, n_way, k_shot, probe);
    }

    const std::size_t n_cells = options.window_sizes.size() * options.noise_stds.size();
    std::vector<std::vector<char>> correct(options.episodes, std::vector<char>(n_cells, 0));
    std::vector<char> cosine_correct(options.episodes, 0);

    detail::parallel_for(options.episodes, options.threads, [&](std::size_t e) {
        Rng rng = make_rng(derive_seed(options.seed, {e}));
        const Episode ep = sample_episode(scaled, n_way, k_shot, rng);
        cosine_correct[e] = classify_cosine(ep) == ep.query_label;
        std::size_t cell = 0;
        for (double w : options.window_sizes) {
            for (double s : options.noise_stds) {
                FewshotConfig cfg = options.base;
                cfg.window_size = w;
                cfg.noise.std = s;
                cfg.noise.seed = derive_seed(options.seed, {e, 1});
                correct[e][cell++] = classify(ep, cfg) == ep.query_label;
            }
        }
    });

    SweepResult out;
    std::size_t cell = 0;
    for (double w : options.window_sizes) {
        for (double s : options.noise_stds) {
            std::size_t hits = 0;
            for (const auto& row : correct) hits += row[cell] ? 1 : 0;
            out.cells.push_back({w, s, static_cast<double>(hits) / static_cast<double>(options.episodes),
                                 options.episodes});
            ++cell;
        }
    }
    const auto cos_hits = std::count(cosine_correct.begin(), cosine_correct.end(), 1);
    out.cosine_accuracy = static_cast<double>(cos_hits) / static_cast<double>(options.episodes);
    return out;
}

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells) {
    std::ostringstream buf;
    buf.precision(17);
    buf << "window_size,noise_std,accuracy,n_episodes\n";
    for (const auto& c : cells) {
        buf << c.window_size << ',' << c.noise_std << ',' << c.accuracy << ',' << c.n_episodes << '\n';
    }
    out << buf.str();
}

}  // namespace acam
