#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acam/array.hpp"
#include "acam/kernel.hpp"
#include "acam/rng.hpp"

namespace acam {

/// Labeled embeddings, one sample per row.
struct EmbeddingTable {
    std::vector<int> labels;
    RowMatrix features;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

inline constexpr std::size_t kDefaultEmbeddingDim = 64;

/// CSV with header `label,e0,...,e{d-1}`. Every row must carry d features.
/// Errors carry the offending line number.
EmbeddingTable read_embeddings(std::istream& in, const std::string& source = {});
EmbeddingTable load_embeddings(const std::filesystem::path& path);
void write_embeddings(std::ostream& out, const EmbeddingTable& table);

/// Class centroids uniform in `range`, samples centroid + N(0, cluster_std).
/// Rows are grouped by class.
EmbeddingTable synth_embeddings(std::size_t n_classes, std::size_t per_class, std::size_t d,
                                double cluster_std, std::uint64_t seed,
                                const VoltageRange& range = {});

/// Affine map of the table's global [min, max] onto `range`.
EmbeddingTable rescale_to_range(const EmbeddingTable& table, const VoltageRange& range);

struct Episode {
    int n_way = 0;
    int k_shot = 0;
    RowMatrix support;
    std::vector<int> support_labels;
    Eigen::VectorXd query;
    int query_label = -1;

    void validate() const;
};

enum class SupportMode { PerSample, Centroid };

struct FewshotConfig {
    double window_size = 0.4;
    std::optional<int> quant_bits = 4;
    NoiseSpec noise{};
    VoltageRange embed_range{};
    SupportMode mode = SupportMode::PerSample;

    void validate() const;
};

/// Picks n_way classes and k_shot + 1 distinct samples from each; the query
/// comes from one of the chosen classes and never appears in the support.
Episode sample_episode(const EmbeddingTable& table, int n_way, int k_shot, Rng& rng);

/// (n·k) x d array (n x d in centroid mode) with each support value at the
/// center of a window of cfg.window_size.
AcamArray build_support_array(const Episode& episode, const FewshotConfig& cfg);

/// Labels of the array rows built by build_support_array.
std::vector<int> support_row_labels(const Episode& episode, const FewshotConfig& cfg);

int classify(const Episode& episode, const FewshotConfig& cfg);

/// Software baseline: argmax cosine similarity on raw embeddings.
int classify_cosine(const Episode& episode);

struct AccuracyCell {
    double window_size = 0.0;
    double noise_std = 0.0;
    double accuracy = 0.0;
    std::size_t n_episodes = 0;
};

struct SweepOptions {
    std::size_t episodes = 100;
    std::vector<double> window_sizes{0.4};
    std::vector<double> noise_stds{0.0};
    std::uint64_t seed = 0;
    FewshotConfig base{};
    unsigned threads = 1;
};

struct SweepResult {
    std::vector<AccuracyCell> cells;
    double cosine_accuracy = 0.0;
};

/// Mean accuracy per (window_size, noise_std). Every cell sees the same
/// episodes; episode e and its window noise are seeded from (seed, e) only.
/// The table is rescaled to base.embed_range once before sampling.
SweepResult sweep_accuracy(const EmbeddingTable& table, int n_way, int k_shot,
                           const SweepOptions& options);

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyCell> cells);

}  // namespace acam
