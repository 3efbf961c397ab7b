#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "acam/array.hpp"
#include "acam/errors.hpp"

namespace acam {

struct SimilarityResult {
    std::vector<double> scores;
    std::size_t best_row = 0;
    /// True when more than one row shares the top score.
    bool tie_policy_applied = false;
};

/// Argmax with lowest-index tie-break. Empty input yields best_row 0.
SimilarityResult rank_scores(std::vector<double> scores);

/// Generalized Hamming similarity: per row, the number of columns whose
/// window contains the query element.
SimilarityResult analog_hamming(const AcamArray& array, std::span<const double> query);

/// Number of positions with equal symbols.
template <typename Symbol>
std::size_t digital_hamming(std::span<const Symbol> stored, std::span<const Symbol> query) {
    if (stored.size() != query.size()) {
        throw InvalidArgument("digital_hamming: length mismatch (" + std::to_string(stored.size()) +
                              " vs " + std::to_string(query.size()) + ")");
    }
    std::size_t same = 0;
    for (std::size_t j = 0; j < stored.size(); ++j) same += stored[j] == query[j] ? 1 : 0;
    return same;
}

double cosine_similarity(std::span<const double> s, std::span<const double> q);

/// `{"scores":[...],"best_row":k}`
std::string to_json(const SimilarityResult& result);

}  // namespace acam
