#include "acam/search.hpp"

#include <cmath>

#include "json.hpp"

namespace acam {

SimilarityResult rank_scores(std::vector<double> scores) {
    SimilarityResult out;
    out.scores = std::move(scores);
    std::size_t ties = 0;
    for (std::size_t i = 0; i < out.scores.size(); ++i) {
        if (i == 0 || out.scores[i] > out.scores[out.best_row]) {
            out.best_row = i;
            ties = 1;
        } else if (out.scores[i] == out.scores[out.best_row]) {
            ++ties;
        }
    }
    out.tie_policy_applied = ties > 1;
    return out;
}

SimilarityResult analog_hamming(const AcamArray& array, std::span<const double> query) {
    if (query.size() != array.cols()) {
        throw InvalidArgument("query has " + std::to_string(query.size()) +
                              " elements, array expects d = " + std::to_string(array.cols()));
    }
    std::vector<double> scores(array.rows(), 0.0);
    for (std::size_t i = 0; i < array.rows(); ++i) {
        const auto cells = array.row(i);
        std::size_t hits = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) hits += cell_match(cells[j], query[j]) ? 1 : 0;
        scores[i] = static_cast<double>(hits);
    }
    return rank_scores(std::move(scores));
}

double cosine_similarity(std::span<const double> s, std::span<const double> q) {
    if (s.size() != q.size()) {
        throw InvalidArgument("cosine_similarity: length mismatch (" + std::to_string(s.size()) +
                              " vs " + std::to_string(q.size()) + ")");
    }
    double dot = 0.0, ss = 0.0, qq = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
        dot += s[j] * q[j];
        ss += s[j] * s[j];
        qq += q[j] * q[j];
    }
    if (ss == 0.0 || qq == 0.0) throw DegenerateInput("cosine_similarity: zero-norm vector");
    return std::clamp(dot / (std::sqrt(ss) * std::sqrt(qq)), -1.0, 1.0);
}

std::string to_json(const SimilarityResult& result) {
    nlohmann::ordered_json j;
    j["scores"] = result.scores;
    j["best_row"] = result.best_row;
    return j.dump();
}

}  // namespace acam
