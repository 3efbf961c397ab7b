#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "acam/errors.hpp"
#include "acam/fewshot.hpp"

using namespace acam;

TEST(Embeddings, HeaderOnlyIsEmpty) {
    std::istringstream in("label,e0,e1\n");
    const auto t = read_embeddings(in, "x.csv");
    EXPECT_EQ(t.size(), 0u);
    EXPECT_EQ(t.dim(), 2u);
}

TEST(Embeddings, OneRow) {
    std::istringstream in("label,e0,e1\n3,0.5,-1.25\n");
    const auto t = read_embeddings(in);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.labels[0], 3);
    EXPECT_EQ(t.features(0, 1), -1.25);
}

TEST(Embeddings, WrongArityNamesLine) {
    std::ostringstream text;
    text << "label";
    for (int j = 0; j < 64; ++j) text << ",e" << j;
    text << "\n0";
    for (int j = 0; j < 64; ++j) text << ",0.1";
    text << "\n1";
    for (int j = 0; j < 63; ++j) text << ",0.1";
    text << "\n";
    std::istringstream in(text.str());
    try {
        read_embeddings(in, "emb.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("emb.csv:3:"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_embeddings("/nonexistent/emb.csv"), ParseError);
}

TEST(Embeddings, WriteReadRoundTrip) {
    const auto t = synth_embeddings(3, 4, 5, 0.1, 1);
    std::stringstream ss;
    write_embeddings(ss, t);
    const auto back = read_embeddings(ss);
    EXPECT_EQ(back.labels, t.labels);
    EXPECT_EQ(back.features, t.features);
}

TEST(Synth, ZeroStdGivesIdenticalClassMembers) {
    const auto t = synth_embeddings(4, 6, 8, 0.0, 2);
    for (std::size_t i = 0; i < t.size(); ++i) {
        const std::size_t first = i - i % 6;
        EXPECT_EQ(t.features.row(static_cast<Eigen::Index>(i)), t.features.row(static_cast<Eigen::Index>(first)));
    }
}

TEST(Synth, DeterministicPerSeed) {
    EXPECT_EQ(synth_embeddings(3, 3, 4, 0.2, 5).features, synth_embeddings(3, 3, 4, 0.2, 5).features);
    EXPECT_NE(synth_embeddings(3, 3, 4, 0.2, 5).features, synth_embeddings(3, 3, 4, 0.2, 6).features);
}

TEST(Synth, WithinClassStdMatches) {
    const auto t = synth_embeddings(10, 1000, 1, 0.15, 9);
    double ss = 0.0;
    for (std::size_t c = 0; c < 10; ++c) {
        const auto block = t.features.block(static_cast<Eigen::Index>(c * 1000), 0, 1000, 1);
        const double mean = block.mean();
        ss += (block.array() - mean).square().sum();
    }
    EXPECT_NEAR(std::sqrt(ss / (10000 - 10)), 0.15, 0.015);
}

TEST(Rescale, MapsGlobalExtremesToRange) {
    const auto t = rescale_to_range(synth_embeddings(3, 5, 4, 0.5, 1, {-10, 10}), {-0.3, 2.0});
    EXPECT_DOUBLE_EQ(t.features.minCoeff(), -0.3);
    EXPECT_DOUBLE_EQ(t.features.maxCoeff(), 2.0);
}

TEST(Episode, SamplingHasNoOverlapAndRightCounts) {
    auto t = synth_embeddings(8, 7, 4, 0.1, 3);
    for (std::size_t i = 0; i < t.size(); ++i) t.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    Rng rng = make_rng(1);
    for (int e = 0; e < 200; ++e) {
        const Episode ep = sample_episode(t, 5, 3, rng);
        EXPECT_NO_THROW(ep.validate());
        std::set<double> ids;
        for (Eigen::Index r = 0; r < ep.support.rows(); ++r) ids.insert(ep.support(r, 0));
        EXPECT_EQ(ids.size(), 15u);
        EXPECT_EQ(ids.count(ep.query[0]), 0u);
        EXPECT_EQ(t.labels[static_cast<std::size_t>(ep.query[0])], ep.query_label);
    }
}

TEST(Episode, InsufficientDataThrows) {
    const auto t = synth_embeddings(4, 3, 2, 0.1, 1);
    Rng rng = make_rng(0);
    EXPECT_THROW(sample_episode(t, 5, 1, rng), InvalidArgument);
    EXPECT_THROW(sample_episode(t, 2, 3, rng), InvalidArgument);
}

namespace {

Episode tiny_episode() {
    Episode ep;
    ep.n_way = 2;
    ep.k_shot = 2;
    ep.support.resize(4, 2);
    ep.support << 0.5, 1.0, 0.6, 1.1, 1.5, 0.2, 1.6, 0.3;
    ep.support_labels = {7, 7, 9, 9};
    ep.query = Eigen::Vector2d(1.6, 0.3);
    ep.query_label = 9;
    return ep;
}

}  // namespace

TEST(SupportArray, WindowsCenteredOnSupportValues) {
    FewshotConfig cfg;
    cfg.quant_bits.reset();
    const AcamArray a = build_support_array(tiny_episode(), cfg);
    EXPECT_EQ(a.rows(), 4u);
    EXPECT_NEAR(a.window(0, 0).lower, 0.3, 1e-12);
    EXPECT_NEAR(a.window(0, 0).upper, 0.7, 1e-12);
}

TEST(SupportArray, ClampsAtTopOfRange) {
    Episode ep = tiny_episode();
    ep.support(2, 0) = 2.0;
    FewshotConfig cfg;
    cfg.quant_bits.reset();
    const AcamArray a = build_support_array(ep, cfg);
    EXPECT_EQ(a.window(2, 0).upper, 2.0);
    EXPECT_NEAR(a.window(2, 0).lower, 1.8, 1e-12);
}

TEST(SupportArray, FiveWayFiveShotShape) {
    const auto t = synth_embeddings(6, 8, kDefaultEmbeddingDim, 0.1, 1);
    Rng rng = make_rng(2);
    const Episode ep = sample_episode(t, 5, 5, rng);
    const AcamArray a = build_support_array(ep, {});
    EXPECT_EQ(a.rows(), 25u);
    EXPECT_EQ(a.cols(), 64u);
    FewshotConfig centroid;
    centroid.mode = SupportMode::Centroid;
    EXPECT_EQ(build_support_array(ep, centroid).rows(), 5u);
    EXPECT_EQ(support_row_labels(ep, centroid).size(), 5u);
}

TEST(Classify, SelfMatchWinsAndZeroWidthTiesToRowZero) {
    const Episode ep = tiny_episode();
    EXPECT_EQ(classify(ep, {}), 9);
    FewshotConfig point;
    point.window_size = 0.0;
    point.quant_bits.reset();
    Episode off = ep;
    off.query = Eigen::Vector2d(1.234567, 0.7654321);
    EXPECT_EQ(classify(off, point), 7);
    EXPECT_EQ(classify_cosine(ep), 9);
}

TEST(Classify, PermutingSupportKeepsPrediction) {
    const Episode ep = tiny_episode();
    Episode flipped = ep;
    flipped.support.row(0) = ep.support.row(3);
    flipped.support.row(3) = ep.support.row(0);
    std::swap(flipped.support_labels[0], flipped.support_labels[3]);
    EXPECT_EQ(classify(ep, {}), classify(flipped, {}));
}

TEST(Classify, SeparatedOneShotIsPerfect) {
    const auto t = synth_embeddings(10, 5, 64, 0.01, 4);
    SweepOptions o;
    o.episodes = 100;
    o.seed = 3;
    const auto r = sweep_accuracy(t, 5, 1, o);
    EXPECT_EQ(r.cells.at(0).accuracy, 1.0);
    EXPECT_EQ(r.cells.at(0).n_episodes, 100u);
}

TEST(Sweep, ZeroNoiseColumnEqualsNoiselessSweep) {
    const auto t = synth_embeddings(10, 10, 16, 0.4, 4);
    SweepOptions a;
    a.episodes = 60;
    a.seed = 8;
    a.window_sizes = {0.2, 0.4};
    SweepOptions b = a;
    b.noise_stds = {0.0, 0.1};
    b.threads = 3;
    const auto ra = sweep_accuracy(t, 5, 2, a);
    const auto rb = sweep_accuracy(t, 5, 2, b);
    EXPECT_EQ(rb.cells[0].accuracy, ra.cells[0].accuracy);
    EXPECT_EQ(rb.cells[2].accuracy, ra.cells[1].accuracy);
    EXPECT_EQ(rb.cosine_accuracy, ra.cosine_accuracy);
}

TEST(Sweep, NoisyQuantizedDoesNotBeatCleanAnalog) {
    const auto t = synth_embeddings(20, 10, 16, 0.6, 5);
    SweepOptions clean;
    clean.episodes = 500;
    clean.seed = 2;
    clean.base.quant_bits.reset();
    SweepOptions noisy = clean;
    noisy.base.quant_bits = 4;
    noisy.noise_stds = {0.1};
    const double p_clean = sweep_accuracy(t, 5, 5, clean).cells[0].accuracy;
    const double p_noisy = sweep_accuracy(t, 5, 5, noisy).cells[0].accuracy;
    // One-sided 95% bound on the difference of two proportions.
    const double se = std::sqrt((p_clean * (1 - p_clean) + p_noisy * (1 - p_noisy)) / 500.0);
    EXPECT_GE(p_clean - p_noisy, -1.645 * se);
}

TEST(Sweep, CsvColumns) {
    std::ostringstream out;
    const std::vector<AccuracyCell> cells{{0.4, 0.0, 0.96, 100}};
    write_accuracy_csv(out, cells);
    EXPECT_EQ(out.str(), "window_size,noise_std,accuracy,n_episodes\n0.40000000000000002,0,0.95999999999999996,100\n");
}
