#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acam/device.hpp"

namespace acam {

/// Closed interval [lower, upper]. `lower` is the PMOS threshold, `upper`
/// the NMOS threshold of the complementary cell.
struct MatchWindow {
    double lower = 0.0;
    double upper = 0.0;

    double center() const noexcept { return 0.5 * (lower + upper); }
    double width() const noexcept { return upper - lower; }

    friend bool operator==(const MatchWindow&, const MatchWindow&) = default;
};

/// Additive Gaussian perturbation applied to window bounds.
struct NoiseSpec {
    double mean = 0.0;
    double std = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// m x d grid of match windows plus one drain weight per row.
class AcamArray {
public:
    AcamArray() = default;
    AcamArray(std::size_t rows, std::size_t cols, std::vector<MatchWindow> windows,
              VoltageRange range = {});
    AcamArray(std::size_t rows, std::size_t cols, std::vector<MatchWindow> windows,
              std::vector<double> drain_weights, VoltageRange range = {});

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    const VoltageRange& range() const noexcept { return range_; }

    const MatchWindow& window(std::size_t row, std::size_t col) const {
        return windows_[row * cols_ + col];
    }
    std::span<const MatchWindow> row(std::size_t r) const {
        return {windows_.data() + r * cols_, cols_};
    }
    std::span<const MatchWindow> windows() const noexcept { return windows_; }
    std::span<const double> drain_weights() const noexcept { return drain_weights_; }

    AcamArray with_drain_weights(std::vector<double> weights) const;

    friend bool operator==(const AcamArray&, const AcamArray&) = default;

private:
    void validate() const;

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<MatchWindow> windows_;
    std::vector<double> drain_weights_;
    VoltageRange range_{};
};

/// Center of quantization level nearest to v, with 2^bits uniform levels
/// spanning the range (both endpoints are levels).
double quantize_to_levels(double v, int bits, const VoltageRange& range);

/// [center - width/2, center + width/2] with the center optionally snapped
/// to 2^quant_bits levels first. Width is kept exact; bounds are clamped.
MatchWindow make_window(double center, double width, std::optional<int> quant_bits = std::nullopt,
                        const VoltageRange& range = {});

/// Independent Gaussian draw on each bound, re-clamped and re-ordered.
/// Deterministic in noise.seed; σ = 0 returns the input unchanged.
AcamArray perturb_windows(const AcamArray& array, const NoiseSpec& noise);

inline bool cell_match(const MatchWindow& w, double v_sl) noexcept {
    return w.lower <= v_sl && v_sl <= w.upper;
}

/// NMOS (v_th = upper) plus PMOS (v_th = lower) channel current.
double cell_current(const MatchWindow& window, double v_sl, const DeviceDefaults& device = {});

struct RowCurrent {
    double current = 0.0;
    bool matched = true;
};

RowCurrent row_mismatch_current(const AcamArray& array, std::size_t row,
                                std::span<const double> query, const DeviceDefaults& device = {});

/// First line: `m,d,v_min,v_max` values. Then one line per row of
/// comma-separated `lower:upper` cells.
void write_array_csv(std::ostream& out, const AcamArray& array);
AcamArray read_array_csv(std::istream& in, const std::string& source = {});

}  // namespace acam
