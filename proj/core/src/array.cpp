#include "acam/array.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include "acam/errors.hpp"
#include "acam/io.hpp"
#include "acam/rng.hpp"

namespace acam {

void NoiseSpec::validate() const {
    if (!(std >= 0.0) || !std::isfinite(std) || !std::isfinite(mean)) {
        throw InvalidArgument("noise std must be finite and >= 0");
    }
}

AcamArray::AcamArray(std::size_t rows, std::size_t cols, std::vector<MatchWindow> windows,
                     VoltageRange range)
    : AcamArray(rows, cols, std::move(windows), std::vector<double>(rows, 1.0), range) {}

AcamArray::AcamArray(std::size_t rows, std::size_t cols, std::vector<MatchWindow> windows,
                     std::vector<double> drain_weights, VoltageRange range)
    : rows_(rows),
      cols_(cols),
      windows_(std::move(windows)),
      drain_weights_(std::move(drain_weights)),
      range_(range) {
    validate();
}

void AcamArray::validate() const {
    range_.validate();
    if (windows_.size() != rows_ * cols_) {
        throw InvalidArgument("array expects " + std::to_string(rows_ * cols_) + " windows, got " +
                              std::to_string(windows_.size()));
    }
    if (drain_weights_.size() != rows_) {
        throw InvalidArgument("array expects " + std::to_string(rows_) + " drain weights, got " +
                              std::to_string(drain_weights_.size()));
    }
    for (std::size_t k = 0; k < windows_.size(); ++k) {
        const MatchWindow& w = windows_[k];
        if (!(w.lower <= w.upper) || !range_.contains(w.lower) || !range_.contains(w.upper)) {
            throw InvalidArgument("window (" + std::to_string(k / cols_) + "," +
                                  std::to_string(k % cols_) + ") = [" + std::to_string(w.lower) +
                                  ", " + std::to_string(w.upper) + "] violates bounds");
        }
    }
    for (double w : drain_weights_) {
        if (!std::isfinite(w)) throw InvalidArgument("drain weights must be finite");
    }
}

AcamArray AcamArray::with_drain_weights(std::vector<double> weights) const {
    return AcamArray(rows_, cols_, windows_, std::move(weights), range_);
}

double quantize_to_levels(double v, int bits, const VoltageRange& range) {
    if (bits < 1 || bits > 30) throw InvalidArgument("quant_bits must be in [1, 30]");
    range.validate();
    const double steps = std::ldexp(1.0, bits) - 1.0;
    const double t = std::clamp((v - range.v_min) / range.span(), 0.0, 1.0);
    const double k = std::floor(t * steps + 0.5);
    return range.v_min + k * (range.span() / steps);
}

MatchWindow make_window(double center, double width, std::optional<int> quant_bits,
                        const VoltageRange& range) {
    range.validate();
    if (!(width >= 0.0)) throw InvalidArgument("window width must be >= 0");
    if (!std::isfinite(center)) throw InvalidArgument("window center must be finite");
    const double c = quant_bits ? quantize_to_levels(center, *quant_bits, range) : range.clamp(center);
    const double half = 0.5 * width;
    return {range.clamp(c - half), range.clamp(c + half)};
}

AcamArray perturb_windows(const AcamArray& array, const NoiseSpec& noise) {
    noise.validate();
    if (noise.std == 0.0 && noise.mean == 0.0) return array;
    Rng rng = make_rng(noise.seed);
    const VoltageRange& range = array.range();
    std::vector<MatchWindow> out(array.windows().begin(), array.windows().end());
    for (MatchWindow& w : out) {
        const double lo = range.clamp(w.lower + noise.mean + noise.std * standard_normal(rng));
        const double hi = range.clamp(w.upper + noise.mean + noise.std * standard_normal(rng));
        w = {std::min(lo, hi), std::max(lo, hi)};
    }
    std::vector<double> weights(array.drain_weights().begin(), array.drain_weights().end());
    return AcamArray(array.rows(), array.cols(), std::move(out), std::move(weights), range);
}

double cell_current(const MatchWindow& window, double v_sl, const DeviceDefaults& device) {
    const auto nmos = FefetParams::from_defaults(Polarity::NMOS, window.upper, device);
    const auto pmos = FefetParams::from_defaults(Polarity::PMOS, window.lower, device);
    return channel_current(nmos, v_sl) + channel_current(pmos, v_sl);
}

RowCurrent row_mismatch_current(const AcamArray& array, std::size_t row,
                                std::span<const double> query, const DeviceDefaults& device) {
    if (row >= array.rows()) {
        throw InvalidArgument("row " + std::to_string(row) + " out of range for " +
                              std::to_string(array.rows()) + " rows");
    }
    if (query.size() != array.cols()) {
        throw InvalidArgument("query has " + std::to_string(query.size()) +
                              " elements, array expects d = " + std::to_string(array.cols()));
    }
    RowCurrent out;
    const auto cells = array.row(row);
    for (std::size_t j = 0; j < cells.size(); ++j) {
        out.current += cell_current(cells[j], query[j], device);
        out.matched = out.matched && cell_match(cells[j], query[j]);
    }
    return out;
}

void write_array_csv(std::ostream& out, const AcamArray& array) {
    std::ostringstream buf;
    buf.precision(17);
    buf << array.rows() << ',' << array.cols() << ',' << array.range().v_min << ','
        << array.range().v_max << '\n';
    for (std::size_t i = 0; i < array.rows(); ++i) {
        const auto cells = array.row(i);
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (j) buf << ',';
            buf << cells[j].lower << ':' << cells[j].upper;
        }
        buf << '\n';
    }
    out << buf.str();
}

AcamArray read_array_csv(std::istream& in, const std::string& source) {
    io::LineReader reader(in, source);
    std::string line;
    if (!reader.next(line)) throw ParseError(source, 0, "empty array file");
    const auto head = io::split(line, ',');
    if (head.size() != 4) throw ParseError(source, reader.line_number(), "header must be m,d,v_min,v_max");
    const long long m = io::parse_int(head[0], source, reader.line_number());
    const long long d = io::parse_int(head[1], source, reader.line_number());
    if (m < 0 || d < 0) throw ParseError(source, reader.line_number(), "negative array shape");
    const VoltageRange range{io::parse_double(head[2], source, reader.line_number()),
                             io::parse_double(head[3], source, reader.line_number())};
    std::vector<MatchWindow> windows;
    windows.reserve(static_cast<std::size_t>(m * d));
    for (long long i = 0; i < m; ++i) {
        if (d == 0) continue;
        if (!reader.next(line)) {
            throw ParseError(source, reader.line_number(),
                             "expected " + std::to_string(m) + " rows, got " + std::to_string(i));
        }
        const auto cells = io::split(line, ',');
        if (static_cast<long long>(cells.size()) != d) {
            throw ParseError(source, reader.line_number(),
                             "row has " + std::to_string(cells.size()) + " cells, expected d = " +
                                 std::to_string(d));
        }
        for (std::string_view cell : cells) {
            const auto colon = cell.find(':');
            if (colon == std::string_view::npos) {
                throw ParseError(source, reader.line_number(), "cell must be 'lower:upper'");
            }
            windows.push_back({io::parse_double(cell.substr(0, colon), source, reader.line_number()),
                               io::parse_double(cell.substr(colon + 1), source, reader.line_number())});
        }
    }
    if (reader.next(line)) throw ParseError(source, reader.line_number(), "trailing rows after m rows");
    try {
        return AcamArray(static_cast<std::size_t>(m), static_cast<std::size_t>(d), std::move(windows), range);
    } catch (const InvalidArgument& e) {
        throw ParseError(source, 0, e.what());
    }
}

}  // namespace acam
