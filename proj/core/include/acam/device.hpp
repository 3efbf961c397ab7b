#pragma once

#include <filesystem>
#include <string_view>

namespace acam {

enum class Polarity { NMOS, PMOS };

/// Closed voltage interval [v_min, v_max] that thresholds and windows live in.
struct VoltageRange {
    double v_min = -0.3;
    double v_max = 2.0;

    double span() const noexcept { return v_max - v_min; }
    bool contains(double v) const noexcept { return v >= v_min && v <= v_max; }
    double clamp(double v) const noexcept;
    void validate() const;

    friend bool operator==(const VoltageRange&, const VoltageRange&) = default;
};

/// Shared device parameters for every FeFET in an array.
struct DeviceDefaults {
    double subthreshold_swing_mv = 60.0;
    double i_on = 1.0;
    double i_floor = 1e-9;
    VoltageRange range{};
    int level_count = 10;

    void validate() const;
};

struct FefetParams {
    Polarity polarity = Polarity::NMOS;
    double v_th = 0.0;
    double subthreshold_swing_mv = 60.0;
    double i_on = 1.0;
    double i_floor = 1e-9;

    static FefetParams from_defaults(Polarity p, double v_th, const DeviceDefaults& dev) {
        return {p, v_th, dev.subthreshold_swing_mv, dev.i_on, dev.i_floor};
    }

    /// Throws InvalidArgument / OutOfRange when an invariant is broken.
    void validate(const VoltageRange& range) const;
};

/// Write pulse used to program one FeFET threshold.
struct PulseProgram {
    static constexpr double kMinAmplitude = 3.0;
    static constexpr double kMaxAmplitude = 4.0;

    double amplitude = 3.0;
    int level_count = 10;

    void validate() const;
};

/// Nearest of `level_count` uniformly spaced levels over `range`; exact
/// midpoints go to the upper level. Idempotent.
double snap_threshold(double v, const VoltageRange& range, int level_count);

/// Affine pulse-amplitude -> threshold map followed by level snapping.
/// Higher amplitude never yields a lower threshold.
double program_threshold(const PulseProgram& pulse, const VoltageRange& range);

/// Clamped single-exponential subthreshold law. NMOS conducts i_on at and
/// above v_th, PMOS at and below; current falls one decade per swing mV into
/// cutoff, never below i_floor.
double channel_current(const FefetParams& params, double v_sl);

/// Parse `key = value` lines. Recognized keys: subthreshold_swing_mv, i_on,
/// i_floor, v_min, v_max, level_count. `#` starts a comment. Unknown keys are
/// rejected.
DeviceDefaults parse_device_config(std::string_view text, const std::string& source = {});
DeviceDefaults load_device_config(const std::filesystem::path& path);

}  // namespace acam
