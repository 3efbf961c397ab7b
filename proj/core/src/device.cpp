#include "acam/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acam/errors.hpp"
#include "acam/io.hpp"
#include "device_keys.hpp"

namespace acam {

double VoltageRange::clamp(double v) const noexcept { return std::clamp(v, v_min, v_max); }

void VoltageRange::validate() const {
    if (!std::isfinite(v_min) || !std::isfinite(v_max) || !(v_min < v_max)) {
        throw InvalidArgument("voltage range must satisfy v_min < v_max, got [" +
                              std::to_string(v_min) + ", " + std::to_string(v_max) + "]");
    }
}

void DeviceDefaults::validate() const {
    range.validate();
    if (!(subthreshold_swing_mv > 0.0)) throw InvalidArgument("subthreshold_swing_mv must be > 0");
    if (!(i_floor > 0.0) || !(i_on > 0.0) || !(i_floor < i_on)) {
        throw InvalidArgument("currents must satisfy 0 < i_floor < i_on");
    }
    if (level_count < 2) throw InvalidArgument("level_count must be >= 2");
}

void FefetParams::validate(const VoltageRange& range) const {
    if (!(subthreshold_swing_mv > 0.0)) throw InvalidArgument("subthreshold_swing_mv must be > 0");
    if (!(i_floor > 0.0) || !(i_on > 0.0) || !(i_floor < i_on)) {
        throw InvalidArgument("currents must satisfy 0 < i_floor < i_on");
    }
    if (!range.contains(v_th)) {
        throw OutOfRange("v_th " + std::to_string(v_th) + " V outside programmable range");
    }
}

void PulseProgram::validate() const {
    if (!(amplitude >= kMinAmplitude && amplitude <= kMaxAmplitude)) {
        throw OutOfRange("pulse amplitude " + std::to_string(amplitude) +
                         " V outside [3.0, 4.0] V");
    }
    if (level_count < 2) throw InvalidArgument("level_count must be >= 2");
}

namespace {

// Level index for a normalized position t in [0, 1]; midpoints round up.
double snap_unit(double t, int level_count) {
    const double steps = static_cast<double>(level_count - 1);
    const double k = std::floor(std::clamp(t, 0.0, 1.0) * steps + 0.5);
    return k / steps;
}

}  // namespace

double snap_threshold(double v, const VoltageRange& range, int level_count) {
    range.validate();
    if (level_count < 2) throw InvalidArgument("level_count must be >= 2");
    const double t = (v - range.v_min) / range.span();
    const double k = snap_unit(t, level_count) * static_cast<double>(level_count - 1);
    // Reconstruct from the integer index so re-snapping is exact.
    return range.v_min + k * (range.span() / static_cast<double>(level_count - 1));
}

double program_threshold(const PulseProgram& pulse, const VoltageRange& range) {
    pulse.validate();
    range.validate();
    const double t = (pulse.amplitude - PulseProgram::kMinAmplitude) /
                     (PulseProgram::kMaxAmplitude - PulseProgram::kMinAmplitude);
    const double steps = static_cast<double>(pulse.level_count - 1);
    const double k = snap_unit(t, pulse.level_count) * steps;
    return range.v_min + k * (range.span() / steps);
}

double channel_current(const FefetParams& p, double v_sl) {
    // Overdrive into conduction; negative means cutoff.
    const double overdrive = p.polarity == Polarity::NMOS ? v_sl - p.v_th : p.v_th - v_sl;
    if (overdrive >= 0.0) return p.i_on;
    const double decades = overdrive * 1000.0 / p.subthreshold_swing_mv;
    return std::max(p.i_floor, p.i_on * std::pow(10.0, decades));
}

namespace detail {

bool apply_device_key(DeviceDefaults& dev, std::string_view key, const io::KeyValue& entry,
                      const std::string& source) {
    if (key == "subthreshold_swing_mv") {
        dev.subthreshold_swing_mv = io::parse_double(entry.value, source, entry.line);
    } else if (key == "i_on") {
        dev.i_on = io::parse_double(entry.value, source, entry.line);
    } else if (key == "i_floor") {
        dev.i_floor = io::parse_double(entry.value, source, entry.line);
    } else if (key == "v_min") {
        dev.range.v_min = io::parse_double(entry.value, source, entry.line);
    } else if (key == "v_max") {
        dev.range.v_max = io::parse_double(entry.value, source, entry.line);
    } else if (key == "level_count") {
        dev.level_count = static_cast<int>(io::parse_int(entry.value, source, entry.line));
    } else {
        return false;
    }
    return true;
}

}  // namespace detail

DeviceDefaults parse_device_config(std::string_view text, const std::string& source) {
    const io::KeyValueMap kv = io::parse_key_values(text, source);
    DeviceDefaults dev;
    for (const auto& [key, entry] : kv) {
        if (!detail::apply_device_key(dev, key, entry, source)) {
            throw ParseError(source, entry.line, "unknown device key '" + key + "'");
        }
    }
    try {
        dev.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(source, 0, e.what());
    }
    return dev;
}

DeviceDefaults load_device_config(const std::filesystem::path& path) {
    return parse_device_config(io::read_file(path), path.string());
}

}  // namespace acam
