#pragma once

#include <string>
#include <string_view>

#include "acam/device.hpp"
#include "acam/io.hpp"

namespace acam::detail {

/// Applies one device key; false when the key is not a device key.
bool apply_device_key(DeviceDefaults& dev, std::string_view key, const io::KeyValue& entry,
                      const std::string& source);

}  // namespace acam::detail
