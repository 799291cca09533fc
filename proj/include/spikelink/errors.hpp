#pragma once

#include <stdexcept>
#include <string>

namespace spikelink {

// Invalid shapes, schedules, flags, or parameter files.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unreadable or malformed data files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistencies between federated participants (shape mismatch etc).
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace spikelink
