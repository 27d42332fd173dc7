#pragma once

#include <stdexcept>
#include <string>

namespace refed {

// Invalid user-supplied configuration (bad field values, inconsistent arithmetic).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Replay capacity arithmetic violated (e.g. a new task alone exceeds the memory budget M).
struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite parameter.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, int epoch_)
        : std::runtime_error(what), epoch(epoch_) {}
    int epoch;
};

// Malformed input file (IDX data, config JSON, metrics.jsonl).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace refed
