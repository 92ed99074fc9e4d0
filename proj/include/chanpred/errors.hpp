// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace chanpred {

// Error taxonomy shared across the library. Each class maps to one CLI
// exit code (see tools/): config 2, format/io 3, numeric 4, shape 5.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape / dimension / geometry violations.
struct shape_error : error {
    explicit shape_error(const std::string& msg) : error(msg) {}
};

// Bad configuration values, unknown names, missing contract inputs.
struct config_error : error {
    explicit config_error(const std::string& msg) : error(msg) {}
};

// File format violations: bad magic, truncation, version mismatch.
struct format_error : error {
    explicit format_error(const std::string& msg) : error(msg) {}
};

// Unreadable / unwritable paths.
struct io_error : error {
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Non-finite values where finiteness is a contract (diverged training,
// NaN gradients, degenerate inputs).
struct numeric_error : error {
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Object used outside its lifecycle contract (e.g. a spent tape).
struct state_error : error {
    explicit state_error(const std::string& msg) : error(msg) {}
};

}  // namespace chanpred
