// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pulseg2 {

/// Invalid configuration or parameter domain violation. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
  public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// An estimator whose value does not exist (e.g. zero singles). Never silently 0:
/// zero is a meaningful coherence value for Fock states.
class undefined_estimate : public std::runtime_error {
  public:
    explicit undefined_estimate(const std::string& what) : std::runtime_error(what) {}
};

/// Too little data for the requested quantity (e.g. fewer pulses than lag+1).
class insufficient_data : public std::runtime_error {
  public:
    explicit insufficient_data(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed time-tag input. Carries the byte offset (binary) or line number (CSV)
/// of the first offending position.
class parse_error : public std::runtime_error {
  public:
    enum class Kind {
        bad_magic,
        unsupported_version,
        truncated_record,
        timestamp_regression,
        channel_overflow,
        bad_field,
    };

    parse_error(Kind kind, std::size_t location, const std::string& what)
        : std::runtime_error(what), kind_(kind), location_(location) {}

    Kind kind() const { return kind_; }
    /// Byte offset for binary inputs, 1-based line number for CSV inputs.
    std::size_t location() const { return location_; }

  private:
    Kind kind_;
    std::size_t location_;
};

}  // namespace pulseg2
