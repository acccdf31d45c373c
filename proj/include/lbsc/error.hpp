#pragma once

#include <stdexcept>
#include <string>

namespace lbsc {

// Single exception type for the library. The kind tags let the C boundary
// map failures onto stable status codes without string matching.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    invalid_argument,  // bad dimensions, non-finite inputs, out-of-range config
    data_quality,      // rejected observation
    fit_failure,       // factorization failed after jitter escalation
    io,                // file missing / unreadable / unwritable
    parse,             // malformed scenario or log file
    simulation_fault,  // non-finite state during integration
  };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace lbsc
