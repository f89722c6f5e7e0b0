#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hesslab {

using Vec = std::vector<double>;

// Failure taxonomy. Every throwing path in the library uses Error with a kind,
// so callers (CLI, tests) can distinguish configuration mistakes from numeric
// breakdowns without parsing messages.
enum class ErrorKind {
    config,         // invalid construction parameters
    capacity,       // requested object too large
    sampling,       // non-finite or out-of-domain sample
    margin,         // stencil leaves the grid
    order,          // unsupported derivative order
    domain,         // value outside the mathematical domain of an operation
    region,         // empty or non-contained region
    kernel,         // mollifier resolution too coarse
    symmetry,       // matrix not symmetric within tolerance
    numeric,        // iteration failed to reach tolerance / internal identity broke
    index,          // out-of-range index
    parameter,      // invalid scalar parameter
    convexity,      // negative spectrum where nonnegative required
    degenerate_gap, // ambiguous eigenvalue block split
    singular_gap,   // division by a vanishing spectral gap
    alignment,      // midpoint not on the lattice
    declaration,    // declared property violated on samples
    definiteness,   // matrix not positive definite where required
    ellipticity,    // coefficient matrix not positive at a point
    convergence,    // solver exceeded its iteration budget
    sample_quality, // too many excluded/retried samples to trust the result
    inconsistency,  // contradictory verdict that must abort
    subsolution,    // inequality precheck failed
    io,             // file read/write failure
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool ok, ErrorKind kind, const std::string& msg) {
    if (!ok) fail(kind, msg);
}

} // namespace hesslab
