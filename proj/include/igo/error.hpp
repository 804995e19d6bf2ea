#pragma once

#include <stdexcept>
#include <string>

namespace igo {

/// Failure categories surfaced by the library. The CLI maps a subset of
/// these onto process exit codes; everything else is reported as a generic
/// failure.
enum class Errc {
    domain,                 // argument outside the mathematical domain of an operation
    validation,             // structural/config invariant violated
    singularity,            // evaluation at a pole (mu at z = 0, singular solve)
    degenerate_points,      // coincident interpolation nodes
    analysis,               // a result contradicts a structural guarantee
    unreachable_corridor,   // requested corridor ratio not achievable on the period range
    no_stabilizing_slopes,  // slope grid contains no Schur-stable point
    unreachable_dose,       // Hammerstein inversion target outside the bracket range
    saturation,             // design point falls on a saturated modulation segment
    simulation_abort,       // simulation stopped mid-run
    schema,                 // scenario file malformed
    internal,               // broken internal invariant (indicates a bug)
};

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace igo
