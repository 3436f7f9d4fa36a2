#pragma once
// Exact, seconds-scale oracle checks bundled for reuse by the CLI selftest,
// the acceptance harness, and the unit tests: code enumerations, engine
// cross-validation on randomized circuits, exhaustive single-fault scans of
// the verification stages and a whole star build, and the byproduct rules.

#include <cstdint>
#include <string>
#include <vector>

#include "starsim/pauli.hpp"

namespace starsim {

struct SelftestCheck {
  std::string name;
  bool ok = false;
  std::string detail;  // human-readable result, filled on pass and fail alike
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;
  bool all_ok = true;
};

SelftestReport run_selftest(uint64_t seed);

// Random Clifford circuit with preps, mid-circuit measurements and a full
// final readout; used by the engine cross-validation.
Circuit random_clifford_circuit(uint32_t n_qubits, uint32_t n_ops, uint64_t seed);

// Random per-event fault pattern (arbitrary Pauli effects on a random subset
// of fallible events) for the same cross-validation.
std::vector<FaultEffect> random_fault_pattern(const Circuit& c, double density, uint64_t seed);

// One cross-validation trial: the Pauli-frame flip pattern of the injected
// faults must equal the outcome difference of two exact tableau runs pinned
// to the same collapse branches. Returns an empty string on agreement and a
// diagnostic on the first mismatch.
std::string cross_validate(const Circuit& c, const std::vector<FaultEffect>& faults);

}  // namespace starsim
