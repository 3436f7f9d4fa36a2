#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pauli.hpp"

namespace starsim {

// Stabilizer state on n qubits in the destabilizer/stabilizer tableau representation.
// Rows 0..n-1 are destabilizers, rows n..2n-1 stabilizers; signs are tracked exactly,
// so it serves as the ground-truth oracle for the Pauli-frame engine.
class Tableau {
  public:
    explicit Tableau(uint32_t n_qubits);

    uint32_t n() const { return n_; }

    void apply_h(uint32_t q);
    void apply_s(uint32_t q);
    void apply_cnot(uint32_t c, uint32_t t);
    void apply_cz(uint32_t a, uint32_t b);
    void apply_pauli(uint32_t q, Pauli p);

    struct MeasResult {
        uint8_t outcome;     // 0 = +1 eigenvalue, 1 = -1 eigenvalue
        bool deterministic;  // outcome fixed by the state (forced value ignored)
    };

    // Measures Z on q. When the outcome is random, collapses onto the branch labelled
    // `forced` (any branch is a valid collapse, so callers pin the gauge explicitly).
    MeasResult measure_z(uint32_t q, uint8_t forced);
    MeasResult measure_x(uint32_t q, uint8_t forced);
    MeasResult measure_y(uint32_t q, uint8_t forced);

    // If P (with +1 sign) or -P is in the stabilizer group, returns its sign
    // (+1 or -1); otherwise nullopt. P must have the tableau's qubit count.
    std::optional<int> deterministic_sign(const PauliString& p) const;

    // Stabilizer generators in a canonical reduced form, as (word, sign) pairs sorted
    // by word; two tableaus describe the same state iff these lists are equal.
    struct SignedPauli {
        PauliString word;
        int sign;  // +1 or -1
    };
    std::vector<SignedPauli> canonical_stabilizers() const;

  private:
    uint32_t n_;
    uint32_t words_;
    std::vector<uint64_t> xs_;    // (2n+1) rows; last row is rowsum scratch
    std::vector<uint64_t> zs_;
    std::vector<uint8_t> signs_;

    uint64_t* xrow(uint32_t r) { return &xs_[static_cast<size_t>(r) * words_]; }
    uint64_t* zrow(uint32_t r) { return &zs_[static_cast<size_t>(r) * words_]; }
    const uint64_t* xrow(uint32_t r) const { return &xs_[static_cast<size_t>(r) * words_]; }
    const uint64_t* zrow(uint32_t r) const { return &zs_[static_cast<size_t>(r) * words_]; }

    bool xbit(uint32_t r, uint32_t q) const { return (xrow(r)[q / 64] >> (q % 64)) & 1u; }
    bool zbit(uint32_t r, uint32_t q) const { return (zrow(r)[q / 64] >> (q % 64)) & 1u; }

    // row h <- row i * row h, with exact phase bookkeeping.
    void rowsum(uint32_t h, uint32_t i);
};

// Outcome of executing a circuit on the tableau oracle.
struct TableauRun {
    std::vector<Tableau::MeasResult> meas;  // indexed by measurement ordinal
};

// Executes `c` from scratch. `faults`, when given, supplies one effect per event
// (unitary/prep faults applied after the event, measurement faults before readout).
// `forced`, when given, pins the collapse branch of each random measurement; absent
// entries (or a null pointer) collapse onto branch 0. `final_state`, when non-null,
// receives the post-circuit tableau.
TableauRun run_tableau(const Circuit& c,
                       const std::vector<FaultEffect>* faults = nullptr,
                       const std::vector<uint8_t>* forced = nullptr,
                       Tableau* final_state = nullptr);

}  // namespace starsim
