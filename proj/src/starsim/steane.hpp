#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "pauli.hpp"

namespace starsim {

// [[7,1,3]] CSS code built from the Hamming [7,4,3] code. Wire i sits in check row k
// iff bit k of (i+1) is set, so a weight-1 error on wire w yields syndrome w+1.
inline constexpr std::array<uint8_t, 3> kCheckRows = {0x55, 0x66, 0x78};
inline constexpr uint8_t kLogicalMask = 0x07;  // X_L and Z_L act on wires {0,1,2}
inline constexpr uint8_t kAllWires = 0x7F;

inline constexpr uint8_t parity7(uint8_t word) {
    word ^= word >> 4;
    word ^= word >> 2;
    word ^= word >> 1;
    return word & 1;
}

inline constexpr uint8_t steane_syndrome(uint8_t word) {
    return static_cast<uint8_t>(parity7(word & kCheckRows[0]) |
                                (parity7(word & kCheckRows[1]) << 1) |
                                (parity7(word & kCheckRows[2]) << 2));
}

inline constexpr uint8_t steane_correction(uint8_t syndrome) {
    return syndrome == 0 ? 0 : static_cast<uint8_t>(1u << (syndrome - 1));
}

struct DecodeResult {
    uint8_t syndrome;   // 0..7; nonzero points at the wire it blames
    uint8_t corrected;  // word with the blamed wire flipped back
    uint8_t logical;    // logical readout of the corrected word
};

inline constexpr DecodeResult steane_decode(uint8_t word) {
    uint8_t s = steane_syndrome(word);
    uint8_t corrected = word ^ steane_correction(s);
    return {s, corrected, parity7(corrected & kLogicalMask)};
}

// Member of the even subcode (the X and Z stabilizer words; 8 of them).
bool steane_is_stabilizer_word(uint8_t word);
// Syndrome-0 word: stabilizer word or logical representative (16 of them).
inline constexpr bool steane_in_code(uint8_t word) { return steane_syndrome(word) == 0; }

// Logical action of a residual error X(xmask) Z(zmask) on a block that is later decoded
// ideally: each mask reduces, modulo stabilizers and correction, to a logical power.
inline constexpr Pauli residual_logical_class(uint8_t xmask, uint8_t zmask) {
    return make_pauli(steane_decode(xmask).logical, steane_decode(zmask).logical);
}

enum class LogicalBasis : uint8_t { Zero, Plus };

// The 8 stabilizer words (even subcode) and the 16 syndrome-0 words (full Hamming code).
const std::array<uint8_t, 8>& stabilizer_words();
const std::array<uint8_t, 16>& code_words();

// Minimum-weight coset representative of `mask` modulo the even subcode (ties broken
// toward the numerically smallest mask). Words differing by a stabilizer act identically
// on every codespace state, so residual-error tallies use this canonical form.
uint8_t reduce_mod_stabilizers(uint8_t mask);
// Same, modulo the full Hamming code — for the sector in which the block's own logical
// operator is also trivial (X for |+_L>, Z for |0_L>).
uint8_t reduce_mod_code(uint8_t mask);

// Canonicalizes the residual frame of a freshly verified, unentangled block: both sectors
// reduce modulo stabilizers, and the sector fixed by the block's eigenbasis also reduces
// modulo its (trivially acting) logical operator.
void reduce_block_gauge(uint8_t& xmask, uint8_t& zmask, LogicalBasis basis);

// Appends the 7-wire encoder: preparations plus nine CNOTs, no Hadamards needed.
void append_encoder(Circuit& c, const std::array<uint32_t, 7>& wires, LogicalBasis basis);
Circuit encoding_circuit(LogicalBasis basis);

void append_transversal_cnot(Circuit& c, const std::array<uint32_t, 7>& control,
                             const std::array<uint32_t, 7>& target);
void append_transversal_cz(Circuit& c, const std::array<uint32_t, 7>& a,
                           const std::array<uint32_t, 7>& b);
// Returns the seven measurement ordinals, wire order.
std::array<uint32_t, 7> append_transversal_meas(Circuit& c, const std::array<uint32_t, 7>& wires,
                                                GateKind meas_kind);

struct CodeSpec {
    uint32_t n;
    uint32_t k;
    uint32_t d;
    std::array<uint8_t, 3> x_checks;
    std::array<uint8_t, 3> z_checks;
    uint8_t logical_x;
    uint8_t logical_z;
};

CodeSpec code_spec();
std::string code_spec_json();

}  // namespace starsim
