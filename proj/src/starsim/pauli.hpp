#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace starsim {

// Single-qubit Pauli, encoded as (x bit) | (z bit << 1) so that composition is XOR.
enum class Pauli : uint8_t { I = 0, X = 1, Z = 2, Y = 3 };

inline constexpr uint8_t pauli_x_bit(Pauli p) { return static_cast<uint8_t>(p) & 1u; }
inline constexpr uint8_t pauli_z_bit(Pauli p) { return (static_cast<uint8_t>(p) >> 1) & 1u; }
inline constexpr Pauli make_pauli(uint8_t x_bit, uint8_t z_bit) {
    return static_cast<Pauli>((x_bit & 1u) | ((z_bit & 1u) << 1));
}
inline constexpr Pauli pauli_mul(Pauli a, Pauli b) {
    return static_cast<Pauli>(static_cast<uint8_t>(a) ^ static_cast<uint8_t>(b));
}
inline constexpr bool pauli_commutes(Pauli a, Pauli b) {
    return ((pauli_x_bit(a) & pauli_z_bit(b)) ^ (pauli_z_bit(a) & pauli_x_bit(b))) == 0;
}
const char* pauli_name(Pauli p);

enum class GateKind : uint8_t {
    H,
    S,
    CNOT,
    CZ,
    PREP_Z,
    PREP_X,
    MEAS_Z,
    MEAS_X,
    MEAS_Y,
    WAIT,
};

inline constexpr bool is_two_qubit(GateKind k) { return k == GateKind::CNOT || k == GateKind::CZ; }
inline constexpr bool is_prep(GateKind k) { return k == GateKind::PREP_Z || k == GateKind::PREP_X; }
inline constexpr bool is_meas(GateKind k) {
    return k == GateKind::MEAS_Z || k == GateKind::MEAS_X || k == GateKind::MEAS_Y;
}
const char* gate_name(GateKind k);

inline constexpr uint32_t kNoQubit = 0xFFFFFFFFu;
inline constexpr uint32_t kNoMeas = 0xFFFFFFFFu;

// One scheduled operation. `location_id` indexes the event inside its circuit and seeds the
// counter-based RNG, so a circuit's fault pattern is a pure function of (seed, trial, salt).
struct GateEvent {
    GateKind kind;
    uint32_t q0 = kNoQubit;
    uint32_t q1 = kNoQubit;
    uint32_t time_step = 0;  // ASAP slot: 1 + max over operand wires of their last slot
    uint32_t location_id = 0;
    uint32_t meas_index = kNoMeas;
};

struct Circuit {
    uint32_t n_qubits = 0;
    uint32_t n_input_qubits = 0;  // wires below this index enter already prepared
    uint32_t n_meas = 0;
    std::vector<GateEvent> events;
    std::vector<uint32_t> outputs;  // wires that stay live past the last event

    uint32_t alloc(uint32_t count) {
        uint32_t base = n_qubits;
        n_qubits += count;
        return base;
    }

    uint32_t append(GateKind kind, uint32_t q0, uint32_t q1 = kNoQubit);

    // Structural checks: qubit indices in range, two-qubit gates act on distinct wires,
    // every wire is prepared before first use and never touched after its measurement.
    // Returns an empty string when valid, else a description of the first violation.
    std::string validate() const;

    std::string to_text() const;

  private:
    std::vector<uint32_t> wire_free_step_;  // per-wire next available time slot
};

// Error model attached to a circuit execution. Faults are placed after gates (and preps)
// and before readouts; a two-qubit gate draws one of the 15 nontrivial Pauli pairs.
struct NoiseModel {
    double p = 0.0;         // mean two-qubit gate error rate (reference scale)
    double p_two = 0.0;     // probability of each of the 15 pair faults
    double p_prep = 0.0;    // preparation flip (X after PREP_Z, Z after PREP_X)
    double p_meas = 0.0;    // readout flip probability
    double p_single = 0.0;  // single-qubit gate fault rate, uniform over {X, Y, Z}
    double tau = 1.0;       // storage scale: WAIT faults at total rate tau * p

    static NoiseModel from_mean_rate(double p, double tau = 1.0);

    bool is_zero() const {
        return p_two == 0.0 && p_prep == 0.0 && p_meas == 0.0 && p_single == 0.0 &&
               (p == 0.0 || tau == 0.0);
    }
};

// splitmix64 finalizer; bijective on 64-bit words.
inline constexpr uint64_t mix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Identity of one potential fault site. Distinct keys give independent uniforms, and the
// same key always gives the same draw, independent of worker count or evaluation order.
struct FaultKey {
    uint64_t seed = 0;
    uint64_t trial = 0;
    uint64_t salt = 0;
    uint64_t location = 0;
};

inline constexpr uint64_t fault_bits(const FaultKey& k) {
    return mix64(mix64(mix64(mix64(k.seed) ^ k.trial) ^ k.salt) ^ k.location);
}

inline constexpr double fault_u01(const FaultKey& k) {
    return static_cast<double>(fault_bits(k) >> 11) * 0x1.0p-53;
}

// Pauli applied to the event's wires: after the ideal gate for unitaries and preparations,
// before the readout for measurements.
struct FaultEffect {
    Pauli p0 = Pauli::I;
    Pauli p1 = Pauli::I;
    bool any() const { return p0 != Pauli::I || p1 != Pauli::I; }
    bool operator==(const FaultEffect&) const = default;
};

inline FaultEffect sample_fault(const GateEvent& ev, const NoiseModel& nm, const FaultKey& key) {
    FaultEffect eff;
    switch (ev.kind) {
        case GateKind::CNOT:
        case GateKind::CZ: {
            if (nm.p_two <= 0.0) break;
            double u = fault_u01(key);
            if (u < 15.0 * nm.p_two) {
                auto pair = static_cast<uint8_t>(u / nm.p_two) + 1;  // 1..15, never II
                if (pair > 15) pair = 15;  // guard the rounding edge of the division
                eff.p0 = static_cast<Pauli>(pair >> 2);
                eff.p1 = static_cast<Pauli>(pair & 3);
            }
            break;
        }
        case GateKind::H:
        case GateKind::S: {
            if (nm.p_single <= 0.0) break;
            double u = fault_u01(key);
            if (u < nm.p_single) {
                auto letter = static_cast<uint8_t>(3.0 * u / nm.p_single) + 1;
                eff.p0 = static_cast<Pauli>(letter > 3 ? 3 : letter);
            }
            break;
        }
        case GateKind::PREP_Z:
            if (nm.p_prep > 0.0 && fault_u01(key) < nm.p_prep) eff.p0 = Pauli::X;
            break;
        case GateKind::PREP_X:
            if (nm.p_prep > 0.0 && fault_u01(key) < nm.p_prep) eff.p0 = Pauli::Z;
            break;
        case GateKind::MEAS_Z:
        case GateKind::MEAS_Y:
            // A pre-readout X flips both a Z and a Y readout.
            if (nm.p_meas > 0.0 && fault_u01(key) < nm.p_meas) eff.p0 = Pauli::X;
            break;
        case GateKind::MEAS_X:
            if (nm.p_meas > 0.0 && fault_u01(key) < nm.p_meas) eff.p0 = Pauli::Z;
            break;
        case GateKind::WAIT: {
            double rate = nm.tau * nm.p;
            if (rate <= 0.0) break;
            double u = fault_u01(key);
            if (u < rate) {
                auto letter = static_cast<uint8_t>(3.0 * u / rate) + 1;
                eff.p0 = static_cast<Pauli>(letter > 3 ? 3 : letter);
            }
            break;
        }
    }
    return eff;
}

// Frame-propagation rules (signs dropped): the image of a Pauli under conjugation by the gate.
Pauli conjugate1(GateKind k, Pauli p);
std::pair<Pauli, Pauli> conjugate2(GateKind k, Pauli p0, Pauli p1);

// Sign-free n-qubit Pauli word, packed 64 qubits per word.
struct PauliString {
    uint32_t n = 0;
    std::vector<uint64_t> x;
    std::vector<uint64_t> z;

    PauliString() = default;
    explicit PauliString(uint32_t n_qubits)
        : n(n_qubits), x((n_qubits + 63) / 64, 0), z((n_qubits + 63) / 64, 0) {}

    Pauli get(uint32_t q) const {
        return make_pauli((x[q / 64] >> (q % 64)) & 1u, (z[q / 64] >> (q % 64)) & 1u);
    }
    void set(uint32_t q, Pauli p) {
        uint64_t bit = 1ull << (q % 64);
        x[q / 64] = (x[q / 64] & ~bit) | (pauli_x_bit(p) ? bit : 0);
        z[q / 64] = (z[q / 64] & ~bit) | (pauli_z_bit(p) ? bit : 0);
    }

    void compose(const PauliString& other);
    bool commutes(const PauliString& other) const;
    uint32_t weight() const;
    bool identity() const;
    std::string to_string() const;
};

}  // namespace starsim
