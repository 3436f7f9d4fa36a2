#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pauli.hpp"

namespace starsim {

// Parity of a set of measurement outcomes that is even in every noiseless run;
// odd parity flags the trial for rejection.
struct CheckpointDef {
    std::string label;
    std::vector<uint32_t> meas;  // measurement ordinals
};

struct FrameRun {
    std::vector<uint8_t> flips;  // per measurement ordinal: 1 if outcome differs from reference
    std::vector<uint8_t> fx;     // residual frame X bit per qubit (measured wires cleared)
    std::vector<uint8_t> fz;     // residual frame Z bit per qubit
};

// Propagates a Pauli frame through the circuit: the frame is the accumulated fault
// word conjugated forward, measurement flips are anticommutation bits against the
// readout observable, and measured wires drop out of the frame. `fault_at(ev)` supplies
// the fault effect at each event; flips/fx/fz are caller-zeroed arrays.
template <typename FaultFn>
inline void run_frame_core(const Circuit& c, FaultFn&& fault_at, uint8_t* flips, uint8_t* fx,
                           uint8_t* fz) {
    for (const GateEvent& ev : c.events) {
        switch (ev.kind) {
            case GateKind::H:
                std::swap(fx[ev.q0], fz[ev.q0]);
                break;
            case GateKind::S:
                fz[ev.q0] ^= fx[ev.q0];
                break;
            case GateKind::CNOT:
                fx[ev.q1] ^= fx[ev.q0];
                fz[ev.q0] ^= fz[ev.q1];
                break;
            case GateKind::CZ: {
                uint8_t xa = fx[ev.q0];
                fz[ev.q0] ^= fx[ev.q1];
                fz[ev.q1] ^= xa;
                break;
            }
            case GateKind::PREP_Z:
            case GateKind::PREP_X:
                fx[ev.q0] = 0;
                fz[ev.q0] = 0;
                break;
            case GateKind::WAIT:
                break;
            case GateKind::MEAS_Z:
            case GateKind::MEAS_X:
            case GateKind::MEAS_Y: {
                FaultEffect f = fault_at(ev);
                fx[ev.q0] ^= pauli_x_bit(f.p0);
                fz[ev.q0] ^= pauli_z_bit(f.p0);
                uint8_t flip = ev.kind == GateKind::MEAS_Z   ? fx[ev.q0]
                               : ev.kind == GateKind::MEAS_X ? fz[ev.q0]
                                                             : fx[ev.q0] ^ fz[ev.q0];
                flips[ev.meas_index] = flip;
                fx[ev.q0] = 0;
                fz[ev.q0] = 0;
                continue;
            }
        }
        FaultEffect f = fault_at(ev);
        if (f.p0 != Pauli::I) {
            fx[ev.q0] ^= pauli_x_bit(f.p0);
            fz[ev.q0] ^= pauli_z_bit(f.p0);
        }
        if (f.p1 != Pauli::I) {
            fx[ev.q1] ^= pauli_x_bit(f.p1);
            fz[ev.q1] ^= pauli_z_bit(f.p1);
        }
    }
}

// One trial with faults drawn from the noise model by the counter-based RNG.
// `key.location` is ignored; each event supplies its own location id.
FrameRun run_frame_sampled(const Circuit& c, const NoiseModel& nm, const FaultKey& key);

// One trial with a fixed fault pattern (one entry per event).
FrameRun run_frame_injected(const Circuit& c, const std::vector<FaultEffect>& faults);

// The fault pattern run_frame_sampled would draw, for feeding the same trial to an oracle.
std::vector<FaultEffect> sample_fault_pattern(const Circuit& c, const NoiseModel& nm,
                                              const FaultKey& key);

uint8_t checkpoint_parity(const std::vector<uint8_t>& flips, const CheckpointDef& def);

}  // namespace starsim
