#include "frame.hpp"

namespace starsim {

namespace {

FrameRun make_zeroed_run(const Circuit& c) {
    FrameRun run;
    run.flips.assign(c.n_meas, 0);
    run.fx.assign(c.n_qubits, 0);
    run.fz.assign(c.n_qubits, 0);
    return run;
}

}  // namespace

FrameRun run_frame_sampled(const Circuit& c, const NoiseModel& nm, const FaultKey& key) {
    FrameRun run = make_zeroed_run(c);
    run_frame_core(
        c,
        [&](const GateEvent& ev) {
            return sample_fault(ev, nm, {key.seed, key.trial, key.salt, ev.location_id});
        },
        run.flips.data(), run.fx.data(), run.fz.data());
    return run;
}

FrameRun run_frame_injected(const Circuit& c, const std::vector<FaultEffect>& faults) {
    FrameRun run = make_zeroed_run(c);
    run_frame_core(
        c, [&](const GateEvent& ev) { return faults[ev.location_id]; }, run.flips.data(),
        run.fx.data(), run.fz.data());
    return run;
}

std::vector<FaultEffect> sample_fault_pattern(const Circuit& c, const NoiseModel& nm,
                                              const FaultKey& key) {
    std::vector<FaultEffect> faults(c.events.size());
    for (const GateEvent& ev : c.events) {
        faults[ev.location_id] = sample_fault(ev, nm, {key.seed, key.trial, key.salt, ev.location_id});
    }
    return faults;
}

uint8_t checkpoint_parity(const std::vector<uint8_t>& flips, const CheckpointDef& def) {
    uint8_t parity = 0;
    for (uint32_t m : def.meas) parity ^= flips[m];
    return parity & 1;
}

}  // namespace starsim
