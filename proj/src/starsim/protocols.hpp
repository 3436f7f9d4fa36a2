#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "frame.hpp"
#include "pauli.hpp"
#include "steane.hpp"

namespace starsim {

// Residual Pauli frame of one encoded block: bit w of fx/fz set means a physical X/Z
// component on wire w. Both set = Y.
struct Block {
    uint8_t fx = 0;
    uint8_t fz = 0;
    bool is_identity() const { return (fx | fz) == 0; }
};

// Per-trial execution context. Every noisy primitive draws its randomness from
// (seed, trial, salt, location) through the counter-based generator, consuming one salt
// per primitive, so a trial replays bit-identically for any worker count.
struct TrialCtx {
    const NoiseModel* nm = nullptr;
    uint64_t seed = 0;
    uint64_t trial = 0;
    uint64_t next_salt = 0;

    // build accounting
    uint64_t dv_runs = 0;
    uint64_t dv_rejections = 0;
    uint64_t pair_discards = 0;
    uint64_t attach_severances = 0;
    uint64_t star_restarts = 0;

    uint64_t salt() { return next_salt++; }
};

// One verification stage: the target block is coupled to a verified-ancilla pair in each
// of the two bases, and every ancilla readout parity that is deterministic for a fault-free
// run is checked. A fresh stage also contains the target encoder; a repeat stage receives
// the target as circuit inputs.
struct DvStage {
    LogicalBasis target_basis = LogicalBasis::Plus;
    bool fresh_target = true;
    Circuit circuit;                         // 35 wires: target 0..6, ancillas 7..34
    std::vector<CheckpointDef> checkpoints;  // 14 deterministic readout parities
};

const DvStage& dv_stage(LogicalBasis target, bool fresh_target);

// Standalone copy of the fresh-target stage circuit (encoder included).
Circuit double_verification_circuit(LogicalBasis target);

struct DvResult {
    bool accepted = false;
    Block out;  // target frame after the stage (meaningful when accepted)
};

// Runs one stage on a target carrying frame `in`. Accepted iff all checkpoints match the
// fault-free reference.
DvResult run_dv(const DvStage& stage, Block in, TrialCtx& ctx);

// Fresh encode + verification, retried until accepted; the returned frame is canonicalized
// modulo operators that act trivially on the block's state.
Block make_verified_block(LogicalBasis basis, TrialCtx& ctx);

// Transversal CZ between two blocks, one independent fault per wire pair.
void apply_noisy_transversal_cz(Block& a, Block& b, TrialCtx& ctx);

// Transversal readout of a block; returns the 7-bit word of outcome flips relative to the
// fault-free reference (frame anticommutation plus readout faults).
uint8_t measure_block(const Block& b, GateKind meas_kind, TrialCtx& ctx);

// Two verified |+_L> blocks joined by transversal CZ, then each side re-verified.
// A rejected re-verification discards the whole pair.
struct PairBlocks {
    Block a, b;
};
bool try_build_two_qubit_cluster(TrialCtx& ctx, PairBlocks& out);  // single attempt
PairBlocks build_two_qubit_cluster(TrialCtx& ctx);                 // retries until accepted

// Star cluster: a root block with L leaf chains root - inner_i - end_i. The root frame
// already includes byproducts from any severed attachments.
struct LeafChain {
    Block inner, end;
    bool consumed = false;
};
struct StarClusterState {
    uint32_t L = 0;
    Block root;
    std::vector<LeafChain> leaves;
    uint32_t physical_qubits() const { return 7 * (2 * L + 1); }
    // next unconsumed leaf index, or L when exhausted
    uint32_t next_leaf() const;
};

StarClusterState build_star(uint32_t L, TrialCtx& ctx);

enum class ConnectStatus : uint8_t { Success, DetectedFailure, UndetectedErroneous };

struct ConnectionOutcome {
    ConnectStatus status = ConnectStatus::DetectedFailure;
    uint32_t leaf_a = 0, leaf_b = 0;  // consumed leaf indices
    uint8_t syndrome_a = 0, syndrome_b = 0;  // end-block verification syndromes
    // decode-level error bits of the two end readouts (for conditional statistics)
    bool end_error_a = false, end_error_b = false;
    // true when the byproducts pushed to the roots differ from the fault-free ones,
    // i.e. the connection itself corrupted a surviving root
    bool root_error = false;
};

// Consumes one leaf from each star: transversal CZ between the end blocks, X readout of
// both ends. Trivial syndromes -> the inners are X-read and the merge byproducts go to
// root A; otherwise the inners are Z-read, severing both chains (Z byproducts to each
// root). With use_even_if_failed, a failed check still takes the success branch and the
// outcome is flagged UndetectedErroneous. Throws std::invalid_argument on leaf reuse.
ConnectionOutcome connect(StarClusterState& a, StarClusterState& b, uint32_t leaf_a,
                          uint32_t leaf_b, TrialCtx& ctx, bool use_even_if_failed = false);

struct LinkRecord {
    uint32_t attempts = 0;
    ConnectStatus final_status = ConnectStatus::DetectedFailure;
    bool root_error = false;
};

// Retries connect on fresh leaf pairs until success; when either star is down to its last
// leaf, the final attempt is kept even if its check fails.
LinkRecord link_with_retries(StarClusterState& a, StarClusterState& b, TrialCtx& ctx);

// Byproduct rules, derived once from the stabilizer-tableau oracle over all forced readout
// patterns and cached. Masks select which decoded logical outcome bits
// (m_inner_a, m_end_a, m_end_b, m_inner_b) = bits 0..3 feed each correction parity.
struct ConnectionRule {
    uint8_t alpha_mask = 0;  // X_L power on root A
    uint8_t beta_mask = 0;   // Z_L power on root A
};
const ConnectionRule& connection_byproduct_rule();

struct FailureSeveranceRule {
    uint8_t beta_a_mask = 0;  // Z_L power on root A, bits as in ConnectionRule
    uint8_t beta_b_mask = 0;  // Z_L power on root B
};
const FailureSeveranceRule& failure_severance_rule();

struct AttachSeveranceRule {
    uint8_t beta_mask = 0;  // bits (m_inner, m_end) -> Z_L power on the root
};
const AttachSeveranceRule& attach_severance_rule();

// ---- flat circuits and exhaustive fault scans ----

// Straight-line success path of a whole star build, with every stage checkpoint.
struct FlatStar {
    uint32_t L = 0;
    Circuit circuit;
    std::vector<CheckpointDef> checkpoints;
    // block 0 = root, block 1+2i = inner_i, block 2+2i = end_i
    std::vector<std::array<uint32_t, 7>> block_wires;
};
FlatStar make_flat_star(uint32_t L);

// Every (location, effect) pair the noise model can produce, with its probability.
struct FaultSite {
    uint32_t location = 0;
    FaultEffect effect;
    double probability = 0;
};
std::vector<FaultSite> enumerate_fault_sites(const Circuit& c, const NoiseModel& nm);

struct ScanReport {
    uint64_t sites = 0;
    uint64_t accepted = 0;          // fault passed every checkpoint
    uint64_t accepted_logical = 0;  // ...and left a logical error on a surviving block
    double detect_mass = 0;         // sum of probabilities of detected faults
    double total_mass = 0;          // sum of probabilities of all faults
};

ScanReport scan_dv_stage(const DvStage& stage, const NoiseModel& nm);
ScanReport scan_flat_star(const FlatStar& fs, const NoiseModel& nm);

// Leading-order acceptance of one stage: product over locations of (1 - detected mass).
double dv_acceptance_leading_order(const DvStage& stage, const NoiseModel& nm);

// True iff the star's residual frame acts trivially on the cluster state after ideal
// per-block decoding: all per-block logical classes must combine to a product of the
// cluster's logical stabilizer generators.
bool star_frame_is_trivial(const FlatStar& fs, const FrameRun& run);

// ---- resource accounting ----

// Expected physical resources per star cluster at error rate p, from the leading-order
// stage acceptances. N counts qubit preparations and two-qubit gates across all retries;
// K counts the distinct fault locations on the accepted data path (data-block encoders,
// data-side coupling legs of each verification stage, and the graph CZs).
struct ResourceCount {
    double n_ops = 0;             // N
    double k_locations = 0;       // K
    double fresh_acceptance = 0;  // stage acceptance, encoder included
    double repeat_acceptance = 0;
    double expected_block = 0;    // ops per accepted fresh block
    double expected_pair = 0;     // ops per accepted leaf pair
    double expected_leaf = 0;     // ops per attached leaf
};
ResourceCount count_resources(uint32_t L, double p = 0.01, double tau = 0.0);

}  // namespace starsim
