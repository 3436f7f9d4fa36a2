#include "protocols.hpp"

#include <bit>
#include <stdexcept>
#include <string>
#include <utility>

#include "tableau.hpp"

namespace starsim {

namespace {

constexpr uint64_t kMaxRetries = 10'000'000;

// A root carrying a residual X component (undetected leakage of its own verification)
// imprints a detectable Z word on every inner it touches, so attach attempts against such
// a root keep failing no matter how many pairs are severed. A small per-leaf budget bounds
// that loss and scraps the star instead; transient attach failures exhaust it with
// probability (1 - acceptance)^budget, a sub-percent correction to the retry accounting.
constexpr uint64_t kMaxAttachAttempts = 10;

std::array<uint32_t, 7> wire_array(uint32_t base) {
    std::array<uint32_t, 7> w{};
    for (uint32_t i = 0; i < 7; ++i) w[i] = base + i;
    return w;
}

uint8_t mask_parity(uint8_t mask) { return static_cast<uint8_t>(std::popcount(mask) & 1); }

void add_readout_checkpoints(std::vector<CheckpointDef>& cps, const std::string& name,
                             const std::array<uint32_t, 7>& meas, bool with_logical) {
    for (int k = 0; k < 3; ++k) {
        CheckpointDef cp;
        cp.label = name + " syndrome " + std::to_string(k);
        for (int w = 0; w < 7; ++w)
            if ((kCheckRows[static_cast<size_t>(k)] >> w) & 1) cp.meas.push_back(meas[static_cast<size_t>(w)]);
        cps.push_back(std::move(cp));
    }
    if (with_logical) {
        CheckpointDef cp;
        cp.label = name + " logical";
        for (int w = 0; w < 7; ++w)
            if ((kLogicalMask >> w) & 1) cp.meas.push_back(meas[static_cast<size_t>(w)]);
        cps.push_back(std::move(cp));
    }
}

// One verification stage on target wires `t`. Four encoded |0_L> ancillas: the primary of
// each round couples to the target (CNOT round catches target X components for a |+_L>
// target, CZ round catches Z components; mirrored for |0_L>), and each primary is copied
// onto a secondary before readout so that readout-basis-invisible errors on the primary
// are still caught. Checkpoints: every ancilla syndrome, plus the logical parity of the
// copies, which is what blocks an ancilla-encoder logical word from reaching the target.
void append_stage_events(Circuit& c, const std::array<uint32_t, 7>& t, LogicalBasis basis,
                         bool fresh, const std::string& prefix, std::vector<CheckpointDef>& cps) {
    auto a1 = wire_array(c.alloc(7));
    auto a1b = wire_array(c.alloc(7));
    auto a2 = wire_array(c.alloc(7));
    auto a3 = wire_array(c.alloc(7));

    if (fresh) append_encoder(c, t, basis);

    append_encoder(c, a1, LogicalBasis::Zero);
    append_encoder(c, a1b, LogicalBasis::Zero);
    if (basis == LogicalBasis::Plus) {
        append_transversal_cnot(c, a1, t);
    } else {
        append_transversal_cz(c, t, a1);
    }
    append_transversal_cnot(c, a1, a1b);
    auto m1 = append_transversal_meas(c, a1, GateKind::MEAS_X);
    auto m1b = append_transversal_meas(c, a1b, GateKind::MEAS_Z);

    append_encoder(c, a2, LogicalBasis::Zero);
    append_encoder(c, a3, LogicalBasis::Zero);
    if (basis == LogicalBasis::Plus) {
        append_transversal_cz(c, t, a2);
    } else {
        append_transversal_cnot(c, a2, t);
    }
    append_transversal_cnot(c, a2, a3);
    auto m2 = append_transversal_meas(c, a2, GateKind::MEAS_X);
    auto m3 = append_transversal_meas(c, a3, GateKind::MEAS_Z);

    add_readout_checkpoints(cps, prefix + "A1", m1, false);
    add_readout_checkpoints(cps, prefix + "A1b", m1b, true);
    add_readout_checkpoints(cps, prefix + "A2", m2, false);
    add_readout_checkpoints(cps, prefix + "A3", m3, true);
}

DvStage build_stage(LogicalBasis basis, bool fresh) {
    DvStage st;
    st.target_basis = basis;
    st.fresh_target = fresh;
    Circuit& c = st.circuit;
    auto t = wire_array(c.alloc(7));
    if (!fresh) c.n_input_qubits = 7;
    append_stage_events(c, t, basis, fresh, "", st.checkpoints);
    c.outputs.assign(t.begin(), t.end());
    std::string err = c.validate();
    if (!err.empty()) throw std::logic_error("verification stage circuit invalid: " + err);
    if (st.checkpoints.size() != 14) throw std::logic_error("verification stage checkpoint miscount");
    return st;
}

}  // namespace

const DvStage& dv_stage(LogicalBasis target, bool fresh_target) {
    static const DvStage plus_fresh = build_stage(LogicalBasis::Plus, true);
    static const DvStage plus_repeat = build_stage(LogicalBasis::Plus, false);
    static const DvStage zero_fresh = build_stage(LogicalBasis::Zero, true);
    static const DvStage zero_repeat = build_stage(LogicalBasis::Zero, false);
    if (target == LogicalBasis::Plus) return fresh_target ? plus_fresh : plus_repeat;
    return fresh_target ? zero_fresh : zero_repeat;
}

Circuit double_verification_circuit(LogicalBasis target) { return dv_stage(target, true).circuit; }

DvResult run_dv(const DvStage& stage, Block in, TrialCtx& ctx) {
    uint8_t flips[28] = {};
    uint8_t fx[35] = {};
    uint8_t fz[35] = {};
    for (int w = 0; w < 7; ++w) {
        fx[w] = (in.fx >> w) & 1;
        fz[w] = (in.fz >> w) & 1;
    }
    uint64_t salt = ctx.salt();
    ++ctx.dv_runs;
    run_frame_core(
        stage.circuit,
        [&](const GateEvent& ev) {
            return sample_fault(ev, *ctx.nm, {ctx.seed, ctx.trial, salt, ev.location_id});
        },
        flips, fx, fz);

    DvResult res;
    for (int w = 0; w < 7; ++w) {
        res.out.fx |= static_cast<uint8_t>(fx[w] << w);
        res.out.fz |= static_cast<uint8_t>(fz[w] << w);
    }
    res.accepted = true;
    for (const CheckpointDef& cp : stage.checkpoints) {
        uint8_t parity = 0;
        for (uint32_t m : cp.meas) parity ^= flips[m];
        if (parity & 1) {
            res.accepted = false;
            ++ctx.dv_rejections;
            break;
        }
    }
    return res;
}

Block make_verified_block(LogicalBasis basis, TrialCtx& ctx) {
    const DvStage& st = dv_stage(basis, true);
    for (uint64_t attempt = 0; attempt < kMaxRetries; ++attempt) {
        DvResult r = run_dv(st, Block{}, ctx);
        if (r.accepted) {
            Block b = r.out;
            reduce_block_gauge(b.fx, b.fz, basis);
            return b;
        }
    }
    throw std::runtime_error("make_verified_block: verification never accepted");
}

void apply_noisy_transversal_cz(Block& a, Block& b, TrialCtx& ctx) {
    uint64_t salt = ctx.salt();
    uint8_t xa = a.fx;
    a.fz ^= b.fx;
    b.fz ^= xa;
    if (ctx.nm->p_two <= 0.0) return;
    GateEvent ev;
    ev.kind = GateKind::CZ;
    ev.q0 = 0;
    ev.q1 = 1;
    for (uint32_t w = 0; w < 7; ++w) {
        FaultEffect f = sample_fault(ev, *ctx.nm, {ctx.seed, ctx.trial, salt, w});
        a.fx ^= static_cast<uint8_t>(pauli_x_bit(f.p0) << w);
        a.fz ^= static_cast<uint8_t>(pauli_z_bit(f.p0) << w);
        b.fx ^= static_cast<uint8_t>(pauli_x_bit(f.p1) << w);
        b.fz ^= static_cast<uint8_t>(pauli_z_bit(f.p1) << w);
    }
}

uint8_t measure_block(const Block& b, GateKind meas_kind, TrialCtx& ctx) {
    uint64_t salt = ctx.salt();
    uint8_t flips = 0;
    switch (meas_kind) {
        case GateKind::MEAS_X: flips = b.fz; break;
        case GateKind::MEAS_Z: flips = b.fx; break;
        case GateKind::MEAS_Y: flips = b.fx ^ b.fz; break;
        default: throw std::invalid_argument("measure_block: not a measurement kind");
    }
    double rate = ctx.nm->p_meas;
    if (rate > 0.0) {
        for (uint32_t w = 0; w < 7; ++w) {
            if (fault_u01({ctx.seed, ctx.trial, salt, w}) < rate) flips ^= static_cast<uint8_t>(1u << w);
        }
    }
    return static_cast<uint8_t>(flips & kAllWires);
}

bool try_build_two_qubit_cluster(TrialCtx& ctx, PairBlocks& out) {
    out.a = make_verified_block(LogicalBasis::Plus, ctx);
    out.b = make_verified_block(LogicalBasis::Plus, ctx);
    apply_noisy_transversal_cz(out.a, out.b, ctx);
    const DvStage& redv = dv_stage(LogicalBasis::Plus, false);
    DvResult ra = run_dv(redv, out.a, ctx);
    if (!ra.accepted) {
        ++ctx.pair_discards;
        return false;
    }
    DvResult rb = run_dv(redv, out.b, ctx);
    if (!rb.accepted) {
        ++ctx.pair_discards;
        return false;
    }
    out.a = ra.out;
    out.b = rb.out;
    out.a.fx = reduce_mod_stabilizers(out.a.fx);
    out.a.fz = reduce_mod_stabilizers(out.a.fz);
    out.b.fx = reduce_mod_stabilizers(out.b.fx);
    out.b.fz = reduce_mod_stabilizers(out.b.fz);
    return true;
}

PairBlocks build_two_qubit_cluster(TrialCtx& ctx) {
    PairBlocks pair;
    for (uint64_t attempt = 0; attempt < kMaxRetries; ++attempt) {
        if (try_build_two_qubit_cluster(ctx, pair)) return pair;
    }
    throw std::runtime_error("build_two_qubit_cluster: never accepted");
}

uint32_t StarClusterState::next_leaf() const {
    for (uint32_t i = 0; i < L; ++i) {
        if (!leaves[i].consumed) return i;
    }
    return L;
}

StarClusterState build_star(uint32_t L, TrialCtx& ctx) {
    if (L < 1) throw std::invalid_argument("build_star requires L >= 1");
    const DvStage& redv = dv_stage(LogicalBasis::Plus, false);
    const AttachSeveranceRule& sever = attach_severance_rule();
    for (uint64_t restart = 0; restart < kMaxRetries; ++restart) {
        StarClusterState s;
        s.L = L;
        s.leaves.resize(L);
        s.root = make_verified_block(LogicalBasis::Plus, ctx);
        bool scrapped = false;
        for (uint32_t i = 0; i < L && !scrapped; ++i) {
            bool attached = false;
            for (uint64_t attempt = 0; attempt < kMaxAttachAttempts; ++attempt) {
                PairBlocks pair = build_two_qubit_cluster(ctx);
                apply_noisy_transversal_cz(s.root, pair.a, ctx);
                DvResult r = run_dv(redv, pair.a, ctx);
                if (r.accepted) {
                    s.leaves[i].inner = r.out;
                    s.leaves[i].inner.fx = reduce_mod_stabilizers(s.leaves[i].inner.fx);
                    s.leaves[i].inner.fz = reduce_mod_stabilizers(s.leaves[i].inner.fz);
                    s.leaves[i].end = pair.b;
                    attached = true;
                    break;
                }
                // Detected attachment fault: read the half-attached pair out in Z,
                // which cuts it off the root up to a Z_L byproduct.
                ++ctx.attach_severances;
                uint8_t m_inner = steane_decode(measure_block(r.out, GateKind::MEAS_Z, ctx)).logical;
                uint8_t m_end = steane_decode(measure_block(pair.b, GateKind::MEAS_Z, ctx)).logical;
                uint8_t bits = static_cast<uint8_t>(m_inner | (m_end << 1));
                if (mask_parity(sever.beta_mask & bits)) s.root.fz ^= kLogicalMask;
            }
            scrapped = !attached;
        }
        if (scrapped) {
            ++ctx.star_restarts;
            continue;
        }
        DvResult fin = run_dv(redv, s.root, ctx);
        if (fin.accepted) {
            s.root = fin.out;
            s.root.fx = reduce_mod_stabilizers(s.root.fx);
            s.root.fz = reduce_mod_stabilizers(s.root.fz);
            return s;
        }
        ++ctx.star_restarts;
    }
    throw std::runtime_error("build_star: never accepted");
}

ConnectionOutcome connect(StarClusterState& a, StarClusterState& b, uint32_t leaf_a,
                          uint32_t leaf_b, TrialCtx& ctx, bool use_even_if_failed) {
    LeafChain& la = a.leaves.at(leaf_a);
    LeafChain& lb = b.leaves.at(leaf_b);
    if (la.consumed || lb.consumed) throw std::invalid_argument("connect: leaf already consumed");
    la.consumed = true;
    lb.consumed = true;

    ConnectionOutcome out;
    out.leaf_a = leaf_a;
    out.leaf_b = leaf_b;

    apply_noisy_transversal_cz(la.end, lb.end, ctx);
    uint8_t wc = measure_block(la.end, GateKind::MEAS_X, ctx);
    uint8_t wd = measure_block(lb.end, GateKind::MEAS_X, ctx);
    DecodeResult dc = steane_decode(wc);
    DecodeResult dd = steane_decode(wd);
    out.syndrome_a = dc.syndrome;
    out.syndrome_b = dd.syndrome;
    out.end_error_a = dc.logical != 0;
    out.end_error_b = dd.logical != 0;

    bool pass = dc.syndrome == 0 && dd.syndrome == 0;
    if (pass || use_even_if_failed) {
        uint8_t mb = steane_decode(measure_block(la.inner, GateKind::MEAS_X, ctx)).logical;
        uint8_t me = steane_decode(measure_block(lb.inner, GateKind::MEAS_X, ctx)).logical;
        uint8_t bits = static_cast<uint8_t>(mb | (dc.logical << 1) | (dd.logical << 2) | (me << 3));
        const ConnectionRule& rule = connection_byproduct_rule();
        uint8_t alpha = mask_parity(rule.alpha_mask & bits);
        uint8_t beta = mask_parity(rule.beta_mask & bits);
        if (alpha) a.root.fx ^= kLogicalMask;
        if (beta) a.root.fz ^= kLogicalMask;
        out.root_error = alpha || beta;
        out.status = pass ? ConnectStatus::Success : ConnectStatus::UndetectedErroneous;
    } else {
        uint8_t mb = steane_decode(measure_block(la.inner, GateKind::MEAS_Z, ctx)).logical;
        uint8_t me = steane_decode(measure_block(lb.inner, GateKind::MEAS_Z, ctx)).logical;
        uint8_t bits = static_cast<uint8_t>(mb | (dc.logical << 1) | (dd.logical << 2) | (me << 3));
        const FailureSeveranceRule& rule = failure_severance_rule();
        uint8_t ba = mask_parity(rule.beta_a_mask & bits);
        uint8_t bb = mask_parity(rule.beta_b_mask & bits);
        if (ba) a.root.fz ^= kLogicalMask;
        if (bb) b.root.fz ^= kLogicalMask;
        out.root_error = ba || bb;
        out.status = ConnectStatus::DetectedFailure;
    }
    return out;
}

LinkRecord link_with_retries(StarClusterState& a, StarClusterState& b, TrialCtx& ctx) {
    auto unconsumed = [](const StarClusterState& s) {
        uint32_t n = 0;
        for (const LeafChain& l : s.leaves)
            if (!l.consumed) ++n;
        return n;
    };
    LinkRecord rec;
    for (;;) {
        uint32_t na = unconsumed(a);
        uint32_t nb = unconsumed(b);
        if (na == 0 || nb == 0) throw std::invalid_argument("link_with_retries: no unconsumed leaves");
        bool last = na == 1 || nb == 1;
        ++rec.attempts;
        ConnectionOutcome out = connect(a, b, a.next_leaf(), b.next_leaf(), ctx, last);
        rec.root_error = rec.root_error || out.root_error;
        if (out.status != ConnectStatus::DetectedFailure) {
            rec.final_status = out.status;
            return rec;
        }
    }
}

// ---- byproduct rule derivations ----
//
// Each rule is obtained by running the noiseless merge/severance circuit on the stabilizer
// tableau over every forced readout pattern, solving for the Pauli that restores the
// reference graph-state stabilizers, and fitting the (necessarily affine) dependence on
// the decoded logical outcomes. The frame simulation only needs the linear part: the
// constant term is applied identically in the real and the reference run.

namespace {

struct AffineFit {
    uint8_t mask = 0;
    uint8_t constant = 0;
};

// rows: (input bits, output bit); k = number of input bits.
AffineFit fit_affine_gf2(const std::vector<std::pair<uint8_t, uint8_t>>& rows, int k) {
    // unknowns: coefficient bits 0..k-1, constant bit k
    std::vector<uint16_t> eqs;  // low k+1 bits = coefficients, bit k+1 = rhs
    for (auto [in, out] : rows) {
        uint16_t eq = static_cast<uint16_t>(in | (1u << k) | (static_cast<uint16_t>(out & 1) << (k + 1)));
        for (uint16_t prev : eqs) {
            uint16_t lead = prev & static_cast<uint16_t>(~(~0u << (k + 1)));
            uint16_t high = static_cast<uint16_t>(1u << (15 - std::countl_zero(lead)));
            if (eq & high) eq ^= prev;
        }
        if (eq & static_cast<uint16_t>(~(~0u << (k + 1)))) {
            eqs.push_back(eq);
        } else if (eq >> (k + 1)) {
            throw std::logic_error("byproduct derivation: inconsistent outcomes");
        }
    }
    // back-substitution (free unknowns default to 0, then verified below)
    uint16_t solution = 0;
    for (auto it = eqs.rbegin(); it != eqs.rend(); ++it) {
        uint16_t lead = static_cast<uint16_t>(*it & ~(~0u << (k + 1)));
        uint16_t high = static_cast<uint16_t>(1u << (15 - std::countl_zero(lead)));
        uint16_t rhs = static_cast<uint16_t>(*it >> (k + 1));
        uint16_t acc = static_cast<uint16_t>(std::popcount(static_cast<unsigned>(lead & solution & ~high)) & 1);
        if ((rhs ^ acc) & 1) solution |= high;
    }
    AffineFit fit;
    fit.mask = static_cast<uint8_t>(solution & ((1u << k) - 1));
    fit.constant = static_cast<uint8_t>((solution >> k) & 1);
    for (auto [in, out] : rows) {
        uint8_t predicted = static_cast<uint8_t>((std::popcount(static_cast<unsigned>(fit.mask & in)) & 1) ^ fit.constant);
        if (predicted != (out & 1)) throw std::logic_error("byproduct derivation: fit does not reproduce outcomes");
    }
    return fit;
}

PauliString block_logical(uint32_t n_qubits, const std::array<uint32_t, 7>& wires, Pauli kind) {
    PauliString ps(n_qubits);
    for (int w = 0; w < 7; ++w) {
        if ((kLogicalMask >> w) & 1) ps.set(wires[static_cast<size_t>(w)], kind);
    }
    return ps;
}

int sign_of(const Tableau& t, const PauliString& p, const char* what) {
    auto s = t.deterministic_sign(p);
    if (!s) throw std::logic_error(std::string("byproduct derivation: ") + what + " is not deterministic");
    return *s;
}

void assert_in_codespace(const Tableau& t, uint32_t n_qubits, const std::array<uint32_t, 7>& wires) {
    for (uint8_t row : kCheckRows) {
        for (Pauli kind : {Pauli::X, Pauli::Z}) {
            PauliString ps(n_qubits);
            for (int w = 0; w < 7; ++w)
                if ((row >> w) & 1) ps.set(wires[static_cast<size_t>(w)], kind);
            if (sign_of(t, ps, "code stabilizer") != 1)
                throw std::logic_error("byproduct derivation: surviving block left the codespace");
        }
    }
}

struct ChainHarness {
    Circuit circuit;
    std::vector<std::array<uint32_t, 7>> blocks;
    std::vector<std::array<uint32_t, 7>> meas;  // readout ordinals per measured block

    ChainHarness(uint32_t n_blocks, const std::vector<std::pair<uint32_t, uint32_t>>& edges,
                 const std::vector<std::pair<uint32_t, GateKind>>& readouts) {
        for (uint32_t bidx = 0; bidx < n_blocks; ++bidx) blocks.push_back(wire_array(circuit.alloc(7)));
        for (const auto& bw : blocks) append_encoder(circuit, bw, LogicalBasis::Plus);
        for (auto [u, v] : edges) append_transversal_cz(circuit, blocks[u], blocks[v]);
        for (auto [bidx, kind] : readouts) meas.push_back(append_transversal_meas(circuit, blocks[bidx], kind));
        std::string err = circuit.validate();
        if (!err.empty()) throw std::logic_error("derivation circuit invalid: " + err);
    }

    // Runs noiselessly with each measured block's logical bit forced to the given pattern
    // bit; returns the achieved logical bits and the final state.
    uint8_t run(uint8_t pattern, Tableau& state) const {
        std::vector<uint8_t> forced(circuit.n_meas, 0);
        for (size_t i = 0; i < meas.size(); ++i) {
            uint8_t bit = (pattern >> i) & 1;
            for (int w = 0; w < 7; ++w)
                if ((kLogicalMask >> w) & 1) forced[meas[i][static_cast<size_t>(w)]] = bit;
        }
        TableauRun run = run_tableau(circuit, nullptr, &forced, &state);
        uint8_t achieved = 0;
        for (size_t i = 0; i < meas.size(); ++i) {
            uint8_t word = 0;
            for (int w = 0; w < 7; ++w)
                word |= static_cast<uint8_t>(run.meas[meas[i][static_cast<size_t>(w)]].outcome << w);
            if (steane_syndrome(word) != 0)
                throw std::logic_error("byproduct derivation: noiseless readout left the code");
            achieved |= static_cast<uint8_t>(steane_decode(word).logical << i);
        }
        return achieved;
    }
};

}  // namespace

const ConnectionRule& connection_byproduct_rule() {
    static const ConnectionRule rule = [] {
        // Chain a-b-c = root-inner-end of side A, f-e-d of side B, plus the merge edge c-d.
        // Readout order matches connect(): ends in X, then inners in X. Pattern bits are
        // (m_b, m_c, m_d, m_e) = rule bit order, so readouts are listed b-last mapping:
        // meas order (c, d, b, e) with pattern bit i at meas index i.
        ChainHarness h(6,
                       {{0, 1}, {1, 2}, {4, 3}, {5, 4}, {2, 3}},
                       {{2, GateKind::MEAS_X}, {3, GateKind::MEAS_X}, {1, GateKind::MEAS_X}, {4, GateKind::MEAS_X}});
        std::vector<std::pair<uint8_t, uint8_t>> alpha_rows, beta_rows;
        for (uint8_t pattern = 0; pattern < 16; ++pattern) {
            Tableau st(1);
            uint8_t achieved = h.run(pattern, st);
            // achieved bits are in meas order (c, d, b, e); rule bits are (b, c, d, e)
            uint8_t mb = (achieved >> 2) & 1, mc = achieved & 1, md = (achieved >> 1) & 1,
                    me = (achieved >> 3) & 1;
            uint8_t bits = static_cast<uint8_t>(mb | (mc << 1) | (md << 2) | (me << 3));
            assert_in_codespace(st, h.circuit.n_qubits, h.blocks[0]);
            assert_in_codespace(st, h.circuit.n_qubits, h.blocks[5]);
            PauliString xa_zf = block_logical(h.circuit.n_qubits, h.blocks[0], Pauli::X);
            xa_zf.compose(block_logical(h.circuit.n_qubits, h.blocks[5], Pauli::Z));
            PauliString za_xf = block_logical(h.circuit.n_qubits, h.blocks[0], Pauli::Z);
            za_xf.compose(block_logical(h.circuit.n_qubits, h.blocks[5], Pauli::X));
            // Z_a^beta restores X_L(a)Z_L(f); X_a^alpha restores Z_L(a)X_L(f).
            uint8_t beta = sign_of(st, xa_zf, "X_L Z_L merge stabilizer") < 0 ? 1 : 0;
            uint8_t alpha = sign_of(st, za_xf, "Z_L X_L merge stabilizer") < 0 ? 1 : 0;
            alpha_rows.push_back({bits, alpha});
            beta_rows.push_back({bits, beta});
        }
        ConnectionRule r;
        r.alpha_mask = fit_affine_gf2(alpha_rows, 4).mask;
        r.beta_mask = fit_affine_gf2(beta_rows, 4).mask;
        return r;
    }();
    return rule;
}

const FailureSeveranceRule& failure_severance_rule() {
    static const FailureSeveranceRule rule = [] {
        // Same chain as a successful merge, but the inners are read in Z after the failed
        // end verification, cutting each root free of its leaf.
        ChainHarness h(6,
                       {{0, 1}, {1, 2}, {4, 3}, {5, 4}, {2, 3}},
                       {{2, GateKind::MEAS_X}, {3, GateKind::MEAS_X}, {1, GateKind::MEAS_Z}, {4, GateKind::MEAS_Z}});
        std::vector<std::pair<uint8_t, uint8_t>> a_rows, b_rows;
        for (uint8_t pattern = 0; pattern < 16; ++pattern) {
            Tableau st(1);
            uint8_t achieved = h.run(pattern, st);
            uint8_t mb = (achieved >> 2) & 1, mc = achieved & 1, md = (achieved >> 1) & 1,
                    me = (achieved >> 3) & 1;
            uint8_t bits = static_cast<uint8_t>(mb | (mc << 1) | (md << 2) | (me << 3));
            assert_in_codespace(st, h.circuit.n_qubits, h.blocks[0]);
            assert_in_codespace(st, h.circuit.n_qubits, h.blocks[5]);
            uint8_t ba = sign_of(st, block_logical(h.circuit.n_qubits, h.blocks[0], Pauli::X),
                                 "severed root A stabilizer") < 0
                             ? 1
                             : 0;
            uint8_t bb = sign_of(st, block_logical(h.circuit.n_qubits, h.blocks[5], Pauli::X),
                                 "severed root B stabilizer") < 0
                             ? 1
                             : 0;
            a_rows.push_back({bits, ba});
            b_rows.push_back({bits, bb});
        }
        FailureSeveranceRule r;
        r.beta_a_mask = fit_affine_gf2(a_rows, 4).mask;
        r.beta_b_mask = fit_affine_gf2(b_rows, 4).mask;
        return r;
    }();
    return rule;
}

const AttachSeveranceRule& attach_severance_rule() {
    static const AttachSeveranceRule rule = [] {
        // Root-inner-end chain whose attachment was rejected: both leaf blocks are read
        // in Z (inner first, as in build_star), leaving the root alone.
        ChainHarness h(3, {{0, 1}, {1, 2}},
                       {{1, GateKind::MEAS_Z}, {2, GateKind::MEAS_Z}});
        std::vector<std::pair<uint8_t, uint8_t>> rows;
        for (uint8_t pattern = 0; pattern < 4; ++pattern) {
            Tableau st(1);
            uint8_t achieved = h.run(pattern, st);  // bit0 = m_inner, bit1 = m_end
            assert_in_codespace(st, h.circuit.n_qubits, h.blocks[0]);
            uint8_t beta = sign_of(st, block_logical(h.circuit.n_qubits, h.blocks[0], Pauli::X),
                                   "severed root stabilizer") < 0
                               ? 1
                               : 0;
            rows.push_back({achieved, beta});
        }
        AttachSeveranceRule r;
        r.beta_mask = fit_affine_gf2(rows, 2).mask;
        return r;
    }();
    return rule;
}

// ---- flat circuits and scans ----

FlatStar make_flat_star(uint32_t L) {
    if (L < 1 || L > 15) throw std::invalid_argument("make_flat_star requires 1 <= L <= 15");
    FlatStar fs;
    fs.L = L;
    Circuit& c = fs.circuit;

    auto root = wire_array(c.alloc(7));
    fs.block_wires.push_back(root);
    std::vector<std::array<uint32_t, 7>> inner(L), end(L);
    for (uint32_t i = 0; i < L; ++i) {
        inner[i] = wire_array(c.alloc(7));
        end[i] = wire_array(c.alloc(7));
        fs.block_wires.push_back(inner[i]);
        fs.block_wires.push_back(end[i]);
    }

    append_stage_events(c, root, LogicalBasis::Plus, true, "root fresh ", fs.checkpoints);
    for (uint32_t i = 0; i < L; ++i) {
        std::string leaf = "leaf" + std::to_string(i) + " ";
        append_stage_events(c, inner[i], LogicalBasis::Plus, true, leaf + "inner fresh ", fs.checkpoints);
        append_stage_events(c, end[i], LogicalBasis::Plus, true, leaf + "end fresh ", fs.checkpoints);
        append_transversal_cz(c, inner[i], end[i]);
        append_stage_events(c, inner[i], LogicalBasis::Plus, false, leaf + "inner pair ", fs.checkpoints);
        append_stage_events(c, end[i], LogicalBasis::Plus, false, leaf + "end pair ", fs.checkpoints);
        append_transversal_cz(c, root, inner[i]);
        append_stage_events(c, inner[i], LogicalBasis::Plus, false, leaf + "inner attach ", fs.checkpoints);
    }
    append_stage_events(c, root, LogicalBasis::Plus, false, "root final ", fs.checkpoints);

    for (const auto& bw : fs.block_wires) c.outputs.insert(c.outputs.end(), bw.begin(), bw.end());
    std::string err = c.validate();
    if (!err.empty()) throw std::logic_error("flat star circuit invalid: " + err);
    return fs;
}

std::vector<FaultSite> enumerate_fault_sites(const Circuit& c, const NoiseModel& nm) {
    std::vector<FaultSite> sites;
    for (const GateEvent& ev : c.events) {
        switch (ev.kind) {
            case GateKind::CNOT:
            case GateKind::CZ:
                if (nm.p_two > 0.0) {
                    for (uint8_t pair = 1; pair <= 15; ++pair) {
                        sites.push_back({ev.location_id,
                                         {static_cast<Pauli>(pair >> 2), static_cast<Pauli>(pair & 3)},
                                         nm.p_two});
                    }
                }
                break;
            case GateKind::H:
            case GateKind::S:
                if (nm.p_single > 0.0) {
                    for (uint8_t letter = 1; letter <= 3; ++letter)
                        sites.push_back({ev.location_id, {static_cast<Pauli>(letter), Pauli::I}, nm.p_single / 3.0});
                }
                break;
            case GateKind::PREP_Z:
                if (nm.p_prep > 0.0) sites.push_back({ev.location_id, {Pauli::X, Pauli::I}, nm.p_prep});
                break;
            case GateKind::PREP_X:
                if (nm.p_prep > 0.0) sites.push_back({ev.location_id, {Pauli::Z, Pauli::I}, nm.p_prep});
                break;
            case GateKind::MEAS_Z:
            case GateKind::MEAS_Y:
                if (nm.p_meas > 0.0) sites.push_back({ev.location_id, {Pauli::X, Pauli::I}, nm.p_meas});
                break;
            case GateKind::MEAS_X:
                if (nm.p_meas > 0.0) sites.push_back({ev.location_id, {Pauli::Z, Pauli::I}, nm.p_meas});
                break;
            case GateKind::WAIT:
                if (nm.tau * nm.p > 0.0) {
                    for (uint8_t letter = 1; letter <= 3; ++letter)
                        sites.push_back({ev.location_id, {static_cast<Pauli>(letter), Pauli::I}, nm.tau * nm.p / 3.0});
                }
                break;
        }
    }
    return sites;
}

namespace {

bool any_checkpoint_odd(const std::vector<CheckpointDef>& cps, const std::vector<uint8_t>& flips) {
    for (const CheckpointDef& cp : cps) {
        uint8_t parity = 0;
        for (uint32_t m : cp.meas) parity ^= flips[m];
        if (parity & 1) return true;
    }
    return false;
}

uint8_t gather_mask(const std::vector<uint8_t>& bits, const std::array<uint32_t, 7>& wires) {
    uint8_t mask = 0;
    for (int w = 0; w < 7; ++w) mask |= static_cast<uint8_t>((bits[wires[static_cast<size_t>(w)]] & 1) << w);
    return mask;
}

}  // namespace

ScanReport scan_dv_stage(const DvStage& stage, const NoiseModel& nm) {
    std::vector<FaultSite> sites = enumerate_fault_sites(stage.circuit, nm);
    ScanReport rep;
    rep.sites = sites.size();
    std::vector<FaultEffect> faults(stage.circuit.events.size());
    std::array<uint32_t, 7> target = wire_array(0);
    for (const FaultSite& site : sites) {
        faults[site.location] = site.effect;
        FrameRun run = run_frame_injected(stage.circuit, faults);
        faults[site.location] = FaultEffect{};
        rep.total_mass += site.probability;
        if (any_checkpoint_odd(stage.checkpoints, run.flips)) {
            rep.detect_mass += site.probability;
            continue;
        }
        ++rep.accepted;
        uint8_t x = gather_mask(run.fx, target);
        uint8_t z = gather_mask(run.fz, target);
        if (stage.fresh_target) {
            reduce_block_gauge(x, z, stage.target_basis);
        } else {
            x = reduce_mod_stabilizers(x);
            z = reduce_mod_stabilizers(z);
        }
        if (residual_logical_class(x, z) != Pauli::I) ++rep.accepted_logical;
    }
    return rep;
}

bool star_frame_is_trivial(const FlatStar& fs, const FrameRun& run) {
    uint64_t v = 0;
    for (size_t b = 0; b < fs.block_wires.size(); ++b) {
        Pauli cls = residual_logical_class(gather_mask(run.fx, fs.block_wires[b]),
                                           gather_mask(run.fz, fs.block_wires[b]));
        v |= static_cast<uint64_t>(pauli_x_bit(cls)) << (2 * b);
        v |= static_cast<uint64_t>(pauli_z_bit(cls)) << (2 * b + 1);
    }
    if (v == 0) return true;

    // Logical stabilizer generators of the star graph, as (x-class, z-class) bit pairs.
    auto xi = [](uint32_t b) { return static_cast<uint64_t>(1) << (2 * b); };
    auto zeta = [](uint32_t b) { return static_cast<uint64_t>(1) << (2 * b + 1); };
    std::vector<uint64_t> gens;
    uint64_t k_root = xi(0);
    for (uint32_t i = 0; i < fs.L; ++i) k_root |= zeta(1 + 2 * i);
    gens.push_back(k_root);
    for (uint32_t i = 0; i < fs.L; ++i) {
        gens.push_back(xi(1 + 2 * i) | zeta(0) | zeta(2 + 2 * i));
        gens.push_back(xi(2 + 2 * i) | zeta(1 + 2 * i));
    }

    std::vector<uint64_t> basis;
    auto reduce = [&](uint64_t w) {
        for (uint64_t row : basis) {
            uint64_t high = static_cast<uint64_t>(1) << (63 - std::countl_zero(row));
            if (w & high) w ^= row;
        }
        return w;
    };
    for (uint64_t g : gens) {
        uint64_t r = reduce(g);
        if (r) basis.push_back(r);
    }
    return reduce(v) == 0;
}

ScanReport scan_flat_star(const FlatStar& fs, const NoiseModel& nm) {
    std::vector<FaultSite> sites = enumerate_fault_sites(fs.circuit, nm);
    ScanReport rep;
    rep.sites = sites.size();
    std::vector<FaultEffect> faults(fs.circuit.events.size());
    for (const FaultSite& site : sites) {
        faults[site.location] = site.effect;
        FrameRun run = run_frame_injected(fs.circuit, faults);
        faults[site.location] = FaultEffect{};
        rep.total_mass += site.probability;
        if (any_checkpoint_odd(fs.checkpoints, run.flips)) {
            rep.detect_mass += site.probability;
            continue;
        }
        ++rep.accepted;
        if (!star_frame_is_trivial(fs, run)) ++rep.accepted_logical;
    }
    return rep;
}

double dv_acceptance_leading_order(const DvStage& stage, const NoiseModel& nm) {
    std::vector<FaultSite> sites = enumerate_fault_sites(stage.circuit, nm);
    std::vector<double> detected_mass(stage.circuit.events.size(), 0.0);
    std::vector<FaultEffect> faults(stage.circuit.events.size());
    for (const FaultSite& site : sites) {
        faults[site.location] = site.effect;
        FrameRun run = run_frame_injected(stage.circuit, faults);
        faults[site.location] = FaultEffect{};
        if (any_checkpoint_odd(stage.checkpoints, run.flips)) detected_mass[site.location] += site.probability;
    }
    double acceptance = 1.0;
    for (double m : detected_mass) acceptance *= 1.0 - m;
    return acceptance;
}

ResourceCount count_resources(uint32_t L, double p, double tau) {
    if (L < 1) throw std::invalid_argument("count_resources requires L >= 1");
    if (p < 0.0 || p >= 1.0) throw std::invalid_argument("count_resources requires 0 <= p < 1");
    NoiseModel nm = NoiseModel::from_mean_rate(p, tau);

    auto ops = [](const Circuit& c) {
        double n = 0;
        for (const GateEvent& ev : c.events)
            if (is_prep(ev.kind) || is_two_qubit(ev.kind)) n += 1;
        return n;
    };
    const DvStage& fresh = dv_stage(LogicalBasis::Plus, true);
    const DvStage& repeat = dv_stage(LogicalBasis::Plus, false);
    double fresh_ops = ops(fresh.circuit);
    double repeat_ops = ops(repeat.circuit);

    ResourceCount rc;
    rc.fresh_acceptance = dv_acceptance_leading_order(fresh, nm);
    rc.repeat_acceptance = dv_acceptance_leading_order(repeat, nm);
    double af = rc.fresh_acceptance;
    double ar = rc.repeat_acceptance;

    // Hierarchical retry accounting in expectation: a rejected fresh block is rebuilt; a
    // rejected pair re-verification discards the pair (the second re-verification only
    // runs when the first passed); a rejected attachment severs the pair and consumes a
    // fresh one; a rejected final root check restarts at the root. Counted operations are
    // qubit preparations and two-qubit gates.
    rc.expected_block = fresh_ops / af;
    double pair_attempt = 2.0 * rc.expected_block + 7.0 + repeat_ops + ar * repeat_ops;
    rc.expected_pair = pair_attempt / (ar * ar);
    rc.expected_leaf = (rc.expected_pair + 7.0 + repeat_ops) / ar;
    rc.n_ops = rc.expected_block + L * rc.expected_leaf + repeat_ops / ar;

    // Fault locations covered by the verifications along the accepted data path: the
    // 2L+1 data-block encoders, the 14 target-coupling legs of each of the 5L+2 stages,
    // and the 14L graph CZ legs.
    rc.k_locations = 16.0 * (2.0 * L + 1.0) + 14.0 * (5.0 * L + 2.0) + 14.0 * L;
    return rc;
}

}  // namespace starsim
