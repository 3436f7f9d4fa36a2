#include "steane.hpp"

#include <bit>

#include <json.hpp>

namespace starsim {

bool steane_is_stabilizer_word(uint8_t word) {
    return steane_in_code(word) && parity7(word & kLogicalMask) == 0;
}

const std::array<uint8_t, 8>& stabilizer_words() {
    static const std::array<uint8_t, 8> words = [] {
        std::array<uint8_t, 8> w{};
        size_t n = 0;
        for (int mask = 0; mask < 128; ++mask)
            if (steane_is_stabilizer_word(static_cast<uint8_t>(mask))) w[n++] = static_cast<uint8_t>(mask);
        return w;
    }();
    return words;
}

const std::array<uint8_t, 16>& code_words() {
    static const std::array<uint8_t, 16> words = [] {
        std::array<uint8_t, 16> w{};
        size_t n = 0;
        for (int mask = 0; mask < 128; ++mask)
            if (steane_in_code(static_cast<uint8_t>(mask))) w[n++] = static_cast<uint8_t>(mask);
        return w;
    }();
    return words;
}

namespace {

template <size_t N>
std::array<uint8_t, 128> build_reduce_table(const std::array<uint8_t, N>& span) {
    std::array<uint8_t, 128> table{};
    for (int mask = 0; mask < 128; ++mask) {
        auto best = static_cast<uint8_t>(mask);
        for (uint8_t s : span) {
            auto cand = static_cast<uint8_t>(mask ^ s);
            int dw = std::popcount(cand) - std::popcount(best);
            if (dw < 0 || (dw == 0 && cand < best)) best = cand;
        }
        table[static_cast<size_t>(mask)] = best;
    }
    return table;
}

}  // namespace

uint8_t reduce_mod_stabilizers(uint8_t mask) {
    static const std::array<uint8_t, 128> table = build_reduce_table(stabilizer_words());
    return table[mask & kAllWires];
}

uint8_t reduce_mod_code(uint8_t mask) {
    static const std::array<uint8_t, 128> table = build_reduce_table(code_words());
    return table[mask & kAllWires];
}

void reduce_block_gauge(uint8_t& xmask, uint8_t& zmask, LogicalBasis basis) {
    if (basis == LogicalBasis::Plus) {
        xmask = reduce_mod_code(xmask);
        zmask = reduce_mod_stabilizers(zmask);
    } else {
        xmask = reduce_mod_stabilizers(xmask);
        zmask = reduce_mod_code(zmask);
    }
}

namespace {

struct EncoderPlan {
    std::array<uint8_t, 7> prep;            // per wire: 0 = PREP_Z, 1 = PREP_X
    std::array<std::pair<uint8_t, uint8_t>, 9> cnots;  // (control, target), block-local
};

// |0_L>: X-type seeds on {0,1,3} fan out to the three X stabilizers; the Z-type wires
// pick up exactly the Hamming-code Z words. |+_L> is the transpose construction.
constexpr EncoderPlan kZeroPlan = {
    {1, 1, 0, 1, 0, 0, 0},
    {{{0, 2}, {0, 4}, {0, 6}, {1, 2}, {1, 5}, {1, 6}, {3, 4}, {3, 5}, {3, 6}}},
};
constexpr EncoderPlan kPlusPlan = {
    {0, 0, 1, 0, 1, 1, 1},
    {{{2, 0}, {2, 1}, {4, 0}, {4, 3}, {5, 1}, {5, 3}, {6, 0}, {6, 1}, {6, 3}}},
};

}  // namespace

void append_encoder(Circuit& c, const std::array<uint32_t, 7>& wires, LogicalBasis basis) {
    const EncoderPlan& plan = basis == LogicalBasis::Zero ? kZeroPlan : kPlusPlan;
    for (uint32_t i = 0; i < 7; ++i) {
        c.append(plan.prep[i] ? GateKind::PREP_X : GateKind::PREP_Z, wires[i]);
    }
    for (const auto& [ctrl, tgt] : plan.cnots) {
        c.append(GateKind::CNOT, wires[ctrl], wires[tgt]);
    }
}

Circuit encoding_circuit(LogicalBasis basis) {
    Circuit c;
    std::array<uint32_t, 7> wires{};
    uint32_t base = c.alloc(7);
    for (uint32_t i = 0; i < 7; ++i) wires[i] = base + i;
    append_encoder(c, wires, basis);
    return c;
}

void append_transversal_cnot(Circuit& c, const std::array<uint32_t, 7>& control,
                             const std::array<uint32_t, 7>& target) {
    for (uint32_t i = 0; i < 7; ++i) c.append(GateKind::CNOT, control[i], target[i]);
}

void append_transversal_cz(Circuit& c, const std::array<uint32_t, 7>& a,
                           const std::array<uint32_t, 7>& b) {
    for (uint32_t i = 0; i < 7; ++i) c.append(GateKind::CZ, a[i], b[i]);
}

std::array<uint32_t, 7> append_transversal_meas(Circuit& c, const std::array<uint32_t, 7>& wires,
                                                GateKind meas_kind) {
    std::array<uint32_t, 7> ordinals{};
    for (uint32_t i = 0; i < 7; ++i) {
        ordinals[i] = c.n_meas;
        c.append(meas_kind, wires[i]);
    }
    return ordinals;
}

CodeSpec code_spec() {
    return {7, 1, 3, kCheckRows, kCheckRows, kLogicalMask, kLogicalMask};
}

std::string code_spec_json() {
    CodeSpec s = code_spec();
    nlohmann::json j;
    j["n"] = s.n;
    j["k"] = s.k;
    j["d"] = s.d;
    auto mask_to_wires = [](uint8_t mask) {
        std::vector<int> wires;
        for (int i = 0; i < 7; ++i) {
            if (mask & (1 << i)) wires.push_back(i);
        }
        return wires;
    };
    for (uint8_t row : s.x_checks) j["x_checks"].push_back(mask_to_wires(row));
    for (uint8_t row : s.z_checks) j["z_checks"].push_back(mask_to_wires(row));
    j["logical_x"] = mask_to_wires(s.logical_x);
    j["logical_z"] = mask_to_wires(s.logical_z);
    return j.dump(2);
}

}  // namespace starsim
