#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <bit>
#include <cmath>

#include "starsim/steane.hpp"
#include "starsim/tableau.hpp"

using namespace starsim;

namespace {

PauliString mask_word(uint8_t mask, Pauli p) {
    PauliString w(7);
    for (uint32_t q = 0; q < 7; ++q)
        if ((mask >> q) & 1) w.set(q, p);
    return w;
}

}  // namespace

TEST_CASE("syndrome map blames the right wire") {
    CHECK(steane_syndrome(0) == 0);
    for (uint8_t w = 0; w < 7; ++w) {
        uint8_t word = static_cast<uint8_t>(1u << w);
        CHECK(steane_syndrome(word) == w + 1);
        CHECK(steane_correction(w + 1) == word);
        DecodeResult d = steane_decode(word);
        CHECK(d.corrected == 0);
        CHECK(d.logical == 0);
    }
    // correction always returns the word to the code space
    for (int word = 0; word < 128; ++word)
        CHECK(steane_syndrome(steane_decode(static_cast<uint8_t>(word)).corrected) == 0);
}

TEST_CASE("distance three: exactly the 21 weight-2 words deceive the decoder") {
    int miscorrected = 0;
    for (int word = 0; word < 128; ++word) {
        auto w = static_cast<uint8_t>(word);
        int weight = std::popcount(static_cast<unsigned>(word));
        DecodeResult d = steane_decode(w);
        if (weight <= 1) {
            CHECK(d.logical == 0);
        } else if (weight == 2) {
            CHECK(d.logical == 1);  // every weight-2 word lands on the wrong coset
            ++miscorrected;
        }
    }
    CHECK(miscorrected == 21);
}

TEST_CASE("stabilizer words form the even subcode") {
    const auto& stab = stabilizer_words();
    CHECK(stab.size() == 8);
    CHECK(stab[0] == 0);
    for (uint8_t s : stab) {
        CHECK(steane_in_code(s));
        CHECK(parity7(s & kLogicalMask) == 0);  // acts trivially on the logical
        if (s) CHECK(std::popcount(static_cast<unsigned>(s)) == 4);
        for (uint8_t t : stab) {  // closed under composition
            bool found = false;
            for (uint8_t u : stab) found = found || u == (s ^ t);
            CHECK(found);
        }
    }
    const auto& code = code_words();
    CHECK(code.size() == 16);
    int logical_reps = 0;
    for (uint8_t c : code) {
        CHECK(steane_in_code(c));
        logical_reps += parity7(c & kLogicalMask);
    }
    CHECK(logical_reps == 8);  // the code splits evenly into the two cosets
}

TEST_CASE("residual classes compose bitwise from the two sectors") {
    CHECK(residual_logical_class(0, 0) == Pauli::I);
    CHECK(residual_logical_class(kLogicalMask, 0) == Pauli::X);
    CHECK(residual_logical_class(0, kLogicalMask) == Pauli::Z);
    CHECK(residual_logical_class(kLogicalMask, kLogicalMask) == Pauli::Y);
    // weight-2 X residual: distance 3 means the decoder miscorrects it to X_L
    CHECK(steane_decode(0x03).logical == 1);
    CHECK(residual_logical_class(0x03, 0) == make_pauli(1, 0));
}

TEST_CASE("coset reduction returns minimal representatives") {
    const auto& stab = stabilizer_words();
    for (int mask = 0; mask < 128; ++mask) {
        auto m = static_cast<uint8_t>(mask);
        uint8_t r = reduce_mod_stabilizers(m);
        bool in_coset = false;
        for (uint8_t s : stab) in_coset = in_coset || (m ^ s) == r;
        CHECK(in_coset);
        for (uint8_t s : stab)
            CHECK(std::popcount(static_cast<unsigned>(r)) <=
                  std::popcount(static_cast<unsigned>(m ^ s)));
        CHECK(reduce_mod_stabilizers(r) == r);  // idempotent
        uint8_t rc = reduce_mod_code(m);
        CHECK(std::popcount(static_cast<unsigned>(rc)) <=
              std::popcount(static_cast<unsigned>(r)));
        CHECK(steane_syndrome(static_cast<uint8_t>(rc ^ m)) == 0);
    }
    // X_L is gauge on |+_L>, so the Plus X sector folds it away entirely.
    uint8_t fx = kLogicalMask, fz = 0;
    reduce_block_gauge(fx, fz, LogicalBasis::Plus);
    CHECK(fx == 0);
    fx = kLogicalMask;
    fz = kLogicalMask;
    reduce_block_gauge(fx, fz, LogicalBasis::Plus);
    CHECK(fx == 0);
    CHECK(std::popcount(static_cast<unsigned>(fz)) == 3);  // Z_L is real on |+_L>
    fx = kLogicalMask;
    fz = kLogicalMask;
    reduce_block_gauge(fx, fz, LogicalBasis::Zero);
    CHECK(fz == 0);
    CHECK(std::popcount(static_cast<unsigned>(fx)) == 3);
}

TEST_CASE("encoders prepare the codeword states exactly") {
    for (LogicalBasis basis : {LogicalBasis::Zero, LogicalBasis::Plus}) {
        Circuit c = encoding_circuit(basis);
        REQUIRE(c.validate().empty());
        CHECK(c.n_qubits == 7);
        Tableau state(1);  // replaced by run_tableau
        Tableau final_state(7);
        run_tableau(c, nullptr, nullptr, &final_state);
        for (uint8_t row : kCheckRows) {
            CHECK(final_state.deterministic_sign(mask_word(row, Pauli::X)) == +1);
            CHECK(final_state.deterministic_sign(mask_word(row, Pauli::Z)) == +1);
        }
        PauliString xl = mask_word(kLogicalMask, Pauli::X);
        PauliString zl = mask_word(kLogicalMask, Pauli::Z);
        if (basis == LogicalBasis::Zero) {
            CHECK(final_state.deterministic_sign(zl) == +1);
            CHECK_FALSE(final_state.deterministic_sign(xl).has_value());
        } else {
            CHECK(final_state.deterministic_sign(xl) == +1);
            CHECK_FALSE(final_state.deterministic_sign(zl).has_value());
        }
    }
}

TEST_CASE("transversal helpers touch each wire pair once, in wire order") {
    Circuit c;
    uint32_t a0 = c.alloc(7), b0 = c.alloc(7);
    std::array<uint32_t, 7> a{}, b{};
    for (uint32_t i = 0; i < 7; ++i) {
        a[i] = a0 + i;
        b[i] = b0 + i;
        c.append(GateKind::PREP_Z, a[i]);
        c.append(GateKind::PREP_X, b[i]);
    }
    size_t before = c.events.size();
    append_transversal_cnot(c, a, b);
    CHECK(c.events.size() == before + 7);
    for (uint32_t i = 0; i < 7; ++i) {
        const GateEvent& ev = c.events[before + i];
        CHECK(ev.kind == GateKind::CNOT);
        CHECK(ev.q0 == a[i]);
        CHECK(ev.q1 == b[i]);
    }
    append_transversal_cz(c, a, b);
    CHECK(c.events.back().kind == GateKind::CZ);
    std::array<uint32_t, 7> ma = append_transversal_meas(c, a, GateKind::MEAS_Z);
    std::array<uint32_t, 7> mb = append_transversal_meas(c, b, GateKind::MEAS_X);
    for (uint32_t i = 0; i < 7; ++i) {
        CHECK(ma[i] == i);  // ordinals run in wire order
        CHECK(mb[i] == 7 + i);
    }
    std::array<uint32_t, 14> wire_of_ordinal{};
    for (const GateEvent& ev : c.events)
        if (ev.kind == GateKind::MEAS_Z || ev.kind == GateKind::MEAS_X)
            wire_of_ordinal[ev.meas_index] = ev.q0;
    for (uint32_t i = 0; i < 7; ++i) {
        CHECK(wire_of_ordinal[ma[i]] == a[i]);
        CHECK(wire_of_ordinal[mb[i]] == b[i]);
    }
    CHECK(c.validate().empty());
    CHECK(c.n_meas == 14);
}

TEST_CASE("code spec serializes the published parameters") {
    CodeSpec spec = code_spec();
    CHECK(spec.n == 7);
    CHECK(spec.k == 1);
    CHECK(spec.d == 3);
    CHECK(spec.x_checks == kCheckRows);
    CHECK(spec.z_checks == kCheckRows);
    CHECK(spec.logical_x == kLogicalMask);
    CHECK(spec.logical_z == kLogicalMask);

    auto j = nlohmann::json::parse(code_spec_json());
    CHECK(j["n"] == 7);
    CHECK(j["k"] == 1);
    CHECK(j["d"] == 3);
    REQUIRE(j["x_checks"].size() == 3);
    // first check row 0x55 supports wires {0, 2, 4, 6}
    CHECK(j["x_checks"][0] == std::vector<int>{0, 2, 4, 6});
    CHECK(j["logical_x"] == std::vector<int>{0, 1, 2});
}
