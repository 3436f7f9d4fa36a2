#include "pauli.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

namespace starsim {

const char* pauli_name(Pauli p) {
    switch (p) {
        case Pauli::I: return "I";
        case Pauli::X: return "X";
        case Pauli::Z: return "Z";
        case Pauli::Y: return "Y";
    }
    return "?";
}

const char* gate_name(GateKind k) {
    switch (k) {
        case GateKind::H: return "H";
        case GateKind::S: return "S";
        case GateKind::CNOT: return "CNOT";
        case GateKind::CZ: return "CZ";
        case GateKind::PREP_Z: return "PREP_Z";
        case GateKind::PREP_X: return "PREP_X";
        case GateKind::MEAS_Z: return "MEAS_Z";
        case GateKind::MEAS_X: return "MEAS_X";
        case GateKind::MEAS_Y: return "MEAS_Y";
        case GateKind::WAIT: return "WAIT";
    }
    return "?";
}

uint32_t Circuit::append(GateKind kind, uint32_t q0, uint32_t q1) {
    GateEvent ev;
    ev.kind = kind;
    ev.q0 = q0;
    ev.q1 = q1;
    ev.location_id = static_cast<uint32_t>(events.size());
    if (is_meas(kind)) ev.meas_index = n_meas++;
    if (wire_free_step_.size() < n_qubits) wire_free_step_.resize(n_qubits, 0);
    uint32_t step = q0 < n_qubits ? wire_free_step_[q0] : 0;
    if (is_two_qubit(kind) && q1 < n_qubits) step = std::max(step, wire_free_step_[q1]);
    ev.time_step = step + 1;
    if (q0 < n_qubits) wire_free_step_[q0] = ev.time_step;
    if (is_two_qubit(kind) && q1 < n_qubits) wire_free_step_[q1] = ev.time_step;
    events.push_back(ev);
    return ev.location_id;
}

std::string Circuit::validate() const {
    enum class WireState : uint8_t { Untouched, Live, Consumed };
    std::vector<WireState> state(n_qubits, WireState::Untouched);
    for (uint32_t q = 0; q < n_input_qubits && q < n_qubits; ++q) state[q] = WireState::Live;
    std::ostringstream err;

    auto check_wire = [&](const GateEvent& ev, uint32_t q) -> bool {
        if (q >= n_qubits) {
            err << "event " << ev.location_id << " (" << gate_name(ev.kind)
                << "): qubit " << q << " out of range";
            return false;
        }
        if (is_prep(ev.kind)) {
            if (state[q] != WireState::Untouched) {
                err << "event " << ev.location_id << ": qubit " << q << " prepared twice";
                return false;
            }
            state[q] = WireState::Live;
            return true;
        }
        if (state[q] == WireState::Untouched) {
            err << "event " << ev.location_id << " (" << gate_name(ev.kind)
                << "): qubit " << q << " used before preparation";
            return false;
        }
        if (state[q] == WireState::Consumed) {
            err << "event " << ev.location_id << " (" << gate_name(ev.kind)
                << "): qubit " << q << " used after measurement";
            return false;
        }
        if (is_meas(ev.kind)) state[q] = WireState::Consumed;
        return true;
    };

    uint32_t meas_seen = 0;
    for (size_t i = 0; i < events.size(); ++i) {
        const GateEvent& ev = events[i];
        if (ev.location_id != i) return "event location_id out of sequence";
        if (is_two_qubit(ev.kind)) {
            if (ev.q0 == ev.q1) {
                err << "event " << i << ": two-qubit gate on identical wires " << ev.q0;
                return err.str();
            }
            if (!check_wire(ev, ev.q0) || !check_wire(ev, ev.q1)) return err.str();
        } else {
            if (ev.q1 != kNoQubit) {
                err << "event " << i << ": single-qubit gate carries a second wire";
                return err.str();
            }
            if (!check_wire(ev, ev.q0)) return err.str();
        }
        if (is_meas(ev.kind)) {
            if (ev.meas_index != meas_seen) return "measurement ordinals out of sequence";
            ++meas_seen;
        } else if (ev.meas_index != kNoMeas) {
            return "non-measurement event carries a measurement ordinal";
        }
    }
    if (meas_seen != n_meas) return "n_meas does not match measurement count";
    for (uint32_t q : outputs) {
        if (q >= n_qubits) return "output wire out of range";
        if (state[q] == WireState::Consumed) return "output wire was measured";
    }
    return {};
}

std::string Circuit::to_text() const {
    std::ostringstream out;
    out << "# qubits " << n_qubits << " inputs " << n_input_qubits << " meas " << n_meas << "\n";
    for (const GateEvent& ev : events) {
        out << gate_name(ev.kind) << " " << ev.q0;
        if (is_two_qubit(ev.kind)) out << " " << ev.q1;
        out << " @" << ev.time_step << " #" << ev.location_id << "\n";
    }
    return out.str();
}

NoiseModel NoiseModel::from_mean_rate(double p, double tau) {
    NoiseModel nm;
    nm.p = p;
    nm.p_two = p / 15.0;
    nm.p_prep = 4.0 * p / 15.0;
    nm.p_meas = 4.0 * p / 15.0;
    nm.p_single = p;
    nm.tau = tau;
    return nm;
}

Pauli conjugate1(GateKind k, Pauli p) {
    uint8_t xb = pauli_x_bit(p);
    uint8_t zb = pauli_z_bit(p);
    switch (k) {
        case GateKind::H: return make_pauli(zb, xb);
        case GateKind::S: return make_pauli(xb, zb ^ xb);
        default: return p;
    }
}

std::pair<Pauli, Pauli> conjugate2(GateKind k, Pauli p0, Pauli p1) {
    uint8_t x0 = pauli_x_bit(p0), z0 = pauli_z_bit(p0);
    uint8_t x1 = pauli_x_bit(p1), z1 = pauli_z_bit(p1);
    switch (k) {
        case GateKind::CNOT:  // q0 = control, q1 = target
            return {make_pauli(x0, z0 ^ z1), make_pauli(x1 ^ x0, z1)};
        case GateKind::CZ:
            return {make_pauli(x0, z0 ^ x1), make_pauli(x1, z1 ^ x0)};
        default: return {p0, p1};
    }
}

void PauliString::compose(const PauliString& other) {
    for (size_t w = 0; w < x.size(); ++w) {
        x[w] ^= other.x[w];
        z[w] ^= other.z[w];
    }
}

bool PauliString::commutes(const PauliString& other) const {
    uint64_t parity = 0;
    for (size_t w = 0; w < x.size(); ++w) {
        parity ^= (x[w] & other.z[w]) ^ (z[w] & other.x[w]);
    }
    return std::popcount(parity) % 2 == 0;
}

uint32_t PauliString::weight() const {
    uint32_t count = 0;
    for (size_t w = 0; w < x.size(); ++w) count += std::popcount(x[w] | z[w]);
    return count;
}

bool PauliString::identity() const {
    for (size_t w = 0; w < x.size(); ++w) {
        if (x[w] | z[w]) return false;
    }
    return true;
}

std::string PauliString::to_string() const {
    std::string s;
    s.reserve(n);
    for (uint32_t q = 0; q < n; ++q) s += pauli_name(get(q));
    return s;
}

}  // namespace starsim
