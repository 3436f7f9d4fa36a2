#include "tableau.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <stdexcept>

namespace starsim {

namespace {

// Sum over bit positions of the Aaronson-Gottesman phase function g, where row 1 supplies
// the left factor and row 2 the right: g in {-1, 0, +1} per position.
int g_words(const uint64_t* x1, const uint64_t* z1, const uint64_t* x2, const uint64_t* z2,
            uint32_t words) {
    int total = 0;
    for (uint32_t w = 0; w < words; ++w) {
        uint64_t ys = x1[w] & z1[w];
        uint64_t xs = x1[w] & ~z1[w];
        uint64_t zs = ~x1[w] & z1[w];
        total += std::popcount(ys & ~x2[w] & z2[w]);   // Y: z2 - x2
        total -= std::popcount(ys & x2[w] & ~z2[w]);
        total += std::popcount(xs & x2[w] & z2[w]);    // X: z2 * (2 x2 - 1)
        total -= std::popcount(xs & ~x2[w] & z2[w]);
        total += std::popcount(zs & x2[w] & ~z2[w]);   // Z: x2 * (1 - 2 z2)
        total -= std::popcount(zs & x2[w] & z2[w]);
    }
    return total;
}

}  // namespace

Tableau::Tableau(uint32_t n_qubits)
    : n_(n_qubits),
      words_((n_qubits + 63) / 64),
      xs_(static_cast<size_t>(2 * n_qubits + 1) * ((n_qubits + 63) / 64), 0),
      zs_(static_cast<size_t>(2 * n_qubits + 1) * ((n_qubits + 63) / 64), 0),
      signs_(2 * n_qubits + 1, 0) {
    for (uint32_t q = 0; q < n_; ++q) {
        xrow(q)[q / 64] |= 1ull << (q % 64);           // destabilizer X_q
        zrow(n_ + q)[q / 64] |= 1ull << (q % 64);      // stabilizer Z_q  (state |0...0>)
    }
}

void Tableau::rowsum(uint32_t h, uint32_t i) {
    int phase = 2 * signs_[h] + 2 * signs_[i] + g_words(xrow(i), zrow(i), xrow(h), zrow(h), words_);
    phase &= 3;
    assert(phase == 0 || phase == 2);
    signs_[h] = static_cast<uint8_t>(phase >> 1);
    uint64_t* xh = xrow(h);
    uint64_t* zh = zrow(h);
    const uint64_t* xi = xrow(i);
    const uint64_t* zi = zrow(i);
    for (uint32_t w = 0; w < words_; ++w) {
        xh[w] ^= xi[w];
        zh[w] ^= zi[w];
    }
}

void Tableau::apply_h(uint32_t q) {
    uint32_t w = q / 64;
    uint64_t bit = 1ull << (q % 64);
    for (uint32_t r = 0; r < 2 * n_; ++r) {
        uint64_t& x = xrow(r)[w];
        uint64_t& z = zrow(r)[w];
        signs_[r] ^= ((x & z & bit) != 0);
        uint64_t diff = (x ^ z) & bit;
        x ^= diff;
        z ^= diff;
    }
}

void Tableau::apply_s(uint32_t q) {
    uint32_t w = q / 64;
    uint64_t bit = 1ull << (q % 64);
    for (uint32_t r = 0; r < 2 * n_; ++r) {
        uint64_t& x = xrow(r)[w];
        uint64_t& z = zrow(r)[w];
        signs_[r] ^= ((x & z & bit) != 0);
        z ^= x & bit;
    }
}

void Tableau::apply_cnot(uint32_t c, uint32_t t) {
    uint32_t wc = c / 64, wt = t / 64;
    uint64_t bc = 1ull << (c % 64), bt = 1ull << (t % 64);
    for (uint32_t r = 0; r < 2 * n_; ++r) {
        uint64_t xc = xrow(r)[wc] & bc;
        uint64_t zc = zrow(r)[wc] & bc;
        uint64_t xt = xrow(r)[wt] & bt;
        uint64_t zt = zrow(r)[wt] & bt;
        signs_[r] ^= (xc != 0) & (zt != 0) & ((xt != 0) == (zc != 0));
        if (xc) xrow(r)[wt] ^= bt;
        if (zt) zrow(r)[wc] ^= bc;
    }
}

void Tableau::apply_cz(uint32_t a, uint32_t b) {
    apply_h(b);
    apply_cnot(a, b);
    apply_h(b);
}

void Tableau::apply_pauli(uint32_t q, Pauli p) {
    if (p == Pauli::I) return;
    uint32_t w = q / 64;
    uint64_t bit = 1ull << (q % 64);
    for (uint32_t r = 0; r < 2 * n_; ++r) {
        bool x = xrow(r)[w] & bit;
        bool z = zrow(r)[w] & bit;
        bool anti = false;
        switch (p) {
            case Pauli::X: anti = z; break;
            case Pauli::Z: anti = x; break;
            case Pauli::Y: anti = x != z; break;
            case Pauli::I: break;
        }
        signs_[r] ^= anti;
    }
}

Tableau::MeasResult Tableau::measure_z(uint32_t q, uint8_t forced) {
    uint32_t w = q / 64;
    uint64_t bit = 1ull << (q % 64);

    uint32_t pivot = 2 * n_;
    for (uint32_t r = n_; r < 2 * n_; ++r) {
        if (xrow(r)[w] & bit) {
            pivot = r;
            break;
        }
    }

    if (pivot < 2 * n_) {
        // Random outcome: collapse onto the forced branch.
        for (uint32_t r = 0; r < 2 * n_; ++r) {
            if (r != pivot && (xrow(r)[w] & bit)) rowsum(r, pivot);
        }
        std::copy_n(xrow(pivot), words_, xrow(pivot - n_));
        std::copy_n(zrow(pivot), words_, zrow(pivot - n_));
        signs_[pivot - n_] = signs_[pivot];
        std::fill_n(xrow(pivot), words_, 0);
        std::fill_n(zrow(pivot), words_, 0);
        zrow(pivot)[w] = bit;
        signs_[pivot] = forced & 1;
        return {static_cast<uint8_t>(forced & 1), false};
    }

    // Deterministic outcome: accumulate the matching stabilizer rows in the scratch row.
    uint32_t scratch = 2 * n_;
    std::fill_n(xrow(scratch), words_, 0);
    std::fill_n(zrow(scratch), words_, 0);
    signs_[scratch] = 0;
    for (uint32_t r = 0; r < n_; ++r) {
        if (xrow(r)[w] & bit) rowsum(scratch, r + n_);
    }
    return {signs_[scratch], true};
}

Tableau::MeasResult Tableau::measure_x(uint32_t q, uint8_t forced) {
    apply_h(q);
    MeasResult r = measure_z(q, forced);
    apply_h(q);  // back to the computational frame, so q ends in an X eigenstate
    return r;
}

Tableau::MeasResult Tableau::measure_y(uint32_t q, uint8_t forced) {
    // Z = (SH)^dag Y (SH), so rotate by (SH)^dag = H S^3, read Z, rotate back.
    apply_s(q);
    apply_s(q);
    apply_s(q);
    apply_h(q);
    MeasResult r = measure_z(q, forced);
    apply_h(q);
    apply_s(q);
    return r;
}

std::optional<int> Tableau::deterministic_sign(const PauliString& p) const {
    if (p.n != n_) throw std::invalid_argument("deterministic_sign: qubit count mismatch");

    // Stabilizer row i appears in P's expansion over the generators iff P anticommutes
    // with destabilizer i. Accumulate that product and compare it with P.
    std::vector<uint64_t> sx(words_, 0), sz(words_, 0);
    int phase = 0;  // accumulated sign, kept mod 4 as in rowsum

    for (uint32_t r = 0; r < n_; ++r) {
        uint64_t parity = 0;
        const uint64_t* dx = xrow(r);
        const uint64_t* dz = zrow(r);
        for (uint32_t w = 0; w < words_; ++w) {
            parity ^= (dx[w] & p.z[w]) ^ (dz[w] & p.x[w]);
        }
        if (std::popcount(parity) % 2 == 0) continue;
        const uint32_t s = r + n_;
        phase += 2 * signs_[s] + g_words(xrow(s), zrow(s), sx.data(), sz.data(), words_);
        for (uint32_t w = 0; w < words_; ++w) {
            sx[w] ^= xrow(s)[w];
            sz[w] ^= zrow(s)[w];
        }
        phase &= 3;
    }

    for (uint32_t w = 0; w < words_; ++w) {
        if (sx[w] != p.x[w] || sz[w] != p.z[w]) return std::nullopt;
    }
    if (phase == 0) return +1;
    if (phase == 2) return -1;
    return std::nullopt;  // imaginary phase cannot occur for a Hermitian product
}

std::vector<Tableau::SignedPauli> Tableau::canonical_stabilizers() const {
    // Copy stabilizer rows into a scratch matrix and Gauss-reduce with phase tracking.
    struct Row {
        std::vector<uint64_t> x, z;
        uint8_t sign;
    };
    std::vector<Row> rows(n_);
    for (uint32_t r = 0; r < n_; ++r) {
        rows[r].x.assign(xrow(r + n_), xrow(r + n_) + words_);
        rows[r].z.assign(zrow(r + n_), zrow(r + n_) + words_);
        rows[r].sign = signs_[r + n_];
    }

    auto multiply_into = [&](Row& h, const Row& i) {
        int phase = 2 * h.sign + 2 * i.sign +
                    g_words(i.x.data(), i.z.data(), h.x.data(), h.z.data(), words_);
        phase &= 3;
        h.sign = static_cast<uint8_t>(phase >> 1);
        for (uint32_t w = 0; w < words_; ++w) {
            h.x[w] ^= i.x[w];
            h.z[w] ^= i.z[w];
        }
    };
    auto get_bit = [&](const std::vector<uint64_t>& v, uint32_t q) -> bool {
        return (v[q / 64] >> (q % 64)) & 1u;
    };

    uint32_t rank = 0;
    // X part first, then Z part, mirroring the usual canonical form for stabilizer states.
    for (int pass = 0; pass < 2; ++pass) {
        for (uint32_t q = 0; q < n_; ++q) {
            uint32_t found = n_;
            for (uint32_t r = rank; r < n_; ++r) {
                bool hit = pass == 0 ? get_bit(rows[r].x, q) : (!get_bit(rows[r].x, q) && get_bit(rows[r].z, q));
                if (hit) {
                    found = r;
                    break;
                }
            }
            if (found == n_) continue;
            std::swap(rows[rank], rows[found]);
            for (uint32_t r = 0; r < n_; ++r) {
                if (r == rank) continue;
                // Clearing the pivot column in every other row (any local Pauli in pass 1)
                // pins each row uniquely, so the reduced set is presentation-independent.
                bool hit = pass == 0 ? get_bit(rows[r].x, q) : get_bit(rows[r].z, q);
                if (hit) multiply_into(rows[r], rows[rank]);
            }
            ++rank;
        }
    }

    std::vector<SignedPauli> out;
    out.reserve(n_);
    for (uint32_t r = 0; r < n_; ++r) {
        SignedPauli sp;
        sp.word = PauliString(n_);
        sp.word.x = rows[r].x;
        sp.word.z = rows[r].z;
        sp.sign = rows[r].sign ? -1 : +1;
        out.push_back(std::move(sp));
    }
    std::sort(out.begin(), out.end(), [](const SignedPauli& a, const SignedPauli& b) {
        if (a.word.x != b.word.x) return a.word.x < b.word.x;
        if (a.word.z != b.word.z) return a.word.z < b.word.z;
        return a.sign < b.sign;
    });
    return out;
}

TableauRun run_tableau(const Circuit& c, const std::vector<FaultEffect>* faults,
                       const std::vector<uint8_t>* forced, Tableau* final_state) {
    Tableau t(c.n_qubits);
    TableauRun run;
    run.meas.resize(c.n_meas, {0, false});

    auto fault_of = [&](const GateEvent& ev) -> FaultEffect {
        if (!faults) return {};
        return (*faults)[ev.location_id];
    };

    for (const GateEvent& ev : c.events) {
        switch (ev.kind) {
            case GateKind::H: t.apply_h(ev.q0); break;
            case GateKind::S: t.apply_s(ev.q0); break;
            case GateKind::CNOT: t.apply_cnot(ev.q0, ev.q1); break;
            case GateKind::CZ: t.apply_cz(ev.q0, ev.q1); break;
            case GateKind::PREP_Z: break;  // fresh wires start in |0>
            case GateKind::PREP_X: t.apply_h(ev.q0); break;
            case GateKind::WAIT: break;
            case GateKind::MEAS_Z:
            case GateKind::MEAS_X:
            case GateKind::MEAS_Y: {
                FaultEffect f = fault_of(ev);  // pre-readout flip
                if (f.p0 != Pauli::I) t.apply_pauli(ev.q0, f.p0);
                uint8_t want = forced && ev.meas_index < forced->size() ? (*forced)[ev.meas_index] : 0;
                Tableau::MeasResult m{};
                if (ev.kind == GateKind::MEAS_Z) m = t.measure_z(ev.q0, want);
                if (ev.kind == GateKind::MEAS_X) m = t.measure_x(ev.q0, want);
                if (ev.kind == GateKind::MEAS_Y) m = t.measure_y(ev.q0, want);
                run.meas[ev.meas_index] = m;
                continue;  // measurement fault already consumed
            }
        }
        FaultEffect f = fault_of(ev);
        if (f.p0 != Pauli::I) t.apply_pauli(ev.q0, f.p0);
        if (f.p1 != Pauli::I) t.apply_pauli(ev.q1, f.p1);
    }

    if (final_state) *final_state = t;
    return run;
}

}  // namespace starsim
