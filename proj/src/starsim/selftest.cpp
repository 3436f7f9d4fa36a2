#include "starsim/selftest.hpp"

#include <bit>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "starsim/analytic.hpp"
#include "starsim/frame.hpp"
#include "starsim/protocols.hpp"
#include "starsim/steane.hpp"
#include "starsim/tableau.hpp"

namespace starsim {
namespace {

std::string format(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  char buf[256];
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

// Exhaustive decode table check: every weight-0/1 flip word must decode
// cleanly, every weight-2 word must miscorrect into the logical coset, and
// every decode must land back in the code space.
SelftestCheck check_steane_distance() {
  SelftestCheck c{"steane-decode-enumeration", true, ""};
  int weight2_logical = 0;
  for (uint32_t w = 0; w < 128; ++w) {
    DecodeResult d = steane_decode(static_cast<uint8_t>(w));
    uint8_t corrected = static_cast<uint8_t>(w ^ steane_correction(d.syndrome));
    if (!steane_in_code(corrected)) {
      c.ok = false;
      c.detail = format("decode of %02x leaves the code space", w);
      return c;
    }
    int weight = std::popcount(w);
    if (weight <= 1 && d.logical) {
      c.ok = false;
      c.detail = format("weight-%d word %02x decodes to a logical error", weight, w);
      return c;
    }
    if (weight == 2) weight2_logical += d.logical ? 1 : 0;
  }
  if (weight2_logical != 21) {
    c.ok = false;
    c.detail = format("%d weight-2 miscorrections, expected all 21", weight2_logical);
    return c;
  }
  c.detail = "128 words: weight <= 1 clean, all 21 weight-2 words miscorrect";
  return c;
}

// f counts every weight >= 2 flip pattern as a decode failure; the 2^7
// enumeration of that event must match the closed form to numerical noise.
// The true decoder failure (weight-3 residues can land in the stabilizer
// subcode) is strictly smaller, which is checked as well: the model is
// conservative, and exact through second order.
SelftestCheck check_f_enumeration() {
  SelftestCheck c{"f-steane-enumeration", true, ""};
  double worst = 0.0;
  for (double x : {1e-3, 7.0 / 1500.0, 1e-2, 5e-2}) {
    double weight_ge2 = 0.0, decode_fail = 0.0;
    for (uint32_t w = 0; w < 128; ++w) {
      int k = std::popcount(w);
      double prob = std::pow(x, k) * std::pow(1.0 - x, 7 - k);
      if (k >= 2) weight_ge2 += prob;
      if (steane_decode(static_cast<uint8_t>(w)).logical) decode_fail += prob;
    }
    worst = std::max(worst, std::abs(weight_ge2 - f_steane(x)));
    if (decode_fail > f_steane(x) + 1e-15 || f_steane(x) - decode_fail > 60.0 * x * x * x) {
      c.ok = false;
      c.detail = format("decoder failure %.6e vs model %.6e at x = %g", decode_fail,
                        f_steane(x), x);
      return c;
    }
  }
  c.ok = worst <= 1e-12;
  c.detail = format("max |enumeration - closed form| = %.3e; decoder failure below model",
                    worst);
  return c;
}

SelftestCheck check_cross_validation(uint64_t seed) {
  SelftestCheck c{"engine-cross-validation", true, ""};
  std::mt19937_64 rng(seed);
  constexpr int kCircuits = 200;
  for (int i = 0; i < kCircuits; ++i) {
    uint32_t n = 2 + static_cast<uint32_t>(rng() % 19);  // 2..20 qubits
    Circuit circ = random_clifford_circuit(n, 40 + static_cast<uint32_t>(rng() % 41), rng());
    std::vector<FaultEffect> faults = random_fault_pattern(circ, 0.3, rng());
    std::string err = cross_validate(circ, faults);
    if (!err.empty()) {
      c.ok = false;
      c.detail = format("circuit %d (%u qubits): %s", i, n, err.c_str());
      return c;
    }
  }
  c.detail = format("%d randomized circuits (<= 20 qubits), frame == tableau", kCircuits);
  return c;
}

SelftestCheck check_stage_scan(const char* name, LogicalBasis basis, bool fresh) {
  SelftestCheck c{name, true, ""};
  NoiseModel nm = NoiseModel::from_mean_rate(0.01, 0.0);
  ScanReport r = scan_dv_stage(dv_stage(basis, fresh), nm);
  c.ok = r.accepted_logical == 0;
  c.detail = format("%llu single-fault sites, %llu accepted, %llu with logical error",
                    static_cast<unsigned long long>(r.sites),
                    static_cast<unsigned long long>(r.accepted),
                    static_cast<unsigned long long>(r.accepted_logical));
  return c;
}

SelftestCheck check_star_scan() {
  SelftestCheck c{"star-build-single-fault-scan", true, ""};
  NoiseModel nm = NoiseModel::from_mean_rate(0.01, 0.0);
  FlatStar fs = make_flat_star(2);
  ScanReport r = scan_flat_star(fs, nm);
  c.ok = r.accepted_logical == 0;
  c.detail = format("L=2 star, %llu sites, %llu accepted, %llu with logical error",
                    static_cast<unsigned long long>(r.sites),
                    static_cast<unsigned long long>(r.accepted),
                    static_cast<unsigned long long>(r.accepted_logical));
  return c;
}

SelftestCheck check_byproduct_rules() {
  SelftestCheck c{"byproduct-rules", true, ""};
  // Re-derives every rule from the exact tableau (the derivation itself
  // throws if any affine fit fails verification over all outcome patterns).
  const ConnectionRule& conn = connection_byproduct_rule();
  const AttachSeveranceRule& att = attach_severance_rule();
  const FailureSeveranceRule& fail = failure_severance_rule();
  bool ok = conn.alpha_mask == 0x05 && conn.beta_mask == 0x0a && att.beta_mask == 0x01 &&
            fail.beta_a_mask == 0x01 && fail.beta_b_mask == 0x08;
  c.ok = ok;
  c.detail = format("alpha=%02x beta=%02x attach=%02x failure=(%02x,%02x)", conn.alpha_mask,
                    conn.beta_mask, att.beta_mask, fail.beta_a_mask, fail.beta_b_mask);
  return c;
}

SelftestCheck check_noiseless_identity() {
  SelftestCheck c{"noiseless-identity", true, ""};
  NoiseModel nm = NoiseModel::from_mean_rate(0.0, 0.0);
  TrialCtx ctx;
  ctx.nm = &nm;
  ctx.seed = 0;
  ctx.trial = 0;
  DvResult r = run_dv(dv_stage(LogicalBasis::Plus, true), Block{}, ctx);
  if (!r.accepted || !r.out.is_identity()) {
    c.ok = false;
    c.detail = "noiseless verification must accept with an identity frame";
    return c;
  }
  StarClusterState star = build_star(3, ctx);
  bool clean = star.root.is_identity();
  for (const LeafChain& leaf : star.leaves)
    clean = clean && leaf.inner.is_identity() && leaf.end.is_identity();
  if (!clean || ctx.dv_rejections != 0) {
    c.ok = false;
    c.detail = "noiseless star build must leave identity frames with no rejections";
    return c;
  }
  StarClusterState partner = build_star(1, ctx);
  ConnectionOutcome out = connect(star, partner, star.next_leaf(), partner.next_leaf(), ctx);
  if (out.status != ConnectStatus::Success || out.root_error) {
    c.ok = false;
    c.detail = "noiseless connection must succeed without a root byproduct error";
    return c;
  }
  c.detail = "verification, star build and connection are exact at p = 0";
  return c;
}

}  // namespace

Circuit random_clifford_circuit(uint32_t n_qubits, uint32_t n_ops, uint64_t seed) {
  std::mt19937_64 rng(seed);
  Circuit c;
  const uint32_t base = c.alloc(n_qubits);
  // Wire discipline: prepare once, use while live, die at readout.
  std::vector<uint32_t> untouched, live;
  for (uint32_t q = 0; q < n_qubits; ++q) untouched.push_back(base + q);
  auto take = [&rng](std::vector<uint32_t>& pool) {
    size_t i = rng() % pool.size();
    uint32_t w = pool[i];
    pool[i] = pool.back();
    pool.pop_back();
    return w;
  };
  auto prep_one = [&] {
    uint32_t w = take(untouched);
    c.append(rng() % 2 ? GateKind::PREP_Z : GateKind::PREP_X, w);
    live.push_back(w);
  };
  for (uint32_t q = 0; q < (n_qubits + 1) / 2; ++q) prep_one();
  for (uint32_t i = 0; i < n_ops; ++i) {
    uint32_t roll = rng() % 100;
    if (!untouched.empty() && (roll < 15 || live.empty())) {
      prep_one();
    } else if (live.size() >= 2 && roll < 55) {
      uint32_t a = live[rng() % live.size()];
      uint32_t b = a;
      while (b == a) b = live[rng() % live.size()];
      c.append(rng() % 5 < 3 ? GateKind::CNOT : GateKind::CZ, a, b);
    } else if (!live.empty() && roll < 85) {
      c.append(rng() % 2 ? GateKind::H : GateKind::S, live[rng() % live.size()]);
    } else if (live.size() > 1) {  // keep at least one wire for the final readout
      uint32_t w = take(live);
      uint32_t m = rng() % 3;
      c.append(m == 0 ? GateKind::MEAS_Z : m == 1 ? GateKind::MEAS_X : GateKind::MEAS_Y, w);
    }
  }
  while (!live.empty()) c.append(GateKind::MEAS_Z, take(live));
  std::string err = c.validate();
  if (!err.empty()) throw std::logic_error("random_clifford_circuit: " + err);
  return c;
}

std::vector<FaultEffect> random_fault_pattern(const Circuit& c, double density, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<FaultEffect> faults(c.events.size());
  for (size_t i = 0; i < c.events.size(); ++i) {
    if (u01(rng) >= density) continue;
    const GateEvent& ev = c.events[i];
    FaultEffect f;
    f.p0 = make_pauli(rng() % 2, rng() % 2);
    if (is_two_qubit(ev.kind)) f.p1 = make_pauli(rng() % 2, rng() % 2);
    if (!f.any()) f.p0 = Pauli::X;
    faults[i] = f;
  }
  return faults;
}

std::string cross_validate(const Circuit& c, const std::vector<FaultEffect>& faults) {
  // On a random collapse the frame's flip bit is pure branch relabeling, so
  // the faulty tableau run is forced onto the frame's labeling (ideal ^ flip).
  // Random measurements then agree by construction; every deterministic
  // measurement ignores the forced value and must land on ideal ^ flip by
  // physics alone, which is the actual cross-check.
  TableauRun ideal = run_tableau(c);
  FrameRun frame = run_frame_injected(c, faults);
  std::vector<uint8_t> forced(c.n_meas);
  for (uint32_t m = 0; m < c.n_meas; ++m)
    forced[m] = static_cast<uint8_t>(ideal.meas[m].outcome ^ frame.flips[m]);
  TableauRun noisy = run_tableau(c, &faults, &forced);
  for (uint32_t m = 0; m < c.n_meas; ++m) {
    if (noisy.meas[m].deterministic != ideal.meas[m].deterministic)
      return format("measurement %u: branch structure diverged", m);
    if (noisy.meas[m].outcome != forced[m])
      return format("measurement %u: tableau outcome %d, frame predicts %d (deterministic=%d)",
                    m, noisy.meas[m].outcome, forced[m], noisy.meas[m].deterministic);
  }
  return "";
}

SelftestReport run_selftest(uint64_t seed) {
  SelftestReport rep;
  rep.checks.push_back(check_steane_distance());
  rep.checks.push_back(check_f_enumeration());
  rep.checks.push_back(check_cross_validation(seed));
  rep.checks.push_back(check_stage_scan("scan-plus-fresh", LogicalBasis::Plus, true));
  rep.checks.push_back(check_stage_scan("scan-plus-repeat", LogicalBasis::Plus, false));
  rep.checks.push_back(check_stage_scan("scan-zero-fresh", LogicalBasis::Zero, true));
  rep.checks.push_back(check_stage_scan("scan-zero-repeat", LogicalBasis::Zero, false));
  rep.checks.push_back(check_star_scan());
  rep.checks.push_back(check_byproduct_rules());
  rep.checks.push_back(check_noiseless_identity());
  for (const SelftestCheck& c : rep.checks) rep.all_ok = rep.all_ok && c.ok;
  return rep;
}

}  // namespace starsim
