#pragma once
// Closed-form leading-order model of the verified star-cluster scheme:
// residual channel, logical measurement error, connection statistics,
// threshold composition q(p), and resource counts. Every Monte Carlo
// estimator in estimators.hpp has its analytic counterpart here.

#include <cstdint>

#include "starsim/pauli.hpp"

namespace starsim {

// Threshold constant for one-way computation on the 3D cluster: a verified
// logical qubit is good enough when q stays below it. 3.3% is the standard
// value; 2.9% the conservative one.
inline constexpr double kDefaultThresholdConst = 0.033;
inline constexpr double kConservativeThresholdConst = 0.029;

// Fractions of the physical rate p carried by each residual Pauli component
// on one wire of an accepted verified block.
struct ChannelRatios {
  double r_x = 1.0 / 15.0;
  double r_y = 1.0 / 15.0;
  double r_z = 2.0 / 15.0;
};

struct LeadingChannel {
  double eps_x = 0.0;
  double eps_y = 0.0;
  double eps_z = 0.0;
  // Set when p lies outside [0, 0.05], the range over which the
  // leading-order channel has been checked against simulation.
  bool out_of_validated_range = false;
};

// Residual per-wire channel (eps_x, eps_y, eps_z) of a verified block.
LeadingChannel leading_channel(double p, const ChannelRatios& ratios = {});

// Effective flip probability of one cluster-qubit measurement before
// decoding: the residual components that anticommute with the measured
// basis, plus the readout flip 4p/15, plus storage tau*p.
double pq0(double p, Pauli basis = Pauli::X, double tau = 0.0,
           const ChannelRatios& ratios = {});

// Probability that independent wire flips at rate x defeat the distance-3
// decoder of the 7-wire block (any error of weight >= 2 miscorrects).
double f_steane(double x);

// Logical measurement error rate after decoding: f_steane(pq0).
double pq1(double p, Pauli basis = Pauli::X, double tau = 0.0,
           const ChannelRatios& ratios = {});

// Per-attempt connection success probability: no detected fault across the
// connection's 7 transversal CZ wire pairs and 28 single-wire exposures
// (residual leakage plus readout) on the four measured blocks.
double ps_analytic(double p, double tau = 0.0);

// Probability that a root with L leaves ends up with fewer than 4 verified
// links when each attempt succeeds independently with probability p_s.
// Requires L > 4; evaluated in log space so large L stays finite.
double pfail(uint32_t L, double p_s);

struct ThresholdReport {
  double p = 0.0;
  uint32_t L = 0;
  double tau = 0.0;
  double p_q0 = 0.0;
  double p_q1 = 0.0;
  double p_s = 0.0;
  double p_fail = 0.0;
  double q = 0.0;
  double threshold = kDefaultThresholdConst;
  double margin = 0.0;  // threshold - q
  bool verdict = false;  // margin > 0
};

// Effective logical measurement error of one assembled cluster qubit:
// q = pq1 * (1 + L) + pfail(L, p_s). Verdict compares against the
// threshold constant.
ThresholdReport q_of_p(double p, uint32_t L, double tau = 0.0,
                       double threshold_const = kDefaultThresholdConst);

struct LChoice {
  uint32_t L = 0;            // minimal L > 4 with pfail <= target
  double p_fail = 0.0;       // pfail at that L
  uint32_t q_minimizing_L = 0;
  double q_min = 0.0;        // q at the q-minimizing L
};

// Smallest admissible leaf count for a failure target, plus the L that
// minimizes q outright (more leaves cut pfail but feed the linear pq1 term).
// Fails loudly if no L <= 50 reaches the target.
LChoice choose_L(double p, double target_p_fail, double tau = 0.0);

struct ResourceEstimate {
  double p = 0.0;
  double q = 0.0;
  double omega = 0.0;
  double kappa = 0.0;  // kappa_prefactor * |ln(4q)| / 2
  double R = 0.0;      // [ln(10*omega) / kappa]^3
  double N = 0.0;      // operations per verified block attempt
  double K = 0.0;      // fault locations that must all stay clean
  double C = 0.0;      // N * (1 - p)^(-K), expected ops per accepted block
  double CR = 0.0;     // C * R, physical ops per logical cluster qubit
};

// Resource overhead for a computation of size omega at logical error q.
// Requires 0 < q < 0.25 (kappa's log must stay meaningful) and omega > 1.
// kappa_prefactor rescales kappa; 1 evaluates the formula as written.
ResourceEstimate resources(double p, double q, double omega, double N,
                           double K, double kappa_prefactor = 1.0);

}  // namespace starsim
