#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "pauli.hpp"
#include "protocols.hpp"

namespace starsim {

// Wilson score interval; trials = 0 yields the vacuous (0, 1).
std::pair<double, double> wilson_interval(uint64_t successes, uint64_t trials, double confidence);

// Quantile of the standard normal (Acklam's rational approximation, |error| < 1.2e-8).
double normal_quantile(double prob);

struct RateEstimate {
    uint64_t successes = 0;
    uint64_t trials = 0;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double confidence = 0.99;
};

RateEstimate make_rate_estimate(uint64_t successes, uint64_t trials, double confidence = 0.99);

// Residual-channel tally of one accepted verified block per trial attempt: per-wire and
// pooled Pauli-component rates over accepted trials, plus pairwise joint error counts.
struct ChannelEstimate {
    uint64_t trials = 0;
    uint64_t accepted = 0;
    RateEstimate acceptance;
    // index 0 = X, 1 = Y, 2 = Z
    std::array<RateEstimate, 3> pooled;
    std::array<std::array<RateEstimate, 3>, 7> per_wire;
    // joint[i][j] (i < j): trials where wires i and j both carry a non-identity component
    std::array<std::array<uint64_t, 7>, 7> joint{};
    double confidence = 0.99;
};

ChannelEstimate estimate_residual_channel(double p, uint64_t trials, uint64_t seed,
                                          unsigned workers = 1, double confidence = 0.99,
                                          LogicalBasis basis = LogicalBasis::Plus);

// Verified block -> transversal readout -> ideal decode; error iff the decoded logical
// bit differs from the fault-free value. Denominator is the number of accepted blocks.
struct LogicalErrorEstimate {
    RateEstimate error;       // decode errors / accepted
    RateEstimate acceptance;  // accepted / trials
};

LogicalErrorEstimate estimate_logical_measurement_error(double p, uint64_t trials, uint64_t seed,
                                                        GateKind meas = GateKind::MEAS_X,
                                                        unsigned workers = 1,
                                                        double confidence = 0.99);

// Full star workflow: build one L-leaf star per trial, then make four links against fresh
// single-leaf partners, consuming one leaf per attempt. p_s pools attempt successes,
// p_fail counts trials with fewer than four links after leaf exhaustion, conditional pools
// decoded end-readout errors over the accepted attempts (two readouts each).
struct ConnectionStats {
    RateEstimate p_s;
    RateEstimate p_fail;
    RateEstimate conditional;
    uint64_t attempts = 0;
    double mean_attempts_per_trial = 0.0;
};

ConnectionStats estimate_connection_stats(double p, uint32_t L, uint64_t trials, uint64_t seed,
                                          unsigned workers = 1, double confidence = 0.99);

// Conditional verified-measurement error on the connection lineage, detached from the
// star bookkeeping: each side builds a verified pair, attaches its inner block to a
// verified root and re-verifies it (rebuilding the side when the attach is rejected,
// which conditions the end ensemble exactly like the star build), then the two end
// blocks are CZ-joined, X-read, and postselected on both syndromes being clean.
// `attempts` counts connection attempts; acceptance is the clean-syndrome rate.
struct ConditionalStats {
    RateEstimate conditional;  // decode errors per readout, among accepted attempts
    RateEstimate acceptance;   // both-syndromes-clean rate per attempt
};

ConditionalStats estimate_conditional_error(double p, uint64_t attempts, uint64_t seed,
                                            unsigned workers = 1, double confidence = 0.99);

// Per-wire any-error marginals across the 14 wires of an accepted two-qubit cluster,
// one build attempt per trial.
struct PairHomogeneity {
    uint64_t trials = 0;
    uint64_t accepted = 0;
    RateEstimate acceptance;
    std::array<RateEstimate, 14> wire_error;
    double confidence = 0.99;
};

PairHomogeneity estimate_pair_homogeneity(double p, uint64_t trials, uint64_t seed,
                                          unsigned workers = 1, double confidence = 0.99);

// Pairwise independence report over the 21 wire pairs of a verified block.
struct CorrelationReport {
    struct PairStat {
        int i = 0, j = 0;
        uint64_t joint_count = 0;
        double joint = 0.0;      // P(error on i and j)
        double product = 0.0;    // P(i) * P(j)
        double excess = 0.0;     // |joint - product|
        double sigma = 0.0;      // binomial sigma of the joint estimate
        bool within = false;     // excess <= 0.1 * product + 3 sigma
    };
    uint64_t trials = 0;
    uint64_t accepted = 0;
    RateEstimate acceptance;
    std::array<RateEstimate, 7> marginal;
    std::vector<PairStat> pairs;
    double confidence = 0.99;
};

CorrelationReport correlation_diagnostic(double p, uint64_t trials, uint64_t seed,
                                         unsigned workers = 1, double confidence = 0.99);

// Least-squares slope of log(rate) vs log(p); points with zero rate are rejected.
double log_log_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace starsim
