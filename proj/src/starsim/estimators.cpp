#include "estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "steane.hpp"

namespace starsim {

double normal_quantile(double prob) {
    if (!(prob > 0.0 && prob < 1.0)) throw std::invalid_argument("normal_quantile requires 0 < prob < 1");
    // Acklam's rational approximation.
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    const double plow = 0.02425;
    double q, r;
    if (prob < plow) {
        q = std::sqrt(-2.0 * std::log(prob));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (prob > 1.0 - plow) {
        q = std::sqrt(-2.0 * std::log(1.0 - prob));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = prob - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

std::pair<double, double> wilson_interval(uint64_t successes, uint64_t trials, double confidence) {
    if (successes > trials) throw std::invalid_argument("wilson_interval requires successes <= trials");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("wilson_interval requires 0 < confidence < 1");
    if (trials == 0) return {0.0, 1.0};
    double z = normal_quantile(0.5 + confidence / 2.0);
    double n = static_cast<double>(trials);
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = (z / denom) * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

RateEstimate make_rate_estimate(uint64_t successes, uint64_t trials, double confidence) {
    RateEstimate r;
    r.successes = successes;
    r.trials = trials;
    r.confidence = confidence;
    r.point = trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
    auto [lo, hi] = wilson_interval(successes, trials, confidence);
    r.ci_low = lo;
    r.ci_high = hi;
    return r;
}

double log_log_slope(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw std::invalid_argument("log_log_slope requires >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [p, rate] : points) {
        if (!(p > 0.0) || !(rate > 0.0))
            throw std::invalid_argument("log_log_slope requires positive coordinates");
        double x = std::log(p), y = std::log(rate);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(points.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

constexpr uint64_t kEstimatorRetryCap = 10'000'000;

// Contiguous trial chunks, one per worker; partial tallies merged in worker order so the
// totals are independent of the worker count.
template <typename Tally, typename Fn>
Tally sharded(uint64_t trials, unsigned workers, Fn&& fn) {
    if (workers <= 1 || trials == 0) return fn(0, trials);
    uint64_t chunk = (trials + workers - 1) / workers;
    std::vector<Tally> parts(workers);
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) {
        uint64_t t0 = static_cast<uint64_t>(w) * chunk;
        uint64_t t1 = std::min(trials, t0 + chunk);
        if (t0 >= t1) break;
        threads.emplace_back([&parts, &fn, w, t0, t1] { parts[w] = fn(t0, t1); });
    }
    for (auto& t : threads) t.join();
    Tally total;
    for (const Tally& part : parts) total.merge(part);
    return total;
}

struct BlockTally {
    uint64_t trials = 0;
    uint64_t accepted = 0;
    std::array<std::array<uint64_t, 3>, 7> comp{};  // [wire][X,Y,Z]
    std::array<std::array<uint64_t, 7>, 7> joint{};

    void merge(const BlockTally& o) {
        trials += o.trials;
        accepted += o.accepted;
        for (int w = 0; w < 7; ++w)
            for (int k = 0; k < 3; ++k) comp[w][k] += o.comp[w][k];
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) joint[i][j] += o.joint[i][j];
    }
};

BlockTally tally_residual_blocks(double p, uint64_t t0, uint64_t t1, uint64_t seed,
                                 LogicalBasis basis) {
    NoiseModel nm = NoiseModel::from_mean_rate(p, 0.0);
    const DvStage& stage = dv_stage(basis, true);
    BlockTally tally;
    for (uint64_t t = t0; t < t1; ++t) {
        TrialCtx ctx;
        ctx.nm = &nm;
        ctx.seed = seed;
        ctx.trial = t;
        ++tally.trials;
        DvResult r = run_dv(stage, Block{}, ctx);
        if (!r.accepted) continue;
        ++tally.accepted;
        Block b = r.out;
        reduce_block_gauge(b.fx, b.fz, basis);
        uint8_t any = 0;
        for (int w = 0; w < 7; ++w) {
            uint8_t x = (b.fx >> w) & 1;
            uint8_t z = (b.fz >> w) & 1;
            if (!x && !z) continue;
            any |= static_cast<uint8_t>(1u << w);
            int k = (x && z) ? 1 : (x ? 0 : 2);
            ++tally.comp[w][static_cast<size_t>(k)];
        }
        for (int i = 0; i < 7; ++i) {
            if (!((any >> i) & 1)) continue;
            for (int j = i + 1; j < 7; ++j)
                if ((any >> j) & 1) ++tally.joint[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
    }
    return tally;
}

}  // namespace

ChannelEstimate estimate_residual_channel(double p, uint64_t trials, uint64_t seed,
                                          unsigned workers, double confidence, LogicalBasis basis) {
    if (trials < 1) throw std::invalid_argument("estimate_residual_channel requires trials >= 1");
    BlockTally tally = sharded<BlockTally>(trials, workers, [&](uint64_t t0, uint64_t t1) {
        return tally_residual_blocks(p, t0, t1, seed, basis);
    });
    ChannelEstimate est;
    est.trials = tally.trials;
    est.accepted = tally.accepted;
    est.confidence = confidence;
    est.acceptance = make_rate_estimate(tally.accepted, tally.trials, confidence);
    est.joint = tally.joint;
    std::array<uint64_t, 3> pooled{};
    for (int w = 0; w < 7; ++w) {
        for (int k = 0; k < 3; ++k) {
            uint64_t c = tally.comp[static_cast<size_t>(w)][static_cast<size_t>(k)];
            pooled[static_cast<size_t>(k)] += c;
            est.per_wire[static_cast<size_t>(w)][static_cast<size_t>(k)] =
                make_rate_estimate(c, tally.accepted, confidence);
        }
    }
    for (int k = 0; k < 3; ++k)
        est.pooled[static_cast<size_t>(k)] =
            make_rate_estimate(pooled[static_cast<size_t>(k)], 7 * tally.accepted, confidence);
    return est;
}

namespace {

struct LogicalTally {
    uint64_t trials = 0;
    uint64_t accepted = 0;
    uint64_t errors = 0;
    void merge(const LogicalTally& o) {
        trials += o.trials;
        accepted += o.accepted;
        errors += o.errors;
    }
};

}  // namespace

LogicalErrorEstimate estimate_logical_measurement_error(double p, uint64_t trials, uint64_t seed,
                                                        GateKind meas, unsigned workers,
                                                        double confidence) {
    if (trials < 1)
        throw std::invalid_argument("estimate_logical_measurement_error requires trials >= 1");
    LogicalBasis basis = meas == GateKind::MEAS_Z ? LogicalBasis::Zero : LogicalBasis::Plus;
    LogicalTally tally = sharded<LogicalTally>(trials, workers, [&](uint64_t t0, uint64_t t1) {
        NoiseModel nm = NoiseModel::from_mean_rate(p, 0.0);
        const DvStage& stage = dv_stage(basis, true);
        LogicalTally part;
        for (uint64_t t = t0; t < t1; ++t) {
            TrialCtx ctx;
            ctx.nm = &nm;
            ctx.seed = seed;
            ctx.trial = t;
            ++part.trials;
            DvResult r = run_dv(stage, Block{}, ctx);
            if (!r.accepted) continue;
            ++part.accepted;
            Block b = r.out;
            reduce_block_gauge(b.fx, b.fz, basis);
            uint8_t flips = measure_block(b, meas, ctx);
            if (steane_decode(flips).logical) ++part.errors;
        }
        return part;
    });
    LogicalErrorEstimate est;
    est.error = make_rate_estimate(tally.errors, tally.accepted, confidence);
    est.acceptance = make_rate_estimate(tally.accepted, tally.trials, confidence);
    return est;
}

namespace {

struct ConnectTally {
    uint64_t trials = 0;
    uint64_t attempts = 0;
    uint64_t successes = 0;
    uint64_t failed_trials = 0;
    uint64_t cond_readouts = 0;
    uint64_t cond_errors = 0;
    void merge(const ConnectTally& o) {
        trials += o.trials;
        attempts += o.attempts;
        successes += o.successes;
        failed_trials += o.failed_trials;
        cond_readouts += o.cond_readouts;
        cond_errors += o.cond_errors;
    }
};

}  // namespace

ConnectionStats estimate_connection_stats(double p, uint32_t L, uint64_t trials, uint64_t seed,
                                          unsigned workers, double confidence) {
    if (trials < 1) throw std::invalid_argument("estimate_connection_stats requires trials >= 1");
    if (L < 1) throw std::invalid_argument("estimate_connection_stats requires L >= 1");
    constexpr uint32_t kLinksPerRoot = 4;
    ConnectTally tally = sharded<ConnectTally>(trials, workers, [&](uint64_t t0, uint64_t t1) {
        NoiseModel nm = NoiseModel::from_mean_rate(p, 0.0);
        ConnectTally part;
        for (uint64_t t = t0; t < t1; ++t) {
            TrialCtx ctx;
            ctx.nm = &nm;
            ctx.seed = seed;
            ctx.trial = t;
            ++part.trials;
            StarClusterState star = build_star(L, ctx);
            uint32_t links = 0;
            while (links < kLinksPerRoot && star.next_leaf() < star.L) {
                // Partner roots never limit the retry budget: each attempt faces a fresh
                // single-leaf neighbor, while this root spends its own leaves.
                StarClusterState partner = build_star(1, ctx);
                ConnectionOutcome out = connect(star, partner, star.next_leaf(), 0, ctx);
                ++part.attempts;
                if (out.status == ConnectStatus::Success) {
                    ++part.successes;
                    ++links;
                    part.cond_readouts += 2;
                    part.cond_errors += (out.end_error_a ? 1 : 0) + (out.end_error_b ? 1 : 0);
                }
            }
            if (links < kLinksPerRoot) ++part.failed_trials;
        }
        return part;
    });
    ConnectionStats stats;
    stats.p_s = make_rate_estimate(tally.successes, tally.attempts, confidence);
    stats.p_fail = make_rate_estimate(tally.failed_trials, tally.trials, confidence);
    stats.conditional = make_rate_estimate(tally.cond_errors, tally.cond_readouts, confidence);
    stats.attempts = tally.attempts;
    stats.mean_attempts_per_trial =
        tally.trials ? static_cast<double>(tally.attempts) / static_cast<double>(tally.trials) : 0.0;
    return stats;
}

namespace {

struct CondTally {
    uint64_t attempts = 0;
    uint64_t accepted = 0;
    uint64_t errors = 0;
    void merge(const CondTally& o) {
        attempts += o.attempts;
        accepted += o.accepted;
        errors += o.errors;
    }
};

}  // namespace

ConditionalStats estimate_conditional_error(double p, uint64_t attempts, uint64_t seed,
                                            unsigned workers, double confidence) {
    if (attempts < 1) throw std::invalid_argument("estimate_conditional_error requires attempts >= 1");
    CondTally tally = sharded<CondTally>(attempts, workers, [&](uint64_t a0, uint64_t a1) {
        NoiseModel nm = NoiseModel::from_mean_rate(p, 0.0);
        const DvStage& redv = dv_stage(LogicalBasis::Plus, false);
        CondTally part;
        for (uint64_t a = a0; a < a1; ++a) {
            TrialCtx ctx;
            ctx.nm = &nm;
            ctx.seed = seed;
            ctx.trial = a;
            // Reproduces the lineage of an end block at connection time: verified
            // pair (both sides re-verified), then the inner attached to a verified
            // root and re-verified. A rejected attach severs the pair in the real
            // build, so here the whole side is rebuilt; the end ensemble only sees
            // the acceptance conditioning.
            auto make_end = [&]() {
                for (uint64_t tries = 0; tries < kEstimatorRetryCap; ++tries) {
                    PairBlocks pair;
                    if (!try_build_two_qubit_cluster(ctx, pair)) continue;
                    Block root = make_verified_block(LogicalBasis::Plus, ctx);
                    apply_noisy_transversal_cz(root, pair.a, ctx);
                    if (!run_dv(redv, pair.a, ctx).accepted) continue;
                    return pair.b;
                }
                throw std::runtime_error("estimate_conditional_error: end block never accepted");
            };
            Block ea = make_end();
            Block eb = make_end();
            apply_noisy_transversal_cz(ea, eb, ctx);
            uint8_t wa = measure_block(ea, GateKind::MEAS_X, ctx);
            uint8_t wb = measure_block(eb, GateKind::MEAS_X, ctx);
            ++part.attempts;
            DecodeResult da = steane_decode(wa);
            DecodeResult db = steane_decode(wb);
            if (da.syndrome == 0 && db.syndrome == 0) {
                ++part.accepted;
                part.errors += (da.logical ? 1 : 0) + (db.logical ? 1 : 0);
            }
        }
        return part;
    });
    ConditionalStats stats;
    stats.conditional = make_rate_estimate(tally.errors, 2 * tally.accepted, confidence);
    stats.acceptance = make_rate_estimate(tally.accepted, tally.attempts, confidence);
    return stats;
}

namespace {

struct PairTally {
    uint64_t trials = 0;
    uint64_t accepted = 0;
    std::array<uint64_t, 14> wire{};
    void merge(const PairTally& o) {
        trials += o.trials;
        accepted += o.accepted;
        for (int w = 0; w < 14; ++w) wire[static_cast<size_t>(w)] += o.wire[static_cast<size_t>(w)];
    }
};

}  // namespace

PairHomogeneity estimate_pair_homogeneity(double p, uint64_t trials, uint64_t seed,
                                          unsigned workers, double confidence) {
    if (trials < 1) throw std::invalid_argument("estimate_pair_homogeneity requires trials >= 1");
    PairTally tally = sharded<PairTally>(trials, workers, [&](uint64_t t0, uint64_t t1) {
        NoiseModel nm = NoiseModel::from_mean_rate(p, 0.0);
        PairTally part;
        for (uint64_t t = t0; t < t1; ++t) {
            TrialCtx ctx;
            ctx.nm = &nm;
            ctx.seed = seed;
            ctx.trial = t;
            ++part.trials;
            PairBlocks pair;
            if (!try_build_two_qubit_cluster(ctx, pair)) continue;
            ++part.accepted;
            for (int w = 0; w < 7; ++w) {
                if (((pair.a.fx | pair.a.fz) >> w) & 1) ++part.wire[static_cast<size_t>(w)];
                if (((pair.b.fx | pair.b.fz) >> w) & 1) ++part.wire[static_cast<size_t>(7 + w)];
            }
        }
        return part;
    });
    PairHomogeneity est;
    est.trials = tally.trials;
    est.accepted = tally.accepted;
    est.confidence = confidence;
    est.acceptance = make_rate_estimate(tally.accepted, tally.trials, confidence);
    for (int w = 0; w < 14; ++w)
        est.wire_error[static_cast<size_t>(w)] =
            make_rate_estimate(tally.wire[static_cast<size_t>(w)], tally.accepted, confidence);
    return est;
}

CorrelationReport correlation_diagnostic(double p, uint64_t trials, uint64_t seed, unsigned workers,
                                         double confidence) {
    if (trials < 1) throw std::invalid_argument("correlation_diagnostic requires trials >= 1");
    if (p > 0.05) throw std::invalid_argument("correlation_diagnostic requires p <= 0.05");
    BlockTally tally = sharded<BlockTally>(trials, workers, [&](uint64_t t0, uint64_t t1) {
        return tally_residual_blocks(p, t0, t1, seed, LogicalBasis::Plus);
    });
    CorrelationReport rep;
    rep.trials = tally.trials;
    rep.accepted = tally.accepted;
    rep.confidence = confidence;
    rep.acceptance = make_rate_estimate(tally.accepted, tally.trials, confidence);
    std::array<uint64_t, 7> any{};
    for (int w = 0; w < 7; ++w) {
        for (int k = 0; k < 3; ++k)
            any[static_cast<size_t>(w)] += tally.comp[static_cast<size_t>(w)][static_cast<size_t>(k)];
        rep.marginal[static_cast<size_t>(w)] =
            make_rate_estimate(any[static_cast<size_t>(w)], tally.accepted, confidence);
    }
    double n = tally.accepted ? static_cast<double>(tally.accepted) : 1.0;
    for (int i = 0; i < 7; ++i) {
        for (int j = i + 1; j < 7; ++j) {
            CorrelationReport::PairStat ps;
            ps.i = i;
            ps.j = j;
            ps.joint_count = tally.joint[static_cast<size_t>(i)][static_cast<size_t>(j)];
            ps.joint = static_cast<double>(ps.joint_count) / n;
            ps.product = rep.marginal[static_cast<size_t>(i)].point *
                         rep.marginal[static_cast<size_t>(j)].point;
            ps.excess = std::abs(ps.joint - ps.product);
            double base = std::max(ps.joint, ps.product);
            ps.sigma = std::sqrt(base * (1.0 - std::min(1.0, base)) / n);
            ps.within = ps.excess <= 0.1 * ps.product + 3.0 * ps.sigma;
            rep.pairs.push_back(ps);
        }
    }
    return rep;
}

}  // namespace starsim
