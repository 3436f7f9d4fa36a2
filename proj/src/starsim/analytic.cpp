#include "starsim/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace starsim {

LeadingChannel leading_channel(double p, const ChannelRatios& ratios) {
  LeadingChannel ch;
  ch.eps_x = ratios.r_x * p;
  ch.eps_y = ratios.r_y * p;
  ch.eps_z = ratios.r_z * p;
  ch.out_of_validated_range = !(p >= 0.0 && p <= 0.05);
  return ch;
}

double pq0(double p, Pauli basis, double tau, const ChannelRatios& ratios) {
  if (p < 0.0) throw std::invalid_argument("pq0 requires p >= 0");
  if (tau < 0.0) throw std::invalid_argument("pq0 requires tau >= 0");
  const LeadingChannel ch = leading_channel(p, ratios);
  const double p_meas = 4.0 * p / 15.0;
  double residual = 0.0;
  switch (basis) {
    case Pauli::X: residual = ch.eps_z + ch.eps_y; break;
    case Pauli::Z: residual = ch.eps_x + ch.eps_y; break;
    case Pauli::Y: residual = ch.eps_x + ch.eps_z; break;
    case Pauli::I:
      throw std::invalid_argument("pq0 requires a measurement basis X, Y, or Z");
  }
  return residual + p_meas + tau * p;
}

double f_steane(double x) {
  if (x < 0.0 || x > 1.0) throw std::invalid_argument("f_steane requires 0 <= x <= 1");
  const double s = 1.0 - x;
  const double s6 = s * s * s * s * s * s;
  return 1.0 - s6 * s - 7.0 * x * s6;
}

double pq1(double p, Pauli basis, double tau, const ChannelRatios& ratios) {
  return f_steane(pq0(p, basis, tau, ratios));
}

double ps_analytic(double p, double tau) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("ps_analytic requires 0 <= p <= 1");
  if (tau < 0.0) throw std::invalid_argument("ps_analytic requires tau >= 0");
  // Detectable mass per transversal CZ wire pair is 12p/15 (the 3 pairs
  // acting as pure gauge on the pre-measurement blocks escape); each of the
  // 28 single-wire exposures (residual leakage 4p/15 before readout, plus
  // readout flip 4p/15, folded over the four measured blocks) detects
  // independently at leading order.
  const double gate = 1.0 - 4.0 * p / 5.0;
  const double wire = 1.0 - (4.0 / 15.0 + tau) * p;
  double s = 1.0;
  for (int i = 0; i < 7; ++i) s *= gate;
  for (int i = 0; i < 28; ++i) s *= wire;
  return s < 0.0 ? 0.0 : s;
}

double pfail(uint32_t L, double p_s) {
  if (L <= 4) throw std::invalid_argument("pfail requires L > 4");
  if (p_s <= 0.0) return 1.0;
  if (p_s >= 1.0) return 0.0;
  const double ls = std::log(p_s);
  const double lf = std::log1p(-p_s);
  const double n = static_cast<double>(L);
  double sum = 0.0;
  for (uint32_t k = 0; k < 4; ++k) {
    const double kk = static_cast<double>(k);
    const double lchoose = std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) -
                           std::lgamma(n - kk + 1.0);
    sum += std::exp(lchoose + kk * ls + (n - kk) * lf);
  }
  return sum > 1.0 ? 1.0 : sum;
}

ThresholdReport q_of_p(double p, uint32_t L, double tau, double threshold_const) {
  if (threshold_const <= 0.0)
    throw std::invalid_argument("q_of_p requires a positive threshold constant");
  ThresholdReport r;
  r.p = p;
  r.L = L;
  r.tau = tau;
  r.p_q0 = pq0(p, Pauli::X, tau);
  r.p_q1 = f_steane(r.p_q0);
  r.p_s = ps_analytic(p, tau);
  r.p_fail = pfail(L, r.p_s);
  // 1 + L measured blocks feed one cluster-qubit readout: the root plus the
  // inner block of each verified link.
  r.q = r.p_q1 * (1.0 + static_cast<double>(L)) + r.p_fail;
  r.threshold = threshold_const;
  r.margin = r.threshold - r.q;
  r.verdict = r.margin > 0.0;
  return r;
}

LChoice choose_L(double p, double target_p_fail, double tau) {
  if (target_p_fail <= 0.0)
    throw std::invalid_argument("choose_L requires a positive failure target");
  constexpr uint32_t kMaxL = 50;
  const double p_s = ps_analytic(p, tau);
  LChoice choice;
  double best_q = std::numeric_limits<double>::infinity();
  for (uint32_t L = 5; L <= kMaxL; ++L) {
    const double pf = pfail(L, p_s);
    if (choice.L == 0 && pf <= target_p_fail) {
      choice.L = L;
      choice.p_fail = pf;
    }
    const double q = q_of_p(p, L, tau).q;
    if (q < best_q) {
      best_q = q;
      choice.q_minimizing_L = L;
      choice.q_min = q;
    }
  }
  if (choice.L == 0)
    throw std::runtime_error("choose_L: no L <= 50 reaches the failure target");
  return choice;
}

ResourceEstimate resources(double p, double q, double omega, double N,
                           double K, double kappa_prefactor) {
  if (!(q > 0.0 && q < 0.25))
    throw std::invalid_argument("resources requires 0 < q < 0.25");
  if (!(omega > 1.0))
    throw std::invalid_argument("resources requires omega > 1");
  if (!(p >= 0.0 && p < 1.0))
    throw std::invalid_argument("resources requires 0 <= p < 1");
  if (N <= 0.0 || K < 0.0)
    throw std::invalid_argument("resources requires N > 0 and K >= 0");
  if (kappa_prefactor <= 0.0)
    throw std::invalid_argument("resources requires a positive kappa prefactor");
  ResourceEstimate r;
  r.p = p;
  r.q = q;
  r.omega = omega;
  r.kappa = kappa_prefactor * std::abs(std::log(4.0 * q)) / 2.0;
  const double side = std::log(10.0 * omega) / r.kappa;
  r.R = side * side * side;
  r.N = N;
  r.K = K;
  r.C = N * std::pow(1.0 - p, -K);
  r.CR = r.C * r.R;
  return r;
}

}  // namespace starsim
