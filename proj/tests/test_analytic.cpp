#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "starsim/analytic.hpp"
#include "starsim/steane.hpp"

using namespace starsim;

TEST_CASE("leading channel carries the 1:1:2 component split") {
    LeadingChannel ch = leading_channel(0.015);
    CHECK(ch.eps_x == doctest::Approx(0.015 / 15.0).epsilon(1e-12));
    CHECK(ch.eps_y == doctest::Approx(0.015 / 15.0).epsilon(1e-12));
    CHECK(ch.eps_z == doctest::Approx(2.0 * 0.015 / 15.0).epsilon(1e-12));
    CHECK_FALSE(ch.out_of_validated_range);
    CHECK(leading_channel(0.08).out_of_validated_range);
}

TEST_CASE("pq0 sums the anticommuting components plus readout and storage") {
    // X basis sees Y+Z residuals (3p/15) plus the 4p/15 readout flip
    CHECK(pq0(0.01) == doctest::Approx(7.0 * 0.01 / 15.0).epsilon(1e-12));
    CHECK(pq0(0.01, Pauli::X) == doctest::Approx(0.004666666666666666).epsilon(1e-12));
    // Z basis sees X+Y residuals (2p/15) plus readout
    CHECK(pq0(0.01, Pauli::Z) == doctest::Approx(6.0 * 0.01 / 15.0).epsilon(1e-12));
    // Y basis sees X+Z residuals (3p/15) plus readout
    CHECK(pq0(0.01, Pauli::Y) == doctest::Approx(7.0 * 0.01 / 15.0).epsilon(1e-12));
    // storage adds tau * p
    CHECK(pq0(0.01, Pauli::X, 2.0) ==
          doctest::Approx(7.0 * 0.01 / 15.0 + 2.0 * 0.01).epsilon(1e-12));
    CHECK(pq0(0.0) == 0.0);
    CHECK_THROWS_AS(pq0(-0.01), std::invalid_argument);
    CHECK_THROWS_AS(pq0(0.01, Pauli::I), std::invalid_argument);
    CHECK_THROWS_AS(pq0(0.01, Pauli::X, -1.0), std::invalid_argument);
}

TEST_CASE("f_steane matches the exhaustive 128-pattern enumeration") {
    // The model charges every weight >= 2 flip pattern as a failure; the true
    // decoder fails on slightly fewer patterns (some weight >= 3 sets decode
    // clean), so enumeration pins f_steane exactly and bounds the gap at O(x^3).
    auto enumerate = [](double x, bool decoder) {
        double total = 0.0;
        for (int e = 0; e < 128; ++e) {
            int w = __builtin_popcount(static_cast<unsigned>(e));
            bool fails = decoder ? steane_decode(static_cast<uint8_t>(e)).logical != 0 : w >= 2;
            if (fails) total += std::pow(x, w) * std::pow(1.0 - x, 7 - w);
        }
        return total;
    };
    for (double x : {0.001, 0.004666666666666666, 0.01, 0.05, 0.1, 0.3, 0.5}) {
        CHECK(f_steane(x) == doctest::Approx(enumerate(x, false)).epsilon(1e-12));
        double decode_fail = enumerate(x, true);
        CHECK(decode_fail <= f_steane(x) + 1e-15);
        CHECK(f_steane(x) - decode_fail <= 60.0 * x * x * x);
    }
    CHECK(f_steane(0.0) == 0.0);
    CHECK(f_steane(0.004666666666666666) ==
          doctest::Approx(0.0004502688722247475).epsilon(1e-12));
    // 21 weight-2 patterns dominate as x -> 0
    CHECK(f_steane(1e-7) == doctest::Approx(21e-14).epsilon(1e-3));
    CHECK_THROWS_AS(f_steane(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(f_steane(1.1), std::invalid_argument);
}

TEST_CASE("pq1 composes f_steane with pq0") {
    CHECK(pq1(0.01) == doctest::Approx(f_steane(pq0(0.01))).epsilon(1e-15));
    CHECK(pq1(0.02, Pauli::Z, 1.0) ==
          doctest::Approx(f_steane(pq0(0.02, Pauli::Z, 1.0))).epsilon(1e-15));
    CHECK(pq1(0.01) == doctest::Approx(0.0004502688722247475).epsilon(1e-12));
}

TEST_CASE("connection success probability") {
    CHECK(ps_analytic(0.0) == 1.0);
    CHECK(ps_analytic(0.01) == doctest::Approx(0.8772251417833032).epsilon(1e-14));
    CHECK(ps_analytic(0.02) == doctest::Approx(0.76901973188775785).epsilon(1e-14));
    // (1 - 4p/5)^7 * (1 - (4/15 + tau) p)^28, checked against the factored form
    double p = 0.013, tau = 1.7;
    CHECK(ps_analytic(p, tau) ==
          doctest::Approx(std::pow(1.0 - 0.8 * p, 7) *
                          std::pow(1.0 - (4.0 / 15.0 + tau) * p, 28))
              .epsilon(1e-12));
    CHECK(ps_analytic(0.02) > ps_analytic(0.02, 1.0));
    CHECK_THROWS_AS(ps_analytic(-0.1), std::invalid_argument);
    CHECK_THROWS_AS(ps_analytic(1.5), std::invalid_argument);
    CHECK_THROWS_AS(ps_analytic(0.01, -1.0), std::invalid_argument);
}

TEST_CASE("pfail values, limits, and monotonicity") {
    double ps1 = ps_analytic(0.01);
    CHECK(pfail(7, ps1) == doctest::Approx(0.005840584417682722).epsilon(1e-12));
    CHECK(pfail(9, ps1) == doctest::Approx(0.00020627189690258343).epsilon(1e-12));
    CHECK(pfail(5, 1.0) == 0.0);
    CHECK(pfail(5, 0.0) == 1.0);
    // more leaves or better links always help
    for (uint32_t L = 5; L < 12; ++L) CHECK(pfail(L + 1, ps1) < pfail(L, ps1));
    CHECK(pfail(7, 0.9) < pfail(7, 0.8));
    CHECK_THROWS_AS(pfail(4, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(pfail(0, 0.9), std::invalid_argument);
}

TEST_CASE("q_of_p composes the logical error of an assembled cluster qubit") {
    ThresholdReport r1 = q_of_p(0.01, 7);
    CHECK(r1.q == doctest::Approx(0.009442735395480701).epsilon(1e-12));
    CHECK(r1.margin == doctest::Approx(0.0235572646045193).epsilon(1e-10));
    CHECK(r1.verdict);
    CHECK(r1.p_q1 == doctest::Approx(pq1(0.01)).epsilon(1e-15));
    CHECK(r1.p_s == doctest::Approx(ps_analytic(0.01)).epsilon(1e-15));
    CHECK(r1.p_fail == doctest::Approx(pfail(7, r1.p_s)).epsilon(1e-15));
    CHECK(r1.q == doctest::Approx(r1.p_q1 * 8.0 + r1.p_fail).epsilon(1e-12));

    ThresholdReport r2 = q_of_p(0.02, 9);
    CHECK(r2.q == doctest::Approx(0.024338368701263196).epsilon(1e-12));
    CHECK(r2.verdict);

    // q grows with p at fixed L
    double prev = 0.0;
    for (double p : {0.002, 0.005, 0.01, 0.015, 0.02}) {
        double q = q_of_p(p, 7).q;
        CHECK(q > prev);
        prev = q;
    }
    // a conservative threshold shrinks the margin, never the q
    ThresholdReport rc = q_of_p(0.02, 9, 0.0, kConservativeThresholdConst);
    CHECK(rc.q == r2.q);
    CHECK(rc.margin < r2.margin);
    CHECK_THROWS_AS(q_of_p(0.01, 7, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("choose_L balances failure probability against leaf overhead") {
    LChoice c = choose_L(0.01, 1e-3);
    CHECK(c.L == 9);
    CHECK(c.p_fail == doctest::Approx(0.00020627189690258343).epsilon(1e-12));
    CHECK(c.q_minimizing_L == 9);
    CHECK(c.q_min == doctest::Approx(q_of_p(0.01, 9).q).epsilon(1e-12));
    CHECK(choose_L(0.0, 1e-3).L == 5);  // perfect links: smallest admissible star
    CHECK_THROWS_AS(choose_L(0.01, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(choose_L(0.2, 1e-12), std::runtime_error);  // no L <= 50 suffices
}

TEST_CASE("resource estimate reproduces the frozen example") {
    ResourceEstimate r = resources(0.01, q_of_p(0.01, 7).q, 1e21, 2e4, 600);
    CHECK(r.kappa == doctest::Approx(1.6381076066043097).epsilon(1e-12));
    CHECK(r.R == doctest::Approx(29572.485506126934).epsilon(1e-12));
    CHECK(r.C == doctest::Approx(8.31598e6).epsilon(1e-4));
    CHECK(r.CR == doctest::Approx(2.45924e11).epsilon(1e-4));
    CHECK(r.N == 2e4);
    CHECK(r.K == 600);

    // kappa_prefactor rescales kappa linearly and R by its cube
    ResourceEstimate half = resources(0.01, q_of_p(0.01, 7).q, 1e21, 2e4, 600, 0.5);
    CHECK(half.kappa == doctest::Approx(0.5 * r.kappa).epsilon(1e-12));
    CHECK(half.R == doctest::Approx(8.0 * r.R).epsilon(1e-12));

    // composed with the census of a 7-leaf star at p = 1%
    ResourceEstimate big = resources(0.01, q_of_p(0.01, 7).q, 1e21,
                                     41068.291869183224, 856);
    CHECK(big.C == doctest::Approx(223758769.12340108).epsilon(1e-10));
    CHECK(big.CR == doctest::Approx(6617102956770.581).epsilon(1e-10));

    CHECK_THROWS_AS(resources(0.01, 0.3, 1e21, 2e4, 600), std::invalid_argument);
    CHECK_THROWS_AS(resources(0.01, 0.0, 1e21, 2e4, 600), std::invalid_argument);
    CHECK_THROWS_AS(resources(0.01, 0.01, 0.5, 2e4, 600), std::invalid_argument);
    CHECK_THROWS_AS(resources(1.0, 0.01, 1e21, 2e4, 600), std::invalid_argument);
    CHECK_THROWS_AS(resources(0.01, 0.01, 1e21, 0.0, 600), std::invalid_argument);
    CHECK_THROWS_AS(resources(0.01, 0.01, 1e21, 2e4, 600, 0.0), std::invalid_argument);
}
