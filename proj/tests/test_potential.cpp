#include <cmath>

#include "doctest.h"
#include "nlch/errors.hpp"
#include "nlch/potential.hpp"

using namespace nlch;

namespace {
PotentialParams params(double theta) {
    PotentialParams p;
    p.theta = theta;
    return p;
}
} // namespace

TEST_SUITE("potential") {

TEST_CASE("frozen point values") {
    // F(0.5) at theta = 2: (1.5 ln 1.5 + 0.5 ln 0.5)
    CHECK(eval_F(0.5, params(2.0)) == doctest::Approx(0.261624071882274).epsilon(1e-13));
    // F'(0.9) = (1/2) ln 19
    CHECK(eval_dF(0.9, params(1.0)) == doctest::Approx(1.4722194895832202).epsilon(1e-14));
    // F''(0.8) = 1 / (0.2 * 1.8)
    CHECK(eval_ddF(0.8, params(1.0)) == doctest::Approx(1.0 / 0.36).epsilon(1e-14));
    // continuous extension at the endpoints
    CHECK(eval_F(1.0, params(1.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(eval_F(-1.0, params(3.0)) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-15));
    CHECK(eval_F(0.0, params(1.0)) == 0.0);
    CHECK(eval_dF(0.0, params(1.0)) == 0.0);
}

TEST_CASE("derivative ladder against finite differences") {
    const PotentialParams p = params(1.3);
    const double h = 1e-5;
    for (double s : {-0.95, -0.5, 0.0, 0.3, 0.8, 0.99}) {
        const double fd1 = (eval_F(s + h, p) - eval_F(s - h, p)) / (2.0 * h);
        CHECK(eval_dF(s, p) == doctest::Approx(fd1).epsilon(1e-6));
        const double fd2 = (eval_dF(s + h, p) - eval_dF(s - h, p)) / (2.0 * h);
        CHECK(eval_ddF(s, p) == doctest::Approx(fd2).epsilon(1e-6));
        const double fd3 = (eval_ddF(s + h, p) - eval_ddF(s - h, p)) / (2.0 * h);
        CHECK(eval_dddF(s, p) == doctest::Approx(fd3).epsilon(2e-5));
    }
}

TEST_CASE("endpoint closed forms") {
    // dyadic delta keeps s = 1 - 2 delta, 1 +- s, and the ratio arguments
    // exact, so the two expressions must agree to rounding
    const double theta = 0.7;
    const PotentialParams p = params(theta);
    for (double delta : {0x1p-7, 0x1p-14, 0x1p-24}) {
        const double s = 1.0 - 2.0 * delta;
        CHECK(eval_dF(s, p) ==
              doctest::Approx(0.5 * theta * std::log((1.0 - delta) / delta)).epsilon(1e-12));
        CHECK(1.0 / eval_ddF(s, p) ==
              doctest::Approx(4.0 * delta * (1.0 - delta) / theta).epsilon(1e-12));
        // odd symmetry
        CHECK(eval_dF(-s, p) == doctest::Approx(-eval_dF(s, p)).epsilon(1e-14));
        CHECK(eval_ddF(-s, p) == doctest::Approx(eval_ddF(s, p)).epsilon(1e-14));
    }
}

TEST_CASE("third derivative never outruns the second") {
    // |F'''| = (2|s|/theta) F''^2 <= (2/theta) F''^2 for the logarithmic form
    const PotentialParams p = params(0.9);
    for (double s = -0.999; s <= 0.999; s += 0.037) {
        const double dd = eval_ddF(s, p);
        CHECK(std::abs(eval_dddF(s, p)) <= (2.0 / p.theta) * dd * dd * (1.0 + 1e-12));
    }
}

TEST_CASE("derivatives reject the endpoints") {
    CHECK_THROWS_AS(eval_dF(1.0, params(1.0)), ValidationError);
    CHECK_THROWS_AS(eval_ddF(-1.0, params(1.0)), ValidationError);
    CHECK_THROWS_AS(eval_F(1.5, params(1.0)), ValidationError);
    CHECK_THROWS_AS(validate(params(-1.0)), ValidationError);
    PotentialParams bad;
    bad.eps1 = 0.5;
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("pchip reproduces linear data and stays monotone") {
    Pchip lin({0.0, 0.5, 1.0, 2.0}, {1.0, 2.0, 3.0, 5.0});
    for (double x = 0.0; x <= 2.0; x += 0.07) CHECK(lin(x) == doctest::Approx(1.0 + 2.0 * x));

    // monotone data: interpolant must not overshoot the bracketing values
    Pchip mono({0.0, 1.0, 2.0, 3.0}, {0.0, 0.1, 2.9, 3.0});
    double prev = mono(0.0);
    for (double x = 0.02; x <= 3.0; x += 0.02) {
        const double cur = mono(x);
        CHECK(cur >= prev - 1e-13);
        CHECK(cur <= 3.0 + 1e-13);
        prev = cur;
    }
    CHECK_THROWS_AS(mono(-0.1), ValidationError);
    CHECK_THROWS_AS(mono(3.1), ValidationError);
}

TEST_CASE("assumption checker accepts the logarithmic form") {
    const AssumptionReport rep = check_assumptions(params(1.0), 200);
    CHECK(rep.a1_ok);
    CHECK(rep.a2_ok);
    CHECK(rep.a3_ok);
    CHECK(rep.all_ok());
    // the binding ratio is 1/(delta F''(1-2 delta)) = 4(1-delta)/theta, largest
    // at the smallest sampled delta
    CHECK(rep.c_f_estimate > 3.8);
    CHECK(rep.c_f_estimate <= 4.0);
    CHECK(rep.worst_delta < 1e-6);
    CHECK(rep.min_ddf >= 1.0);
    CHECK(flory_huggins_c_f(1.0) == doctest::Approx(4.0).epsilon(1e-6));
    // hotter mixtures flatten the well and shrink the constant
    CHECK(check_assumptions(params(2.0), 200).c_f_estimate ==
          doctest::Approx(rep.c_f_estimate / 2.0).epsilon(1e-9));
}

TEST_CASE("assumption checker rejects a quadratic well") {
    const Potential q = Potential::quadratic(1.0);
    const AssumptionReport rep = check_assumptions(q, 200);
    CHECK(rep.a1_ok);      // convexity floor still holds
    CHECK_FALSE(rep.a3_ok); // 1/(delta F'') blows up as delta -> 0
    CHECK_FALSE(rep.all_ok());
    CHECK(rep.c_f_estimate > 1e6);
}

TEST_CASE("tabulated potential round-trips the logarithmic form") {
    // sample the built-in form on a fine grid and re-check the assumptions
    PotentialParams p = params(1.0);
    std::vector<double> nodes, f, df, ddf;
    const int m = 4001;
    const double smax = 1.0 - 1e-8;
    for (int j = 0; j < m; ++j) {
        const double s = (2.0 * j / double(m - 1) - 1.0) * smax;
        nodes.push_back(s);
        f.push_back(eval_F(s, p));
        df.push_back(eval_dF(s, p));
        ddf.push_back(eval_ddF(s, p));
    }
    const Potential tab = Potential::tabulated(nodes, f, df, ddf, p);
    CHECK(tab.dF(0.9) == doctest::Approx(eval_dF(0.9, p)).epsilon(1e-6));
    const AssumptionReport rep = check_assumptions(tab, 100);
    CHECK(rep.a2_ok);
    CHECK(rep.min_ddf == doctest::Approx(1.0).epsilon(1e-9)); // floor up to interpolation

}

} // TEST_SUITE
