#pragma once

#include <vector>

#include "nlch/errors.hpp"

namespace nlch {

// Logarithmic free-energy density
//
//   F(s) = (theta/2) [ (1+s) ln(1+s) + (1-s) ln(1-s) ],   s in (-1, 1),
//
// with the continuous extension F(+-1) = theta ln 2. The derivatives blow up
// at the endpoints; that blow-up is what keeps |phi| < 1 in the dynamics.
// The companion constants describe how fast the blow-up kicks in:
//   theta  convexity floor, F''(s) >= theta everywhere on (-1, 1)
//   eps0   F'' is monotone on [1-eps0, 1) and on (-1, -1+eps0]
//   eps1   the two endpoint ratio bounds below hold for all delta <= eps1:
//            1/F'(1-2 delta)  <= c_f / |ln delta|
//            1/F''(1-2 delta) <= c_f * delta
//          (and their mirror images at -1), with c_f >= 1.
struct PotentialParams {
    double theta = 1.0;
    double eps0 = 0.5;
    double eps1 = 0.25;
    double c_f = 4.0;
};

// Throws ValidationError unless theta > 0, 0 < eps0 < 1, 0 < eps1 < 1/2, c_f >= 1.
void validate(const PotentialParams& p);

// Smallest c_f the built-in logarithmic form admits over delta in (0, eps1]:
// the second ratio equals 4(1-delta)/theta, which is largest as delta -> 0.
double flory_huggins_c_f(double theta);

// Built-in logarithmic form. eval_F accepts the closed interval [-1, 1];
// the derivative evaluators reject |s| >= 1 since they diverge there.
double eval_F(double s, const PotentialParams& p);
double eval_dF(double s, const PotentialParams& p);   // (theta/2) ln((1+s)/(1-s))
double eval_ddF(double s, const PotentialParams& p);  // theta / ((1-s)(1+s)) >= theta
double eval_dddF(double s, const PotentialParams& p); // 2 theta s / (1-s^2)^2

// Monotone cubic Hermite interpolant (Fritsch-Carlson slope limiting).
// Reproduces linear data exactly and never overshoots monotone data.
struct Pchip {
    std::vector<double> x; // strictly increasing nodes
    std::vector<double> y;
    std::vector<double> m; // limited node slopes

    Pchip() = default;
    Pchip(std::vector<double> nodes, std::vector<double> values);
    double operator()(double s) const; // throws ValidationError outside [x.front(), x.back()]
};

enum class PotentialKind { flory_huggins, quadratic, tabulated };

// A potential the assumption checker can probe. Three flavours:
//   flory_huggins  the built-in logarithmic form above
//   quadratic      F = (theta/2) s^2, a reference that fails the endpoint
//                  ratio bounds (useful as a counterexample)
//   tabulated      user-supplied samples of F, F', F'' on common nodes,
//                  each interpolated monotone-cubically
// Only the logarithmic form carries a third derivative.
class Potential {
  public:
    static Potential flory_huggins(PotentialParams p);
    static Potential quadratic(double theta);
    static Potential tabulated(std::vector<double> nodes, std::vector<double> f_values,
                               std::vector<double> df_values, std::vector<double> ddf_values,
                               PotentialParams p);

    PotentialKind kind() const { return kind_; }
    const PotentialParams& params() const { return params_; }

    double F(double s) const;
    double dF(double s) const;
    double ddF(double s) const;
    bool has_dddF() const { return kind_ == PotentialKind::flory_huggins; }
    double dddF(double s) const;

    // admissible evaluation range for the derivatives (open for the built-in
    // forms, the closed node span for tables)
    double lo() const { return lo_; }
    double hi() const { return hi_; }

  private:
    Potential() = default;

    PotentialKind kind_ = PotentialKind::flory_huggins;
    PotentialParams params_;
    double lo_ = -1.0;
    double hi_ = 1.0;
    Pchip tab_f_, tab_df_, tab_ddf_;
};

struct AssumptionReport {
    bool a1_ok = false;      // F'' >= theta on a symmetric grid
    bool a2_ok = false;      // F'' monotone within eps0 of each endpoint
    bool a3_ok = false;      // both endpoint ratio bounds hold with the given c_f
    double c_f_estimate = 0; // smallest constant covering every sampled ratio (floored at 1)
    double worst_delta = 0;  // sample delta attaining the largest ratio
    double min_ddf = 0;      // smallest F'' seen on the symmetric grid

    bool all_ok() const { return a1_ok && a2_ok && a3_ok; }
};

// Samples delta log-uniformly in (1e-8, eps1] (n_samples points, endpoint
// included) for the ratio bounds, plus fixed symmetric grids for the floor
// and monotonicity checks. n_samples must be >= 2.
AssumptionReport check_assumptions(const Potential& pot, int n_samples);
AssumptionReport check_assumptions(const PotentialParams& p, int n_samples);

} // namespace nlch
