#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

namespace nlch {

// ---- iteration lemma ----
//
// Extremal recursion y_{n+1} = C b^n y_n^(1+eps), run entirely in log space.
// The conclusion y_n <= y0 b^(-n/eps) is checked against a forward rounding
// bound that tracks the recursion's own (1+eps)^n error amplification, so the
// equality case y0 = threshold never produces spurious violations.
struct IterLemmaReport {
    double ln_threshold = 0.0;     // ln(C^(-1/eps) b^(-1/eps^2))
    bool precondition_ok = false;  // y0 <= threshold
    bool conclusion_ok = false;
    long first_violation = -1;     // level of the first failed comparison, -1 if none
    std::vector<double> ln_y;      // ln_y[n], n = 0..n_max
    std::vector<double> ln_bound;  // ln(y0) - n ln(b)/eps
};
IterLemmaReport iter_lemma_check(double C, double b, double eps, double y0, long n_max);

// ---- separation ----
struct SeparationProfile {
    double tau = 0.0;
    double delta_emp = 0.0;      // inf over series times >= tau of min_gap
    std::vector<double> times;   // whole series, for CSV output
    std::vector<double> gaps;
};
SeparationProfile separation_profile(const Trajectory& traj, double tau);

// ---- De Giorgi level sets ----
enum class LevelSign { plus, minus };

struct DeGiorgiParams {
    double T = 1.0;         // window end
    double tau_tilde = 0.1; // window scale; levels live in [T - 3 tau_tilde, T]
    double delta = 0.05;    // must lie in (0, min(eps0/2, eps1))
    int n_levels = 8;       // levels 0..n_levels are reported
    LevelSign sign = LevelSign::plus;
};

struct DeGiorgiLevel {
    double t_start = 0.0; // left end of I_n
    double k = 0.0;       // threshold 1 - delta - delta/2^n
    double y = 0.0;       // space-time mass of {phi >= k} over I_n
    double x = 0.0;       // majorant 2^n max{l1_gradJ^2/F''(1-2delta), 16 delta^2/tau_tilde} y
};

struct DeGiorgiReport {
    std::vector<DeGiorgiLevel> levels; // n = 0..n_levels
    double sup_phi_window = 0.0;       // sup of the signed field over window snapshots
    bool po_ok = false;                // truncations stay in [0, 2 delta], i.e. sup <= 1
    bool nesting_ok = false;           // y_{n+1} <= y_n, exact comparison
    bool decayed = false;              // y_last <= 1e-12 y_0, or y_0 = 0
};
DeGiorgiReport degiorgi_sequences(const Trajectory& traj, const DeGiorgiParams& dp,
                                  const Kernel& k, const PotentialParams& p);

// ---- interpolation-inequality ratio ----
// ||f||_{10/3} / (||f||_2^(1-a) ||f||_{H1}^a) with a = dim/5, the exponent pair
// that makes the ratio scale-invariant; dim = 3 gives the 2/5, 3/5 split.
double gn_ratio(const Field& f);

struct GnBatteryReport {
    double max_ratio = 0.0;
    std::string argmax_kind;
    int fields_tested = 0;
};
// random + structured fields (constants, modes, plateaus, spikes); the max is
// an empirical lower bound for the domain constant
GnBatteryReport gn_battery(const Domain& d, int n_random, std::uint64_t seed);

// ---- separation certificate ----
struct CertificateConstants {
    double c_f = 1.0;             // growth constant of the potential
    double c_omega = 1.0;         // interpolation-inequality domain constant
    double c_j = 1.0;             // max{l1_gradJ^(10/3), l1_gradJ^(4/3)}
    double l1_gradJ = 1.0;
    double energy_constant = 1.0; // sup_t ||F'(phi)||_{L1} estimate
    double eps0 = 0.5;
    double eps1 = 0.25;
};
double c_j_from_l1_grad(double l1_gradJ);

struct SeparationCertificate {
    double ln_delta = 0.0;     // certified gap, kept in log space (delta underflows)
    double ln_tau_tilde = 0.0;
    double tau_tilde = 0.0;    // exp(ln_tau_tilde); 0 when it underflows
    double ln_K = 0.0;         // feasibility threshold: |ln delta| >= K
    bool feasible = false;
    CertificateConstants constants_used;
    double tau = 0.0;
};
SeparationCertificate delta_certificate(const CertificateConstants& c, double tau);

// re-evaluates both sandwich inequalities and the tau/5 cap in log space
bool certificate_sound(const SeparationCertificate& cert, double rel_tol = 1e-9);

// ---- energy constant and chemical-potential bounds ----
// sup over snapshots t >= tau/2 of ||F'(phi)||_{L1}
double energy_constant_estimate(const Trajectory& traj, double tau, const PotentialParams& p);

struct MuBoundReport {
    double c1 = 0.0;         // |F'(1-delta)| + l1_J
    double sup_mu_inf = 0.0; // max over snapshots t >= tau of ||mu||_inf
    bool ok = false;         // sup_mu_inf <= c1
    double c2 = 0.0;         // sup over unit windows of the L2-in-time FD rate of mu
    double delta_used = 0.0;
};
MuBoundReport mu_bound_check(const Trajectory& traj, double tau, double delta,
                             const Kernel& k, const PotentialParams& p);

// ---- Hölder continuity estimate ----
struct HolderScale {
    double scale = 0.0;     // spatial separation or time lag
    double increment = 0.0; // max |phi(x1,t1) - phi(x2,t2)| over sampled pairs
};
struct HolderData {
    std::vector<HolderScale> space;
    std::vector<HolderScale> space_interior; // both points >= extent/8 from walls
    std::vector<HolderScale> time;
};
// structure functions over dyadic scales inside the window [t0, t1]; when a
// scale admits fewer lattice pairs than the budget the sweep is exhaustive
HolderData collect_structure(const Trajectory& traj, double t0, double t1,
                             int pairs_per_scale, std::uint64_t seed);

struct HolderFit {
    double alpha = 1.0;
    double c3 = 0.0;
    double alpha_interior = 1.0;
    double c3_interior = 0.0;
    bool degenerate = true; // no increment above noise floor: (alpha, c3) = (1, 0)
};
HolderFit fit_holder(const HolderData& data);
double holder_c3_at(const HolderData& data, double alpha); // global data, fixed exponent
HolderFit holder_estimate(const Trajectory& traj, double t0, double t1,
                          int pairs_per_scale = 200, std::uint64_t seed = 0);

// ---- regularity scaling ----
struct DecayFit {
    std::string name; // dtphi_l2, mu_h1, phi_h1, df_h1
    double c0 = 0.0;
    double beta = 0.0; // sup_{t>=tau} norm ~ c0 tau^(-beta)
};
struct LqLpNorm {
    double p = 2.0;
    double q = 0.0;      // 0 encodes q = infinity
    double grad_mu = 0.0;
    double grad_phi = 0.0;
};
struct RegularityReport {
    double c0_fit = 0.0; // the mu H1 fit
    double beta_fit = 0.0;
    double c1_mu_inf = 0.0;
    double c2_dtmu = 0.0;
    double c3_holder = 0.0;
    double alpha_holder = 1.0;
    std::vector<DecayFit> fits;
    std::vector<LqLpNorm> lqlp_norms;
};
RegularityReport regularity_scaling(const std::vector<Trajectory>& runs,
                                    const std::vector<double>& taus, const Kernel& k,
                                    const PotentialParams& p);

// ---- attractor probe ----
struct AttractorMember {
    int index = 0;
    double mean0 = 0.0;
    double final_min_gap = 0.0;
    double alpha = 1.0;
    double c3 = 0.0;
    bool ok = false;
    std::string error;
};
struct AttractorReport {
    std::vector<AttractorMember> members;
    double delta_ens = 0.0; // min over members of final min_gap
    double alpha_ens = 1.0; // common exponent: min over member fits
    double c_ens = 0.0;     // max over members of c3 re-evaluated at alpha_ens
    bool common_bound_ok = false;
};

// seeded ensemble with means spread over [-(1-m), 1-m], sup kept away from 1
std::vector<Field> attractor_ensemble(const Domain& d, int count, double m, std::uint64_t seed);

AttractorReport attractor_probe(const Domain& d, const KernelSpec& kspec,
                                const PotentialParams& p, const SolverConfig& solver,
                                const std::vector<Field>& initial_data, double m, double t_long,
                                double dt, int threads);

} // namespace nlch
