#pragma once

#include <vector>

#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

namespace nlch {

// Time integration of the conserved gradient flow
//   d phi / dt = Lap(mu),   mu = F'(phi) - J * phi,
// by convex splitting: the singular part F' is implicit (its barrier keeps
// |phi| < 1 structurally), the nonlocal part explicit. Each step solves
//   phi_new - dt Lap(F'(phi_new)) = phi_old - dt Lap(J * phi_old)
// with Newton; the Jacobian I - dt Lap diag(F'') is symmetrized to the
// positive definite operator diag(1/F'') - dt Lap and solved by
// Jacobi-preconditioned conjugate gradients.

struct SolverConfig {
    double newton_tol = 1e-10; // lattice L2 residual target for the implicit solve
    int newton_max_iter = 50;
    double cg_tol = 1e-12;     // linear solve tolerance, relative to the right-hand side
    int cg_max_iter = 10000;
    int max_halvings = 10;     // dt split depth before a step failure aborts the run
};

// truncated everywhere except on periodic domains, whose validation runs use
// the wrapped operator so constants are exact steady states
ConvMode conv_mode_for(const Domain& d);

struct SimState {
    Field phi;
    Field mu;           // chemical potential at the current state
    double time = 0.0;
    long step_index = 0;
};

struct EnergySample {
    double time = 0.0;
    double energy_form1 = 0.0; // integral F(phi) - <J*phi, phi>/2
    double energy_form2 = 0.0; // pair-difference form, assembled through a = J*1
    double mass = 0.0;
    double sup_abs_phi = 0.0;
    double min_gap = 0.0;      // 1 - sup|phi|
};

struct StepStats {
    int newton_iters = 0;
    long cg_iters = 0;
    int halvings = 0;
    double residual = 0.0;
};

// mu = F'(phi) - J*phi pointwise; rejects states touching +-1
Field chemical_potential(const Field& phi, const Kernel& k, const PotentialParams& p);

// both energy forms in one pass; the forms agree on the lattice by the
// algebraic identity  (1/4) sum J (phi_i - phi_j)^2 = <a phi, phi>/2 - <J*phi, phi>/2
EnergySample energy(const Field& phi, const Kernel& k, const PotentialParams& p, double time = 0.0);
EnergySample energy_from(const Field& phi, const Field& conv, const Field& a,
                         const PotentialParams& p, double time);

// admissibility gate for initial data: values with |v| > 1 are rejected,
// values within 1e-12 of the endpoints are pulled to +-(1 - 1e-12), and the
// mean must stay strictly inside (-1, 1)
SimState make_state(Field phi0, const PotentialParams& p);

class Stepper {
  public:
    Stepper(const Kernel& k, const PotentialParams& p, SolverConfig cfg);

    // bind to a state: caches J*phi and the self-interaction for the mode
    void reset(SimState& st);

    // advance one nominal dt (splitting internally on Newton failure) and
    // refresh st.phi, st.mu, st.time, st.step_index
    StepStats advance(SimState& st, double dt);

    const Field& last_conv() const { return conv_; }
    const Field& mode_self_interaction() const { return a_; }

  private:
    void refresh_conv(const Field& phi);
    void implicit_solve(const Field& phi_n, double dt, Field& out, StepStats& stats);
    void advance_field(Field& phi, double dt, int depth, StepStats& stats);

    const Kernel& ker_;
    PotentialParams pot_;
    SolverConfig cfg_;
    ConvMode mode_;
    bool bound_ = false;
    Field conv_;    // J * phi at the bound state
    Field a_;       // J * 1 under the active mode
    Field lapdiag_; // diagonal of -Lap, for the Jacobi preconditioner
    // newton / cg workspace
    Field rhs_, x_, g_, dfx_, ddfx_, lapbuf_, w_, r_, z_, p_, q_, s_, wprev_;
    bool wprev_valid_ = false;
};

// single-step convenience wrapper (tests, one-off probes)
SimState step(const SimState& state, double dt, const Kernel& k, const PotentialParams& p,
              const SolverConfig& cfg);

struct SeriesRow {
    double time = 0.0;
    double energy_form1 = 0.0;
    double energy_form2 = 0.0;
    double mass = 0.0;
    double sup_abs_phi = 0.0;
    double min_gap = 0.0;
    double l2_mu = 0.0;
    double h1_mu = 0.0;
    double l2_dtphi = 0.0; // backward-difference rate, 0 on the first row
};

struct Trajectory {
    Domain domain;
    std::vector<double> snapshot_times;
    std::vector<long> snapshot_steps;
    std::vector<Field> snapshots;
    std::vector<SeriesRow> series; // one row per nominal step, including t = 0
};

// floor(t_end/dt) nominal steps; a snapshot every snapshot_every steps plus
// the initial and final states
Trajectory simulate(const Field& phi0, const PotentialParams& pot, const Kernel& ker, double dt,
                    double t_end, long snapshot_every, const SolverConfig& solver);

} // namespace nlch
