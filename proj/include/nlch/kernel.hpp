#pragma once

#include <array>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "nlch/grid.hpp"

namespace nlch {

// Interaction kernels and their convolutions.
//
// The nonlocal operator in the model is the truncated convolution
//
//   (J * phi)(x) = integral over Omega of J(x - y) phi(y) dy,
//
// i.e. phi is extended by zero outside the box. On the grid this becomes a
// lattice sum: J is sampled on the *difference lattice* z_k = k h, where per
// active axis k runs over [-(n_a - 1), n_a - 1]; every difference x_i - y_j of
// two cell centers lands exactly on that lattice. The quadrature weight is the
// cell volume throughout (midpoint rule).
//
// Two operator semantics are offered:
//   truncated       the integral over Omega above; the default everywhere
//   periodic_wrap   circular convolution with the periodized kernel, meant
//                   only for validation runs on periodic domains
// and two evaluation routes:
//   fft             zero-padded (or plain, for wrap) fast transforms
//   direct          the literal O(N * K) lattice sum
// The two routes are implemented independently so one can serve as an oracle
// for the other; they agree to 1e-12 relative tolerance.
//
// Alongside the samples the kernel carries the constants that control the
// analysis: the enlarged-ball radius m1 (smallest lattice-aligned radius with
// x - Omega inside the ball of that radius) and the L1 norms of J and of the
// Euclidean magnitude of grad J over that ball. Every truncated convolution
// is dominated by them: sup |J*phi| <= l1_j * sup|phi|, and likewise for the
// gradient. For the analytic kernels the norms are quadratures of the closed
// forms over the ball; tabulated kernels are integrated over whatever part of
// the ball their sample lattice covers.

struct GaussianSpec {
    double sigma = 0.1;
    double amplitude = 1.0; // integral of J over all space (before truncation at 10 sigma)
};

// C1 compactly supported bump A (1 - (|z|/r0)^2)^2 on |z| <= r0
struct CompactBumpSpec {
    double r0 = 0.25;
    double amplitude = 1.0; // peak height A, not the mass
};

// flat binary of float64 samples on a centered lattice, plus a JSON sidecar
// at path + ".json" holding {"shape": [...], "spacing": [...]}
struct TabulatedKernelSpec {
    std::string path;
};

using KernelSpec = std::variant<GaussianSpec, CompactBumpSpec, TabulatedKernelSpec>;

enum class ConvMode { truncated, periodic_wrap };
enum class ConvPath { fft, direct };

class Kernel {
  public:
    Kernel(Kernel&&) noexcept;
    Kernel& operator=(Kernel&&) noexcept;
    Kernel(const Kernel&) = delete;
    Kernel& operator=(const Kernel&) = delete;
    ~Kernel();

    const Domain& domain() const { return dom_; }
    double l1_j() const { return l1_j_; }
    double l1_grad_j() const { return l1_grad_j_; }
    double m1() const { return m1_; }

    // difference-lattice accessors; k_a in [-half(a), half(a)]
    long half(int axis) const { return half_[size_t(axis)]; }
    double sample(std::array<long, 3> k) const;
    std::array<double, 3> grad_sample(std::array<long, 3> k) const;

    Field convolve(const Field& phi, ConvMode mode = ConvMode::truncated,
                   ConvPath path = ConvPath::fft) const;
    void convolve_into(const Field& phi, Field& out, ConvMode mode = ConvMode::truncated,
                       ConvPath path = ConvPath::fft) const;

    // component-wise convolution with grad J, one field per active axis
    std::vector<Field> grad_convolve(const Field& phi, ConvMode mode = ConvMode::truncated,
                                     ConvPath path = ConvPath::fft) const;

    // a(x) = (J * 1)(x), truncated semantics; computed once and cached.
    // The reference stays valid for the kernel's lifetime.
    const Field& self_interaction() const;

    // Convolutions are safe to call concurrently: the transform plans and
    // scratch buffers are owned by the kernel and internally serialized, and
    // the direct route touches no shared state at all.

  private:
    Kernel();
    friend Kernel build_kernel(const KernelSpec& spec, const Domain& domain);

    long diff_index(std::array<long, 3> k) const;
    void direct_convolve(const std::vector<double>& tab, const Field& phi, Field& out,
                         ConvMode mode) const;
    struct Cache;

    Domain dom_;
    std::array<long, 3> half_{0, 0, 0};
    std::vector<double> j_;                    // difference-lattice samples
    std::array<std::vector<double>, 3> grad_;  // grad components, same layout
    double l1_j_ = 0.0;
    double l1_grad_j_ = 0.0;
    double m1_ = 0.0;
    std::unique_ptr<Cache> cache_;
};

// Samples the requested kernel on the difference lattice of `domain`,
// enforces J(z) = J(-z) exactly (built-in kernels are re-symmetrized by
// averaging, tabulated ones must already be symmetric to 1e-12 of their
// peak), and computes m1 and the ball norms.
// Validation errors: non-positive shape parameters, NaN/Inf samples,
// asymmetric tables, sidecar spacing that disagrees with the domain.
Kernel build_kernel(const KernelSpec& spec, const Domain& domain);

} // namespace nlch
