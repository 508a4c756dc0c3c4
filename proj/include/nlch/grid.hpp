#pragma once
// Cell-centered finite-volume grid: box domains in 1 to 3 dimensions, scalar
// fields, the zero-flux / periodic Laplacian, and lattice-quadrature norms.
//
// Cells are stored row-major with the last axis fastest; cell (i0,i1,i2) has
// center x_a = (i_a + 1/2) h_a. Integrals are midpoint sums with weight
// prod(h). The Laplacian is assembled in flux form, so its lattice sum
// telescopes to the boundary fluxes and the discrete mean of the result
// vanishes identically in both boundary modes.

#include <array>
#include <cstddef>
#include <vector>

#include "nlch/errors.hpp"

namespace nlch {

enum class BoundaryMode { neumann, periodic };

struct Domain {
    int dim = 1;
    std::array<long, 3> cells{1, 1, 1};
    std::array<double, 3> extents{1.0, 1.0, 1.0};
    BoundaryMode bc = BoundaryMode::neumann;

    double spacing(int axis) const { return extents[size_t(axis)] / double(cells[size_t(axis)]); }
    double cell_volume() const;
    double volume() const;
    long cell_count() const;
    double diameter() const; // sup over x,y in the box of |x - y|
    std::array<long, 3> strides() const;
    bool operator==(const Domain&) const = default;
};

// Validates cell counts (>= 4 per used axis) and extents; axes beyond dim are
// normalized to one cell of unit extent so Domain compares by value.
Domain make_domain(int dim, std::array<double, 3> extents, std::array<long, 3> cells,
                   BoundaryMode bc);

struct Field {
    Domain domain;
    std::vector<double> v;

    Field() = default;
    explicit Field(const Domain& d, double fill = 0.0)
        : domain(d), v(size_t(d.cell_count()), fill) {}

    double& operator[](size_t i) { return v[i]; }
    double operator[](size_t i) const { return v[i]; }
    size_t size() const { return v.size(); }
    double& at(long i0, long i1 = 0, long i2 = 0);
    double at(long i0, long i1 = 0, long i2 = 0) const;
};

inline double cell_center(const Domain& d, int axis, long i) {
    return (double(i) + 0.5) * d.spacing(axis);
}

inline std::array<long, 3> unravel_index(const Domain& d, long i) {
    const auto& n = d.cells;
    return {i / (n[1] * n[2]), (i / n[2]) % n[1], i % n[2]};
}

// Second difference in flux form. Neumann walls use mirror ghosts (zero
// boundary flux), periodic wraps around. out must not alias f.
void laplacian_into(const Field& f, Field& out);
Field laplacian(const Field& f);

double mean(const Field& f);                  // (1/|Omega|) integral of f
double inner(const Field& a, const Field& b); // lattice L2 pairing
double norm_l1(const Field& f);
double norm_l2(const Field& f);
double norm_linf(const Field& f);
double norm_lp(const Field& f, double p);     // p >= 1 required

// Flux-form gradient energy |grad f|_{L2}^2; pairs with laplacian so that
// inner(laplacian(f), g) == -<grad f, grad g> up to rounding.
double grad_sq(const Field& f);
double norm_h1(const Field& f);               // sqrt(L2^2 + grad_sq)

// Cell-centered gradient components: central differences inside, one-sided
// at Neumann walls, wrapped when periodic. Used for Lp norms of gradients;
// the H1 norm uses the flux form above.
std::vector<Field> gradient(const Field& f);
Field gradient_magnitude(const Field& f);

} // namespace nlch
