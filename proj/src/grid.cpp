#include "nlch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nlch {

double Domain::cell_volume() const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w *= spacing(a);
    return w;
}

double Domain::volume() const {
    double w = 1.0;
    for (int a = 0; a < dim; ++a) w *= extents[size_t(a)];
    return w;
}

long Domain::cell_count() const {
    long n = 1;
    for (int a = 0; a < dim; ++a) n *= cells[size_t(a)];
    return n;
}

double Domain::diameter() const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += extents[size_t(a)] * extents[size_t(a)];
    return std::sqrt(s);
}

std::array<long, 3> Domain::strides() const {
    std::array<long, 3> s{0, 0, 0};
    long acc = 1;
    for (int a = 2; a >= 0; --a) {
        s[size_t(a)] = acc;
        acc *= cells[size_t(a)];
    }
    return s;
}

Domain make_domain(int dim, std::array<double, 3> extents, std::array<long, 3> cells,
                   BoundaryMode bc) {
    if (dim < 1 || dim > 3) throw ValidationError("domain: dim must be 1, 2 or 3");
    Domain d;
    d.dim = dim;
    d.bc = bc;
    for (int a = 0; a < 3; ++a) {
        if (a < dim) {
            if (cells[size_t(a)] < 4)
                throw ValidationError("domain: need at least 4 cells per axis, axis " +
                                      std::to_string(a) + " has " + std::to_string(cells[size_t(a)]));
            if (!(extents[size_t(a)] > 0.0) || !std::isfinite(extents[size_t(a)]))
                throw ValidationError("domain: extents must be positive and finite");
            d.cells[size_t(a)] = cells[size_t(a)];
            d.extents[size_t(a)] = extents[size_t(a)];
        } else {
            d.cells[size_t(a)] = 1;
            d.extents[size_t(a)] = 1.0;
        }
    }
    return d;
}

double& Field::at(long i0, long i1, long i2) {
    const auto s = domain.strides();
    return v[size_t(i0 * s[0] + i1 * s[1] + i2 * s[2])];
}

double Field::at(long i0, long i1, long i2) const {
    const auto s = domain.strides();
    return v[size_t(i0 * s[0] + i1 * s[1] + i2 * s[2])];
}

namespace {

// Base offset of line l orthogonal to `axis`; lines enumerate all index
// combinations of the other two axes.
inline long line_base(const Domain& d, const std::array<long, 3>& st, int axis, long l) {
    const long n2 = d.cells[2];
    if (axis == 0) return l;                            // l = i1*n2 + i2, st1 = n2, st2 = 1
    if (axis == 1) return (l / n2) * st[0] + (l % n2);  // l = i0*n2 + i2
    return l * n2;                                      // l = i0*n1 + i1
}

void axis_lap(const double* f, double* out, const Domain& d, int axis) {
    const auto st = d.strides();
    const long nA = d.cells[size_t(axis)];
    const long sA = st[size_t(axis)];
    const double inv_h2 = 1.0 / (d.spacing(axis) * d.spacing(axis));
    const bool per = d.bc == BoundaryMode::periodic;
    const long n_lines = d.cell_count() / nA;

    for (long l = 0; l < n_lines; ++l) {
        const long base = line_base(d, st, axis, l);
        const double* p = f + base;
        double* o = out + base;
        for (long j = 1; j + 1 < nA; ++j)
            o[j * sA] += (p[(j + 1) * sA] - 2.0 * p[j * sA] + p[(j - 1) * sA]) * inv_h2;
        if (per) {
            o[0] += (p[sA] - 2.0 * p[0] + p[(nA - 1) * sA]) * inv_h2;
            o[(nA - 1) * sA] += (p[0] - 2.0 * p[(nA - 1) * sA] + p[(nA - 2) * sA]) * inv_h2;
        } else {
            // mirror ghosts: the wall flux is zero
            o[0] += (p[sA] - p[0]) * inv_h2;
            o[(nA - 1) * sA] += (p[(nA - 2) * sA] - p[(nA - 1) * sA]) * inv_h2;
        }
    }
}

} // namespace

void laplacian_into(const Field& f, Field& out) {
    if (!(out.domain == f.domain) || out.v.size() != f.v.size()) out = Field(f.domain);
    std::fill(out.v.begin(), out.v.end(), 0.0);
    for (int a = 0; a < f.domain.dim; ++a) axis_lap(f.v.data(), out.v.data(), f.domain, a);
}

Field laplacian(const Field& f) {
    Field out(f.domain);
    laplacian_into(f, out);
    return out;
}

double mean(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s / double(f.v.size());
}

double inner(const Field& a, const Field& b) {
    if (!(a.domain == b.domain)) throw ValidationError("inner: fields live on different domains");
    double s = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
    return s * a.domain.cell_volume();
}

double norm_l1(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += std::fabs(x);
    return s * f.domain.cell_volume();
}

double norm_l2(const Field& f) {
    double s = 0.0;
    for (double x : f.v) s += x * x;
    return std::sqrt(s * f.domain.cell_volume());
}

double norm_linf(const Field& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::fabs(x));
    return m;
}

double norm_lp(const Field& f, double p) {
    if (!(p >= 1.0)) throw ValidationError("norms: p must be >= 1, got " + std::to_string(p));
    double s = 0.0;
    for (double x : f.v) s += std::pow(std::fabs(x), p);
    return std::pow(s * f.domain.cell_volume(), 1.0 / p);
}

double grad_sq(const Field& f) {
    const Domain& d = f.domain;
    const auto st = d.strides();
    double acc = 0.0;
    for (int a = 0; a < d.dim; ++a) {
        const long nA = d.cells[size_t(a)];
        const long sA = st[size_t(a)];
        const double inv_h = 1.0 / d.spacing(a);
        const long n_lines = d.cell_count() / nA;
        for (long l = 0; l < n_lines; ++l) {
            const double* p = f.v.data() + line_base(d, st, a, l);
            for (long j = 0; j + 1 < nA; ++j) {
                const double df = (p[(j + 1) * sA] - p[j * sA]) * inv_h;
                acc += df * df;
            }
            if (d.bc == BoundaryMode::periodic) {
                const double df = (p[0] - p[(nA - 1) * sA]) * inv_h;
                acc += df * df;
            }
        }
    }
    return acc * d.cell_volume();
}

double norm_h1(const Field& f) {
    const double l2 = norm_l2(f);
    return std::sqrt(l2 * l2 + grad_sq(f));
}

std::vector<Field> gradient(const Field& f) {
    const Domain& d = f.domain;
    const auto st = d.strides();
    std::vector<Field> g;
    g.reserve(size_t(d.dim));
    for (int a = 0; a < d.dim; ++a) {
        Field ga(d);
        const long nA = d.cells[size_t(a)];
        const long sA = st[size_t(a)];
        const double inv_h = 1.0 / d.spacing(a);
        const double inv_2h = 0.5 * inv_h;
        const long n_lines = d.cell_count() / nA;
        for (long l = 0; l < n_lines; ++l) {
            const long base = line_base(d, st, a, l);
            const double* p = f.v.data() + base;
            double* o = ga.v.data() + base;
            for (long j = 1; j + 1 < nA; ++j)
                o[j * sA] = (p[(j + 1) * sA] - p[(j - 1) * sA]) * inv_2h;
            if (d.bc == BoundaryMode::periodic) {
                o[0] = (p[sA] - p[(nA - 1) * sA]) * inv_2h;
                o[(nA - 1) * sA] = (p[0] - p[(nA - 2) * sA]) * inv_2h;
            } else {
                o[0] = (p[sA] - p[0]) * inv_h;
                o[(nA - 1) * sA] = (p[(nA - 1) * sA] - p[(nA - 2) * sA]) * inv_h;
            }
        }
        g.push_back(std::move(ga));
    }
    return g;
}

Field gradient_magnitude(const Field& f) {
    const auto g = gradient(f);
    Field m(f.domain);
    for (size_t i = 0; i < m.v.size(); ++i) {
        double s = 0.0;
        for (const Field& ga : g) s += ga.v[i] * ga.v[i];
        m.v[i] = std::sqrt(s);
    }
    return m;
}

} // namespace nlch
