#include "hessianlab/grid.hpp"

#include <algorithm>
#include <cmath>

namespace hessianlab {

void GridField::init_strides() {
    const int d = 2 * n_;
    size_t s = 1;
    for (int a = d - 1; a >= 0; --a) {
        strides_[a] = s;
        s *= static_cast<size_t>(shape_[a]);
    }
    values_.assign(s, 0.0);
}

GridField GridField::box(int n, std::span<const int> shape, double h,
                         std::span<const double> origin) {
    if (n < 1 || n > 3) throw ArgumentError("GridField: n must be in [1, 3]");
    if (h <= 0.0) throw ArgumentError("GridField: spacing must be positive");
    GridField g;
    g.topology_ = Topology::box;
    g.n_ = n;
    for (int a = 0; a < 2 * n; ++a) {
        if (shape[a] < 3) throw ArgumentError("GridField: need at least 3 points per axis");
        g.shape_[a] = shape[a];
        g.origin_[a] = origin[a];
    }
    g.h_ = h;
    g.init_strides();
    return g;
}

GridField GridField::torus(int n, int points_per_axis, double h) {
    if (n < 1 || n > 3) throw ArgumentError("GridField: n must be in [1, 3]");
    if (points_per_axis < 4) throw ArgumentError("GridField: torus needs >= 4 points per axis");
    if (h <= 0.0) throw ArgumentError("GridField: spacing must be positive");
    GridField g;
    g.topology_ = Topology::torus;
    g.n_ = n;
    for (int a = 0; a < 2 * n; ++a) g.shape_[a] = points_per_axis;
    g.h_ = h;
    g.init_strides();
    return g;
}

double GridField::at_offset(std::span<const int> idx, std::span<const int> delta) const {
    const int d = 2 * n_;
    size_t f = 0;
    for (int a = 0; a < d; ++a) {
        int i = idx[a] + delta[a];
        if (topology_ == Topology::torus) {
            if (i < 0) i += shape_[a];
            else if (i >= shape_[a]) i -= shape_[a];
        } else if (i < 0 || i >= shape_[a]) {
            throw StencilError("stencil reaches outside the grid");
        }
        f += static_cast<size_t>(i) * strides_[a];
    }
    return values_[f];
}

bool GridField::full_stencil(std::span<const int> idx) const {
    if (topology_ == Topology::torus) return true;
    for (int a = 0; a < 2 * n_; ++a)
        if (idx[a] < 1 || idx[a] > shape_[a] - 2) return false;
    return true;
}

void GridField::sample(const std::function<double(std::span<const double>)>& fn) {
    const int d = 2 * n_;
    std::array<int, 6> idx{};
    std::array<double, 6> x{};
    for (size_t f = 0; f < values_.size(); ++f) {
        unflatten(f, {idx.data(), static_cast<size_t>(d)});
        coordinates({idx.data(), static_cast<size_t>(d)}, {x.data(), static_cast<size_t>(d)});
        values_[f] = fn({x.data(), static_cast<size_t>(d)});
    }
}

bool GridField::same_grid(const GridField& o) const {
    if (topology_ != o.topology_ || n_ != o.n_ || h_ != o.h_) return false;
    for (int a = 0; a < 2 * n_; ++a)
        if (shape_[a] != o.shape_[a] || origin_[a] != o.origin_[a]) return false;
    return true;
}

double GridField::max_abs() const {
    double r = 0.0;
    for (double v : values_) r = std::max(r, std::abs(v));
    return r;
}

double DomainSpec::rho_at(std::span<const double> x) const {
    double r = 0.0;
    if (kind == Kind::ball) {
        for (int a = 0; a < 2 * n; ++a) {
            const double c = center.empty() ? 0.0 : center[a];
            r += (x[a] - c) * (x[a] - c);
        }
        return r - radii[0] * radii[0];
    }
    for (int p = 0; p < n; ++p) {
        const double cx = center.empty() ? 0.0 : center[2 * p];
        const double cy = center.empty() ? 0.0 : center[2 * p + 1];
        r += ((x[2 * p] - cx) * (x[2 * p] - cx) + (x[2 * p + 1] - cy) * (x[2 * p + 1] - cy)) /
             (radii[p] * radii[p]);
    }
    return r - 1.0;
}

HermitianMatrix DomainSpec::rho_hessian() const {
    HermitianMatrix h(n);
    for (int p = 0; p < n; ++p)
        h.set(p, p, kind == Kind::ball ? 1.0 : 1.0 / (radii[p] * radii[p]));
    return h;
}

void DomainSpec::validate() const {
    if (n < 1 || n > 3) throw ConfigurationError("DomainSpec: n must be in [1, 3]");
    const size_t want = kind == Kind::ball ? 1 : static_cast<size_t>(n);
    if (radii.size() != want) throw ConfigurationError("DomainSpec: radii count mismatch");
    for (double r : radii)
        if (!(r > 0.0)) throw ConfigurationError("DomainSpec: radii must be positive");
    if (!center.empty() && center.size() != static_cast<size_t>(2 * n))
        throw ConfigurationError("DomainSpec: center must have 2n entries");
    if (!(box_halfwidth > 0.0)) throw ConfigurationError("DomainSpec: box halfwidth must be positive");
    if (points_per_axis < 5) throw ConfigurationError("DomainSpec: need at least 5 points per axis");
}

GridField build_domain(const DomainSpec& spec) {
    spec.validate();
    const int d = 2 * spec.n;
    std::array<int, 6> shape{};
    std::array<double, 6> origin{};
    for (int a = 0; a < d; ++a) {
        shape[a] = spec.points_per_axis;
        const double c = spec.center.empty() ? 0.0 : spec.center[a];
        origin[a] = c - spec.box_halfwidth;
    }
    const double h = 2.0 * spec.box_halfwidth / (spec.points_per_axis - 1);
    GridField rho = GridField::box(spec.n, {shape.data(), static_cast<size_t>(d)}, h,
                                   {origin.data(), static_cast<size_t>(d)});
    rho.sample([&](std::span<const double> x) { return spec.rho_at(x); });

    std::vector<uint8_t>& mask = rho.mutable_mask();
    mask.assign(rho.size(), 0);
    std::array<int, 6> idx{};
    size_t count = 0;
    for (size_t f = 0; f < rho.size(); ++f) {
        rho.unflatten(f, {idx.data(), static_cast<size_t>(d)});
        if (rho[f] < 0.0) {
            if (!rho.full_stencil({idx.data(), static_cast<size_t>(d)}))
                throw ConfigurationError("build_domain: domain touches the bounding box");
            mask[f] = 1;
            ++count;
        }
    }
    if (count == 0) throw ConfigurationError("build_domain: empty interior");
    return rho;
}

HermitianMatrix complex_hessian(const GridField& u, std::span<const int> idx) {
    const int n = u.n();
    if (u.topology() == Topology::box && !u.full_stencil(idx))
        throw StencilError("complex_hessian: point lacks a full stencil neighborhood");

    const double inv_h2 = 1.0 / (u.spacing() * u.spacing());
    std::array<int, 6> delta{};
    const std::span<int> dspan{delta.data(), static_cast<size_t>(2 * n)};
    auto val = [&](int axis_a, int da, int axis_b, int db) {
        std::fill(delta.begin(), delta.end(), 0);
        delta[axis_a] += da;
        delta[axis_b] += db;
        return u.at_offset(idx, dspan);
    };
    const double center = val(0, 0, 0, 0);
    // Axis second difference.
    auto d2 = [&](int axis) {
        return (val(axis, 1, axis, 0) + val(axis, -1, axis, 0) - 2.0 * center) * inv_h2;
    };
    // Mixed cross difference on distinct axes.
    auto dcross = [&](int a, int b) {
        return (val(a, 1, b, 1) - val(a, 1, b, -1) - val(a, -1, b, 1) + val(a, -1, b, -1)) *
               (0.25 * inv_h2);
    };

    HermitianMatrix m(n);
    for (int p = 0; p < n; ++p) {
        m.set(p, p, 0.25 * (d2(2 * p) + d2(2 * p + 1)));
        for (int q = p + 1; q < n; ++q) {
            const double re = 0.25 * (dcross(2 * p, 2 * q) + dcross(2 * p + 1, 2 * q + 1));
            const double im = 0.25 * (dcross(2 * p, 2 * q + 1) - dcross(2 * p + 1, 2 * q));
            m.set(p, q, cdouble(re, im));
        }
    }
    return m;
}

}  // namespace hessianlab
