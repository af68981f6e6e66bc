#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hessianlab/cone.hpp"
#include "hessianlab/errors.hpp"

namespace hessianlab {

enum class Topology { box, torus };

// Uniform grid over a box in R^{2n} ~ C^n, or periodic over the flat torus.
// Axis order is (x1, y1, x2, y2, x3, y3); the last axis is fastest
// (row-major). For torus topology the stored points are the distinct ones;
// index N wraps to 0 and the period per axis is shape * h.
class GridField {
  public:
    GridField() = default;

    static GridField box(int n, std::span<const int> shape, double h,
                         std::span<const double> origin);
    static GridField torus(int n, int points_per_axis, double h);

    Topology topology() const { return topology_; }
    int n() const { return n_; }
    int axes() const { return 2 * n_; }
    int shape(int axis) const { return shape_[axis]; }
    std::span<const int> shape() const { return {shape_.data(), static_cast<size_t>(2 * n_)}; }
    double spacing() const { return h_; }
    double origin(int axis) const { return origin_[axis]; }
    size_t size() const { return values_.size(); }

    double operator[](size_t flat) const { return values_[flat]; }
    double& operator[](size_t flat) { return values_[flat]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool has_mask() const { return !mask_.empty(); }
    std::span<const uint8_t> mask() const { return mask_; }
    std::vector<uint8_t>& mutable_mask() { return mask_; }
    bool interior(size_t flat) const { return !mask_.empty() && mask_[flat] != 0; }

    size_t stride(int axis) const { return strides_[axis]; }

    size_t flat_index(std::span<const int> idx) const {
        size_t f = 0;
        for (int a = 0; a < 2 * n_; ++a) f += static_cast<size_t>(idx[a]) * strides_[a];
        return f;
    }
    void unflatten(size_t flat, std::span<int> idx) const {
        for (int a = 0; a < 2 * n_; ++a) {
            idx[a] = static_cast<int>(flat / strides_[a]);
            flat %= strides_[a];
        }
    }

    double coordinate(int axis, int index) const { return origin_[axis] + h_ * index; }
    void coordinates(std::span<const int> idx, std::span<double> x) const {
        for (int a = 0; a < 2 * n_; ++a) x[a] = coordinate(a, idx[a]);
    }

    // Value at idx shifted by delta (per-axis offsets). Torus wraps; box
    // throws StencilError when the shifted index leaves the grid.
    double at_offset(std::span<const int> idx, std::span<const int> delta) const;

    // True when every +-1 neighbor (including diagonal pairs) exists, i.e.
    // all indices lie in [1, shape-2]. Torus fields always qualify.
    bool full_stencil(std::span<const int> idx) const;

    // Fills values from a callable over coordinates.
    void sample(const std::function<double(std::span<const double>)>& fn);

    bool same_grid(const GridField& o) const;

    double max_abs() const;

  private:
    Topology topology_ = Topology::box;
    int n_ = 0;
    std::array<int, 6> shape_{1, 1, 1, 1, 1, 1};
    std::array<size_t, 6> strides_{0, 0, 0, 0, 0, 0};
    double h_ = 1.0;
    std::array<double, 6> origin_{0, 0, 0, 0, 0, 0};
    std::vector<double> values_;
    std::vector<uint8_t> mask_;

    void init_strides();
};

// Strictly pseudoconvex model domain cut out by a quadratic defining
// function: ball rho = |z-c|^2 - R^2, ellipsoid rho = sum |z_p-c_p|^2/r_p^2 - 1.
struct DomainSpec {
    enum class Kind { ball, ellipsoid };
    Kind kind = Kind::ball;
    int n = 2;
    std::vector<double> center;  // 2n reals; empty = origin
    std::vector<double> radii;   // ball: 1 entry; ellipsoid: n entries
    double box_halfwidth = 1.2;
    int points_per_axis = 21;

    double rho_at(std::span<const double> x) const;
    // Complex Hessian of rho (constant for these kinds).
    HermitianMatrix rho_hessian() const;
    void validate() const;
};

// rho sampled on the box with the interior mask filled in: mask = 1 at
// points with rho < 0 whose full stencil stays inside the box.
GridField build_domain(const DomainSpec& spec);

// Discrete complex Hessian at a grid point: second-order central differences,
// 4-point cross stencil for mixed terms. Exact on quadratics.
HermitianMatrix complex_hessian(const GridField& u, std::span<const int> idx);

}  // namespace hessianlab
