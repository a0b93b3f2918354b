#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace kinlim {

// Gas constant, normalized so that the internal energy equals theta.
inline constexpr double kGasConstant = 2.0 / 3.0;

using Vec3 = std::array<double, 3>;

struct Primitive {
  double rho = 1.0;
  Vec3 u{0.0, 0.0, 0.0};
  double theta = 1.0;
};

struct FluidMoments {
  double rho = 0.0;
  Vec3 m{0.0, 0.0, 0.0};
  double energy = 0.0;  // rho * (theta + |u|^2 / 2)
};

// Product trapezoid grid on a symmetric box. Nodes are stored axis-by-axis
// (structure of arrays), flattened as k = (i1 * n2 + i2) * n3 + i3.
class VelocityGrid {
 public:
  static std::shared_ptr<const VelocityGrid> build(std::array<int, 3> counts,
                                                   double extent_multiplier,
                                                   double theta_max);

  std::size_t size() const { return xi1_.size(); }
  const std::array<int, 3>& counts() const { return counts_; }
  const Vec3& half_width() const { return half_width_; }
  const Vec3& spacing() const { return spacing_; }
  double extent_multiplier() const { return extent_multiplier_; }
  double theta_max() const { return theta_max_; }

  std::span<const double> xi1() const { return xi1_; }
  std::span<const double> xi2() const { return xi2_; }
  std::span<const double> xi3() const { return xi3_; }
  std::span<const double> weights() const { return w_; }
  // Mirror-symmetric: axis_node(a, i) == -axis_node(a, n - 1 - i) exactly.
  double axis_node(int axis, int i) const {
    const int n = counts_[axis];
    if (2 * i + 1 == n) return 0.0;
    if (2 * i < n) return -half_width_[axis] + i * spacing_[axis];
    return half_width_[axis] - (n - 1 - i) * spacing_[axis];
  }
  std::size_t index(int i1, int i2, int i3) const {
    return (static_cast<std::size_t>(i1) * counts_[1] + i2) * counts_[2] + i3;
  }
  double max_abs_xi1() const { return half_width_[0]; }
  double volume() const;

  static constexpr const char* rule_name() { return "product-trapezoid"; }
  nlohmann::json metadata() const;

 private:
  std::array<int, 3> counts_{};
  Vec3 half_width_{};
  Vec3 spacing_{};
  double extent_multiplier_ = 0.0;
  double theta_max_ = 0.0;
  std::vector<double> xi1_, xi2_, xi3_, w_;
};

using GridPtr = std::shared_ptr<const VelocityGrid>;

std::vector<double> maxwellian(const Primitive& state, const VelocityGrid& grid);
void maxwellian_into(const Primitive& state, const VelocityGrid& grid, std::span<double> out);

FluidMoments moments(std::span<const double> f, const VelocityGrid& grid);
Primitive primitive_from_conserved(const FluidMoments& m);
FluidMoments conserved_from_primitive(const Primitive& p);

// Maxwellian whose discrete moments equal `target` to rounding. The analytic
// Maxwellian of the same primitive state misses by the quadrature error.
struct MatchedMaxwellian {
  Primitive params;    // parameters fed to the analytic formula
  Primitive physical;  // primitive state of the target moments
  int iterations = 0;
};
MatchedMaxwellian match_maxwellian(const FluidMoments& target, const VelocityGrid& grid,
                                   std::span<double> out);

enum class Frame { Eulerian, Lagrangian };
std::string to_string(Frame f);

// f(x_i, xi_k), cell-major.
struct DistributionField {
  GridPtr grid;
  double x0 = 0.0;  // first cell centre
  double dx = 1.0;
  std::size_t n_cells = 0;
  Frame frame = Frame::Eulerian;
  std::vector<double> values;

  DistributionField() = default;
  DistributionField(GridPtr g, double x0_, double dx_, std::size_t n, Frame fr);

  std::span<double> cell(std::size_t i) { return {values.data() + i * grid->size(), grid->size()}; }
  std::span<const double> cell(std::size_t i) const {
    return {values.data() + i * grid->size(), grid->size()};
  }
  double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  std::size_t negative_count() const;
};

}  // namespace kinlim
