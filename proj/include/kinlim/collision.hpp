#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinlim/kernels/hard_sphere.hpp"
#include "kinlim/micromacro.hpp"
#include "kinlim/velocity_space.hpp"

namespace kinlim {

enum class CollisionKind { BGK, HardSphere };
std::string to_string(CollisionKind k);
CollisionKind parse_collision_kind(const std::string& s);

// nu_lower <= nu(xi) <= c (1 + |xi|)^kappa
struct FrequencyEnvelope {
  double nu_lower = 0.0;
  double c = 0.0;
  double kappa = 0.0;
  bool fitted = false;
  nlohmann::json to_json() const;
};

struct CollisionModel {
  static constexpr int kMinPolar = 8;
  static constexpr int kMinAzimuth = 8;

  CollisionKind kind = CollisionKind::BGK;
  double nu0 = 1.0;
  int n_polar = 8;
  int n_azimuth = 8;
  FrequencyEnvelope envelope;

  void validate() const;
  nlohmann::json to_json() const;
};

// The five invariant moments of a collision output and the scale they are
// judged against (the same moments of |output|).
struct InvariantResidual {
  std::array<double, 5> moment{};
  std::array<double, 5> scale{};
  double max_relative() const;
};
InvariantResidual invariant_moments(std::span<const double> q, const VelocityGrid& grid);

// Subtract the macroscopic projection (in the inner product of `basis`) so
// that all five invariant moments of q vanish.
void conservation_correction(std::span<double> q, const MacroBasis& basis);

std::vector<double> bgk_collision(std::span<const double> f, const VelocityGrid& grid, double nu0);

class HardSphereOperator {
 public:
  HardSphereOperator(GridPtr grid, int n_polar, int n_azimuth);

  // Corrected Q(f, g). `weight` is the interpolation Maxwellian; by default
  // the Maxwellian of moments(f) (or of the grid's reference state if those
  // moments are not physical).
  std::vector<double> collide(std::span<const double> f, std::span<const double> g,
                              std::span<const double> weight = {},
                              kernels::CollisionTally* tally = nullptr) const;
  std::vector<double> collide_raw(std::span<const double> f, std::span<const double> g,
                                  std::span<const double> weight,
                                  kernels::CollisionTally* tally = nullptr) const;

  const VelocityGrid& grid() const { return *grid_; }
  GridPtr grid_ptr() const { return grid_; }
  const kernels::HsTable& table() const { return *table_; }
  const kernels::AngularRule& rule() const { return rule_; }

 private:
  GridPtr grid_;
  kernels::AngularRule rule_;
  std::unique_ptr<kernels::HsTable> table_;
};

std::vector<double> hard_sphere_Q(std::span<const double> f, std::span<const double> g,
                                  GridPtr grid, int n_polar = 8, int n_azimuth = 8);

std::vector<double> collision_frequency(const VelocityGrid& grid,
                                        std::span<const double> maxwellian_slice,
                                        const CollisionModel& model);
FrequencyEnvelope fit_frequency_envelope(const VelocityGrid& grid, std::span<const double> nu);

class LinearizedOperator {
 public:
  LinearizedOperator();
  ~LinearizedOperator();
  LinearizedOperator(LinearizedOperator&&) noexcept;
  LinearizedOperator& operator=(LinearizedOperator&&) noexcept;

  CollisionKind kind() const;
  const Primitive& state() const;
  const MacroBasis& basis() const;
  const VelocityGrid& grid() const;
  std::span<const double> maxwellian() const;
  std::span<const double> frequency() const;
  bool is_dense() const;
  double nu0() const;

  std::vector<double> apply(std::span<const double> h) const;
  // L h = rhs with P0 h = 0; rhs must be microscopic.
  std::vector<double> solve(std::span<const double> rhs) const;
  double last_residual() const;

  // Row-major dense matrix; empty for the closed-form BGK operator.
  std::span<const double> dense() const;

  struct Impl;

 private:
  friend LinearizedOperator build_linearized(const Primitive&, GridPtr, const CollisionModel&,
                                             bool);
  std::unique_ptr<Impl> impl_;
};

// force_dense: assemble BGK as an explicit matrix too (oracle for the closed form).
LinearizedOperator build_linearized(const Primitive& state, GridPtr grid,
                                    const CollisionModel& model, bool force_dense = false);

struct TransportCoefficients {
  double mu = 0.0;
  double lambda = 0.0;
};
enum class CoefficientPath { Auto, ClosedForm, Dense };
TransportCoefficients transport_coefficients(double rho, double theta, GridPtr grid,
                                             const CollisionModel& model,
                                             CoefficientPath path = CoefficientPath::Auto);
// Chapman-Enskog flux moments from an already built operator (u must be 0).
TransportCoefficients transport_coefficients(const LinearizedOperator& op);

struct ProjectionMomentEntry {
  int k = 0;
  double lambda = 0.0;
  double measured = 0.0;    // max ratio over trials
  double structural = 0.0;  // Cauchy-Schwarz bound for the same grid and weights
  bool ok = false;
};

struct CertificationReport {
  CollisionKind kind = CollisionKind::BGK;
  Primitive state;
  Primitive mstar;
  int trials = 0;
  int q_trials = 0;
  std::uint64_t seed = 0;
  double sigma = 0.0;          // min of the two below
  double sigma_m = 0.0;        // Rayleigh minimum, weight 1/M
  double sigma_mstar = 0.0;    // Rayleigh minimum, weight 1/M*
  double eta0_used = 0.0;      // |v - v*| + |u - u*| + |theta - theta*|
  double null_space_residual = 0.0;
  double collision_bound_C = 0.0;      // NaN when not applicable (BGK)
  double inverse_bound_ratio_m = 0.0;      // max LHS / RHS, must be <= 1
  double inverse_bound_ratio_mstar = 0.0;
  double projection_moment_C = 0.0;            // max measured over (k, lambda)
  std::vector<ProjectionMomentEntry> projection_moment;
  FrequencyEnvelope envelope;
  double inverse_residual = 0.0;
  double seconds = 0.0;
  bool success = false;
  std::string failure;
  nlohmann::json to_json() const;
};

CertificationReport certify_operator_properties(const CollisionModel& model, const Primitive& state,
                                                const Primitive& mstar, int trials,
                                                std::uint64_t seed, GridPtr grid,
                                                int q_trials = 4);

}  // namespace kinlim
