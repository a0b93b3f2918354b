#include <cmath>

#include <Eigen/Dense>

#include "kinlim/collision.hpp"
#include "kinlim/error.hpp"

namespace kinlim {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LinearizedOperator::Impl {
  CollisionKind kind = CollisionKind::BGK;
  double nu0 = 1.0;
  Primitive state;
  GridPtr grid;
  std::vector<double> M;
  MacroBasis basis;
  std::vector<double> nu;
  bool dense = false;
  RowMatrix L;
  // Bordered system [L X; Y^T 0]: X holds chi, Y holds chi * w / M.
  Eigen::MatrixXd X, Y;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;
  mutable double last_residual = 0.0;
};

LinearizedOperator::LinearizedOperator() = default;
LinearizedOperator::~LinearizedOperator() = default;
LinearizedOperator::LinearizedOperator(LinearizedOperator&&) noexcept = default;
LinearizedOperator& LinearizedOperator::operator=(LinearizedOperator&&) noexcept = default;

CollisionKind LinearizedOperator::kind() const { return impl_->kind; }
const Primitive& LinearizedOperator::state() const { return impl_->state; }
const MacroBasis& LinearizedOperator::basis() const { return impl_->basis; }
const VelocityGrid& LinearizedOperator::grid() const { return *impl_->grid; }
std::span<const double> LinearizedOperator::maxwellian() const { return impl_->M; }
std::span<const double> LinearizedOperator::frequency() const { return impl_->nu; }
bool LinearizedOperator::is_dense() const { return impl_->dense; }
double LinearizedOperator::nu0() const { return impl_->nu0; }
double LinearizedOperator::last_residual() const { return impl_->last_residual; }

std::span<const double> LinearizedOperator::dense() const {
  if (!impl_->dense) return {};
  return {impl_->L.data(), static_cast<std::size_t>(impl_->L.size())};
}

std::vector<double> LinearizedOperator::apply(std::span<const double> h) const {
  const std::size_t n = impl_->M.size();
  require(h.size() == n, "linearized apply: size mismatch");
  std::vector<double> out(n);
  if (!impl_->dense) {
    apply_p1(h, impl_->basis, out);
    for (double& v : out) v *= -impl_->nu0;
    return out;
  }
  Eigen::Map<const Eigen::VectorXd> hv(h.data(), n);
  Eigen::Map<Eigen::VectorXd> ov(out.data(), n);
  ov.noalias() = impl_->L * hv;
  return out;
}

std::vector<double> LinearizedOperator::solve(std::span<const double> rhs) const {
  const std::size_t n = impl_->M.size();
  require(rhs.size() == n, "linearized solve: size mismatch");
  const MacroBasis& b = impl_->basis;
  const double nr = std::sqrt(b.inner(rhs, rhs));
  const auto c = b.coefficients(rhs);
  double np0 = 0.0;
  for (double v : c) np0 += v * v;
  np0 = std::sqrt(np0);
  if (np0 > 1e-8 * nr)
    throw PreconditionError("linearized solve: right-hand side is not microscopic");
  std::vector<double> r(rhs.begin(), rhs.end());
  conservation_correction(r, b);  // strip the admissible rounding-level P0 part
  if (nr == 0.0) {
    impl_->last_residual = 0.0;
    return std::vector<double>(n, 0.0);
  }

  std::vector<double> h(n);
  if (!impl_->dense) {
    for (std::size_t k = 0; k < n; ++k) h[k] = -r[k] / impl_->nu0;
  } else {
    Eigen::VectorXd big = Eigen::VectorXd::Zero(n + 5);
    for (std::size_t k = 0; k < n; ++k) big[k] = r[k];
    Eigen::VectorXd sol = impl_->lu.solve(big);
    // One step of iterative refinement on the N-block.
    for (int it = 0; it < 2; ++it) {
      Eigen::VectorXd res = Eigen::VectorXd::Zero(n + 5);
      res.head(n) = big.head(n) - impl_->L * sol.head(n) - impl_->X * sol.tail(5);
      res.tail(5) = -impl_->Y.transpose() * sol.head(n);
      sol += impl_->lu.solve(res);
    }
    for (std::size_t k = 0; k < n; ++k) h[k] = sol[k];
  }
  conservation_correction(h, b);
  const auto Lh = apply(h);
  double num = 0.0;
  for (std::size_t k = 0; k < n; ++k) num += b.w_over_m[k] * (Lh[k] - r[k]) * (Lh[k] - r[k]);
  impl_->last_residual = std::sqrt(num) / nr;
  if (!(impl_->last_residual <= 1e-10))
    throw NumericalError("linearized solve: residual " + std::to_string(impl_->last_residual) +
                         " exceeds 1e-10 (restricted operator singular or ill-conditioned)");
  return h;
}

LinearizedOperator build_linearized(const Primitive& state, GridPtr grid,
                                    const CollisionModel& model, bool force_dense) {
  model.validate();
  require(state.rho > 0.0 && state.theta > 0.0, "build_linearized: invalid state");
  LinearizedOperator op;
  op.impl_ = std::make_unique<LinearizedOperator::Impl>();
  auto& im = *op.impl_;
  im.kind = model.kind;
  im.nu0 = model.nu0;
  im.state = state;
  im.grid = grid;
  const std::size_t n = grid->size();
  im.M.resize(n);
  const MatchedMaxwellian mm = match_maxwellian(conserved_from_primitive(state), *grid, im.M);
  im.basis = build_basis_from_weight(mm.params, state, im.M, *grid);
  im.nu = collision_frequency(*grid, im.M, model);

  if (model.kind == CollisionKind::BGK && !force_dense) return op;

  im.dense = true;
  im.X.resize(n, 5);
  im.Y.resize(n, 5);
  for (int j = 0; j < 5; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      im.X(k, j) = im.basis.chi[j][k];
      im.Y(k, j) = im.basis.chi[j][k] * im.basis.w_over_m[k];
    }
  im.L.resize(n, n);
  if (model.kind == CollisionKind::BGK) {
    im.L = -model.nu0 * (RowMatrix::Identity(n, n) - im.X * im.Y.transpose());
  } else {
    kernels::HsTable table(*grid, kernels::AngularRule::make(model.n_polar, model.n_azimuth));
    kernels::omp::linearized(table, im.M, {im.L.data(), n * n});
    // L <- P1 L P1 with P1 = I - X Y^T.
    const Eigen::MatrixXd LX = im.L * im.X;
    const Eigen::MatrixXd YtL = im.Y.transpose() * im.L;
    const Eigen::MatrixXd YtLX = im.Y.transpose() * LX;
    im.L -= im.X * YtL;
    im.L -= LX * im.Y.transpose();
    im.L += im.X * (YtLX * im.Y.transpose());
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 5, n + 5);
  A.topLeftCorner(n, n) = im.L;
  A.topRightCorner(n, 5) = im.X;
  A.bottomLeftCorner(5, n) = im.Y.transpose();
  im.lu.compute(A);
  return op;
}

TransportCoefficients transport_coefficients(const LinearizedOperator& op) {
  const Primitive& s = op.state();
  require(std::abs(s.u[0]) + std::abs(s.u[1]) + std::abs(s.u[2]) == 0.0,
          "transport_coefficients: state must be at rest");
  const VelocityGrid& grid = op.grid();
  const auto M = op.maxwellian();
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  const std::size_t n = grid.size();
  const double rt = kGasConstant * s.theta;
  std::vector<double> a(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r2 = x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k];
    a[k] = x1[k] * x1[k] * M[k];
    b[k] = x1[k] * (r2 / (2.0 * rt) - 2.5) * M[k];
  }
  const auto pa = apply_p1(a, op.basis());
  const auto pb = apply_p1(b, op.basis());
  const auto X = op.solve(pa);
  const auto Y = op.solve(pb);
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r2 = x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k];
    sa += w[k] * x1[k] * x1[k] * X[k];
    sb += w[k] * 0.5 * x1[k] * r2 * Y[k];
  }
  TransportCoefficients tc;
  tc.mu = -0.75 * sa / rt;
  tc.lambda = -sb / s.theta;
  return tc;
}

TransportCoefficients transport_coefficients(double rho, double theta, GridPtr grid,
                                             const CollisionModel& model, CoefficientPath path) {
  require(rho > 0.0 && theta > 0.0, "transport_coefficients: rho and theta must be positive");
  if (path == CoefficientPath::Auto)
    path = model.kind == CollisionKind::BGK ? CoefficientPath::ClosedForm : CoefficientPath::Dense;
  if (path == CoefficientPath::ClosedForm) {
    require(model.kind == CollisionKind::BGK,
            "transport_coefficients: closed form exists only for BGK");
    const double p = kGasConstant * rho * theta;
    return {p / model.nu0, 5.0 * p / (3.0 * model.nu0)};
  }
  const Primitive s{rho, {0, 0, 0}, theta};
  const auto op = build_linearized(s, std::move(grid), model, true);
  return transport_coefficients(op);
}

}  // namespace kinlim
