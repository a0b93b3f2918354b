#include <algorithm>
#include <cmath>
#include <exception>

#include "kinlim/error.hpp"
#include "kinlim/kernels/kinetic.hpp"

namespace kinlim::kernels {

namespace {

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

void check(const TransportArgs& a, std::span<const double> f_in, std::span<double> f_out,
           std::span<double> fl, std::span<double> fr) {
  require(a.xi1.size() == a.n_vel, "transport: xi1 size mismatch");
  require(f_in.size() == a.n_cells * a.n_vel && f_out.size() == f_in.size(),
          "transport: field size mismatch");
  require(a.ghost_left.size() == 2 * a.n_vel && a.ghost_right.size() == 2 * a.n_vel,
          "transport: ghost size mismatch");
  require(fl.size() == a.n_vel && fr.size() == a.n_vel, "transport: flux buffer mismatch");
  require(a.n_cells >= 2, "transport: need at least two cells");
}

// Value of cell c in [-2, n+1], velocity k.
inline double at(const TransportArgs& a, std::span<const double> f, std::ptrdiff_t c,
                 std::size_t k) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.n_cells);
  if (c < 0) return a.ghost_left[(c + 2) * a.n_vel + k];
  if (c >= n) return a.ghost_right[(c - n) * a.n_vel + k];
  return f[c * a.n_vel + k];
}

}  // namespace

namespace serial {

void transport(const TransportArgs& a, std::span<const double> f_in, std::span<double> f_out,
               std::span<double> flux_left, std::span<double> flux_right) {
  check(a, f_in, f_out, flux_left, flux_right);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.n_cells);
  const bool lw = a.limiter == Limiter::Minmod;
  std::vector<double> face(n + 1);
  for (std::size_t k = 0; k < a.n_vel; ++k) {
    const double c = a.xi1[k] * a.nu;
    for (std::ptrdiff_t m = 0; m <= n; ++m) {
      // face m sits between cells m-1 and m
      double F;
      if (c >= 0.0) {
        const std::ptrdiff_t u = m - 1;
        double slope = 0.0;
        if (lw) slope = minmod(at(a, f_in, u, k) - at(a, f_in, u - 1, k),
                               at(a, f_in, u + 1, k) - at(a, f_in, u, k));
        F = c * (at(a, f_in, u, k) + 0.5 * (1.0 - c) * slope);
      } else {
        const std::ptrdiff_t u = m;
        double slope = 0.0;
        if (lw) slope = minmod(at(a, f_in, u, k) - at(a, f_in, u - 1, k),
                               at(a, f_in, u + 1, k) - at(a, f_in, u, k));
        F = c * (at(a, f_in, u, k) - 0.5 * (1.0 + c) * slope);
      }
      face[m] = F;
    }
    for (std::ptrdiff_t i = 0; i < n; ++i)
      f_out[i * a.n_vel + k] = f_in[i * a.n_vel + k] - (face[i + 1] - face[i]);
    flux_left[k] = face[0];
    flux_right[k] = face[n];
  }
}

void bgk_relax(const VelocityGrid& grid, std::size_t n_cells, double decay, std::span<double> f) {
  const std::size_t nv = grid.size();
  require(f.size() == n_cells * nv, "bgk_relax: field size mismatch");
  std::vector<double> M(nv);
  for (std::size_t i = 0; i < n_cells; ++i) {
    auto s = f.subspan(i * nv, nv);
    match_maxwellian(moments(s, grid), grid, M);
    for (std::size_t k = 0; k < nv; ++k) s[k] = M[k] + (s[k] - M[k]) * decay;
  }
}

}  // namespace serial

namespace omp {

void transport(const TransportArgs& a, std::span<const double> f_in, std::span<double> f_out,
               std::span<double> flux_left, std::span<double> flux_right) {
  check(a, f_in, f_out, flux_left, flux_right);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.n_cells);
  const std::size_t nv = a.n_vel;
  const bool lw = a.limiter == Limiter::Minmod;
  const double* xi = a.xi1.data();
  const double nu = a.nu;

  // Pointer to cell c in [-2, n+1].
  auto cell = [&](std::ptrdiff_t c) -> const double* {
    if (c < 0) return a.ghost_left.data() + (c + 2) * nv;
    if (c >= n) return a.ghost_right.data() + (c - n) * nv;
    return f_in.data() + c * nv;
  };
  // Flux through face m (between cells m-1 and m) for every velocity.
  auto face_flux = [&](std::ptrdiff_t m, double* out) {
    const double* l2 = cell(m - 2);
    const double* l1 = cell(m - 1);
    const double* r0 = cell(m);
    const double* r1 = cell(m + 1);
#pragma omp simd
    for (std::size_t k = 0; k < nv; ++k) {
      const double c = xi[k] * nu;
      double sl = 0.0, sr = 0.0;
      if (lw) {
        sl = minmod(l1[k] - l2[k], r0[k] - l1[k]);
        sr = minmod(r0[k] - l1[k], r1[k] - r0[k]);
      }
      const double up = c * (l1[k] + 0.5 * (1.0 - c) * sl);
      const double dn = c * (r0[k] - 0.5 * (1.0 + c) * sr);
      out[k] = c >= 0.0 ? up : dn;
    }
  };

#pragma omp parallel
  {
    std::vector<double> fl(nv), fr(nv);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      face_flux(i, fl.data());
      face_flux(i + 1, fr.data());
      const double* src = f_in.data() + i * nv;
      double* dst = f_out.data() + i * nv;
#pragma omp simd
      for (std::size_t k = 0; k < nv; ++k) dst[k] = src[k] - (fr[k] - fl[k]);
    }
  }
  face_flux(0, flux_left.data());
  face_flux(n, flux_right.data());
}

void bgk_relax(const VelocityGrid& grid, std::size_t n_cells, double decay, std::span<double> f) {
  const std::size_t nv = grid.size();
  require(f.size() == n_cells * nv, "bgk_relax: field size mismatch");
  std::exception_ptr err;
#pragma omp parallel
  {
    std::vector<double> M(nv);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_cells); ++i) {
      try {
        auto s = f.subspan(i * nv, nv);
        match_maxwellian(moments(s, grid), grid, M);
        for (std::size_t k = 0; k < nv; ++k) s[k] = M[k] + (s[k] - M[k]) * decay;
      } catch (...) {
#pragma omp critical(kinlim_relax_error)
        if (!err) err = std::current_exception();
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace omp
}  // namespace kinlim::kernels
