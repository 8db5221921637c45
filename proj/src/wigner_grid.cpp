#include "gaussflow/wigner_grid.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "gaussflow/errors.hpp"

namespace gaussflow {

namespace {

using cplx = std::complex<double>;

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) s[a - 1] = s[a] * static_cast<std::size_t>(shape[a]);
  return s;
}

// In-place multi-dimensional transform, one axis at a time.
void fft_nd(std::vector<cplx>& data, const std::vector<int>& shape, bool inverse) {
  Eigen::FFT<double> fft;
  const auto strides = strides_of(shape);
  const std::size_t total = data.size();
  for (std::size_t a = 0; a < shape.size(); ++a) {
    const auto n = static_cast<std::size_t>(shape[a]);
    const std::size_t stride = strides[a];
    std::vector<cplx> line(n), out(n);
    for (std::size_t base = 0; base < total; ++base) {
      if ((base / stride) % n != 0) continue;  // only line starts
      for (std::size_t i = 0; i < n; ++i) line[i] = data[base + i * stride];
      if (inverse) {
        fft.inv(out, line);
      } else {
        fft.fwd(out, line);
      }
      for (std::size_t i = 0; i < n; ++i) data[base + i * stride] = out[i];
    }
  }
}

// Lagrange weights of the (order+1)-point stencil around real index u.
void lagrange_stencil(double u, int order, long* first, double* w) {
  const long base = static_cast<long>(std::floor(u)) - (order - 1) / 2;
  *first = base;
  for (int j = 0; j <= order; ++j) {
    double num = 1;
    double den = 1;
    for (int m = 0; m <= order; ++m) {
      if (m == j) continue;
      num *= u - static_cast<double>(base + m);
      den *= static_cast<double>(j - m);
    }
    w[j] = num / den;
  }
}

void check_grid(const WignerGrid& g) {
  const auto dim = static_cast<std::size_t>(2 * g.d);
  if (g.d < 1) throw std::invalid_argument("WignerGrid: need at least one degree of freedom");
  if (g.lower.size() != dim || g.spacing.size() != dim || g.shape.size() != dim) {
    throw std::invalid_argument("WignerGrid: axis data must have 2d entries");
  }
  std::size_t total = 1;
  for (std::size_t a = 0; a < dim; ++a) {
    if (g.shape[a] < 2 || !(g.spacing[a] > 0)) {
      throw std::invalid_argument("WignerGrid: each axis needs >= 2 nodes and positive spacing");
    }
    total *= static_cast<std::size_t>(g.shape[a]);
  }
  if (!g.values.empty() && g.values.size() != total) {
    throw std::invalid_argument("WignerGrid: value count does not match the shape");
  }
}

}  // namespace

VectorXd WignerGrid::point(std::size_t flat) const {
  VectorXd z(static_cast<Eigen::Index>(shape.size()));
  for (std::size_t a = shape.size(); a-- > 0;) {
    const auto n = static_cast<std::size_t>(shape[a]);
    z(static_cast<Eigen::Index>(a)) = coordinate(a, static_cast<int>(flat % n));
    flat /= n;
  }
  return z;
}

double WignerGrid::cell_volume() const {
  double v = 1;
  for (double h : spacing) v *= h;
  return v;
}

WignerGrid make_wigner_grid(Eigen::Index d, double half_width, int points) {
  const auto dim = static_cast<std::size_t>(2 * d);
  return make_wigner_grid(d, std::vector<double>(dim, -half_width),
                          std::vector<double>(dim, half_width), std::vector<int>(dim, points));
}

WignerGrid make_wigner_grid(Eigen::Index d, const std::vector<double>& lower,
                            const std::vector<double>& upper, const std::vector<int>& shape) {
  WignerGrid g;
  g.d = d;
  g.lower = lower;
  g.shape = shape;
  const auto dim = static_cast<std::size_t>(2 * d);
  if (upper.size() != dim || lower.size() != dim || shape.size() != dim) {
    throw std::invalid_argument("make_wigner_grid: axis data must have 2d entries");
  }
  g.spacing.resize(dim);
  std::size_t total = 1;
  for (std::size_t a = 0; a < dim; ++a) {
    if (shape[a] < 2 || !(upper[a] > lower[a])) {
      throw std::invalid_argument("make_wigner_grid: invalid extent on axis " + std::to_string(a));
    }
    g.spacing[a] = (upper[a] - lower[a]) / (shape[a] - 1);
    total *= static_cast<std::size_t>(shape[a]);
  }
  g.values.assign(total, 0.0);
  return g;
}

WignerGrid sample_gaussian(WignerGrid grid, const GaussianState<double>& state) {
  check_grid(grid);
  if (state.dof() != grid.d) throw std::invalid_argument("sample_gaussian: dimension mismatch");
  require_valid(state, "sample_gaussian");
  const Eigen::LLT<MatrixXd> llt(state.cov);
  const double half_logdet = llt.matrixLLT().diagonal().array().log().sum();
  std::size_t total = 1;
  for (int n : grid.shape) total *= static_cast<std::size_t>(n);
  grid.values.resize(total);
  for (std::size_t k = 0; k < total; ++k) {
    const VectorXd dz = grid.point(k) - state.mean;
    grid.values[k] = std::exp(-half_logdet - 0.5 * dz.dot(llt.solve(dz)));
  }
  return grid;
}

double grid_mass(const WignerGrid& grid) {
  double s = 0;
  for (double v : grid.values) s += v;
  return s * grid.cell_volume() / std::pow(2 * std::numbers::pi, static_cast<double>(grid.d));
}

double boundary_max(const WignerGrid& grid) {
  double m = 0;
  const auto strides = strides_of(grid.shape);
  for (std::size_t k = 0; k < grid.values.size(); ++k) {
    bool face = false;
    for (std::size_t a = 0; a < grid.shape.size() && !face; ++a) {
      const auto i = (k / strides[a]) % static_cast<std::size_t>(grid.shape[a]);
      face = i == 0 || i + 1 == static_cast<std::size_t>(grid.shape[a]);
    }
    if (face) m = std::max(m, std::abs(grid.values[k]));
  }
  return m;
}

WignerGrid reduced_wigner_grid(const WignerGrid& initial, const FlowSnapshot& snap,
                               const GaussianState<double>& environment0,
                               const WignerGridOptions& options) {
  check_grid(initial);
  if (initial.values.empty()) throw std::invalid_argument("reduced_wigner_grid: empty grid");
  if (initial.d != snap.full.d) throw std::invalid_argument("reduced_wigner_grid: dimension mismatch");
  if (environment0.dof() != snap.full.N) {
    throw std::invalid_argument("reduced_wigner_grid: environment state has wrong dimension");
  }
  if (options.padding < 1) throw std::invalid_argument("reduced_wigner_grid: padding must be >= 1");
  const int order = options.interpolation_order;
  if (order != 1 && order != 3 && order != 5) {
    throw std::invalid_argument("reduced_wigner_grid: interpolation order must be 1, 3 or 5");
  }

  double peak = 0;
  for (double v : initial.values) peak = std::max(peak, std::abs(v));
  const double edge = boundary_max(initial);
  if (edge > options.boundary_tol * peak) {
    std::ostringstream msg;
    msg << "reduced_wigner_grid: initial symbol does not decay at the boundary (" << edge / peak
        << " of peak, limit " << options.boundary_tol << ")";
    throw GridError(msg.str());
  }

  const std::size_t dim = initial.shape.size();
  std::vector<int> padded(dim);
  std::vector<long> centre(dim);  // node index placed at the origin of the padded array
  std::vector<double> origin(dim);
  std::vector<double> dzeta(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    padded[a] = initial.shape[a] * options.padding;
    centre[a] = initial.shape[a] / 2;
    origin[a] = initial.coordinate(a, static_cast<int>(centre[a]));
    dzeta[a] = 2 * std::numbers::pi / (padded[a] * initial.spacing[a]);
  }
  const auto in_strides = strides_of(initial.shape);
  const auto pad_strides = strides_of(padded);
  std::size_t pad_total = 1;
  for (int n : padded) pad_total *= static_cast<std::size_t>(n);

  auto padded_index = [&](std::size_t flat_in) {
    std::size_t out = 0;
    for (std::size_t a = 0; a < dim; ++a) {
      const long i = static_cast<long>((flat_in / in_strides[a]) % static_cast<std::size_t>(initial.shape[a]));
      const long p = padded[a];
      out += static_cast<std::size_t>(((i - centre[a]) % p + p) % p) * pad_strides[a];
    }
    return out;
  };

  // F(zeta) = sum rho(z_j) exp(-i zeta . (z_j - origin)) on the frequency lattice
  std::vector<cplx> spectrum(pad_total, 0.0);
  for (std::size_t k = 0; k < initial.values.size(); ++k) spectrum[padded_index(k)] = initial.values[k];
  fft_nd(spectrum, padded, false);

  const auto& f = snap.full;
  const MatrixXd phi_t = f.ii().transpose();
  const Eigen::Index zdim = static_cast<Eigen::Index>(dim);
  MatrixXd theta = MatrixXd::Zero(zdim, zdim);
  VectorXd shift = VectorXd::Zero(zdim);
  if (f.N > 0) {
    theta = f.ie() * environment0.cov * f.ie().transpose();
    shift = f.ie() * environment0.mean;
  }
  VectorXd origin_v(zdim);
  for (std::size_t a = 0; a < dim; ++a) origin_v(static_cast<Eigen::Index>(a)) = origin[a];

  const auto npts = static_cast<std::size_t>(order + 1);
  std::vector<long> first(dim);
  std::vector<double> weights(dim * npts);
  // per axis and tap: flat offset into the padded spectrum, or npos beyond the band
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> offsets(dim * npts);

  // tensor-product contraction over the stencil, outermost axis first
  std::function<cplx(std::size_t, std::size_t)> contract = [&](std::size_t a, std::size_t base) -> cplx {
    cplx acc = 0;
    const double* w = &weights[a * npts];
    const std::size_t* off = &offsets[a * npts];
    for (std::size_t j = 0; j < npts; ++j) {
      if (off[j] == npos || w[j] == 0) continue;
      acc += w[j] * (a + 1 == dim ? spectrum[base + off[j]] : contract(a + 1, base + off[j]));
    }
    return acc;
  };

  std::vector<cplx> out(pad_total);
  VectorXd zeta(zdim);
  VectorXd xi(zdim);
  VectorXd theta_zeta(zdim);
  for (std::size_t q = 0; q < pad_total; ++q) {
    for (std::size_t a = 0; a < dim; ++a) {
      const long idx = static_cast<long>((q / pad_strides[a]) % static_cast<std::size_t>(padded[a]));
      const long k = idx < padded[a] / 2 ? idx : idx - padded[a];
      zeta(static_cast<Eigen::Index>(a)) = k * dzeta[a];
    }
    xi.noalias() = phi_t * zeta;
    for (std::size_t a = 0; a < dim; ++a) {
      lagrange_stencil(xi(static_cast<Eigen::Index>(a)) / dzeta[a], order, &first[a], &weights[a * npts]);
      const long half = padded[a] / 2;
      for (std::size_t j = 0; j < npts; ++j) {
        const long k = first[a] + static_cast<long>(j);
        // beyond the band the spectrum is taken as zero
        offsets[a * npts + j] = k < -half || k >= padded[a] - half
                                    ? npos
                                    : static_cast<std::size_t>(k < 0 ? k + padded[a] : k) * pad_strides[a];
      }
    }
    const cplx value = contract(0, 0);
    const double phase = (zeta - xi).dot(origin_v) - zeta.dot(shift);
    theta_zeta.noalias() = theta * zeta;
    out[q] = value * std::polar(std::exp(-0.5 * zeta.dot(theta_zeta)), phase);
  }

  // band-edge check on the propagated spectrum
  double spec_peak = 0;
  double spec_edge = 0;
  for (std::size_t q = 0; q < pad_total; ++q) {
    const double m = std::abs(out[q]);
    spec_peak = std::max(spec_peak, m);
    bool at_edge = false;
    for (std::size_t a = 0; a < dim && !at_edge; ++a) {
      const long idx = static_cast<long>((q / pad_strides[a]) % static_cast<std::size_t>(padded[a]));
      at_edge = idx == padded[a] / 2;
    }
    if (at_edge) spec_edge = std::max(spec_edge, m);
  }
  if (spec_edge > options.spectral_tol * spec_peak) {
    std::ostringstream msg;
    msg << "reduced_wigner_grid: grid too coarse, propagated spectrum at the band edge is "
        << spec_edge / spec_peak << " of its peak (limit " << options.spectral_tol
        << "); refine the spacing";
    throw GridError(msg.str());
  }

  fft_nd(out, padded, true);
  WignerGrid result = initial;
  for (std::size_t k = 0; k < result.values.size(); ++k) result.values[k] = out[padded_index(k)].real();
  return result;
}

}  // namespace gaussflow
