#pragma once

// Reduced Weyl symbols sampled on rectangular phase-space grids, propagated in
// Fourier space:
//   rho~_t(zeta) = rho~_0(Phi_ii^T zeta) exp(-i zeta . Phi_ie m_E) exp(-1/2 zeta . Theta zeta).

#include <Eigen/Dense>

#include <vector>

#include "gaussflow/bipartite.hpp"
#include "gaussflow/states.hpp"

namespace gaussflow {

// Samples on a tensor grid over R^{2d}; axis a has nodes lower[a] + i * spacing[a],
// i = 0..shape[a]-1. Values are stored row-major (last axis fastest).
struct WignerGrid {
  Eigen::Index d = 0;
  std::vector<double> lower;
  std::vector<double> spacing;
  std::vector<int> shape;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double coordinate(std::size_t axis, int i) const { return lower[axis] + i * spacing[axis]; }
  VectorXd point(std::size_t flat) const;
  double cell_volume() const;
};

// Symmetric box [-half_width, half_width]^{2d} with `points` nodes per axis.
WignerGrid make_wigner_grid(Eigen::Index d, double half_width, int points);
WignerGrid make_wigner_grid(Eigen::Index d, const std::vector<double>& lower,
                            const std::vector<double>& upper, const std::vector<int>& shape);

// Fills the grid with the Weyl symbol of a Gaussian state.
WignerGrid sample_gaussian(WignerGrid grid, const GaussianState<double>& state);

// (2 pi)^{-d} sum rho * cell volume; 1 for a normalized state.
double grid_mass(const WignerGrid& grid);

// Largest |value| on the faces of the box.
double boundary_max(const WignerGrid& grid);

struct WignerGridOptions {
  int padding = 4;              // zero padding factor per axis
  int interpolation_order = 5;  // Lagrange order in frequency: 1 (multilinear), 3 or 5
  double boundary_tol = 1e-8;   // input must decay below this fraction of its peak
  double spectral_tol = 1e-8;   // output spectrum at the band edge, relative to its peak
};

WignerGrid reduced_wigner_grid(const WignerGrid& initial, const FlowSnapshot& snap,
                               const GaussianState<double>& environment0,
                               const WignerGridOptions& options = {});

}  // namespace gaussflow
