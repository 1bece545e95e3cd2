#pragma once

#include "floweval/types.hpp"

namespace floweval {

/// Signed distance field from a binary mask via an exact Euclidean distance
/// transform (two-pass 1D lower-envelope decomposition, no chamfer
/// approximation). Distances are measured to the nearest opposite-phase pixel
/// center and scaled by the grid spacing. With interface_calibration the zero
/// level is shifted onto the half-cell interface by subtracting h/2; pass
/// false to keep the raw pixel-center distances.
/// Throws DegenerateMask for single-phase masks.
SignedDistanceField sdf_from_mask(const GeometryMask& mask,
                                  bool interface_calibration = true);

/// mask = 1 where sdf > 0, 0 where sdf <= 0 (boundary nodes count as inside).
GeometryMask mask_from_sdf(const SignedDistanceField& sdf);

/// Inclusion mask for lo <= sdf <= hi, inclusive on both ends.
/// Throws EmptyBand if no node qualifies.
RegionMask band_mask(const SignedDistanceField& sdf, double lo, double hi);

/// Pointwise | ||grad d|| - 1 |, central differences in the interior and
/// second-order one-sided differences on the domain boundary. A clean
/// distance field gives small values away from the skeleton and interface.
ScalarField eikonal_residual(const SignedDistanceField& sdf);

} // namespace floweval
