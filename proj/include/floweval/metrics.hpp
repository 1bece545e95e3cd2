#pragma once

#include "floweval/types.hpp"

#include <span>

namespace floweval {

/// Unified 0-100 score:
///   score = 100 * (1 - (log mse - log mse_min) / (log mse_max - log mse_min))
/// clamped to [0, 100]; mse = 0 maps to 100.
double score(double mse, const ScoreScale& scale = {});

/// Mean of (pred - truth)^2 over included pixels and selected channels,
/// accumulated channel-major then row-major. Throws EmptyRegion.
double mse_masked(const FlowField& pred, const FlowField& truth,
                  const RegionMask& inclusion, const Channels& channels);

/// Node inclusion regions for the metrics; m2's band is a subset of m1's
/// fluid region for any SDF without exact zeros.
RegionMask m1_region(const SignedDistanceField& sdf);
RegionMask m2_region(const SignedDistanceField& sdf, const EvalConfig& config);

/// M1: global MSE over the fluid region (sdf > 0).
double m1(const FlowField& pred, const FlowField& truth, const SignedDistanceField& sdf,
          const EvalConfig& config);

/// M2: MSE restricted to the boundary-layer band (band_lo <= sdf <= band_hi).
double m2(const FlowField& pred, const FlowField& truth, const SignedDistanceField& sdf,
          const EvalConfig& config);

/// M3: momentum-residual L2 total over included cells, normalized per pixel
/// (divided by included-cell count and cell area).
double m3(const FlowField& pred, double re, const SignedDistanceField& sdf,
          const EvalConfig& config);

MetricReport evaluate_sample(const FlowField& pred, const Sample& sample,
                             const EvalConfig& config);

/// Aggregates per-sample raw metrics (arithmetic mean, sample order) and
/// scores the aggregate; with config.aggregate_scores the per-sample scores
/// are averaged instead. `jobs` controls sample-level parallelism; the
/// result is bit-identical for any job count.
MetricReport evaluate_dataset(std::span<const FlowField> preds,
                              std::span<const Sample> samples, const EvalConfig& config,
                              int jobs = 1);

} // namespace floweval
