#pragma once

#include "floweval/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace floweval {

struct Provenance {
    std::string source;
    std::string format; ///< "canonical-dir", "canonical-zip" or "npz"
};

struct Dataset {
    std::vector<Sample> samples;
    Provenance provenance;

    static Dataset make(std::vector<Sample> samples, Provenance provenance);
    const Grid& grid() const { return samples.front().grid(); }
    const Sample* find(const std::string& id) const;
};

enum class SplitProtocol { Random, Extrapolatory, Subset };

std::string to_string(SplitProtocol protocol);
SplitProtocol split_protocol_from_string(const std::string& name);

/// Deterministic train/test partition. Id lists are normalized to ascending
/// lexicographic order; identical inputs always reproduce identical lists.
struct SplitResult {
    SplitProtocol protocol = SplitProtocol::Random;
    std::uint64_t seed = 0;
    std::map<std::string, double> parameters;
    std::optional<std::string> base_protocol; ///< set by subsample
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
};

void save_split(const std::filesystem::path& path, const SplitResult& split);
SplitResult load_split(const std::filesystem::path& path);

/// split-prng-v1: splitmix64 stream feeding a Fisher-Yates shuffle
/// (j = next() % (i+1), i from n-1 down to 1) over the ascending-sorted ids.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// Uniform shuffle split; floor(n * test_fraction) samples go to test.
SplitResult random_split(const Dataset& dataset, double test_fraction,
                         std::uint64_t seed);

/// Sort by (Re, id); test takes the lowest and highest ceil(n * tail_fraction)
/// samples. With span_based the tails are cut at fractions of the numeric
/// Re span instead of empirical quantiles.
SplitResult extrapolatory_split(const Dataset& dataset, double tail_fraction,
                                bool span_based = false);

/// Uniform random subset of the train ids; test ids are carried unchanged.
SplitResult subsample(const SplitResult& split, std::size_t n_train,
                      std::uint64_t seed);

/// Equal per-category draw (remainders in category name order). Throws
/// SubsetTooLarge when a category cannot supply its share.
SplitResult subsample_stratified(const SplitResult& split, const Dataset& dataset,
                                 std::size_t n_train, std::uint64_t seed);

// -- archive I/O --------------------------------------------------------

/// Channel assignment for npz-style archives ([N, C, H, W] tensors).
struct ChannelMap {
    std::string input_array = "input";
    std::string output_array = "output";
    int geometry_channel = 0;
    int re_channel = 1;
    int u_channel = 0;
    int v_channel = 1;
    int p_channel = 2;
    std::string geometry_kind = "sdf"; ///< "sdf" or "mask"
    // physical extents (npz archives carry no grid metadata)
    double x0 = 0.0, x1 = 2.0;
    double y0 = 0.0, y1 = 2.0;
};

struct LoadOptions {
    ChannelMap mapping;
    /// canonical archives only: skip tensor payloads (ids + Re for splitting)
    bool metadata_only = false;
};

/// Reads a canonical archive (directory or zip with manifest.json) or an
/// npz-style archive. Validates shapes, finiteness and mask binarity.
Dataset load_archive(const std::filesystem::path& path, const LoadOptions& options = {});

/// Canonical writer; ".zip" suffix selects the zip flavor, anything else a
/// directory. Tensors are little-endian float32 (mask uint8), row-major.
void write_archive(const std::filesystem::path& path, const Dataset& dataset);

struct PredictionSet {
    std::vector<std::string> ids;
    std::vector<FlowField> fields;
};

/// Predicted u/v/p fields from a canonical archive (re and geometry optional)
/// or an npz output array.
PredictionSet load_predictions(const std::filesystem::path& path,
                               const LoadOptions& options = {});

void write_predictions(const std::filesystem::path& path, const PredictionSet& preds,
                       const Grid& grid);

// -- manufactured verification samples ----------------------------------

enum class ManufacturedKind { PolynomialShear, RadialDisc, ProductSine };

/// A sample with closed-form fields plus metric expectations:
///  - polynomial-shear: u = y - y0, v = 0, p = 0 on a geometry-free domain
///    (residual identically zero, also discretely);
///  - radial-disc: disc obstacle with analytic SDF, u = v = max(sdf, 0) so
///    velocity vanishes at the interface, p = 0;
///  - product-sine: u = sin(pi X) sin(pi Y), v = cos(pi X) cos(pi Y)
///    (divergence-free) in normalized coordinates, p = 0.
struct ManufacturedSample {
    Sample sample;
    /// expectations for a zero prediction, evaluated at the grid nodes from
    /// the analytic formulas (independently of the field machinery)
    double m1_zero_pred = 0.0;
    double m2_zero_pred = 0.0;
    /// grid-independent continuum limits, where a closed form exists
    std::optional<double> m1_zero_pred_limit;
    std::optional<double> m2_zero_pred_limit;
    /// continuum limit of m3 on the truth field itself
    std::optional<double> m3_truth_limit;
};

ManufacturedSample manufactured_sample(ManufacturedKind kind, const Grid& grid,
                                       double re, const EvalConfig& config = {});

} // namespace floweval
