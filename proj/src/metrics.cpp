#include "floweval/metrics.hpp"

#include "floweval/calculus.hpp"
#include "floweval/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>
#include <vector>

namespace floweval {

double score(double mse, const ScoreScale& scale) {
    if (!(mse >= 0.0)) raise(ErrorCode::InvalidArgument, "mse must be nonnegative");
    if (!(0.0 < scale.mse_min && scale.mse_min < scale.mse_max))
        raise(ErrorCode::InvalidArgument, "score scale requires 0 < mse_min < mse_max");
    if (mse == 0.0) return 100.0;
    const double s = 100.0 * (1.0 - (std::log(mse) - std::log(scale.mse_min)) /
                                        (std::log(scale.mse_max) - std::log(scale.mse_min)));
    return std::clamp(s, 0.0, 100.0);
}

namespace {

double channel_mse(const ScalarField& pred, const ScalarField& truth,
                   const RegionMask& inclusion, std::size_t n_included) {
    double acc = 0.0;
    for (std::size_t k = 0; k < inclusion.values.size(); ++k) {
        if (!inclusion.values[k]) continue;
        const double d = pred.values[k] - truth.values[k];
        acc += d * d;
    }
    return acc / static_cast<double>(n_included);
}

PerChannelMse per_channel_mse(const FlowField& pred, const FlowField& truth,
                              const RegionMask& inclusion) {
    const std::size_t n = inclusion.count();
    if (n == 0) raise(ErrorCode::EmptyRegion, "inclusion region has no pixels");
    return PerChannelMse{channel_mse(pred.u, truth.u, inclusion, n),
                         channel_mse(pred.v, truth.v, inclusion, n),
                         channel_mse(pred.p, truth.p, inclusion, n)};
}

void require_same_grid(const FlowField& pred, const FlowField& truth) {
    if (!(pred.grid() == truth.grid()))
        raise(ErrorCode::ShapeMismatch, "prediction and truth grids differ");
}

} // namespace

double mse_masked(const FlowField& pred, const FlowField& truth,
                  const RegionMask& inclusion, const Channels& channels) {
    require_same_grid(pred, truth);
    if (!(pred.grid() == inclusion.grid))
        raise(ErrorCode::ShapeMismatch, "inclusion mask grid differs from fields");
    if (channels.count() == 0)
        raise(ErrorCode::InvalidArgument, "no channels selected");
    const std::size_t n = inclusion.count();
    if (n == 0) raise(ErrorCode::EmptyRegion, "inclusion region has no pixels");

    double acc = 0.0;
    if (channels.u) acc += channel_mse(pred.u, truth.u, inclusion, n);
    if (channels.v) acc += channel_mse(pred.v, truth.v, inclusion, n);
    if (channels.p) acc += channel_mse(pred.p, truth.p, inclusion, n);
    return acc / channels.count();
}

RegionMask m1_region(const SignedDistanceField& sdf) {
    std::vector<std::uint8_t> m(sdf.values.size());
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = sdf.values[k] > 0.0 ? 1 : 0;
    return RegionMask::make(sdf.grid, std::move(m));
}

RegionMask m2_region(const SignedDistanceField& sdf, const EvalConfig& config) {
    return band_mask(sdf, config.band_lo, config.band_hi);
}

double m1(const FlowField& pred, const FlowField& truth, const SignedDistanceField& sdf,
          const EvalConfig& config) {
    config.validate();
    return mse_masked(pred, truth, m1_region(sdf), config.channels);
}

double m2(const FlowField& pred, const FlowField& truth, const SignedDistanceField& sdf,
          const EvalConfig& config) {
    config.validate();
    return mse_masked(pred, truth, m2_region(sdf, config), config.channels);
}

double m3(const FlowField& pred, double re, const SignedDistanceField& sdf,
          const EvalConfig& config) {
    config.validate();
    if (!(pred.grid() == sdf.grid))
        raise(ErrorCode::ShapeMismatch, "sdf grid differs from prediction");
    const auto [rx, ry] = momentum_residual(pred, re, config);
    const ResidualFields res =
        cell_l2_total(rx, ry, m1_region(sdf), config.exclusion_halo);
    const double cell_area = pred.grid().h * pred.grid().h;
    const auto n_cells = static_cast<double>(res.included_cells.count());
    return res.r_total / (n_cells * cell_area);
}

MetricReport evaluate_sample(const FlowField& pred, const Sample& sample,
                             const EvalConfig& config) {
    config.validate();
    if (!(pred.grid() == sample.grid()))
        raise(ErrorCode::ShapeMismatch, "prediction grid differs from sample grid");

    // shipped SDFs are used as-is; fall back to the mask-derived transform
    const SignedDistanceField sdf =
        sample.sdf ? *sample.sdf : sdf_from_mask(*sample.mask);

    const RegionMask r1 = m1_region(sdf);
    const RegionMask r2 = m2_region(sdf, config);

    MetricReport rep;
    rep.n_samples = 1;
    rep.m1_per_channel = per_channel_mse(pred, sample.truth, r1);
    rep.m2_per_channel = per_channel_mse(pred, sample.truth, r2);
    const auto combine = [&](const PerChannelMse& c) {
        double acc = 0.0;
        if (config.channels.u) acc += c.u;
        if (config.channels.v) acc += c.v;
        if (config.channels.p) acc += c.p;
        return acc / config.channels.count();
    };
    rep.m1_mse = combine(*rep.m1_per_channel);
    rep.m2_mse = combine(*rep.m2_per_channel);
    rep.m3_raw = m3(pred, sample.re, sdf, config);
    rep.m1_score = score(rep.m1_mse, config.scale());
    rep.m2_score = score(rep.m2_mse, config.scale());
    rep.m3_score = score(rep.m3_raw, config.scale());
    return rep;
}

MetricReport evaluate_dataset(std::span<const FlowField> preds,
                              std::span<const Sample> samples, const EvalConfig& config,
                              int jobs) {
    config.validate();
    if (preds.size() != samples.size())
        raise(ErrorCode::LengthMismatch,
              "got " + std::to_string(preds.size()) + " predictions for " +
                  std::to_string(samples.size()) + " samples");
    if (samples.empty()) raise(ErrorCode::LengthMismatch, "empty dataset");
    for (std::size_t k = 0; k < samples.size(); ++k)
        if (!(preds[k].grid() == samples[k].grid()))
            raise(ErrorCode::ShapeMismatch,
                  "grid mismatch at sample " + samples[k].id);

    const std::size_t n = samples.size();
    std::vector<MetricReport> per_sample(n);
    jobs = std::max(1, jobs);

    if (jobs == 1 || n == 1) {
        for (std::size_t k = 0; k < n; ++k)
            per_sample[k] = evaluate_sample(preds[k], samples[k], config);
    } else {
        // indexed slots keep the aggregation order fixed regardless of jobs
        std::vector<std::thread> workers;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::atomic<std::size_t> next{0};
        const int n_workers = std::min<std::size_t>(jobs, n);
        for (int w = 0; w < n_workers; ++w) {
            workers.emplace_back([&] {
                for (;;) {
                    const std::size_t k = next.fetch_add(1);
                    if (k >= n) return;
                    try {
                        per_sample[k] = evaluate_sample(preds[k], samples[k], config);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : workers) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    MetricReport agg;
    agg.n_samples = static_cast<std::int64_t>(n);
    PerChannelMse c1, c2;
    double s1 = 0, s2 = 0, s3 = 0;
    for (const MetricReport& r : per_sample) {
        agg.m1_mse += r.m1_mse;
        agg.m2_mse += r.m2_mse;
        agg.m3_raw += r.m3_raw;
        s1 += r.m1_score;
        s2 += r.m2_score;
        s3 += r.m3_score;
        c1.u += r.m1_per_channel->u;
        c1.v += r.m1_per_channel->v;
        c1.p += r.m1_per_channel->p;
        c2.u += r.m2_per_channel->u;
        c2.v += r.m2_per_channel->v;
        c2.p += r.m2_per_channel->p;
    }
    const double inv = 1.0 / static_cast<double>(n);
    agg.m1_mse *= inv;
    agg.m2_mse *= inv;
    agg.m3_raw *= inv;
    c1.u *= inv; c1.v *= inv; c1.p *= inv;
    c2.u *= inv; c2.v *= inv; c2.p *= inv;
    agg.m1_per_channel = c1;
    agg.m2_per_channel = c2;
    if (config.aggregate_scores) {
        agg.m1_score = s1 * inv;
        agg.m2_score = s2 * inv;
        agg.m3_score = s3 * inv;
    } else {
        agg.m1_score = score(agg.m1_mse, config.scale());
        agg.m2_score = score(agg.m2_mse, config.scale());
        agg.m3_score = score(agg.m3_raw, config.scale());
    }
    return agg;
}

} // namespace floweval
