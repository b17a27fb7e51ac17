#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedsim/metrics.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/update.hpp"

namespace fedsim {

inline constexpr int kNumChannels = 4;
inline constexpr int kNumClasses = 4; // background, edema, necrotic core, enhancing

// Geometry and signal parameters for synthetic scans.
struct ScanParams {
    int grid_size = 32;
    double mean_radius = 8.0;
    double radius_spread = 2.0;
    double noise_sigma = 0.3;
    double class_separation = 1.0;
};

// A synthetic "scan": per-pixel 4-channel features plus a label grid built
// from three concentric ellipses (enhancing inside core inside whole tumor).
struct Scan {
    int id = 0;
    int grid_size = 0;
    std::vector<double> features;      // grid*grid*4, pixel-major
    std::vector<std::uint8_t> labels;  // grid*grid, values in {0,1,2,3}
    int tumor_size = 0;                // pixels with label != 0

    std::span<const double, kNumChannels> feature_at(std::size_t pixel) const {
        return std::span<const double, kNumChannels>(
            features.data() + pixel * kNumChannels, kNumChannels);
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(grid_size) * grid_size;
    }
};

// Deterministic function of (seed, params). Tumor pixel count depends only on
// the drawn radii (integer pixel centers keep it translation invariant), so
// radius_spread = 0 forces equal tumor sizes across seeds.
Scan generate_scan(std::uint64_t seed, const ScanParams& params);

// One labelled pixel as seen by the trainer.
struct Sample {
    std::array<double, kNumChannels> feature{};
    int label = 0;
};

struct TrainConfig {
    double lr = 5e-5;
    int epochs = 1;
    int batch_size = 8;       // pixels per mini-batch, clipped to the epoch size
    int pixels_per_scan = 64; // per-scan subsample drawn once per round
};

// Two-layer per-pixel classifier with tanh hidden units and softmax output.
// Parameters live in a flat ParamVector with layout
// [w1 (4xH), b1 (H), w2 (Hx4), b2 (4)].
class MlpModel {
public:
    static LayoutPtr layout(int hidden_width);

    // Uniform init in [-0.1, 0.1] from the given seed.
    static MlpModel init(std::uint64_t seed, int hidden_width = 16);

    explicit MlpModel(ParamVector params);

    int hidden_width() const { return hidden_; }
    const ParamVector& params() const { return params_; }
    ParamVector& params() { return params_; }

    // Softmax class probabilities. StateError if the model is non-finite.
    std::array<double, kNumClasses> forward(
        std::span<const double, kNumChannels> feature) const;

    // Argmax class; ties resolved toward the lower class index.
    int predict(std::span<const double, kNumChannels> feature) const;

private:
    ParamVector params_;
    int hidden_ = 0;
};

// Mean cross-entropy over the batch.
double loss(const MlpModel& model, std::span<const Sample> batch);

// Exact analytic gradient of loss(); same layout as the model.
ParamVector gradient(const MlpModel& model, std::span<const Sample> batch);

// E epochs of mini-batch SGD over a fixed per-scan pixel subsample.
// n_samples = pixels visited per epoch; tau = E * ceil(n_samples / B).
// Throws DivergenceError when the loss goes non-finite or above 1e6.
Update local_train(const MlpModel& start, std::span<const Scan* const> shard,
                   const TrainConfig& cfg, std::uint64_t rng_seed,
                   const std::string& collaborator_id);

// Argmax label grid for a whole scan.
std::vector<std::uint8_t> predict_labels(const MlpModel& model, const Scan& scan);

// Full metric record of a model against one scan's ground truth.
MetricRecord evaluate_scan(const MlpModel& model, const Scan& scan);

// Per-scan records, in input order.
std::vector<MetricRecord> evaluate_scans(const MlpModel& model,
                                         std::span<const Scan* const> scans);

} // namespace fedsim
