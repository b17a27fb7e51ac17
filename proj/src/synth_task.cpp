#include "fedsim/synth_task.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Relative sizes of the nested regions: enhancing inside core inside tumor.
constexpr double kCoreScale = 0.65;
constexpr double kEnhancingScale = 0.35;

} // namespace

Scan generate_scan(std::uint64_t seed, const ScanParams& p) {
    if (p.mean_radius <= 0.0)
        throw UsageError("generate_scan: mean_radius must be positive");
    if (p.mean_radius >= p.grid_size / 2.0)
        throw UsageError("generate_scan: mean_radius must be below half the grid size");
    if (p.grid_size < 4) throw UsageError("generate_scan: grid too small");

    Rng rng(seed);

    // Radius and shape. The eccentricity is tied to radius_spread so that
    // radius_spread = 0 degenerates to circles with a fixed radius, making the
    // tumor pixel count independent of placement.
    const double radius = p.mean_radius + p.radius_spread * rng.uniform(-1.0, 1.0);
    if (radius <= 0.0) throw UsageError("generate_scan: drawn radius is degenerate");
    const double ecc = (p.radius_spread / p.mean_radius) * 0.5 * rng.uniform();
    const double semi_a = radius * (1.0 + ecc);
    const double semi_b = radius / (1.0 + ecc);
    const double rotation = rng.uniform(0.0, 3.14159265358979323846);

    const int margin = static_cast<int>(std::ceil(semi_a)) + 1;
    const int lo = margin;
    const int hi = p.grid_size - 1 - margin;
    if (hi < lo)
        throw UsageError("generate_scan: tumor does not fit the grid");
    const int cx = lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    const int cy = lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));

    Scan scan;
    scan.grid_size = p.grid_size;
    scan.labels.assign(scan.pixel_count(), 0);
    scan.features.assign(scan.pixel_count() * kNumChannels, 0.0);

    const double cos_t = std::cos(rotation);
    const double sin_t = std::sin(rotation);
    const bool circular = ecc == 0.0;
    auto inside = [&](int r, int c, double scale) {
        const double dr = static_cast<double>(r - cy);
        const double dc = static_cast<double>(c - cx);
        if (circular) {
            // Pure integer displacement test; keeps the pixel count exactly
            // translation invariant when radius_spread is zero.
            const double rad = radius * scale;
            return dc * dc + dr * dr <= rad * rad;
        }
        const double u = cos_t * dc + sin_t * dr;
        const double v = -sin_t * dc + cos_t * dr;
        const double a = semi_a * scale;
        const double b = semi_b * scale;
        return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    };

    for (int r = 0; r < p.grid_size; ++r) {
        for (int c = 0; c < p.grid_size; ++c) {
            const std::size_t px = static_cast<std::size_t>(r) * p.grid_size + c;
            std::uint8_t label = 0;
            if (inside(r, c, kEnhancingScale)) label = 3;
            else if (inside(r, c, kCoreScale)) label = 2;
            else if (inside(r, c, 1.0)) label = 1;
            scan.labels[px] = label;
            if (label != 0) ++scan.tumor_size;
        }
    }

    // Per-class mean signatures on the channel matching the class, plus noise.
    for (std::size_t px = 0; px < scan.pixel_count(); ++px) {
        const int label = scan.labels[px];
        for (int ch = 0; ch < kNumChannels; ++ch) {
            const double mean = (ch == label) ? p.class_separation : 0.0;
            scan.features[px * kNumChannels + ch] = mean + rng.normal(0.0, p.noise_sigma);
        }
    }
    return scan;
}

LayoutPtr MlpModel::layout(int hidden_width) {
    const auto h = static_cast<std::size_t>(hidden_width);
    return make_layout({
        {"w1", {kNumChannels, h}},
        {"b1", {h}},
        {"w2", {h, kNumClasses}},
        {"b2", {kNumClasses}},
    });
}

MlpModel MlpModel::init(std::uint64_t seed, int hidden_width) {
    Rng rng(seed);
    auto lay = layout(hidden_width);
    std::vector<double> v(lay->total_elements());
    for (auto& x : v) x = rng.uniform(-0.1, 0.1);
    return MlpModel(ParamVector(std::move(lay), std::move(v)));
}

MlpModel::MlpModel(ParamVector params) : params_(std::move(params)) {
    const auto& tensors = params_.layout()->tensors();
    if (tensors.size() != 4 || tensors[0].name != "w1" || tensors[1].name != "b1" ||
        tensors[2].name != "w2" || tensors[3].name != "b2")
        throw StructuralError("MlpModel: unexpected parameter layout");
    hidden_ = static_cast<int>(tensors[1].elements());
}

namespace {

struct MlpView {
    const double* w1; // [4 x H], w1[ch*H + j]
    const double* b1; // [H]
    const double* w2; // [H x 4], w2[j*4 + c]
    const double* b2; // [4]
    int h;
};

MlpView view(const MlpModel& m) {
    const double* base = m.params().values().data();
    const int h = m.hidden_width();
    return MlpView{base, base + kNumChannels * h, base + (kNumChannels + 1) * h,
                   base + (2 * kNumChannels + 1) * h, h};
}

// Hidden activations and softmax probabilities for a single pixel.
void forward_impl(const MlpView& v, std::span<const double, kNumChannels> f,
                  std::vector<double>& hidden, std::array<double, kNumClasses>& probs) {
    hidden.resize(static_cast<std::size_t>(v.h));
    for (int j = 0; j < v.h; ++j) {
        double pre = v.b1[j];
        for (int ch = 0; ch < kNumChannels; ++ch) pre += v.w1[ch * v.h + j] * f[ch];
        hidden[j] = std::tanh(pre);
    }
    std::array<double, kNumClasses> logits{};
    for (int c = 0; c < kNumClasses; ++c) {
        double z = v.b2[c];
        for (int j = 0; j < v.h; ++j) z += v.w2[j * kNumClasses + c] * hidden[j];
        logits[c] = z;
    }
    const double zmax = *std::max_element(logits.begin(), logits.end());
    double denom = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        probs[c] = std::exp(logits[c] - zmax);
        denom += probs[c];
    }
    for (int c = 0; c < kNumClasses; ++c) probs[c] /= denom;
}

} // namespace

std::array<double, kNumClasses> MlpModel::forward(
    std::span<const double, kNumChannels> feature) const {
    if (!params_.all_finite())
        throw StateError("MlpModel::forward: model parameters are not finite");
    std::vector<double> hidden;
    std::array<double, kNumClasses> probs{};
    forward_impl(view(*this), feature, hidden, probs);
    return probs;
}

int MlpModel::predict(std::span<const double, kNumChannels> feature) const {
    const auto probs = forward(feature);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

double loss(const MlpModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw UsageError("loss: empty batch");
    const MlpView v = view(model);
    std::vector<double> hidden;
    std::array<double, kNumClasses> probs{};
    double total = 0.0;
    for (const Sample& s : batch) {
        forward_impl(v, std::span<const double, kNumChannels>(s.feature), hidden, probs);
        const double p = std::max(probs[s.label], 1e-300);
        total += -std::log(p);
    }
    return total / static_cast<double>(batch.size());
}

ParamVector gradient(const MlpModel& model, std::span<const Sample> batch) {
    if (batch.empty()) throw UsageError("gradient: empty batch");
    const MlpView v = view(model);
    const int h = v.h;

    ParamVector grad = ParamVector::zeros(model.params().layout());
    double* g = grad.values().data();
    double* gw1 = g;
    double* gb1 = g + kNumChannels * h;
    double* gw2 = g + (kNumChannels + 1) * h;
    double* gb2 = g + (2 * kNumChannels + 1) * h;

    std::vector<double> hidden;
    std::array<double, kNumClasses> probs{};
    for (const Sample& s : batch) {
        forward_impl(v, std::span<const double, kNumChannels>(s.feature), hidden, probs);

        std::array<double, kNumClasses> dz = probs;
        dz[s.label] -= 1.0;

        for (int j = 0; j < h; ++j) {
            double dh = 0.0;
            for (int c = 0; c < kNumClasses; ++c) {
                gw2[j * kNumClasses + c] += hidden[j] * dz[c];
                dh += v.w2[j * kNumClasses + c] * dz[c];
            }
            const double da = dh * (1.0 - hidden[j] * hidden[j]);
            gb1[j] += da;
            for (int ch = 0; ch < kNumChannels; ++ch)
                gw1[ch * h + j] += s.feature[ch] * da;
        }
        for (int c = 0; c < kNumClasses; ++c) gb2[c] += dz[c];
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < grad.size(); ++i) g[i] *= inv;
    return grad;
}

Update local_train(const MlpModel& start, std::span<const Scan* const> shard,
                   const TrainConfig& cfg, std::uint64_t rng_seed,
                   const std::string& collaborator_id) {
    if (shard.empty()) throw UsageError("local_train: empty shard");
    if (cfg.lr < 0.0) throw UsageError("local_train: negative learning rate");
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.pixels_per_scan < 1)
        throw UsageError("local_train: epochs, batch_size and pixels_per_scan must be >= 1");

    Rng rng(rng_seed);

    // Fixed per-scan pixel subsample, drawn once and revisited every epoch.
    // Sampling is stratified by class: tumor regions cover a small fraction
    // of each grid, and a uniform draw would hand the trainer an almost
    // all-background batch that teaches the class prior before anything else.
    std::vector<Sample> samples;
    for (const Scan* scan : shard) {
        const std::size_t total = scan->pixel_count();
        const std::size_t take =
            std::min<std::size_t>(static_cast<std::size_t>(cfg.pixels_per_scan), total);

        std::array<std::vector<std::uint32_t>, kNumClasses> by_class;
        for (std::size_t px = 0; px < total; ++px)
            by_class[scan->labels[px]].push_back(static_cast<std::uint32_t>(px));
        for (auto& cls : by_class) rng.shuffle(cls.begin(), cls.end());

        std::vector<std::uint32_t> chosen, leftover;
        const std::size_t quota = take / kNumClasses;
        for (const auto& cls : by_class) {
            const std::size_t from_class = std::min(quota, cls.size());
            chosen.insert(chosen.end(), cls.begin(), cls.begin() + from_class);
            leftover.insert(leftover.end(), cls.begin() + from_class, cls.end());
        }
        rng.shuffle(leftover.begin(), leftover.end());
        for (std::size_t i = 0; chosen.size() < take; ++i) chosen.push_back(leftover[i]);

        for (const std::uint32_t px : chosen) {
            Sample s;
            const auto f = scan->feature_at(px);
            std::copy(f.begin(), f.end(), s.feature.begin());
            s.label = scan->labels[px];
            samples.push_back(s);
        }
    }

    const long n_samples = static_cast<long>(samples.size());
    const long batch = std::min<long>(cfg.batch_size, n_samples);
    const long steps_per_epoch = (n_samples + batch - 1) / batch;

    MlpModel model = start;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Sample> mini(static_cast<std::size_t>(batch));

    double epoch_loss = 0.0;
    for (int e = 0; e < cfg.epochs; ++e) {
        rng.shuffle(order.begin(), order.end());
        double loss_sum = 0.0;
        for (long s = 0; s < steps_per_epoch; ++s) {
            const long begin = s * batch;
            const long end = std::min(begin + batch, n_samples);
            mini.resize(static_cast<std::size_t>(end - begin));
            for (long i = begin; i < end; ++i) mini[static_cast<std::size_t>(i - begin)] = samples[order[static_cast<std::size_t>(i)]];

            const double step_loss = loss(model, mini);
            if (!std::isfinite(step_loss) || step_loss > 1e6)
                throw DivergenceError(collaborator_id, -1,
                                      "local_train: loss diverged at collaborator " +
                                          collaborator_id);
            loss_sum += step_loss;

            const ParamVector g = gradient(model, mini);
            model.params() = axpy(-cfg.lr, g, model.params());
            if (!model.params().all_finite())
                throw DivergenceError(collaborator_id, -1,
                                      "local_train: parameters went non-finite at "
                                      "collaborator " + collaborator_id);
        }
        epoch_loss = loss_sum / static_cast<double>(steps_per_epoch);
    }

    Update u;
    u.collaborator_id = collaborator_id;
    u.delta = axpy(-1.0, model.params(), start.params()); // x_start - x_end
    u.tau = static_cast<long>(cfg.epochs) * steps_per_epoch;
    u.n_samples = n_samples;
    u.train_loss = epoch_loss;
    return u;
}

std::vector<std::uint8_t> predict_labels(const MlpModel& model, const Scan& scan) {
    std::vector<std::uint8_t> out(scan.pixel_count());
    for (std::size_t px = 0; px < scan.pixel_count(); ++px)
        out[px] = static_cast<std::uint8_t>(model.predict(scan.feature_at(px)));
    return out;
}

MetricRecord evaluate_scan(const MlpModel& model, const Scan& scan) {
    const auto pred = predict_labels(model, scan);
    const MaskTriple p = composite_masks(scan.grid_size, scan.grid_size, pred);
    const MaskTriple t = composite_masks(scan.grid_size, scan.grid_size, scan.labels);
    return make_record(p, t);
}

std::vector<MetricRecord> evaluate_scans(const MlpModel& model,
                                         std::span<const Scan* const> scans) {
    std::vector<MetricRecord> records;
    records.reserve(scans.size());
    for (const Scan* s : scans) records.push_back(evaluate_scan(model, *s));
    return records;
}

} // namespace fedsim
