#include "fedsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedsim/errors.hpp"

namespace fedsim {

std::size_t Mask::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

MaskTriple composite_masks(int rows, int cols, std::span<const std::uint8_t> labels) {
    if (labels.size() != static_cast<std::size_t>(rows) * cols)
        throw UsageError("composite_masks: label grid size mismatch");
    MaskTriple t{Mask(rows, cols), Mask(rows, cols), Mask(rows, cols)};
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::uint8_t l = labels[i];
        if (l > 3) throw DataError("composite_masks: label out of range {0..3}");
        if (l >= 1) t.wt.data[i] = 1;
        if (l >= 2) t.tc.data[i] = 1;
        if (l == 3) t.et.data[i] = 1;
    }
    return t;
}

namespace {

struct Counts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts confusion(const Mask& pred, const Mask& truth, const char* op) {
    if (!pred.same_shape(truth))
        throw UsageError(std::string(op) + ": mask shapes differ");
    Counts c;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool p = pred.data[i] != 0;
        const bool t = truth.data[i] != 0;
        if (p && t) ++c.tp;
        else if (p && !t) ++c.fp;
        else if (!p && t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

std::vector<std::pair<int, int>> mask_pixels(const Mask& m) {
    std::vector<std::pair<int, int>> px;
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            if (m.at(r, c)) px.emplace_back(r, c);
    return px;
}

// Nearest-rank percentile of each source pixel's nearest-neighbour distance.
double directed_percentile(const std::vector<std::pair<int, int>>& from,
                           const std::vector<std::pair<int, int>>& to,
                           double q) {
    std::vector<double> nn;
    nn.reserve(from.size());
    for (const auto& [fr, fc] : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [tr, tc] : to) {
            const double dr = fr - tr;
            const double dc = fc - tc;
            best = std::min(best, dr * dr + dc * dc);
        }
        nn.push_back(std::sqrt(best));
    }
    std::sort(nn.begin(), nn.end());
    const std::size_t rank =
        static_cast<std::size_t>(std::ceil(q * static_cast<double>(nn.size())));
    return nn[std::max<std::size_t>(rank, 1) - 1];
}

} // namespace

double dice(const Mask& pred, const Mask& truth) {
    const Counts c = confusion(pred, truth, "dice");
    const std::size_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

double sensitivity(const Mask& pred, const Mask& truth) {
    const Counts c = confusion(pred, truth, "sensitivity");
    if (c.tp + c.fn == 0) return 1.0;
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

double specificity(const Mask& pred, const Mask& truth) {
    const Counts c = confusion(pred, truth, "specificity");
    if (c.tn + c.fp == 0) return 1.0;
    return static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
}

double hausdorff_sentinel(int rows, int cols) {
    return std::hypot(static_cast<double>(rows - 1), static_cast<double>(cols - 1));
}

double hausdorff95(const Mask& pred, const Mask& truth) {
    if (!pred.same_shape(truth))
        throw UsageError("hausdorff95: mask shapes differ");
    const auto a = mask_pixels(pred);
    const auto b = mask_pixels(truth);
    if (a.empty() && b.empty()) return 0.0;
    if (a.empty() || b.empty()) return hausdorff_sentinel(pred.rows, pred.cols);
    return std::max(directed_percentile(a, b, 0.95), directed_percentile(b, a, 0.95));
}

double mean_dice(const MetricRecord& r) {
    return (r.dice_et + r.dice_tc + r.dice_wt) / 3.0;
}

MetricRecord make_record(const MaskTriple& pred, const MaskTriple& truth) {
    MetricRecord r;
    r.dice_et = dice(pred.et, truth.et);
    r.dice_tc = dice(pred.tc, truth.tc);
    r.dice_wt = dice(pred.wt, truth.wt);
    r.sens_et = sensitivity(pred.et, truth.et);
    r.sens_tc = sensitivity(pred.tc, truth.tc);
    r.sens_wt = sensitivity(pred.wt, truth.wt);
    r.spec_et = specificity(pred.et, truth.et);
    r.spec_tc = specificity(pred.tc, truth.tc);
    r.spec_wt = specificity(pred.wt, truth.wt);
    r.hd95_et = hausdorff95(pred.et, truth.et);
    r.hd95_tc = hausdorff95(pred.tc, truth.tc);
    r.hd95_wt = hausdorff95(pred.wt, truth.wt);
    r.mean_dice = mean_dice(r);
    return r;
}

MetricRecord mean_records(std::span<const MetricRecord> records) {
    if (records.empty()) throw UsageError("mean_records: empty input");
    MetricRecord m;
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        m.dice_et += r.dice_et; m.dice_tc += r.dice_tc; m.dice_wt += r.dice_wt;
        m.sens_et += r.sens_et; m.sens_tc += r.sens_tc; m.sens_wt += r.sens_wt;
        m.spec_et += r.spec_et; m.spec_tc += r.spec_tc; m.spec_wt += r.spec_wt;
        m.hd95_et += r.hd95_et; m.hd95_tc += r.hd95_tc; m.hd95_wt += r.hd95_wt;
    }
    m.dice_et /= n; m.dice_tc /= n; m.dice_wt /= n;
    m.sens_et /= n; m.sens_tc /= n; m.sens_wt /= n;
    m.spec_et /= n; m.spec_tc /= n; m.spec_wt /= n;
    m.hd95_et /= n; m.hd95_tc /= n; m.hd95_wt /= n;
    m.mean_dice = mean_dice(m);
    return m;
}

SummaryStats summary_stats(std::span<const double> values) {
    if (values.empty()) throw UsageError("summary_stats: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    SummaryStats s;
    const double n = static_cast<double>(sorted.size());
    s.mu = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    double var = 0.0;
    for (double v : sorted) var += (v - s.mu) * (v - s.mu);
    s.sigma = std::sqrt(var / n);

    auto quantile = [&](double q) {
        const double pos = (n - 1.0) * q;
        const auto lo = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= sorted.size()) return sorted.back();
        return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
    };
    s.q1 = quantile(0.25);
    s.q2 = quantile(0.50);
    s.q3 = quantile(0.75);
    return s;
}

} // namespace fedsim
