#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace fedsim {

// Dense binary mask over a rows x cols pixel grid.
struct Mask {
    int rows = 0;
    int cols = 0;
    std::vector<std::uint8_t> data; // row-major, 0 or 1

    Mask() = default;
    Mask(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}

    std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    void set(int r, int c, bool v) { data[static_cast<std::size_t>(r) * cols + c] = v ? 1 : 0; }
    std::size_t count() const;
    bool same_shape(const Mask& o) const { return rows == o.rows && cols == o.cols; }
};

// Nested composite masks in the usual evaluation convention:
// wt = labels in {1,2,3}, tc = labels in {2,3}, et = label 3.
struct MaskTriple {
    Mask et, tc, wt;
};

struct MetricRecord {
    double dice_et = 0, dice_tc = 0, dice_wt = 0;
    double sens_et = 0, sens_tc = 0, sens_wt = 0;
    double spec_et = 0, spec_tc = 0, spec_wt = 0;
    double hd95_et = 0, hd95_tc = 0, hd95_wt = 0;
    double mean_dice = 0;
};

struct SummaryStats {
    double mu = 0, sigma = 0, q1 = 0, q2 = 0, q3 = 0;
};

// Label grid -> composite masks. Labels outside {0,1,2,3} raise DataError.
MaskTriple composite_masks(int rows, int cols, std::span<const std::uint8_t> labels);

// 2TP / (2TP + FP + FN); both masks empty -> 1.0.
double dice(const Mask& pred, const Mask& truth);

// TP / (TP + FN); truth empty -> 1.0.
double sensitivity(const Mask& pred, const Mask& truth);

// TN / (TN + FP); truth all-ones -> 1.0.
double specificity(const Mask& pred, const Mask& truth);

// Max over both directions of the nearest-rank 95th percentile of each
// pixel's nearest-neighbour Euclidean distance to the other mask. Full pixel
// sets are used, not boundaries. One side empty -> grid-diagonal sentinel;
// both empty -> 0.
double hausdorff95(const Mask& pred, const Mask& truth);

// Sentinel returned by hausdorff95 when exactly one mask is empty.
double hausdorff_sentinel(int rows, int cols);

double mean_dice(const MetricRecord& r);

// Builds the full record for one prediction/truth pair.
MetricRecord make_record(const MaskTriple& pred, const MaskTriple& truth);

// Field-wise arithmetic mean; mean_dice recomputed from the averaged Dices.
MetricRecord mean_records(std::span<const MetricRecord> records);

// Mean, population standard deviation, and quartiles by linear interpolation
// between order statistics (type-7: position (n-1)*q).
SummaryStats summary_stats(std::span<const double> values);

} // namespace fedsim
