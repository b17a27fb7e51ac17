#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fedsim {

// One named tensor inside a flat parameter vector.
struct TensorSpec {
    std::string name;
    std::vector<std::size_t> shape;

    std::size_t elements() const;
    bool operator==(const TensorSpec&) const = default;
};

// Ordered list of tensors describing how a flat vector maps onto model
// tensors. Vectors are combinable only when their layouts compare equal.
class Layout {
public:
    Layout() = default;
    explicit Layout(std::vector<TensorSpec> tensors);

    std::size_t total_elements() const { return total_; }
    const std::vector<TensorSpec>& tensors() const { return tensors_; }

    // Offset of the first element of the named tensor. UsageError if absent.
    std::size_t offset_of(std::string_view name) const;

    bool operator==(const Layout& other) const { return tensors_ == other.tensors_; }

private:
    std::vector<TensorSpec> tensors_;
    std::size_t total_ = 0;
};

using LayoutPtr = std::shared_ptr<const Layout>;

LayoutPtr make_layout(std::vector<TensorSpec> tensors);

// Flat vector of 64-bit reals plus its layout descriptor.
class ParamVector {
public:
    ParamVector() = default;
    ParamVector(LayoutPtr layout, std::vector<double> values);

    static ParamVector zeros(LayoutPtr layout);

    std::size_t size() const { return values_.size(); }
    const LayoutPtr& layout() const { return layout_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool same_layout(const ParamVector& other) const;
    bool all_finite() const;

private:
    LayoutPtr layout_;
    std::vector<double> values_;
};

// Element-wise sum_j weights[j] * vectors[j]. Layout preserved. Inputs are
// accumulated in the order given; callers that need a deterministic result
// must fix that order themselves (the engine sorts by collaborator id).
ParamVector weighted_sum(std::span<const ParamVector* const> vectors,
                         std::span<const double> weights);
ParamVector weighted_sum(const std::vector<ParamVector>& vectors,
                         std::span<const double> weights);

// a * x + y, element-wise.
ParamVector axpy(double a, const ParamVector& x, const ParamVector& y);

// Per-coordinate median; even counts take the mean of the two middle values.
ParamVector coordinate_median(std::span<const ParamVector* const> vectors);
ParamVector coordinate_median(const std::vector<ParamVector>& vectors);

double l2_norm(const ParamVector& x);

} // namespace fedsim
