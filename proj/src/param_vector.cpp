#include "fedsim/param_vector.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim {

std::size_t TensorSpec::elements() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Layout::Layout(std::vector<TensorSpec> tensors) : tensors_(std::move(tensors)) {
    for (const auto& t : tensors_) total_ += t.elements();
}

std::size_t Layout::offset_of(std::string_view name) const {
    std::size_t off = 0;
    for (const auto& t : tensors_) {
        if (t.name == name) return off;
        off += t.elements();
    }
    throw UsageError("layout has no tensor named '" + std::string(name) + "'");
}

LayoutPtr make_layout(std::vector<TensorSpec> tensors) {
    return std::make_shared<const Layout>(std::move(tensors));
}

ParamVector::ParamVector(LayoutPtr layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (!layout_) throw StructuralError("ParamVector requires a layout");
    if (values_.size() != layout_->total_elements())
        throw StructuralError("ParamVector value count " + std::to_string(values_.size()) +
                              " does not match layout size " +
                              std::to_string(layout_->total_elements()));
}

ParamVector ParamVector::zeros(LayoutPtr layout) {
    if (!layout) throw StructuralError("ParamVector requires a layout");
    std::vector<double> v(layout->total_elements(), 0.0);
    return ParamVector(std::move(layout), std::move(v));
}

bool ParamVector::same_layout(const ParamVector& other) const {
    if (layout_ == other.layout_) return layout_ != nullptr;
    if (!layout_ || !other.layout_) return false;
    return *layout_ == *other.layout_;
}

bool ParamVector::all_finite() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

namespace {

void require_combinable(const ParamVector& a, const ParamVector& b, const char* op) {
    if (!a.same_layout(b))
        throw StructuralError(std::string(op) + ": parameter-vector layouts differ");
}

} // namespace

ParamVector weighted_sum(std::span<const ParamVector* const> vectors,
                         std::span<const double> weights) {
    if (vectors.empty()) throw UsageError("weighted_sum: empty input");
    if (vectors.size() != weights.size())
        throw UsageError("weighted_sum: weight count does not match vector count");
    const ParamVector& first = *vectors.front();
    for (const ParamVector* v : vectors) require_combinable(first, *v, "weighted_sum");

    ParamVector out = ParamVector::zeros(first.layout());
    const std::size_t n = out.size();
    for (std::size_t j = 0; j < vectors.size(); ++j) {
        const double w = weights[j];
        const auto& vals = vectors[j]->values();
        for (std::size_t i = 0; i < n; ++i) out[i] += w * vals[i];
    }
    return out;
}

ParamVector weighted_sum(const std::vector<ParamVector>& vectors,
                         std::span<const double> weights) {
    std::vector<const ParamVector*> ptrs;
    ptrs.reserve(vectors.size());
    for (const auto& v : vectors) ptrs.push_back(&v);
    return weighted_sum(std::span<const ParamVector* const>(ptrs), weights);
}

ParamVector axpy(double a, const ParamVector& x, const ParamVector& y) {
    require_combinable(x, y, "axpy");
    ParamVector out = y;
    const auto& xs = x.values();
    auto& os = out.values();
    for (std::size_t i = 0; i < os.size(); ++i) os[i] = a * xs[i] + os[i];
    return out;
}

ParamVector coordinate_median(std::span<const ParamVector* const> vectors) {
    if (vectors.empty()) throw UsageError("coordinate_median: empty input");
    const ParamVector& first = *vectors.front();
    for (const ParamVector* v : vectors)
        require_combinable(first, *v, "coordinate_median");

    ParamVector out = ParamVector::zeros(first.layout());
    const std::size_t m = vectors.size();
    std::vector<double> column(m);
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) column[j] = (*vectors[j])[i];
        std::sort(column.begin(), column.end());
        if (m % 2 == 1) {
            out[i] = column[m / 2];
        } else {
            out[i] = 0.5 * (column[m / 2 - 1] + column[m / 2]);
        }
    }
    return out;
}

ParamVector coordinate_median(const std::vector<ParamVector>& vectors) {
    std::vector<const ParamVector*> ptrs;
    ptrs.reserve(vectors.size());
    for (const auto& v : vectors) ptrs.push_back(&v);
    return coordinate_median(std::span<const ParamVector* const>(ptrs));
}

double l2_norm(const ParamVector& x) {
    double acc = 0.0;
    for (double v : x.values()) acc += v * v;
    return std::sqrt(acc);
}

} // namespace fedsim
