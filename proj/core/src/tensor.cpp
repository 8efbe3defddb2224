#include "mcg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mcg/error.hpp"

namespace mcg {

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(values.begin(), values.end()) {
    if (data_.size() != shape_numel(shape_)) {
        throw ValidationError("tensor payload has " + std::to_string(data_.size()) + " elements, shape " +
                              shape_to_string(shape_) + " needs " + std::to_string(shape_numel(shape_)));
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_numel(shape) != data_.size()) {
        throw ValidationError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
    }
    Tensor out = *this;
    out.shape_ = std::move(shape);
    return out;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double Tensor::sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), 0.0); }

double Tensor::squared_norm() const noexcept {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
}

double Tensor::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ValidationError(std::string(what) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                              shape_to_string(b.shape()));
    }
}

Tensor& Tensor::operator+=(const Tensor& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(double s) noexcept {
    for (double& v : data_) v *= s;
    return *this;
}

Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
Tensor operator*(Tensor a, double s) { return a *= s; }
Tensor operator*(double s, Tensor a) { return a *= s; }

Tensor axpby(double a, const Tensor& x, double b, const Tensor& y) {
    require_same_shape(x, y, "axpby");
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mean_abs_diff");
    if (a.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

Tensor slice_frames(const Tensor& x, std::size_t first, std::size_t count) {
    if (x.rank() != 4) throw ValidationError("slice_frames expects a [C, F, H, W] tensor");
    const std::size_t c = x.dim(0), f = x.dim(1), hw = x.dim(2) * x.dim(3);
    if (first + count > f) throw ValidationError("slice_frames: frame range out of bounds");
    Tensor out({c, count, x.dim(2), x.dim(3)});
    for (std::size_t ci = 0; ci < c; ++ci) {
        const double* src = x.data() + (ci * f + first) * hw;
        std::copy(src, src + count * hw, out.data() + ci * count * hw);
    }
    return out;
}

}  // namespace mcg
