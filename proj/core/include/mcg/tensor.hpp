#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace mcg {

using Shape = std::vector<std::size_t>;

/// 64-byte aligned allocation, so vectorized kernels see the same alignment
/// (and therefore the same summation order) on every run.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() noexcept = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <class U>
    friend bool operator==(const AlignedAllocator&, const AlignedAllocator<U>&) noexcept {
        return true;
    }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

/// Dense row-major array of doubles. Value semantics; copies are deep.
///
/// Video-like tensors use the [C, F, H, W] layout throughout the library.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }
    static Tensor scalar(double v) { return Tensor({1}, v); }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::span<double> values() noexcept { return data_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return data_; }
    [[nodiscard]] double* data() noexcept { return data_.data(); }
    [[nodiscard]] const double* data() const noexcept { return data_.data(); }
    [[nodiscard]] const Storage& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    /// 4-D accessors for [C, F, H, W] tensors.
    double& at(std::size_t c, std::size_t f, std::size_t h, std::size_t w) noexcept {
        return data_[((c * shape_[1] + f) * shape_[2] + h) * shape_[3] + w];
    }
    double at(std::size_t c, std::size_t f, std::size_t h, std::size_t w) const noexcept {
        return data_[((c * shape_[1] + f) * shape_[2] + h) * shape_[3] + w];
    }

    /// Reinterprets the payload with a new shape of equal element count.
    [[nodiscard]] Tensor reshaped(Shape shape) const;

    void fill(double v);
    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] double sum() const noexcept;
    [[nodiscard]] double squared_norm() const noexcept;
    [[nodiscard]] double max_abs() const noexcept;

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(double s) noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    Storage data_;
};

Tensor operator+(Tensor a, const Tensor& b);
Tensor operator-(Tensor a, const Tensor& b);
Tensor operator*(Tensor a, double s);
Tensor operator*(double s, Tensor a);

/// Elementwise a*x + b*y.
Tensor axpby(double a, const Tensor& x, double b, const Tensor& y);

double max_abs_diff(const Tensor& a, const Tensor& b);
double mean_abs_diff(const Tensor& a, const Tensor& b);

/// Copies frame range [first, first+count) of a [C, F, H, W] tensor.
Tensor slice_frames(const Tensor& x, std::size_t first, std::size_t count);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace mcg
