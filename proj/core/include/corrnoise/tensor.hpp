#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "corrnoise/errors.hpp"

namespace corrnoise {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ')';
    return os.str();
}

inline std::size_t shape_numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major tensor. Flat index of (i0,...,i_{n-1}) is sum_j i_j*stride_j
/// with stride_{n-1} = 1. Values are contiguous, no stride tricks.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_numel(shape_) != data_.size())
            throw ShapeMismatch(shape_str(shape_) + " with " + std::to_string(shape_numel(shape_)) +
                                    " elements",
                                std::to_string(data_.size()) + " elements");
    }

    Tensor(Shape shape, std::initializer_list<T> init)
        : Tensor(std::move(shape), std::vector<T>(init)) {}

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }
    std::span<T> flat() { return {data_.data(), data_.size()}; }
    std::span<const T> flat() const { return {data_.data(), data_.size()}; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    template <typename... Ix>
    T& operator()(Ix... ix) {
        return data_[flat_index({static_cast<std::size_t>(ix)...})];
    }
    template <typename... Ix>
    const T& operator()(Ix... ix) const {
        return data_[flat_index({static_cast<std::size_t>(ix)...})];
    }

    std::size_t flat_index(std::initializer_list<std::size_t> ix) const {
        std::size_t flat = 0;
        std::size_t axis = 0;
        for (std::size_t i : ix) flat = flat * shape_[axis++] + i;
        return flat;
    }

    /// View of subtensor at index i along axis 0 (contiguous by row-major layout).
    std::span<T> slice0(std::size_t i) {
        std::size_t n = size() / shape_[0];
        return {data_.data() + i * n, n};
    }
    std::span<const T> slice0(std::size_t i) const {
        std::size_t n = size() / shape_[0];
        return {data_.data() + i * n, n};
    }

    Tensor reshaped(Shape s) const {
        if (shape_numel(s) != data_.size()) throw ShapeMismatch(shape_str(s), shape_str(shape_));
        Tensor out = *this;
        out.shape_ = std::move(s);
        return out;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape_);
        for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<T> data_;
};

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw ShapeMismatch(shape_str(a.shape()), shape_str(b.shape()));
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b);
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape(a, b);
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    Tensor<T> out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

template <typename T>
Tensor<T> identity_matrix(std::size_t n) {
    Tensor<T> out(Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) out(i, i) = T{1};
    return out;
}

}  // namespace corrnoise
