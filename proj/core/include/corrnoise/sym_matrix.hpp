#pragma once

#include <cstddef>
#include <utility>

#include "corrnoise/tensor.hpp"

namespace corrnoise {

/// Square symmetric matrix. Symmetry is enforced on construction by
/// (M + M^T)/2 rather than trusted from callers; entries (i,j) and (j,i)
/// are bit-identical afterwards.
template <typename T>
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(std::size_t dim) : dim_(dim), entries_(Shape{dim, dim}) {}

    /// Symmetrizing constructor from a dense square matrix.
    explicit SymMatrix(const Tensor<T>& m) {
        if (m.rank() != 2 || m.extent(0) != m.extent(1))
            throw ShapeMismatch("square rank-2 matrix", shape_str(m.shape()));
        dim_ = m.extent(0);
        entries_ = Tensor<T>(Shape{dim_, dim_});
        for (std::size_t i = 0; i < dim_; ++i) {
            entries_(i, i) = m(i, i);
            for (std::size_t j = 0; j < i; ++j) {
                T v = (m(i, j) + m(j, i)) / T{2};
                entries_(i, j) = v;
                entries_(j, i) = v;
            }
        }
    }

    static SymMatrix identity(std::size_t dim) {
        SymMatrix out(dim);
        for (std::size_t i = 0; i < dim; ++i) out.entries_(i, i) = T{1};
        return out;
    }

    std::size_t dim() const { return dim_; }

    T& at(std::size_t i, std::size_t j) { return entries_(i, j); }
    const T& at(std::size_t i, std::size_t j) const { return entries_(i, j); }

    /// Sets m(i,j) and m(j,i) together so symmetry is preserved exactly.
    void set(std::size_t i, std::size_t j, T v) {
        entries_(i, j) = v;
        entries_(j, i) = v;
    }

    const Tensor<T>& dense() const { return entries_; }
    Tensor<T>& dense_mut() { return entries_; }

    T trace() const {
        T t{};
        for (std::size_t i = 0; i < dim_; ++i) t += entries_(i, i);
        return t;
    }

    T max_abs() const {
        T m{};
        for (T v : entries_.flat()) m = std::max(m, std::abs(v));
        return m;
    }

    friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
        return a.entries_ == b.entries_;
    }

private:
    std::size_t dim_ = 0;
    Tensor<T> entries_;
};

}  // namespace corrnoise
