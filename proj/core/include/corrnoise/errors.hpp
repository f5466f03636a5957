#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corrnoise {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
public:
    ShapeMismatch(const std::string& expected, const std::string& got)
        : Error("shape mismatch: expected " + expected + ", got " + got) {}
};

/// Cholesky pivot fell at or below tolerance; the caller should repair with
/// nearest_psd and retry.
class NotPositiveDefinite : public Error {
public:
    explicit NotPositiveDefinite(std::size_t pivot_index)
        : Error("matrix not positive definite at pivot " + std::to_string(pivot_index)),
          pivot(pivot_index) {}
    std::size_t pivot;
};

class ZeroNormKernel : public Error {
public:
    explicit ZeroNormKernel(std::size_t kernel_index)
        : Error("kernel " + std::to_string(kernel_index) + " has near-zero norm"),
          index(kernel_index) {}
    std::size_t index;
};

class NegativeRate : public Error {
public:
    explicit NegativeRate(double value)
        : Error("negative rate/activation " + std::to_string(value) +
                " reached a nonnegative-rate noise layer") {}
};

class CapExceeded : public Error {
public:
    CapExceeded(double lambda_, double u_)
        : Error("poisson_quantile iteration cap exceeded (lambda=" + std::to_string(lambda_) +
                ", u=" + std::to_string(u_) + ")"),
          lambda(lambda_), u(u_) {}
    double lambda;
    double u;
};

class DimensionTooLarge : public Error {
public:
    DimensionTooLarge(std::size_t dim_, std::size_t limit_)
        : Error("correlation dimension " + std::to_string(dim_) +
                " exceeds dense limit " + std::to_string(limit_)),
          dim(dim_), limit(limit_) {}
    std::size_t dim;
    std::size_t limit;
};

class ConvergenceFailure : public Error {
public:
    ConvergenceFailure(std::size_t dim_, std::size_t cap_)
        : Error("eigendecomposition failed to converge (dim=" + std::to_string(dim_) +
                ", sweep cap=" + std::to_string(cap_) + ")"),
          dim(dim_), cap(cap_) {}
    std::size_t dim;
    std::size_t cap;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class MissingFile : public DataError {
public:
    explicit MissingFile(const std::string& name) : DataError("missing file: " + name) {}
};

class TruncatedFile : public DataError {
public:
    TruncatedFile(const std::string& name, std::size_t expected, std::size_t got)
        : DataError("truncated file " + name + ": expected " + std::to_string(expected) +
                    " bytes, got " + std::to_string(got)) {}
};

class CorruptRecord : public DataError {
public:
    using DataError::DataError;
};

}  // namespace corrnoise
