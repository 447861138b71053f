#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <vector>

#include "plmforge/errors.hpp"

namespace plmforge::num {

// Dense row-major tensor. Float (training default) or double (test mode),
// chosen by the template parameter. Ops treat tensors as immutable values;
// mutation happens only through data() during construction/kernels.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), T(0)) {}

    Tensor(std::vector<std::size_t> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size()) {
            throw ShapeError("tensor data length does not match shape");
        }
    }

    static Tensor scalar(T v) { return Tensor({}, {v}); }

    static Tensor full(std::vector<std::size_t> shape, T v) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t.data_[i * n + i] = T(1);
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }
    bool is_scalar() const { return data_.size() == 1 && shape_.empty(); }

    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    // For the 2-D case, the dominant one in this codebase.
    std::size_t rows() const { return rank() == 2 ? shape_[0] : (rank() == 1 ? 1 : throw_rank()); }
    std::size_t cols() const { return rank() == 2 ? shape_[1] : (rank() == 1 ? shape_[0] : throw_rank()); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& vec() { return data_; }
    const std::vector<T>& vec() const { return data_; }

    T& at(std::size_t i) { return data_[i]; }
    T at(std::size_t i) const { return data_[i]; }
    T& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    T at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    T value() const {
        if (numel() != 1) throw ContractError("value() on non-scalar tensor");
        return data_[0];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (T v : data_) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    void fill(T v) {
        for (auto& x : data_) x = v;
    }

    static std::size_t count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t(1),
                               [](std::size_t a, std::size_t b) { return a * b; });
    }

    static std::string shape_str(const std::vector<std::size_t>& shape) {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << ',';
            os << shape[i];
        }
        os << ']';
        return os.str();
    }

private:
    [[noreturn]] static std::size_t throw_rank() {
        throw ShapeError("rows()/cols() require a 1-D or 2-D tensor");
    }

    std::vector<std::size_t> shape_;
    std::vector<T> data_;
};

} // namespace plmforge::num
