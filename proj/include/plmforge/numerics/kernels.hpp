#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace plmforge::num {

// Raw row-major kernels shared by the tape ops, the no-grad forward and the
// incremental sampling path. Keeping one implementation per primitive keeps
// all three paths numerically identical (same accumulation order).

// C[m,n] = A[m,k] * B[k,n]   (accumulate: C +=)
template <typename T>
void gemm_nn(std::size_t m, std::size_t k, std::size_t n,
             const T* a, const T* b, T* c, bool accumulate = false) {
    for (std::size_t i = 0; i < m; ++i) {
        T* ci = c + i * n;
        if (!accumulate) {
            for (std::size_t j = 0; j < n; ++j) ci[j] = T(0);
        }
        const T* ai = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = ai[p];
            if (av == T(0)) continue;
            const T* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

// C[m,n] = A[m,k] * B[n,k]^T
template <typename T>
void gemm_nt(std::size_t m, std::size_t k, std::size_t n,
             const T* a, const T* b, T* c, bool accumulate = false) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* ai = a + i * k;
        T* ci = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const T* bj = b + j * k;
            T acc = accumulate ? ci[j] : T(0);
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] = acc;
        }
    }
}

// C[k,n] = A[m,k]^T * B[m,n]
template <typename T>
void gemm_tn(std::size_t m, std::size_t k, std::size_t n,
             const T* a, const T* b, T* c, bool accumulate = false) {
    if (!accumulate) {
        for (std::size_t i = 0; i < k * n; ++i) c[i] = T(0);
    }
    for (std::size_t r = 0; r < m; ++r) {
        const T* ar = a + r * k;
        const T* br = b + r * n;
        for (std::size_t i = 0; i < k; ++i) {
            const T av = ar[i];
            if (av == T(0)) continue;
            T* ci = c + i * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * br[j];
        }
    }
}

// Row-wise softmax with max subtraction; x and y may alias.
template <typename T>
void softmax_row(const T* x, T* y, std::size_t n) {
    T mx = x[0];
    for (std::size_t j = 1; j < n; ++j) mx = x[j] > mx ? x[j] : mx;
    T sum = T(0);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = std::exp(x[j] - mx);
        sum += y[j];
    }
    const T inv = T(1) / sum;
    for (std::size_t j = 0; j < n; ++j) y[j] *= inv;
}

// dx += y .* (dy - sum(dy .* y)) for one softmax row.
template <typename T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n) {
    T dot = T(0);
    for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
    for (std::size_t j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
}

// Layer norm over one row; saves mean and reciprocal std for backward.
template <typename T>
void layer_norm_row(const T* x, const T* gain, const T* bias, T eps,
                    T* y, std::size_t n, T* save_mean, T* save_rstd) {
    T mean = T(0);
    for (std::size_t j = 0; j < n; ++j) mean += x[j];
    mean /= T(n);
    T var = T(0);
    for (std::size_t j = 0; j < n; ++j) {
        const T d = x[j] - mean;
        var += d * d;
    }
    var /= T(n);
    const T rstd = T(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
        y[j] = (x[j] - mean) * rstd * gain[j] + bias[j];
    }
    if (save_mean) *save_mean = mean;
    if (save_rstd) *save_rstd = rstd;
}

template <typename T>
void layer_norm_row_backward(const T* x, const T* gain, T mean, T rstd,
                             const T* dy, T* dx, T* dgain, T* dbias,
                             std::size_t n) {
    // xhat = (x - mean) * rstd; y = gain .* xhat + bias
    T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
    for (std::size_t j = 0; j < n; ++j) {
        const T xhat = (x[j] - mean) * rstd;
        const T dxhat = dy[j] * gain[j];
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
        dgain[j] += dy[j] * xhat;
        dbias[j] += dy[j];
    }
    const T inv_n = T(1) / T(n);
    for (std::size_t j = 0; j < n; ++j) {
        const T xhat = (x[j] - mean) * rstd;
        const T dxhat = dy[j] * gain[j];
        dx[j] += rstd * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
    }
}

template <typename T>
T gelu_scalar(T x) {
    // exact (erf) form
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
T gelu_grad_scalar(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
    const T pdf = T(0.3989422804014327) * std::exp(T(-0.5) * x * x);
    return cdf + x * pdf;
}

// GPT-J style rotary encoding: adjacent channel pairs (2i, 2i+1) of the
// first rot_dim channels are rotated by pos * theta_i with
// theta_i = 10000^(-2i/rot_dim). Remaining channels pass through.
// Precomputed cos/sin per (position, pair) so the attention inner loop stays
// trig-free. inverse applies the transpose rotation (used by backward).
template <typename T>
class RotaryTable {
public:
    RotaryTable() = default;

    RotaryTable(std::size_t rot_dim, std::size_t n_pos) : rot_dim_(rot_dim) {
        const std::size_t pairs = rot_dim / 2;
        cos_.resize(n_pos * pairs);
        sin_.resize(n_pos * pairs);
        for (std::size_t pos = 0; pos < n_pos; ++pos) {
            for (std::size_t i = 0; i < pairs; ++i) {
                const double theta = std::pow(
                    10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(rot_dim));
                const double angle = static_cast<double>(pos) * theta;
                cos_[pos * pairs + i] = static_cast<T>(std::cos(angle));
                sin_[pos * pairs + i] = static_cast<T>(std::sin(angle));
            }
        }
    }

    std::size_t rot_dim() const { return rot_dim_; }

    void apply(T* head, std::size_t pos, bool inverse = false) const {
        const std::size_t pairs = rot_dim_ / 2;
        const T* c = cos_.data() + pos * pairs;
        const T* s = sin_.data() + pos * pairs;
        for (std::size_t i = 0; i < pairs; ++i) {
            const T sv = inverse ? -s[i] : s[i];
            const T x0 = head[2 * i];
            const T x1 = head[2 * i + 1];
            head[2 * i] = x0 * c[i] - x1 * sv;
            head[2 * i + 1] = x1 * c[i] + x0 * sv;
        }
    }

private:
    std::size_t rot_dim_ = 0;
    std::vector<T> cos_, sin_;
};

// One-off variant, convenient for tests and single vectors.
template <typename T>
void rotary_apply(T* head, std::size_t rot_dim, std::size_t pos, bool inverse = false) {
    for (std::size_t i = 0; i * 2 + 1 < rot_dim; ++i) {
        const double theta =
            std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(rot_dim));
        const double angle = static_cast<double>(pos) * theta;
        const T c = static_cast<T>(std::cos(angle));
        const T s = static_cast<T>(inverse ? -std::sin(angle) : std::sin(angle));
        const T x0 = head[2 * i];
        const T x1 = head[2 * i + 1];
        head[2 * i] = x0 * c - x1 * s;
        head[2 * i + 1] = x1 * c + x0 * s;
    }
}

} // namespace plmforge::num
