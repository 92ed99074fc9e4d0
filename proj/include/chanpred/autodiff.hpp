// SPDX-License-Identifier: Apache-2.0
#pragma once

// Reverse-mode autodiff over dense f64 tensors. Ops run eagerly; when a
// Tape is supplied and an input requires grad, a backward closure is
// recorded. backward() replays closures in reverse recording order, which
// is a valid topological order because ops append as they execute.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <vector>

#include "chanpred/errors.hpp"
#include "chanpred/tensor.hpp"

namespace chanpred {

class Tape {
  public:
    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

    bool spent() const { return spent_; }
    std::size_t size() const { return nodes_.size(); }

    void run_backward(const Tensor& loss) {
        if (!loss.defined() || !loss.is_scalar())
            throw shape_error("backward: loss must be a scalar tensor");
        if (spent_) throw state_error("backward: tape already consumed by a previous backward call");
        Tensor seed = loss;
        seed.grad()[0] += 1.0;
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        spent_ = true;
    }

  private:
    std::vector<std::function<void()>> nodes_;
    bool spent_ = false;
};

inline void backward(const Tensor& loss, Tape& tape) { tape.run_backward(loss); }

namespace detail {

inline bool want_grad(const Tape* tape, std::initializer_list<const Tensor*> inputs) {
    if (!tape) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

// C[M,N] = or += A[M,K] * B[K,N], row-major. ikj order so the inner loop
// streams contiguous rows of B and C.
inline void gemm_nn(long long M, long long N, long long K, const double* A, const double* B,
                    double* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + M * N, 0.0);
    for (long long i = 0; i < M; ++i) {
        const double* a_row = A + i * K;
        double* c_row = C + i * N;
        for (long long p = 0; p < K; ++p) {
            const double a = a_row[p];
            if (a == 0.0) continue;
            const double* b_row = B + p * N;
            for (long long j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[M,N] = or += A^T * B with A stored [K,M], B stored [K,N].
inline void gemm_tn(long long M, long long N, long long K, const double* A, const double* B,
                    double* C, bool accumulate) {
    if (!accumulate) std::fill(C, C + M * N, 0.0);
    for (long long p = 0; p < K; ++p) {
        const double* a_row = A + p * M;
        const double* b_row = B + p * N;
        for (long long i = 0; i < M; ++i) {
            const double a = a_row[i];
            if (a == 0.0) continue;
            double* c_row = C + i * N;
            for (long long j = 0; j < N; ++j) c_row[j] += a * b_row[j];
        }
    }
}

// C[M,N] = or += A * B^T with A stored [M,K], B stored [N,K]. B is
// transposed into scratch so the hot loop stays in streaming form.
inline void gemm_nt(long long M, long long N, long long K, const double* A, const double* B,
                    double* C, bool accumulate) {
    std::vector<double> bt(static_cast<std::size_t>(K * N));
    for (long long j = 0; j < N; ++j)
        for (long long p = 0; p < K; ++p) bt[p * N + j] = B[j * K + p];
    gemm_nn(M, N, K, A, bt.data(), C, accumulate);
}

struct ConvGeom {
    long long c_in, h, w;
    long long c_out, kh, kw;
    long long stride, pad;
    long long oh, ow;
};

inline ConvGeom conv_geometry(const Shape& input, const Shape& kernel, long long stride,
                              long long pad) {
    if (input.size() != 3) throw shape_error("conv2d: input must be [c,h,w], got " + shape_to_string(input));
    if (kernel.size() != 4)
        throw shape_error("conv2d: kernel must be [c_out,c_in,kh,kw], got " + shape_to_string(kernel));
    if (stride < 1) throw shape_error("conv2d: stride must be >= 1");
    if (pad < 0) throw shape_error("conv2d: padding must be >= 0");
    ConvGeom g;
    g.c_in = input[0];
    g.h = input[1];
    g.w = input[2];
    g.c_out = kernel[0];
    g.kh = kernel[2];
    g.kw = kernel[3];
    g.stride = stride;
    g.pad = pad;
    if (kernel[1] != g.c_in)
        throw shape_error("conv2d: kernel expects " + std::to_string(kernel[1]) + " input channels, input has " +
                          std::to_string(g.c_in));
    if (g.kh > g.h + 2 * pad || g.kw > g.w + 2 * pad)
        throw shape_error("conv2d: kernel larger than padded input");
    g.oh = (g.h + 2 * pad - g.kh) / stride + 1;
    g.ow = (g.w + 2 * pad - g.kw) / stride + 1;
    return g;
}

// col is [c_in*kh*kw x oh*ow]; out-of-bounds taps read as zero padding.
inline void im2col(const double* x, const ConvGeom& g, double* col) {
    const long long P = g.oh * g.ow;
    for (long long ci = 0; ci < g.c_in; ++ci) {
        const double* xc = x + ci * g.h * g.w;
        for (long long ki = 0; ki < g.kh; ++ki) {
            for (long long kj = 0; kj < g.kw; ++kj) {
                double* row = col + ((ci * g.kh + ki) * g.kw + kj) * P;
                for (long long oy = 0; oy < g.oh; ++oy) {
                    const long long iy = oy * g.stride + ki - g.pad;
                    double* out = row + oy * g.ow;
                    if (iy < 0 || iy >= g.h) {
                        std::fill(out, out + g.ow, 0.0);
                        continue;
                    }
                    const double* xr = xc + iy * g.w;
                    for (long long ox = 0; ox < g.ow; ++ox) {
                        const long long ix = ox * g.stride + kj - g.pad;
                        out[ox] = (ix >= 0 && ix < g.w) ? xr[ix] : 0.0;
                    }
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add columns back into the image.
inline void col2im_add(const double* col, const ConvGeom& g, double* x) {
    const long long P = g.oh * g.ow;
    for (long long ci = 0; ci < g.c_in; ++ci) {
        double* xc = x + ci * g.h * g.w;
        for (long long ki = 0; ki < g.kh; ++ki) {
            for (long long kj = 0; kj < g.kw; ++kj) {
                const double* row = col + ((ci * g.kh + ki) * g.kw + kj) * P;
                for (long long oy = 0; oy < g.oh; ++oy) {
                    const long long iy = oy * g.stride + ki - g.pad;
                    if (iy < 0 || iy >= g.h) continue;
                    double* xr = xc + iy * g.w;
                    const double* in = row + oy * g.ow;
                    for (long long ox = 0; ox < g.ow; ++ox) {
                        const long long ix = ox * g.stride + kj - g.pad;
                        if (ix >= 0 && ix < g.w) xr[ix] += in[ox];
                    }
                }
            }
        }
    }
}

inline void accumulate_grad(Tensor& t, const double* g, long long n) {
    auto& dst = t.grad();
    for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and reduction ops
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    if (!same_shape(a, b))
        throw shape_error("add: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const long long n = a.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    if (detail::want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor at = a, bt = b, ot = out;
        const bool ga = a.requires_grad(), gb = b.requires_grad();
        tape->record([at, bt, ot, ga, gb, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            if (ga) detail::accumulate_grad(at, g, n);
            if (gb) detail::accumulate_grad(bt, g, n);
        });
    }
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    if (!same_shape(a, b))
        throw shape_error("sub: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const long long n = a.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
    if (detail::want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor at = a, bt = b, ot = out;
        const bool ga = a.requires_grad(), gb = b.requires_grad();
        tape->record([at, bt, ot, ga, gb, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            if (ga) detail::accumulate_grad(at, g, n);
            if (gb) {
                auto& dst = bt.grad();
                for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] -= g[i];
            }
        });
    }
    return out;
}

// Hadamard product.
inline Tensor mul(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    if (!same_shape(a, b))
        throw shape_error("mul: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
    Tensor out = Tensor::zeros(a.shape());
    const long long n = a.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    if (detail::want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor at = a, bt = b, ot = out;
        const bool ga = a.requires_grad(), gb = b.requires_grad();
        tape->record([at, bt, ot, ga, gb, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            if (ga) {
                auto& dst = at.grad();
                for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i] * bt.data()[i];
            }
            if (gb) {
                auto& dst = bt.grad();
                for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i] * at.data()[i];
            }
        });
    }
    return out;
}

inline Tensor mul_scalar(const Tensor& x, double c, Tape* tape = nullptr) {
    Tensor out = Tensor::zeros(x.shape());
    const long long n = x.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = x.data()[i] * c;
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, c, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = xt.grad();
            for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i] * c;
        });
    }
    return out;
}

// relu'(0) == 0: ties at exactly zero pass no gradient.
inline Tensor relu(const Tensor& x, Tape* tape = nullptr) {
    Tensor out = Tensor::zeros(x.shape());
    const long long n = x.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = xt.grad();
            for (long long i = 0; i < n; ++i)
                if (xt.data()[i] > 0.0) dst[static_cast<std::size_t>(i)] += g[i];
        });
    }
    return out;
}

inline Tensor square(const Tensor& x, Tape* tape = nullptr) {
    Tensor out = Tensor::zeros(x.shape());
    const long long n = x.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = x.data()[i] * x.data()[i];
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = xt.grad();
            for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += 2.0 * xt.data()[i] * g[i];
        });
    }
    return out;
}

inline Tensor exp(const Tensor& x, Tape* tape = nullptr) {
    Tensor out = Tensor::zeros(x.shape());
    const long long n = x.numel();
    for (long long i = 0; i < n; ++i) out.data()[i] = std::exp(x.data()[i]);
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, n]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = xt.grad();
            for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g[i] * ot.data()[i];
        });
    }
    return out;
}

inline Tensor mean(const Tensor& x, Tape* tape = nullptr) {
    const long long n = x.numel();
    double acc = 0.0;
    for (long long i = 0; i < n; ++i) acc += x.data()[i];
    Tensor out = Tensor::constant({1}, acc / static_cast<double>(n));
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, n]() mutable {
            if (!ot.has_grad()) return;
            const double g = ot.grad()[0] / static_cast<double>(n);
            auto& dst = xt.grad();
            for (long long i = 0; i < n; ++i) dst[static_cast<std::size_t>(i)] += g;
        });
    }
    return out;
}

inline Tensor reshape(const Tensor& x, Shape new_shape, Tape* tape = nullptr) {
    const long long n = detail::checked_numel(new_shape);
    if (n != x.numel())
        throw shape_error("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(new_shape) +
                          " (element count changes)");
    Tensor out = Tensor::from_values(std::move(new_shape), x.values());
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, n]() mutable {
            if (!ot.has_grad()) return;
            detail::accumulate_grad(xt, ot.grad().data(), n);
        });
    }
    return out;
}

inline Tensor transpose2d(const Tensor& x, Tape* tape = nullptr) {
    if (x.shape().size() != 2) throw shape_error("transpose2d: expected rank-2 tensor");
    const long long r = x.shape()[0], c = x.shape()[1];
    Tensor out = Tensor::zeros({c, r});
    for (long long i = 0; i < r; ++i)
        for (long long j = 0; j < c; ++j) out.data()[j * r + i] = x.data()[i * c + j];
    if (detail::want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor xt = x, ot = out;
        tape->record([xt, ot, r, c]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = xt.grad();
            for (long long i = 0; i < r; ++i)
                for (long long j = 0; j < c; ++j) dst[static_cast<std::size_t>(i * c + j)] += g[j * r + i];
        });
    }
    return out;
}

// Materializes a per-channel value into a full [c,h,w] grid; this is how
// bias terms take part in shape-strict adds. Backward reduces over h,w.
inline Tensor expand_channels(const Tensor& bias, long long h, long long w, Tape* tape = nullptr) {
    if (bias.shape().size() != 1) throw shape_error("expand_channels: bias must be rank 1");
    if (h < 1 || w < 1) throw shape_error("expand_channels: target extents must be positive");
    const long long c = bias.shape()[0];
    Tensor out = Tensor::zeros({c, h, w});
    for (long long ci = 0; ci < c; ++ci)
        std::fill(out.data() + ci * h * w, out.data() + (ci + 1) * h * w, bias.data()[ci]);
    if (detail::want_grad(tape, {&bias})) {
        out.set_requires_grad(true);
        Tensor bt = bias, ot = out;
        tape->record([bt, ot, c, h, w]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = bt.grad();
            for (long long ci = 0; ci < c; ++ci) {
                double acc = 0.0;
                for (long long i = 0; i < h * w; ++i) acc += g[ci * h * w + i];
                dst[static_cast<std::size_t>(ci)] += acc;
            }
        });
    }
    return out;
}

// Value copy with no graph connection (stop-gradient).
inline Tensor detach(const Tensor& x) {
    return Tensor::from_values(x.shape(), x.values());
}

// Row lookup from a [k,d] matrix: out[i,:] = mat[indices[i],:] (bit-copy).
// Backward scatter-adds into the selected rows; indices are constants.
inline Tensor gather_rows(const Tensor& mat, const std::vector<long long>& indices,
                          Tape* tape = nullptr) {
    if (mat.shape().size() != 2) throw shape_error("gather_rows: matrix must be rank 2");
    const long long k = mat.shape()[0], d = mat.shape()[1];
    const long long n = static_cast<long long>(indices.size());
    if (n == 0) throw shape_error("gather_rows: empty index list");
    Tensor out = Tensor::zeros({n, d});
    for (long long i = 0; i < n; ++i) {
        const long long row = indices[static_cast<std::size_t>(i)];
        if (row < 0 || row >= k) throw shape_error("gather_rows: index out of range");
        std::memcpy(out.data() + i * d, mat.data() + row * d, static_cast<std::size_t>(d) * sizeof(double));
    }
    if (detail::want_grad(tape, {&mat})) {
        out.set_requires_grad(true);
        Tensor mt = mat, ot = out;
        std::vector<long long> idx = indices;
        tape->record([mt, ot, idx, d]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            auto& dst = mt.grad();
            for (std::size_t i = 0; i < idx.size(); ++i)
                for (long long j = 0; j < d; ++j)
                    dst[static_cast<std::size_t>(idx[i] * d + j)] += g[static_cast<long long>(i) * d + j];
        });
    }
    return out;
}

// Straight-through estimator: forward takes the values of `quantized`,
// backward passes the incoming gradient unchanged to `source` and nothing
// to `quantized`.
inline Tensor straight_through(const Tensor& source, const Tensor& quantized, Tape* tape = nullptr) {
    if (!same_shape(source, quantized))
        throw shape_error("straight_through: shape mismatch " + shape_to_string(source.shape()) + " vs " +
                          shape_to_string(quantized.shape()));
    Tensor out = Tensor::from_values(quantized.shape(), quantized.values());
    if (tape && source.requires_grad()) {
        out.set_requires_grad(true);
        Tensor st = source, ot = out;
        const long long n = out.numel();
        tape->record([st, ot, n]() mutable {
            if (!ot.has_grad()) return;
            detail::accumulate_grad(st, ot.grad().data(), n);
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// matmul / convolutions
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b, Tape* tape = nullptr) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw shape_error("matmul: expected rank-2 tensors");
    const long long m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw shape_error("matmul: inner dimensions differ, " + shape_to_string(a.shape()) + " x " +
                          shape_to_string(b.shape()));
    Tensor out = Tensor::zeros({m, n});
    detail::gemm_nn(m, n, k, a.data(), b.data(), out.data(), false);
    if (detail::want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor at = a, bt = b, ot = out;
        const bool ga = a.requires_grad(), gb = b.requires_grad();
        tape->record([at, bt, ot, ga, gb, m, n, k]() mutable {
            if (!ot.has_grad()) return;
            const double* g = ot.grad().data();
            if (ga) detail::gemm_nt(m, k, n, g, bt.data(), at.grad().data(), true);  // dA = dC * B^T
            if (gb) detail::gemm_tn(k, n, m, at.data(), g, bt.grad().data(), true);  // dB = A^T * dC
        });
    }
    return out;
}

inline Tensor conv2d(const Tensor& input, const Tensor& kernel, long long stride, long long padding,
                     Tape* tape = nullptr) {
    const detail::ConvGeom g = detail::conv_geometry(input.shape(), kernel.shape(), stride, padding);
    const long long P = g.oh * g.ow;
    const long long ckk = g.c_in * g.kh * g.kw;
    auto col = std::make_shared<std::vector<double>>(static_cast<std::size_t>(ckk * P));
    detail::im2col(input.data(), g, col->data());
    Tensor out = Tensor::zeros({g.c_out, g.oh, g.ow});
    detail::gemm_nn(g.c_out, P, ckk, kernel.data(), col->data(), out.data(), false);
    if (detail::want_grad(tape, {&input, &kernel})) {
        out.set_requires_grad(true);
        Tensor xt = input, kt = kernel, ot = out;
        const bool gx = input.requires_grad(), gk = kernel.requires_grad();
        tape->record([xt, kt, ot, col, g, P, ckk, gx, gk]() mutable {
            if (!ot.has_grad()) return;
            const double* gout = ot.grad().data();
            if (gk) detail::gemm_nt(g.c_out, ckk, P, gout, col->data(), kt.grad().data(), true);
            if (gx) {
                std::vector<double> dcol(static_cast<std::size_t>(ckk * P));
                detail::gemm_tn(ckk, P, g.c_out, kt.data(), gout, dcol.data(), false);
                detail::col2im_add(dcol.data(), g, xt.grad().data());
            }
        });
    }
    return out;
}

// Adjoint of conv2d under the same kernel layout [c_out,c_in,kh,kw]:
// input carries c_out channels, output carries c_in. output_padding
// (per axis, < stride) resolves the output-extent ambiguity of strided
// convolutions; 0 keeps extent = (h-1)*stride - 2*pad + kh.
inline Tensor conv_transpose2d(const Tensor& input, const Tensor& kernel, long long stride,
                               long long padding, long long output_pad_h = 0,
                               long long output_pad_w = 0, Tape* tape = nullptr) {
    if (input.shape().size() != 3)
        throw shape_error("conv_transpose2d: input must be [c,h,w], got " + shape_to_string(input.shape()));
    if (kernel.shape().size() != 4)
        throw shape_error("conv_transpose2d: kernel must be [c_out,c_in,kh,kw]");
    if (stride < 1) throw shape_error("conv_transpose2d: stride must be >= 1");
    if (padding < 0) throw shape_error("conv_transpose2d: padding must be >= 0");
    if (output_pad_h < 0 || output_pad_h >= stride || output_pad_w < 0 || output_pad_w >= stride)
        throw shape_error("conv_transpose2d: output_padding must be in [0, stride)");
    const long long c_a = input.shape()[0], h = input.shape()[1], w = input.shape()[2];
    if (kernel.shape()[0] != c_a)
        throw shape_error("conv_transpose2d: kernel expects " + std::to_string(kernel.shape()[0]) +
                          " input channels, input has " + std::to_string(c_a));
    const long long c_b = kernel.shape()[1], kh = kernel.shape()[2], kw = kernel.shape()[3];
    const long long H = (h - 1) * stride - 2 * padding + kh + output_pad_h;
    const long long W = (w - 1) * stride - 2 * padding + kw + output_pad_w;
    if (H < 1 || W < 1) throw shape_error("conv_transpose2d: non-positive output extent");

    // Geometry of the conv this op is adjoint to: [c_b,H,W] -> [c_a,h,w].
    detail::ConvGeom g;
    g.c_in = c_b;
    g.h = H;
    g.w = W;
    g.c_out = c_a;
    g.kh = kh;
    g.kw = kw;
    g.stride = stride;
    g.pad = padding;
    g.oh = h;
    g.ow = w;

    const long long P = h * w;
    const long long ckk = c_b * kh * kw;
    std::vector<double> col(static_cast<std::size_t>(ckk * P));
    detail::gemm_tn(ckk, P, c_a, kernel.data(), input.data(), col.data(), false);
    Tensor out = Tensor::zeros({c_b, H, W});
    detail::col2im_add(col.data(), g, out.data());

    if (detail::want_grad(tape, {&input, &kernel})) {
        out.set_requires_grad(true);
        Tensor xt = input, kt = kernel, ot = out;
        const bool gx = input.requires_grad(), gk = kernel.requires_grad();
        tape->record([xt, kt, ot, g, P, ckk, c_a, gx, gk]() mutable {
            if (!ot.has_grad()) return;
            std::vector<double> gcol(static_cast<std::size_t>(ckk * P));
            detail::im2col(ot.grad().data(), g, gcol.data());
            if (gx) detail::gemm_nn(c_a, P, ckk, kt.data(), gcol.data(), xt.grad().data(), true);
            if (gk) detail::gemm_nt(c_a, ckk, P, xt.data(), gcol.data(), kt.grad().data(), true);
        });
    }
    return out;
}

}  // namespace chanpred
