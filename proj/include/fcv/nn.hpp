// Copyright (c) 2026 The fcv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Minimal differentiable operator set. All reductions run in a fixed
// sequential order, so forward and backward passes are bit-deterministic
// for identical inputs.

#ifndef FCV_NN_HPP_
#define FCV_NN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fcv/tensor.hpp"

namespace fcv::nn {

// ---------------------------------------------------------------------------
// GEMM kernels (accumulating). Row-major throughout.

// C[M,N] += A[M,K] * B[K,N]
template <class T>
void gemm_nn(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C) {
  for (int64_t i = 0; i < M; ++i) {
    const T* a = A + i * K;
    T* c = C + i * N;
    for (int64_t k = 0; k < K; ++k) {
      const T av = a[k];
      const T* b = B + k * N;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]
template <class T>
void gemm_tn(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C) {
  for (int64_t k = 0; k < K; ++k) {
    const T* a = A + k * M;
    const T* b = B + k * N;
    for (int64_t i = 0; i < M; ++i) {
      const T av = a[i];
      T* c = C + i * N;
      for (int64_t j = 0; j < N; ++j) c[j] += av * b[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T
template <class T>
void gemm_nt(int64_t M, int64_t K, int64_t N, const T* A, const T* B, T* C) {
  for (int64_t i = 0; i < M; ++i) {
    const T* a = A + i * K;
    for (int64_t j = 0; j < N; ++j) {
      const T* b = B + j * K;
      T acc = 0;
      for (int64_t k = 0; k < K; ++k) acc += a[k] * b[k];
      C[i * N + j] += acc;
    }
  }
}

// ---------------------------------------------------------------------------
// conv2d: x [N,C,H,W], k [F,C,KH,KW], cross-correlation semantics.

struct Conv2dDims {
  int n, c, h, w, f, kh, kw, stride, pad, oh, ow;
};

template <class T>
Conv2dDims conv2d_dims(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad) {
  if (x.ndim() != 4 || k.ndim() != 4) throw ShapeMismatch("conv2d: need 4-d input and kernel");
  if (stride < 1 || pad < 0) throw ShapeMismatch("conv2d: bad stride/pad");
  Conv2dDims d{};
  d.n = x.dim(0); d.c = x.dim(1); d.h = x.dim(2); d.w = x.dim(3);
  d.f = k.dim(0); d.kh = k.dim(2); d.kw = k.dim(3);
  d.stride = stride; d.pad = pad;
  if (k.dim(1) != d.c) throw ShapeMismatch("conv2d: channel mismatch");
  if (d.h + 2 * pad < d.kh || d.w + 2 * pad < d.kw) {
    throw ShapeMismatch("conv2d: kernel larger than padded input");
  }
  d.oh = (d.h + 2 * pad - d.kh) / stride + 1;
  d.ow = (d.w + 2 * pad - d.kw) / stride + 1;
  return d;
}

template <class T>
void im2col(const T* x, const Conv2dDims& d, T* cols) {
  // cols [C*KH*KW, OH*OW]
  const int64_t plane = static_cast<int64_t>(d.oh) * d.ow;
  int64_t row = 0;
  for (int c = 0; c < d.c; ++c) {
    const T* xc = x + static_cast<int64_t>(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj, ++row) {
        T* dst = cols + row * plane;
        for (int oi = 0; oi < d.oh; ++oi) {
          const int ii = oi * d.stride - d.pad + ki;
          if (ii < 0 || ii >= d.h) {
            for (int oj = 0; oj < d.ow; ++oj) dst[static_cast<int64_t>(oi) * d.ow + oj] = 0;
            continue;
          }
          const T* src = xc + static_cast<int64_t>(ii) * d.w;
          for (int oj = 0; oj < d.ow; ++oj) {
            const int jj = oj * d.stride - d.pad + kj;
            dst[static_cast<int64_t>(oi) * d.ow + oj] =
                (jj >= 0 && jj < d.w) ? src[jj] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im_acc(const T* cols, const Conv2dDims& d, T* gx) {
  const int64_t plane = static_cast<int64_t>(d.oh) * d.ow;
  int64_t row = 0;
  for (int c = 0; c < d.c; ++c) {
    T* xc = gx + static_cast<int64_t>(c) * d.h * d.w;
    for (int ki = 0; ki < d.kh; ++ki) {
      for (int kj = 0; kj < d.kw; ++kj, ++row) {
        const T* src = cols + row * plane;
        for (int oi = 0; oi < d.oh; ++oi) {
          const int ii = oi * d.stride - d.pad + ki;
          if (ii < 0 || ii >= d.h) continue;
          for (int oj = 0; oj < d.ow; ++oj) {
            const int jj = oj * d.stride - d.pad + kj;
            if (jj >= 0 && jj < d.w) {
              xc[static_cast<int64_t>(ii) * d.w + jj] += src[static_cast<int64_t>(oi) * d.ow + oj];
            }
          }
        }
      }
    }
  }
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad) {
  const Conv2dDims d = conv2d_dims(x, k, stride, pad);
  Tensor<T> y({d.n, d.f, d.oh, d.ow});
  const int64_t ckk = static_cast<int64_t>(d.c) * d.kh * d.kw;
  const int64_t plane = static_cast<int64_t>(d.oh) * d.ow;
  static thread_local std::vector<T> cols;
  cols.assign(static_cast<size_t>(ckk * plane), T(0));
  for (int n = 0; n < d.n; ++n) {
    im2col(x.data.data() + static_cast<int64_t>(n) * d.c * d.h * d.w, d, cols.data());
    gemm_nn<T>(d.f, ckk, plane, k.data.data(), cols.data(),
               y.data.data() + static_cast<int64_t>(n) * d.f * plane);
  }
  return y;
}

// Accumulates into gx->grad-like buffers passed as plain tensors. Any of
// gx / gk may be null to skip that gradient.
template <class T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad,
                     const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gk) {
  const Conv2dDims d = conv2d_dims(x, k, stride, pad);
  const int64_t ckk = static_cast<int64_t>(d.c) * d.kh * d.kw;
  const int64_t plane = static_cast<int64_t>(d.oh) * d.ow;
  static thread_local std::vector<T> cols;
  static thread_local std::vector<T> gcols;
  cols.assign(static_cast<size_t>(ckk * plane), T(0));
  for (int n = 0; n < d.n; ++n) {
    const T* gy_n = gy.data.data() + static_cast<int64_t>(n) * d.f * plane;
    if (gk) {
      im2col(x.data.data() + static_cast<int64_t>(n) * d.c * d.h * d.w, d, cols.data());
      gemm_nt<T>(d.f, plane, ckk, gy_n, cols.data(), gk->data.data());
    }
    if (gx) {
      gcols.assign(static_cast<size_t>(ckk * plane), T(0));
      gemm_tn<T>(ckk, d.f, plane, k.data.data(), gy_n, gcols.data());
      col2im_acc(gcols.data(), d, gx->data.data() + static_cast<int64_t>(n) * d.c * d.h * d.w);
    }
  }
}

// ---------------------------------------------------------------------------
// conv1d: x [N,C,L], k [F,C,KL].

struct Conv1dDims {
  int n, c, l, f, kl, stride, pad, ol;
};

template <class T>
Conv1dDims conv1d_dims(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad) {
  if (x.ndim() != 3 || k.ndim() != 3) throw ShapeMismatch("conv1d: need 3-d input and kernel");
  if (stride < 1 || pad < 0) throw ShapeMismatch("conv1d: bad stride/pad");
  Conv1dDims d{};
  d.n = x.dim(0); d.c = x.dim(1); d.l = x.dim(2);
  d.f = k.dim(0); d.kl = k.dim(2);
  d.stride = stride; d.pad = pad;
  if (k.dim(1) != d.c) throw ShapeMismatch("conv1d: channel mismatch");
  if (d.l + 2 * pad < d.kl) throw ShapeMismatch("conv1d: kernel larger than padded input");
  d.ol = (d.l + 2 * pad - d.kl) / stride + 1;
  return d;
}

template <class T>
void im2col1d(const T* x, const Conv1dDims& d, T* cols) {
  // cols [C*KL, OL]
  int64_t row = 0;
  for (int c = 0; c < d.c; ++c) {
    const T* xc = x + static_cast<int64_t>(c) * d.l;
    for (int ki = 0; ki < d.kl; ++ki, ++row) {
      T* dst = cols + row * d.ol;
      for (int o = 0; o < d.ol; ++o) {
        const int i = o * d.stride - d.pad + ki;
        dst[o] = (i >= 0 && i < d.l) ? xc[i] : T(0);
      }
    }
  }
}

template <class T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad) {
  const Conv1dDims d = conv1d_dims(x, k, stride, pad);
  Tensor<T> y({d.n, d.f, d.ol});
  const int64_t ck = static_cast<int64_t>(d.c) * d.kl;
  static thread_local std::vector<T> cols;
  cols.assign(static_cast<size_t>(ck * d.ol), T(0));
  for (int n = 0; n < d.n; ++n) {
    im2col1d(x.data.data() + static_cast<int64_t>(n) * d.c * d.l, d, cols.data());
    gemm_nn<T>(d.f, ck, d.ol, k.data.data(), cols.data(),
               y.data.data() + static_cast<int64_t>(n) * d.f * d.ol);
  }
  return y;
}

template <class T>
void conv1d_backward(const Tensor<T>& x, const Tensor<T>& k, int stride, int pad,
                     const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* gk) {
  const Conv1dDims d = conv1d_dims(x, k, stride, pad);
  const int64_t ck = static_cast<int64_t>(d.c) * d.kl;
  static thread_local std::vector<T> cols;
  static thread_local std::vector<T> gcols;
  for (int n = 0; n < d.n; ++n) {
    const T* gy_n = gy.data.data() + static_cast<int64_t>(n) * d.f * d.ol;
    if (gk) {
      cols.assign(static_cast<size_t>(ck * d.ol), T(0));
      im2col1d(x.data.data() + static_cast<int64_t>(n) * d.c * d.l, d, cols.data());
      gemm_nt<T>(d.f, d.ol, ck, gy_n, cols.data(), gk->data.data());
    }
    if (gx) {
      gcols.assign(static_cast<size_t>(ck * d.ol), T(0));
      gemm_tn<T>(ck, d.f, d.ol, k.data.data(), gy_n, gcols.data());
      T* gx_n = gx->data.data() + static_cast<int64_t>(n) * d.c * d.l;
      int64_t row = 0;
      for (int c = 0; c < d.c; ++c) {
        T* xc = gx_n + static_cast<int64_t>(c) * d.l;
        for (int ki = 0; ki < d.kl; ++ki, ++row) {
          const T* src = gcols.data() + row * d.ol;
          for (int o = 0; o < d.ol; ++o) {
            const int i = o * d.stride - d.pad + ki;
            if (i >= 0 && i < d.l) xc[i] += src[o];
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Batch normalization over the channel axis of [N,C,spatial...].

template <class T>
struct BatchNormCache {
  std::vector<T> xhat;     // normalized input, same numel as x
  std::vector<T> invstd;   // per channel
  int64_t per_channel = 0; // N * spatial
  std::vector<int> x_shape;
};

template <class T>
int64_t bn_spatial(const Tensor<T>& x) {
  int64_t s = 1;
  for (int i = 2; i < x.ndim(); ++i) s *= x.dim(i);
  return s;
}

template <class T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma,
                            const Tensor<T>& beta, Tensor<T>& running_mean,
                            Tensor<T>& running_var, bool train, double momentum,
                            double eps, BatchNormCache<T>* cache) {
  if (x.ndim() < 2) throw ShapeMismatch("batchnorm: input must have a channel axis");
  const int C = x.dim(1);
  if (gamma.numel() != C || beta.numel() != C) throw ShapeMismatch("batchnorm: bad gamma/beta");
  const int N = x.dim(0);
  const int64_t S = bn_spatial(x);
  const int64_t per_channel = static_cast<int64_t>(N) * S;

  Tensor<T> y(x.shape);
  std::vector<T> mean(static_cast<size_t>(C), T(0));
  std::vector<T> var(static_cast<size_t>(C), T(0));
  if (train) {
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data.data() + (static_cast<int64_t>(n) * C + c) * S;
        for (int64_t i = 0; i < S; ++i) acc += static_cast<double>(p[i]);
      }
      const double mu = acc / static_cast<double>(per_channel);
      double vacc = 0.0;
      for (int n = 0; n < N; ++n) {
        const T* p = x.data.data() + (static_cast<int64_t>(n) * C + c) * S;
        for (int64_t i = 0; i < S; ++i) {
          const double dv = static_cast<double>(p[i]) - mu;
          vacc += dv * dv;
        }
      }
      mean[static_cast<size_t>(c)] = static_cast<T>(mu);
      var[static_cast<size_t>(c)] = static_cast<T>(vacc / static_cast<double>(per_channel));
      running_mean.data[static_cast<size_t>(c)] = static_cast<T>(
          momentum * static_cast<double>(running_mean.data[static_cast<size_t>(c)]) +
          (1.0 - momentum) * mu);
      running_var.data[static_cast<size_t>(c)] = static_cast<T>(
          momentum * static_cast<double>(running_var.data[static_cast<size_t>(c)]) +
          (1.0 - momentum) * (vacc / static_cast<double>(per_channel)));
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[static_cast<size_t>(c)] = running_mean.data[static_cast<size_t>(c)];
      var[static_cast<size_t>(c)] = running_var.data[static_cast<size_t>(c)];
    }
  }

  if (cache) {
    cache->xhat.resize(x.data.size());
    cache->invstd.resize(static_cast<size_t>(C));
    cache->per_channel = per_channel;
    cache->x_shape = x.shape;
  }
  for (int c = 0; c < C; ++c) {
    const T istd = static_cast<T>(1.0 / std::sqrt(static_cast<double>(var[static_cast<size_t>(c)]) + eps));
    if (cache) cache->invstd[static_cast<size_t>(c)] = istd;
    const T g = gamma.data[static_cast<size_t>(c)];
    const T b = beta.data[static_cast<size_t>(c)];
    const T mu = mean[static_cast<size_t>(c)];
    for (int n = 0; n < N; ++n) {
      const int64_t base = (static_cast<int64_t>(n) * C + c) * S;
      const T* px = x.data.data() + base;
      T* py = y.data.data() + base;
      for (int64_t i = 0; i < S; ++i) {
        const T xh = (px[i] - mu) * istd;
        if (cache) cache->xhat[static_cast<size_t>(base + i)] = xh;
        py[i] = g * xh + b;
      }
    }
  }
  return y;
}

template <class T>
void batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& gamma,
                        const Tensor<T>& gy, Tensor<T>* gx, Tensor<T>* ggamma,
                        Tensor<T>* gbeta) {
  const int N = cache.x_shape[0];
  const int C = cache.x_shape[1];
  const int64_t S = cache.per_channel / N;
  for (int c = 0; c < C; ++c) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int n = 0; n < N; ++n) {
      const int64_t base = (static_cast<int64_t>(n) * C + c) * S;
      const T* pgy = gy.data.data() + base;
      const T* pxh = cache.xhat.data() + base;
      for (int64_t i = 0; i < S; ++i) {
        sum_gy += static_cast<double>(pgy[i]);
        sum_gy_xhat += static_cast<double>(pgy[i]) * static_cast<double>(pxh[i]);
      }
    }
    if (ggamma) ggamma->data[static_cast<size_t>(c)] += static_cast<T>(sum_gy_xhat);
    if (gbeta) gbeta->data[static_cast<size_t>(c)] += static_cast<T>(sum_gy);
    if (gx) {
      const double inv_m = 1.0 / static_cast<double>(cache.per_channel);
      const double g = static_cast<double>(gamma.data[static_cast<size_t>(c)]);
      const double istd = static_cast<double>(cache.invstd[static_cast<size_t>(c)]);
      for (int n = 0; n < N; ++n) {
        const int64_t base = (static_cast<int64_t>(n) * C + c) * S;
        const T* pgy = gy.data.data() + base;
        const T* pxh = cache.xhat.data() + base;
        T* pgx = gx->data.data() + base;
        for (int64_t i = 0; i < S; ++i) {
          const double term = static_cast<double>(pgy[i]) - inv_m * sum_gy -
                              static_cast<double>(pxh[i]) * inv_m * sum_gy_xhat;
          pgx[i] += static_cast<T>(g * istd * term);
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU.

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  return y;
}

template <class T>
void relu_backward(const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>* gx) {
  for (size_t i = 0; i < x.data.size(); ++i) {
    if (x.data[i] > T(0)) gx->data[i] += gy.data[i];
  }
}

// ---------------------------------------------------------------------------
// 2x2 stride-2 average pooling with ceil-mode output so spatial dims never
// collapse to zero. Edge windows average over the cells actually present.

template <class T>
Tensor<T> avgpool2x2(const Tensor<T>& x) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int OH = (H + 1) / 2, OW = (W + 1) / 2;
  Tensor<T> y({N, C, OH, OW});
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* px = x.data.data() + (static_cast<int64_t>(n) * C + c) * H * W;
      T* py = y.data.data() + (static_cast<int64_t>(n) * C + c) * OH * OW;
      for (int i = 0; i < OH; ++i) {
        for (int j = 0; j < OW; ++j) {
          const int h1 = std::min(2 * i + 2, H), w1 = std::min(2 * j + 2, W);
          T acc = 0;
          int cnt = 0;
          for (int a = 2 * i; a < h1; ++a) {
            for (int b = 2 * j; b < w1; ++b, ++cnt) acc += px[static_cast<int64_t>(a) * W + b];
          }
          py[static_cast<int64_t>(i) * OW + j] = acc / static_cast<T>(cnt);
        }
      }
    }
  }
  return y;
}

template <class T>
void avgpool2x2_backward(const std::vector<int>& x_shape, const Tensor<T>& gy, Tensor<T>* gx) {
  const int N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  const int OH = (H + 1) / 2, OW = (W + 1) / 2;
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* pgy = gy.data.data() + (static_cast<int64_t>(n) * C + c) * OH * OW;
      T* pgx = gx->data.data() + (static_cast<int64_t>(n) * C + c) * H * W;
      for (int i = 0; i < OH; ++i) {
        for (int j = 0; j < OW; ++j) {
          const int h1 = std::min(2 * i + 2, H), w1 = std::min(2 * j + 2, W);
          const int cnt = (h1 - 2 * i) * (w1 - 2 * j);
          const T share = pgy[static_cast<int64_t>(i) * OW + j] / static_cast<T>(cnt);
          for (int a = 2 * i; a < h1; ++a) {
            for (int b = 2 * j; b < w1; ++b) pgx[static_cast<int64_t>(a) * W + b] += share;
          }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Global average pool [N,C,H,W] -> [N,C].

template <class T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
  const int N = x.dim(0), C = x.dim(1);
  const int64_t S = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y({N, C});
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T* p = x.data.data() + (static_cast<int64_t>(n) * C + c) * S;
      double acc = 0.0;
      for (int64_t i = 0; i < S; ++i) acc += static_cast<double>(p[i]);
      y.data[static_cast<size_t>(n) * C + c] = static_cast<T>(acc / static_cast<double>(S));
    }
  }
  return y;
}

template <class T>
void global_avgpool_backward(const std::vector<int>& x_shape, const Tensor<T>& gy,
                             Tensor<T>* gx) {
  const int N = x_shape[0], C = x_shape[1];
  const int64_t S = static_cast<int64_t>(x_shape[2]) * x_shape[3];
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const T share = gy.data[static_cast<size_t>(n) * C + c] / static_cast<T>(S);
      T* p = gx->data.data() + (static_cast<int64_t>(n) * C + c) * S;
      for (int64_t i = 0; i < S; ++i) p[i] += share;
    }
  }
}

// ---------------------------------------------------------------------------
// Adaptive average pooling along the last (time) axis of [N,C,H,W] to a
// fixed number of output columns. Windows follow floor/ceil bounds, so this
// both downsamples and upsamples.

template <class T>
Tensor<T> adaptive_avgpool_w(const Tensor<T>& x, int out_w) {
  const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  Tensor<T> y({N, C, H, out_w});
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int h = 0; h < H; ++h) {
        const T* px = x.data.data() + ((static_cast<int64_t>(n) * C + c) * H + h) * W;
        T* py = y.data.data() + ((static_cast<int64_t>(n) * C + c) * H + h) * out_w;
        for (int j = 0; j < out_w; ++j) {
          const int w0 = static_cast<int>(static_cast<int64_t>(j) * W / out_w);
          const int w1 = static_cast<int>(((static_cast<int64_t>(j) + 1) * W + out_w - 1) / out_w);
          T acc = 0;
          for (int w = w0; w < w1; ++w) acc += px[w];
          py[j] = acc / static_cast<T>(w1 - w0);
        }
      }
    }
  }
  return y;
}

template <class T>
void adaptive_avgpool_w_backward(const std::vector<int>& x_shape, const Tensor<T>& gy,
                                 Tensor<T>* gx) {
  const int N = x_shape[0], C = x_shape[1], H = x_shape[2], W = x_shape[3];
  const int out_w = gy.dim(3);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int h = 0; h < H; ++h) {
        const T* pgy = gy.data.data() + ((static_cast<int64_t>(n) * C + c) * H + h) * out_w;
        T* pgx = gx->data.data() + ((static_cast<int64_t>(n) * C + c) * H + h) * W;
        for (int j = 0; j < out_w; ++j) {
          const int w0 = static_cast<int>(static_cast<int64_t>(j) * W / out_w);
          const int w1 = static_cast<int>(((static_cast<int64_t>(j) + 1) * W + out_w - 1) / out_w);
          const T share = pgy[j] / static_cast<T>(w1 - w0);
          for (int w = w0; w < w1; ++w) pgx[w] += share;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Generalized-mean pooling over the spatial axes: out = (mean x^p)^(1/p).
// Inputs are clamped at kGemClamp before exponentiation.

constexpr double kGemClamp = 1e-6;

template <class T>
struct GemCache {
  std::vector<T> xc;    // clamped input
  std::vector<T> xp;    // clamped input to the p-th power
  std::vector<T> mean;  // per (n,c)
  std::vector<T> out;   // per (n,c)
  std::vector<int> x_shape;
  T p;
};

template <class T>
Tensor<T> gem_pool(const Tensor<T>& x, T p, GemCache<T>* cache) {
  if (x.ndim() != 4) throw ShapeMismatch("gem_pool: need [N,C,H,W]");
  if (!(p > T(0))) throw Error("gem_pool: p must be positive");
  const int N = x.dim(0), C = x.dim(1);
  const int64_t S = static_cast<int64_t>(x.dim(2)) * x.dim(3);
  Tensor<T> y({N, C});
  if (cache) {
    cache->xc.resize(x.data.size());
    cache->xp.resize(x.data.size());
    cache->mean.resize(static_cast<size_t>(N) * C);
    cache->out.resize(static_cast<size_t>(N) * C);
    cache->x_shape = x.shape;
    cache->p = p;
  }
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const int64_t base = (static_cast<int64_t>(n) * C + c) * S;
      const T* px = x.data.data() + base;
      double acc = 0.0;
      for (int64_t i = 0; i < S; ++i) {
        const T xc = std::max(px[i], static_cast<T>(kGemClamp));
        const T xp = static_cast<T>(std::pow(static_cast<double>(xc), static_cast<double>(p)));
        if (cache) {
          cache->xc[static_cast<size_t>(base + i)] = xc;
          cache->xp[static_cast<size_t>(base + i)] = xp;
        }
        acc += static_cast<double>(xp);
      }
      const double mean = acc / static_cast<double>(S);
      const double out = std::pow(mean, 1.0 / static_cast<double>(p));
      y.data[static_cast<size_t>(n) * C + c] = static_cast<T>(out);
      if (cache) {
        cache->mean[static_cast<size_t>(n) * C + c] = static_cast<T>(mean);
        cache->out[static_cast<size_t>(n) * C + c] = static_cast<T>(out);
      }
    }
  }
  return y;
}

// gp, when non-null, receives the accumulated scalar dL/dp.
template <class T>
void gem_pool_backward(const GemCache<T>& cache, const Tensor<T>& x, const Tensor<T>& gy,
                       Tensor<T>* gx, T* gp) {
  const int N = cache.x_shape[0], C = cache.x_shape[1];
  const int64_t S = static_cast<int64_t>(cache.x_shape[2]) * cache.x_shape[3];
  const double p = static_cast<double>(cache.p);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const size_t nc = static_cast<size_t>(n) * C + c;
      const int64_t base = (static_cast<int64_t>(n) * C + c) * S;
      const double mean = static_cast<double>(cache.mean[nc]);
      const double out = static_cast<double>(cache.out[nc]);
      const double g = static_cast<double>(gy.data[nc]);
      if (gx) {
        // dy/dx_i = (y / mean) * xc_i^(p-1) / S, gated by the clamp.
        const double common = g * (out / mean) / static_cast<double>(S);
        T* pgx = gx->data.data() + base;
        const T* px = x.data.data() + base;
        for (int64_t i = 0; i < S; ++i) {
          if (static_cast<double>(px[i]) > kGemClamp) {
            const double xc = static_cast<double>(cache.xc[static_cast<size_t>(base + i)]);
            const double xp = static_cast<double>(cache.xp[static_cast<size_t>(base + i)]);
            pgx[i] += static_cast<T>(common * (xp / xc));
          }
        }
      }
      if (gp) {
        double mp = 0.0;  // d mean / dp = mean of xp * ln(xc)
        for (int64_t i = 0; i < S; ++i) {
          const double xc = static_cast<double>(cache.xc[static_cast<size_t>(base + i)]);
          const double xp = static_cast<double>(cache.xp[static_cast<size_t>(base + i)]);
          mp += xp * std::log(xc);
        }
        mp /= static_cast<double>(S);
        const double dy_dp = out * (-std::log(mean) / (p * p) + mp / (p * mean));
        *gp += static_cast<T>(g * dy_dp);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Linear: y[n,o] = sum_d x[n,d] * w[o,d] + b[o].

template <class T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.ndim() != 2 || w.ndim() != 2) throw ShapeMismatch("linear: need 2-d input and weight");
  const int N = x.dim(0), D = x.dim(1), O = w.dim(0);
  if (w.dim(1) != D || b.numel() != O) throw ShapeMismatch("linear: dim mismatch");
  Tensor<T> y({N, O});
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < O; ++o) y.data[static_cast<size_t>(n) * O + o] = b.data[static_cast<size_t>(o)];
  }
  gemm_nt<T>(N, D, O, x.data.data(), w.data.data(), y.data.data());
  return y;
}

template <class T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy,
                     Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
  const int N = x.dim(0), D = x.dim(1), O = w.dim(0);
  if (gx) gemm_nn<T>(N, O, D, gy.data.data(), w.data.data(), gx->data.data());
  if (gw) gemm_tn<T>(O, N, D, gy.data.data(), x.data.data(), gw->data.data());
  if (gb) {
    for (int n = 0; n < N; ++n) {
      for (int o = 0; o < O; ++o) gb->data[static_cast<size_t>(o)] += gy.data[static_cast<size_t>(n) * O + o];
    }
  }
}

// ---------------------------------------------------------------------------
// Numerically stable binary cross-entropy on logits, mean over all entries.

template <class T>
double sigmoid(T z) {
  const double zd = static_cast<double>(z);
  if (zd >= 0.0) {
    return 1.0 / (1.0 + std::exp(-zd));
  }
  const double e = std::exp(zd);
  return e / (1.0 + e);
}

template <class T>
double bce_with_logits(const Tensor<T>& logits, const Tensor<T>& targets) {
  if (logits.data.size() != targets.data.size()) throw ShapeMismatch("bce: size mismatch");
  if (logits.data.empty()) throw ShapeMismatch("bce: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < logits.data.size(); ++i) {
    const double z = static_cast<double>(logits.data[i]);
    const double y = static_cast<double>(targets.data[i]);
    acc += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return acc / static_cast<double>(logits.data.size());
}

// glogits += loss_grad * d(loss)/d(logits)
template <class T>
void bce_with_logits_backward(const Tensor<T>& logits, const Tensor<T>& targets,
                              double loss_grad, Tensor<T>* glogits) {
  const double inv_n = 1.0 / static_cast<double>(logits.data.size());
  for (size_t i = 0; i < logits.data.size(); ++i) {
    const double s = sigmoid(logits.data[i]);
    glogits->data[i] += static_cast<T>(loss_grad * inv_n *
                                       (s - static_cast<double>(targets.data[i])));
  }
}

// ---------------------------------------------------------------------------
// Training schedule and optimizer.

struct TrainConfig {
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  int batch_size = 16;
  int epochs = 30;
  uint64_t seed = 42;
};

inline double cosine_lr(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch > cfg.epochs) throw Error("cosine_lr: epoch out of range");
  const double t = static_cast<double>(epoch) / static_cast<double>(cfg.epochs);
  return cfg.lr_min + 0.5 * (cfg.lr_max - cfg.lr_min) *
                          (1.0 + std::cos(3.1415926535897932384626433832795 * t));
}

template <class T>
struct AdamState {
  std::vector<T> m, v;
  int64_t t = 0;
};

template <class T>
void adam_step(Tensor<T>& param, const std::vector<T>& grad, AdamState<T>& st, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
  if (grad.size() != param.data.size()) throw ShapeMismatch("adam_step: grad size mismatch");
  if (st.m.size() != param.data.size()) {
    st.m.assign(param.data.size(), T(0));
    st.v.assign(param.data.size(), T(0));
    st.t = 0;
  }
  ++st.t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.t));
  for (size_t i = 0; i < param.data.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double m = beta1 * static_cast<double>(st.m[i]) + (1.0 - beta1) * g;
    const double v = beta2 * static_cast<double>(st.v[i]) + (1.0 - beta2) * g * g;
    st.m[i] = static_cast<T>(m);
    st.v[i] = static_cast<T>(v);
    const double mh = m / bc1;
    const double vh = v / bc2;
    param.data[i] -= static_cast<T>(lr * mh / (std::sqrt(vh) + eps));
  }
}

// Owns per-parameter state; parameters keep their gradients in
// Tensor::grad and are updated in registration order.
template <class T>
class AdamOptimizer {
 public:
  void add_param(Tensor<T>* p) {
    p->require_grad();
    params_.push_back(p);
    states_.emplace_back();
  }
  void add_params(const std::vector<Tensor<T>*>& ps) {
    for (auto* p : ps) add_param(p);
  }
  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }
  void step(double lr) {
    for (size_t i = 0; i < params_.size(); ++i) {
      adam_step(*params_[i], params_[i]->grad, states_[i], lr);
    }
  }
  size_t size() const { return params_.size(); }

 private:
  std::vector<Tensor<T>*> params_;
  std::vector<AdamState<T>> states_;
};

}  // namespace fcv::nn

#endif  // FCV_NN_HPP_
