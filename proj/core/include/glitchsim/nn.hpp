#pragma once

// Float layer kernels used by the trainer. Templated on the scalar so that
// gradient checks can run in double while training runs in float.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "glitchsim/model.hpp"

namespace glitchsim::nn {

template <class T>
void conv_forward(const T* in, const Shape& is, const T* w, const T* b, const LayerDims& d, T* out, const Shape& os) {
  const std::uint32_t kh = d[2], kw = d[3];
  for (std::uint32_t oc = 0; oc < os.channels; ++oc) {
    T* o = out + std::size_t{oc} * os.height * os.width;
    std::fill(o, o + std::size_t{os.height} * os.width, b[oc]);
    for (std::uint32_t ic = 0; ic < is.channels; ++ic) {
      const T* x = in + std::size_t{ic} * is.height * is.width;
      const T* wk = w + (std::size_t{oc} * is.channels + ic) * kh * kw;
      for (std::uint32_t ky = 0; ky < kh; ++ky)
        for (std::uint32_t kx = 0; kx < kw; ++kx) {
          const T wv = wk[ky * kw + kx];
          for (std::uint32_t oy = 0; oy < os.height; ++oy) {
            const T* xr = x + std::size_t{oy + ky} * is.width + kx;
            T* orow = o + std::size_t{oy} * os.width;
            for (std::uint32_t ox = 0; ox < os.width; ++ox) orow[ox] += wv * xr[ox];
          }
        }
    }
  }
}

/// Accumulates into dw/db; writes din when non-null.
template <class T>
void conv_backward(const T* in, const Shape& is, const T* w, const LayerDims& d, const T* dout, const Shape& os, T* dw,
                   T* db, T* din) {
  const std::uint32_t kh = d[2], kw = d[3];
  if (din) std::fill(din, din + is.size(), T(0));
  for (std::uint32_t oc = 0; oc < os.channels; ++oc) {
    const T* g = dout + std::size_t{oc} * os.height * os.width;
    T bsum = 0;
    for (std::size_t i = 0; i < std::size_t{os.height} * os.width; ++i) bsum += g[i];
    db[oc] += bsum;
    for (std::uint32_t ic = 0; ic < is.channels; ++ic) {
      const T* x = in + std::size_t{ic} * is.height * is.width;
      T* dx = din ? din + std::size_t{ic} * is.height * is.width : nullptr;
      const std::size_t wbase = (std::size_t{oc} * is.channels + ic) * kh * kw;
      for (std::uint32_t ky = 0; ky < kh; ++ky)
        for (std::uint32_t kx = 0; kx < kw; ++kx) {
          const T wv = w[wbase + ky * kw + kx];
          T acc = 0;
          for (std::uint32_t oy = 0; oy < os.height; ++oy) {
            const T* xr = x + std::size_t{oy + ky} * is.width + kx;
            const T* gr = g + std::size_t{oy} * os.width;
            for (std::uint32_t ox = 0; ox < os.width; ++ox) acc += gr[ox] * xr[ox];
            if (dx) {
              T* dxr = dx + std::size_t{oy + ky} * is.width + kx;
              for (std::uint32_t ox = 0; ox < os.width; ++ox) dxr[ox] += gr[ox] * wv;
            }
          }
          dw[wbase + ky * kw + kx] += acc;
        }
    }
  }
}

/// Max pooling; records the flat input index of each winner (first maximum).
template <class T>
void pool_forward(const T* in, const Shape& is, const LayerDims& d, T* out, const Shape& os, std::uint32_t* winner) {
  for (std::uint32_t c = 0; c < os.channels; ++c)
    for (std::uint32_t oy = 0; oy < os.height; ++oy)
      for (std::uint32_t ox = 0; ox < os.width; ++ox) {
        std::size_t best = (std::size_t{c} * is.height + oy * d[2]) * is.width + ox * d[3];
        for (std::uint32_t y = 0; y < d[0]; ++y)
          for (std::uint32_t x = 0; x < d[1]; ++x) {
            const std::size_t idx = (std::size_t{c} * is.height + oy * d[2] + y) * is.width + ox * d[3] + x;
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = (std::size_t{c} * os.height + oy) * os.width + ox;
        out[o] = in[best];
        winner[o] = static_cast<std::uint32_t>(best);
      }
}

template <class T>
void pool_backward(const T* dout, const Shape& os, const std::uint32_t* winner, T* din, const Shape& is) {
  std::fill(din, din + is.size(), T(0));
  for (std::size_t o = 0; o < os.size(); ++o) din[winner[o]] += dout[o];
}

template <class T>
void fc_forward(const T* in, std::size_t n_in, const T* w, const T* b, std::size_t n_out, T* out) {
  for (std::size_t o = 0; o < n_out; ++o) {
    const T* wr = w + o * n_in;
    T acc = 0;
    for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * in[i];
    out[o] = acc + b[o];
  }
}

template <class T>
void fc_backward(const T* in, std::size_t n_in, const T* w, std::size_t n_out, const T* dout, T* dw, T* db, T* din) {
  if (din) std::fill(din, din + n_in, T(0));
  for (std::size_t o = 0; o < n_out; ++o) {
    const T g = dout[o];
    db[o] += g;
    T* dwr = dw + o * n_in;
    const T* wr = w + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) dwr[i] += g * in[i];
    if (din)
      for (std::size_t i = 0; i < n_in; ++i) din[i] += g * wr[i];
  }
}

template <class T>
void tanh_forward(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
}

/// In-place: g <- g * (1 - y^2), where y is the tanh output.
template <class T>
void tanh_backward(const T* y, T* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) g[i] *= T(1) - y[i] * y[i];
}

/// Softmax cross-entropy; writes d(loss)/d(logits) and returns the loss.
template <class T>
T softmax_xent(const T* logits, std::size_t n, std::size_t label, T* dlogits) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits[i]);
  T sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(logits[i] - mx);
  const T log_z = mx + std::log(sum);
  for (std::size_t i = 0; i < n; ++i) dlogits[i] = std::exp(logits[i] - log_z) - (i == label ? T(1) : T(0));
  return log_z - logits[label];
}

}  // namespace glitchsim::nn
