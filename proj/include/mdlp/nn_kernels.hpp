#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>

namespace mdlp::nn::kernels {

// Layer primitives shared by the forward/backward passes. Layout is
// channel-last for activations; conv weights are [ky][kx][ic][oc] so the
// innermost loops run over contiguous output channels. Accumulation order is
// fixed (bias, then taps in (ky, kx, ic) order), which keeps results
// independent of scheduling.

template <typename T>
void conv3x3_forward(const T* __restrict in, int h, int w, int ic, const T* __restrict W,
                     const T* __restrict bias, int oc, T* __restrict out) {
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      T* op = out + (static_cast<std::size_t>(y) * w + x) * oc;
      for (int o = 0; o < oc; ++o) op[o] = bias[o];
    }
  }
  for (int ky = 0; ky < 3; ++ky) {
    const int dy = ky - 1;
    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
    for (int kx = 0; kx < 3; ++kx) {
      const int dx = kx - 1;
      const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
      const T* Wk = W + static_cast<std::size_t>((ky * 3 + kx) * ic) * oc;
      for (int y = y0; y < y1; ++y) {
        const T* __restrict ip = in + (static_cast<std::size_t>(y + dy) * w + (x0 + dx)) * ic;
        T* __restrict op = out + (static_cast<std::size_t>(y) * w + x0) * oc;
        for (int x = x0; x < x1; ++x) {
          // pairs of input channels share one pass over the accumulator row
          int i = 0;
          for (; i + 1 < ic; i += 2) {
            const T s0 = ip[i], s1 = ip[i + 1];
            const T* __restrict w0 = Wk + static_cast<std::size_t>(i) * oc;
            const T* __restrict w1 = w0 + oc;
            for (int o = 0; o < oc; ++o) op[o] += s0 * w0[o] + s1 * w1[o];
          }
          for (; i < ic; ++i) {
            const T s = ip[i];
            const T* __restrict wr = Wk + static_cast<std::size_t>(i) * oc;
            for (int o = 0; o < oc; ++o) op[o] += s * wr[o];
          }
          ip += ic;
          op += oc;
        }
      }
    }
  }
}

// din += dout (*) W using transposed weights [ky][kx][oc][ic]; din must be
// zero-initialized by the caller.
template <typename T>
void conv3x3_backward_data(const T* __restrict dout, int h, int w, int oc, const T* __restrict Wt,
                           int ic, T* __restrict din) {
  for (int ky = 0; ky < 3; ++ky) {
    const int dy = ky - 1;
    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
    for (int kx = 0; kx < 3; ++kx) {
      const int dx = kx - 1;
      const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
      const T* Wk = Wt + static_cast<std::size_t>((ky * 3 + kx) * oc) * ic;
      for (int y = y0; y < y1; ++y) {
        const T* __restrict dp = dout + (static_cast<std::size_t>(y) * w + x0) * oc;
        T* __restrict dip = din + (static_cast<std::size_t>(y + dy) * w + (x0 + dx)) * ic;
        for (int x = x0; x < x1; ++x) {
          int o = 0;
          for (; o + 1 < oc; o += 2) {
            const T s0 = dp[o], s1 = dp[o + 1];
            const T* __restrict w0 = Wk + static_cast<std::size_t>(o) * ic;
            const T* __restrict w1 = w0 + ic;
            for (int i = 0; i < ic; ++i) dip[i] += s0 * w0[i] + s1 * w1[i];
          }
          for (; o < oc; ++o) {
            const T s = dp[o];
            const T* __restrict wr = Wk + static_cast<std::size_t>(o) * ic;
            for (int i = 0; i < ic; ++i) dip[i] += s * wr[i];
          }
          dp += oc;
          dip += ic;
        }
      }
    }
  }
}

template <typename T>
void conv3x3_backward_weights(const T* __restrict in, const T* __restrict dout, int h, int w,
                              int ic, int oc, T* __restrict dW) {
  for (int ky = 0; ky < 3; ++ky) {
    const int dy = ky - 1;
    const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
    for (int kx = 0; kx < 3; ++kx) {
      const int dx = kx - 1;
      const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
      T* dWk = dW + static_cast<std::size_t>((ky * 3 + kx) * ic) * oc;
      for (int y = y0; y < y1; ++y) {
        const T* __restrict ip = in + (static_cast<std::size_t>(y + dy) * w + (x0 + dx)) * ic;
        const T* __restrict dp = dout + (static_cast<std::size_t>(y) * w + x0) * oc;
        // pairs of pixels share one pass over each dW row
        int x = x0;
        for (; x + 1 < x1; x += 2) {
          const T* __restrict ip2 = ip + ic;
          const T* __restrict dp2 = dp + oc;
          for (int i = 0; i < ic; ++i) {
            const T sa = ip[i], sb = ip2[i];
            T* __restrict dwr = dWk + static_cast<std::size_t>(i) * oc;
            for (int o = 0; o < oc; ++o) dwr[o] += sa * dp[o] + sb * dp2[o];
          }
          ip += 2 * ic;
          dp += 2 * oc;
        }
        for (; x < x1; ++x) {
          for (int i = 0; i < ic; ++i) {
            const T s = ip[i];
            T* __restrict dwr = dWk + static_cast<std::size_t>(i) * oc;
            for (int o = 0; o < oc; ++o) dwr[o] += s * dp[o];
          }
          ip += ic;
          dp += oc;
        }
      }
    }
  }
}

// 2x2 stride-2 max pool with floor semantics; ties keep the first element of
// the row-major window scan, and the backward pass routes the gradient there.
template <typename T>
void maxpool2_forward(const T* in, int h, int w, int c, T* out, std::uint8_t* arg) {
  const int ph = h / 2, pw = w / 2;
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      const T* base = in + (static_cast<std::size_t>(2 * py) * w + 2 * px) * c;
      T* op = out + (static_cast<std::size_t>(py) * pw + px) * c;
      std::uint8_t* ap = arg + (static_cast<std::size_t>(py) * pw + px) * c;
      const T* cells[4] = {base, base + c, base + static_cast<std::size_t>(w) * c,
                           base + static_cast<std::size_t>(w) * c + c};
      for (int ch = 0; ch < c; ++ch) {
        T best = cells[0][ch];
        std::uint8_t bi = 0;
        for (std::uint8_t q = 1; q < 4; ++q) {
          if (cells[q][ch] > best) {
            best = cells[q][ch];
            bi = q;
          }
        }
        op[ch] = best;
        ap[ch] = bi;
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const T* dout, int h, int w, int c, const std::uint8_t* arg, T* din) {
  std::memset(din, 0, static_cast<std::size_t>(h) * w * c * sizeof(T));
  const int ph = h / 2, pw = w / 2;
  for (int py = 0; py < ph; ++py) {
    for (int px = 0; px < pw; ++px) {
      T* base = din + (static_cast<std::size_t>(2 * py) * w + 2 * px) * c;
      const T* dp = dout + (static_cast<std::size_t>(py) * pw + px) * c;
      const std::uint8_t* ap = arg + (static_cast<std::size_t>(py) * pw + px) * c;
      T* cells[4] = {base, base + c, base + static_cast<std::size_t>(w) * c,
                     base + static_cast<std::size_t>(w) * c + c};
      for (int ch = 0; ch < c; ++ch) cells[ap[ch]][ch] = dp[ch];
    }
  }
}

template <typename T>
void dense_forward(const T* __restrict x, int in, const T* __restrict W, const T* __restrict bias,
                   int out, T* __restrict y) {
  for (int o = 0; o < out; ++o) y[o] = bias[o];
  int i = 0;
  for (; i + 1 < in; i += 2) {
    const T s0 = x[i], s1 = x[i + 1];
    const T* __restrict w0 = W + static_cast<std::size_t>(i) * out;
    const T* __restrict w1 = w0 + out;
    for (int o = 0; o < out; ++o) y[o] += s0 * w0[o] + s1 * w1[o];
  }
  for (; i < in; ++i) {
    const T s = x[i];
    const T* __restrict wr = W + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) y[o] += s * wr[o];
  }
}

// dx = Wt * dy with Wt laid out [out][in]; dx is overwritten.
template <typename T>
void dense_backward_data(const T* __restrict dy, int out, const T* __restrict Wt, int in,
                         T* __restrict dx) {
  std::memset(dx, 0, static_cast<std::size_t>(in) * sizeof(T));
  int o = 0;
  for (; o + 1 < out; o += 2) {
    const T s0 = dy[o], s1 = dy[o + 1];
    const T* __restrict w0 = Wt + static_cast<std::size_t>(o) * in;
    const T* __restrict w1 = w0 + in;
    for (int i = 0; i < in; ++i) dx[i] += s0 * w0[i] + s1 * w1[i];
  }
  for (; o < out; ++o) {
    const T s = dy[o];
    const T* __restrict wr = Wt + static_cast<std::size_t>(o) * in;
    for (int i = 0; i < in; ++i) dx[i] += s * wr[i];
  }
}

template <typename T>
void dense_backward_weights(const T* __restrict x, const T* __restrict dy, int in, int out,
                            T* __restrict dW, T* __restrict db) {
  for (int o = 0; o < out; ++o) db[o] += dy[o];
  for (int i = 0; i < in; ++i) {
    const T s = x[i];
    T* __restrict dwr = dW + static_cast<std::size_t>(i) * out;
    for (int o = 0; o < out; ++o) dwr[o] += s * dy[o];
  }
}

}  // namespace mdlp::nn::kernels
