#pragma once

#include <cstddef>
#include <vector>

namespace mdlp {

// Channel stack: row-major, channel-last. Index (y, x, ch) -> (y*w + x)*c + ch.
// Row 0 is y = -extent; column 0 is x = -extent (or x = 0 after crop_half).
template <typename T>
struct Stack {
  int h = 0, w = 0, c = 0;
  std::vector<T> v;

  Stack() = default;
  Stack(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(static_cast<std::size_t>(h_) * w_ * c_) {}

  T& at(int y, int x, int ch) { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  const T& at(int y, int x, int ch) const { return v[(static_cast<std::size_t>(y) * w + x) * c + ch]; }
  std::size_t size() const { return v.size(); }
};

using StackD = Stack<double>;
using StackF = Stack<float>;

}  // namespace mdlp
