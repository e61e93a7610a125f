#include "ccseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ccseg/error.hpp"

namespace ccseg {

std::size_t shape_volume(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_volume(shape_)) {
    throw ContractViolation("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_string(shape_));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ContractViolation("axis " + std::to_string(axis) + " out of range for shape " +
                            shape_string(shape_));
  }
  return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_volume(shape) != data_.size()) {
    throw ContractViolation("cannot reshape " + shape_string(shape_) + " to " +
                            shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(),
                     [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ContractViolation("max_abs_diff: shapes " + shape_string(a.shape()) + " and " +
                            shape_string(b.shape()) + " differ");
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ContractViolation(std::string(what) + " must have rank " + std::to_string(rank) +
                            ", got shape " + shape_string(t.shape()));
  }
}

// Output extent of a strided window; floor semantics.
std::size_t conv_extent(std::size_t in, std::size_t k, std::size_t stride, std::size_t pad,
                        const char* axis) {
  if (in + 2 * pad < k) {
    throw ConfigError(std::string("conv2d: kernel larger than padded input along ") + axis);
  }
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
              std::size_t stride, std::size_t padding) {
  require_rank(input, 3, "conv2d input");
  require_rank(kernel, 4, "conv2d kernel");
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const std::size_t c_out = kernel.dim(0), kh = kernel.dim(2), kw = kernel.dim(3);
  if (kernel.dim(1) != c_in) {
    throw ContractViolation("conv2d: kernel C_in " + std::to_string(kernel.dim(1)) +
                            " does not match input channels " + std::to_string(c_in));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ContractViolation("conv2d: kernel extents must be odd, got " +
                            shape_string(kernel.shape()));
  }
  if (!bias.empty() && bias.size() != c_out) {
    throw ContractViolation("conv2d: bias length " + std::to_string(bias.size()) +
                            " does not match C_out " + std::to_string(c_out));
  }
  const std::size_t ho = conv_extent(h, kh, stride, padding, "H");
  const std::size_t wo = conv_extent(w, kw, stride, padding, "W");

  Tensor out({c_out, ho, wo});
  const double* in = input.data().data();
  const double* ker = kernel.data().data();
  double* dst = out.data().data();
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto p = static_cast<std::ptrdiff_t>(padding);

  for (std::size_t co = 0; co < c_out; ++co) {
    double* plane = dst + co * ho * wo;
    std::fill(plane, plane + ho * wo, bias.empty() ? 0.0 : bias[co]);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      const double* src = in + ci * h * w;
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wt = ker[((co * c_in + ci) * kh + ky) * kw + kx];
          if (wt == 0.0) continue;
          const auto dy = static_cast<std::ptrdiff_t>(ky) - p;
          const auto dx = static_cast<std::ptrdiff_t>(kx) - p;
          // ox range with 0 <= ox*s + dx < w
          const std::ptrdiff_t x_lo = dx >= 0 ? 0 : (-dx + s - 1) / s;
          const std::ptrdiff_t x_hi =
              std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(wo),
                                       sw - 1 - dx >= 0 ? (sw - 1 - dx) / s + 1 : 0);
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy) * s + dy;
            if (iy < 0 || iy >= sh) continue;
            double* orow = plane + oy * wo;
            const double* irow = src + iy * sw;
            if (s == 1) {
              for (std::ptrdiff_t ox = x_lo; ox < x_hi; ++ox) orow[ox] += wt * irow[ox + dx];
            } else {
              for (std::ptrdiff_t ox = x_lo; ox < x_hi; ++ox) orow[ox] += wt * irow[ox * s + dx];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor softmax_axis(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) {
    throw ContractViolation("softmax_axis: axis " + std::to_string(axis) +
                            " invalid for shape " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(axis);
  if (n == 0) throw ContractViolation("softmax_axis: empty axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);

  Tensor out(x.shape());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double m = x[base];
      for (std::size_t k = 1; k < n; ++k) m = std::max(m, x[base + k * inner]);
      double sum = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double e = std::exp(x[base + k * inner] - m);
        out[base + k * inner] = e;
        sum += e;
      }
      for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= sum;
    }
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    auto lo = static_cast<std::size_t>(src);
    if (lo > in - 1) lo = in - 1;
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[d] = {lo, hi, hi == lo ? 0.0 : src - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Tensor bilinear_resize(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  require_rank(x, 3, "bilinear_resize input");
  if (out_h == 0 || out_w == 0) {
    throw ContractViolation("bilinear_resize: output extents must be positive");
  }
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h == 0 || w == 0) throw ContractViolation("bilinear_resize: empty input");
  const auto ty = bilinear_taps(h, out_h);
  const auto tx = bilinear_taps(w, out_w);
  Tensor out({c, out_h, out_w});
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const Tap& vy = ty[oy];
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const Tap& vx = tx[ox];
        const double a = x.at(ch, vy.lo, vx.lo), b = x.at(ch, vy.lo, vx.hi);
        const double cc = x.at(ch, vy.hi, vx.lo), d = x.at(ch, vy.hi, vx.hi);
        // difference form keeps constants exact
        const double top = a + vx.frac * (b - a);
        const double bot = cc + vx.frac * (d - cc);
        out.at(ch, oy, ox) = top + vy.frac * (bot - top);
      }
    }
  }
  return out;
}

void activation_inplace(Tensor& x, Activation kind) {
  switch (kind) {
    case Activation::kRelu:
      for (double& v : x.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      for (double& v : x.data()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::kTanh:
      for (double& v : x.data()) v = std::tanh(v);
      break;
  }
}

Tensor activation(const Tensor& x, Activation kind) {
  Tensor out = x;
  activation_inplace(out, kind);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul lhs");
  require_rank(b, 2, "matmul rhs");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw ContractViolation("matmul: inner extents " + std::to_string(k) + " and " +
                            std::to_string(b.dim(0)) + " differ");
  }
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data().data() + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      const double* brow = b.data().data() + kk * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat lhs");
  require_rank(b, 3, "concat rhs");
  if (a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2)) {
    throw ContractViolation("concat_channels: spatial extents " + shape_string(a.shape()) +
                            " vs " + shape_string(b.shape()));
  }
  std::vector<double> data;
  data.reserve(a.size() + b.size());
  data.insert(data.end(), a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(data));
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ContractViolation("tensor add: shapes " + shape_string(a.shape()) + " and " +
                            shape_string(b.shape()) + " differ");
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

}  // namespace ccseg
