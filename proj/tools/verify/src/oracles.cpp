#include "ccseg/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace ccseg::verify {

namespace {

// Groups this much smaller than the largest one are compared in absolute terms.
constexpr double kGroupFloor = 1e-3;

std::size_t overlap(const BinaryMask& a, const BinaryMask& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) n += a.pixels[i] && b.pixels[i];
  return n;
}

struct Point {
  long x, y;
};

std::vector<Point> points_of(const BinaryMask& m) {
  std::vector<Point> p;
  for (std::size_t y = 0; y < m.height; ++y) {
    for (std::size_t x = 0; x < m.width; ++x) {
      if (m.at(x, y)) p.push_back({static_cast<long>(x), static_cast<long>(y)});
    }
  }
  return p;
}

double nearest(const Point& p, const std::vector<Point>& set) {
  double best = std::numeric_limits<double>::infinity();
  for (const Point& q : set) {
    const double dx = static_cast<double>(p.x - q.x), dy = static_cast<double>(p.y - q.y);
    best = std::min(best, std::sqrt(dx * dx + dy * dy));
  }
  return best;
}

void fill_rect(BinaryMask& m, Rng& rng) {
  const std::size_t x0 = rng.uniform_index(m.width), y0 = rng.uniform_index(m.height);
  const std::size_t w = 1 + rng.uniform_index(m.width - x0);
  const std::size_t h = 1 + rng.uniform_index(m.height - y0);
  for (std::size_t y = y0; y < y0 + h; ++y) {
    for (std::size_t x = x0; x < x0 + w; ++x) m.at(x, y) = 1;
  }
}

std::vector<double> project(const attention::Projection& p, const Tensor& in) {
  const std::size_t out_c = p.out_channels(), in_c = p.in_channels();
  const std::size_t n = in.dim(1) * in.dim(2);
  std::vector<double> out(out_c * n);
  for (std::size_t o = 0; o < out_c; ++o) {
    for (std::size_t u = 0; u < n; ++u) {
      double s = p.bias[o];
      for (std::size_t c = 0; c < in_c; ++c) s += p.weight[o * in_c + c] * in[c * n + u];
      out[o * n + u] = s;
    }
  }
  return out;
}

}  // namespace

double oracle_dsc(const BinaryMask& a, const BinaryMask& b) {
  return 2.0 * static_cast<double>(overlap(a, b)) / static_cast<double>(a.count() + b.count());
}

BinaryMask oracle_boundary(const BinaryMask& m) {
  BinaryMask out(m.width, m.height);
  const long w = static_cast<long>(m.width), h = static_cast<long>(m.height);
  auto inside = [&](long x, long y) {
    return x >= 0 && y >= 0 && x < w && y < h && m.at(x, y);
  };
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      if (!m.at(x, y)) continue;
      if (!inside(x - 1, y) || !inside(x + 1, y) || !inside(x, y - 1) || !inside(x, y + 1)) {
        out.at(x, y) = 1;
      }
    }
  }
  return out;
}

metrics::DistanceMap oracle_distance(const BinaryMask& points) {
  const auto set = points_of(points);
  metrics::DistanceMap d{points.width, points.height, {}};
  d.values.resize(points.width * points.height);
  for (std::size_t y = 0; y < points.height; ++y) {
    for (std::size_t x = 0; x < points.width; ++x) {
      d.values[y * points.width + x] = nearest({static_cast<long>(x), static_cast<long>(y)}, set);
    }
  }
  return d;
}

double oracle_nsd(const BinaryMask& a, const BinaryMask& b, double tau) {
  const auto ba = points_of(oracle_boundary(a)), bb = points_of(oracle_boundary(b));
  std::size_t close = 0;
  for (const Point& p : ba) close += nearest(p, bb) <= tau;
  for (const Point& p : bb) close += nearest(p, ba) <= tau;
  return static_cast<double>(close) / static_cast<double>(ba.size() + bb.size());
}

metrics::Matching oracle_match(const InstanceLabelMap& gt, const InstanceLabelMap& pred) {
  const auto gi = gt.instance_ids(), pi = pred.instance_ids();
  std::vector<std::vector<double>> s(gi.size(), std::vector<double>(pi.size()));
  for (std::size_t r = 0; r < gi.size(); ++r) {
    for (std::size_t c = 0; c < pi.size(); ++c) {
      s[r][c] = oracle_dsc(gt.mask_of(gi[r]), pred.mask_of(pi[c]));
    }
  }
  using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;
  Pairs best, cur;
  double best_sum = -1.0;
  std::vector<bool> used(pi.size(), false);
  auto visit = [&](auto&& self, std::size_t r) -> void {
    if (r == gi.size()) {
      double sum = 0.0;
      for (const auto& [a, b] : cur) sum += s[a][b];
      if (best_sum < 0.0 || sum > best_sum + 1e-12 ||
          (std::abs(sum - best_sum) <= 1e-12 && cur < best)) {
        best_sum = sum;
        best = cur;
      }
      return;
    }
    self(self, r + 1);
    for (std::size_t c = 0; c < pi.size(); ++c) {
      if (used[c] || !(s[r][c] > 0.0)) continue;
      used[c] = true;
      cur.emplace_back(r, c);
      self(self, r + 1);
      cur.pop_back();
      used[c] = false;
    }
  };
  visit(visit, 0);

  metrics::Matching m;
  std::vector<bool> gu(gi.size(), false), pu(pi.size(), false);
  for (const auto& [r, c] : best) {
    m.pairs.push_back({gi[r], pi[c], s[r][c]});
    gu[r] = pu[c] = true;
  }
  for (std::size_t r = 0; r < gi.size(); ++r) {
    if (!gu[r]) m.unmatched_gt.push_back(gi[r]);
  }
  for (std::size_t c = 0; c < pi.size(); ++c) {
    if (!pu[c]) m.unmatched_pred.push_back(pi[c]);
  }
  return m;
}

Tensor dense_attention(const Tensor& x, const attention::CCWeights& w,
                       const attention::AttentionConfig& cfg) {
  const std::size_t c = x.dim(0), h = x.dim(1), wd = x.dim(2), n = h * wd;
  Tensor state = x;
  for (std::size_t r = 0; r < cfg.recurrence; ++r) {
    const auto& pw = w.pass(r);
    const auto q = project(pw.query, state), k = project(pw.key, state),
               v = project(pw.value, state);
    const std::size_t ck = pw.query.out_channels();
    Tensor next = state;
    std::vector<double> e(n);
    for (std::size_t u = 0; u < n; ++u) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t < n; ++t) {
        const bool allowed = u / wd == t / wd || u % wd == t % wd;
        if (!allowed) {
          e[t] = -std::numeric_limits<double>::infinity();
          continue;
        }
        double s = 0.0;
        for (std::size_t j = 0; j < ck; ++j) s += q[j * n + u] * k[j * n + t];
        e[t] = s;
        mx = std::max(mx, s);
      }
      double z = 0.0;
      for (std::size_t t = 0; t < n; ++t) {
        e[t] = std::isinf(e[t]) ? 0.0 : std::exp(e[t] - mx);
        z += e[t];
      }
      for (std::size_t ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += e[t] / z * v[ch * n + t];
        next[ch * n + u] += s;
      }
    }
    state = std::move(next);
  }
  Tensor out(x.shape());
  const auto& f = w.fusion;
  for (std::size_t o = 0; o < c; ++o) {
    for (std::size_t u = 0; u < n; ++u) {
      double s = f.bias[o] + x[o * n + u];
      for (std::size_t i = 0; i < c; ++i) {
        s += f.weight[o * 2 * c + i] * x[i * n + u];
        s += f.weight[o * 2 * c + c + i] * state[i * n + u];
      }
      out[o * n + u] = s;
    }
  }
  return out;
}

std::size_t brute_affinity_entries(std::size_t height, std::size_t width) {
  std::size_t count = 0;
  for (std::size_t a = 0; a < height * width; ++a) {
    for (std::size_t b = 0; b < height * width; ++b) {
      count += a / width == b / width || a % width == b % width;
    }
  }
  return count;
}

GradientCheck gradient_check(const Tensor& x, const attention::CCWeights& w,
                             const attention::AttentionConfig& cfg, const Tensor& upstream,
                             double epsilon) {
  auto loss = [&](const Tensor& xi, const attention::CCWeights& wi) {
    const Tensor out = attention::rcca_forward(xi, wi, cfg);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * upstream[i];
    return s;
  };
  const attention::CCGradients g = attention::rcca_backward(x, w, cfg, upstream);
  GradientCheck report;

  struct Group {
    std::string name;
    double diff = 0.0, scale = 0.0;
  };
  std::vector<Group> groups;
  auto judge = [&](const std::string& group, const std::vector<double>& analytic,
                   const std::vector<double>& numeric) {
    Group g{group};
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      g.diff = std::max(g.diff, std::abs(analytic[i] - numeric[i]));
      g.scale = std::max({g.scale, std::abs(analytic[i]), std::abs(numeric[i])});
    }
    groups.push_back(g);
  };

  {
    std::vector<double> numeric(x.size());
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = x[i] + epsilon;
      const double up = loss(xp, w);
      xp[i] = x[i] - epsilon;
      const double down = loss(xp, w);
      xp[i] = x[i];
      numeric[i] = (up - down) / (2.0 * epsilon);
    }
    judge("input", g.input.storage(), numeric);
  }

  std::map<std::string, const Tensor*> analytic;
  g.weights.for_each([&](const std::string& name, const Tensor& t) { analytic[name] = &t; });
  attention::CCWeights wp = w;
  std::vector<std::string> names;
  wp.for_each([&](const std::string& name, Tensor&) { names.push_back(name); });
  for (const std::string& name : names) {
    Tensor* target = nullptr;
    wp.for_each([&](const std::string& n, Tensor& t) {
      if (n == name) target = &t;
    });
    std::vector<double> numeric(target->size());
    for (std::size_t i = 0; i < target->size(); ++i) {
      const double orig = (*target)[i];
      (*target)[i] = orig + epsilon;
      const double up = loss(x, wp);
      (*target)[i] = orig - epsilon;
      const double down = loss(x, wp);
      (*target)[i] = orig;
      numeric[i] = (up - down) / (2.0 * epsilon);
    }
    judge(name, analytic.at(name)->storage(), numeric);
  }
  double largest = 0.0;
  for (const auto& gr : groups) largest = std::max(largest, gr.scale);
  for (const auto& gr : groups) {
    const double denom = std::max(gr.scale, kGroupFloor * largest);
    const double rel = denom > 0.0 ? gr.diff / denom : gr.diff;
    ++report.groups;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_group = gr.name;
    }
  }
  return report;
}

BinaryMask random_mask(std::size_t width, std::size_t height, Rng& rng) {
  BinaryMask m(width, height);
  const std::size_t rects = rng.uniform_index(4);
  for (std::size_t i = 0; i < rects; ++i) fill_rect(m, rng);
  for (auto& p : m.pixels) {
    if (rng.bernoulli(0.04)) p ^= 1;
  }
  return m;
}

InstanceLabelMap random_labels(std::size_t width, std::size_t height, std::size_t instances,
                               Rng& rng) {
  InstanceLabelMap m(width, height);
  for (std::size_t i = 1; i <= instances; ++i) {
    BinaryMask r(width, height);
    fill_rect(r, rng);
    for (std::size_t p = 0; p < r.pixels.size(); ++p) {
      if (r.pixels[p]) m.labels[p] = static_cast<std::uint16_t>(i);
    }
  }
  normalize_labels(m);
  return m;
}

InstanceLabelMap perturb_labels(const InstanceLabelMap& labels, Rng& rng) {
  InstanceLabelMap out(labels.width, labels.height);
  std::uint16_t next = 1;
  for (std::uint16_t id : labels.instance_ids()) {
    if (rng.bernoulli(0.15)) continue;
    const long dx = static_cast<long>(rng.uniform_index(5)) - 2;
    const long dy = static_cast<long>(rng.uniform_index(5)) - 2;
    for (std::size_t y = 0; y < labels.height; ++y) {
      for (std::size_t x = 0; x < labels.width; ++x) {
        if (labels.at(x, y) != id) continue;
        const long nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy;
        if (nx < 0 || ny < 0 || nx >= static_cast<long>(labels.width) ||
            ny >= static_cast<long>(labels.height)) {
          continue;
        }
        out.at(nx, ny) = next;
      }
    }
    ++next;
  }
  if (rng.bernoulli(0.3)) {
    BinaryMask extra(labels.width, labels.height);
    fill_rect(extra, rng);
    for (std::size_t p = 0; p < extra.pixels.size(); ++p) {
      if (extra.pixels[p]) out.labels[p] = next;
    }
  }
  for (auto& l : out.labels) {
    if (l && rng.bernoulli(0.03)) l = 0;
  }
  normalize_labels(out);
  return out;
}

Tensor random_tensor(const Shape& shape, Rng& rng, double scale) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = scale * rng.normal();
  return t;
}

}  // namespace ccseg::verify
