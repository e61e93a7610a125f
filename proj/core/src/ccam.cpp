#include "ccseg/ccam.hpp"

#include <algorithm>
#include <cmath>

#include "ccseg/error.hpp"

namespace ccseg::attention {

std::size_t AttentionConfig::key_channels() const {
  return std::max<std::size_t>(1, channels / std::max<std::size_t>(1, reduction));
}

void AttentionConfig::validate() const {
  if (channels == 0) throw ConfigError("attention: channels must be positive");
  if (reduction == 0) throw ConfigError("attention: reduction must be positive");
  if (recurrence == 0) throw ConfigError("attention: recurrence must be positive");
}

namespace {

Projection make_projection(std::size_t out, std::size_t in) {
  return {Tensor({out, in, 1, 1}), Tensor({out})};
}

void fill_gaussian(Tensor& t, Rng& rng, double stddev) {
  for (double& v : t.data()) v = stddev * rng.normal();
}

template <typename W, typename Fn>
void visit(W& w, Fn&& fn) {
  for (std::size_t r = 0; r < w.passes.size(); ++r) {
    auto& p = w.passes[r];
    const std::string pre = "pass" + std::to_string(r) + ".";
    fn(pre + "query.weight", p.query.weight);
    fn(pre + "query.bias", p.query.bias);
    fn(pre + "key.weight", p.key.weight);
    fn(pre + "key.bias", p.key.bias);
    fn(pre + "value.weight", p.value.weight);
    fn(pre + "value.bias", p.value.bias);
  }
  fn("fusion.weight", w.fusion.weight);
  fn("fusion.bias", w.fusion.bias);
}

std::size_t pass_sets(const AttentionConfig& cfg) {
  return cfg.share_weights ? 1 : cfg.recurrence;
}

void check_projection(const Projection& p, std::size_t out, std::size_t in, const char* name) {
  if (p.weight.shape() != Shape{out, in, 1, 1} || p.bias.shape() != Shape{out}) {
    throw ContractViolation(std::string("attention weights: ") + name + " has shape " +
                            shape_string(p.weight.shape()) + ", expected " +
                            shape_string({out, in, 1, 1}));
  }
}

// 1x1 projection on [C,H,W].
Tensor project(const Projection& p, const Tensor& x) {
  return conv2d(x, p.weight, p.bias.data(), 1, 0);
}

// [C,N] -> [N,C]
std::vector<double> position_major(const Tensor& t) {
  const std::size_t c = t.dim(0), n = t.dim(1) * t.dim(2);
  std::vector<double> out(c * n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t u = 0; u < n; ++u) out[u * c + ch] = t[ch * n + u];
  }
  return out;
}

struct PassCache {
  Tensor input;
  Tensor query;
  Tensor key;
  Tensor value;
  AffinityMap attention;
};

void softmax_rows(AffinityMap& a) {
  for (std::size_t u = 0; u < a.positions(); ++u) {
    auto r = a.row(u);
    const double m = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - m);
      sum += v;
    }
    for (double& v : r) v /= sum;
  }
}

Tensor aggregate_unchecked(const AffinityMap& a, const Tensor& value, const Tensor& residual) {
  const std::size_t c = value.dim(0), h = value.dim(1), w = value.dim(2), n = h * w;
  const std::vector<double> vt = position_major(value);
  Tensor out = residual;
  std::vector<double> acc(c);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t u = i * w + j;
      std::fill(acc.begin(), acc.end(), 0.0);
      const auto weights = a.row(u);
      for (std::size_t s = 0; s < weights.size(); ++s) {
        const double av = weights[s];
        const double* vv = vt.data() + a.neighbor(i, j, s) * c;
        for (std::size_t ch = 0; ch < c; ++ch) acc[ch] += av * vv[ch];
      }
      for (std::size_t ch = 0; ch < c; ++ch) out[ch * n + u] += acc[ch];
    }
  }
  return out;
}

Tensor forward_impl(const Tensor& x, const CCWeights& w, const AttentionConfig& cfg,
                    std::vector<PassCache>* caches, Tensor* context = nullptr) {
  cfg.validate();
  if (x.rank() != 3 || x.dim(0) != cfg.channels) {
    throw ContractViolation("rcca_forward: input " + shape_string(x.shape()) +
                            " does not have " + std::to_string(cfg.channels) + " channels");
  }
  validate_weights(cfg, w);
  Tensor h = x;
  for (std::size_t r = 0; r < cfg.recurrence; ++r) {
    const PassWeights& pw = w.pass(r);
    Tensor q = project(pw.query, h);
    Tensor k = project(pw.key, h);
    Tensor v = project(pw.value, h);
    AffinityMap a = cc_affinity(q, k);
    softmax_rows(a);
    Tensor next = aggregate_unchecked(a, v, h);
    if (caches) {
      caches->push_back({std::move(h), std::move(q), std::move(k), std::move(v), std::move(a)});
    }
    h = std::move(next);
  }
  Tensor out = project(w.fusion, concat_channels(x, h));
  out += x;
  if (context) *context = std::move(h);
  return out;
}

// Gradients of a 1x1 projection y = W x + b given dy; accumulates into grad.
void projection_backward(const Projection& p, const Tensor& input, const Tensor& dy,
                         Projection& grad, Tensor& d_input) {
  const std::size_t out_c = p.out_channels(), in_c = p.in_channels();
  const std::size_t n = input.dim(1) * input.dim(2);
  for (std::size_t o = 0; o < out_c; ++o) {
    const double* g = dy.data().data() + o * n;
    double bsum = 0.0;
    for (std::size_t u = 0; u < n; ++u) bsum += g[u];
    grad.bias[o] += bsum;
    for (std::size_t i = 0; i < in_c; ++i) {
      const double* xi = input.data().data() + i * n;
      double dot = 0.0;
      for (std::size_t u = 0; u < n; ++u) dot += g[u] * xi[u];
      grad.weight[o * in_c + i] += dot;
      const double wv = p.weight[o * in_c + i];
      double* di = d_input.data().data() + i * n;
      for (std::size_t u = 0; u < n; ++u) di[u] += wv * g[u];
    }
  }
}

}  // namespace

void CCWeights::for_each(
    const std::function<void(const std::string&, const Tensor&)>& fn) const {
  visit(*this, fn);
}

void CCWeights::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
  visit(*this, fn);
}

CCWeights zero_weights(const AttentionConfig& cfg) {
  cfg.validate();
  const std::size_t c = cfg.channels, ck = cfg.key_channels();
  CCWeights w;
  for (std::size_t r = 0; r < pass_sets(cfg); ++r) {
    w.passes.push_back(
        {make_projection(ck, c), make_projection(ck, c), make_projection(c, c)});
  }
  w.fusion = make_projection(c, 2 * c);
  return w;
}

CCWeights random_weights(const AttentionConfig& cfg, Rng& rng) {
  CCWeights w = zero_weights(cfg);
  w.for_each([&](const std::string& name, Tensor& t) {
    const double fan_in = static_cast<double>(t.rank() > 1 ? t.dim(1) : 1);
    if (name.ends_with(".bias")) {
      fill_gaussian(t, rng, 0.05);
    } else if (name.find(".query.") != std::string::npos || name.find(".key.") != std::string::npos) {
      fill_gaussian(t, rng, 1.0 / std::sqrt(fan_in * std::sqrt(static_cast<double>(t.dim(0)))));
    } else {
      fill_gaussian(t, rng, std::sqrt(2.0 / fan_in));
    }
  });
  return w;
}

void zero_value_and_fusion(CCWeights& w) {
  for (auto& p : w.passes) {
    p.value.weight = Tensor(p.value.weight.shape());
    p.value.bias = Tensor(p.value.bias.shape());
  }
  w.fusion.weight = Tensor(w.fusion.weight.shape());
  w.fusion.bias = Tensor(w.fusion.bias.shape());
}

void validate_weights(const AttentionConfig& cfg, const CCWeights& w) {
  const std::size_t c = cfg.channels, ck = cfg.key_channels();
  if (w.passes.size() != 1 && w.passes.size() != cfg.recurrence) {
    throw ContractViolation("attention weights: " + std::to_string(w.passes.size()) +
                            " pass sets for recurrence " + std::to_string(cfg.recurrence));
  }
  for (const auto& p : w.passes) {
    check_projection(p.query, ck, c, "query");
    check_projection(p.key, ck, c, "key");
    check_projection(p.value, c, c, "value");
  }
  check_projection(w.fusion, c, 2 * c, "fusion");
}

AffinityMap::AffinityMap(std::size_t height, std::size_t width)
    : height_(height), width_(width), values_(height * width * (height + width - 1)) {}

std::size_t affinity_entry_count(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) return 0;
  return height * width * (height + width - 1);
}

AffinityMap cc_affinity(const Tensor& query, const Tensor& key) {
  if (query.rank() != 3 || query.shape() != key.shape()) {
    throw ContractViolation("cc_affinity: query " + shape_string(query.shape()) +
                            " and key " + shape_string(key.shape()) + " must match");
  }
  const std::size_t c = query.dim(0), h = query.dim(1), w = query.dim(2);
  if (h == 0 || w == 0) throw ContractViolation("cc_affinity: empty spatial extent");
  const std::vector<double> qt = position_major(query);
  const std::vector<double> kt = position_major(key);
  AffinityMap a(h, w);
  for (std::size_t i = 0; i < h; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t u = i * w + j;
      const double* qu = qt.data() + u * c;
      auto row = a.row(u);
      for (std::size_t s = 0; s < row.size(); ++s) {
        const double* kv = kt.data() + a.neighbor(i, j, s) * c;
        double dot = 0.0;
        for (std::size_t ch = 0; ch < c; ++ch) dot += qu[ch] * kv[ch];
        row[s] = dot;
      }
    }
  }
  return a;
}

AffinityMap normalize_affinity(const AffinityMap& logits) {
  AffinityMap a = logits;
  softmax_rows(a);
  return a;
}

Tensor cc_aggregate(const AffinityMap& weights, const Tensor& value, const Tensor& residual) {
  if (value.rank() != 3 || value.shape() != residual.shape()) {
    throw ContractViolation("cc_aggregate: value " + shape_string(value.shape()) +
                            " and residual " + shape_string(residual.shape()) + " must match");
  }
  if (value.dim(1) != weights.height() || value.dim(2) != weights.width()) {
    throw ContractViolation("cc_aggregate: affinity map is " +
                            std::to_string(weights.height()) + "x" +
                            std::to_string(weights.width()) + ", value is " +
                            shape_string(value.shape()));
  }
  for (std::size_t u = 0; u < weights.positions(); ++u) {
    double sum = 0.0;
    for (double v : weights.row(u)) {
      if (v < 0.0) throw ContractViolation("cc_aggregate: negative attention weight");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ContractViolation("cc_aggregate: attention weights at position " +
                              std::to_string(u) + " sum to " + std::to_string(sum));
    }
  }
  return aggregate_unchecked(weights, value, residual);
}

Tensor rcca_forward(const Tensor& x, const CCWeights& w, const AttentionConfig& cfg) {
  return forward_impl(x, w, cfg, nullptr);
}

CCGradients rcca_backward(const Tensor& x, const CCWeights& w, const AttentionConfig& cfg,
                          const Tensor& upstream) {
  std::vector<PassCache> caches;
  Tensor context;
  const Tensor out = forward_impl(x, w, cfg, &caches, &context);
  if (upstream.shape() != out.shape()) {
    throw ContractViolation("rcca_backward: upstream gradient " +
                            shape_string(upstream.shape()) + " does not match output " +
                            shape_string(out.shape()));
  }
  const std::size_t c = cfg.channels, h = x.dim(1), wd = x.dim(2), n = h * wd;

  CCGradients grads{Tensor(x.shape()), zero_weights(cfg)};
  if (w.passes.size() != grads.weights.passes.size()) {
    grads.weights.passes.resize(w.passes.size(), grads.weights.passes.front());
  }

  // out = fusion(concat(x, h_R)) + x
  grads.input += upstream;
  Tensor d_concat({2 * c, h, wd});
  projection_backward(w.fusion, concat_channels(x, context), upstream, grads.weights.fusion,
                      d_concat);
  for (std::size_t i = 0; i < c * n; ++i) grads.input[i] += d_concat[i];
  Tensor d_h({c, h, wd});
  for (std::size_t i = 0; i < c * n; ++i) d_h[i] = d_concat[c * n + i];

  for (std::size_t r = caches.size(); r-- > 0;) {
    const PassCache& pc = caches[r];
    const PassWeights& pw = w.pass(r);
    PassWeights& gw = grads.weights.passes.size() == 1 ? grads.weights.passes.front()
                                                        : grads.weights.passes[r];
    const std::size_t ck = pc.query.dim(0);
    const AffinityMap& a = pc.attention;

    Tensor d_in = d_h;  // residual path
    Tensor d_v({c, h, wd});
    Tensor d_q({ck, h, wd});
    Tensor d_k({ck, h, wd});
    std::vector<double> d_a(a.span());
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < wd; ++j) {
        const std::size_t u = i * wd + j;
        const auto weights = a.row(u);
        double weighted = 0.0;
        for (std::size_t s = 0; s < weights.size(); ++s) {
          const std::size_t v = a.neighbor(i, j, s);
          double dot = 0.0;
          for (std::size_t ch = 0; ch < c; ++ch) {
            const double g = d_h[ch * n + u];
            dot += g * pc.value[ch * n + v];
            d_v[ch * n + v] += weights[s] * g;
          }
          d_a[s] = dot;
          weighted += weights[s] * dot;
        }
        for (std::size_t s = 0; s < weights.size(); ++s) {
          const std::size_t v = a.neighbor(i, j, s);
          const double de = weights[s] * (d_a[s] - weighted);
          for (std::size_t ch = 0; ch < ck; ++ch) {
            d_q[ch * n + u] += de * pc.key[ch * n + v];
            d_k[ch * n + v] += de * pc.query[ch * n + u];
          }
        }
      }
    }
    projection_backward(pw.query, pc.input, d_q, gw.query, d_in);
    projection_backward(pw.key, pc.input, d_k, gw.key, d_in);
    projection_backward(pw.value, pc.input, d_v, gw.value, d_in);
    d_h = std::move(d_in);
  }
  grads.input += d_h;
  return grads;
}

std::vector<Position> influence_map(const AttentionConfig& cfg, const CCWeights& w,
                                    const Tensor& x, Position perturbed, std::size_t passes) {
  if (x.rank() != 3) throw ContractViolation("influence_map: input must be [C,H,W]");
  const std::size_t h = x.dim(1), wd = x.dim(2);
  if (perturbed.row >= h || perturbed.col >= wd) {
    throw ContractViolation("influence_map: position (" + std::to_string(perturbed.row) + "," +
                            std::to_string(perturbed.col) + ") outside " + std::to_string(h) +
                            "x" + std::to_string(wd));
  }
  AttentionConfig probe = cfg;
  probe.recurrence = passes;
  if (w.passes.size() != 1 && passes > w.passes.size()) {
    throw ContractViolation("influence_map: unshared weights provide only " +
                            std::to_string(w.passes.size()) + " passes");
  }
  CCWeights pw = w;
  if (pw.passes.size() != 1) pw.passes.resize(passes);

  const Tensor base = rcca_forward(x, pw, probe);
  Tensor bumped = x;
  bumped.at(0, perturbed.row, perturbed.col) += kInfluenceDelta;
  const Tensor moved = rcca_forward(bumped, pw, probe);

  std::vector<Position> changed;
  const std::size_t n = h * wd;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t ch = 0; ch < cfg.channels; ++ch) {
      if (std::abs(moved[ch * n + u] - base[ch * n + u]) > kInfluenceTolerance) {
        changed.push_back({u / wd, u % wd});
        break;
      }
    }
  }
  return changed;
}

}  // namespace ccseg::attention
