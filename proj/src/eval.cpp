#include "efg/eval.hpp"

#include "efg/keyset.hpp"
#include "efg/parallel.hpp"
#include "eval_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace efg {
namespace {

void check_queries(std::span<const Vec3> queries) {
  for (std::size_t j = 0; j < queries.size(); ++j) {
    if (!queries[j].allFinite()) {
      throw InputError("query " + std::to_string(j) + " is not finite");
    }
  }
}

void require_rbf(const ParamGrid& grid, const char* what) {
  if (grid.variant() == Variant::Trilinear) {
    throw ConfigError(std::string(what) + " requires an RBF variant, got trilinear");
  }
}

EvalBatch make_batch(std::span<const Vec3> queries) {
  EvalBatch batch;
  batch.queries.assign(queries.begin(), queries.end());
  batch.outputs.resize(queries.size());
  batch.shift.resize(queries.size());
  batch.denominator.resize(queries.size());
  return batch;
}

template <bool WithGradient>
EvalBatch stream(const ParamGrid& grid, std::span<const Vec3> queries, const EvalOptions& options) {
  check_queries(queries);
  const KeySet ks = make_keyset(grid);
  EvalBatch batch = make_batch(queries);
  if constexpr (WithGradient) batch.gradients.resize(queries.size());
  dispatch_degree(ks.degree, [&](auto d) {
    constexpr Degree D = decltype(d)::value;
    parallel_for(queries.size(), options.workers, [&](int, WorkRange range) {
      for (std::size_t j = range.begin; j < range.end; ++j) {
        const Vec3& q = queries[j];
        double* g = WithGradient ? batch.gradients[j].data() : nullptr;
        const auto s = detail::stream_query<D, WithGradient>(ks, q.x(), q.y(), q.z(), g);
        batch.outputs[j] = s.output;
        batch.shift[j] = s.shift;
        batch.denominator[j] = s.denominator;
      }
    });
  });
  return batch;
}

/// Exponent matrix and value matrix, I x J each, for the naive routes.
struct Materialized {
  std::size_t keys = 0;
  std::vector<double> exponent;  // [i * J + j]
  std::vector<double> value;     // [i * J + j]
  std::vector<Vec3> diff;        // [i * J + j], q_j - k_i
  std::vector<double> beta;      // [i]
  std::vector<PolyValue> poly;   // [i]
};

Materialized materialize(const ParamGrid& grid, std::span<const Vec3> queries) {
  Materialized m;
  const auto banks = grid.layout().banks();
  const std::size_t J = queries.size();
  m.keys = static_cast<std::size_t>(grid.key_count()) * banks.size();
  if (m.keys == 0) throw ConfigError("grid has no keys");
  m.exponent.resize(m.keys * J);
  m.value.resize(m.keys * J);
  m.diff.resize(m.keys * J);
  std::size_t i = 0;
  for (std::size_t b = 0; b < banks.size(); ++b) {
    for (std::int64_t key = 0; key < grid.key_count(); ++key, ++i) {
      const Vec3 k = grid.key_position(static_cast<int>(b), key);
      const double beta = grid.scale(static_cast<int>(b), key);
      PolyValue f = grid.value(static_cast<int>(b), key);
      for (std::size_t j = 0; j < J; ++j) {
        const Vec3 d = queries[j] - k;
        m.diff[i * J + j] = d;
        m.exponent[i * J + j] = -beta * d.squaredNorm();
        m.value[i * J + j] = poly_eval(d, f);
      }
      m.beta.push_back(beta);
      m.poly.push_back(std::move(f));
    }
  }
  return m;
}

}  // namespace

double EvalBatch::full_denominator(std::size_t j) const {
  return std::exp(shift[j]) * denominator[j];
}

EvalBatch forward_naive(const ParamGrid& grid, std::span<const Vec3> queries) {
  require_rbf(grid, "forward_naive");
  check_queries(queries);
  const Materialized m = materialize(grid, queries);
  const std::size_t J = queries.size();
  EvalBatch batch = make_batch(queries);
  for (std::size_t j = 0; j < J; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.keys; ++i) mx = std::max(mx, m.exponent[i * J + j]);
    double den = 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < m.keys; ++i) {
      const double l = std::exp(m.exponent[i * J + j] - mx);
      den += l;
      num += l * m.value[i * J + j];
    }
    batch.outputs[j] = num / den;
    batch.shift[j] = mx;
    batch.denominator[j] = den;
  }
  return batch;
}

EvalBatch forward_streaming(const ParamGrid& grid, std::span<const Vec3> queries,
                            const EvalOptions& options) {
  require_rbf(grid, "forward_streaming");
  return stream<false>(grid, queries, options);
}

EvalBatch query_gradient(const ParamGrid& grid, std::span<const Vec3> queries,
                         const EvalOptions& options) {
  require_rbf(grid, "query_gradient");
  return stream<true>(grid, queries, options);
}

std::vector<Vec3> query_gradient_naive(const ParamGrid& grid, std::span<const Vec3> queries) {
  require_rbf(grid, "query_gradient_naive");
  check_queries(queries);
  const Materialized m = materialize(grid, queries);
  const std::size_t J = queries.size();
  std::vector<Vec3> out(J);
  std::vector<double> w(m.keys);
  for (std::size_t j = 0; j < J; ++j) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m.keys; ++i) mx = std::max(mx, m.exponent[i * J + j]);
    double den = 0.0;
    for (std::size_t i = 0; i < m.keys; ++i) {
      w[i] = std::exp(m.exponent[i * J + j] - mx);
      den += w[i];
    }
    double o = 0.0;
    for (std::size_t i = 0; i < m.keys; ++i) {
      w[i] /= den;
      o += w[i] * m.value[i * J + j];
    }
    Vec3 g = Vec3::Zero();
    for (std::size_t i = 0; i < m.keys; ++i) {
      const Vec3& d = m.diff[i * J + j];
      g += w[i] * (poly_grad_x(d, m.poly[i]) + 2.0 * m.beta[i] * d * (o - m.value[i * J + j]));
    }
    out[j] = g;
  }
  return out;
}

std::vector<double> forward_nrbf(const ParamGrid& grid, std::span<const Vec3> queries,
                                 const EvalOptions& options) {
  require_rbf(grid, "forward_nrbf");
  check_queries(queries);
  const auto banks = grid.layout().banks();
  std::vector<Vec3> keys;
  std::vector<double> beta, value;
  for (std::size_t b = 0; b < banks.size(); ++b) {
    for (std::int64_t key = 0; key < grid.key_count(); ++key) {
      keys.push_back(grid.key_position(static_cast<int>(b), key));
      beta.push_back(grid.scale(static_cast<int>(b), key));
      value.push_back(grid.at(key, banks[b].coeff));
    }
  }
  std::vector<double> out(queries.size());
  parallel_for(queries.size(), options.workers, [&](int, WorkRange range) {
    std::vector<double> exponent(keys.size());
    for (std::size_t j = range.begin; j < range.end; ++j) {
      double z_max = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < keys.size(); ++i) {
        exponent[i] = -beta[i] * (queries[j] - keys[i]).squaredNorm();
        z_max = std::max(z_max, exponent[i]);
      }
      double z = 0.0, acc = 0.0;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        const double l = std::exp(exponent[i] - z_max);
        z += l;
        acc += l * value[i];
      }
      out[j] = acc / z;
    }
  });
  return out;
}

TrilinearStencil trilinear_stencil(int resolution, const Vec3& q) {
  TrilinearStencil s;
  const int r = resolution;
  if (r == 1) {
    for (int c = 0; c < 8; ++c) {
      s.keys[c] = 0;
      s.weights[c] = c == 0 ? 1.0 : 0.0;
    }
    s.clamped = (q.array().abs() > 1.0).any();
    return s;
  }
  std::int64_t base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    double t = (q[a] + 1.0) * 0.5 * (r - 1);
    if (t < 0.0 || t > r - 1) {
      s.clamped = true;
      t = std::clamp(t, 0.0, static_cast<double>(r - 1));
    }
    const int cell = std::min(static_cast<int>(std::floor(t)), r - 2);
    base[a] = cell;
    frac[a] = t - cell;
  }
  for (int c = 0; c < 8; ++c) {
    const int ox = c & 1, oy = (c >> 1) & 1, oz = (c >> 2) & 1;
    s.keys[c] = (base[0] + ox) + r * ((base[1] + oy) + static_cast<std::int64_t>(r) * (base[2] + oz));
    s.weights[c] = (ox ? frac[0] : 1.0 - frac[0]) * (oy ? frac[1] : 1.0 - frac[1]) *
                   (oz ? frac[2] : 1.0 - frac[2]);
  }
  return s;
}

TrilinearResult forward_trilinear(const ParamGrid& grid, std::span<const Vec3> queries) {
  if (grid.variant() != Variant::Trilinear) {
    throw ConfigError("forward_trilinear requires a trilinear grid");
  }
  check_queries(queries);
  TrilinearResult result;
  result.values.resize(queries.size());
  for (std::size_t j = 0; j < queries.size(); ++j) {
    const TrilinearStencil s = trilinear_stencil(grid.resolution(), queries[j]);
    double v = 0.0;
    for (int c = 0; c < 8; ++c) v += s.weights[c] * grid.at(s.keys[c], 0);
    result.values[j] = v;
    if (s.clamped) ++result.clamped;
  }
  return result;
}

EvalBatch forward(const ParamGrid& grid, std::span<const Vec3> queries, const EvalOptions& options) {
  if (grid.variant() != Variant::Trilinear) return forward_streaming(grid, queries, options);
  EvalBatch batch;
  batch.queries.assign(queries.begin(), queries.end());
  batch.outputs = forward_trilinear(grid, queries).values;
  return batch;
}

std::vector<double> evaluate(const ParamGrid& grid, std::span<const Vec3> queries,
                             const EvalOptions& options) {
  if (grid.variant() == Variant::Trilinear) return forward_trilinear(grid, queries).values;
  return forward_streaming(grid, queries, options).outputs;
}

}  // namespace efg
