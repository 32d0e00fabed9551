#include "efg/gradients.hpp"

#include "efg/keyset.hpp"
#include "efg/parallel.hpp"
#include "eval_kernels.hpp"

#include <cmath>
#include <string>

namespace efg {

GradBuffer::GradBuffer(const ParamGrid& grid)
    : config(grid.config()), values(grid.data().size(), 0.0) {}

bool GradBuffer::congruent_with(const ParamGrid& grid) const {
  return config.variant == grid.variant() && config.degree == grid.degree() &&
         config.resolution == grid.resolution() &&
         config.learnable_scale == grid.config().learnable_scale &&
         values.size() == grid.data().size();
}

GradBuffer& GradBuffer::operator+=(const GradBuffer& other) {
  if (other.values.size() != values.size()) throw ConfigError("gradient buffers differ in shape");
  for (std::size_t k = 0; k < values.size(); ++k) values[k] += other.values[k];
  queries += other.queries;
  return *this;
}

void GradBuffer::clear() {
  std::fill(values.begin(), values.end(), 0.0);
  queries = 0;
}

LossResult mse_loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) {
    throw InputError("mse_loss: " + std::to_string(predictions.size()) + " predictions vs " +
                     std::to_string(targets.size()) + " targets");
  }
  if (predictions.empty()) throw InputError("mse_loss: empty batch");
  const double inv_j = 1.0 / static_cast<double>(predictions.size());
  LossResult r;
  r.upstream.resize(predictions.size());
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const double diff = predictions[j] - targets[j];
    r.loss += diff * diff;
    r.upstream[j] = 2.0 * inv_j * diff;
  }
  r.loss *= inv_j;
  return r;
}

namespace {

/// Per-key gradient partials in KeySet order.
struct KeyGrads {
  std::size_t padded = 0;
  std::vector<double> dx, dy, dz, dbeta, dcoef;

  KeyGrads(std::size_t padded_keys, int ncoeff)
      : padded(padded_keys),
        dx(padded_keys, 0.0),
        dy(padded_keys, 0.0),
        dz(padded_keys, 0.0),
        dbeta(padded_keys, 0.0),
        dcoef(padded_keys * static_cast<std::size_t>(ncoeff), 0.0) {}

  void merge(const KeyGrads& o) {
    auto add = [](std::vector<double>& a, const std::vector<double>& b) {
      for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
    };
    add(dx, o.dx);
    add(dy, o.dy);
    add(dz, o.dz);
    add(dbeta, o.dbeta);
    add(dcoef, o.dcoef);
  }
};

template <Degree D>
void backward_query(const KeySet& ks, const Vec3& q, double output, double shift, double denominator,
                    double upstream, KeyGrads& g) noexcept {
  using detail::kLanes;
  const double* __restrict kx = ks.x.data();
  const double* __restrict ky = ks.y.data();
  const double* __restrict kz = ks.z.data();
  const double* __restrict kb = ks.beta.data();
  const double* __restrict kc = ks.coeffs.data();
  double* __restrict gx = g.dx.data();
  double* __restrict gy = g.dy.data();
  double* __restrict gz = g.dz.data();
  double* __restrict gbeta = g.dbeta.data();
  double* __restrict gcoef = g.dcoef.data();
  const std::size_t stride = ks.padded;
  const double qx = q.x(), qy = q.y(), qz = q.z();
  const double scale = upstream / denominator;

  constexpr std::size_t kBlock = kLanes * KeySet::kTilesPerBlock;
  for (std::size_t base = 0; base < stride; base += kLanes) {
    if (base % kBlock == 0 &&
        ks.blocks[base / kBlock].max_exponent(qx, qy, qz) - shift < detail::kNegligibleExponent) {
      base += kBlock - kLanes;
      continue;
    }
    if (ks.tiles[base / kLanes].max_exponent(qx, qy, qz) - shift < detail::kNegligibleExponent) continue;
    double dx[kLanes], dy[kLanes], dz[kLanes], d2[kLanes], a[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      dx[l] = qx - kx[i];
      dy[l] = qy - ky[i];
      dz[l] = qz - kz[i];
      d2[l] = dx[l] * dx[l] + dy[l] * dy[l] + dz[l] * dz[l];
      a[l] = -kb[i] * d2[l];
    }
    double tile_max = a[0];
    for (std::size_t l = 1; l < kLanes; ++l) tile_max = std::max(tile_max, a[l]);
    if (tile_max - shift < detail::kNegligibleExponent) continue;

    // upstream * softmax weight
    double w[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) w[l] = detail::exp_kernel(a[l] - shift) * scale;
    double diff[kLanes], fx[kLanes], fy[kLanes], fz[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      const auto c = [&](int k) { return kc[static_cast<std::size_t>(k) * stride + i]; };
      diff[l] = poly_detail::eval<D>(dx[l], dy[l], dz[l], c) - output;
      poly_detail::grad_x<D>(dx[l], dy[l], dz[l], c, fx[l], fy[l], fz[l]);
    }
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      poly_detail::basis<D>(dx[l], dy[l], dz[l], [&](int k, double b) {
        gcoef[static_cast<std::size_t>(k) * stride + i] += w[l] * b;
      });
    }
    for (std::size_t l = 0; l < kLanes; ++l) {
      const std::size_t i = base + l;
      gbeta[i] += w[l] * (-d2[l]) * diff[l];
      // dO/dk = w * (df/dk + 2 beta (q - k)(f - O)), with df/dk = -df/dx.
      const double t = 2.0 * kb[i] * diff[l];
      gx[i] += w[l] * (t * dx[l] - fx[l]);
      gy[i] += w[l] * (t * dy[l] - fy[l]);
      gz[i] += w[l] * (t * dz[l] - fz[l]);
    }
  }
}

void backward_rbf(const ParamGrid& grid, const EvalBatch& batch, std::span<const double> upstream,
                  GradBuffer& out, const EvalOptions& options) {
  if (!batch.has_saved_state()) {
    throw ConfigError("backward: batch is missing the saved outputs/denominators of a forward pass");
  }
  const KeySet ks = make_keyset(grid);
  const int workers = std::max(1, options.workers);
  std::vector<KeyGrads> parts;
  parts.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) parts.emplace_back(ks.padded, ks.ncoeff);

  dispatch_degree(ks.degree, [&](auto d) {
    constexpr Degree D = decltype(d)::value;
    parallel_for(batch.size(), workers, [&](int worker, WorkRange range) {
      KeyGrads& g = parts[static_cast<std::size_t>(worker)];
      for (std::size_t j = range.begin; j < range.end; ++j) {
        if (upstream[j] == 0.0) continue;
        backward_query<D>(ks, batch.queries[j], batch.outputs[j], batch.shift[j],
                          batch.denominator[j], upstream[j], g);
      }
    });
  });
  tree_reduce(parts, [](KeyGrads& a, const KeyGrads& b) { a.merge(b); });
  const KeyGrads& g = parts[0];

  const auto banks = grid.layout().banks();
  const int channels = grid.channels();
  for (std::size_t i = 0; i < ks.count; ++i) {
    const std::int64_t src = ks.source[i];
    const BankLayout& bank = banks[static_cast<std::size_t>(src / ks.keys_per_bank)];
    double* dst = out.values.data() + (src % ks.keys_per_bank) * channels;
    for (int k = 0; k < bank.ncoeff; ++k) {
      dst[bank.coeff + k] += g.dcoef[static_cast<std::size_t>(k) * ks.padded + i];
    }
    if (bank.log_scale >= 0) dst[bank.log_scale] += g.dbeta[i] * ks.beta[i];
    if (bank.offset >= 0) {
      dst[bank.offset] += g.dx[i];
      dst[bank.offset + 1] += g.dy[i];
      dst[bank.offset + 2] += g.dz[i];
    }
  }
}

void backward_trilinear(const ParamGrid& grid, const EvalBatch& batch,
                        std::span<const double> upstream, GradBuffer& out) {
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const TrilinearStencil s = trilinear_stencil(grid.resolution(), batch.queries[j]);
    for (int c = 0; c < 8; ++c) out.values[static_cast<std::size_t>(s.keys[c])] += upstream[j] * s.weights[c];
  }
}

}  // namespace

void backward_accumulate(const ParamGrid& grid, const EvalBatch& batch,
                         std::span<const double> upstream, GradBuffer& out,
                         const EvalOptions& options) {
  if (!out.congruent_with(grid)) throw ConfigError("gradient buffer does not match the grid");
  if (upstream.size() != batch.size()) {
    throw InputError("backward: " + std::to_string(upstream.size()) + " upstream values for " +
                     std::to_string(batch.size()) + " queries");
  }
  if (grid.variant() == Variant::Trilinear) {
    backward_trilinear(grid, batch, upstream, out);
  } else {
    backward_rbf(grid, batch, upstream, out, options);
  }
  out.queries += static_cast<std::int64_t>(batch.size());
}

GradBuffer backward(const ParamGrid& grid, const EvalBatch& batch, std::span<const double> upstream,
                    const EvalOptions& options) {
  GradBuffer out(grid);
  backward_accumulate(grid, batch, upstream, out, options);
  return out;
}

}  // namespace efg
