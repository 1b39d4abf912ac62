#include "rtf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rtf::ops {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(op + ": incompatible shapes " + shape_string(a) + " and " +
                              shape_string(b));
}

Shape tail(const Shape& s, std::size_t from) {
  return Shape(s.begin() + static_cast<std::ptrdiff_t>(from), s.end());
}

}  // namespace

Var linear(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (xv.rank() == 0 || wv.rank() < 2 || xv.inner() != wv.dim(0))
    shape_error("linear", xv.shape(), wv.shape());
  const Shape out_tail = tail(wv.shape(), 1);
  if (bv.shape() != out_tail) shape_error("linear(bias)", wv.shape(), bv.shape());

  const std::size_t rows = xv.outer(), in = xv.inner(), out = shape_size(out_tail);
  Shape ys = tail(xv.shape(), 0);
  ys.pop_back();
  ys.insert(ys.end(), out_tail.begin(), out_tail.end());
  Tensor y(ys);
  for (std::size_t m = 0; m < rows; ++m) {
    real* yr = y.data() + m * out;
    std::copy(bv.data(), bv.data() + out, yr);
    const real* xr = xv.data() + m * in;
    for (std::size_t i = 0; i < in; ++i) {
      const real xi = xr[i];
      const real* wr = wv.data() + i * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] += xi * wr[o];
    }
  }
  return x.tape->record(std::move(y), {x, w, b}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& wv = t.value(w);
    if (t.requires_grad(x)) {
      Tensor& gx = t.grad(x);
      for (std::size_t m = 0; m < rows; ++m) {
        const real* gr = gy.data() + m * out;
        real* gxr = gx.data() + m * in;
        for (std::size_t i = 0; i < in; ++i) {
          const real* wr = wv.data() + i * out;
          real acc = 0;
          for (std::size_t o = 0; o < out; ++o) acc += gr[o] * wr[o];
          gxr[i] += acc;
        }
      }
    }
    if (t.requires_grad(w)) {
      Tensor& gw = t.grad(w);
      for (std::size_t m = 0; m < rows; ++m) {
        const real* gr = gy.data() + m * out;
        const real* xr = xv.data() + m * in;
        for (std::size_t i = 0; i < in; ++i) {
          const real xi = xr[i];
          real* gwr = gw.data() + i * out;
          for (std::size_t o = 0; o < out; ++o) gwr[o] += xi * gr[o];
        }
      }
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t m = 0; m < rows; ++m)
        for (std::size_t o = 0; o < out; ++o) gb[o] += gy[m * out + o];
    }
  });
}

Var relu(Var x) {
  const Tensor& xv = x.value();
  Tensor y(xv.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xv[i] > 0 ? xv[i] : real{0};
  return x.tape->record(std::move(y), {x}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    const Tensor& xv = t.value(x);
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i)
      if (xv[i] > 0) gx[i] += gy[i];
  });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_error("add", av.shape(), bv.shape());
  Tensor y = av;
  y.add_(bv);
  return a.tape->record(std::move(y), {a, b}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    if (t.requires_grad(a)) t.grad(a).add_(gy);
    if (t.requires_grad(b)) t.grad(b).add_(gy);
  });
}

Var add_expand(Var a, Var b, std::size_t axis) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (axis >= bv.rank()) shape_error("add_expand", av.shape(), bv.shape());
  Shape reduced = bv.shape();
  reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(axis));
  if (reduced != av.shape()) shape_error("add_expand", av.shape(), bv.shape());

  std::size_t before = 1, after = 1;
  for (std::size_t i = 0; i < axis; ++i) before *= bv.dim(i);
  for (std::size_t i = axis + 1; i < bv.rank(); ++i) after *= bv.dim(i);
  const std::size_t span = bv.dim(axis);

  Tensor y = bv;
  for (std::size_t p = 0; p < before; ++p)
    for (std::size_t s = 0; s < span; ++s)
      for (std::size_t q = 0; q < after; ++q) y[(p * span + s) * after + q] += av[p * after + q];
  return a.tape->record(std::move(y), {a, b}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    if (t.requires_grad(b)) t.grad(b).add_(gy);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t p = 0; p < before; ++p)
        for (std::size_t s = 0; s < span; ++s)
          for (std::size_t q = 0; q < after; ++q) ga[p * after + q] += gy[(p * span + s) * after + q];
    }
  });
}

Var pair_affine(Var h, Var w, Var b) {
  const Tensor& hv = h.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  if (hv.rank() != 2 || wv.rank() < 2 || wv.dim(0) != 2 * hv.dim(1))
    shape_error("pair_affine", hv.shape(), wv.shape());
  const Shape out_tail = tail(wv.shape(), 1);
  if (bv.shape() != out_tail) shape_error("pair_affine(bias)", wv.shape(), bv.shape());

  const std::size_t n = hv.dim(0), d = hv.dim(1), out = shape_size(out_tail);
  // Row projections A = h W_top and column projections B = h W_bottom.
  std::vector<real> proj_a(n * out, 0), proj_b(n * out, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const real x = hv[i * d + k];
      const real* wt = wv.data() + k * out;
      const real* wb = wv.data() + (d + k) * out;
      for (std::size_t o = 0; o < out; ++o) {
        proj_a[i * out + o] += x * wt[o];
        proj_b[i * out + o] += x * wb[o];
      }
    }
  }
  Shape ys{n, n};
  ys.insert(ys.end(), out_tail.begin(), out_tail.end());
  Tensor y(ys);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      real* yr = y.data() + (i * n + j) * out;
      for (std::size_t o = 0; o < out; ++o) yr[o] = proj_a[i * out + o] + proj_b[j * out + o] + bv[o];
    }

  return h.tape->record(std::move(y), {h, w, b}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    const Tensor& hv = t.value(h);
    const Tensor& wv = t.value(w);
    std::vector<real> ga(n * out, 0), gb(n * out, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const real* gr = gy.data() + (i * n + j) * out;
        for (std::size_t o = 0; o < out; ++o) {
          ga[i * out + o] += gr[o];
          gb[j * out + o] += gr[o];
        }
      }
    if (t.requires_grad(b)) {
      Tensor& gbias = t.grad(b);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t o = 0; o < out; ++o) gbias[o] += ga[i * out + o];
    }
    if (t.requires_grad(w)) {
      Tensor& gw = t.grad(w);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          const real x = hv[i * d + k];
          real* gwt = gw.data() + k * out;
          real* gwb = gw.data() + (d + k) * out;
          for (std::size_t o = 0; o < out; ++o) {
            gwt[o] += x * ga[i * out + o];
            gwb[o] += x * gb[i * out + o];
          }
        }
    }
    if (t.requires_grad(h)) {
      Tensor& gh = t.grad(h);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d; ++k) {
          const real* wt = wv.data() + k * out;
          const real* wb = wv.data() + (d + k) * out;
          real acc = 0;
          for (std::size_t o = 0; o < out; ++o)
            acc += ga[i * out + o] * wt[o] + gb[i * out + o] * wb[o];
          gh[i * d + k] += acc;
        }
    }
  });
}

Var conv2d(Var x, Var kernel) {
  const Tensor& xv = x.value();
  const Tensor& kv = kernel.value();
  if (kv.rank() != 4 || kv.dim(0) != kv.dim(1))
    throw std::invalid_argument("conv2d: kernel must be [k,k,c_in,c_out], got " +
                                shape_string(kv.shape()));
  const std::size_t k = kv.dim(0);
  if (k != 1 && k != 3)
    throw std::invalid_argument("conv2d: unsupported kernel size " + std::to_string(k));
  if (xv.rank() != 3 || xv.dim(2) != kv.dim(2)) shape_error("conv2d", xv.shape(), kv.shape());

  const int rows = static_cast<int>(xv.dim(0)), cols = static_cast<int>(xv.dim(1));
  const std::size_t cin = kv.dim(2), cout = kv.dim(3);
  const int pad = static_cast<int>(k / 2);
  const int kk = static_cast<int>(k);

  Tensor y(Shape{xv.dim(0), xv.dim(1), cout});
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      real* yr = y.data() + (static_cast<std::size_t>(i) * cols + j) * cout;
      for (int di = 0; di < kk; ++di) {
        const int si = i + di - pad;
        if (si < 0 || si >= rows) continue;
        for (int dj = 0; dj < kk; ++dj) {
          const int sj = j + dj - pad;
          if (sj < 0 || sj >= cols) continue;
          const real* xr = xv.data() + (static_cast<std::size_t>(si) * cols + sj) * cin;
          const real* kr = kv.data() + static_cast<std::size_t>(di * kk + dj) * cin * cout;
          for (std::size_t c = 0; c < cin; ++c) {
            const real xc = xr[c];
            const real* kc = kr + c * cout;
            for (std::size_t o = 0; o < cout; ++o) yr[o] += xc * kc[o];
          }
        }
      }
    }

  return x.tape->record(std::move(y), {x, kernel}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(kernel);
    const bool want_x = t.requires_grad(x), want_k = t.requires_grad(kernel);
    Tensor* gx = want_x ? &t.grad(x) : nullptr;
    Tensor* gk = want_k ? &t.grad(kernel) : nullptr;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        const real* gr = gy.data() + (static_cast<std::size_t>(i) * cols + j) * cout;
        for (int di = 0; di < kk; ++di) {
          const int si = i + di - pad;
          if (si < 0 || si >= rows) continue;
          for (int dj = 0; dj < kk; ++dj) {
            const int sj = j + dj - pad;
            if (sj < 0 || sj >= cols) continue;
            const std::size_t xoff = (static_cast<std::size_t>(si) * cols + sj) * cin;
            const std::size_t koff = static_cast<std::size_t>(di * kk + dj) * cin * cout;
            for (std::size_t c = 0; c < cin; ++c) {
              const real* kc = kv.data() + koff + c * cout;
              if (gx) {
                real acc = 0;
                for (std::size_t o = 0; o < cout; ++o) acc += gr[o] * kc[o];
                (*gx)[xoff + c] += acc;
              }
              if (gk) {
                const real xc = xv[xoff + c];
                real* gkc = gk->data() + koff + c * cout;
                for (std::size_t o = 0; o < cout; ++o) gkc[o] += xc * gr[o];
              }
            }
          }
        }
      }
  });
}

Var layer_norm(Var x, Var gain, Var bias, real eps) {
  const Tensor& xv = x.value();
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  const std::size_t d = xv.inner();
  if (xv.rank() == 0 || gv.shape() != Shape{d} || bv.shape() != Shape{d})
    shape_error("layer_norm", xv.shape(), gv.shape());
  const std::size_t rows = xv.outer();

  Tensor y(xv.shape());
  // Normalized values and inverse deviations, kept for the backward pass.
  std::vector<real> xhat(xv.size());
  std::vector<real> inv_std(rows);
  for (std::size_t m = 0; m < rows; ++m) {
    const real* xr = xv.data() + m * d;
    real mu = 0;
    for (std::size_t c = 0; c < d; ++c) mu += xr[c];
    mu /= static_cast<real>(d);
    real var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mu) * (xr[c] - mu);
    var /= static_cast<real>(d);
    const real is = real{1} / std::sqrt(var + eps);
    inv_std[m] = is;
    for (std::size_t c = 0; c < d; ++c) {
      const real xh = (xr[c] - mu) * is;
      xhat[m * d + c] = xh;
      y[m * d + c] = gv[c] * xh + bv[c];
    }
  }

  return x.tape->record(
      std::move(y), {x, gain, bias},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t, Var self) {
        const Tensor& gy = t.grad(self);
        const Tensor& gv = t.value(gain);
        if (t.requires_grad(gain)) {
          Tensor& gg = t.grad(gain);
          for (std::size_t m = 0; m < rows; ++m)
            for (std::size_t c = 0; c < d; ++c) gg[c] += gy[m * d + c] * xhat[m * d + c];
        }
        if (t.requires_grad(bias)) {
          Tensor& gb = t.grad(bias);
          for (std::size_t m = 0; m < rows; ++m)
            for (std::size_t c = 0; c < d; ++c) gb[c] += gy[m * d + c];
        }
        if (t.requires_grad(x)) {
          Tensor& gx = t.grad(x);
          const real inv_d = real{1} / static_cast<real>(d);
          for (std::size_t m = 0; m < rows; ++m) {
            real mean_g = 0, mean_gx = 0;
            for (std::size_t c = 0; c < d; ++c) {
              const real g = gy[m * d + c] * gv[c];
              mean_g += g;
              mean_gx += g * xhat[m * d + c];
            }
            mean_g *= inv_d;
            mean_gx *= inv_d;
            for (std::size_t c = 0; c < d; ++c) {
              const real g = gy[m * d + c] * gv[c];
              gx[m * d + c] += inv_std[m] * (g - mean_g - xhat[m * d + c] * mean_gx);
            }
          }
        }
      });
}

Tensor softmax(const Tensor& logits) {
  const std::size_t l = logits.inner(), rows = logits.outer();
  Tensor p(logits.shape());
  for (std::size_t m = 0; m < rows; ++m) {
    const real* z = logits.data() + m * l;
    const real mx = *std::max_element(z, z + l);
    real s = 0;
    for (std::size_t c = 0; c < l; ++c) s += std::exp(z[c] - mx);
    for (std::size_t c = 0; c < l; ++c) p[m * l + c] = std::exp(z[c] - mx) / s;
  }
  return p;
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
  const Tensor& zv = logits.value();
  const std::size_t l = zv.inner(), rows = zv.outer();
  if (targets.size() != rows)
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(rows) + " positions");
  for (int tgt : targets)
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= l)
      throw std::invalid_argument("softmax_cross_entropy: target " + std::to_string(tgt) +
                                  " outside [0, " + std::to_string(l) + ")");

  Tensor loss(Shape{rows});
  for (std::size_t m = 0; m < rows; ++m) {
    const real* z = zv.data() + m * l;
    const real mx = *std::max_element(z, z + l);
    real s = 0;
    for (std::size_t c = 0; c < l; ++c) s += std::exp(z[c] - mx);
    loss[m] = mx + std::log(s) - z[targets[m]];
  }
  return logits.tape->record(std::move(loss), {logits}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    const Tensor p = softmax(t.value(logits));
    Tensor& gz = t.grad(logits);
    for (std::size_t m = 0; m < rows; ++m)
      for (std::size_t c = 0; c < l; ++c) {
        const real onehot = static_cast<int>(c) == targets[m] ? real{1} : real{0};
        gz[m * l + c] += gy[m] * (p[m * l + c] - onehot);
      }
  });
}

Var reshape(Var x, Shape shape) {
  Tensor y = x.value().reshaped(std::move(shape));
  return x.tape->record(std::move(y), {x}, [=](Tape& t, Var self) {
    t.grad(x).add_(t.grad(self));
  });
}

Var sum(Var x) {
  const Tensor& xv = x.value();
  real s = 0;
  for (real v : xv.values()) s += v;
  return x.tape->record(Tensor::scalar(s), {x}, [=](Tape& t, Var self) {
    const real g = t.grad(self)[0];
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var mean(Var x) {
  const Tensor& xv = x.value();
  const real n = static_cast<real>(xv.size());
  real s = 0;
  for (real v : xv.values()) s += v;
  return x.tape->record(Tensor::scalar(s / n), {x}, [=](Tape& t, Var self) {
    const real g = t.grad(self)[0] / n;
    Tensor& gx = t.grad(x);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
  });
}

Var embed_window(Var table, const std::vector<int>& ids, int window) {
  const Tensor& ev = table.value();
  if (ev.rank() != 2) throw std::invalid_argument("embed_window: table must be [V, d]");
  if (window < 0) throw std::invalid_argument("embed_window: negative window");
  const std::size_t vocab = ev.dim(0), d = ev.dim(1);
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw std::invalid_argument("embed_window: token id " + std::to_string(id) +
                                  " outside vocabulary of " + std::to_string(vocab));
  const int n = static_cast<int>(ids.size());
  const std::size_t width = static_cast<std::size_t>(2 * window + 1) * d;

  Tensor y(Shape{ids.size(), width});
  for (int i = 0; i < n; ++i)
    for (int o = -window; o <= window; ++o) {
      const int src = i + o;
      if (src < 0 || src >= n) continue;
      const real* er = ev.data() + static_cast<std::size_t>(ids[src]) * d;
      real* yr = y.data() + i * width + static_cast<std::size_t>(o + window) * d;
      std::copy(er, er + d, yr);
    }
  return table.tape->record(std::move(y), {table}, [=](Tape& t, Var self) {
    const Tensor& gy = t.grad(self);
    Tensor& ge = t.grad(table);
    for (int i = 0; i < n; ++i)
      for (int o = -window; o <= window; ++o) {
        const int src = i + o;
        if (src < 0 || src >= n) continue;
        real* gr = ge.data() + static_cast<std::size_t>(ids[src]) * d;
        const real* g = gy.data() + i * width + static_cast<std::size_t>(o + window) * d;
        for (std::size_t c = 0; c < d; ++c) gr[c] += g[c];
      }
  });
}

}  // namespace rtf::ops
