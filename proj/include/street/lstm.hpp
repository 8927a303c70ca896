#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "street/errors.hpp"
#include "street/rng.hpp"
#include "street/tensor.hpp"

namespace street {

// Four-gate LSTM parameter block for one scan direction.
// Gate order: input, forget, cell-candidate, output. No peepholes.
template <typename T>
struct LstmParams {
  int input_size = 0;  // i
  int hidden = 0;      // n
  Tensor<T> wx;        // i x 4n
  Tensor<T> wh;        // n x 4n
  Tensor<T> b;         // 4n

  static LstmParams init(int input_size, int hidden, Rng& rng) {
    LstmParams p;
    p.input_size = input_size;
    p.hidden = hidden;
    p.wx = Tensor<T>({input_size, 4 * hidden});
    p.wh = Tensor<T>({hidden, 4 * hidden});
    p.b = Tensor<T>({4 * hidden});
    // fan_in/fan_out per gate: the packed i x 4n matrix is four independent
    // i x n maps, so the limit uses n, not 4n
    auto fill = [&rng](Tensor<T>& w, int fan_in, int fan_out) {
      const double lim = std::sqrt(6.0 / (fan_in + fan_out));
      for (T& v : w.data()) v = static_cast<T>(rng.uniform(-lim, lim));
    };
    fill(p.wx, input_size, hidden);
    fill(p.wh, hidden, hidden);
    // biases zero except forget gate at 1
    auto bd = p.b.data();
    for (int j = 0; j < hidden; ++j) bd[hidden + j] = T(1);
    return p;
  }

  int64_t param_count() const { return 4LL * hidden * (input_size + hidden + 1); }

  // Tape-bound view of this block (for training steps).
  LstmParams on_tape(Tape<T>& tape, const std::string& name) const {
    LstmParams p = *this;
    p.wx = tape.leaf(wx, name + "/wx");
    p.wh = tape.leaf(wh, name + "/wh");
    p.b = tape.leaf(b, name + "/b");
    return p;
  }
};

enum class ScanAxis { kX, kY };
enum class ScanDir { kForward, kReverse };

struct ScanSpec {
  ScanAxis axis = ScanAxis::kX;
  ScanDir dir = ScanDir::kForward;
  bool summarize = false;  // emit only the final step (extent 1 along the axis)
};

namespace detail {

template <typename T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Per-step forward state cached for backprop through time.
template <typename T>
struct ScanCache {
  int seq_len = 0, n = 0;
  // per sequence, per step: gates (4n post-activation), c, tanh(c), h
  std::vector<T> gates, c, tanh_c, h;
};

}  // namespace detail

// One cell step on plain vectors (the scan ops inline the same arithmetic).
// c' = f * c + i * g;  h' = o * tanh(c')
template <typename T>
void lstm_cell_step(std::span<const T> x, std::span<const T> h, std::span<const T> c,
                    const LstmParams<T>& p, std::span<T> h_out, std::span<T> c_out) {
  const int i = p.input_size, n = p.hidden;
  if (static_cast<int>(x.size()) != i || static_cast<int>(h.size()) != n ||
      static_cast<int>(c.size()) != n)
    throw ShapeError("lstm_cell_step dimension mismatch");
  std::vector<T> z(p.b.data().begin(), p.b.data().end());
  auto wx = p.wx.data();
  auto wh = p.wh.data();
  for (int ii = 0; ii < i; ++ii) {
    const T xv = x[static_cast<size_t>(ii)];
    const T* row = &wx[static_cast<int64_t>(ii) * 4 * n];
    for (int j = 0; j < 4 * n; ++j) z[static_cast<size_t>(j)] += xv * row[j];
  }
  for (int hh = 0; hh < n; ++hh) {
    const T hv = h[static_cast<size_t>(hh)];
    const T* row = &wh[static_cast<int64_t>(hh) * 4 * n];
    for (int j = 0; j < 4 * n; ++j) z[static_cast<size_t>(j)] += hv * row[j];
  }
  for (int j = 0; j < n; ++j) {
    const T gi = detail::sigmoid(z[static_cast<size_t>(j)]);
    const T gf = detail::sigmoid(z[static_cast<size_t>(n + j)]);
    const T gg = std::tanh(z[static_cast<size_t>(2 * n + j)]);
    const T go = detail::sigmoid(z[static_cast<size_t>(3 * n + j)]);
    const T cv = gf * c[static_cast<size_t>(j)] + gi * gg;
    c_out[static_cast<size_t>(j)] = cv;
    h_out[static_cast<size_t>(j)] = go * std::tanh(cv);
  }
}

// Directional LSTM scan over one spatial axis of a BxHxWxD tensor.
// Axis x: each (batch, y) row is an independent sequence; axis y: each
// (batch, x) column. Initial h and c are zero. Output stacks per-step h along
// the scanned axis; with summarize only the final step is emitted.
template <typename T>
Tensor<T> scan(const Tensor<T>& input, const ScanSpec& spec, const LstmParams<T>& p) {
  if (input.rank() != 4) throw ShapeError("scan input must be BxHxWxD");
  const int B = input.dim(0), H = input.dim(1), W = input.dim(2), D = input.dim(3);
  if (D != p.input_size)
    throw ShapeError("scan input depth " + std::to_string(D) + " vs lstm input size " +
                     std::to_string(p.input_size));
  const int n = p.hidden;
  const bool along_x = spec.axis == ScanAxis::kX;
  const int L = along_x ? W : H;       // sequence length
  const int S = B * (along_x ? H : W); // number of independent sequences

  Shape oshape = spec.summarize ? (along_x ? Shape{B, H, 1, n} : Shape{B, 1, W, n})
                                : Shape{B, H, W, n};
  std::vector<T> out(static_cast<size_t>(shape_size(oshape)));

  auto cache = std::make_shared<detail::ScanCache<T>>();
  cache->seq_len = L;
  cache->n = n;
  cache->gates.assign(static_cast<size_t>(S) * L * 4 * n, T(0));
  cache->c.assign(static_cast<size_t>(S) * L * n, T(0));
  cache->tanh_c.assign(static_cast<size_t>(S) * L * n, T(0));
  cache->h.assign(static_cast<size_t>(S) * L * n, T(0));

  auto in = input.data();
  auto wx = p.wx.data();
  auto wh = p.wh.data();
  auto bs = p.b.data();

  // flat input offset of step t in sequence s, where the scan coordinate is
  // ordered by logical step (dir applied)
  auto in_offset = [=](int s, int t) -> int64_t {
    const int coord = spec.dir == ScanDir::kForward ? t : L - 1 - t;
    if (along_x) {
      const int b = s / H, y = s % H;
      return ((static_cast<int64_t>(b) * H + y) * W + coord) * D;
    }
    const int b = s / W, x = s % W;
    return ((static_cast<int64_t>(b) * H + coord) * W + x) * D;
  };
  auto out_offset = [=](int s, int t) -> int64_t {
    const int coord = spec.dir == ScanDir::kForward ? t : L - 1 - t;
    if (along_x) {
      const int b = s / H, y = s % H;
      if (spec.summarize) return ((static_cast<int64_t>(b) * H + y) * 1 + 0) * n;
      return ((static_cast<int64_t>(b) * H + y) * W + coord) * n;
    }
    const int b = s / W, x = s % W;
    if (spec.summarize) return ((static_cast<int64_t>(b) * 1 + 0) * W + x) * n;
    return ((static_cast<int64_t>(b) * H + coord) * W + x) * n;
  };

  std::vector<T> z(static_cast<size_t>(4) * n);
  for (int s = 0; s < S; ++s) {
    const int64_t cbase = (static_cast<int64_t>(s) * L) * n;
    const int64_t gbase = (static_cast<int64_t>(s) * L) * 4 * n;
    for (int t = 0; t < L; ++t) {
      const T* x = &in[in_offset(s, t)];
      const T* hprev = t > 0 ? &cache->h[cbase + static_cast<int64_t>(t - 1) * n] : nullptr;
      const T* cprev = t > 0 ? &cache->c[cbase + static_cast<int64_t>(t - 1) * n] : nullptr;
      for (int j = 0; j < 4 * n; ++j) z[static_cast<size_t>(j)] = bs[j];
      for (int ii = 0; ii < D; ++ii) {
        const T xv = x[ii];
        const T* row = &wx[static_cast<int64_t>(ii) * 4 * n];
        for (int j = 0; j < 4 * n; ++j) z[static_cast<size_t>(j)] += xv * row[j];
      }
      if (t > 0) {
        for (int hh = 0; hh < n; ++hh) {
          const T hv = hprev[hh];
          const T* row = &wh[static_cast<int64_t>(hh) * 4 * n];
          for (int j = 0; j < 4 * n; ++j) z[static_cast<size_t>(j)] += hv * row[j];
        }
      }
      T* g = &cache->gates[gbase + static_cast<int64_t>(t) * 4 * n];
      T* ct = &cache->c[cbase + static_cast<int64_t>(t) * n];
      T* tc = &cache->tanh_c[cbase + static_cast<int64_t>(t) * n];
      T* ht = &cache->h[cbase + static_cast<int64_t>(t) * n];
      for (int j = 0; j < n; ++j) {
        const T gi = detail::sigmoid(z[static_cast<size_t>(j)]);
        const T gf = detail::sigmoid(z[static_cast<size_t>(n + j)]);
        const T gg = std::tanh(z[static_cast<size_t>(2 * n + j)]);
        const T go = detail::sigmoid(z[static_cast<size_t>(3 * n + j)]);
        g[j] = gi;
        g[n + j] = gf;
        g[2 * n + j] = gg;
        g[3 * n + j] = go;
        const T cv = gf * (t > 0 ? cprev[j] : T(0)) + gi * gg;
        ct[j] = cv;
        tc[j] = std::tanh(cv);
        ht[j] = go * tc[j];
      }
      if (!spec.summarize || t == L - 1) {
        T* o = &out[static_cast<size_t>(out_offset(s, t))];
        for (int j = 0; j < n; ++j) o[j] = ht[j];
      }
    }
  }
  check_finite<T>(out, "scan");

  Tape<T>* tape = detail::common_tape<T>({&input, &p.wx, &p.wh, &p.b});
  Tensor<T> iv = input, wxv = p.wx, whv = p.wh;
  const int idi = input.node(), idwx = p.wx.node(), idwh = p.wh.node(), idb = p.b.node();
  const ScanSpec sp = spec;
  const int Dn = D;
  auto bw = [=](Tape<T>& tp, const std::vector<T>& gout) {
    auto in = iv.data();
    auto wx = wxv.data();
    auto wh = whv.data();
    std::vector<T> gin, gwx, gwh, gb;
    if (idi >= 0) gin.assign(in.size(), T(0));
    if (idwx >= 0) gwx.assign(wx.size(), T(0));
    if (idwh >= 0) gwh.assign(wh.size(), T(0));
    if (idb >= 0) gb.assign(static_cast<size_t>(4) * n, T(0));

    std::vector<T> dh(static_cast<size_t>(n)), dc(static_cast<size_t>(n));
    std::vector<T> dz(static_cast<size_t>(4) * n);
    for (int s = 0; s < S; ++s) {
      const int64_t cbase = (static_cast<int64_t>(s) * L) * n;
      const int64_t gbase = (static_cast<int64_t>(s) * L) * 4 * n;
      std::fill(dh.begin(), dh.end(), T(0));
      std::fill(dc.begin(), dc.end(), T(0));
      for (int t = L - 1; t >= 0; --t) {
        const T* g = &cache->gates[gbase + static_cast<int64_t>(t) * 4 * n];
        const T* tc = &cache->tanh_c[cbase + static_cast<int64_t>(t) * n];
        const T* cprev = t > 0 ? &cache->c[cbase + static_cast<int64_t>(t - 1) * n] : nullptr;
        const T* hprev = t > 0 ? &cache->h[cbase + static_cast<int64_t>(t - 1) * n] : nullptr;
        if (!sp.summarize || t == L - 1) {
          const T* go = &gout[static_cast<size_t>(out_offset(s, t))];
          for (int j = 0; j < n; ++j) dh[static_cast<size_t>(j)] += go[j];
        }
        for (int j = 0; j < n; ++j) {
          const T gi = g[j], gf = g[n + j], gg = g[2 * n + j], goo = g[3 * n + j];
          const T dht = dh[static_cast<size_t>(j)];
          const T dot = dht * tc[j];                       // d/d o
          T dct = dc[static_cast<size_t>(j)] + dht * goo * (T(1) - tc[j] * tc[j]);
          const T dit = dct * gg;                          // d/d i
          const T dgt = dct * gi;                          // d/d candidate
          const T dft = dct * (t > 0 ? cprev[j] : T(0));   // d/d f
          dc[static_cast<size_t>(j)] = dct * gf;           // carried to t-1
          dz[static_cast<size_t>(j)] = dit * gi * (T(1) - gi);
          dz[static_cast<size_t>(n + j)] = dft * gf * (T(1) - gf);
          dz[static_cast<size_t>(2 * n + j)] = dgt * (T(1) - gg * gg);
          dz[static_cast<size_t>(3 * n + j)] = dot * goo * (T(1) - goo);
        }
        const T* x = &in[in_offset(s, t)];
        if (idb >= 0)
          for (int j = 0; j < 4 * n; ++j) gb[static_cast<size_t>(j)] += dz[static_cast<size_t>(j)];
        if (idwx >= 0) {
          for (int ii = 0; ii < Dn; ++ii) {
            const T xv = x[ii];
            T* row = &gwx[static_cast<size_t>(static_cast<int64_t>(ii) * 4 * n)];
            for (int j = 0; j < 4 * n; ++j) row[j] += xv * dz[static_cast<size_t>(j)];
          }
        }
        if (idi >= 0) {
          T* gx = &gin[static_cast<size_t>(in_offset(s, t))];
          for (int ii = 0; ii < Dn; ++ii) {
            const T* row = &wx[static_cast<int64_t>(ii) * 4 * n];
            T acc = 0;
            for (int j = 0; j < 4 * n; ++j) acc += row[j] * dz[static_cast<size_t>(j)];
            gx[ii] += acc;
          }
        }
        if (t > 0) {
          if (idwh >= 0) {
            for (int hh = 0; hh < n; ++hh) {
              const T hv = hprev[hh];
              T* row = &gwh[static_cast<size_t>(static_cast<int64_t>(hh) * 4 * n)];
              for (int j = 0; j < 4 * n; ++j) row[j] += hv * dz[static_cast<size_t>(j)];
            }
          }
          for (int hh = 0; hh < n; ++hh) {
            const T* row = &wh[static_cast<int64_t>(hh) * 4 * n];
            T acc = 0;
            for (int j = 0; j < 4 * n; ++j) acc += row[j] * dz[static_cast<size_t>(j)];
            dh[static_cast<size_t>(hh)] = acc;
          }
        }
      }
    }
    if (idi >= 0) tp.accumulate(idi, gin);
    if (idwx >= 0) tp.accumulate(idwx, gwx);
    if (idwh >= 0) tp.accumulate(idwh, gwh);
    if (idb >= 0) tp.accumulate(idb, gb);
  };
  return detail::emit<T>(tape, std::move(oshape), std::move(out), std::move(bw));
}

// Bidirectional horizontal reader: forward and reverse x-scans with their
// outputs depth-concatenated (2n), aligned by position.
template <typename T>
Tensor<T> bidi_scan(const Tensor<T>& input, const LstmParams<T>& fwd, const LstmParams<T>& bwd) {
  if (fwd.hidden != bwd.hidden)
    throw ShapeError("bidi_scan direction widths differ: " + std::to_string(fwd.hidden) +
                     " vs " + std::to_string(bwd.hidden));
  Tensor<T> a = scan(input, ScanSpec{ScanAxis::kX, ScanDir::kForward, false}, fwd);
  Tensor<T> b = scan(input, ScanSpec{ScanAxis::kX, ScanDir::kReverse, false}, bwd);
  return concat(3, std::vector<Tensor<T>>{a, b});
}

}  // namespace street
