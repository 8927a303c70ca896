#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "street/errors.hpp"
#include "street/rng.hpp"

namespace street {

enum class RunMode { kTrain, kEval };

using Shape = std::vector<int>;

inline int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  return os.str();
}

inline std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
    st[i] = st[i + 1] * s[i + 1];
  return st;
}

template <typename T>
class Tape;

// Dense row-major N-d array. Copies share the underlying buffer; graph code
// treats tensors as immutable once created, only parameter blocks are written
// in place between optimizer steps.
template <typename T>
class Tensor {
 public:
  Tensor() : data_(std::make_shared<std::vector<T>>()) {}

  explicit Tensor(Shape shape)
      : shape_(std::move(shape)),
        data_(std::make_shared<std::vector<T>>(checked_size(shape_), T(0))) {}

  Tensor(Shape shape, std::vector<T> values)
      : shape_(std::move(shape)),
        data_(std::make_shared<std::vector<T>>(std::move(values))) {
    if (static_cast<int64_t>(data_->size()) != shape_size(shape_))
      throw ShapeError("value count " + std::to_string(data_->size()) +
                       " does not match shape " + shape_str(shape_));
  }

  static Tensor full(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_->begin(), t.data_->end(), value);
    return t;
  }

  static Tensor scalar(T value) { return Tensor({1}, {value}); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_[i]; }
  int64_t size() const { return static_cast<int64_t>(data_->size()); }

  std::span<const T> data() const { return {data_->data(), data_->size()}; }
  std::span<T> data() { return {data_->data(), data_->size()}; }

  T at(std::initializer_list<int> idx) const {
    auto st = row_major_strides(shape_);
    int64_t off = 0;
    int i = 0;
    for (int v : idx) off += st[i++] * v;
    return (*data_)[off];
  }

  T item() const {
    if (size() != 1) throw ShapeError("item() on tensor of size " + std::to_string(size()));
    return (*data_)[0];
  }

  bool on_tape() const { return tape_ != nullptr; }
  Tape<T>* tape() const { return tape_; }
  int node() const { return node_; }

  // Same buffer reinterpreted under a new shape of equal element count.
  Tensor<T> reshaped(Shape s) const {
    if (shape_size(s) != size())
      throw ShapeError("reshape " + shape_str(shape_) + " -> " + shape_str(s));
    Tensor<T> r = *this;
    r.shape_ = std::move(s);
    return r;
  }

 private:
  static int64_t checked_size(const Shape& s) {
    for (int d : s)
      if (d <= 0) throw ShapeError("non-positive extent in " + shape_str(s));
    return shape_size(s);
  }

  Shape shape_;
  std::shared_ptr<std::vector<T>> data_;
  Tape<T>* tape_ = nullptr;
  int node_ = -1;

  friend class Tape<T>;
};

template <typename T>
inline void check_finite(std::span<const T> v, const char* op) {
  for (const T& x : v)
    if (!std::isfinite(static_cast<double>(x)))
      throw NonFiniteError(std::string(op) + " produced NaN/Inf");
}

// Reverse-mode differentiation tape. Nodes are recorded in forward creation
// order, which is a topological order, so the backward sweep just walks the
// node list in reverse.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape<T>&, const std::vector<T>&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Registers a watched leaf (typically a parameter block). The leaf shares
  // the caller's buffer; its gradient accumulates over every use.
  Tensor<T> leaf(const Tensor<T>& value, const std::string& name = "") {
    if (!name.empty()) {
      for (const Node& n : nodes_)
        if (n.name == name) throw TapeError("duplicate leaf name: " + name);
    }
    Tensor<T> t = value;
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.shape_, t.data_, {}, nullptr, name, /*leaf=*/true});
    return t;
  }

  // Records an op result. backward may be null only for leaves; a recorded
  // operation without a rule makes the backward sweep fail.
  Tensor<T> record(Shape shape, std::vector<T> values, BackwardFn backward,
                   bool is_leaf = false) {
    Tensor<T> t(std::move(shape), std::move(values));
    t.tape_ = this;
    t.node_ = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{t.shape_, t.data_, {}, std::move(backward), "", is_leaf});
    return t;
  }

  // Adds a gradient contribution for node `id` (no-op for id < 0, i.e.
  // constants captured by value).
  void accumulate(int id, std::span<const T> g) {
    if (id < 0) return;
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) n.grad.assign(n.value->size(), T(0));
    if (g.size() != n.grad.size()) throw TapeError("gradient size mismatch");
    for (size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
  }

  std::vector<T>& grad_buffer(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.empty()) n.grad.assign(n.value->size(), T(0));
    return n.grad;
  }

  void backward(const Tensor<T>& loss) {
    if (loss.tape_ != this) throw TapeError("loss was not produced on this tape");
    if (loss.size() != 1) throw TapeError("loss must be scalar, got " + shape_str(loss.shape_));
    if (ran_backward_) throw TapeError("backward already ran on this tape");
    ran_backward_ = true;
    accumulate(loss.node_, std::vector<T>{T(1)});
    for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (n.grad.empty()) continue;  // loss does not depend on this node
      if (!n.backward) {
        if (n.is_leaf) continue;
        throw TapeError("operation on tape lacking a backward rule");
      }
      n.backward(*this, n.grad);
    }
  }

  // Gradient of the loss w.r.t. a tensor on this tape (zeros if untouched).
  Tensor<T> grad(const Tensor<T>& t) const {
    if (t.tape_ != this) throw TapeError("tensor is not on this tape");
    const Node& n = nodes_[static_cast<size_t>(t.node_)];
    if (n.grad.empty()) return Tensor<T>(n.shape);
    return Tensor<T>(n.shape, n.grad);
  }

  Tensor<T> grad(const std::string& name) const {
    for (const Node& n : nodes_)
      if (n.is_leaf && n.name == name) {
        if (n.grad.empty()) return Tensor<T>(n.shape);
        return Tensor<T>(n.shape, n.grad);
      }
    throw TapeError("no leaf named " + name);
  }

  size_t node_count() const { return nodes_.size(); }

  const std::vector<T>& node_value(int id) const { return *nodes_[static_cast<size_t>(id)].value; }

 private:
  struct Node {
    Shape shape;
    std::shared_ptr<std::vector<T>> value;
    std::vector<T> grad;
    BackwardFn backward;
    std::string name;
    bool is_leaf = false;
  };

  std::vector<Node> nodes_;
  bool ran_backward_ = false;
};

namespace detail {

// All tape-bound operands of one op must live on the same tape; constants
// (tape-less tensors) are captured by value.
template <typename T>
Tape<T>* common_tape(std::initializer_list<const Tensor<T>*> ts) {
  Tape<T>* tape = nullptr;
  for (const Tensor<T>* t : ts) {
    if (!t->on_tape()) continue;
    if (tape == nullptr) tape = t->tape();
    else if (tape != t->tape()) throw TapeError("operands on different tapes");
  }
  return tape;
}

template <typename T>
Tensor<T> emit(Tape<T>* tape, Shape shape, std::vector<T> values,
               typename Tape<T>::BackwardFn backward) {
  if (tape == nullptr) return Tensor<T>(std::move(shape), std::move(values));
  return tape->record(std::move(shape), std::move(values), std::move(backward));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("add " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(a.data().begin(), a.data().end());
  auto bd = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] += bd[i];
  check_finite<T>(out, "add");
  Tape<T>* tape = detail::common_tape<T>({&a, &b});
  int ida = a.node(), idb = b.node();
  return detail::emit<T>(tape, a.shape(), std::move(out),
                         [ida, idb](Tape<T>& tp, const std::vector<T>& g) {
                           tp.accumulate(ida, g);
                           tp.accumulate(idb, g);
                         });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mul " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<T> out(static_cast<size_t>(a.size()));
  auto ad = a.data(), bd = b.data();
  for (int64_t i = 0; i < a.size(); ++i) out[i] = ad[i] * bd[i];
  check_finite<T>(out, "mul");
  Tape<T>* tape = detail::common_tape<T>({&a, &b});
  Tensor<T> av = a, bv = b;  // keep values alive for backward
  int ida = a.node(), idb = b.node();
  return detail::emit<T>(tape, a.shape(), std::move(out),
                         [ida, idb, av, bv](Tape<T>& tp, const std::vector<T>& g) {
                           std::vector<T> ga(g.size()), gb(g.size());
                           auto ad = av.data(), bd = bv.data();
                           for (size_t i = 0; i < g.size(); ++i) {
                             ga[i] = g[i] * bd[i];
                             gb[i] = g[i] * ad[i];
                           }
                           tp.accumulate(ida, ga);
                           tp.accumulate(idb, gb);
                         });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
  std::vector<T> out(static_cast<size_t>(x.size()));
  auto xd = x.data();
  for (int64_t i = 0; i < x.size(); ++i) out[i] = std::tanh(xd[i]);
  check_finite<T>(out, "tanh");
  Tape<T>* tape = detail::common_tape<T>({&x});
  int idx = x.node();
  std::vector<T> saved = out;
  return detail::emit<T>(tape, x.shape(), std::move(out),
                         [idx, saved = std::move(saved)](Tape<T>& tp, const std::vector<T>& g) {
                           std::vector<T> gx(g.size());
                           for (size_t i = 0; i < g.size(); ++i)
                             gx[i] = g[i] * (T(1) - saved[i] * saved[i]);
                           tp.accumulate(idx, gx);
                         });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = 0;
  for (T v : x.data()) s += v;
  check_finite<T>(std::span<const T>(&s, 1), "sum");
  Tape<T>* tape = detail::common_tape<T>({&x});
  int idx = x.node();
  int64_t n = x.size();
  return detail::emit<T>(tape, {1}, {s},
                         [idx, n](Tape<T>& tp, const std::vector<T>& g) {
                           std::vector<T> gx(static_cast<size_t>(n), g[0]);
                           tp.accumulate(idx, gx);
                         });
}

// ---------------------------------------------------------------------------
// conv2d: stride 1, SAME zero padding, linear (activation is a separate op)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias) {
  if (input.rank() != 4) throw ShapeError("conv2d input must be BxHxWxC");
  if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be KhxKwxCxF");
  const int B = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
  const int Kh = kernel.dim(0), Kw = kernel.dim(1), Kc = kernel.dim(2), F = kernel.dim(3);
  if (Kc != C)
    throw ShapeError("conv2d kernel depth " + std::to_string(Kc) + " vs input depth " +
                     std::to_string(C));
  if (bias.size() != F) throw ShapeError("conv2d bias size vs filter count");
  const int pt = (Kh - 1) / 2, pl = (Kw - 1) / 2;

  Shape oshape{B, H, W, F};
  std::vector<T> out(static_cast<size_t>(shape_size(oshape)));
  auto in = input.data();
  auto ker = kernel.data();
  auto bs = bias.data();
  for (int b = 0; b < B; ++b)
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        T* o = &out[(((static_cast<int64_t>(b) * H + y) * W + x) * F)];
        for (int f = 0; f < F; ++f) o[f] = bs[f];
        for (int ky = 0; ky < Kh; ++ky) {
          const int iy = y + ky - pt;
          if (iy < 0 || iy >= H) continue;
          for (int kx = 0; kx < Kw; ++kx) {
            const int ix = x + kx - pl;
            if (ix < 0 || ix >= W) continue;
            const T* irow = &in[(((static_cast<int64_t>(b) * H + iy) * W + ix) * C)];
            const T* krow = &ker[((static_cast<int64_t>(ky) * Kw + kx) * C) * F];
            for (int c = 0; c < C; ++c) {
              const T iv = irow[c];
              const T* kf = &krow[static_cast<int64_t>(c) * F];
              for (int f = 0; f < F; ++f) o[f] += iv * kf[f];
            }
          }
        }
      }
  check_finite<T>(out, "conv2d");

  Tape<T>* tape = detail::common_tape<T>({&input, &kernel, &bias});
  Tensor<T> iv = input, kv = kernel;
  int idi = input.node(), idk = kernel.node(), idb = bias.node();
  auto bw = [=](Tape<T>& tp, const std::vector<T>& g) {
    auto in = iv.data();
    auto ker = kv.data();
    std::vector<T> gin, gker, gbias;
    if (idi >= 0) gin.assign(in.size(), T(0));
    if (idk >= 0) gker.assign(ker.size(), T(0));
    if (idb >= 0) gbias.assign(static_cast<size_t>(F), T(0));
    for (int b = 0; b < B; ++b)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const T* go = &g[(((static_cast<int64_t>(b) * H + y) * W + x) * F)];
          if (idb >= 0)
            for (int f = 0; f < F; ++f) gbias[f] += go[f];
          for (int ky = 0; ky < Kh; ++ky) {
            const int iy = y + ky - pt;
            if (iy < 0 || iy >= H) continue;
            for (int kx = 0; kx < Kw; ++kx) {
              const int ix = x + kx - pl;
              if (ix < 0 || ix >= W) continue;
              const int64_t ioff = ((static_cast<int64_t>(b) * H + iy) * W + ix) * C;
              const int64_t koff = (static_cast<int64_t>(ky) * Kw + kx) * C * F;
              for (int c = 0; c < C; ++c) {
                const T* kf = &ker[koff + static_cast<int64_t>(c) * F];
                if (idi >= 0) {
                  T acc = 0;
                  for (int f = 0; f < F; ++f) acc += go[f] * kf[f];
                  gin[ioff + c] += acc;
                }
                if (idk >= 0) {
                  const T ivv = in[ioff + c];
                  T* gk = &gker[koff + static_cast<int64_t>(c) * F];
                  for (int f = 0; f < F; ++f) gk[f] += ivv * go[f];
                }
              }
            }
          }
        }
    if (idi >= 0) tp.accumulate(idi, gin);
    if (idk >= 0) tp.accumulate(idk, gker);
    if (idb >= 0) tp.accumulate(idb, gbias);
  };
  return detail::emit<T>(tape, std::move(oshape), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// maxpool: stride = window, ceil-divided output, partial edge windows
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> maxpool(const Tensor<T>& input, int wh, int ww) {
  if (input.rank() != 4) throw ShapeError("maxpool input must be BxHxWxC");
  const int B = input.dim(0), H = input.dim(1), W = input.dim(2), C = input.dim(3);
  if (wh <= 0 || ww <= 0) throw ShapeError("maxpool window must be positive");
  if (wh > H || ww > W)
    throw ShapeError("maxpool window " + std::to_string(wh) + "x" + std::to_string(ww) +
                     " larger than input " + std::to_string(H) + "x" + std::to_string(W));
  const int OH = (H + wh - 1) / wh, OW = (W + ww - 1) / ww;
  Shape oshape{B, OH, OW, C};
  std::vector<T> out(static_cast<size_t>(shape_size(oshape)));
  std::vector<int64_t> argmax(out.size());
  auto in = input.data();
  for (int b = 0; b < B; ++b)
    for (int oy = 0; oy < OH; ++oy)
      for (int ox = 0; ox < OW; ++ox) {
        const int y0 = oy * wh, y1 = std::min(y0 + wh, H);
        const int x0 = ox * ww, x1 = std::min(x0 + ww, W);
        for (int c = 0; c < C; ++c) {
          T best = in[((static_cast<int64_t>(b) * H + y0) * W + x0) * C + c];
          int64_t besti = ((static_cast<int64_t>(b) * H + y0) * W + x0) * C + c;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
              const int64_t off = ((static_cast<int64_t>(b) * H + y) * W + x) * C + c;
              if (in[off] > best) {  // strict: first occurrence wins ties
                best = in[off];
                besti = off;
              }
            }
          const int64_t ooff = ((static_cast<int64_t>(b) * OH + oy) * OW + ox) * C + c;
          out[ooff] = best;
          argmax[ooff] = besti;
        }
      }
  check_finite<T>(out, "maxpool");

  Tape<T>* tape = detail::common_tape<T>({&input});
  int idi = input.node();
  int64_t in_size = input.size();
  auto bw = [idi, in_size, argmax = std::move(argmax)](Tape<T>& tp, const std::vector<T>& g) {
    std::vector<T> gin(static_cast<size_t>(in_size), T(0));
    for (size_t i = 0; i < g.size(); ++i) gin[static_cast<size_t>(argmax[i])] += g[i];
    tp.accumulate(idi, gin);
  };
  return detail::emit<T>(tape, std::move(oshape), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// generic_reshape: split one dimension into factors and map each factor onto
// a destination dimension (pure data rearrangement)
// ---------------------------------------------------------------------------

struct ReshapeSpec {
  int split_dim = 0;
  std::vector<int> factors;  // row-major split: factors[0] varies slowest
  std::vector<int> dest;     // destination dimension per factor; unique

  // Identity on dimension d of extent e.
  static ReshapeSpec identity(int d, int e) { return {d, {e}, {d}}; }
};

namespace detail {

struct ReshapePlan {
  Shape out_shape;
  // For each input dim: the factor index assigned to it (-1 if none).
  std::vector<int> factor_at;
  Shape base_extent;  // input extent with split_dim replaced by 1
};

inline ReshapePlan plan_reshape(const Shape& in, const ReshapeSpec& spec) {
  const int rank = static_cast<int>(in.size());
  if (spec.split_dim < 0 || spec.split_dim >= rank)
    throw ShapeError("reshape split_dim out of range");
  if (spec.factors.empty() || spec.factors.size() != spec.dest.size())
    throw ShapeError("reshape factors/dest size mismatch");
  int64_t prod = 1;
  for (int f : spec.factors) {
    if (f <= 0) throw ShapeError("reshape factor must be positive");
    prod *= f;
  }
  if (prod != in[static_cast<size_t>(spec.split_dim)])
    throw ShapeError("reshape factors " + std::to_string(prod) + " do not cover extent " +
                     std::to_string(in[static_cast<size_t>(spec.split_dim)]));
  ReshapePlan plan;
  plan.factor_at.assign(static_cast<size_t>(rank), -1);
  plan.base_extent = in;
  plan.base_extent[static_cast<size_t>(spec.split_dim)] = 1;
  plan.out_shape = plan.base_extent;
  for (size_t k = 0; k < spec.factors.size(); ++k) {
    const int d = spec.dest[k];
    if (d < 0 || d >= rank) throw ShapeError("reshape destination out of range");
    if (plan.factor_at[static_cast<size_t>(d)] != -1)
      throw ShapeError("reshape destination collision on dim " + std::to_string(d));
    plan.factor_at[static_cast<size_t>(d)] = static_cast<int>(k);
    plan.out_shape[static_cast<size_t>(d)] *= spec.factors[k];
  }
  return plan;
}

}  // namespace detail

// Inverse spec: defined when at most one factor lands outside the split
// dimension (covers de-tiling, view-to-depth combination, and identities).
inline ReshapeSpec inverse_spec(const Shape& in, const ReshapeSpec& spec) {
  detail::ReshapePlan plan = detail::plan_reshape(in, spec);
  int foreign = -1;
  for (size_t k = 0; k < spec.dest.size(); ++k)
    if (spec.dest[k] != spec.split_dim) {
      if (foreign != -1) throw ShapeError("reshape inverse needs a single foreign factor");
      foreign = static_cast<int>(k);
    }
  if (foreign == -1)  // pure in-place split, output equals input
    return ReshapeSpec::identity(spec.split_dim, in[static_cast<size_t>(spec.split_dim)]);
  const int d = spec.dest[static_cast<size_t>(foreign)];
  const int f = spec.factors[static_cast<size_t>(foreign)];
  const int rest = plan.out_shape[static_cast<size_t>(d)] / f;
  return ReshapeSpec{d, {f, rest}, {spec.split_dim, d}};
}

template <typename T>
Tensor<T> generic_reshape(const Tensor<T>& input, const ReshapeSpec& spec) {
  const Shape& in_shape = input.shape();
  detail::ReshapePlan plan = detail::plan_reshape(in_shape, spec);
  const int rank = input.rank();

  // Per input element: decompose the split coordinate into factor digits,
  // then place every coordinate in the output.
  const auto in_strides = row_major_strides(in_shape);
  const auto out_strides = row_major_strides(plan.out_shape);
  const int nf = static_cast<int>(spec.factors.size());
  std::vector<int64_t> fdigit(static_cast<size_t>(nf));

  std::vector<int64_t> fwd(static_cast<size_t>(input.size()));  // in offset -> out offset
  std::vector<int> idx(static_cast<size_t>(rank), 0);
  const auto in = input.data();
  std::vector<T> out(static_cast<size_t>(input.size()));
  for (int64_t off = 0; off < input.size(); ++off) {
    // factor digits of the split coordinate, factors[0] slowest
    int64_t s = idx[static_cast<size_t>(spec.split_dim)];
    for (int k = nf - 1; k >= 0; --k) {
      fdigit[static_cast<size_t>(k)] = s % spec.factors[static_cast<size_t>(k)];
      s /= spec.factors[static_cast<size_t>(k)];
    }
    int64_t ooff = 0;
    for (int dgt = 0; dgt < rank; ++dgt) {
      const int k = plan.factor_at[static_cast<size_t>(dgt)];
      int64_t coord = (dgt == spec.split_dim) ? 0 : idx[static_cast<size_t>(dgt)];
      if (k >= 0)  // incoming factor varies slower than the existing extent
        coord += fdigit[static_cast<size_t>(k)] * plan.base_extent[static_cast<size_t>(dgt)];
      ooff += coord * out_strides[static_cast<size_t>(dgt)];
    }
    out[static_cast<size_t>(ooff)] = in[static_cast<size_t>(off)];
    fwd[static_cast<size_t>(off)] = ooff;
    for (int dgt = rank - 1; dgt >= 0; --dgt) {  // advance multi-index
      if (++idx[static_cast<size_t>(dgt)] < in_shape[static_cast<size_t>(dgt)]) break;
      idx[static_cast<size_t>(dgt)] = 0;
    }
  }

  Tape<T>* tape = detail::common_tape<T>({&input});
  int idi = input.node();
  auto bw = [idi, fwd = std::move(fwd)](Tape<T>& tp, const std::vector<T>& g) {
    std::vector<T> gin(g.size());
    for (size_t i = 0; i < gin.size(); ++i) gin[i] = g[static_cast<size_t>(fwd[i])];
    tp.accumulate(idi, gin);
  };
  return detail::emit<T>(tape, std::move(plan.out_shape), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// concat along one axis
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> concat(int axis, const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero parts");
  const int rank = parts[0].rank();
  if (axis < 0 || axis >= rank) throw ShapeError("concat axis out of range");
  Shape oshape = parts[0].shape();
  for (size_t p = 1; p < parts.size(); ++p) {
    if (parts[p].rank() != rank) throw ShapeError("concat rank mismatch");
    for (int d = 0; d < rank; ++d)
      if (d != axis && parts[p].dim(d) != oshape[static_cast<size_t>(d)])
        throw ShapeError("concat extent mismatch on dim " + std::to_string(d));
    oshape[static_cast<size_t>(axis)] += parts[p].dim(axis);
  }

  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= oshape[static_cast<size_t>(d)];
  for (int d = axis + 1; d < rank; ++d) inner *= oshape[static_cast<size_t>(d)];
  const int64_t out_axis = oshape[static_cast<size_t>(axis)];

  std::vector<T> out(static_cast<size_t>(shape_size(oshape)));
  std::vector<int64_t> offsets(parts.size());  // start along axis per part
  int64_t run = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = run;
    const int64_t pa = parts[p].dim(axis);
    auto pd = parts[p].data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(pd.data() + o * pa * inner, pa * inner,
                  out.data() + (o * out_axis + run) * inner);
    run += pa;
  }

  std::vector<const Tensor<T>*> ptrs;
  for (const auto& p : parts) ptrs.push_back(&p);
  Tape<T>* tape = nullptr;
  for (const Tensor<T>* p : ptrs) {
    if (!p->on_tape()) continue;
    if (!tape) tape = p->tape();
    else if (tape != p->tape()) throw TapeError("operands on different tapes");
  }
  std::vector<int> ids;
  std::vector<int64_t> axes;
  for (const auto& p : parts) {
    ids.push_back(p.node());
    axes.push_back(p.dim(axis));
  }
  auto bw = [ids, axes, offsets, outer, inner, out_axis](Tape<T>& tp, const std::vector<T>& g) {
    for (size_t p = 0; p < ids.size(); ++p) {
      if (ids[p] < 0) continue;
      std::vector<T> gp(static_cast<size_t>(outer * axes[p] * inner));
      for (int64_t o = 0; o < outer; ++o)
        std::copy_n(g.data() + (o * out_axis + offsets[p]) * inner, axes[p] * inner,
                    gp.data() + o * axes[p] * inner);
      tp.accumulate(ids[p], gp);
    }
  };
  return detail::emit<T>(tape, std::move(oshape), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// softmax over the last dimension, max-subtracted for stability
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax_depth(const Tensor<T>& x) {
  if (x.rank() < 1) throw ShapeError("softmax_depth needs at least one dim");
  const int64_t C = x.dim(x.rank() - 1);
  const int64_t rows = x.size() / C;
  std::vector<T> out(static_cast<size_t>(x.size()));
  auto xd = x.data();
  for (int64_t r = 0; r < rows; ++r) {
    const T* v = &xd[r * C];
    T* o = &out[static_cast<size_t>(r * C)];
    T m = v[0];
    for (int64_t c = 1; c < C; ++c) m = std::max(m, v[c]);
    T z = 0;
    for (int64_t c = 0; c < C; ++c) {
      o[c] = std::exp(v[c] - m);
      z += o[c];
    }
    for (int64_t c = 0; c < C; ++c) o[c] /= z;
  }
  check_finite<T>(out, "softmax_depth");
  Tape<T>* tape = detail::common_tape<T>({&x});
  int idx = x.node();
  std::vector<T> saved = out;
  auto bw = [idx, C, rows, saved = std::move(saved)](Tape<T>& tp, const std::vector<T>& g) {
    std::vector<T> gx(g.size());
    for (int64_t r = 0; r < rows; ++r) {
      const T* y = &saved[static_cast<size_t>(r * C)];
      const T* gr = &g[static_cast<size_t>(r * C)];
      T dot = 0;
      for (int64_t c = 0; c < C; ++c) dot += gr[c] * y[c];
      for (int64_t c = 0; c < C; ++c) gx[static_cast<size_t>(r * C + c)] = y[c] * (gr[c] - dot);
    }
    tp.accumulate(idx, gx);
  };
  return detail::emit<T>(tape, x.shape(), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// inverted dropout: eval is the identity, train scales survivors by 1/(1-rate)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, RunMode mode, uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate must be in [0,1), got " + std::to_string(rate));
  Tape<T>* tape = detail::common_tape<T>({&x});
  int idx = x.node();
  if (mode == RunMode::kEval || rate == 0.0) {
    std::vector<T> out(x.data().begin(), x.data().end());
    return detail::emit<T>(tape, x.shape(), std::move(out),
                           [idx](Tape<T>& tp, const std::vector<T>& g) { tp.accumulate(idx, g); });
  }
  Rng rng(seed);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(static_cast<size_t>(x.size()));
  for (auto& m : mask) m = rng.uniform() < rate ? T(0) : scale;
  std::vector<T> out(static_cast<size_t>(x.size()));
  auto xd = x.data();
  for (int64_t i = 0; i < x.size(); ++i) out[i] = xd[i] * mask[static_cast<size_t>(i)];
  auto bw = [idx, mask = std::move(mask)](Tape<T>& tp, const std::vector<T>& g) {
    std::vector<T> gx(g.size());
    for (size_t i = 0; i < g.size(); ++i) gx[i] = g[i] * mask[i];
    tp.accumulate(idx, gx);
  };
  return detail::emit<T>(tape, x.shape(), std::move(out), std::move(bw));
}

// ---------------------------------------------------------------------------
// fully connected over the last dimension: out[...,o] = b[o] + sum_i x[...,i] w[i,o]
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> fully_connected(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (w.rank() != 2) throw ShapeError("fully_connected weight must be IxO");
  const int I = w.dim(0), O = w.dim(1);
  if (x.dim(x.rank() - 1) != I) throw ShapeError("fully_connected input depth mismatch");
  if (b.size() != O) throw ShapeError("fully_connected bias size mismatch");
  const int64_t rows = x.size() / I;
  Shape oshape = x.shape();
  oshape.back() = O;
  std::vector<T> out(static_cast<size_t>(rows * O));
  auto xd = x.data();
  auto wd = w.data();
  auto bd = b.data();
  for (int64_t r = 0; r < rows; ++r) {
    T* o = &out[static_cast<size_t>(r * O)];
    for (int j = 0; j < O; ++j) o[j] = bd[j];
    const T* xr = &xd[r * I];
    for (int i = 0; i < I; ++i) {
      const T xv = xr[i];
      const T* wr = &wd[static_cast<int64_t>(i) * O];
      for (int j = 0; j < O; ++j) o[j] += xv * wr[j];
    }
  }
  check_finite<T>(out, "fully_connected");
  Tape<T>* tape = detail::common_tape<T>({&x, &w, &b});
  Tensor<T> xv = x, wv = w;
  int idx = x.node(), idw = w.node(), idb = b.node();
  auto bw = [=](Tape<T>& tp, const std::vector<T>& g) {
    auto xd = xv.data();
    auto wd = wv.data();
    std::vector<T> gx, gw, gb;
    if (idx >= 0) gx.assign(xd.size(), T(0));
    if (idw >= 0) gw.assign(wd.size(), T(0));
    if (idb >= 0) gb.assign(static_cast<size_t>(O), T(0));
    for (int64_t r = 0; r < rows; ++r) {
      const T* gr = &g[static_cast<size_t>(r * O)];
      const T* xr = &xd[r * I];
      if (idb >= 0)
        for (int j = 0; j < O; ++j) gb[static_cast<size_t>(j)] += gr[j];
      for (int i = 0; i < I; ++i) {
        const T* wr = &wd[static_cast<int64_t>(i) * O];
        if (idx >= 0) {
          T acc = 0;
          for (int j = 0; j < O; ++j) acc += gr[j] * wr[j];
          gx[static_cast<size_t>(r * I + i)] += acc;
        }
        if (idw >= 0) {
          T* gwr = &gw[static_cast<size_t>(static_cast<int64_t>(i) * O)];
          const T xvv = xr[i];
          for (int j = 0; j < O; ++j) gwr[j] += xvv * gr[j];
        }
      }
    }
    if (idx >= 0) tp.accumulate(idx, gx);
    if (idw >= 0) tp.accumulate(idw, gw);
    if (idb >= 0) tp.accumulate(idb, gb);
  };
  return detail::emit<T>(tape, std::move(oshape), std::move(out), std::move(bw));
}

}  // namespace street
