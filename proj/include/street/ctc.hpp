#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "street/errors.hpp"
#include "street/tensor.hpp"

namespace street {

namespace detail {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// Frames x classes log-softmax computed in double regardless of T.
template <typename T>
std::vector<double> log_softmax_frames(std::span<const T> logits, int64_t frames, int classes) {
  std::vector<double> ly(static_cast<size_t>(frames) * classes);
  for (int64_t t = 0; t < frames; ++t) {
    const T* row = &logits[t * classes];
    double m = static_cast<double>(row[0]);
    for (int c = 1; c < classes; ++c) m = std::max(m, static_cast<double>(row[c]));
    double z = 0;
    for (int c = 0; c < classes; ++c) z += std::exp(static_cast<double>(row[c]) - m);
    const double lz = m + std::log(z);
    for (int c = 0; c < classes; ++c)
      ly[static_cast<size_t>(t * classes + c)] = static_cast<double>(row[c]) - lz;
  }
  return ly;
}

inline void validate_ctc(int64_t frames, int classes, const std::vector<int>& label) {
  if (frames == 0) throw EmptyFrames("CTC problem has zero frames");
  if (classes < 1) throw ShapeError("CTC needs at least one class");
  const int null_id = classes - 1;
  int64_t repeats = 0;
  for (size_t i = 0; i < label.size(); ++i) {
    if (label[i] < 0 || label[i] >= classes)
      throw ShapeError("label id " + std::to_string(label[i]) + " out of range");
    if (label[i] == null_id)
      throw InfeasibleLabel("label contains the null class id " + std::to_string(null_id));
    if (i > 0 && label[i] == label[i - 1]) ++repeats;
  }
  const int64_t needed = static_cast<int64_t>(label.size()) + repeats;
  if (frames < needed)
    throw InfeasibleLabel("label needs " + std::to_string(needed) + " frames, only " +
                          std::to_string(frames) + " available");
}

}  // namespace detail

// Loss and exact logit gradient of -ln p(label | softmax(logits)), computed
// with the log-space forward-backward recursion over the null-augmented label
// (length 2L+1, null interleaved). logits may be any tensor whose last
// dimension is the class count; leading dims flatten to the frame axis.
template <typename T>
struct CtcResult {
  double loss = 0;
  Tensor<T> grad_logits;
};

template <typename T>
CtcResult<T> ctc_loss(const Tensor<T>& logits, const std::vector<int>& label) {
  const int C = logits.dim(logits.rank() - 1);
  const int64_t Tn = logits.size() / C;
  detail::validate_ctc(Tn, C, label);
  const int null_id = C - 1;
  const int L = static_cast<int>(label.size());
  const int S = 2 * L + 1;

  const std::vector<double> ly = detail::log_softmax_frames<T>(logits.data(), Tn, C);
  auto lab = [&](int s) { return (s % 2 == 0) ? null_id : label[static_cast<size_t>(s / 2)]; };

  const double NEG = detail::kLogZero;
  std::vector<double> alpha(static_cast<size_t>(Tn) * S, NEG);
  std::vector<double> beta(static_cast<size_t>(Tn) * S, NEG);

  alpha[0] = ly[static_cast<size_t>(null_id)];
  if (S > 1) alpha[1] = ly[static_cast<size_t>(lab(1))];
  for (int64_t t = 1; t < Tn; ++t) {
    for (int s = 0; s < S; ++s) {
      double a = alpha[static_cast<size_t>((t - 1) * S + s)];
      if (s >= 1) a = detail::log_add(a, alpha[static_cast<size_t>((t - 1) * S + s - 1)]);
      if (s >= 2 && lab(s) != null_id && lab(s) != lab(s - 2))
        a = detail::log_add(a, alpha[static_cast<size_t>((t - 1) * S + s - 2)]);
      alpha[static_cast<size_t>(t * S + s)] =
          a == NEG ? NEG : a + ly[static_cast<size_t>(t * C + lab(s))];
    }
  }
  // beta excludes the emission at t
  beta[static_cast<size_t>((Tn - 1) * S + S - 1)] = 0;
  if (S > 1) beta[static_cast<size_t>((Tn - 1) * S + S - 2)] = 0;
  for (int64_t t = Tn - 2; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double b = beta[static_cast<size_t>((t + 1) * S + s)] + ly[static_cast<size_t>((t + 1) * C + lab(s))];
      if (s + 1 < S)
        b = detail::log_add(b, beta[static_cast<size_t>((t + 1) * S + s + 1)] +
                                   ly[static_cast<size_t>((t + 1) * C + lab(s + 1))]);
      if (s + 2 < S && lab(s + 2) != null_id && lab(s + 2) != lab(s))
        b = detail::log_add(b, beta[static_cast<size_t>((t + 1) * S + s + 2)] +
                                   ly[static_cast<size_t>((t + 1) * C + lab(s + 2))]);
      beta[static_cast<size_t>(t * S + s)] = b;
    }
  }

  double logp = alpha[static_cast<size_t>((Tn - 1) * S + S - 1)];
  if (S > 1) logp = detail::log_add(logp, alpha[static_cast<size_t>((Tn - 1) * S + S - 2)]);
  if (logp == NEG) throw InfeasibleLabel("no valid alignment has positive probability");

  // grad[t,k] = y[t,k] - sum_{s: lab(s)=k} posterior_t(s)
  CtcResult<T> res;
  res.loss = -logp;
  std::vector<T> grad(static_cast<size_t>(Tn) * C);
  for (int64_t t = 0; t < Tn; ++t) {
    std::vector<double> occ(static_cast<size_t>(C), 0.0);
    for (int s = 0; s < S; ++s) {
      const double post = alpha[static_cast<size_t>(t * S + s)] + beta[static_cast<size_t>(t * S + s)];
      if (post == NEG) continue;
      occ[static_cast<size_t>(lab(s))] += std::exp(post - logp);
    }
    for (int c = 0; c < C; ++c) {
      const double y = std::exp(ly[static_cast<size_t>(t * C + c)]);
      grad[static_cast<size_t>(t * C + c)] = static_cast<T>(y - occ[static_cast<size_t>(c)]);
    }
  }
  res.grad_logits = Tensor<T>(logits.shape(), std::move(grad));
  return res;
}

// Tape-recorded scalar CTC loss for training.
template <typename T>
Tensor<T> ctc_loss_op(const Tensor<T>& logits, const std::vector<int>& label) {
  CtcResult<T> r = ctc_loss(logits, label);
  Tape<T>* tape = detail::common_tape<T>({&logits});
  const int idl = logits.node();
  Tensor<T> saved = r.grad_logits;
  return detail::emit<T>(tape, {1}, {static_cast<T>(r.loss)},
                         [idl, saved](Tape<T>& tp, const std::vector<T>& g) {
                           std::vector<T> gl(saved.data().begin(), saved.data().end());
                           for (T& v : gl) v *= g[0];
                           tp.accumulate(idl, gl);
                         });
}

// Test oracle: enumerate every frame-label path whose collapse (dedup
// adjacent repeats, drop nulls) equals the label, sum softmax path
// probabilities, return -ln. Tractable for T <= 8, C <= 5.
template <typename T>
double ctc_brute_force(const Tensor<T>& logits, const std::vector<int>& label) {
  const int C = logits.dim(logits.rank() - 1);
  const int64_t Tn = logits.size() / C;
  detail::validate_ctc(Tn, C, label);
  const int null_id = C - 1;

  // per-frame softmax computed locally, independent of ctc_loss internals
  std::vector<double> y(static_cast<size_t>(Tn) * C);
  auto ld = logits.data();
  for (int64_t t = 0; t < Tn; ++t) {
    double m = static_cast<double>(ld[t * C]);
    for (int c = 1; c < C; ++c) m = std::max(m, static_cast<double>(ld[t * C + c]));
    double z = 0;
    for (int c = 0; c < C; ++c) z += std::exp(static_cast<double>(ld[t * C + c]) - m);
    for (int c = 0; c < C; ++c)
      y[static_cast<size_t>(t * C + c)] = std::exp(static_cast<double>(ld[t * C + c]) - m) / z;
  }

  double total = 0;
  // DFS over frames; prune paths whose collapsed prefix already diverges.
  auto rec = [&](auto&& self, int64_t t, int last, size_t matched, double prob) -> void {
    if (t == Tn) {
      if (matched == label.size()) total += prob;
      return;
    }
    for (int c = 0; c < C; ++c) {
      const double p = prob * y[static_cast<size_t>(t * C + c)];
      if (c == null_id || c == last) {
        self(self, t + 1, c, matched, p);
      } else {
        if (matched < label.size() && label[matched] == c)
          self(self, t + 1, c, matched + 1, p);
        // otherwise the collapsed string diverges from the label: prune
      }
    }
  };
  rec(rec, 0, -1, 0, 1.0);
  if (total <= 0) throw InfeasibleLabel("no matching path");
  return -std::log(total);
}

// Best-path decoding: per-frame argmax (lowest index wins ties), collapse
// adjacent repeats, drop nulls.
template <typename T>
std::vector<int> ctc_greedy_decode(const Tensor<T>& logits) {
  const int C = logits.dim(logits.rank() - 1);
  const int64_t Tn = logits.size() / C;
  const int null_id = C - 1;
  auto ld = logits.data();
  std::vector<int> out;
  int last = -1;
  for (int64_t t = 0; t < Tn; ++t) {
    int best = 0;
    for (int c = 1; c < C; ++c)
      if (ld[t * C + c] > ld[t * C + best]) best = c;
    if (best != last && best != null_id) out.push_back(best);
    last = best;
  }
  return out;
}

}  // namespace street
