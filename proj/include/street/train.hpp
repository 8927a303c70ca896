#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "street/ctc.hpp"
#include "street/errors.hpp"
#include "street/metrics.hpp"
#include "street/model.hpp"
#include "street/records.hpp"
#include "street/rng.hpp"
#include "street/tensor.hpp"

namespace street {

struct AdamConfig {
  double lr = 2e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, one pair per parameter block.
template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m, v;
  int64_t step = 0;

  static AdamState init(const std::vector<std::pair<std::string, Tensor<T>*>>& params) {
    AdamState s;
    for (const auto& [name, t] : params) {
      s.m.emplace_back(t->shape());
      s.v.emplace_back(t->shape());
    }
    return s;
  }
};

// Standard bias-corrected Adam update, in place. Returns false (and leaves
// parameters and state untouched) when any gradient is non-finite.
template <typename T>
bool adam_step(const std::vector<std::pair<std::string, Tensor<T>*>>& params,
               const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw ShapeError("adam: params/grads count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].second->shape() != grads[i].shape())
      throw ShapeError("adam: gradient shape mismatch for " + params[i].first);
    for (T g : grads[i].data())
      if (!std::isfinite(static_cast<double>(g))) return false;
  }
  const int64_t t = ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].second->data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (int64_t j = 0; j < params[i].second->size(); ++j) {
      const double gj = static_cast<double>(g[j]);
      const double mj = cfg.beta1 * static_cast<double>(m[j]) + (1.0 - cfg.beta1) * gj;
      const double vj = cfg.beta2 * static_cast<double>(v[j]) + (1.0 - cfg.beta2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double mhat = mj / bc1;
      const double vhat = vj / bc2;
      p[j] = static_cast<T>(static_cast<double>(p[j]) -
                            cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

struct EvalReport {
  int64_t examples = 0;
  double word_recall = 0;
  double word_precision = 0;
  double sequence_error = 0;

  std::string format() const {
    std::ostringstream os;
    os << "examples        " << examples << "\n";
    os << std::fixed << std::setprecision(4);
    os << "word_recall     " << word_recall << "\n"
       << "word_precision  " << word_precision << "\n"
       << "sequence_error  " << sequence_error << "\n";
    return os.str();
  }
};

template <typename T>
EvalReport evaluate(const StreetModel<T>& model, const std::vector<SignExample>& examples,
                    const Charset& cs, std::ostream* transcripts = nullptr) {
  if (examples.empty()) throw EmptyEvalSet("no examples to evaluate");
  std::vector<EvalPair> pairs;
  pairs.reserve(examples.size());
  for (const SignExample& e : examples) {
    EvalPair p;
    p.truth = e.text;
    p.output = model.predict_text(image_to_tensor<T>(e), cs);
    if (transcripts) *transcripts << p.output << "\n";
    pairs.push_back(std::move(p));
  }
  EvalReport r;
  r.examples = static_cast<int64_t>(examples.size());
  r.word_recall = word_recall(pairs);
  r.word_precision = word_precision(pairs);
  r.sequence_error = sequence_error(pairs);
  return r;
}

template <typename T>
EvalReport evaluate_file(const StreetModel<T>& model, const std::string& records_path,
                         const Charset& cs, std::ostream* transcripts = nullptr) {
  return evaluate(model, read_all_examples(records_path), cs, transcripts);
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

struct TrainOptions {
  int64_t steps = 1000;
  int batch = 1;           // gradient accumulation per optimizer step
  int64_t eval_every = 0;  // 0 disables periodic eval/checkpoints
  uint64_t seed = 1;
  AdamConfig adam;
  double clip_norm = 0;  // 0 disables L2 gradient clipping
  bool timestamps = true;
  std::string checkpoint_dir;  // empty disables checkpoint writing
};

struct TrainResult {
  int64_t steps_run = 0;
  int64_t skipped_infeasible = 0;
  int64_t aborted_nonfinite = 0;
  double final_loss = 0;
  std::vector<double> losses;  // per optimizer step
  EvalReport last_eval;
  bool ran_eval = false;
};

// CTC training over a record set with per-image updates (optional gradient
// accumulation), deterministic for a fixed seed. Infeasible labels are
// skipped and counted; non-finite gradients abort the step.
template <typename T = float>
TrainResult train(StreetModel<T>& model, const std::vector<SignExample>& examples,
                  const Charset& cs, const TrainOptions& opt, std::ostream& log) {
  if (examples.empty()) throw EmptyEvalSet("no training examples");
  if (cs.size() != model.config().classes)
    throw ConfigError("charset size " + std::to_string(cs.size()) +
                      " does not match configured classes " +
                      std::to_string(model.config().classes));
  for (size_t i = 0; i < examples.size(); ++i) {
    const SignExample& e = examples[i];
    if (e.height != model.config().tile || e.width != model.config().image_width())
      throw ConfigError("record " + std::to_string(i) + " is " + std::to_string(e.width) +
                        "x" + std::to_string(e.height) + ", model wants " +
                        std::to_string(model.config().image_width()) + "x" +
                        std::to_string(model.config().tile));
    for (int64_t id : e.class_unpadded)
      if (id < 0 || id >= cs.size() - 1)
        throw ConfigError("record " + std::to_string(i) + " carries class id " +
                          std::to_string(id) + " outside the charset");
  }

  auto params = model.parameter_blocks();
  AdamState<T> state = AdamState<T>::init(params);
  TrainResult res;

  const auto t0 = std::chrono::steady_clock::now();
  auto stamp = [&]() -> std::string {
    if (!opt.timestamps) return "";
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    return " wall_ms=" + std::to_string(ms);
  };

  log << "train seed=" << opt.seed << " steps=" << opt.steps << " batch=" << opt.batch
      << " lr=" << opt.adam.lr << " examples=" << examples.size() << "\n";

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = 0;
  int64_t epoch = 0;
  auto reshuffle = [&]() {
    Rng rng(derive_seed(opt.seed, "epoch", static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);
    cursor = 0;
    ++epoch;
  };
  reshuffle();

  const int frames = model.frames();
  for (int64_t step = 0; step < opt.steps; ++step) {
    std::vector<Tensor<T>> accum;
    double loss_sum = 0;
    int contributing = 0;
    for (int k = 0; k < opt.batch; ++k) {
      if (cursor >= order.size()) reshuffle();
      const SignExample& e = examples[order[cursor++]];
      if (ctc_min_frames(e.class_unpadded) > frames) {
        ++res.skipped_infeasible;
        continue;
      }
      Tape<T> tape;
      Tensor<T> logits =
          model.forward(image_to_tensor<T>(e), RunMode::kTrain,
                        derive_seed(opt.seed, "dropout", static_cast<uint64_t>(step)), &tape);
      std::vector<int> label(e.class_unpadded.begin(), e.class_unpadded.end());
      Tensor<T> loss = ctc_loss_op(logits, label);
      tape.backward(loss);
      loss_sum += static_cast<double>(loss.item());
      ++contributing;
      size_t pi = 0;
      for (const auto& [name, t] : params) {
        Tensor<T> g = tape.grad(name);
        if (accum.size() <= pi) accum.push_back(g);
        else {
          auto a = accum[pi].data();
          auto gd = g.data();
          for (int64_t j = 0; j < accum[pi].size(); ++j) a[j] += gd[j];
        }
        ++pi;
      }
    }
    if (contributing == 0) {
      log << "step=" << step << " skipped=all_infeasible" << stamp() << "\n";
      continue;
    }
    if (opt.batch > 1) {
      for (Tensor<T>& g : accum)
        for (T& v : g.data()) v /= static_cast<T>(contributing);
    }
    if (opt.clip_norm > 0) {
      double sq = 0;
      for (const Tensor<T>& g : accum)
        for (T v : g.data()) sq += static_cast<double>(v) * static_cast<double>(v);
      const double norm = std::sqrt(sq);
      if (norm > opt.clip_norm) {
        const T scale = static_cast<T>(opt.clip_norm / norm);
        for (Tensor<T>& g : accum)
          for (T& v : g.data()) v *= scale;
      }
    }
    const double loss = loss_sum / contributing;
    if (!adam_step(params, accum, state, opt.adam)) {
      ++res.aborted_nonfinite;
      log << "step=" << step << " loss=" << std::setprecision(9) << loss
          << " aborted=nonfinite_grad" << stamp() << "\n";
      continue;
    }
    ++res.steps_run;
    res.final_loss = loss;
    res.losses.push_back(loss);
    log << "step=" << step << " loss=" << std::setprecision(9) << loss << stamp() << "\n";

    if (opt.eval_every > 0 && (step + 1) % opt.eval_every == 0) {
      res.last_eval = evaluate(model, examples, cs);
      res.ran_eval = true;
      log << "eval step=" << step << " word_recall=" << std::setprecision(6)
          << res.last_eval.word_recall << " word_precision=" << res.last_eval.word_precision
          << " sequence_error=" << res.last_eval.sequence_error << stamp() << "\n";
      if (!opt.checkpoint_dir.empty())
        model.save(opt.checkpoint_dir + "/ckpt-" + std::to_string(step + 1) + ".fsnl");
    }
  }
  if (!opt.checkpoint_dir.empty()) model.save(opt.checkpoint_dir + "/ckpt-final.fsnl");
  return res;
}

template <typename T = float>
TrainResult train_file(StreetModel<T>& model, const std::string& records_path,
                       const Charset& cs, const TrainOptions& opt, std::ostream& log) {
  return train(model, read_all_examples(records_path), cs, opt, log);
}

}  // namespace street
