#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "street/ctc.hpp"
#include "street/errors.hpp"
#include "street/lstm.hpp"
#include "street/records.hpp"
#include "street/rng.hpp"
#include "street/tensor.hpp"
#include "street/text.hpp"

namespace street {

// All width/depth hyperparameters of the transcription graph. The full preset
// mirrors the published layer table; mini is a desk-scale configuration for
// tests and overfit runs.
struct StreetConfig {
  std::string preset = "full";
  int tile = 150;
  int views = 4;        // view slots per image (de-tiled into the batch dim)
  int depth = 3;        // input channels
  int conv0_filters = 16;
  int conv1_filters = 64;
  int pool0 = 2;
  int pool1 = 3;
  int summarizer = 64;  // vertical summarizer width n_s
  int reader = 128;     // line reader width per direction
  int posnorm0 = 128;   // left-to-right position normalizer
  int posnorm1 = 128;   // right-to-left position normalizer
  int final_width = 256;
  int classes = 134;
  double dropout_rate = 0.5;

  static StreetConfig full() { return StreetConfig{}; }

  static StreetConfig mini() {
    StreetConfig c;
    c.preset = "mini";
    c.tile = 36;
    c.views = 2;
    c.conv0_filters = 8;
    c.conv1_filters = 16;
    c.pool1 = 2;  // keeps 9x9 post-conv resolution; 27 frames
    c.summarizer = 16;
    c.reader = 32;
    c.posnorm0 = 32;
    c.posnorm1 = 32;
    c.final_width = 64;
    c.classes = 16;
    c.dropout_rate = 0.0;
    return c;
  }

  static StreetConfig by_name(const std::string& name) {
    if (name == "full") return full();
    if (name == "mini") return mini();
    throw ConfigError("unknown preset \"" + name + "\" (full|mini)");
  }

  int post_conv() const { return tile / (pool0 * pool1); }
  int frames() const { return 3 * post_conv(); }
  int image_width() const { return tile * views; }

  void validate() const {
    for (int v : {tile, views, depth, conv0_filters, conv1_filters, pool0, pool1, summarizer,
                  reader, posnorm0, posnorm1, final_width})
      if (v <= 0) throw ConfigError("all widths must be positive");
    if (classes < 2) throw ConfigError("need at least two classes");
    if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("dropout rate in [0,1)");
    if (tile % pool0 != 0 || (tile / pool0) % pool1 != 0)
      throw ConfigError("tile size must be divisible by both pool windows");
    if (preset == "full" && frames() < 2 * Charset::kMaxLabelLength + 1)
      throw ConfigError("full preset must provide 2*37+1 frames");
  }

  std::string serialize() const {
    std::ostringstream os;
    os << "preset=" << preset << "\ntile=" << tile << "\nviews=" << views
       << "\ndepth=" << depth << "\nconv0_filters=" << conv0_filters
       << "\nconv1_filters=" << conv1_filters << "\npool0=" << pool0 << "\npool1=" << pool1
       << "\nsummarizer=" << summarizer << "\nreader=" << reader << "\nposnorm0=" << posnorm0
       << "\nposnorm1=" << posnorm1 << "\nfinal_width=" << final_width
       << "\nclasses=" << classes << "\ndropout_rate=" << dropout_rate << "\n";
    return os.str();
  }

  static StreetConfig parse(const std::string& text) {
    StreetConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const size_t eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("bad config line: " + line);
      const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
      if (k == "preset") c.preset = v;
      else if (k == "tile") c.tile = std::stoi(v);
      else if (k == "views") c.views = std::stoi(v);
      else if (k == "depth") c.depth = std::stoi(v);
      else if (k == "conv0_filters") c.conv0_filters = std::stoi(v);
      else if (k == "conv1_filters") c.conv1_filters = std::stoi(v);
      else if (k == "pool0") c.pool0 = std::stoi(v);
      else if (k == "pool1") c.pool1 = std::stoi(v);
      else if (k == "summarizer") c.summarizer = std::stoi(v);
      else if (k == "reader") c.reader = std::stoi(v);
      else if (k == "posnorm0") c.posnorm0 = std::stoi(v);
      else if (k == "posnorm1") c.posnorm1 = std::stoi(v);
      else if (k == "final_width") c.final_width = std::stoi(v);
      else if (k == "classes") c.classes = std::stoi(v);
      else if (k == "dropout_rate") c.dropout_rate = std::stod(v);
      else throw ConfigError("unknown config key: " + k);
    }
    c.validate();
    return c;
  }
};

// Named intermediate shapes, computed at build time from the wiring rules and
// asserted against the actual tensors on every forward pass.
struct StageShape {
  std::string name;
  Shape shape;
};

template <typename T>
struct ForwardTrace {
  std::vector<std::pair<std::string, Tensor<T>>> stages;
};

// The multi-view transcription graph: de-tiling reshape, two conv+pool
// stages, per-line vertical summarizers, bidirectional line readers,
// x-concatenation, two position-normalizing LSTMs, view-combining reshape,
// dropout, final LSTM and the class projection.
template <typename T = float>
class StreetModel {
 public:
  StreetModel(StreetConfig config, uint64_t seed) : cfg_(std::move(config)) {
    cfg_.validate();
    Rng rng(derive_seed(seed, "street-model"));
    auto conv_init = [&rng](Tensor<T>& k) {
      int64_t fan_in = k.dim(0) * k.dim(1) * k.dim(2);
      int64_t fan_out = k.dim(0) * k.dim(1) * k.dim(3);
      const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (T& v : k.data()) v = static_cast<T>(rng.uniform(-lim, lim));
    };
    conv0_k_ = Tensor<T>({5, 5, cfg_.depth, cfg_.conv0_filters});
    conv0_b_ = Tensor<T>({cfg_.conv0_filters});
    conv1_k_ = Tensor<T>({5, 5, cfg_.conv0_filters, cfg_.conv1_filters});
    conv1_b_ = Tensor<T>({cfg_.conv1_filters});
    conv_init(conv0_k_);
    conv_init(conv1_k_);
    const int f2 = cfg_.conv1_filters, ns = cfg_.summarizer, nb = cfg_.reader;
    vsum_top_ = LstmParams<T>::init(f2, ns, rng);
    vsum_mid_up_ = LstmParams<T>::init(f2, ns, rng);
    vsum_mid_down_ = LstmParams<T>::init(f2, ns, rng);
    vsum_bottom_ = LstmParams<T>::init(f2, ns, rng);
    bidi_top_f_ = LstmParams<T>::init(ns, nb, rng);
    bidi_top_r_ = LstmParams<T>::init(ns, nb, rng);
    bidi_mid_f_ = LstmParams<T>::init(2 * ns, nb, rng);
    bidi_mid_r_ = LstmParams<T>::init(2 * ns, nb, rng);
    bidi_bot_f_ = LstmParams<T>::init(ns, nb, rng);
    bidi_bot_r_ = LstmParams<T>::init(ns, nb, rng);
    posnorm_ltr_ = LstmParams<T>::init(2 * nb, cfg_.posnorm0, rng);
    posnorm_rtl_ = LstmParams<T>::init(cfg_.posnorm0, cfg_.posnorm1, rng);
    final_ = LstmParams<T>::init(cfg_.views * cfg_.posnorm1, cfg_.final_width, rng);
    softmax_w_ = Tensor<T>({cfg_.final_width, cfg_.classes});
    softmax_b_ = Tensor<T>({cfg_.classes});
    {
      const double lim = std::sqrt(6.0 / (cfg_.final_width + cfg_.classes));
      for (T& v : softmax_w_.data()) v = static_cast<T>(rng.uniform(-lim, lim));
    }
    compute_stages();
  }

  const StreetConfig& config() const { return cfg_; }
  const std::vector<StageShape>& expected_stages() const { return stages_; }
  int frames() const { return cfg_.frames(); }

  // Parameter blocks in a fixed order (optimizer state and checkpoints rely
  // on this ordering).
  std::vector<std::pair<std::string, Tensor<T>*>> parameter_blocks() {
    std::vector<std::pair<std::string, Tensor<T>*>> out;
    auto lstm = [&out](const char* name, LstmParams<T>& p) {
      out.emplace_back(std::string(name) + "/wx", &p.wx);
      out.emplace_back(std::string(name) + "/wh", &p.wh);
      out.emplace_back(std::string(name) + "/b", &p.b);
    };
    out.emplace_back("Conv0/kernel", &conv0_k_);
    out.emplace_back("Conv0/bias", &conv0_b_);
    out.emplace_back("Conv1/kernel", &conv1_k_);
    out.emplace_back("Conv1/bias", &conv1_b_);
    lstm("V-SumLSTM-Top", vsum_top_);
    lstm("V-SumLSTM-MidUp", vsum_mid_up_);
    lstm("V-SumLSTM-MidDown", vsum_mid_down_);
    lstm("V-SumLSTM-Bottom", vsum_bottom_);
    lstm("BidiLSTM-Top/fwd", bidi_top_f_);
    lstm("BidiLSTM-Top/rev", bidi_top_r_);
    lstm("BidiLSTM-Mid/fwd", bidi_mid_f_);
    lstm("BidiLSTM-Mid/rev", bidi_mid_r_);
    lstm("BidiLSTM-Bottom/fwd", bidi_bot_f_);
    lstm("BidiLSTM-Bottom/rev", bidi_bot_r_);
    lstm("LTRLSTM", posnorm_ltr_);
    lstm("RTLLSTM", posnorm_rtl_);
    lstm("FinalLSTM", final_);
    out.emplace_back("Softmax/w", &softmax_w_);
    out.emplace_back("Softmax/b", &softmax_b_);
    return out;
  }

  // Per-row parameter counts, grouped the way the published table lists them.
  std::vector<std::pair<std::string, int64_t>> count_params() const {
    std::vector<std::pair<std::string, int64_t>> rows;
    rows.emplace_back("Conv0", conv0_k_.size() + conv0_b_.size());
    rows.emplace_back("Conv1", conv1_k_.size() + conv1_b_.size());
    rows.emplace_back("V-SumLSTM-Top", vsum_top_.param_count());
    rows.emplace_back("V-SumLSTM-MidUp", vsum_mid_up_.param_count());
    rows.emplace_back("V-SumLSTM-MidDown", vsum_mid_down_.param_count());
    rows.emplace_back("V-SumLSTM-Bottom", vsum_bottom_.param_count());
    rows.emplace_back("BidiLSTM-Top", bidi_top_f_.param_count() + bidi_top_r_.param_count());
    rows.emplace_back("BidiLSTM-Mid", bidi_mid_f_.param_count() + bidi_mid_r_.param_count());
    rows.emplace_back("BidiLSTM-Bottom", bidi_bot_f_.param_count() + bidi_bot_r_.param_count());
    rows.emplace_back("LTRLSTM", posnorm_ltr_.param_count());
    rows.emplace_back("RTLLSTM", posnorm_rtl_.param_count());
    rows.emplace_back("FinalLSTM", final_.param_count());
    rows.emplace_back("Softmax", softmax_w_.size() + softmax_b_.size());
    return rows;
  }

  int64_t total_params() const {
    int64_t t = 0;
    for (const auto& [name, c] : count_params()) t += c;
    return t;
  }

  // Runs the graph. Returns logits shaped 1 x 1 x frames x classes. When a
  // tape is given, all parameter blocks are registered as named leaves so the
  // caller can pull gradients after backward().
  Tensor<T> forward(const Tensor<T>& image, RunMode mode, uint64_t dropout_seed = 0,
                    Tape<T>* tape = nullptr, ForwardTrace<T>* trace = nullptr) const {
    if (image.shape() != Shape{1, cfg_.tile, cfg_.image_width(), cfg_.depth})
      throw ShapeError("input image must be 1x" + std::to_string(cfg_.tile) + "x" +
                       std::to_string(cfg_.image_width()) + "x" + std::to_string(cfg_.depth) +
                       ", got " + shape_str(image.shape()));

    auto bind = [tape](const Tensor<T>& t, const std::string& name) {
      return tape ? tape->leaf(t, name) : t;
    };
    auto bind_lstm = [tape](const LstmParams<T>& p, const std::string& name) {
      if (!tape) return p;
      LstmParams<T> b = p;
      b.wx = tape->leaf(p.wx, name + "/wx");
      b.wh = tape->leaf(p.wh, name + "/wh");
      b.b = tape->leaf(p.b, name + "/b");
      return b;
    };

    size_t stage = 0;
    auto audit = [&](const Tensor<T>& t, const char* name) {
      if (stage >= stages_.size() || stages_[stage].name != name ||
          t.shape() != stages_[stage].shape)
        throw ShapeError(std::string("stage ") + name + " produced " + shape_str(t.shape()) +
                         ", wiring expects " +
                         (stage < stages_.size() ? shape_str(stages_[stage].shape) : "<none>"));
      ++stage;
      if (trace) trace->stages.emplace_back(name, t);
    };

    // de-tile: width splits into (views, tile); views join the batch dim
    Tensor<T> x = generic_reshape(image, ReshapeSpec{2, {cfg_.views, cfg_.tile}, {0, 2}});
    audit(x, "Reshape0");
    x = street::tanh(conv2d(x, bind(conv0_k_, "Conv0/kernel"), bind(conv0_b_, "Conv0/bias")));
    audit(x, "Conv0");
    x = maxpool(x, cfg_.pool0, cfg_.pool0);
    audit(x, "Maxpool0");
    x = street::tanh(conv2d(x, bind(conv1_k_, "Conv1/kernel"), bind(conv1_b_, "Conv1/bias")));
    audit(x, "Conv1");
    x = maxpool(x, cfg_.pool1, cfg_.pool1);
    audit(x, "Maxpool1");

    // vertical summarizers: up ends at the top row, down ends at the bottom
    const ScanSpec up{ScanAxis::kY, ScanDir::kReverse, true};
    const ScanSpec down{ScanAxis::kY, ScanDir::kForward, true};
    Tensor<T> top = scan(x, up, bind_lstm(vsum_top_, "V-SumLSTM-Top"));
    audit(top, "V-SumLSTM-Top");
    Tensor<T> mid_up = scan(x, up, bind_lstm(vsum_mid_up_, "V-SumLSTM-MidUp"));
    audit(mid_up, "V-SumLSTM-MidUp");
    Tensor<T> mid_down = scan(x, down, bind_lstm(vsum_mid_down_, "V-SumLSTM-MidDown"));
    audit(mid_down, "V-SumLSTM-MidDown");
    Tensor<T> mid = concat(3, std::vector<Tensor<T>>{mid_up, mid_down});
    audit(mid, "DepthConcat");
    Tensor<T> bottom = scan(x, down, bind_lstm(vsum_bottom_, "V-SumLSTM-Bottom"));
    audit(bottom, "V-SumLSTM-Bottom");

    Tensor<T> top_read = bidi_scan(top, bind_lstm(bidi_top_f_, "BidiLSTM-Top/fwd"),
                                   bind_lstm(bidi_top_r_, "BidiLSTM-Top/rev"));
    audit(top_read, "BidiLSTM-Top");
    Tensor<T> mid_read = bidi_scan(mid, bind_lstm(bidi_mid_f_, "BidiLSTM-Mid/fwd"),
                                   bind_lstm(bidi_mid_r_, "BidiLSTM-Mid/rev"));
    audit(mid_read, "BidiLSTM-Mid");
    Tensor<T> bot_read = bidi_scan(bottom, bind_lstm(bidi_bot_f_, "BidiLSTM-Bottom/fwd"),
                                   bind_lstm(bidi_bot_r_, "BidiLSTM-Bottom/rev"));
    audit(bot_read, "BidiLSTM-Bottom");

    // lines strung out in reading order: top, middle, bottom
    Tensor<T> lines = concat(2, std::vector<Tensor<T>>{top_read, mid_read, bot_read});
    audit(lines, "XConcat");

    Tensor<T> p0 = scan(lines, ScanSpec{ScanAxis::kX, ScanDir::kForward, false},
                        bind_lstm(posnorm_ltr_, "LTRLSTM"));
    audit(p0, "LTRLSTM");
    Tensor<T> p1 = scan(p0, ScanSpec{ScanAxis::kX, ScanDir::kReverse, false},
                        bind_lstm(posnorm_rtl_, "RTLLSTM"));
    audit(p1, "RTLLSTM");

    // views move from the batch dim into depth
    Tensor<T> combined = generic_reshape(p1, ReshapeSpec{0, {cfg_.views}, {3}});
    audit(combined, "Reshape1");
    Tensor<T> dropped = dropout(combined, cfg_.dropout_rate, mode, dropout_seed);
    audit(dropped, "Dropout");
    Tensor<T> fin = scan(dropped, ScanSpec{ScanAxis::kX, ScanDir::kForward, false},
                         bind_lstm(final_, "FinalLSTM"));
    audit(fin, "FinalLSTM");
    Tensor<T> logits =
        fully_connected(fin, bind(softmax_w_, "Softmax/w"), bind(softmax_b_, "Softmax/b"));
    audit(logits, "Softmax");
    return logits;
  }

  // eval forward -> best-path decode -> charset decode -> space folding
  std::string predict_text(const Tensor<T>& image, const Charset& cs) const {
    if (cs.size() != cfg_.classes)
      throw ConfigError("charset size " + std::to_string(cs.size()) +
                        " does not match configured classes " + std::to_string(cfg_.classes));
    Tensor<T> logits = forward(image, RunMode::kEval);
    const std::vector<int> ids = ctc_greedy_decode(logits);
    return collapse_spaces(cs.decode(ids));
  }

  void save(const std::string& path) const {
    RecordWriter w(path);
    Record header;
    header.set("street/config", Field::str(cfg_.serialize()));
    w.write(header);
    for (auto& [name, t] : const_cast<StreetModel*>(this)->parameter_blocks()) {
      Record r;
      std::vector<uint8_t> bytes(static_cast<size_t>(t->size()) * 4);
      for (int64_t i = 0; i < t->size(); ++i) {
        const uint32_t u = std::bit_cast<uint32_t>(static_cast<float>(t->data()[i]));
        for (int k = 0; k < 4; ++k)
          bytes[static_cast<size_t>(i) * 4 + static_cast<size_t>(k)] =
              static_cast<uint8_t>(u >> (8 * k));
      }
      r.set(name, Field::bytes(std::move(bytes)));
      w.write(r);
    }
    w.close();
  }

  static StreetModel load(const std::string& path) {
    RecordReader reader(path);
    auto header = reader.next();
    if (!header || !header->has("street/config"))
      throw CorruptRecord(path + ": first record must carry street/config");
    StreetModel model(StreetConfig::parse(header->at("street/config").as_string()), 0);
    std::map<std::string, Tensor<T>*> want;
    for (auto& [name, t] : model.parameter_blocks()) want[name] = t;
    size_t filled = 0;
    while (auto rec = reader.next()) {
      for (const auto& [key, f] : rec->fields()) {
        auto it = want.find(key);
        if (it == want.end()) continue;  // foreign fields are tolerated
        Tensor<T>* t = it->second;
        if (f.raw.size() != static_cast<size_t>(t->size()) * 4)
          throw CorruptRecord(path + ": parameter " + key + " has " +
                              std::to_string(f.raw.size() / 4) + " values, want " +
                              std::to_string(t->size()));
        for (int64_t i = 0; i < t->size(); ++i) {
          uint32_t u = 0;
          for (int k = 3; k >= 0; --k)
            u = (u << 8) | f.raw[static_cast<size_t>(i) * 4 + static_cast<size_t>(k)];
          t->data()[i] = static_cast<T>(std::bit_cast<float>(u));
        }
        ++filled;
      }
    }
    if (filled != want.size())
      throw CorruptRecord(path + ": checkpoint fills " + std::to_string(filled) + " of " +
                          std::to_string(want.size()) + " parameter blocks");
    return model;
  }

 private:
  void compute_stages() {
    const int V = cfg_.views, t = cfg_.tile, d = cfg_.depth;
    const int f1 = cfg_.conv0_filters, f2 = cfg_.conv1_filters;
    const int h1 = t / cfg_.pool0, h2 = h1 / cfg_.pool1;
    const int ns = cfg_.summarizer, nb = cfg_.reader;
    const int F = 3 * h2;
    stages_ = {
        {"Reshape0", {V, t, t, d}},
        {"Conv0", {V, t, t, f1}},
        {"Maxpool0", {V, h1, h1, f1}},
        {"Conv1", {V, h1, h1, f2}},
        {"Maxpool1", {V, h2, h2, f2}},
        {"V-SumLSTM-Top", {V, 1, h2, ns}},
        {"V-SumLSTM-MidUp", {V, 1, h2, ns}},
        {"V-SumLSTM-MidDown", {V, 1, h2, ns}},
        {"DepthConcat", {V, 1, h2, 2 * ns}},
        {"V-SumLSTM-Bottom", {V, 1, h2, ns}},
        {"BidiLSTM-Top", {V, 1, h2, 2 * nb}},
        {"BidiLSTM-Mid", {V, 1, h2, 2 * nb}},
        {"BidiLSTM-Bottom", {V, 1, h2, 2 * nb}},
        {"XConcat", {V, 1, F, 2 * nb}},
        {"LTRLSTM", {V, 1, F, cfg_.posnorm0}},
        {"RTLLSTM", {V, 1, F, cfg_.posnorm1}},
        {"Reshape1", {1, 1, F, V * cfg_.posnorm1}},
        {"Dropout", {1, 1, F, V * cfg_.posnorm1}},
        {"FinalLSTM", {1, 1, F, cfg_.final_width}},
        {"Softmax", {1, 1, F, cfg_.classes}},
    };
  }

  StreetConfig cfg_;
  Tensor<T> conv0_k_, conv0_b_, conv1_k_, conv1_b_;
  LstmParams<T> vsum_top_, vsum_mid_up_, vsum_mid_down_, vsum_bottom_;
  LstmParams<T> bidi_top_f_, bidi_top_r_, bidi_mid_f_, bidi_mid_r_, bidi_bot_f_, bidi_bot_r_;
  LstmParams<T> posnorm_ltr_, posnorm_rtl_, final_;
  Tensor<T> softmax_w_, softmax_b_;
  std::vector<StageShape> stages_;
};

// Converts a sign image to the model's input tensor, pixels scaled to [0,1].
template <typename T = float>
Tensor<T> image_to_tensor(const SignExample& e) {
  std::vector<T> px(e.image.size());
  for (size_t i = 0; i < e.image.size(); ++i)
    px[i] = static_cast<T>(e.image[i]) / T(255);
  return Tensor<T>({1, e.height, e.width, 3}, std::move(px));
}

// Frames needed by a label under the CTC alignment rules.
inline int64_t ctc_min_frames(std::span<const int64_t> label) {
  int64_t repeats = 0;
  for (size_t i = 1; i < label.size(); ++i)
    if (label[i] == label[i - 1]) ++repeats;
  return static_cast<int64_t>(label.size()) + repeats;
}

}  // namespace street
