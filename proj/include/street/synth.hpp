#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "street/errors.hpp"
#include "street/records.hpp"
#include "street/rng.hpp"
#include "street/text.hpp"

namespace street {

// ---------------------------------------------------------------------------
// built-in 5x7 bitmap glyphs (scaled at render time, accents composited)
// ---------------------------------------------------------------------------

namespace glyphs {

using Rows = std::array<const char*, 7>;

inline const std::unordered_map<char, Rows>& table() {
  static const std::unordered_map<char, Rows> kGlyphs = {
      {'A', {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'B', {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."}},
      {'C', {".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."}},
      {'D', {"####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."}},
      {'E', {"#####", "#....", "#....", "####.", "#....", "#....", "#####"}},
      {'F', {"#####", "#....", "#....", "####.", "#....", "#....", "#...."}},
      {'G', {".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."}},
      {'H', {"#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"}},
      {'I', {".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'J', {"..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."}},
      {'K', {"#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"}},
      {'L', {"#....", "#....", "#....", "#....", "#....", "#....", "#####"}},
      {'M', {"#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"}},
      {'N', {"#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"}},
      {'O', {".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
      {'P', {"####.", "#...#", "#...#", "####.", "#....", "#....", "#...."}},
      {'Q', {".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"}},
      {'R', {"####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"}},
      {'S', {".###.", "#...#", "#....", ".###.", "....#", "#...#", ".###."}},
      {'T', {"#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."}},
      {'U', {"#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."}},
      {'V', {"#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
      {'W', {"#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"}},
      {'X', {"#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"}},
      {'Y', {"#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."}},
      {'Z', {"#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"}},
      {'a', {".....", ".....", ".###.", "....#", ".####", "#...#", ".####"}},
      {'b', {"#....", "#....", "####.", "#...#", "#...#", "#...#", "####."}},
      {'c', {".....", ".....", ".###.", "#....", "#....", "#...#", ".###."}},
      {'d', {"....#", "....#", ".####", "#...#", "#...#", "#...#", ".####"}},
      {'e', {".....", ".....", ".###.", "#...#", "#####", "#....", ".###."}},
      {'f', {"..##.", ".#..#", ".#...", "###..", ".#...", ".#...", ".#..."}},
      {'g', {".....", ".####", "#...#", "#...#", ".####", "....#", ".###."}},
      {'h', {"#....", "#....", "####.", "#...#", "#...#", "#...#", "#...#"}},
      {'i', {"..#..", ".....", ".##..", "..#..", "..#..", "..#..", ".###."}},
      {'j', {"...#.", ".....", "..##.", "...#.", "...#.", "#..#.", ".##.."}},
      {'k', {"#....", "#....", "#..#.", "#.#..", "##...", "#.#..", "#..#."}},
      {'l', {".##..", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'m', {".....", ".....", "##.#.", "#.#.#", "#.#.#", "#.#.#", "#.#.#"}},
      {'n', {".....", ".....", "#.##.", "##..#", "#...#", "#...#", "#...#"}},
      {'o', {".....", ".....", ".###.", "#...#", "#...#", "#...#", ".###."}},
      {'p', {".....", ".....", "####.", "#...#", "####.", "#....", "#...."}},
      {'q', {".....", ".....", ".####", "#...#", ".####", "....#", "....#"}},
      {'r', {".....", ".....", "#.##.", "##..#", "#....", "#....", "#...."}},
      {'s', {".....", ".....", ".####", "#....", ".###.", "....#", "####."}},
      {'t', {".#...", ".#...", "####.", ".#...", ".#...", ".#..#", "..##."}},
      {'u', {".....", ".....", "#...#", "#...#", "#...#", "#..##", ".##.#"}},
      {'v', {".....", ".....", "#...#", "#...#", "#...#", ".#.#.", "..#.."}},
      {'w', {".....", ".....", "#...#", "#...#", "#.#.#", "#.#.#", ".#.#."}},
      {'x', {".....", ".....", "#...#", ".#.#.", "..#..", ".#.#.", "#...#"}},
      {'y', {".....", ".....", "#...#", "#...#", ".####", "....#", ".###."}},
      {'z', {".....", ".....", "#####", "...#.", "..#..", ".#...", "#####"}},
      {'0', {".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."}},
      {'1', {"..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."}},
      {'2', {".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"}},
      {'3', {"#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."}},
      {'4', {"...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."}},
      {'5', {"#####", "#....", "####.", "....#", "....#", "#...#", ".###."}},
      {'6', {"..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."}},
      {'7', {"#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."}},
      {'8', {".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."}},
      {'9', {".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."}},
      {'\'', {"..#..", "..#..", ".....", ".....", ".....", ".....", "....."}},
      {'-', {".....", ".....", ".....", ".###.", ".....", ".....", "....."}},
      {'.', {".....", ".....", ".....", ".....", ".....", ".##..", ".##.."}},
      {',', {".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."}},
  };
  return kGlyphs;
}

enum class Accent { kNone, kAcute, kGrave, kCircumflex, kDiaeresis, kCedilla };

struct Composed {
  char base;       // glyph to draw ('?' box when unknown)
  char extra = 0;  // second glyph for ligatures (oe)
  Accent accent = Accent::kNone;
};

// Code points outside this map and the ASCII table render as a filled box;
// they still count for layout so determinism is unaffected.
inline Composed compose(char32_t cp) {
  if (cp < 0x80 && table().count(static_cast<char>(cp)))
    return {static_cast<char>(cp)};
  switch (cp) {
    case 0x00E0: return {'a', 0, Accent::kGrave};
    case 0x00C0: return {'A', 0, Accent::kGrave};
    case 0x00E2: return {'a', 0, Accent::kCircumflex};
    case 0x00C2: return {'A', 0, Accent::kCircumflex};
    case 0x00E4: return {'a', 0, Accent::kDiaeresis};
    case 0x00E7: return {'c', 0, Accent::kCedilla};
    case 0x00C7: return {'C', 0, Accent::kCedilla};
    case 0x00E9: return {'e', 0, Accent::kAcute};
    case 0x00C9: return {'E', 0, Accent::kAcute};
    case 0x00E8: return {'e', 0, Accent::kGrave};
    case 0x00C8: return {'E', 0, Accent::kGrave};
    case 0x00EA: return {'e', 0, Accent::kCircumflex};
    case 0x00CA: return {'E', 0, Accent::kCircumflex};
    case 0x00EB: return {'e', 0, Accent::kDiaeresis};
    case 0x00CB: return {'E', 0, Accent::kDiaeresis};
    case 0x00EE: return {'i', 0, Accent::kCircumflex};
    case 0x00CE: return {'I', 0, Accent::kCircumflex};
    case 0x00EF: return {'i', 0, Accent::kDiaeresis};
    case 0x00F4: return {'o', 0, Accent::kCircumflex};
    case 0x00D4: return {'O', 0, Accent::kCircumflex};
    case 0x0153: return {'o', 'e'};
    case 0x00F9: return {'u', 0, Accent::kGrave};
    case 0x00D9: return {'U', 0, Accent::kGrave};
    case 0x00FB: return {'u', 0, Accent::kCircumflex};
    case 0x00DB: return {'U', 0, Accent::kCircumflex};
    case 0x00FC: return {'u', 0, Accent::kDiaeresis};
    case 0x00FF: return {'y', 0, Accent::kDiaeresis};
    default: return {'?'};
  }
}

// width in glyph cells (oe takes two)
inline int cells(std::string_view word) {
  int n = 0;
  for (size_t i = 0; i < word.size();) n += compose(utf8::next(word, i)).extra ? 2 : 1;
  return n;
}

}  // namespace glyphs

// ---------------------------------------------------------------------------
// tiny RGB canvas
// ---------------------------------------------------------------------------

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<size_t>(w) * h * 3, 0) {}

  int width() const { return w_; }
  int height() const { return h_; }
  std::vector<uint8_t>& pixels() { return px_; }
  const std::vector<uint8_t>& pixels() const { return px_; }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    const size_t o = (static_cast<size_t>(y) * w_ + x) * 3;
    px_[o] = c.r;
    px_[o + 1] = c.g;
    px_[o + 2] = c.b;
  }

  Rgb get(int x, int y) const {
    const size_t o = (static_cast<size_t>(y) * w_ + x) * 3;
    return {px_[o], px_[o + 1], px_[o + 2]};
  }

  void fill_rect(int x0, int y0, int w, int h, Rgb c) {
    for (int y = y0; y < y0 + h; ++y)
      for (int x = x0; x < x0 + w; ++x) set(x, y, c);
  }

  void box_blur(int radius) {
    if (radius <= 0) return;
    std::vector<uint8_t> src = px_;
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        int sum[3] = {0, 0, 0}, cnt = 0;
        for (int dy = -radius; dy <= radius; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || yy < 0 || xx >= w_ || yy >= h_) continue;
            const size_t o = (static_cast<size_t>(yy) * w_ + xx) * 3;
            sum[0] += src[o];
            sum[1] += src[o + 1];
            sum[2] += src[o + 2];
            ++cnt;
          }
        const size_t o = (static_cast<size_t>(y) * w_ + x) * 3;
        for (int c = 0; c < 3; ++c)
          px_[o + static_cast<size_t>(c)] = static_cast<uint8_t>(sum[c] / cnt);
      }
  }

  void adjust(double contrast, int brightness) {
    for (uint8_t& v : px_) {
      const double adj = (static_cast<double>(v) - 128.0) * contrast + 128.0 + brightness;
      v = static_cast<uint8_t>(std::clamp(adj, 0.0, 255.0));
    }
  }

 private:
  int w_, h_;
  std::vector<uint8_t> px_;
};

inline void draw_glyph(Canvas& canvas, int x, int y, int scale, char glyph, Rgb color) {
  auto it = glyphs::table().find(glyph);
  if (it == glyphs::table().end()) {  // unknown: filled box
    canvas.fill_rect(x, y, 5 * scale, 7 * scale, color);
    return;
  }
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c)
      if (it->second[static_cast<size_t>(r)][c] == '#')
        canvas.fill_rect(x + c * scale, y + r * scale, scale, scale, color);
}

inline void draw_accent(Canvas& canvas, int x, int y, int scale, glyphs::Accent accent, Rgb color) {
  using A = glyphs::Accent;
  auto px = [&](int c, int r) { canvas.fill_rect(x + c * scale, y + r * scale, scale, scale, color); };
  switch (accent) {
    case A::kAcute:
      px(3, -2);
      px(2, -1);
      break;
    case A::kGrave:
      px(1, -2);
      px(2, -1);
      break;
    case A::kCircumflex:
      px(2, -2);
      px(1, -1);
      px(3, -1);
      break;
    case A::kDiaeresis:
      px(1, -1);
      px(3, -1);
      break;
    case A::kCedilla:
      px(2, 7);
      px(1, 8);
      break;
    case A::kNone:
      break;
  }
}

// Renders one word; returns the x just past the last glyph.
inline int draw_word(Canvas& canvas, int x, int y, int scale, std::string_view word, Rgb color) {
  size_t i = 0;
  while (i < word.size()) {
    const glyphs::Composed g = glyphs::compose(utf8::next(word, i));
    draw_glyph(canvas, x, y, scale, g.base, color);
    draw_accent(canvas, x, y, scale, g.accent, color);
    x += 6 * scale;
    if (g.extra) {
      draw_glyph(canvas, x, y, scale, g.extra, color);
      x += 6 * scale;
    }
  }
  return x;
}

// ---------------------------------------------------------------------------
// sign generator
// ---------------------------------------------------------------------------

struct SignStyle {
  int tile_size = 150;
  int slots = 4;  // view positions per image; trailing ones carry noise
  int max_lines = 3;
  int max_scale = 4;
  double distractor_prob = 0.3;
  double blur_prob = 0.35;
  double speckle = 0.05;
  double contrast_jitter = 0.2;
  int brightness_jitter = 18;
  int jitter_frac = 18;  // view offset up to tile/jitter_frac px

  void validate() const {
    if (tile_size < 16) throw ConfigError("tile_size too small to render glyphs");
    if (slots < 1) throw ConfigError("slots must be >= 1");
    if (max_lines < 1 || max_lines > 3) throw ConfigError("max_lines must be 1..3");
    if (max_scale < 1) throw ConfigError("max_scale must be >= 1 (zero-size font)");
    if (distractor_prob < 0 || distractor_prob > 1 || blur_prob < 0 || blur_prob > 1)
      throw ConfigError("probabilities must be in [0,1]");
  }
};

namespace detail {

struct TextLayout {
  int scale = 0;
  std::vector<std::string> lines;
  int width_px = 0;   // widest line
  int height_px = 0;  // all lines including accent rows and gaps
};

inline int line_width_px(std::string_view line, int scale) {
  const int cells = glyphs::cells(line);
  return cells == 0 ? 0 : (6 * cells - 1) * scale;
}

// Greedy word wrap at the largest scale that fits the available box.
inline TextLayout layout_text(const std::string& text, int avail_w, int avail_h, int max_lines,
                              int max_scale) {
  const std::vector<std::string> words = split_words(text);
  for (int scale = max_scale; scale >= 1; --scale) {
    TextLayout lay;
    lay.scale = scale;
    bool ok = true;
    std::string cur;
    for (const std::string& w : words) {
      const std::string trial = cur.empty() ? w : cur + " " + w;
      if (line_width_px(trial, scale) <= avail_w) {
        cur = trial;
        continue;
      }
      if (cur.empty()) {  // single word too wide at this scale
        ok = false;
        break;
      }
      lay.lines.push_back(cur);
      cur = w;
      if (line_width_px(cur, scale) > avail_w) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    if (!cur.empty()) lay.lines.push_back(cur);
    if (lay.lines.empty()) lay.lines.push_back("");
    if (static_cast<int>(lay.lines.size()) > max_lines) continue;
    const int nl = static_cast<int>(lay.lines.size());
    // per line: 2 accent rows + 7 glyph rows; 1 row gap between lines
    lay.height_px = (nl * 9 + (nl - 1)) * scale;
    for (const auto& l : lay.lines) lay.width_px = std::max(lay.width_px, line_width_px(l, scale));
    if (lay.height_px <= avail_h) return lay;
  }
  throw ConfigError("text \"" + text + "\" does not fit a " + std::to_string(avail_w) + "px sign");
}

inline void render_noise_tile(Canvas& canvas, int x0, int tile, Rng& rng) {
  for (int y = 0; y < tile; ++y)
    for (int x = 0; x < tile; ++x)
      canvas.set(x0 + x, y,
                 {static_cast<uint8_t>(rng.uniform_int(256)),
                  static_cast<uint8_t>(rng.uniform_int(256)),
                  static_cast<uint8_t>(rng.uniform_int(256))});
}

inline void render_view(Canvas& canvas, int x0, int tile, const std::string& text,
                        const SignStyle& style, Rng& rng) {
  // background: soft vertical gradient plus speckle
  const Rgb top{static_cast<uint8_t>(rng.uniform_range(120, 200)),
                static_cast<uint8_t>(rng.uniform_range(120, 200)),
                static_cast<uint8_t>(rng.uniform_range(120, 210))};
  const Rgb bot{static_cast<uint8_t>(rng.uniform_range(60, 150)),
                static_cast<uint8_t>(rng.uniform_range(60, 160)),
                static_cast<uint8_t>(rng.uniform_range(50, 140))};
  for (int y = 0; y < tile; ++y) {
    const double f = static_cast<double>(y) / tile;
    const Rgb c{static_cast<uint8_t>(top.r + f * (bot.r - top.r)),
                static_cast<uint8_t>(top.g + f * (bot.g - top.g)),
                static_cast<uint8_t>(top.b + f * (bot.b - top.b))};
    for (int x = 0; x < tile; ++x) canvas.set(x0 + x, y, c);
  }
  for (int y = 0; y < tile; ++y)
    for (int x = 0; x < tile; ++x)
      if (rng.uniform() < style.speckle) {
        const uint8_t v = static_cast<uint8_t>(rng.uniform_int(256));
        canvas.set(x0 + x, y, {v, v, v});
      }

  const int border = std::max(1, tile / 50);
  const int pad = std::max(1, tile / 25);
  const int margin = border + pad + 1;
  const int avail = tile - 2 * margin;

  TextLayout lay = layout_text(text, avail, avail, style.max_lines, style.max_scale);

  const int box_w = std::min(tile - 2, lay.width_px + 2 * (pad + border));
  const int box_h = std::min(tile - 2, lay.height_px + 2 * (pad + border));
  const int jit = std::max(1, tile / style.jitter_frac);
  int bx = (tile - box_w) / 2 + rng.uniform_range(-jit, jit);
  int by = (tile - box_h) / 2 + rng.uniform_range(-jit, jit);
  bx = std::clamp(bx, 0, tile - box_w);
  by = std::clamp(by, 0, tile - box_h);

  // enamel sign: light border, dark blue plate, whitish text
  const Rgb border_c{static_cast<uint8_t>(rng.uniform_range(215, 255)),
                     static_cast<uint8_t>(rng.uniform_range(215, 255)),
                     static_cast<uint8_t>(rng.uniform_range(215, 255))};
  const Rgb plate{static_cast<uint8_t>(rng.uniform_range(15, 60)),
                  static_cast<uint8_t>(rng.uniform_range(40, 90)),
                  static_cast<uint8_t>(rng.uniform_range(110, 180))};
  const Rgb ink{static_cast<uint8_t>(rng.uniform_range(225, 255)),
                static_cast<uint8_t>(rng.uniform_range(225, 255)),
                static_cast<uint8_t>(rng.uniform_range(225, 255))};
  canvas.fill_rect(x0 + bx, by, box_w, box_h, border_c);
  canvas.fill_rect(x0 + bx + border, by + border, box_w - 2 * border, box_h - 2 * border, plate);

  int ty = by + (box_h - lay.height_px) / 2 + 2 * lay.scale;  // skip accent rows
  for (const std::string& line : lay.lines) {
    const int lw = line_width_px(line, lay.scale);
    const int tx = x0 + bx + (box_w - lw) / 2;
    draw_word(canvas, tx, ty, lay.scale, line, ink);
    ty += 10 * lay.scale;
  }

  if (rng.uniform() < style.distractor_prob) {
    // small irrelevant line (district-number style), never part of the truth
    static const char* kDistractors[] = {"1er Arr", "2e Arr",  "3e Arr", "4e Arr",
                                         "D 102",   "N 7",     "Mairie", "Centre"};
    const std::string d = kDistractors[rng.uniform_int(8)];
    const int dw = line_width_px(d, 1);
    const int dy = by + box_h + 2;
    if (dy + 9 < tile && dw + 4 < tile) {
      const int dx = std::clamp(x0 + bx + (box_w - dw) / 2, x0 + 1, x0 + tile - dw - 1);
      canvas.fill_rect(dx - 2, dy, dw + 4, 11, border_c);
      draw_word(canvas, dx, dy + 2, 1, d, plate);
    }
  }

  if (rng.uniform() < style.blur_prob) {
    // crude motion/defocus stand-in: blur just this tile
    Canvas tile_view(tile, tile);
    for (int y = 0; y < tile; ++y)
      for (int x = 0; x < tile; ++x) tile_view.set(x, y, canvas.get(x0 + x, y));
    tile_view.box_blur(1);
    for (int y = 0; y < tile; ++y)
      for (int x = 0; x < tile; ++x) canvas.set(x0 + x, y, tile_view.get(x, y));
  }

  // per-view exposure variation
  Canvas tile_view(tile, tile);
  const double contrast = 1.0 + rng.uniform(-style.contrast_jitter, style.contrast_jitter);
  const int brightness = rng.uniform_range(-style.brightness_jitter, style.brightness_jitter);
  for (int y = 0; y < tile; ++y)
    for (int x = 0; x < tile; ++x) tile_view.set(x, y, canvas.get(x0 + x, y));
  tile_view.adjust(contrast, brightness);
  for (int y = 0; y < tile; ++y)
    for (int x = 0; x < tile; ++x) canvas.set(x0 + x, y, tile_view.get(x, y));
}

}  // namespace detail

// Deterministic multi-view sign sample. Same (seed, name, n_views, style)
// always yields byte-identical output. The truth is stored Title-Case-folded
// and must encode to at most 37 ids.
inline SignExample synth_sign(uint64_t seed, const std::string& name, int n_views,
                              const SignStyle& style, const Charset& cs) {
  style.validate();
  if (n_views < 1 || n_views > style.slots)
    throw ConfigError("n_views " + std::to_string(n_views) + " outside 1.." +
                      std::to_string(style.slots));
  const std::string truth = title_case_fold(name);
  const LabelSeq seq = cs.encode(truth);  // throws UnencodableChar / TooLong

  const int tile = style.tile_size;
  Canvas canvas(tile * style.slots, tile);
  for (int v = 0; v < n_views; ++v) {
    Rng rng(derive_seed(seed, "view", static_cast<uint64_t>(v)));
    detail::render_view(canvas, v * tile, tile, truth, style, rng);
  }
  for (int s = n_views; s < style.slots; ++s) {
    Rng rng(derive_seed(seed, "noise", static_cast<uint64_t>(s)));
    detail::render_noise_tile(canvas, s * tile, tile, rng);
  }

  SignExample e;
  e.image = canvas.pixels();
  e.width = tile * style.slots;
  e.height = tile;
  e.orig_width = tile * n_views;
  e.text = truth;
  e.class_unpadded.assign(seq.unpadded.begin(), seq.unpadded.end());
  e.class_padded.assign(seq.padded.begin(), seq.padded.end());
  return e;
}

// ---------------------------------------------------------------------------
// built-in naming vocabulary for the CLI generator
// ---------------------------------------------------------------------------

inline std::string random_street_name(Rng& rng) {
  static const char* kTypes[] = {"RUE",    "AVENUE", "IMPASSE", "PLACE",  "ALLEE",
                                 "CHEMIN", "ROUTE",  "PASSAGE", "SQUARE", "BOULEVARD"};
  static const char* kLinks[] = {"DE",    "DU",    "DES",   "DE LA", "D'",
                                 "DE L'", "",      "",      "SOUS LE", "SUR LA"};
  static const char* kNouns[] = {
      "GARE",     "EGLISE",   "MOULIN",  "LILAS",    "PORT",    "PONT",     "ECOLE",
      "CHATEAU",  "FONTAINE", "MARCHE",  "CHAMPS",   "PRES",    "FORGE",    "PUITS",
      "VERGER",   "TILLEULS", "ACACIAS", "PLATANES", "ROSIERS", "LAVOIR",   "CALVAIRE",
      "VIGNES",   "SAULES",   "CEDRES",  "ORMEAUX",  "NOYERS",  "CHENES",   "PEUPLIERS",
      "SOURCES",  "TERRASSES"};
  static const char* kPeople[] = {"VICTOR HUGO",  "JEAN JAURES", "PASTEUR",
                                  "CLEMENCEAU",   "EMILE ZOLA",  "JULES FERRY",
                                  "SAINT-MICHEL", "VOLTAIRE",    "LAMARTINE"};
  std::string name = kTypes[rng.uniform_int(10)];
  if (rng.uniform() < 0.25) {
    name += " ";
    name += kPeople[rng.uniform_int(9)];
  } else {
    const std::string link = kLinks[rng.uniform_int(10)];
    name += " ";
    if (!link.empty()) {
      name += link;
      if (link.back() != '\'') name += " ";
    }
    name += kNouns[rng.uniform_int(30)];
  }
  return title_case_fold(name);
}

// Synthetic charset following the sign conventions: space first, null last.
inline Charset default_charset() {
  std::vector<std::pair<int, std::string>> entries;
  int id = 0;
  entries.emplace_back(id++, " ");
  for (char c = 'A'; c <= 'Z'; ++c) entries.emplace_back(id++, std::string(1, c));
  for (char c = 'a'; c <= 'z'; ++c) entries.emplace_back(id++, std::string(1, c));
  for (char c = '0'; c <= '9'; ++c) entries.emplace_back(id++, std::string(1, c));
  static const char* kAccents[] = {"à", "À", "â", "Â", "ä", "ç", "Ç", "é", "É",
                                   "è", "È", "ê", "Ê", "ë", "Ë", "î", "Î", "ï",
                                   "ô", "Ô", "œ", "ù", "Ù", "û", "Û", "ü", "ÿ"};
  for (const char* a : kAccents) entries.emplace_back(id++, a);
  for (const char* p : {"'", "-", ".", ","}) entries.emplace_back(id++, p);
  entries.emplace_back(id++, "<null>");
  return Charset::from_entries(entries);
}

// 16-class charset for desk-scale presets: space, a few letters, null last.
inline Charset mini_charset() {
  std::vector<std::pair<int, std::string>> entries;
  int id = 0;
  for (const char* s :
       {" ", "R", "u", "e", "L", "G", "i", "n", "o", "s", "a", "r", "d", "t", "l"})
    entries.emplace_back(id++, s);
  entries.emplace_back(id++, "<null>");
  return Charset::from_entries(entries);
}

}  // namespace street
