#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "street/errors.hpp"
#include "street/text.hpp"

namespace street {

// CRC-32 (IEEE 802.3, reflected 0xEDB88320), the usual zip/png polynomial.
inline uint32_t crc32_ieee(std::span<const uint8_t> data) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : data) c = table[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

enum class FieldType : uint8_t { kBytes = 0, kInt64List = 1, kString = 2 };

// One record field: raw value bytes plus a type tag. Unknown tags are
// preserved verbatim so foreign fields survive a read/write cycle.
struct Field {
  uint8_t tag = 0;
  std::vector<uint8_t> raw;

  static Field bytes(std::vector<uint8_t> v) {
    return Field{static_cast<uint8_t>(FieldType::kBytes), std::move(v)};
  }
  static Field str(std::string_view s) {
    return Field{static_cast<uint8_t>(FieldType::kString),
                 std::vector<uint8_t>(s.begin(), s.end())};
  }
  static Field i64s(std::span<const int64_t> vals) {
    Field f{static_cast<uint8_t>(FieldType::kInt64List), {}};
    f.raw.resize(vals.size() * 8);
    for (size_t i = 0; i < vals.size(); ++i) {
      uint64_t u = static_cast<uint64_t>(vals[i]);
      for (int k = 0; k < 8; ++k) f.raw[i * 8 + k] = static_cast<uint8_t>(u >> (8 * k));
    }
    return f;
  }
  static Field i64(int64_t v) { return i64s(std::span<const int64_t>(&v, 1)); }

  std::string as_string() const { return std::string(raw.begin(), raw.end()); }

  std::vector<int64_t> as_i64s() const {
    if (raw.size() % 8 != 0) throw CorruptRecord("i64 list length not a multiple of 8");
    std::vector<int64_t> out(raw.size() / 8);
    for (size_t i = 0; i < out.size(); ++i) {
      uint64_t u = 0;
      for (int k = 7; k >= 0; --k) u = (u << 8) | raw[i * 8 + static_cast<size_t>(k)];
      out[i] = static_cast<int64_t>(u);
    }
    return out;
  }
};

// Ordered key/field list; order is preserved bit-exactly through the file.
class Record {
 public:
  void set(std::string key, Field f) {
    for (auto& [k, v] : fields_)
      if (k == key) {
        v = std::move(f);
        return;
      }
    fields_.emplace_back(std::move(key), std::move(f));
  }

  const Field* find(std::string_view key) const {
    for (const auto& [k, v] : fields_)
      if (k == key) return &v;
    return nullptr;
  }

  const Field& at(std::string_view key) const {
    const Field* f = find(key);
    if (!f) throw CorruptRecord("missing field \"" + std::string(key) + "\"");
    return *f;
  }

  bool has(std::string_view key) const { return find(key) != nullptr; }

  const std::vector<std::pair<std::string, Field>>& fields() const { return fields_; }

  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out;
    auto put16 = [&](uint16_t v) {
      out.push_back(static_cast<uint8_t>(v));
      out.push_back(static_cast<uint8_t>(v >> 8));
    };
    auto put32 = [&](uint32_t v) {
      for (int k = 0; k < 4; ++k) out.push_back(static_cast<uint8_t>(v >> (8 * k)));
    };
    put16(static_cast<uint16_t>(fields_.size()));
    for (const auto& [key, f] : fields_) {
      put16(static_cast<uint16_t>(key.size()));
      out.insert(out.end(), key.begin(), key.end());
      out.push_back(f.tag);
      put32(static_cast<uint32_t>(f.raw.size()));
      out.insert(out.end(), f.raw.begin(), f.raw.end());
    }
    return out;
  }

  static Record parse(std::span<const uint8_t> payload) {
    Record rec;
    size_t i = 0;
    auto need = [&](size_t n) {
      if (i + n > payload.size()) throw CorruptRecord("truncated payload");
    };
    auto get16 = [&]() -> uint16_t {
      need(2);
      uint16_t v = static_cast<uint16_t>(payload[i] | (payload[i + 1] << 8));
      i += 2;
      return v;
    };
    auto get32 = [&]() -> uint32_t {
      need(4);
      uint32_t v = 0;
      for (int k = 3; k >= 0; --k) v = (v << 8) | payload[i + static_cast<size_t>(k)];
      i += 4;
      return v;
    };
    const uint16_t count = get16();
    for (uint16_t f = 0; f < count; ++f) {
      const uint16_t klen = get16();
      need(klen);
      std::string key(payload.begin() + static_cast<ptrdiff_t>(i),
                      payload.begin() + static_cast<ptrdiff_t>(i + klen));
      i += klen;
      need(1);
      const uint8_t tag = payload[i++];
      const uint32_t vlen = get32();
      need(vlen);
      std::vector<uint8_t> raw(payload.begin() + static_cast<ptrdiff_t>(i),
                               payload.begin() + static_cast<ptrdiff_t>(i + vlen));
      i += vlen;
      rec.fields_.emplace_back(std::move(key), Field{tag, std::move(raw)});
    }
    if (i != payload.size()) throw CorruptRecord("trailing bytes after last field");
    return rec;
  }

 private:
  std::vector<std::pair<std::string, Field>> fields_;
};

constexpr char kRecordMagic[4] = {'F', 'S', 'N', 'L'};
constexpr uint16_t kRecordVersion = 1;

class RecordWriter {
 public:
  explicit RecordWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path + " for writing");
    out_.write(kRecordMagic, 4);
    const uint16_t v = kRecordVersion;
    put_u16(v);
  }

  void write(const Record& rec) {
    const std::vector<uint8_t> payload = rec.serialize();
    put_u32(static_cast<uint32_t>(payload.size()));
    put_u32(crc32_ieee(payload));
    out_.write(reinterpret_cast<const char*>(payload.data()),
               static_cast<std::streamsize>(payload.size()));
    if (!out_) throw IoError("write failed");
    ++count_;
  }

  size_t count() const { return count_; }

  void close() {
    out_.close();
    if (out_.fail()) throw IoError("close failed");
  }

 private:
  void put_u16(uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    out_.write(b, 2);
  }
  void put_u32(uint32_t v) {
    char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    out_.write(b, 4);
  }

  std::ofstream out_;
  size_t count_ = 0;
};

// Streaming reader; whole file is never loaded at once.
class RecordReader {
 public:
  explicit RecordReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot open " + path);
    char magic[4];
    in_.read(magic, 4);
    if (in_.gcount() != 4 || std::memcmp(magic, kRecordMagic, 4) != 0)
      throw CorruptRecord(path + ": bad magic");
    uint16_t version = 0;
    if (!get_u16(&version) || version != kRecordVersion)
      throw CorruptRecord(path + ": unsupported version");
  }

  std::optional<Record> next() {
    uint32_t len = 0;
    if (!get_u32(&len)) {
      if (in_.gcount() == 0) return std::nullopt;  // clean EOF at record boundary
      throw CorruptRecord(path_ + ": truncated record header");
    }
    uint32_t crc = 0;
    if (!get_u32(&crc)) throw CorruptRecord(path_ + ": truncated record header");
    if (len > kMaxPayload) throw CorruptRecord(path_ + ": implausible record length");
    std::vector<uint8_t> payload(len);
    in_.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(len));
    if (static_cast<uint32_t>(in_.gcount()) != len)
      throw CorruptRecord(path_ + ": truncated record body");
    if (crc32_ieee(payload) != crc)
      throw CorruptRecord(path_ + ": CRC mismatch on record " + std::to_string(index_));
    ++index_;
    return Record::parse(payload);
  }

  size_t index() const { return index_; }

 private:
  static constexpr uint32_t kMaxPayload = 1u << 30;

  bool get_u16(uint16_t* v) {
    char b[2];
    in_.read(b, 2);
    if (in_.gcount() != 2) return false;
    *v = static_cast<uint16_t>(static_cast<uint8_t>(b[0]) |
                               (static_cast<uint8_t>(b[1]) << 8));
    return true;
  }
  bool get_u32(uint32_t* v) {
    char b[4];
    in_.read(b, 4);
    if (in_.gcount() != 4) return false;
    uint32_t r = 0;
    for (int k = 3; k >= 0; --k) r = (r << 8) | static_cast<uint8_t>(b[k]);
    *v = r;
    return true;
  }

  std::ifstream in_;
  std::string path_;
  size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// the sign example record model
// ---------------------------------------------------------------------------

// One multi-view sign sample: a row of view tiles (real views first, noise
// padding after), the truth string, and its class-id encodings. lat/lon are
// generator sidecar fields used by the geographic split.
struct SignExample {
  std::string format = "RAW";          // uncompressed RGB8 raster
  std::vector<uint8_t> image;          // height x width x 3
  int width = 0;                       // tile_size * view slots
  int orig_width = 0;                  // tile_size * real views
  int height = 0;                      // tile_size
  std::string text;                    // Title-Case-folded truth
  std::vector<int64_t> class_padded;   // 37 ids, null-filled
  std::vector<int64_t> class_unpadded;
  bool has_geo = false;
  double lat = 0, lon = 0;

  int views(int tile_size) const { return orig_width / tile_size; }

  Record to_record() const {
    Record r;
    r.set("image/format", Field::str(format));
    r.set("image/encoded", Field::bytes(image));
    r.set("image/class", Field::i64s(class_padded));
    r.set("image/unpadded_class", Field::i64s(class_unpadded));
    r.set("image/width", Field::i64(width));
    r.set("image/orig_width", Field::i64(orig_width));
    r.set("image/height", Field::i64(height));
    r.set("image/text", Field::str(text));
    if (has_geo) {
      r.set("street/lat_e7", Field::i64(static_cast<int64_t>(std::llround(lat * 1e7))));
      r.set("street/lon_e7", Field::i64(static_cast<int64_t>(std::llround(lon * 1e7))));
    }
    return r;
  }

  static SignExample from_record(const Record& r) {
    SignExample e;
    e.format = r.at("image/format").as_string();
    e.image = r.at("image/encoded").raw;
    e.class_padded = r.at("image/class").as_i64s();
    e.class_unpadded = r.at("image/unpadded_class").as_i64s();
    e.width = static_cast<int>(r.at("image/width").as_i64s().at(0));
    e.orig_width = static_cast<int>(r.at("image/orig_width").as_i64s().at(0));
    e.height = static_cast<int>(r.at("image/height").as_i64s().at(0));
    e.text = r.at("image/text").as_string();
    if (r.has("street/lat_e7") && r.has("street/lon_e7")) {
      e.has_geo = true;
      e.lat = static_cast<double>(r.at("street/lat_e7").as_i64s().at(0)) * 1e-7;
      e.lon = static_cast<double>(r.at("street/lon_e7").as_i64s().at(0)) * 1e-7;
    }
    return e;
  }

  // Checks the record-model invariants for a given tile geometry.
  void validate(int tile_size, int slots, const Charset& cs) const {
    auto fail = [](const std::string& m) { throw Error("sign example: " + m); };
    if (format != "RAW") fail("format must be RAW");
    if (height != tile_size) fail("height " + std::to_string(height));
    if (width != tile_size * slots) fail("width " + std::to_string(width));
    if (orig_width <= 0 || orig_width > width || orig_width % tile_size != 0)
      fail("orig_width " + std::to_string(orig_width));
    if (static_cast<int64_t>(image.size()) != 3LL * width * height)
      fail("image byte count");
    if (class_padded.size() != static_cast<size_t>(Charset::kMaxLabelLength))
      fail("padded class length");
    LabelSeq seq = cs.encode(text);
    if (seq.unpadded.size() != class_unpadded.size() ||
        !std::equal(seq.unpadded.begin(), seq.unpadded.end(), class_unpadded.begin()))
      fail("unpadded ids do not re-encode from text");
    for (size_t i = 0; i < class_padded.size(); ++i) {
      const int64_t want = i < seq.unpadded.size() ? seq.unpadded[i] : cs.null_id();
      if (class_padded[i] != want) fail("padded ids are not null-padded unpadded ids");
    }
  }
};

inline std::vector<SignExample> read_all_examples(const std::string& path) {
  RecordReader reader(path);
  std::vector<SignExample> out;
  while (auto rec = reader.next()) out.push_back(SignExample::from_record(*rec));
  return out;
}

inline size_t write_examples(const std::string& path, std::span<const SignExample> examples) {
  RecordWriter w(path);
  for (const SignExample& e : examples) w.write(e.to_record());
  w.close();
  return w.count();
}

}  // namespace street
