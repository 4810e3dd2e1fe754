#include "semhash/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "binary_io.hpp"
#include "semhash/error.hpp"
#include "text_util.hpp"

namespace semhash {

namespace {

constexpr std::string_view kIndexMagic = "SEMHINDX";
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;
constexpr std::size_t kMaxBits = std::size_t{1} << 20;

std::uint64_t tail_mask(std::size_t bits) {
  const std::size_t r = bits % 64;
  return r == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << r) - 1;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::size_t words_for_bits(std::size_t bits) noexcept { return (bits + 63) / 64; }

BinaryCode::BinaryCode(std::size_t bits) : bits_(bits), words_(words_for_bits(bits), 0) {}

BinaryCode::BinaryCode(std::size_t bits, std::vector<std::uint64_t> words)
    : bits_(bits), words_(std::move(words)) {
  if (words_.size() != words_for_bits(bits)) {
    throw ShapeError("binary code: " + std::to_string(bits) + " bits need " +
                     std::to_string(words_for_bits(bits)) + " words, got " +
                     std::to_string(words_.size()));
  }
  if (!words_.empty() && (words_.back() & ~tail_mask(bits)) != 0) {
    throw ValidationError("binary code: padding bits past K are set");
  }
}

BinaryCode BinaryCode::from_bits(std::span<const int> bits) {
  BinaryCode c(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) c.set(k, bits[k] != 0);
  return c;
}

BinaryCode BinaryCode::from_hex(std::size_t bits, std::string_view hex) {
  if (hex.size() != (bits + 3) / 4) {
    throw ParseError("hex code: " + std::to_string(bits) + " bits need " +
                     std::to_string((bits + 3) / 4) + " digits, got " + std::to_string(hex.size()));
  }
  BinaryCode c(bits);
  for (std::size_t n = 0; n < hex.size(); ++n) {
    const int v = hex_value(hex[n]);
    if (v < 0) throw ParseError("hex code: bad digit '" + std::string(1, hex[n]) + "'");
    for (std::size_t b = 0; b < 4; ++b) {
      if (!((v >> b) & 1)) continue;
      const std::size_t k = 4 * n + b;
      if (k >= bits) throw ParseError("hex code: padding bits past K are set");
      c.set(k, true);
    }
  }
  return c;
}

bool BinaryCode::bit(std::size_t k) const {
  if (k >= bits_) throw UsageError("bit index " + std::to_string(k) + " out of range");
  return (words_[k / 64] >> (k % 64)) & 1;
}

void BinaryCode::set(std::size_t k, bool value) {
  if (k >= bits_) throw UsageError("bit index " + std::to_string(k) + " out of range");
  const std::uint64_t m = std::uint64_t{1} << (k % 64);
  if (value) {
    words_[k / 64] |= m;
  } else {
    words_[k / 64] &= ~m;
  }
}

std::string BinaryCode::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out((bits_ + 3) / 4, '0');
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::size_t k = 4 * n;
    out[n] = digits[(words_[k / 64] >> (k % 64)) & 0xf];
  }
  return out;
}

BinaryCode binarize(std::span<const double> code) {
  BinaryCode c(code.size());
  for (std::size_t k = 0; k < code.size(); ++k) {
    if (code[k] >= 0.0) c.set(k, true);
  }
  return c;
}

std::size_t hamming_distance(const BinaryCode& a, const BinaryCode& b) {
  if (a.bits() != b.bits()) {
    throw UsageError("hamming distance: code lengths differ (" + std::to_string(a.bits()) +
                     " vs " + std::to_string(b.bits()) + ")");
  }
  std::size_t d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t i = 0; i < wa.size(); ++i) d += static_cast<std::size_t>(std::popcount(wa[i] ^ wb[i]));
  return d;
}

Matrix encode_continuous(const ModelParams& params, const Matrix& inputs) {
  return hash_forward(params, encoder_forward(params, inputs).features).codes;
}

std::vector<BinaryCode> encode_binary(const ModelParams& params, const Matrix& inputs) {
  const Matrix codes = encode_continuous(params, inputs);
  std::vector<BinaryCode> out;
  out.reserve(codes.rows());
  for (std::size_t r = 0; r < codes.rows(); ++r) out.push_back(binarize(codes.row(r)));
  return out;
}

HammingIndex HammingIndex::build(std::size_t bits, std::vector<IndexEntry> entries,
                                 std::span<const BinaryCode> codes, std::uint64_t seed) {
  if (bits == 0) throw UsageError("index: K must be >= 1");
  if (entries.size() != codes.size()) {
    throw UsageError("index: " + std::to_string(entries.size()) + " entries but " +
                     std::to_string(codes.size()) + " codes");
  }
  HammingIndex index;
  index.bits_ = bits;
  index.words_per_code_ = words_for_bits(bits);
  index.seed_ = seed;
  index.arena_.reserve(codes.size() * index.words_per_code_);
  std::unordered_set<std::string_view> seen;
  seen.reserve(entries.size());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (codes[i].bits() != bits) {
      throw UsageError("index: code for '" + entries[i].id + "' has " +
                       std::to_string(codes[i].bits()) + " bits, index K is " + std::to_string(bits));
    }
    if (!seen.insert(entries[i].id).second) {
      throw ValidationError("index: duplicate id '" + entries[i].id + "'");
    }
    const auto w = codes[i].words();
    index.arena_.insert(index.arena_.end(), w.begin(), w.end());
  }
  index.entries_ = std::move(entries);
  return index;
}

BinaryCode HammingIndex::code(std::size_t position) const {
  if (position >= size()) throw UsageError("index position out of range");
  const auto* w = arena_.data() + position * words_per_code_;
  return BinaryCode(bits_, std::vector<std::uint64_t>(w, w + words_per_code_));
}

std::vector<QueryHit> HammingIndex::query(const BinaryCode& probe, std::size_t p) const {
  if (p == 0) throw UsageError("query: p must be >= 1");
  if (probe.bits() != bits_) {
    throw UsageError("query: probe has " + std::to_string(probe.bits()) + " bits, index K is " +
                     std::to_string(bits_));
  }
  const std::size_t n = size();
  std::vector<std::uint32_t> dist(n);
  const auto pw = probe.words();
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t* w = arena_.data() + i * words_per_code_;
    std::uint32_t d = 0;
    for (std::size_t k = 0; k < words_per_code_; ++k) d += static_cast<std::uint32_t>(std::popcount(w[k] ^ pw[k]));
    dist[i] = d;
  }
  // counting sort on distance keeps insertion order within a bucket
  std::vector<std::size_t> start(bits_ + 2, 0);
  for (auto d : dist) ++start[d + 1];
  for (std::size_t d = 1; d < start.size(); ++d) start[d] += start[d - 1];
  const std::size_t take = std::min(p, n);
  std::vector<QueryHit> hits(take);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t slot = start[dist[i]]++;
    if (slot < take) hits[slot] = {i, dist[i]};
  }
  return hits;
}

void write_index(std::ostream& out, const HammingIndex& index) {
  detail::BinaryWriter w(out);
  w.bytes(kIndexMagic);
  w.u32(kIndexVersion);
  w.u64(index.bits());
  w.u64(index.size());
  w.u64(index.seed());
  for (const auto& e : index.entries()) {
    w.str(e.id);
    w.str(e.item_id);
    w.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(e.class_id)));
  }
  for (std::size_t i = 0; i < index.size(); ++i) {
    const BinaryCode code = index.code(i);
    for (auto word : code.words()) w.u64(word);
  }
}

void save_index(const std::filesystem::path& path, const HammingIndex& index) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_index(out, index);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

HammingIndex read_index(std::istream& in, std::string_view source) {
  detail::BinaryReader r(in, source);
  if (r.bytes(kIndexMagic.size(), "magic") != kIndexMagic) {
    throw ParseError(std::string(source) + ": not an index file (bad magic)");
  }
  const auto version = r.u32("version");
  if (version != kIndexVersion) {
    throw IncompatibleError(std::string(source) + ": index version " + std::to_string(version) +
                            ", this build reads version " + std::to_string(kIndexVersion));
  }
  const auto bits = r.u64("K");
  const auto count = r.u64("count");
  const auto seed = r.u64("seed");
  if (bits == 0 || bits > kMaxBits) throw ParseError(r.where("K") + ": bad code length");
  if (count > kMaxCount) throw ParseError(r.where("count") + ": too large");
  std::vector<IndexEntry> entries(count);
  for (auto& e : entries) {
    e.id = r.str("id");
    e.item_id = r.str("item_id");
    e.class_id = static_cast<int>(static_cast<std::int64_t>(r.u64("class_id")));
  }
  const std::size_t wpc = words_for_bits(bits);
  std::vector<BinaryCode> codes;
  codes.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<std::uint64_t> words(wpc);
    for (auto& w : words) w = r.u64("code word");
    try {
      codes.emplace_back(bits, std::move(words));
    } catch (const Error& e) {
      throw ParseError(r.where("code " + std::to_string(i)) + ": " + e.what());
    }
  }
  r.expect_end();
  try {
    return HammingIndex::build(bits, std::move(entries), codes, seed);
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(source) + ": " + e.what());
  }
}

HammingIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index '" + path.string() + "'");
  return read_index(in, path.string());
}

void write_codes(std::ostream& out, const CodesFile& codes) {
  out << "# semhash-codes v1 K=" << codes.bits << " seed=" << codes.seed << '\n';
  for (const auto& rec : codes.records) {
    if (rec.code.bits() != codes.bits) {
      throw UsageError("codes: record '" + rec.record_id + "' has the wrong code length");
    }
    out << rec.record_id << ',' << codes.bits << ',' << rec.code.to_hex() << '\n';
  }
}

void save_codes(const std::filesystem::path& path, const CodesFile& codes) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_codes(out, codes);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

CodesFile read_codes(std::istream& in, std::string_view source) {
  const std::string src(source);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(src + ":1: empty codes file");
  CodesFile out;
  {
    const auto fields = detail::split(detail::trim(line), ' ');
    if (fields.size() != 5 || fields[0] != "#" || fields[1] != "semhash-codes") {
      throw ParseError(src + ":1: not a codes file header");
    }
    if (fields[2] != "v1") {
      throw IncompatibleError(src + ":1: codes format '" + std::string(fields[2]) +
                              "', this build reads v1");
    }
    if (fields[3].substr(0, 2) != "K=" || !detail::parse_int(fields[3].substr(2), out.bits) ||
        out.bits == 0 || out.bits > kMaxBits) {
      throw ParseError(src + ":1: bad K field");
    }
    if (fields[4].substr(0, 5) != "seed=" || !detail::parse_int(fields[4].substr(5), out.seed)) {
      throw ParseError(src + ":1: bad seed field");
    }
  }
  std::size_t line_no = 1;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    const std::string where = src + ":" + std::to_string(line_no);
    const auto fields = detail::split(text, ',');
    if (fields.size() != 3) throw ParseError(where + ": expected record_id,K,hex");
    if (!detail::valid_identifier(fields[0])) throw ParseError(where + ": bad record id");
    std::size_t k = 0;
    if (!detail::parse_int(fields[1], k) || k != out.bits) {
      throw ParseError(where + ": code length '" + std::string(fields[1]) + "' does not match K=" +
                       std::to_string(out.bits));
    }
    CodeRecord rec;
    rec.record_id = std::string(fields[0]);
    try {
      rec.code = BinaryCode::from_hex(out.bits, fields[2]);
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!seen.insert(rec.record_id).second) {
      throw ValidationError(where + ": duplicate record id '" + rec.record_id + "'");
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

CodesFile load_codes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open codes file '" + path.string() + "'");
  return read_codes(in, path.string());
}

}  // namespace semhash
