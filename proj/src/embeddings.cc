#include "skillex/embeddings.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "skillex/text.h"

namespace skillex {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return static_cast<T>(v);
}

std::uint32_t float_bits(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  return bits;
}

float bits_float(std::uint32_t bits) {
  float f;
  std::memcpy(&f, &bits, sizeof(f));
  return f;
}

// Byte offsets of each code point start in a UTF-8 string, plus the end.
std::vector<std::size_t> code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) offsets.push_back(i);
  }
  offsets.push_back(s.size());
  return offsets;
}

}  // namespace

void EmbeddingStore::add(std::string key, Vector values) {
  if (key.empty() || key.size() > 0xffff) {
    throw Error(ErrorKind::kInvalidArgument,
                "store key must be 1..65535 bytes, got " + std::to_string(key.size()));
  }
  if (values.size() != dim_) {
    throw Error(ErrorKind::kDimensionMismatch,
                "key '" + key + "' has " + std::to_string(values.size()) +
                    " values, store dim is " + std::to_string(dim_));
  }
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kNonFinite, "key '" + key + "'");
    }
  }
  auto [it, inserted] = vectors_.emplace(std::move(key), std::move(values));
  if (!inserted) throw Error(ErrorKind::kDuplicateKey, "'" + it->first + "'");
}

const Vector* EmbeddingStore::find(const std::string& key) const {
  auto it = vectors_.find(key);
  return it == vectors_.end() ? nullptr : &it->second;
}

const Vector& EmbeddingStore::at(const std::string& key) const {
  const Vector* v = find(key);
  if (!v) throw Error(ErrorKind::kMissingVector, "'" + key + "'");
  return *v;
}

void write_store(const EmbeddingStore& store, const std::string& path) {
  std::string buf;
  buf.append(kMagic, 4);
  put_le<std::uint32_t>(buf, kVersion);
  put_le<std::uint32_t>(buf, store.dim());
  put_le<std::uint64_t>(buf, store.size());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (const auto& [key, values] : store.vectors()) {
    buf.clear();
    put_le<std::uint16_t>(buf, static_cast<std::uint16_t>(key.size()));
    buf += key;
    for (float v : values) put_le<std::uint32_t>(buf, float_bits(v));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for '" + path + "'");
}

EmbeddingStore read_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open store '" + path + "'");
  const std::string data((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < kStoreHeaderBytes || std::memcmp(p, kMagic, 4) != 0) {
    throw Error(ErrorKind::kBadMagic, path);
  }
  const auto version = get_le<std::uint32_t>(p + 4);
  if (version != kVersion) {
    throw Error(ErrorKind::kBadMagic,
                path + ": unsupported version " + std::to_string(version));
  }
  const auto dim = get_le<std::uint32_t>(p + 8);
  const auto count = get_le<std::uint64_t>(p + 12);
  if (dim == 0) throw Error(ErrorKind::kBadMagic, path + ": dim is 0");

  EmbeddingStore store(dim);
  std::size_t pos = kStoreHeaderBytes;
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::string where = path + " record " + std::to_string(r);
    if (data.size() - pos < 2) throw Error(ErrorKind::kTruncatedRecord, where);
    const auto key_len = get_le<std::uint16_t>(p + pos);
    pos += 2;
    const std::size_t need = key_len + std::size_t{4} * dim;
    if (data.size() - pos < need) throw Error(ErrorKind::kTruncatedRecord, where);
    std::string key(data.data() + pos, key_len);
    pos += key_len;
    Vector values(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      values[i] = bits_float(get_le<std::uint32_t>(p + pos));
      pos += 4;
    }
    for (float v : values) {
      if (!std::isfinite(v)) throw Error(ErrorKind::kNonFinite, where + " key '" + key + "'");
    }
    if (store.contains(key)) throw Error(ErrorKind::kDuplicateKey, where + " key '" + key + "'");
    store.add(std::move(key), std::move(values));
  }
  if (pos != data.size()) {
    throw Error(ErrorKind::kTruncatedRecord,
                path + ": " + std::to_string(data.size() - pos) +
                    " trailing bytes after the declared record count");
  }
  return store;
}

Vector hash_encode(std::string_view text, std::uint32_t dim) {
  if (dim < 8) {
    throw Error(ErrorKind::kInvalidArgument, "hash encoder dim must be >= 8");
  }
  const std::string form = text::normalized_form(text);
  if (form.empty()) {
    throw Error(ErrorKind::kZeroContent, "text has no tokens: '" + std::string(text) + "'");
  }
  const std::string padded = " " + form + " ";
  const auto offsets = code_point_offsets(padded);
  const std::size_t length = offsets.size() - 1;
  std::vector<double> acc(dim, 0.0);
  for (std::size_t n = 3; n <= 5; ++n) {
    for (std::size_t i = 0; i + n <= length; ++i) {
      const std::string_view gram(padded.data() + offsets[i], offsets[i + n] - offsets[i]);
      const std::uint64_t h = fnv1a64(gram);
      acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
    }
  }
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 == 0.0) {
    throw Error(ErrorKind::kZeroContent, "hashed features cancel out for '" + std::string(text) + "'");
  }
  const double norm = std::sqrt(norm2);
  Vector out(dim);
  for (std::uint32_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] / norm);
  return out;
}

double l2_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(s);
}

double dot(std::span<const float> u, std::span<const float> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    s += static_cast<double>(u[i]) * static_cast<double>(v[i]);
  }
  return s;
}

double cosine(std::span<const float> u, std::span<const float> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const double d = dot(u, v);
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::kZeroNorm, "cosine of a zero vector");
  return std::clamp(d / (nu * nv), -1.0, 1.0);
}

HashEncoder::HashEncoder(std::uint32_t dim) : dim_(dim) {
  if (dim < 8) throw Error(ErrorKind::kInvalidArgument, "hash encoder dim must be >= 8");
}

Vector HashEncoder::encode(const std::string&, std::string_view text) const {
  return hash_encode(text, dim_);
}

StoreEncoder::StoreEncoder(const EmbeddingStore& store, bool hash_fallback)
    : store_(store), hash_fallback_(hash_fallback) {}

Vector StoreEncoder::encode(const std::string& key, std::string_view text) const {
  if (const Vector* v = store_.find(key)) return *v;
  if (hash_fallback_) return hash_encode(text, store_.dim());
  throw Error(ErrorKind::kMissingVector, "no vector for '" + key + "'");
}

}  // namespace skillex
