#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skillex/common.h"

namespace skillex {

using Vector = std::vector<float>;

/// Fixed-dimension vectors keyed by sentence or skill id. Keys iterate in
/// ascending byte order, which is also the on-disk record order.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& key) const { return vectors_.count(key) != 0; }

  /// Throws kDimensionMismatch, kNonFinite, kDuplicateKey, kInvalidArgument
  /// (key empty or longer than 65535 bytes).
  void add(std::string key, Vector values);

  /// nullptr when absent.
  const Vector* find(const std::string& key) const;
  /// Throws kMissingVector.
  const Vector& at(const std::string& key) const;

  const std::map<std::string, Vector>& vectors() const { return vectors_; }

  friend bool operator==(const EmbeddingStore&, const EmbeddingStore&) = default;

 private:
  std::uint32_t dim_;
  std::map<std::string, Vector> vectors_;
};

/// Binary store, little-endian:
///   "EMBS" | u32 version (1) | u32 dim | u64 count |
///   count x (u16 key_len | key bytes | dim x f32), sorted by key bytes.
void write_store(const EmbeddingStore& store, const std::string& path);

/// Throws kIo, kBadMagic, kTruncatedRecord, kDuplicateKey, kNonFinite.
EmbeddingStore read_store(const std::string& path);

inline constexpr std::uint64_t kStoreHeaderBytes = 4 + 4 + 4 + 8;

/// Signed feature hashing of character 3-5 grams (over code points of the
/// normalized text, padded with one space at each end) into `dim` buckets,
/// then L2 normalization. Bucket and sign come from one 64-bit FNV-1a hash:
/// bucket = h mod dim, sign = top bit. Throws kInvalidArgument (dim < 8) and
/// kZeroContent (text normalizes to nothing).
Vector hash_encode(std::string_view text, std::uint32_t dim);

/// dot / (|u| |v|), clamped to [-1, 1]. Throws kDimensionMismatch, kZeroNorm.
double cosine(std::span<const float> u, std::span<const float> v);

double l2_norm(std::span<const float> v);
double dot(std::span<const float> u, std::span<const float> v);

/// Supplies the vector for a sentence given its id and text.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual std::uint32_t dim() const = 0;
  virtual Vector encode(const std::string& key, std::string_view text) const = 0;
};

class HashEncoder final : public SentenceEncoder {
 public:
  explicit HashEncoder(std::uint32_t dim);
  std::uint32_t dim() const override { return dim_; }
  Vector encode(const std::string& key, std::string_view text) const override;

 private:
  std::uint32_t dim_;
};

/// Looks vectors up by key. With a fallback, keys missing from the store are
/// hash-encoded instead of raising kMissingVector.
class StoreEncoder final : public SentenceEncoder {
 public:
  StoreEncoder(const EmbeddingStore& store, bool hash_fallback = false);
  std::uint32_t dim() const override { return store_.dim(); }
  Vector encode(const std::string& key, std::string_view text) const override;

 private:
  const EmbeddingStore& store_;
  bool hash_fallback_;
};

}  // namespace skillex
