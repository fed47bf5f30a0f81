#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tsg/rng.hpp"
#include "tsg/tensor.hpp"

namespace tsg {

// Reserved vocabulary slots. Tokenization of raw text can never produce the
// reserved surface forms (angle brackets are stripped as punctuation).
inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kNumReserved = 4;

inline bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

// Lowercases ASCII, splits on whitespace, strips leading/trailing ASCII
// punctuation per token, drops empties. Bytes >= 0x80 pass through untouched.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  // Tokens with corpus frequency >= min_count, ordered by (-frequency,
  // lexicographic), after the four reserved slots.
  static Vocabulary build(const std::vector<std::vector<std::string>>& captions, int min_count);
  static Vocabulary from_tokens(std::vector<std::string> full_token_list);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  int encode_token(const std::string& tok) const;  // kUnk when absent
  std::vector<int> encode(std::span<const std::string> toks) const;
  const std::string& token(int id) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct Caption {
  std::vector<std::string> tokens;

  std::string text() const;
  bool empty() const { return tokens.empty(); }
};

struct Shot {
  int index = 0;
  Tensor features;  // [k x d]
  Caption groundtruth;
  int important = 0;  // phi
  // Generator bookkeeping, carried in sidecar files: whether the annotation
  // caption was swapped, and which latent event instance the shot belongs to.
  int corrupted = 0;
  int event_instance = -1;
};

struct Video {
  std::string id;
  std::vector<Shot> shots;
  std::vector<std::string> references;  // reference summary documents, raw text

  int num_shots() const { return static_cast<int>(shots.size()); }
};

struct Corpus {
  std::vector<Video> videos;
  std::vector<std::string> train_ids, test_ids;
  int frames_per_shot = 0;  // k
  int feature_dim = 0;      // d

  const Video* find(const std::string& id) const;
  std::vector<const Video*> split(const std::vector<std::string>& ids) const;
  std::vector<const Video*> train() const { return split(train_ids); }
  std::vector<const Video*> test() const { return split(test_ids); }
};

// Frame-feature container, magic "TSGF": u32 version=1, u32 N, u32 k, u32 d,
// then N*k*d little-endian doubles. Round-trips bit-exactly.
void save_features(const std::string& path, const Tensor& t);  // rank-3 [N x k x d]
Tensor load_features(const std::string& path);

// Corpus directory layout: features/<video>.tsgf, annotations.jsonl,
// references.jsonl, corruption.jsonl, splits.json.
void save_corpus(const std::string& dir, const Corpus& corpus);
Corpus load_corpus(const std::string& dir);

std::vector<std::vector<std::string>> groundtruth_token_lists(const Corpus& corpus,
                                                              const std::vector<const Video*>& vids);

}  // namespace tsg
