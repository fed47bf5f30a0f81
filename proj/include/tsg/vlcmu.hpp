#pragma once

#include <span>
#include <vector>

#include "tsg/nn.hpp"

namespace tsg {

struct VlcmuConfig {
  int frame_dim = 32;
  int embed_dim = 32;
  int hidden = 32;  // H_m per branch direction
  int vocab_size = 0;

  int feature_dim() const { return 4 * hidden; }  // dim of f^vl
  void validate() const;
};

struct MatchResult {
  Value alpha;  // [1], absent when built without the score head
  Value f_vl;   // [4 * H_m]
  bool sentence_was_empty = false;
};

// Visual-language content matching unit. Two bidirectional recurrent
// branches, one over frame features and one over word embeddings of the
// sentence, each summarized as concat(h_fwd, c_fwd, h_bwd, c_bwd); the two
// summaries are multiplied elementwise into f^vl, and a linear+sigmoid head
// turns f^vl into the correctness score.
class Vlcmu {
 public:
  Vlcmu(ParamSet& ps, const VlcmuConfig& cfg, Rng rng, bool with_score_head = true);

  static constexpr const char* kParamPrefix = "vlcmu.";

  const VlcmuConfig& config() const { return cfg_; }
  bool has_score_head() const { return head_w_ != nullptr; }

  // An empty sentence is scored as a single UNK token and flagged.
  MatchResult match(const Value& features, std::span<const int> sentence, bool track) const;

 private:
  VlcmuConfig cfg_;
  LstmCellParams vis_fwd_, vis_bwd_;
  Parameter* embed_;
  LstmCellParams lang_fwd_, lang_bwd_;
  Parameter* head_w_ = nullptr;  // [4 * H_m]
  Parameter* head_b_ = nullptr;  // [1]
};

// Weak pseudo-label: 1 iff strictly more than half of the generated tokens
// (counted per occurrence) have a type that occurs anywhere in the
// groundtruth. Reserved ids never match and groundtruth reserved ids are
// ignored; an empty generated sentence labels 0.
int pseudo_label(std::span<const int> generated, std::span<const int> groundtruth);

// Summed binary cross-entropy over a video's shots.
Value vlcmu_loss(std::span<const Value> alphas, std::span<const int> eta_bar);

}  // namespace tsg
