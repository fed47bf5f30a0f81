#pragma once

#include <span>
#include <vector>

#include "tsg/nn.hpp"

namespace tsg {

struct PurportConfig {
  int input_dim = 0;  // dim of the per-shot visual-language feature
  int hidden = 32;
  void validate() const;
};

// Video-level significance scorer: a bidirectional recurrent pass over the
// sequence of per-shot visual-language features, with a shared linear+sigmoid
// head on every step's output. Each score therefore conditions on the whole
// video, not just its own shot.
class PurportNet {
 public:
  PurportNet(ParamSet& ps, const PurportConfig& cfg, Rng rng);

  static constexpr const char* kParamPrefix = "purport.";

  const PurportConfig& config() const { return cfg_; }

  std::vector<Value> score_video(std::span<const Value> vl_features, bool track) const;

 private:
  PurportConfig cfg_;
  LstmCellParams fwd_, bwd_;
  Parameter* head_w_;  // [2 * hidden]
  Parameter* head_b_;  // [1]
};

// Summed binary cross-entropy against the importance flags; same algebra as
// vlcmu_loss.
Value purport_loss(std::span<const Value> betas, std::span<const int> phi);

}  // namespace tsg
