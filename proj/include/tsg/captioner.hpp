#pragma once

#include <span>
#include <utility>
#include <vector>

#include "tsg/nn.hpp"

namespace tsg {

struct CaptionerConfig {
  int frame_dim = 32;      // d
  int frames = 6;          // k
  int encoder_hidden = 64; // H_e per direction
  int embed_dim = 32;
  int vocab_size = 0;
  int max_decode_len = 16;

  // The decoder is initialized by concatenating the encoder's final forward
  // and backward states, so its width is pinned to 2 * H_e.
  int decoder_hidden() const { return 2 * encoder_hidden; }
  void validate() const;
};

struct EncoderStates {
  Value h_fwd, c_fwd, h_bwd, c_bwd;  // each [H_e]
};

// Per-shot sentence generator: temporal attention over the k frame features,
// a bidirectional recurrent encoder, and a recurrent decoder trained with
// teacher forcing on summed token negative log-likelihood.
class Captioner {
 public:
  Captioner(ParamSet& ps, const CaptionerConfig& cfg, Rng rng);

  static constexpr const char* kParamPrefix = "captioner.";

  const CaptionerConfig& config() const { return cfg_; }

  // weights[k] = softmax of a shared scalar map of each frame;
  // weighted[i,:] = weights[i] * features[i,:].
  std::pair<Value, Value> temporal_attention(const Value& features, bool track) const;

  EncoderStates encode(const Value& weighted, bool track) const;

  // h0 = concat(h_fwd, h_bwd), c0 = concat(c_fwd, c_bwd).
  LstmState init_decoder(const EncoderStates& s) const;

  // Teacher-forced loss over BOS + tokens: sums cross-entropy of every
  // groundtruth token plus the closing EOS.
  Value caption_loss(const Value& features, std::span<const int> tokens, bool track = true) const;

  // Greedy argmax decode; stops at EOS or max_decode_len; BOS/EOS never
  // appear in the result.
  std::vector<int> decode_greedy(const Tensor& features) const;

 private:
  Value step_logits(const Value& x, LstmState& state, bool track) const;

  CaptionerConfig cfg_;
  Parameter* attn_w_;
  Parameter* attn_b_;
  LstmCellParams enc_fwd_, enc_bwd_;
  Parameter* embed_;  // [V x embed_dim]
  LstmCellParams dec_;
  Parameter* out_w_;  // [V x decoder_hidden]
  Parameter* out_b_;  // [V]
};

}  // namespace tsg
