#include "tsg/captioner.hpp"

#include "tsg/corpus.hpp"
#include "tsg/error.hpp"

namespace tsg {

void CaptionerConfig::validate() const {
  if (frame_dim < 1 || frames < 1 || encoder_hidden < 1 || embed_dim < 1 || vocab_size < 1)
    throw ConfigError("captioner config requires positive dimensions");
  if (max_decode_len < 2) throw ConfigError("max_decode_len must be >= 2");
  if (vocab_size <= kNumReserved) throw ConfigError("vocabulary holds only reserved tokens");
}

Captioner::Captioner(ParamSet& ps, const CaptionerConfig& cfg, Rng rng) : cfg_(cfg) {
  cfg_.validate();
  const std::string p = kParamPrefix;
  attn_w_ = &ps.create(p + "attn.w", {cfg_.frame_dim}, rng);
  attn_b_ = &ps.create(p + "attn.b", {1}, rng);
  enc_fwd_ = make_lstm_cell(ps, p + "enc.fwd", cfg_.frame_dim, cfg_.encoder_hidden, rng);
  enc_bwd_ = make_lstm_cell(ps, p + "enc.bwd", cfg_.frame_dim, cfg_.encoder_hidden, rng);
  embed_ = &ps.create(p + "embed", {cfg_.vocab_size, cfg_.embed_dim}, rng);
  dec_ = make_lstm_cell(ps, p + "dec", cfg_.embed_dim, cfg_.decoder_hidden(), rng);
  out_w_ = &ps.create(p + "out.w", {cfg_.vocab_size, cfg_.decoder_hidden()}, rng);
  out_b_ = &ps.create(p + "out.b", {cfg_.vocab_size}, rng);
}

std::pair<Value, Value> Captioner::temporal_attention(const Value& features, bool track) const {
  if (features.tensor().rank() != 2 || features.shape()[1] != cfg_.frame_dim)
    throw DimensionError("temporal_attention: features " + features.tensor().shape_str() +
                         " do not match frame dim " + std::to_string(cfg_.frame_dim));
  Value logits = add_scalar(matvec(features, pv(attn_w_, track)), pv(attn_b_, track));
  Value weights = softmax(logits);
  Value weighted = row_scale(features, weights);
  return {weights, weighted};
}

EncoderStates Captioner::encode(const Value& weighted, bool track) const {
  const std::vector<Value> steps = rows_of(weighted);
  BiLstmResult r = bilstm(enc_fwd_, enc_bwd_, steps, track);
  return {r.h_fwd, r.c_fwd, r.h_bwd, r.c_bwd};
}

LstmState Captioner::init_decoder(const EncoderStates& s) const {
  return {concat(s.h_fwd, s.h_bwd), concat(s.c_fwd, s.c_bwd)};
}

Value Captioner::step_logits(const Value& x, LstmState& state, bool track) const {
  state = lstm_cell(dec_, x, state, track);
  return add(matvec(pv(out_w_, track), state.h), pv(out_b_, track));
}

Value Captioner::caption_loss(const Value& features, std::span<const int> tokens, bool track) const {
  if (tokens.empty()) throw DomainError("caption_loss: empty groundtruth caption");
  for (int t : tokens) {
    if (t < 0 || t >= cfg_.vocab_size)
      throw IndexError("caption_loss: token id " + std::to_string(t) + " outside vocabulary");
  }
  auto [weights, weighted] = temporal_attention(features, track);
  LstmState state = init_decoder(encode(weighted, track));

  Value embed = pv(embed_, track);
  std::vector<Value> terms;
  terms.reserve(tokens.size() + 1);
  int prev = kBos;
  for (std::size_t i = 0; i <= tokens.size(); ++i) {
    const int target = i < tokens.size() ? tokens[i] : kEos;
    Value logits = step_logits(row(embed, prev), state, track);
    terms.push_back(cross_entropy_logits(logits, target));
    prev = target;
  }
  return add_n(terms);
}

std::vector<int> Captioner::decode_greedy(const Tensor& features) const {
  auto [weights, weighted] = temporal_attention(Value::constant(features), false);
  LstmState state = init_decoder(encode(weighted, false));

  Value embed = Value::param(*embed_, false);
  std::vector<int> out;
  int prev = kBos;
  for (int step = 0; step < cfg_.max_decode_len; ++step) {
    Value logits = step_logits(row(embed, prev), state, false);
    const Tensor& t = logits.tensor();
    int best = 0;
    for (int i = 1; i < t.numel(); ++i) {
      if (t.at(i) > t.at(best)) best = i;
    }
    if (best == kEos) break;
    if (best != kBos) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace tsg
