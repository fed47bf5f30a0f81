#include "tsg/vlcmu.hpp"

#include <unordered_set>

#include "tsg/corpus.hpp"
#include "tsg/error.hpp"

namespace tsg {

void VlcmuConfig::validate() const {
  if (frame_dim < 1 || embed_dim < 1 || hidden < 1 || vocab_size < 1)
    throw ConfigError("vlcmu config requires positive dimensions");
}

Vlcmu::Vlcmu(ParamSet& ps, const VlcmuConfig& cfg, Rng rng, bool with_score_head) : cfg_(cfg) {
  cfg_.validate();
  const std::string p = kParamPrefix;
  vis_fwd_ = make_lstm_cell(ps, p + "vis.fwd", cfg_.frame_dim, cfg_.hidden, rng);
  vis_bwd_ = make_lstm_cell(ps, p + "vis.bwd", cfg_.frame_dim, cfg_.hidden, rng);
  embed_ = &ps.create(p + "embed", {cfg_.vocab_size, cfg_.embed_dim}, rng);
  lang_fwd_ = make_lstm_cell(ps, p + "lang.fwd", cfg_.embed_dim, cfg_.hidden, rng);
  lang_bwd_ = make_lstm_cell(ps, p + "lang.bwd", cfg_.embed_dim, cfg_.hidden, rng);
  if (with_score_head) {
    head_w_ = &ps.create(p + "head.w", {cfg_.feature_dim()}, rng);
    head_b_ = &ps.create(p + "head.b", {1}, rng);
  }
}

MatchResult Vlcmu::match(const Value& features, std::span<const int> sentence, bool track) const {
  if (features.tensor().rank() != 2 || features.shape()[1] != cfg_.frame_dim)
    throw DimensionError("vlcmu match: features " + features.tensor().shape_str() +
                         " do not match frame dim " + std::to_string(cfg_.frame_dim));

  MatchResult out;
  std::vector<int> ids(sentence.begin(), sentence.end());
  if (ids.empty()) {
    ids.push_back(kUnk);
    out.sentence_was_empty = true;
  }
  for (int t : ids) {
    if (t < 0 || t >= cfg_.vocab_size)
      throw IndexError("vlcmu match: token id " + std::to_string(t) + " outside vocabulary");
  }

  Value vis = bilstm(vis_fwd_, vis_bwd_, rows_of(features), track).summary();

  Value embed = pv(embed_, track);
  std::vector<Value> words;
  words.reserve(ids.size());
  for (int t : ids) words.push_back(row(embed, t));
  Value lang = bilstm(lang_fwd_, lang_bwd_, words, track).summary();

  out.f_vl = mul(vis, lang);
  if (head_w_) {
    out.alpha = sigmoid(add(sum(mul(pv(head_w_, track), out.f_vl)), pv(head_b_, track)));
  }
  return out;
}

int pseudo_label(std::span<const int> generated, std::span<const int> groundtruth) {
  if (groundtruth.empty()) throw DomainError("pseudo_label: empty groundtruth");
  if (generated.empty()) return 0;
  std::unordered_set<int> types;
  for (int t : groundtruth) {
    if (!is_reserved(t)) types.insert(t);
  }
  long long matches = 0;
  for (int t : generated) {
    if (!is_reserved(t) && types.count(t)) ++matches;
  }
  // strict: more than half of the generated tokens
  return 2 * matches > static_cast<long long>(generated.size()) ? 1 : 0;
}

Value vlcmu_loss(std::span<const Value> alphas, std::span<const int> eta_bar) {
  if (alphas.size() != eta_bar.size())
    throw ContractError("vlcmu_loss: " + std::to_string(alphas.size()) + " scores vs " +
                        std::to_string(eta_bar.size()) + " labels");
  if (alphas.empty()) throw DomainError("vlcmu_loss: no shots");
  std::vector<Value> terms;
  terms.reserve(alphas.size());
  for (std::size_t p = 0; p < alphas.size(); ++p)
    terms.push_back(binary_cross_entropy(alphas[p], eta_bar[p]));
  return add_n(terms);
}

}  // namespace tsg
