#include "tsg/purport.hpp"

#include "tsg/error.hpp"

namespace tsg {

void PurportConfig::validate() const {
  if (input_dim < 1 || hidden < 1) throw ConfigError("purport config requires positive dimensions");
}

PurportNet::PurportNet(ParamSet& ps, const PurportConfig& cfg, Rng rng) : cfg_(cfg) {
  cfg_.validate();
  const std::string p = kParamPrefix;
  fwd_ = make_lstm_cell(ps, p + "fwd", cfg_.input_dim, cfg_.hidden, rng);
  bwd_ = make_lstm_cell(ps, p + "bwd", cfg_.input_dim, cfg_.hidden, rng);
  head_w_ = &ps.create(p + "head.w", {2 * cfg_.hidden}, rng);
  head_b_ = &ps.create(p + "head.b", {1}, rng);
}

std::vector<Value> PurportNet::score_video(std::span<const Value> vl_features, bool track) const {
  if (vl_features.empty()) throw DomainError("purport score_video: empty video");
  for (const Value& f : vl_features) {
    if (f.shape() != std::vector<int>{cfg_.input_dim})
      throw DimensionError("purport score_video: feature " + f.tensor().shape_str() +
                           " does not match input dim " + std::to_string(cfg_.input_dim));
  }
  BiLstmResult r = bilstm(fwd_, bwd_, vl_features, track);
  std::vector<Value> betas;
  betas.reserve(vl_features.size());
  for (const Value& step : r.step_outputs)
    betas.push_back(sigmoid(add(sum(mul(pv(head_w_, track), step)), pv(head_b_, track))));
  return betas;
}

Value purport_loss(std::span<const Value> betas, std::span<const int> phi) {
  if (betas.size() != phi.size())
    throw ContractError("purport_loss: " + std::to_string(betas.size()) + " scores vs " +
                        std::to_string(phi.size()) + " labels");
  if (betas.empty()) throw DomainError("purport_loss: no shots");
  std::vector<Value> terms;
  terms.reserve(betas.size());
  for (std::size_t p = 0; p < betas.size(); ++p)
    terms.push_back(binary_cross_entropy(betas[p], phi[p]));
  return add_n(terms);
}

}  // namespace tsg
