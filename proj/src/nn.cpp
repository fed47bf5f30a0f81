#include "tsg/nn.hpp"

#include "tsg/error.hpp"

namespace tsg {

LstmCellParams make_lstm_cell(ParamSet& ps, const std::string& prefix, int input, int hidden,
                              Rng& rng) {
  LstmCellParams p;
  p.input = input;
  p.hidden = hidden;
  p.w = &ps.create(prefix + ".w", {4 * hidden, input + hidden}, rng);
  p.b = &ps.create(prefix + ".b", {4 * hidden}, rng);
  return p;
}

LstmState lstm_zero_state(int hidden) {
  return {Value::constant(Tensor::zeros({hidden})), Value::constant(Tensor::zeros({hidden}))};
}

LstmState lstm_cell(const LstmCellParams& p, const Value& x, const LstmState& s, bool track) {
  if (x.shape() != std::vector<int>{p.input})
    throw DimensionError("lstm_cell: input shape " + x.tensor().shape_str() + " does not match [" +
                         std::to_string(p.input) + "]");
  if (s.h.shape() != std::vector<int>{p.hidden} || s.c.shape() != std::vector<int>{p.hidden})
    throw DimensionError("lstm_cell: state shape " + s.h.tensor().shape_str() + "/" +
                         s.c.tensor().shape_str() + " does not match [" +
                         std::to_string(p.hidden) + "]");
  const int H = p.hidden;
  Value z = add(matvec(pv(p.w, track), concat(x, s.h)), pv(p.b, track));
  Value i = sigmoid(slice(z, 0, H));
  Value f = sigmoid(slice(z, H, H));
  Value g = tanh_(slice(z, 2 * H, H));
  Value o = sigmoid(slice(z, 3 * H, H));
  Value c_next = add(mul(f, s.c), mul(i, g));
  Value h_next = mul(o, tanh_(c_next));
  return {h_next, c_next};
}

BiLstmParams make_bilstm(ParamSet& ps, const std::string& prefix, int input, int hidden, Rng& rng) {
  BiLstmParams p;
  p.fwd = make_lstm_cell(ps, prefix + ".fwd", input, hidden, rng);
  p.bwd = make_lstm_cell(ps, prefix + ".bwd", input, hidden, rng);
  return p;
}

BiLstmResult bilstm(const LstmCellParams& fwd, const LstmCellParams& bwd,
                    std::span<const Value> seq, bool track) {
  if (seq.empty()) throw DomainError("bilstm: empty sequence");
  const std::size_t T = seq.size();

  std::vector<Value> h_f(T), h_b(T);
  LstmState s = lstm_zero_state(fwd.hidden);
  for (std::size_t t = 0; t < T; ++t) {
    s = lstm_cell(fwd, seq[t], s, track);
    h_f[t] = s.h;
  }
  Value h_fwd_final = s.h, c_fwd_final = s.c;

  s = lstm_zero_state(bwd.hidden);
  for (std::size_t t = T; t-- > 0;) {
    s = lstm_cell(bwd, seq[t], s, track);
    h_b[t] = s.h;
  }
  Value h_bwd_final = s.h, c_bwd_final = s.c;

  BiLstmResult r;
  r.step_outputs.reserve(T);
  for (std::size_t t = 0; t < T; ++t) r.step_outputs.push_back(concat(h_f[t], h_b[t]));
  r.h_fwd = h_fwd_final;
  r.c_fwd = c_fwd_final;
  r.h_bwd = h_bwd_final;
  r.c_bwd = c_bwd_final;
  return r;
}

BiLstmResult bilstm(const BiLstmParams& p, std::span<const Value> seq, bool track) {
  return bilstm(p.fwd, p.bwd, seq, track);
}

Value BiLstmResult::summary() const {
  const Value parts[] = {h_fwd, c_fwd, h_bwd, c_bwd};
  return concat(std::span<const Value>(parts, 4));
}

std::vector<Value> rows_of(const Value& m) {
  std::vector<Value> out;
  const int T = m.shape()[0];
  out.reserve(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t) out.push_back(row(m, t));
  return out;
}

}  // namespace tsg
