#pragma once

#include <span>
#include <string>
#include <vector>

#include "tsg/autodiff.hpp"
#include "tsg/params.hpp"

namespace tsg {

// Wraps a parameter as a graph leaf, or as a constant for no-grad passes.
inline Value pv(Parameter* p, bool track) { return Value::param(*p, track); }

// Gated recurrent cell parameters, gates packed [input; forget; cell; output]
// along the first axis of w.
struct LstmCellParams {
  Parameter* w = nullptr;  // [4H x (in + H)]
  Parameter* b = nullptr;  // [4H]
  int input = 0;
  int hidden = 0;
};

LstmCellParams make_lstm_cell(ParamSet& ps, const std::string& prefix, int input, int hidden,
                              Rng& rng);

struct LstmState {
  Value h, c;
};

LstmState lstm_zero_state(int hidden);

// One step of the conventional LSTM recurrence; differentiable through both
// outputs and all inputs.
LstmState lstm_cell(const LstmCellParams& p, const Value& x, const LstmState& s, bool track);

struct BiLstmParams {
  LstmCellParams fwd, bwd;
};

BiLstmParams make_bilstm(ParamSet& ps, const std::string& prefix, int input, int hidden, Rng& rng);

struct BiLstmResult {
  // Per step t: concat(h_fwd at t, h_bwd at t), each [2H].
  std::vector<Value> step_outputs;
  // Final states: forward after reading 1..T, backward after reading T..1.
  Value h_fwd, c_fwd, h_bwd, c_bwd;

  // concat(h_fwd, c_fwd, h_bwd, c_bwd), the [4H] sequence summary.
  Value summary() const;
};

// The forward cell reads seq front to back, the backward cell back to front.
// The two cells may share parameters (pass the same LstmCellParams twice).
BiLstmResult bilstm(const LstmCellParams& fwd, const LstmCellParams& bwd,
                    std::span<const Value> seq, bool track);
BiLstmResult bilstm(const BiLstmParams& p, std::span<const Value> seq, bool track);

// Rows of a [T x d] matrix as T rank-1 values, the usual sequence adapter.
std::vector<Value> rows_of(const Value& m);

}  // namespace tsg
