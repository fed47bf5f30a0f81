// End-to-end acceptance suite. Each test case covers one criterion and
// prints a single PASS/FAIL line; doctest assertions carry the details.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "gradcheck.hpp"
#include "tsg/error.hpp"
#include "tsg/metrics.hpp"
#include "tsg/peaks.hpp"
#include "tsg/pipeline.hpp"
#include "tsg/synthetic.hpp"

using namespace tsg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

void report(int criterion, bool pass, const std::string& details) {
  std::printf("[criterion %d] %s - %s\n", criterion, pass ? "PASS" : "FAIL", details.c_str());
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

fs::path scratch(const char* name) {
  fs::path p = fs::temp_directory_path() / (std::string("tsg_acc_") + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ------------------------------------------------------- shared fixtures --

struct Run {
  Corpus corpus;
  Vocabulary vocab;
  std::unique_ptr<Model> model;
  std::vector<PretrainLogEntry> pretrain_log;
  std::vector<JointLogEntry> joint_log;
  double pretrain_seconds = 0.0;
};

Run train_run(const SyntheticSpec& spec, const ModelSpec& mspec_in, const TrainConfig& tcfg) {
  Run r{generate_synthetic(spec), {}, nullptr, {}, {}, 0.0};
  r.vocab = Vocabulary::build(groundtruth_token_lists(r.corpus, r.corpus.train()), 1);
  ModelSpec mspec = mspec_in;
  mspec.captioner.frame_dim = r.corpus.feature_dim;
  mspec.captioner.frames = r.corpus.frames_per_shot;
  r.model = std::make_unique<Model>(mspec, tcfg, r.vocab);
  const auto t0 = Clock::now();
  r.pretrain_log = pretrain_captioner(*r.model, r.corpus);
  r.pretrain_seconds = seconds_since(t0);
  if (tcfg.joint_epochs > 0) r.joint_log = train_joint(*r.model, r.corpus);
  return r;
}

SyntheticSpec default_spec() {
  SyntheticSpec spec;  // the documented defaults: E=8, d=32, k=6, 20+4 videos, 60 shots
  spec.seed = 20250809;
  return spec;
}

TrainConfig default_train(std::uint64_t seed) {
  TrainConfig t;
  t.seed = seed;
  t.pretrain_epochs = 12;
  t.joint_epochs = 10;
  t.pretrain_lr = 3e-3;
  t.joint_lr = 3e-3;
  return t;
}

// Criterion 5 and 7 share one fully trained default-corpus model.
Run& default_run() {
  static Run r = [] {
    omp_set_num_threads(1);  // the runtime bound is a single-threaded contract
    return train_run(default_spec(), ModelSpec{}, default_train(11));
  }();
  return r;
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  // Mann-Whitney with midranks for ties; positives are label 1.
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    i = j + 1;
  }
  double r1 = 0.0;
  long long n1 = 0, n0 = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == 1) {
      r1 += rank[k];
      ++n1;
    } else {
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) return 0.5;
  const double u = r1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
  return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

}  // namespace

// ---------------------------------------------------------- criterion 1 --

TEST_CASE("criterion 1: gradient suite") {
  const auto t0 = Clock::now();
  double worst = 0.0;
  auto upd = [&](double e) { worst = std::max(worst, e); };

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, "acc1");
    const int m = 1 + static_cast<int>(rng.next_below(8));
    const int n = 1 + static_cast<int>(rng.next_below(8));
    const int p = 1 + static_cast<int>(rng.next_below(8));

    // primitive ops
    Tensor A = gradcheck::random_tensor({m, n}, rng);
    Tensor B = gradcheck::random_tensor({n, p}, rng);
    Tensor x = gradcheck::random_tensor({n}, rng);
    Tensor w = gradcheck::random_tensor({m}, rng);
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return sum(tanh_(matmul(v, Value::constant(B)))); }, A));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return sum(sigmoid(matvec(Value::constant(A), v))); }, x));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return sum(mul(softmax(v), tanh_(v))); }, x));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return sum(tanh_(row_scale(Value::constant(A), v))); }, w));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return cross_entropy_logits(v, static_cast<int>(seed % n)); }, x));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return binary_cross_entropy(sigmoid(sum(v)), static_cast<int>(seed % 2)); },
        w));
    upd(gradcheck::max_input_grad_err(
        [&](const Value& v) { return sum(tanh_(mean_rows(v))); }, A));

    // lstm / bilstm
    {
      ParamSet ps;
      LstmCellParams cell = make_lstm_cell(ps, "c", 3, 3, rng);
      Tensor x1 = gradcheck::random_tensor({3}, rng);
      Tensor x2 = gradcheck::random_tensor({3}, rng);
      upd(gradcheck::max_param_grad_err(
          [&] {
            LstmState s = lstm_cell(cell, Value::constant(x1), lstm_zero_state(3), true);
            s = lstm_cell(cell, Value::constant(x2), s, true);
            return sum(mul(s.h, tanh_(s.c)));
          },
          ps));
    }

    // caption loss L^c over every captioner parameter and the raw features
    CaptionerConfig ccfg;
    ccfg.frame_dim = 3;
    ccfg.frames = 2;
    ccfg.encoder_hidden = 2;
    ccfg.embed_dim = 2;
    ccfg.vocab_size = 7;
    ccfg.max_decode_len = 4;
    {
      ParamSet ps;
      Captioner cap(ps, ccfg, Rng(seed, "acc1.cap"));
      Tensor f = gradcheck::random_tensor({2, 3}, rng);
      const std::vector<int> sent{4, static_cast<int>(4 + seed % 3)};
      upd(gradcheck::max_param_grad_err(
          [&] { return cap.caption_loss(Value::constant(f), sent); }, ps));
      upd(gradcheck::max_input_grad_err(
          [&](const Value& v) { return cap.caption_loss(v, sent); }, f));
    }

    // L^eta, L^phi, and the joint objective with a frozen captioner
    {
      ParamSet ps;
      Captioner cap(ps, ccfg, Rng(seed, "acc1.cap2"));
      VlcmuConfig vcfg;
      vcfg.frame_dim = 3;
      vcfg.embed_dim = 2;
      vcfg.hidden = 2;
      vcfg.vocab_size = 7;
      Vlcmu unit(ps, vcfg, Rng(seed, "acc1.vl"));
      PurportConfig pcfg;
      pcfg.input_dim = vcfg.feature_dim();
      pcfg.hidden = 2;
      PurportNet net(ps, pcfg, Rng(seed, "acc1.pp"));
      ps.set_frozen(Captioner::kParamPrefix, true);

      Tensor f1 = gradcheck::random_tensor({2, 3}, rng);
      Tensor f2 = gradcheck::random_tensor({2, 3}, rng);
      const std::vector<int> s1 = cap.decode_greedy(f1);
      const std::vector<int> s2 = cap.decode_greedy(f2);
      const int eta[] = {1, 0};
      const int phi[] = {0, 1};

      auto joint = [&] {
        MatchResult m1 = unit.match(Value::constant(f1), s1, true);
        MatchResult m2 = unit.match(Value::constant(f2), s2, true);
        const Value alphas[] = {m1.alpha, m2.alpha};
        const Value feats[] = {m1.f_vl, m2.f_vl};
        const auto betas = net.score_video(feats, true);
        return add(scale(vlcmu_loss(alphas, eta), 0.7), scale(purport_loss(betas, phi), 1.3));
      };
      upd(gradcheck::max_param_grad_err(joint, ps));

      // the frozen captioner contributes no gradient on the joint path
      ps.zero_grads();
      backward(joint());
      double frozen_grad = 0.0;
      for (const Parameter* pp : ps.all()) {
        if (pp->name.rfind("captioner.", 0) != 0) continue;
        for (double g : pp->grad) frozen_grad += std::abs(g);
      }
      CHECK(frozen_grad == 0.0);
      ps.zero_grads();
    }
  }

  const double elapsed = seconds_since(t0);
  const bool pass = worst < 1e-4 && elapsed < 60.0;
  report(1, pass, "max relative error " + std::to_string(worst) + ", " + std::to_string(elapsed) +
                      " s (< 60 s)");
  CHECK(worst < 1e-4);
  CHECK(elapsed < 60.0);
}

// ---------------------------------------------------------- criterion 2 --

namespace {
int nested_loop_label(const std::vector<int>& gen, const std::vector<int>& gt) {
  if (gen.empty()) return 0;
  long long matches = 0;
  for (int g : gen) {
    if (is_reserved(g)) continue;
    bool found = false;
    for (int t : gt)
      if (!is_reserved(t) && t == g) found = true;
    if (found) ++matches;
  }
  return 2 * matches > static_cast<long long>(gen.size()) ? 1 : 0;
}
}  // namespace

TEST_CASE("criterion 2: pseudo-label oracle") {
  Rng rng(2, "acc2");
  int disagreements = 0;
  int checked = 0;

  // 1000 random pairs, lengths 1..12 over a 10-token vocabulary
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<int> gen, gt;
    const int ng = 1 + static_cast<int>(rng.next_below(12));
    const int nt = 1 + static_cast<int>(rng.next_below(12));
    for (int i = 0; i < ng; ++i) gen.push_back(4 + static_cast<int>(rng.next_below(10)));
    for (int i = 0; i < nt; ++i) gt.push_back(4 + static_cast<int>(rng.next_below(10)));
    if (pseudo_label(gen, gt) != nested_loop_label(gen, gt)) ++disagreements;
    ++checked;
  }

  // exact-half boundaries: n/2 matches must label 0, n/2 + 1 must label 1
  for (int n = 2; n <= 12; n += 2) {
    std::vector<int> gt{4, 5, 6, 7, 8, 9};
    for (int extra = 0; extra <= 1; ++extra) {
      std::vector<int> gen;
      const int match_count = n / 2 + extra;
      for (int i = 0; i < match_count; ++i) gen.push_back(gt[static_cast<std::size_t>(i % 6)]);
      while (static_cast<int>(gen.size()) < n) gen.push_back(100 + static_cast<int>(gen.size()));
      const int got = pseudo_label(gen, gt);
      if (got != extra) ++disagreements;
      if (got != nested_loop_label(gen, gt)) ++disagreements;
      ++checked;
    }
  }

  report(2, disagreements == 0,
         std::to_string(checked) + " pairs incl. half boundaries, " + std::to_string(disagreements) +
             " disagreements");
  CHECK(disagreements == 0);
}

// ---------------------------------------------------------- criterion 3 --

TEST_CASE("criterion 3: peak-inference invariants") {
  Rng rng(3, "acc3");
  bool ok = true;
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(500));
    std::vector<double> series(static_cast<std::size_t>(n));
    const bool plateau_prone = trial % 4 == 0;
    for (double& v : series)
      v = plateau_prone ? static_cast<double>(rng.next_below(5)) : rng.next_double();

    std::vector<int> prev(series.size());
    std::iota(prev.begin(), prev.end(), 0);
    for (int pass = 1; pass <= 4; ++pass) {
      const auto survivors = iterate_inference(series, pass);
      ok = ok && !survivors.empty() && std::is_sorted(survivors.begin(), survivors.end());
      std::set<int> prev_set(prev.begin(), prev.end());
      for (int idx : survivors) ok = ok && prev_set.count(idx) == 1;
      if (survivors.size() > 1) {
        std::vector<int> pos;
        for (int idx : survivors)
          pos.push_back(static_cast<int>(std::lower_bound(prev.begin(), prev.end(), idx) - prev.begin()));
        for (std::size_t i = 1; i < pos.size(); ++i) ok = ok && pos[i] - pos[i - 1] >= 2;
      }
      ok = ok && survivors.size() <= std::max<std::size_t>((prev.size() + 1) / 2, 1);
      prev = survivors;
    }
  }

  std::vector<double> big(3000);
  for (double& v : big) v = rng.next_double();
  const auto survivors = iterate_inference(big, 4);
  const bool bound_ok = survivors.size() <= 188 && !survivors.empty();

  report(3, ok && bound_ok,
         "1000 random series clean; 3000-shot 4-pass survivors = " + std::to_string(survivors.size()) +
             " (<= 188)");
  CHECK(ok);
  CHECK(bound_ok);
}

// ---------------------------------------------------------- criterion 4 --

namespace {

// Exhaustive brute-force LCS over every pair of 3-token sequences of length
// 1..8. Candidate subsequences are enumerated once per sequence, longest
// first; the first one embedded in the reference is a maximum-length common
// subsequence.
struct PackedSeq {
  std::vector<int> toks;
  // distinct subsequences, packed 2 bits per token, sorted by length desc
  std::vector<std::pair<std::uint32_t, int>> subseqs;
};

std::vector<PackedSeq> enumerate_sequences() {
  std::vector<PackedSeq> all;
  for (int len = 1; len <= 8; ++len) {
    const long long count = 1LL << (2 * len);  // 4^len upper bound, filter to 3 tokens
    for (long long code = 0; code < count; ++code) {
      std::vector<int> toks(static_cast<std::size_t>(len));
      bool valid = true;
      for (int i = 0; i < len && valid; ++i) {
        const int t = static_cast<int>((code >> (2 * i)) & 3);
        valid = t < 3;
        toks[static_cast<std::size_t>(i)] = t;
      }
      if (!valid) continue;
      PackedSeq ps;
      ps.toks = std::move(toks);
      std::set<std::pair<int, std::uint32_t>> dedup;  // (-len, packed)
      for (int mask = 1; mask < (1 << len); ++mask) {
        std::uint32_t packed = 0;
        int l = 0;
        for (int i = 0; i < len; ++i) {
          if (mask & (1 << i)) {
            packed |= static_cast<std::uint32_t>(ps.toks[static_cast<std::size_t>(i)]) << (2 * l);
            ++l;
          }
        }
        dedup.emplace(-l, packed);
      }
      for (const auto& [neg_len, packed] : dedup) ps.subseqs.emplace_back(packed, -neg_len);
      all.push_back(std::move(ps));
    }
  }
  return all;
}

int dp_lcs_from_prf(const std::vector<int>& a, const std::vector<int>& b) {
  const PRF r = rouge_l(std::span<const int>(a), std::span<const int>(b));
  return static_cast<int>(std::llround(r.precision * static_cast<double>(a.size())));
}

}  // namespace

TEST_CASE("criterion 4: metric oracles") {
  const auto t0 = Clock::now();

  // ROUGE-L vs brute force, exhaustive
  const auto seqs = enumerate_sequences();
  long long mismatches = 0;
  long long pairs = 0;
#pragma omp parallel for schedule(dynamic, 16) reduction(+ : mismatches, pairs)
  for (std::size_t bi = 0; bi < seqs.size(); ++bi) {
    const auto& b = seqs[bi];
    const int blen = static_cast<int>(b.toks.size());
    // next-occurrence table for the reference
    int nxt[9][3];
    for (int c = 0; c < 3; ++c) nxt[blen][c] = blen;
    for (int pos = blen - 1; pos >= 0; --pos) {
      for (int c = 0; c < 3; ++c) nxt[pos][c] = nxt[pos + 1][c];
      nxt[pos][b.toks[static_cast<std::size_t>(pos)]] = pos;
    }
    for (std::size_t ai = bi; ai < seqs.size(); ++ai) {
      const auto& a = seqs[ai];
      int brute = 0;
      for (const auto& [packed, len] : a.subseqs) {
        int pos = 0;
        bool fits = true;
        for (int i = 0; i < len && fits; ++i) {
          const int tok = static_cast<int>((packed >> (2 * i)) & 3);
          pos = nxt[pos][tok];
          fits = pos < blen;
          ++pos;
        }
        if (fits) {
          brute = len;
          break;
        }
      }
      const int dp = dp_lcs_from_prf(a.toks, b.toks);
      const int dp_sym = dp_lcs_from_prf(b.toks, a.toks);
      if (dp != brute || dp_sym != brute) ++mismatches;
      ++pairs;
    }
  }
  const bool lcs_ok = mismatches == 0;

  // ROUGE-SU4 vs brute-force unit enumeration, 500 random pairs
  Rng rng(4, "acc4");
  int su4_bad = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<int> a, b;
    const int na = 1 + static_cast<int>(rng.next_below(7));
    const int nb = 1 + static_cast<int>(rng.next_below(7));
    for (int i = 0; i < na; ++i) a.push_back(static_cast<int>(rng.next_below(4)));
    for (int i = 0; i < nb; ++i) b.push_back(static_cast<int>(rng.next_below(4)));

    std::map<std::string, int> ua, ub;
    auto count_units = [](const std::vector<int>& s, std::map<std::string, int>& units) {
      for (std::size_t i = 0; i < s.size(); ++i) {
        ++units["u" + std::to_string(s[i])];
        for (std::size_t j = i + 1; j < s.size() && j - i - 1 <= 4; ++j)
          ++units["b" + std::to_string(s[i]) + "_" + std::to_string(s[j])];
      }
    };
    count_units(a, ua);
    count_units(b, ub);
    long long overlap = 0, ta = 0, tb = 0;
    for (const auto& [k, n] : ua) {
      ta += n;
      auto it = ub.find(k);
      if (it != ub.end()) overlap += std::min(n, it->second);
    }
    for (const auto& [k, n] : ub) tb += n;
    const PRF got = rouge_su4(std::span<const int>(a), std::span<const int>(b));
    const double ep = static_cast<double>(overlap) / static_cast<double>(ta);
    const double er = static_cast<double>(overlap) / static_cast<double>(tb);
    if (std::abs(got.precision - ep) > 1e-12 || std::abs(got.recall - er) > 1e-12 ||
        std::abs(got.f1 - f1_of(ep, er)) > 1e-12)
      ++su4_bad;
  }
  const bool su4_ok = su4_bad == 0;

  // BLEU2 hand-derived examples at 1e-9
  auto toks = [](std::initializer_list<const char*> xs) {
    std::vector<std::string> out;
    for (const char* x : xs) out.emplace_back(x);
    return out;
  };
  const std::vector<std::vector<std::string>> c1{toks({"the", "cat"})};
  const std::vector<std::vector<std::string>> r1{toks({"the", "cat", "sat"})};
  const double b1 = bleu2(std::span<const std::vector<std::string>>(c1),
                          std::span<const std::vector<std::string>>(r1));
  const std::vector<std::vector<std::string>> c2{toks({"a", "b", "c"}), toks({"x", "y"})};
  const double b2 = bleu2(std::span<const std::vector<std::string>>(c2),
                          std::span<const std::vector<std::string>>(c2));
  const std::vector<std::vector<std::string>> c3{toks({"a", "b"})};
  const std::vector<std::vector<std::string>> r3{toks({"a", "x"})};
  const double b3 = bleu2(std::span<const std::vector<std::string>>(c3),
                          std::span<const std::vector<std::string>>(r3));
  const bool bleu_ok = std::abs(b1 - std::exp(-0.5)) < 1e-9 && std::abs(b2 - 1.0) < 1e-9 &&
                       std::abs(b3 - std::sqrt(0.5e-9)) < 1e-9;

  report(4, lcs_ok && su4_ok && bleu_ok,
         "LCS exhaustive over " + std::to_string(pairs) + " pairs (" + std::to_string(mismatches) +
             " mismatches), SU4 500 pairs (" + std::to_string(su4_bad) + " bad), BLEU2 to 1e-9, " +
             std::to_string(seconds_since(t0)) + " s");
  CHECK(lcs_ok);
  CHECK(su4_ok);
  CHECK(bleu_ok);
}

// ---------------------------------------------------------- criterion 5 --

TEST_CASE("criterion 5: captioner learning on the default corpus") {
  Run& run = default_run();

  const double initial = run.pretrain_log.front().train_loss;
  const double final_loss = run.pretrain_log.back().train_loss;
  const double reduction = 1.0 - final_loss / initial;

  long long exact = 0, total = 0;
  for (const Video* v : run.corpus.test()) {
    for (const Shot& s : v->shots) {
      const auto decoded = run.model->captioner->decode_greedy(s.features);
      if (decoded == run.vocab.encode(s.groundtruth.tokens)) ++exact;
      ++total;
    }
  }
  const double exact_rate = static_cast<double>(exact) / static_cast<double>(total);

  const bool pass = reduction >= 0.9 && exact_rate >= 0.8 && run.pretrain_seconds < 600.0 &&
                    run.vocab.size() <= 60;
  report(5, pass,
         "loss " + std::to_string(initial) + " -> " + std::to_string(final_loss) + " (" +
             std::to_string(reduction * 100) + "% drop), exact-match " +
             std::to_string(exact_rate * 100) + "% on " + std::to_string(total) +
             " held-out shots, vocab " + std::to_string(run.vocab.size()) + ", pretrain " +
             std::to_string(run.pretrain_seconds) + " s");
  CHECK(reduction >= 0.9);
  CHECK(exact_rate >= 0.8);
  CHECK(run.pretrain_seconds < 600.0);
}

// ---------------------------------------------------------- criterion 6 --

TEST_CASE("criterion 6: matching-unit discrimination under caption corruption") {
  SyntheticSpec spec = default_spec();
  spec.seed = 606;
  spec.corruption_rate = 0.3;
  spec.noise_sigma = 0.8;  // confusable events so the captioner errs sometimes
  spec.train_videos = 16;
  spec.test_videos = 4;

  Run run = train_run(spec, ModelSpec{}, default_train(66));

  // Score every held-out annotated caption against its shot's features; the
  // corrupted/clean labels are known by construction.
  std::vector<double> scores;
  std::vector<int> labels;  // 1 = clean
  for (const Video* v : run.corpus.test()) {
    for (const Shot& s : v->shots) {
      const auto ids = run.vocab.encode(s.groundtruth.tokens);
      MatchResult m = run.model->vlcmu->match(Value::constant(s.features), ids, false);
      scores.push_back(m.alpha.item());
      labels.push_back(s.corrupted ? 0 : 1);
    }
  }
  const double auc = roc_auc(scores, labels);
  long long corrupted = 0;
  for (int l : labels) corrupted += l == 0 ? 1 : 0;

  const bool pass = auc >= 0.9;
  report(6, pass,
         "ROC-AUC " + std::to_string(auc) + " over " + std::to_string(labels.size()) +
             " validation shots (" + std::to_string(corrupted) + " corrupted)");
  CHECK(auc >= 0.9);
}

// ---------------------------------------------------------- criterion 7 --

TEST_CASE("criterion 7: synopsis covers important events far better than chance") {
  Run& run = default_run();

  double model_recall_sum = 0.0, baseline_recall_sum = 0.0;
  int videos = 0;
  Rng rng(7, "acc7");
  for (const Video* v : run.corpus.test()) {
    // important event instances and their shot extents, by construction
    std::map<int, std::vector<int>> instances;  // instance id -> shots
    std::set<int> important_instances;
    for (const Shot& s : v->shots) {
      instances[s.event_instance].push_back(s.index);
      if (s.important) important_instances.insert(s.event_instance);
    }
    if (important_instances.empty()) continue;

    Synopsis syn = assemble_synopsis(*run.model, *v, 4);
    std::set<int> selected;
    for (const auto& e : syn.entries) selected.insert(e.shot);

    auto recall_of = [&](const std::set<int>& shots) {
      int covered = 0;
      for (int inst : important_instances) {
        bool hit = false;
        for (int shot : instances[inst]) hit = hit || shots.count(shot) > 0;
        if (hit) ++covered;
      }
      return static_cast<double>(covered) / static_cast<double>(important_instances.size());
    };

    model_recall_sum += recall_of(selected);

    // 1000 random subsets of equal size, paired per video
    double baseline = 0.0;
    const std::size_t size = selected.size();
    for (int sample = 0; sample < 1000; ++sample) {
      std::vector<int> pool(static_cast<std::size_t>(v->num_shots()));
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.next_below(i)]);
      baseline += recall_of(std::set<int>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size)));
    }
    baseline_recall_sum += baseline / 1000.0;
    ++videos;
  }

  const double model_recall = model_recall_sum / videos;
  const double baseline_recall = baseline_recall_sum / videos;
  const bool pass = model_recall >= 2.0 * baseline_recall;
  report(7, pass,
         "important-event recall " + std::to_string(model_recall) + " vs random baseline " +
             std::to_string(baseline_recall) + " over " + std::to_string(videos) + " held-out videos");
  CHECK(model_recall >= 2.0 * baseline_recall);
}

// ---------------------------------------------------------- criterion 8 --

TEST_CASE("criterion 8: ablations do not beat the full model") {
  SyntheticSpec spec = default_spec();
  spec.seed = 808;
  spec.train_videos = 10;
  spec.test_videos = 3;
  spec.shots_per_video = 40;
  spec.noise_sigma = 0.8;
  spec.corruption_rate = 0.2;

  ModelSpec mspec;
  mspec.captioner.encoder_hidden = 32;
  mspec.captioner.embed_dim = 16;
  mspec.vlcmu_hidden = 24;
  mspec.vlcmu_embed = 16;
  mspec.purport_hidden = 24;

  auto su4_f1 = [&](const Run& run) {
    double total = 0.0;
    int count = 0;
    for (const Video* v : run.corpus.test()) {
      Synopsis syn = assemble_synopsis(*run.model, *v, 4);
      std::string text;
      for (const auto& e : syn.entries) text += e.sentence + " ";
      const auto cand = tokenize(text);
      std::vector<std::vector<std::string>> refs;
      for (const auto& r : v->references) refs.push_back(tokenize(r));
      total += multi_ref_prf(cand, refs, [](auto c, auto r) { return rouge_su4(c, r); }).f1;
      ++count;
    }
    return total / count;
  };

  std::map<std::string, double> mean_f1;
  std::string table;
  for (std::uint64_t seed : {31ULL, 32ULL, 33ULL}) {
    for (const std::string& variant : {"full", "-vlcmu", "-eta", "-purport"}) {
      TrainConfig tcfg = default_train(seed);
      tcfg.pretrain_epochs = 10;
      tcfg.joint_epochs = 8;
      tcfg.disable_vlcmu = variant == "-vlcmu";
      tcfg.disable_eta_loss = variant == "-eta";
      tcfg.disable_purport = variant == "-purport";
      Run run = train_run(spec, mspec, tcfg);
      const double f1 = su4_f1(run);
      mean_f1[variant] += f1 / 3.0;
      table += variant + "/" + std::to_string(seed) + "=" + std::to_string(f1) + " ";
    }
  }

  int ordered = 0;
  for (const std::string& variant : {"-vlcmu", "-eta", "-purport"})
    if (mean_f1["full"] >= mean_f1[variant]) ++ordered;

  const bool pass = ordered >= 2;
  report(8, pass,
         "full=" + std::to_string(mean_f1["full"]) + " -vlcmu=" + std::to_string(mean_f1["-vlcmu"]) +
             " -eta=" + std::to_string(mean_f1["-eta"]) + " -purport=" +
             std::to_string(mean_f1["-purport"]) + " (full >= ablation in " + std::to_string(ordered) +
             "/3)");
  INFO(table);
  CHECK(ordered >= 2);
}

// ---------------------------------------------------------- criterion 9 --

TEST_CASE("criterion 9: determinism and on-disk formats") {
  // Full command pipeline, twice, byte-compared.
  const fs::path root = scratch("det");
  nlohmann::ordered_json spec_json;
  spec_json["seed"] = 99;
  spec_json["event_types"] = 3;
  spec_json["feature_dim"] = 6;
  spec_json["frames_per_shot"] = 2;
  spec_json["train_videos"] = 4;
  spec_json["test_videos"] = 1;
  spec_json["shots_per_video"] = 12;
  spec_json["noise_sigma"] = 0.1;
  const fs::path spec_path = root / "spec.json";
  {
    std::ofstream f(spec_path);
    f << spec_json.dump();
  }

  auto pipeline_once = [&](const fs::path& dir) {
    const std::string cli = TSG_CLI_PATH;
    auto run = [&](const std::string& args) {
      const std::string cmd = cli + " " + args + " 2>/dev/null >/dev/null";
      return std::system(cmd.c_str()) == 0;
    };
    bool ok = run("synth --spec " + spec_path.string() + " --out " + (dir / "corpus").string());
    ok = ok && run("train --corpus " + (dir / "corpus").string() + " --out " + (dir / "model").string() +
                   " --seed 5 --pretrain-epochs 3 --joint-epochs 2 --pretrain-lr 0.01 --joint-lr 0.01");
    ok = ok && run("infer --model " + (dir / "model").string() + " --corpus " +
                   (dir / "corpus").string() + " --out " + (dir / "syn").string() + " --passes 3");
    ok = ok && run("eval --synopsis " + (dir / "syn").string() + " --references " +
                   (dir / "corpus" / "references.jsonl").string() + " --out " +
                   (dir / "report.json").string());
    return ok;
  };

  const fs::path run_a = root / "a", run_b = root / "b";
  fs::create_directories(run_a);
  fs::create_directories(run_b);
  bool cli_ok = pipeline_once(run_a);
  cli_ok = cli_ok && pipeline_once(run_b);

  bool identical = cli_ok;
  for (const char* rel :
       {"corpus/annotations.jsonl", "corpus/references.jsonl", "corpus/features/train_0000.tsgf",
        "model/model.tsgw", "model/captioner.tsgw", "syn/test_0000.synopsis.json",
        "syn/test_0000.synopsis.txt", "report.json"}) {
    const std::string a = slurp(run_a / rel), b = slurp(run_b / rel);
    identical = identical && !a.empty() && a == b;
  }

  // format round trips and rejection, in process
  bool formats_ok = true;
  try {
    Rng rng(9, "acc9");
    Tensor t = gradcheck::random_tensor({3, 2, 4}, rng);
    const fs::path fpath = root / "probe.tsgf";
    save_features(fpath.string(), t);
    Tensor back = load_features(fpath.string());
    formats_ok = formats_ok &&
                 std::memcmp(back.raw(), t.raw(), sizeof(double) * static_cast<std::size_t>(t.numel())) == 0;

    const std::string good = slurp(fpath);
    auto expect_reject = [&](std::string bytes) {
      std::ofstream f(fpath, std::ios::binary | std::ios::trunc);
      f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      f.close();
      try {
        load_features(fpath.string());
        return false;  // should have thrown
      } catch (const FormatError&) {
        return true;
      }
    };
    formats_ok = formats_ok && expect_reject("XXXX" + good.substr(4));
    formats_ok = formats_ok && expect_reject(good.substr(0, good.size() / 2));
    std::string overflow = good;
    for (int i = 8; i < 20; ++i) overflow[static_cast<std::size_t>(i)] = static_cast<char>(0xff);
    formats_ok = formats_ok && expect_reject(overflow);

    ParamSet ps;
    Rng prng(10, "acc9p");
    ps.create("w", {3, 3}, prng);
    const fs::path cpath = root / "probe.tsgw";
    ps.save(cpath.string());
    const std::string cp = slurp(cpath);
    ps.load(cpath.string());
    ps.save((root / "probe2.tsgw").string());
    formats_ok = formats_ok && slurp(root / "probe2.tsgw") == cp;
    {
      std::ofstream f(cpath, std::ios::binary | std::ios::trunc);
      f.write(cp.data(), static_cast<std::streamsize>(cp.size() / 2));
    }
    try {
      ps.load(cpath.string());
      formats_ok = false;
    } catch (const FormatError&) {
    }
  } catch (const std::exception&) {
    formats_ok = false;
  }

  const bool pass = cli_ok && identical && formats_ok;
  report(9, pass,
         std::string("pipeline reruns byte-identical: ") + (identical ? "yes" : "NO") +
             ", format round-trips and rejections: " + (formats_ok ? "ok" : "BROKEN"));
  CHECK(cli_ok);
  CHECK(identical);
  CHECK(formats_ok);
  fs::remove_all(root);
}
