#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace tsg {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

inline double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

// Longest-common-subsequence overlap: P = LCS/|cand|, R = LCS/|ref|.
PRF rouge_l(std::span<const int> cand, std::span<const int> ref);
PRF rouge_l(std::span<const std::string> cand, std::span<const std::string> ref);

// Counting units are unigrams plus skip-bigrams with at most four tokens
// skipped (ordered pairs (i, j), i < j, j - i <= 5); overlap is the clipped
// multiset intersection of units.
PRF rouge_su4(std::span<const int> cand, std::span<const int> ref);
PRF rouge_su4(std::span<const std::string> cand, std::span<const std::string> ref);

// Corpus-level BLEU with 1- and 2-gram clipped precisions, geometric mean,
// brevity penalty exp(1 - r/c) when c < r. Zero n-gram match counts are
// smoothed to 1e-9.
double bleu2(std::span<const std::vector<int>> cands, std::span<const std::vector<int>> refs);
double bleu2(std::span<const std::vector<std::string>> cands,
             std::span<const std::vector<std::string>> refs);

// Candidate against each reference, arithmetic mean of the per-reference
// results (averaged componentwise for PRF metrics).
PRF multi_ref_prf(std::span<const std::string> cand,
                  std::span<const std::vector<std::string>> refs,
                  const std::function<PRF(std::span<const std::string>, std::span<const std::string>)>& metric);
double multi_ref_bleu2(std::span<const std::string> cand,
                       std::span<const std::vector<std::string>> refs);

}  // namespace tsg
