#include "tsg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "tsg/error.hpp"

namespace tsg {

namespace {

// String tokens are interned so every metric runs on ints; the metrics only
// ever depend on token equality.
std::vector<int> intern(std::span<const std::string> toks,
                        std::unordered_map<std::string, int>& table) {
  std::vector<int> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) {
    auto [it, fresh] = table.emplace(t, static_cast<int>(table.size()));
    ids.push_back(it->second);
  }
  return ids;
}

int lcs_length(std::span<const int> a, std::span<const int> b) {
  const std::size_t m = a.size(), n = b.size();
  std::vector<int> prev(n + 1, 0), cur(n + 1, 0);
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

// Multiset of SU4 units: unigrams and gap-limited ordered pairs, packed into
// 64-bit keys (tokens are interned, so ids stay well below 2^31).
std::unordered_map<std::uint64_t, int> su4_units(std::span<const int> s) {
  std::unordered_map<std::uint64_t, int> units;
  const std::size_t n = s.size();
  for (std::size_t i = 0; i < n; ++i) {
    ++units[static_cast<std::uint64_t>(s[i])];
    for (std::size_t j = i + 1; j < n && j - i <= 5; ++j) {
      const std::uint64_t key = (1ULL << 63) | (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[i])) << 31) |
                                static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[j]));
      ++units[key];
    }
  }
  return units;
}

std::unordered_map<std::uint64_t, int> ngram_counts(std::span<const int> s, std::size_t n) {
  std::unordered_map<std::uint64_t, int> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::uint64_t key = n;  // length tag keeps 1-gram and 2-gram keys apart
    for (std::size_t k = 0; k < n; ++k)
      key = key * 1000003ULL + static_cast<std::uint64_t>(static_cast<std::uint32_t>(s[i + k])) + 1;
    ++counts[key];
  }
  return counts;
}

}  // namespace

PRF rouge_l(std::span<const int> cand, std::span<const int> ref) {
  if (cand.empty() || ref.empty()) return {};
  const double lcs = lcs_length(cand, ref);
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  return {p, r, f1_of(p, r)};
}

PRF rouge_su4(std::span<const int> cand, std::span<const int> ref) {
  if (cand.empty() || ref.empty()) return {};
  const auto cu = su4_units(cand);
  const auto ru = su4_units(ref);
  long long overlap = 0, ctotal = 0, rtotal = 0;
  for (const auto& [key, n] : cu) {
    ctotal += n;
    auto it = ru.find(key);
    if (it != ru.end()) overlap += std::min(n, it->second);
  }
  for (const auto& [key, n] : ru) rtotal += n;
  const double p = static_cast<double>(overlap) / static_cast<double>(ctotal);
  const double r = static_cast<double>(overlap) / static_cast<double>(rtotal);
  return {p, r, f1_of(p, r)};
}

double bleu2(std::span<const std::vector<int>> cands, std::span<const std::vector<int>> refs) {
  if (cands.size() != refs.size())
    throw ContractError("bleu2: " + std::to_string(cands.size()) + " candidates vs " +
                        std::to_string(refs.size()) + " references");
  constexpr double kEps = 1e-9;
  long long c_len = 0, r_len = 0;
  long long match[2] = {0, 0}, total[2] = {0, 0};
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c_len += static_cast<long long>(cands[i].size());
    r_len += static_cast<long long>(refs[i].size());
    for (std::size_t n = 1; n <= 2; ++n) {
      const auto cn = ngram_counts(cands[i], n);
      const auto rn = ngram_counts(refs[i], n);
      for (const auto& [key, cnt] : cn) {
        total[n - 1] += cnt;
        auto it = rn.find(key);
        if (it != rn.end()) match[n - 1] += std::min(cnt, it->second);
      }
    }
  }
  if (c_len == 0) return 0.0;
  double log_p = 0.0;
  for (int n = 0; n < 2; ++n) {
    const double num = match[n] > 0 ? static_cast<double>(match[n]) : kEps;
    const double den = total[n] > 0 ? static_cast<double>(total[n]) : kEps;
    log_p += std::log(num / den);
  }
  const double bp = c_len < r_len ? std::exp(1.0 - static_cast<double>(r_len) / static_cast<double>(c_len)) : 1.0;
  return bp * std::exp(log_p / 2.0);
}

PRF rouge_l(std::span<const std::string> cand, std::span<const std::string> ref) {
  std::unordered_map<std::string, int> table;
  return rouge_l(std::span<const int>(intern(cand, table)), std::span<const int>(intern(ref, table)));
}

PRF rouge_su4(std::span<const std::string> cand, std::span<const std::string> ref) {
  std::unordered_map<std::string, int> table;
  const auto c = intern(cand, table);
  const auto r = intern(ref, table);
  return rouge_su4(std::span<const int>(c), std::span<const int>(r));
}

double bleu2(std::span<const std::vector<std::string>> cands,
             std::span<const std::vector<std::string>> refs) {
  if (cands.size() != refs.size())
    throw ContractError("bleu2: " + std::to_string(cands.size()) + " candidates vs " +
                        std::to_string(refs.size()) + " references");
  std::unordered_map<std::string, int> table;
  std::vector<std::vector<int>> c, r;
  for (const auto& x : cands) c.push_back(intern(x, table));
  for (const auto& x : refs) r.push_back(intern(x, table));
  return bleu2(std::span<const std::vector<int>>(c), std::span<const std::vector<int>>(r));
}

PRF multi_ref_prf(std::span<const std::string> cand,
                  std::span<const std::vector<std::string>> refs,
                  const std::function<PRF(std::span<const std::string>, std::span<const std::string>)>& metric) {
  if (refs.empty()) throw DomainError("multi_ref: no references");
  PRF mean;
  for (const auto& ref : refs) {
    const PRF r = metric(cand, std::span<const std::string>(ref));
    mean.precision += r.precision;
    mean.recall += r.recall;
    mean.f1 += r.f1;
  }
  const double n = static_cast<double>(refs.size());
  return {mean.precision / n, mean.recall / n, mean.f1 / n};
}

double multi_ref_bleu2(std::span<const std::string> cand,
                       std::span<const std::vector<std::string>> refs) {
  if (refs.empty()) throw DomainError("multi_ref: no references");
  double mean = 0.0;
  std::vector<std::string> cv(cand.begin(), cand.end());
  for (const auto& ref : refs) {
    const std::vector<std::vector<std::string>> c{cv}, r{ref};
    mean += bleu2(std::span<const std::vector<std::string>>(c), std::span<const std::vector<std::string>>(r));
  }
  return mean / static_cast<double>(refs.size());
}

}  // namespace tsg
