#include "tsg/peaks.hpp"

#include "tsg/error.hpp"

namespace tsg {

std::vector<double> impact(std::span<const double> alpha, std::span<const double> beta) {
  if (alpha.size() != beta.size())
    throw ContractError("impact: " + std::to_string(alpha.size()) + " alphas vs " +
                        std::to_string(beta.size()) + " betas");
  std::vector<double> gamma(alpha.size());
  for (std::size_t i = 0; i < alpha.size(); ++i) gamma[i] = alpha[i] * beta[i];
  return gamma;
}

std::vector<int> find_peaks(std::span<const double> series) {
  if (series.empty()) throw DomainError("find_peaks: empty series");
  const int n = static_cast<int>(series.size());
  std::vector<int> peaks;
  if (n == 1) {
    peaks.push_back(0);
    return peaks;
  }
  for (int p = 0; p < n; ++p) {
    const bool left_ok = p == 0 || series[static_cast<std::size_t>(p)] > series[static_cast<std::size_t>(p - 1)];
    const bool right_ok =
        p == n - 1 || series[static_cast<std::size_t>(p)] > series[static_cast<std::size_t>(p + 1)];
    if (left_ok && right_ok) peaks.push_back(p);
  }
  if (peaks.empty()) {
    int best = 0;
    for (int p = 1; p < n; ++p) {
      if (series[static_cast<std::size_t>(p)] > series[static_cast<std::size_t>(best)]) best = p;
    }
    peaks.push_back(best);
  }
  return peaks;
}

std::vector<int> iterate_inference(std::span<const double> gamma, int passes) {
  if (passes < 1) throw ContractError("iterate_inference: passes must be >= 1");
  if (gamma.empty()) throw DomainError("iterate_inference: empty series");
  std::vector<int> survivors(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) survivors[i] = static_cast<int>(i);
  for (int pass = 0; pass < passes; ++pass) {
    std::vector<double> values;
    values.reserve(survivors.size());
    for (int idx : survivors) values.push_back(gamma[static_cast<std::size_t>(idx)]);
    std::vector<int> next;
    for (int local : find_peaks(values)) next.push_back(survivors[static_cast<std::size_t>(local)]);
    survivors = std::move(next);
  }
  return survivors;
}

}  // namespace tsg
