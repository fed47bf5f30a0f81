#pragma once

#include <span>
#include <vector>

namespace tsg {

// Elementwise product of correctness and significance; the impact series.
std::vector<double> impact(std::span<const double> alpha, std::span<const double> beta);

// Strict local maxima. Interior p is a peak iff it strictly exceeds both
// neighbors; an endpoint must strictly exceed its single neighbor; plateaus
// never peak. If nothing qualifies (constant or plateau-topped series) the
// first argmax index is returned so the result is never empty.
std::vector<int> find_peaks(std::span<const double> series);

// Repeatedly keeps only the peaks of the surviving subsequence, `passes`
// times, returning indices into the original series. Each pass halves the
// survivor count at worst (no two adjacent survivors), so the result shrinks
// at a minimum rate of 1/2 per pass.
std::vector<int> iterate_inference(std::span<const double> gamma, int passes);

}  // namespace tsg
