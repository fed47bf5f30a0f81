#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsg/corpus.hpp"

namespace tsg {

// Configuration of the seeded synthetic-corpus generator. Every field has a
// documented default except `seed`, which must be given explicitly; the
// loader injects the defaults and the resolved document is echoed next to
// every generated corpus.
struct SyntheticSpec {
  int event_types = 8;          // E, distinct latent events
  int feature_dim = 32;         // d
  int frames_per_shot = 6;      // k
  double mean_event_shots = 4.0;
  // One caption template set per event type; auto-generated when empty.
  std::vector<std::vector<std::string>> templates;
  double noise_sigma = 0.25;       // per-dimension Gaussian frame noise
  double corruption_rate = 0.0;    // fraction of shots with a swapped caption
  double important_fraction = 0.25;
  int train_videos = 20;
  int test_videos = 4;
  int shots_per_video = 60;
  int references_per_video = 3;
  std::uint64_t seed = 0;

  void validate() const;  // ValidationError listing offending fields

  nlohmann::ordered_json to_json() const;
  // Rejects unknown fields and a missing seed; fills defaults otherwise.
  static SyntheticSpec from_json(const nlohmann::ordered_json& j);
  static SyntheticSpec from_file(const std::string& path);

  // The template set actually used (auto-generated if `templates` is empty).
  std::vector<std::vector<std::string>> resolved_templates() const;
};

// Latent-event corpus: each video is a sequence of event instances with
// geometric-ish durations; shot features are the event embedding plus
// per-frame noise; the first shot of each important instance carries phi=1;
// references concatenate the important shots' (pre-corruption) captions.
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace tsg
