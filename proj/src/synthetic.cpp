#include "tsg/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tsg/error.hpp"

using json = nlohmann::ordered_json;

namespace tsg {

namespace {

const char* kVerbs[8] = {"opens", "washes", "reads", "drives", "cooks", "buys", "cleans", "paints"};
const char* kNouns[8] = {"door", "pan", "book", "car", "salad", "ticket", "window", "phone"};
const char* kPlaces[8] = {"kitchen", "garage", "office", "garden", "store", "street", "library", "park"};

}  // namespace

std::vector<std::vector<std::string>> SyntheticSpec::resolved_templates() const {
  if (!templates.empty()) return templates;
  // One four-token template per event. Content words are distinct per event
  // pair for small E, so distinct events share at most the leading token --
  // that keeps cross-event pseudo-label overlap below the half threshold.
  std::vector<std::vector<std::string>> out;
  out.reserve(static_cast<std::size_t>(event_types));
  for (int e = 0; e < event_types; ++e) {
    std::string verb = kVerbs[e % 8];
    std::string noun = kNouns[(e / 8 + e) % 8];
    std::string place = kPlaces[(3 * e + e / 64 + 1) % 8];
    out.push_back({std::string("person ") + verb + " " + noun + " " + place});
  }
  return out;
}

void SyntheticSpec::validate() const {
  std::vector<std::string> bad;
  if (event_types < 2) bad.push_back("event_types (must be >= 2)");
  if (feature_dim < 1) bad.push_back("feature_dim (must be >= 1)");
  if (frames_per_shot < 1) bad.push_back("frames_per_shot (must be >= 1)");
  if (mean_event_shots < 1.0) bad.push_back("mean_event_shots (must be >= 1)");
  if (noise_sigma < 0.0) bad.push_back("noise_sigma (must be >= 0)");
  if (corruption_rate < 0.0 || corruption_rate > 1.0) bad.push_back("corruption_rate (must be in [0, 1])");
  if (important_fraction < 0.0 || important_fraction > 1.0)
    bad.push_back("important_fraction (must be in [0, 1])");
  if (train_videos < 1) bad.push_back("train_videos (must be >= 1)");
  if (test_videos < 0) bad.push_back("test_videos (must be >= 0)");
  if (shots_per_video < 1) bad.push_back("shots_per_video (must be >= 1)");
  if (references_per_video < 1) bad.push_back("references_per_video (must be >= 1)");
  if (!templates.empty()) {
    if (static_cast<int>(templates.size()) != event_types)
      bad.push_back("templates (need one set per event type)");
    for (const auto& set : templates) {
      if (set.empty()) {
        bad.push_back("templates (event with empty template set)");
        break;
      }
      for (const auto& t : set) {
        if (tokenize(t).empty()) {
          bad.push_back("templates (template tokenizes to nothing)");
          break;
        }
      }
    }
  }
  if (!bad.empty()) {
    std::string msg = "invalid synthetic spec, offending fields:";
    for (const auto& b : bad) msg += " " + b + ";";
    throw ValidationError(msg);
  }
}

json SyntheticSpec::to_json() const {
  json j;
  j["event_types"] = event_types;
  j["feature_dim"] = feature_dim;
  j["frames_per_shot"] = frames_per_shot;
  j["mean_event_shots"] = mean_event_shots;
  j["templates"] = resolved_templates();
  j["noise_sigma"] = noise_sigma;
  j["corruption_rate"] = corruption_rate;
  j["important_fraction"] = important_fraction;
  j["train_videos"] = train_videos;
  j["test_videos"] = test_videos;
  j["shots_per_video"] = shots_per_video;
  j["references_per_video"] = references_per_video;
  j["seed"] = seed;
  return j;
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
  static const char* known[] = {"event_types",    "feature_dim",        "frames_per_shot",
                                "mean_event_shots", "templates",        "noise_sigma",
                                "corruption_rate", "important_fraction", "train_videos",
                                "test_videos",    "shots_per_video",    "references_per_video",
                                "seed"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ValidationError("unknown synthetic-spec field: " + it.key());
  }
  if (!j.contains("seed")) throw ValidationError("missing required field: seed");

  SyntheticSpec s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("event_types")) s.event_types = j.at("event_types").get<int>();
    if (j.contains("feature_dim")) s.feature_dim = j.at("feature_dim").get<int>();
    if (j.contains("frames_per_shot")) s.frames_per_shot = j.at("frames_per_shot").get<int>();
    if (j.contains("mean_event_shots")) s.mean_event_shots = j.at("mean_event_shots").get<double>();
    if (j.contains("templates"))
      s.templates = j.at("templates").get<std::vector<std::vector<std::string>>>();
    if (j.contains("noise_sigma")) s.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("corruption_rate")) s.corruption_rate = j.at("corruption_rate").get<double>();
    if (j.contains("important_fraction")) s.important_fraction = j.at("important_fraction").get<double>();
    if (j.contains("train_videos")) s.train_videos = j.at("train_videos").get<int>();
    if (j.contains("test_videos")) s.test_videos = j.at("test_videos").get<int>();
    if (j.contains("shots_per_video")) s.shots_per_video = j.at("shots_per_video").get<int>();
    if (j.contains("references_per_video"))
      s.references_per_video = j.at("references_per_video").get<int>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed synthetic-spec field: ") + e.what());
  }
  s.validate();
  return s;
}

SyntheticSpec SyntheticSpec::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec file is not valid json: ") + e.what());
  }
  return from_json(j);
}

namespace {

struct EventInstance {
  int type = 0;
  int first_shot = 0;
  int length = 0;
  bool important = false;
};

Video make_video(const SyntheticSpec& spec, const std::vector<std::vector<std::string>>& tpls,
                 const std::vector<std::vector<double>>& embeddings,
                 const std::vector<bool>& important_type, const std::string& id) {
  Rng rng(spec.seed, "video:" + id);
  const int n = spec.shots_per_video;

  std::vector<EventInstance> events;
  int covered = 0;
  while (covered < n) {
    EventInstance ev;
    ev.type = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.event_types)));
    const double p = 1.0 / spec.mean_event_shots;
    ev.length = 1 + static_cast<int>(rng.geometric(p));
    ev.length = std::min(ev.length, n - covered);
    ev.first_shot = covered;
    ev.important = important_type[static_cast<std::size_t>(ev.type)];
    covered += ev.length;
    events.push_back(ev);
  }
  // A video with no important event would have an empty reference summary;
  // retype the first instance to an important event instead.
  bool any = false;
  for (const auto& ev : events) any = any || ev.important;
  if (!any) {
    for (std::size_t t = 0; t < important_type.size(); ++t) {
      if (important_type[t]) {
        events.front().type = static_cast<int>(t);
        events.front().important = true;
        break;
      }
    }
  }

  Video video;
  video.id = id;
  video.shots.reserve(static_cast<std::size_t>(n));
  for (std::size_t inst = 0; inst < events.size(); ++inst) {
    const EventInstance& ev = events[inst];
    for (int s = 0; s < ev.length; ++s) {
      Shot shot;
      shot.index = ev.first_shot + s;
      shot.event_instance = static_cast<int>(inst);
      const auto& set = tpls[static_cast<std::size_t>(ev.type)];
      const std::size_t pick = set.size() > 1 ? rng.next_below(set.size()) : 0;
      shot.groundtruth.tokens = tokenize(set[pick]);
      shot.important = (ev.important && s == 0) ? 1 : 0;
      std::vector<double> feat(static_cast<std::size_t>(spec.frames_per_shot) * spec.feature_dim);
      const auto& emb = embeddings[static_cast<std::size_t>(ev.type)];
      for (int fr = 0; fr < spec.frames_per_shot; ++fr) {
        for (int dd = 0; dd < spec.feature_dim; ++dd) {
          feat[static_cast<std::size_t>(fr) * spec.feature_dim + dd] =
              emb[static_cast<std::size_t>(dd)] + rng.normal(0.0, spec.noise_sigma);
        }
      }
      shot.features = Tensor({spec.frames_per_shot, spec.feature_dim}, std::move(feat));
      video.shots.push_back(std::move(shot));
    }
  }

  // Reference summaries reflect the true events: build them before caption
  // corruption, from the phi=1 shots in temporal order.
  std::string summary;
  for (const Shot& s : video.shots) {
    if (!s.important) continue;
    if (!summary.empty()) summary += ' ';
    summary += s.groundtruth.text();
  }
  video.references.assign(static_cast<std::size_t>(spec.references_per_video), summary);

  if (spec.corruption_rate > 0.0) {
    for (Shot& s : video.shots) {
      if (rng.next_double() >= spec.corruption_rate) continue;
      // Swap in a caption from a different event type.
      int true_type = 0;
      for (const EventInstance& ev : events) {
        if (s.index >= ev.first_shot && s.index < ev.first_shot + ev.length) true_type = ev.type;
      }
      const int other =
          (true_type + 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(spec.event_types - 1)))) %
          spec.event_types;
      const auto& set = tpls[static_cast<std::size_t>(other)];
      const std::size_t pick = set.size() > 1 ? rng.next_below(set.size()) : 0;
      s.groundtruth.tokens = tokenize(set[pick]);
      s.corrupted = 1;
    }
  }
  return video;
}

}  // namespace

Corpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto tpls = spec.resolved_templates();

  Rng emb_rng(spec.seed, "embeddings");
  std::vector<std::vector<double>> embeddings;
  embeddings.reserve(static_cast<std::size_t>(spec.event_types));
  for (int e = 0; e < spec.event_types; ++e) {
    std::vector<double> emb(static_cast<std::size_t>(spec.feature_dim));
    for (double& v : emb) v = emb_rng.uniform(-1.0, 1.0);
    embeddings.push_back(std::move(emb));
  }

  // Importance attaches to event types (content decides what matters), with
  // a deterministic flagged count so the corpus-level phi rate tracks
  // important_fraction / mean_event_shots. At least one type is flagged so
  // reference summaries are never empty.
  const int n_important = std::clamp(
      static_cast<int>(std::llround(spec.important_fraction * spec.event_types)), 1, spec.event_types);
  std::vector<int> type_order(static_cast<std::size_t>(spec.event_types));
  for (int e = 0; e < spec.event_types; ++e) type_order[static_cast<std::size_t>(e)] = e;
  Rng type_rng(spec.seed, "important-types");
  for (std::size_t i = type_order.size(); i > 1; --i)
    std::swap(type_order[i - 1], type_order[type_rng.next_below(i)]);
  std::vector<bool> important_type(static_cast<std::size_t>(spec.event_types), false);
  for (int i = 0; i < n_important; ++i)
    important_type[static_cast<std::size_t>(type_order[static_cast<std::size_t>(i)])] = true;

  Corpus corpus;
  corpus.frames_per_shot = spec.frames_per_shot;
  corpus.feature_dim = spec.feature_dim;
  auto pad4 = [](int i) {
    std::string s = std::to_string(i);
    return std::string(s.size() >= 4 ? 0 : 4 - s.size(), '0') + s;
  };
  for (int i = 0; i < spec.train_videos; ++i) {
    const std::string id = "train_" + pad4(i);
    corpus.videos.push_back(make_video(spec, tpls, embeddings, important_type, id));
    corpus.train_ids.push_back(id);
  }
  for (int i = 0; i < spec.test_videos; ++i) {
    const std::string id = "test_" + pad4(i);
    corpus.videos.push_back(make_video(spec, tpls, embeddings, important_type, id));
    corpus.test_ids.push_back(id);
  }
  return corpus;
}

}  // namespace tsg
