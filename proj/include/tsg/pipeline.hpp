#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsg/captioner.hpp"
#include "tsg/corpus.hpp"
#include "tsg/purport.hpp"
#include "tsg/vlcmu.hpp"

namespace tsg {

struct TrainConfig {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  int pretrain_epochs = 20;
  int joint_epochs = 12;
  double pretrain_lr = 2e-3;
  double joint_lr = 3e-3;
  std::uint64_t seed = 0;
  // Ablation switches mirroring the -VLCMU / -L^eta / -Purport studies.
  bool disable_vlcmu = false;
  bool disable_eta_loss = false;
  bool disable_purport = false;
  int passes = 4;

  bool vlcmu_present() const { return !disable_vlcmu; }
  bool score_head_present() const { return vlcmu_present() && !disable_eta_loss; }
  bool purport_present() const { return !disable_purport; }
  bool eta_term_active() const { return score_head_present() && lambda1 > 0.0; }
  bool phi_term_active() const { return purport_present() && lambda2 > 0.0; }
  void validate() const;  // ConfigError when no joint term remains

  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::ordered_json& j);
};

struct ModelSpec {
  CaptionerConfig captioner;
  int vlcmu_hidden = 32;
  int vlcmu_embed = 32;
  int purport_hidden = 32;

  nlohmann::ordered_json to_json() const;
  static ModelSpec from_json(const nlohmann::ordered_json& j);
};

// The full pipeline: captioner plus, depending on the ablation switches, the
// matching unit and the significance scorer. Owns every parameter.
struct Model {
  Model(ModelSpec spec, TrainConfig tcfg, Vocabulary vocab);

  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  ModelSpec spec;
  TrainConfig tcfg;
  Vocabulary vocab;
  ParamSet params;
  std::unique_ptr<Captioner> captioner;
  std::unique_ptr<Vlcmu> vlcmu;       // absent under -VLCMU
  std::unique_ptr<PurportNet> purport;  // absent under -Purport
  Parameter* fallback_embed = nullptr;  // -VLCMU replacement word table

  int purport_input_dim() const;
  // Per-shot feature for the purport net in -VLCMU mode: concatenation of
  // mean-pooled frame features and mean-pooled word embeddings.
  Value fallback_feature(const Value& features, std::span<const int> sentence, bool track) const;

  void save_dir(const std::string& dir) const;
  static std::unique_ptr<Model> load_dir(const std::string& dir);
};

struct PretrainLogEntry {
  int epoch = 0;  // 0 is the pre-training evaluation
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool best = false;
};

// Phase one: the captioner alone, summed token NLL, 80/20 shot split; the
// checkpoint with the lowest validation loss is restored at the end.
std::vector<PretrainLogEntry> pretrain_captioner(Model& model, const Corpus& corpus);

struct JointLogEntry {
  int epoch = 0;
  double eta_loss = 0.0;
  double phi_loss = 0.0;
  double joint_loss = 0.0;  // lambda1 * eta + lambda2 * phi
};

// Phase two: captioner frozen; each epoch re-decodes the training captions,
// derives the weak labels, and optimizes the weighted remaining losses one
// video at a time.
std::vector<JointLogEntry> train_joint(Model& model, const Corpus& corpus);

struct ShotScores {
  std::vector<std::vector<int>> sentences;  // greedy decodes, token ids
  std::vector<double> alpha, beta, gamma;
  std::vector<int> eta_bar, phi;
};

// Inference scores for every shot of one video; gamma = alpha * beta, with
// the disabled side of an ablation fixed to 1.
ShotScores score_video(const Model& model, const Video& video);

struct SynopsisEntry {
  int shot = 0;
  std::string sentence;
  int pass_retained = 0;
};

struct Synopsis {
  std::string video_id;
  int passes = 0;
  std::vector<SynopsisEntry> entries;  // strictly increasing shots, deduped
  double target_fraction = 0.0;        // entries / shots
};

Synopsis assemble_synopsis(const Model& model, const Video& video, int passes);
Synopsis synopsis_from_scores(const std::string& video_id, const Model& model,
                              const ShotScores& scores, int passes);

// The visual-summary counterpart: the synopsis's shot indices.
std::vector<int> retrieve_visual(const Synopsis& synopsis, const Video& video);

nlohmann::ordered_json synopsis_to_json(const Synopsis& s);
std::string synopsis_to_text(const Synopsis& s);  // one sentence per line

}  // namespace tsg
