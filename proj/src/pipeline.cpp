#include "tsg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "tsg/error.hpp"
#include "tsg/peaks.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tsg {

void TrainConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda weights must be non-negative");
  if (pretrain_epochs < 1 || joint_epochs < 0) throw ConfigError("epoch counts out of range");
  if (pretrain_lr <= 0.0 || joint_lr <= 0.0) throw ConfigError("learning rates must be positive");
  if (passes < 1) throw ConfigError("passes must be >= 1");
  if (joint_epochs > 0 && !eta_term_active() && !phi_term_active())
    throw ConfigError("nothing to train jointly: both loss terms are disabled or zero-weighted");
}

json TrainConfig::to_json() const {
  json j;
  j["lambda1"] = lambda1;
  j["lambda2"] = lambda2;
  j["pretrain_epochs"] = pretrain_epochs;
  j["joint_epochs"] = joint_epochs;
  j["pretrain_lr"] = pretrain_lr;
  j["joint_lr"] = joint_lr;
  j["seed"] = seed;
  j["disable_vlcmu"] = disable_vlcmu;
  j["disable_eta_loss"] = disable_eta_loss;
  j["disable_purport"] = disable_purport;
  j["passes"] = passes;
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  if (j.contains("lambda1")) c.lambda1 = j.at("lambda1").get<double>();
  if (j.contains("lambda2")) c.lambda2 = j.at("lambda2").get<double>();
  if (j.contains("pretrain_epochs")) c.pretrain_epochs = j.at("pretrain_epochs").get<int>();
  if (j.contains("joint_epochs")) c.joint_epochs = j.at("joint_epochs").get<int>();
  if (j.contains("pretrain_lr")) c.pretrain_lr = j.at("pretrain_lr").get<double>();
  if (j.contains("joint_lr")) c.joint_lr = j.at("joint_lr").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("disable_vlcmu")) c.disable_vlcmu = j.at("disable_vlcmu").get<bool>();
  if (j.contains("disable_eta_loss")) c.disable_eta_loss = j.at("disable_eta_loss").get<bool>();
  if (j.contains("disable_purport")) c.disable_purport = j.at("disable_purport").get<bool>();
  if (j.contains("passes")) c.passes = j.at("passes").get<int>();
  return c;
}

json ModelSpec::to_json() const {
  json j;
  json cap;
  cap["frame_dim"] = captioner.frame_dim;
  cap["frames"] = captioner.frames;
  cap["encoder_hidden"] = captioner.encoder_hidden;
  cap["embed_dim"] = captioner.embed_dim;
  cap["vocab_size"] = captioner.vocab_size;
  cap["max_decode_len"] = captioner.max_decode_len;
  j["captioner"] = cap;
  j["vlcmu_hidden"] = vlcmu_hidden;
  j["vlcmu_embed"] = vlcmu_embed;
  j["purport_hidden"] = purport_hidden;
  return j;
}

ModelSpec ModelSpec::from_json(const json& j) {
  ModelSpec s;
  const json& cap = j.at("captioner");
  s.captioner.frame_dim = cap.at("frame_dim").get<int>();
  s.captioner.frames = cap.at("frames").get<int>();
  s.captioner.encoder_hidden = cap.at("encoder_hidden").get<int>();
  s.captioner.embed_dim = cap.at("embed_dim").get<int>();
  s.captioner.vocab_size = cap.at("vocab_size").get<int>();
  s.captioner.max_decode_len = cap.at("max_decode_len").get<int>();
  s.vlcmu_hidden = j.at("vlcmu_hidden").get<int>();
  s.vlcmu_embed = j.at("vlcmu_embed").get<int>();
  s.purport_hidden = j.at("purport_hidden").get<int>();
  return s;
}

Model::Model(ModelSpec spec_in, TrainConfig tcfg_in, Vocabulary vocab_in)
    : spec(std::move(spec_in)), tcfg(tcfg_in), vocab(std::move(vocab_in)) {
  spec.captioner.vocab_size = vocab.size();
  tcfg.validate();
  captioner = std::make_unique<Captioner>(params, spec.captioner, Rng(tcfg.seed, "init.captioner"));
  if (tcfg.vlcmu_present()) {
    VlcmuConfig vc;
    vc.frame_dim = spec.captioner.frame_dim;
    vc.embed_dim = spec.vlcmu_embed;
    vc.hidden = spec.vlcmu_hidden;
    vc.vocab_size = vocab.size();
    vlcmu = std::make_unique<Vlcmu>(params, vc, Rng(tcfg.seed, "init.vlcmu"),
                                    tcfg.score_head_present());
  } else {
    Rng rng(tcfg.seed, "init.fallback");
    fallback_embed = &params.create("fallback.embed", {vocab.size(), spec.vlcmu_embed}, rng);
  }
  if (tcfg.purport_present()) {
    PurportConfig pc;
    pc.input_dim = purport_input_dim();
    pc.hidden = spec.purport_hidden;
    purport = std::make_unique<PurportNet>(params, pc, Rng(tcfg.seed, "init.purport"));
  }
}

int Model::purport_input_dim() const {
  return tcfg.vlcmu_present() ? 4 * spec.vlcmu_hidden : spec.captioner.frame_dim + spec.vlcmu_embed;
}

Value Model::fallback_feature(const Value& features, std::span<const int> sentence, bool track) const {
  Value visual = mean_rows(features);
  Value embed = pv(fallback_embed, track);
  std::vector<Value> words;
  if (sentence.empty()) {
    words.push_back(row(embed, kUnk));
  } else {
    for (int t : sentence) words.push_back(row(embed, t));
  }
  Value lang = scale(add_n(words), 1.0 / static_cast<double>(words.size()));
  return concat(visual, lang);
}

void Model::save_dir(const std::string& dir) const {
  fs::create_directories(dir);
  params.save((fs::path(dir) / "model.tsgw").string());
  params.save_prefix((fs::path(dir) / "captioner.tsgw").string(), Captioner::kParamPrefix);
  vocab.save((fs::path(dir) / "vocab.json").string());
  json j;
  j["model"] = spec.to_json();
  j["train"] = tcfg.to_json();
  std::ofstream f((fs::path(dir) / "model_config.json").string(), std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + dir + "/model_config.json");
  f << j.dump(2) << "\n";
}

std::unique_ptr<Model> Model::load_dir(const std::string& dir) {
  std::ifstream f((fs::path(dir) / "model_config.json").string());
  if (!f) throw Error("cannot open: " + dir + "/model_config.json");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model_config.json: ") + e.what(), 0);
  }
  ModelSpec spec = ModelSpec::from_json(j.at("model"));
  TrainConfig tcfg = TrainConfig::from_json(j.at("train"));
  Vocabulary vocab = Vocabulary::load((fs::path(dir) / "vocab.json").string());
  auto model = std::make_unique<Model>(std::move(spec), tcfg, std::move(vocab));
  model->params.load((fs::path(dir) / "model.tsgw").string());
  return model;
}

// -------------------------------------------------------------- pretrain --

namespace {

struct ShotRef {
  const Video* video;
  const Shot* shot;
  std::vector<int> gt_ids;
};

std::vector<ShotRef> train_shot_pool(const Model& model, const Corpus& corpus) {
  std::vector<ShotRef> pool;
  for (const Video* v : corpus.train()) {
    for (const Shot& s : v->shots)
      pool.push_back({v, &s, model.vocab.encode(s.groundtruth.tokens)});
  }
  if (pool.empty()) throw DomainError("no training shots in corpus");
  return pool;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

double eval_caption_loss(const Model& model, std::span<const ShotRef> shots) {
  if (shots.empty()) return 0.0;
  double total = 0.0;
  for (const ShotRef& s : shots) {
    total += model.captioner
                 ->caption_loss(Value::constant(s.shot->features), s.gt_ids, /*track=*/false)
                 .item();
  }
  return total / static_cast<double>(shots.size());
}

std::vector<Tensor> snapshot_values(const ParamSet& params, const std::string& prefix) {
  std::vector<Tensor> snap;
  for (const Parameter* p : params.all()) {
    if (p->name.rfind(prefix, 0) == 0) snap.push_back(p->value);
  }
  return snap;
}

void restore_values(const ParamSet& params, const std::string& prefix, const std::vector<Tensor>& snap) {
  std::size_t i = 0;
  for (Parameter* p : params.all()) {
    if (p->name.rfind(prefix, 0) == 0) p->value = snap[i++];
  }
}

}  // namespace

std::vector<PretrainLogEntry> pretrain_captioner(Model& model, const Corpus& corpus) {
  std::vector<ShotRef> pool = train_shot_pool(model, corpus);
  Rng split_rng(model.tcfg.seed, "pretrain.split");
  shuffle_in_place(pool, split_rng);
  std::size_t n_val = pool.size() / 5;
  if (n_val == 0 && pool.size() >= 2) n_val = 1;
  const std::size_t n_train = pool.size() - n_val;
  std::vector<ShotRef> train(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<ShotRef> val(pool.begin() + static_cast<std::ptrdiff_t>(n_train), pool.end());
  if (val.empty()) val = train;  // degenerate single-shot corpora

  AdamConfig acfg;
  acfg.lr = model.tcfg.pretrain_lr;
  Adam opt(model.params, acfg);

  std::vector<PretrainLogEntry> log;
  log.push_back({0, eval_caption_loss(model, train), eval_caption_loss(model, val), true});
  double best_val = log[0].val_loss;
  std::vector<Tensor> best = snapshot_values(model.params, Captioner::kParamPrefix);

  long long step = 0;
  for (int epoch = 1; epoch <= model.tcfg.pretrain_epochs; ++epoch) {
    Rng epoch_rng(model.tcfg.seed, "pretrain.epoch." + std::to_string(epoch));
    shuffle_in_place(train, epoch_rng);
    double running = 0.0;
    for (const ShotRef& s : train) {
      ++step;
      Value loss = model.captioner->caption_loss(Value::constant(s.shot->features), s.gt_ids);
      const double lv = loss.item();
      if (!std::isfinite(lv)) throw TrainingError("caption loss diverged", step);
      running += lv;
      backward(loss);
      opt.step();
    }
    PretrainLogEntry e;
    e.epoch = epoch;
    e.train_loss = running / static_cast<double>(train.size());
    e.val_loss = eval_caption_loss(model, val);
    if (e.val_loss < best_val) {
      best_val = e.val_loss;
      best = snapshot_values(model.params, Captioner::kParamPrefix);
      e.best = true;
    }
    log.push_back(e);
  }
  restore_values(model.params, Captioner::kParamPrefix, best);
  return log;
}

// ----------------------------------------------------------------- joint --

std::vector<JointLogEntry> train_joint(Model& model, const Corpus& corpus) {
  const TrainConfig& cfg = model.tcfg;
  cfg.validate();
  model.params.set_frozen(Captioner::kParamPrefix, true);

  AdamConfig acfg;
  acfg.lr = cfg.joint_lr;
  Adam opt(model.params, acfg);

  const auto train_videos = corpus.train();
  std::vector<JointLogEntry> log;
  long long step = 0;
  for (int epoch = 1; epoch <= cfg.joint_epochs; ++epoch) {
    JointLogEntry entry;
    entry.epoch = epoch;
    for (const Video* video : train_videos) {
      ++step;
      // Fresh decodes every epoch; the weak labels come from them.
      std::vector<std::vector<int>> sentences;
      std::vector<int> eta_bar, phi;
      sentences.reserve(video->shots.size());
      for (const Shot& shot : video->shots) {
        sentences.push_back(model.captioner->decode_greedy(shot.features));
        const std::vector<int> gt = model.vocab.encode(shot.groundtruth.tokens);
        eta_bar.push_back(pseudo_label(sentences.back(), gt));
        phi.push_back(shot.important);
      }

      std::vector<Value> alphas, vl_features;
      for (std::size_t p = 0; p < video->shots.size(); ++p) {
        const Value features = Value::constant(video->shots[p].features);
        if (model.vlcmu) {
          MatchResult m = model.vlcmu->match(features, sentences[p], /*track=*/true);
          if (m.alpha) alphas.push_back(m.alpha);
          vl_features.push_back(m.f_vl);
        } else {
          vl_features.push_back(model.fallback_feature(features, sentences[p], /*track=*/true));
        }
      }

      std::vector<Value> terms;
      double eta_value = 0.0, phi_value = 0.0;
      if (cfg.eta_term_active()) {
        // Under -Purport the weak labels are replaced by the importance flags.
        const std::vector<int>& labels = cfg.purport_present() ? eta_bar : phi;
        Value l_eta = vlcmu_loss(alphas, labels);
        eta_value = l_eta.item();
        terms.push_back(scale(l_eta, cfg.lambda1));
      }
      if (cfg.phi_term_active()) {
        std::vector<Value> betas = model.purport->score_video(vl_features, /*track=*/true);
        Value l_phi = purport_loss(betas, phi);
        phi_value = l_phi.item();
        terms.push_back(scale(l_phi, cfg.lambda2));
      }
      Value loss = terms.size() == 1 ? terms[0] : add_n(terms);
      const double lv = loss.item();
      if (!std::isfinite(lv)) throw TrainingError("joint loss diverged", step);
      entry.eta_loss += eta_value;
      entry.phi_loss += phi_value;
      entry.joint_loss += lv;
      backward(loss);
      opt.step();
    }
    log.push_back(entry);
  }
  return log;
}

// ------------------------------------------------------------- inference --

ShotScores score_video(const Model& model, const Video& video) {
  if (video.shots.empty()) throw DomainError("score_video: video has no shots");
  ShotScores out;
  const std::size_t n = video.shots.size();
  out.sentences.reserve(n);
  std::vector<Value> vl_features;
  vl_features.reserve(n);
  for (const Shot& shot : video.shots) {
    out.sentences.push_back(model.captioner->decode_greedy(shot.features));
    const std::vector<int> gt = model.vocab.encode(shot.groundtruth.tokens);
    out.eta_bar.push_back(pseudo_label(out.sentences.back(), gt));
    out.phi.push_back(shot.important);

    const Value features = Value::constant(shot.features);
    if (model.vlcmu) {
      MatchResult m = model.vlcmu->match(features, out.sentences.back(), /*track=*/false);
      out.alpha.push_back(m.alpha ? m.alpha.item() : 1.0);
      vl_features.push_back(m.f_vl);
    } else {
      out.alpha.push_back(1.0);
      vl_features.push_back(model.fallback_feature(features, out.sentences.back(), /*track=*/false));
    }
  }
  if (model.purport) {
    for (const Value& b : model.purport->score_video(vl_features, /*track=*/false))
      out.beta.push_back(b.item());
  } else {
    out.beta.assign(n, 1.0);
  }
  out.gamma = impact(out.alpha, out.beta);
  return out;
}

Synopsis synopsis_from_scores(const std::string& video_id, const Model& model,
                              const ShotScores& scores, int passes) {
  Synopsis syn;
  syn.video_id = video_id;
  syn.passes = passes;
  const std::vector<int> survivors = iterate_inference(scores.gamma, passes);
  for (int idx : survivors) {
    const auto toks = model.vocab.decode(scores.sentences[static_cast<std::size_t>(idx)]);
    std::string text;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) text += ' ';
      text += toks[i];
    }
    // Collapse runs of identical consecutive sentences, keeping the earliest.
    if (!syn.entries.empty() && syn.entries.back().sentence == text) continue;
    syn.entries.push_back({idx, std::move(text), passes});
  }
  syn.target_fraction =
      static_cast<double>(syn.entries.size()) / static_cast<double>(scores.gamma.size());
  return syn;
}

Synopsis assemble_synopsis(const Model& model, const Video& video, int passes) {
  return synopsis_from_scores(video.id, model, score_video(model, video), passes);
}

std::vector<int> retrieve_visual(const Synopsis& synopsis, const Video& video) {
  std::vector<int> shots;
  shots.reserve(synopsis.entries.size());
  for (const SynopsisEntry& e : synopsis.entries) {
    if (e.shot < 0 || e.shot >= video.num_shots())
      throw ContractError("synopsis shot " + std::to_string(e.shot) + " outside video " + video.id);
    shots.push_back(e.shot);
  }
  return shots;
}

json synopsis_to_json(const Synopsis& s) {
  json j;
  j["video"] = s.video_id;
  json entries = json::array();
  for (const SynopsisEntry& e : s.entries) entries.push_back({{"shot", e.shot}, {"sentence", e.sentence}});
  j["entries"] = entries;
  j["passes"] = s.passes;
  return j;
}

std::string synopsis_to_text(const Synopsis& s) {
  std::string out;
  for (const SynopsisEntry& e : s.entries) {
    out += e.sentence;
    out += '\n';
  }
  return out;
}

}  // namespace tsg
