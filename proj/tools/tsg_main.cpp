#include <omp.h>

#include <algorithm>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsg/error.hpp"
#include "tsg/metrics.hpp"
#include "tsg/pipeline.hpp"
#include "tsg/synthetic.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tsg;

namespace {

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

std::string config_hash(const json& j) { return hex64(Rng::hash64(j.dump())); }

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f << j.dump(2) << "\n";
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path.string());
  f << text;
}

json load_json_file(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open: " + path.string());
  try {
    json j;
    f >> j;
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what(), 0);
  }
}

// ------------------------------------------------------------------ synth --

struct SynthArgs {
  std::string spec_path, out_dir;
  std::optional<std::uint64_t> seed;
};

void run_synth(const SynthArgs& a) {
  json doc = load_json_file(a.spec_path);
  if (a.seed) doc["seed"] = *a.seed;
  SyntheticSpec spec = SyntheticSpec::from_json(doc);
  Corpus corpus = generate_synthetic(spec);
  fs::create_directories(a.out_dir);
  save_corpus(a.out_dir, corpus);
  const json resolved = spec.to_json();
  write_json_file(fs::path(a.out_dir) / "spec.resolved.json", resolved);
  json run;
  run["command"] = "synth";
  run["spec"] = resolved;
  run["seed"] = spec.seed;
  run["config_hash"] = config_hash(resolved);
  write_json_file(fs::path(a.out_dir) / "run_config.json", run);
  long long shots = 0;
  for (const Video& v : corpus.videos) shots += v.num_shots();
  std::cerr << "synth: " << corpus.videos.size() << " videos, " << shots << " shots -> " << a.out_dir
            << "\n";
}

// ------------------------------------------------------------------ train --

struct TrainArgs {
  std::string corpus_dir, out_dir, config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda1, lambda2, pretrain_lr, joint_lr;
  std::optional<int> pretrain_epochs, joint_epochs, passes;
  bool disable_vlcmu = false, disable_eta_loss = false, disable_purport = false;
};

void run_train(const TrainArgs& a) {
  Corpus corpus = load_corpus(a.corpus_dir);

  ModelSpec spec;
  TrainConfig tcfg;
  if (!a.config_path.empty()) {
    json j = load_json_file(a.config_path);
    if (j.contains("model")) spec = ModelSpec::from_json(j.at("model"));
    if (j.contains("train")) tcfg = TrainConfig::from_json(j.at("train"));
  }
  // Flags win over the config file.
  if (a.seed) tcfg.seed = *a.seed;
  if (a.lambda1) tcfg.lambda1 = *a.lambda1;
  if (a.lambda2) tcfg.lambda2 = *a.lambda2;
  if (a.pretrain_lr) tcfg.pretrain_lr = *a.pretrain_lr;
  if (a.joint_lr) tcfg.joint_lr = *a.joint_lr;
  if (a.pretrain_epochs) tcfg.pretrain_epochs = *a.pretrain_epochs;
  if (a.joint_epochs) tcfg.joint_epochs = *a.joint_epochs;
  if (a.passes) tcfg.passes = *a.passes;
  tcfg.disable_vlcmu = tcfg.disable_vlcmu || a.disable_vlcmu;
  tcfg.disable_eta_loss = tcfg.disable_eta_loss || a.disable_eta_loss;
  tcfg.disable_purport = tcfg.disable_purport || a.disable_purport;

  spec.captioner.frame_dim = corpus.feature_dim;
  spec.captioner.frames = corpus.frames_per_shot;

  Vocabulary vocab = Vocabulary::build(groundtruth_token_lists(corpus, corpus.train()), 1);
  Model model(spec, tcfg, std::move(vocab));

  fs::create_directories(a.out_dir);
  const auto pretrain_log = pretrain_captioner(model, corpus);
  {
    std::ofstream f((fs::path(a.out_dir) / "pretrain_log.jsonl").string(), std::ios::trunc);
    for (const auto& e : pretrain_log) {
      json j{{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}, {"best", e.best}};
      f << j.dump() << "\n";
    }
  }
  std::cerr << "pretrain: loss " << pretrain_log.front().train_loss << " -> "
            << pretrain_log.back().train_loss << " over " << model.tcfg.pretrain_epochs << " epochs\n";

  if (model.tcfg.joint_epochs > 0) {
    const auto joint_log = train_joint(model, corpus);
    std::ofstream f((fs::path(a.out_dir) / "joint_log.jsonl").string(), std::ios::trunc);
    for (const auto& e : joint_log) {
      json j{{"epoch", e.epoch},
             {"eta_loss", e.eta_loss},
             {"phi_loss", e.phi_loss},
             {"joint_loss", e.joint_loss}};
      f << j.dump() << "\n";
    }
    if (!joint_log.empty())
      std::cerr << "joint: loss " << joint_log.front().joint_loss << " -> "
                << joint_log.back().joint_loss << " over " << model.tcfg.joint_epochs << " epochs\n";
  }

  model.save_dir(a.out_dir);
  json run;
  run["command"] = "train";
  run["corpus"] = a.corpus_dir;
  run["model"] = model.spec.to_json();
  run["train"] = model.tcfg.to_json();
  run["seed"] = model.tcfg.seed;
  run["config_hash"] = config_hash(run);
  write_json_file(fs::path(a.out_dir) / "run_config.json", run);
}

// ------------------------------------------------------------------ infer --

struct InferArgs {
  std::string model_dir, corpus_dir, out_dir;
  std::vector<std::string> videos;
  std::optional<int> passes;
  int workers = 1;
};

void run_infer(const InferArgs& a) {
  auto model = Model::load_dir(a.model_dir);
  Corpus corpus = load_corpus(a.corpus_dir);
  if (corpus.feature_dim != model->spec.captioner.frame_dim ||
      corpus.frames_per_shot != model->spec.captioner.frames)
    throw ValidationError("corpus features " + std::to_string(corpus.frames_per_shot) + "x" +
                          std::to_string(corpus.feature_dim) + " do not match the model");

  std::vector<const Video*> targets;
  if (a.videos.empty()) {
    for (const Video& v : corpus.videos) targets.push_back(&v);
  } else {
    for (const std::string& id : a.videos) {
      const Video* v = corpus.find(id);
      if (!v) throw ValidationError("unknown video id: " + id);
      targets.push_back(v);
    }
  }
  const int passes = a.passes.value_or(model->tcfg.passes);
  if (passes < 1) throw ValidationError("passes must be >= 1");

  std::vector<ShotScores> scores(targets.size());
  std::vector<Synopsis> synopses(targets.size());
  std::exception_ptr failure;
  // Per-video inference is read-only on the model; workers only change the
  // schedule, never the result.
#pragma omp parallel for num_threads(std::max(1, a.workers)) schedule(dynamic)
  for (std::size_t i = 0; i < targets.size(); ++i) {
    try {
      scores[i] = score_video(*model, *targets[i]);
      synopses[i] = synopsis_from_scores(targets[i]->id, *model, scores[i], passes);
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const Video& v = *targets[i];
    write_json_file(fs::path(a.out_dir) / (v.id + ".synopsis.json"), synopsis_to_json(synopses[i]));
    write_text_file(fs::path(a.out_dir) / (v.id + ".synopsis.txt"), synopsis_to_text(synopses[i]));
    std::ofstream f((fs::path(a.out_dir) / (v.id + ".scores.jsonl")).string(), std::ios::trunc);
    for (std::size_t p = 0; p < scores[i].gamma.size(); ++p) {
      json j{{"video", v.id},
             {"shot", static_cast<int>(p)},
             {"alpha", scores[i].alpha[p]},
             {"eta_bar", scores[i].eta_bar[p]},
             {"beta", scores[i].beta[p]},
             {"phi", scores[i].phi[p]},
             {"gamma", scores[i].gamma[p]}};
      f << j.dump() << "\n";
    }
  }
  json run;
  run["command"] = "infer";
  run["model"] = a.model_dir;
  run["corpus"] = a.corpus_dir;
  run["passes"] = passes;
  run["train"] = model->tcfg.to_json();
  run["config_hash"] = config_hash(run);
  write_json_file(fs::path(a.out_dir) / "run_config.json", run);
  std::cerr << "infer: " << targets.size() << " videos, " << passes << " passes -> " << a.out_dir << "\n";
}

// ------------------------------------------------------------------- eval --

struct EvalArgs {
  std::vector<std::string> synopsis_paths;
  std::string references_path, out_path;
  std::uint64_t seed = 0;
  int workers = 1;
};

json prf_json(const PRF& p) {
  return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

void run_eval(const EvalArgs& a) {
  // Synopses: explicit files, or every *.synopsis.json under a directory.
  std::vector<fs::path> files;
  for (const std::string& p : a.synopsis_paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().string().ends_with(".synopsis.json")) files.push_back(e.path());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("no synopsis files given");

  std::map<std::string, std::vector<std::string>> candidates;  // video -> tokens
  for (const fs::path& f : files) {
    json j = load_json_file(f);
    std::string text;
    for (const json& e : j.at("entries")) {
      text += e.at("sentence").get<std::string>();
      text += ' ';
    }
    candidates[j.at("video").get<std::string>()] = tokenize(text);
  }

  std::map<std::string, std::vector<std::vector<std::string>>> references;
  {
    std::ifstream f(a.references_path);
    if (!f) throw Error("cannot open: " + a.references_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw FormatError(a.references_path + ":" + std::to_string(lineno) + ": " + e.what(), lineno);
      }
      references[j.at("video").get<std::string>()].push_back(tokenize(j.at("text").get<std::string>()));
    }
  }

  json videos;
  PRF su4_sum, rl_sum;
  double bleu_sum = 0.0;
  int count = 0;
  for (const auto& [id, cand] : candidates) {
    auto it = references.find(id);
    if (it == references.end()) throw ValidationError("no references for video " + id);
    std::span<const std::vector<std::string>> refs(it->second);
    const PRF su4 = multi_ref_prf(cand, refs, [](auto c, auto r) { return rouge_su4(c, r); });
    const PRF rl = multi_ref_prf(cand, refs, [](auto c, auto r) { return rouge_l(c, r); });
    const double bl = multi_ref_bleu2(cand, refs);
    json entry;
    entry["rouge_su4"] = prf_json(su4);
    entry["rouge_l"] = prf_json(rl);
    entry["bleu2"] = bl;
    videos[id] = entry;
    su4_sum.precision += su4.precision;
    su4_sum.recall += su4.recall;
    su4_sum.f1 += su4.f1;
    rl_sum.precision += rl.precision;
    rl_sum.recall += rl.recall;
    rl_sum.f1 += rl.f1;
    bleu_sum += bl;
    ++count;
  }
  const double n = static_cast<double>(count);
  json macro;
  macro["rouge_su4"] = prf_json({su4_sum.precision / n, su4_sum.recall / n, su4_sum.f1 / n});
  macro["rouge_l"] = prf_json({rl_sum.precision / n, rl_sum.recall / n, rl_sum.f1 / n});
  macro["bleu2"] = bleu_sum / n;

  json report;
  report["videos"] = videos;
  report["macro"] = macro;
  json meta;
  meta["seed"] = a.seed;
  // hash the semantic configuration, never host paths, so identical inputs
  // give byte-identical reports wherever they live
  json cfg;
  cfg["command"] = "eval";
  cfg["seed"] = a.seed;
  cfg["videos"] = count;
  meta["config_hash"] = config_hash(cfg);
  report["meta"] = meta;

  if (a.out_path.empty()) {
    std::cout << report.dump(2) << "\n";
  } else {
    write_json_file(a.out_path, report);
    std::cerr << "eval: " << count << " videos -> " << a.out_path << "\n";
  }
}

// ---------------------------------------------------------------- inspect --

void run_inspect(const std::string& corpus_dir) {
  Corpus corpus = load_corpus(corpus_dir);
  long long shots = 0, important = 0;
  for (const Video& v : corpus.videos) {
    shots += v.num_shots();
    for (const Shot& s : v.shots) important += s.important;
  }
  Vocabulary vocab = Vocabulary::build(groundtruth_token_lists(corpus, corpus.train()), 1);
  json j;
  j["videos"] = corpus.videos.size();
  j["train_videos"] = corpus.train_ids.size();
  j["test_videos"] = corpus.test_ids.size();
  j["shots"] = shots;
  j["frames_per_shot"] = corpus.frames_per_shot;
  j["feature_dim"] = corpus.feature_dim;
  j["vocab_size"] = vocab.size();
  j["phi_fraction"] = static_cast<double>(important) / static_cast<double>(shots);
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text-synopsis pipeline: dense shot captioning distilled into a short summary"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "generate a synthetic corpus from a spec json");
  s->add_option("--spec", synth.spec_path, "synthetic spec json")->required();
  s->add_option("--out", synth.out_dir, "output corpus directory")->required();
  s->add_option("--seed", synth.seed, "override the spec seed");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "pretrain the captioner, then train the joint model");
  t->add_option("--corpus", train.corpus_dir, "corpus directory")->required();
  t->add_option("--out", train.out_dir, "model output directory")->required();
  t->add_option("--config", train.config_path, "json config with model/train sections");
  t->add_option("--seed", train.seed, "training seed");
  t->add_option("--lambda1", train.lambda1, "weight of the matching loss");
  t->add_option("--lambda2", train.lambda2, "weight of the significance loss");
  t->add_option("--pretrain-epochs", train.pretrain_epochs);
  t->add_option("--joint-epochs", train.joint_epochs);
  t->add_option("--pretrain-lr", train.pretrain_lr);
  t->add_option("--joint-lr", train.joint_lr);
  t->add_option("--passes", train.passes, "default inference pass count");
  t->add_flag("--disable-vlcmu", train.disable_vlcmu, "ablation: drop the matching unit");
  t->add_flag("--disable-eta-loss", train.disable_eta_loss, "ablation: drop the matching loss");
  t->add_flag("--disable-purport", train.disable_purport, "ablation: drop the significance net");

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "decode, score and select a synopsis per video");
  i->add_option("--model", infer.model_dir, "trained model directory")->required();
  i->add_option("--corpus", infer.corpus_dir, "corpus directory")->required();
  i->add_option("--out", infer.out_dir, "output directory")->required();
  i->add_option("--video", infer.videos, "video id (repeatable; default: all)");
  i->add_option("--passes", infer.passes, "inference passes");
  i->add_option("--workers", infer.workers, "parallel videos");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "score synopses against reference summaries");
  e->add_option("--synopsis", eval.synopsis_paths, "synopsis json files or directories")->required();
  e->add_option("--references", eval.references_path, "references.jsonl")->required();
  e->add_option("--out", eval.out_path, "report path (default: stdout)");
  e->add_option("--seed", eval.seed, "seed recorded in the report metadata");
  e->add_option("--workers", eval.workers, "parallel videos");

  std::string inspect_dir;
  auto* n = app.add_subcommand("inspect", "print corpus statistics");
  n->add_option("--corpus", inspect_dir, "corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex);
    return code == 0 ? 0 : 2;
  }

  try {
    if (s->parsed()) run_synth(synth);
    if (t->parsed()) run_train(train);
    if (i->parsed()) run_infer(infer);
    if (e->parsed()) run_eval(eval);
    if (n->parsed()) run_inspect(inspect_dir);
    return 0;
  } catch (const ValidationError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const ConfigError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
