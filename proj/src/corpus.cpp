#include "tsg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tsg/error.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace tsg {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    // strip leading/trailing ASCII punctuation
    std::size_t b = 0, e = cur.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(cur[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(cur[e - 1]))) --e;
    if (e > b) out.push_back(cur.substr(b, e - b));
    cur.clear();
  };
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      flush();
    } else {
      cur.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
    }
  }
  flush();
  return out;
}

// ------------------------------------------------------------ vocabulary --

namespace {
const char* kReservedNames[kNumReserved] = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& captions, int min_count) {
  if (min_count < 1) throw DomainError("build_vocab: min_count must be >= 1");
  if (captions.empty()) throw DomainError("build_vocab: empty corpus");
  std::unordered_map<std::string, long long> freq;
  for (const auto& cap : captions) {
    for (const auto& tok : cap) ++freq[tok];
  }
  std::vector<std::pair<std::string, long long>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kNumReserved + kept.size());
  for (const char* r : kReservedNames) tokens.emplace_back(r);
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> full) {
  if (full.size() < kNumReserved) throw DomainError("vocabulary must include the reserved tokens");
  for (int i = 0; i < kNumReserved; ++i) {
    if (full[static_cast<std::size_t>(i)] != kReservedNames[i])
      throw DomainError("vocabulary reserved slot " + std::to_string(i) + " is '" +
                        full[static_cast<std::size_t>(i)] + "'");
  }
  Vocabulary v;
  v.tokens_ = std::move(full);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second)
      throw DomainError("duplicate vocabulary token: " + v.tokens_[i]);
  }
  return v;
}

int Vocabulary::encode_token(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> toks) const {
  std::vector<int> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(encode_token(t));
  return ids;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) throw IndexError("vocabulary index " + std::to_string(id) +
                                               " outside size " + std::to_string(size()));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token(id));
  return out;
}

void Vocabulary::save(const std::string& path) const {
  json j;
  j["tokens"] = tokens_;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad vocabulary json: ") + e.what(), 0);
  }
  if (!j.contains("tokens") || !j["tokens"].is_array())
    throw FormatError("vocabulary json lacks a tokens array", 0);
  return from_tokens(j["tokens"].get<std::vector<std::string>>());
}

std::string Caption::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

const Video* Corpus::find(const std::string& id) const {
  for (const Video& v : videos) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::vector<const Video*> Corpus::split(const std::vector<std::string>& ids) const {
  std::vector<const Video*> out;
  for (const auto& id : ids) {
    const Video* v = find(id);
    if (!v) throw ContractError("split names unknown video: " + id);
    out.push_back(v);
  }
  return out;
}

// -------------------------------------------------------- feature format --

namespace {

constexpr char kFeatMagic[4] = {'T', 'S', 'G', 'F'};
constexpr std::uint32_t kFeatVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}
std::uint32_t get_u32(const std::string& buf, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
  return v;
}
double get_f64(const std::string& buf, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_features(const std::string& path, const Tensor& t) {
  if (t.rank() != 3)
    throw DimensionError("save_features expects [N x k x d], got " + t.shape_str());
  std::string out;
  out.append(kFeatMagic, 4);
  put_u32(out, kFeatVersion);
  for (int i = 0; i < 3; ++i) put_u32(out, static_cast<std::uint32_t>(t.dim(i)));
  for (double v : t.data()) put_f64(out, v);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("write failed: " + path);
}

Tensor load_features(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 || std::memcmp(buf.data(), kFeatMagic, 4) != 0)
    throw FormatError("bad feature-container magic", 0);
  if (buf.size() < 20) throw FormatError("feature container truncated in header", buf.size());
  const std::uint32_t version = get_u32(buf, 4);
  if (version != kFeatVersion)
    throw FormatError("unsupported feature-container version " + std::to_string(version), 4);
  std::uint64_t dims[3];
  for (int i = 0; i < 3; ++i) dims[i] = get_u32(buf, 8 + 4 * static_cast<std::size_t>(i));
  std::uint64_t numel = 1;
  for (int i = 0; i < 3; ++i) {
    if (dims[i] == 0) throw FormatError("zero dimension in feature header", 8 + 4 * static_cast<std::size_t>(i));
    numel *= dims[i];
    if (numel > (1ULL << 31))
      throw FormatError("dimension overflow in feature header", 8 + 4 * static_cast<std::size_t>(i));
  }
  const std::size_t expect = 20 + numel * 8;
  if (buf.size() < expect)
    throw FormatError("feature container truncated: payload needs " + std::to_string(expect) +
                          " bytes, file has " + std::to_string(buf.size()),
                      buf.size());
  if (buf.size() > expect) throw FormatError("trailing bytes after feature payload", expect);
  std::vector<double> data(static_cast<std::size_t>(numel));
  for (std::uint64_t i = 0; i < numel; ++i)
    data[static_cast<std::size_t>(i)] = get_f64(buf, 20 + static_cast<std::size_t>(i) * 8);
  return Tensor({static_cast<int>(dims[0]), static_cast<int>(dims[1]), static_cast<int>(dims[2])},
                std::move(data));
}

// ------------------------------------------------------------- corpus io --

namespace {

void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  for (const json& j : lines) f << j.dump() << "\n";
}

std::vector<json> read_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open: " + path);
  std::vector<json> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": bad json line: " + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace

void save_corpus(const std::string& dir, const Corpus& corpus) {
  fs::create_directories(fs::path(dir) / "features");
  std::vector<json> annotations, references, corruption, events;
  for (const Video& v : corpus.videos) {
    const int n = v.num_shots();
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(n) * corpus.frames_per_shot * corpus.feature_dim);
    for (const Shot& s : v.shots) {
      auto d = s.features.data();
      flat.insert(flat.end(), d.begin(), d.end());
      annotations.push_back(
          {{"video", v.id}, {"shot", s.index}, {"caption", s.groundtruth.text()}, {"important", s.important}});
      corruption.push_back({{"video", v.id}, {"shot", s.index}, {"corrupted", s.corrupted}});
      events.push_back({{"video", v.id}, {"shot", s.index}, {"instance", s.event_instance}});
    }
    save_features((fs::path(dir) / "features" / (v.id + ".tsgf")).string(),
                  Tensor({n, corpus.frames_per_shot, corpus.feature_dim}, std::move(flat)));
    for (std::size_t r = 0; r < v.references.size(); ++r)
      references.push_back({{"video", v.id}, {"ref", static_cast<int>(r)}, {"text", v.references[r]}});
  }
  write_lines((fs::path(dir) / "annotations.jsonl").string(), annotations);
  write_lines((fs::path(dir) / "references.jsonl").string(), references);
  write_lines((fs::path(dir) / "corruption.jsonl").string(), corruption);
  write_lines((fs::path(dir) / "events.jsonl").string(), events);
  json splits;
  splits["train"] = corpus.train_ids;
  splits["test"] = corpus.test_ids;
  std::ofstream f((fs::path(dir) / "splits.json").string(), std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + dir + "/splits.json");
  f << splits.dump(2) << "\n";
}

Corpus load_corpus(const std::string& dir) {
  Corpus corpus;

  std::ifstream sf((fs::path(dir) / "splits.json").string());
  if (!sf) throw Error("cannot open: " + dir + "/splits.json");
  json splits;
  try {
    sf >> splits;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad splits.json: ") + e.what(), 0);
  }
  corpus.train_ids = splits.at("train").get<std::vector<std::string>>();
  corpus.test_ids = splits.at("test").get<std::vector<std::string>>();

  // Annotations define video order and shot counts.
  std::map<std::string, std::size_t> by_id;
  for (const json& j : read_lines((fs::path(dir) / "annotations.jsonl").string())) {
    const std::string vid = j.at("video").get<std::string>();
    const int shot = j.at("shot").get<int>();
    auto [it, fresh] = by_id.emplace(vid, corpus.videos.size());
    if (fresh) corpus.videos.push_back(Video{vid, {}, {}});
    Video& v = corpus.videos[it->second];
    if (shot != v.num_shots())
      throw FormatError("annotations for " + vid + " are not contiguous at shot " + std::to_string(shot),
                        static_cast<std::size_t>(shot));
    Shot s;
    s.index = shot;
    s.groundtruth.tokens = tokenize(j.at("caption").get<std::string>());
    if (s.groundtruth.tokens.empty())
      throw FormatError("empty groundtruth caption for " + vid + " shot " + std::to_string(shot),
                        static_cast<std::size_t>(shot));
    s.important = j.at("important").get<int>();
    if (s.important != 0 && s.important != 1)
      throw FormatError("importance flag must be 0/1 for " + vid + " shot " + std::to_string(shot),
                        static_cast<std::size_t>(shot));
    v.shots.push_back(std::move(s));
  }
  if (corpus.videos.empty()) throw DomainError("corpus has no annotated videos");

  for (const json& j : read_lines((fs::path(dir) / "references.jsonl").string())) {
    const std::string vid = j.at("video").get<std::string>();
    auto it = by_id.find(vid);
    if (it == by_id.end()) throw FormatError("references name unknown video " + vid, 0);
    Video& v = corpus.videos[it->second];
    const int r = j.at("ref").get<int>();
    if (r != static_cast<int>(v.references.size()))
      throw FormatError("references for " + vid + " are out of order at ref " + std::to_string(r),
                        static_cast<std::size_t>(r));
    v.references.push_back(j.at("text").get<std::string>());
  }

  auto load_sidecar = [&](const char* file, const char* field, auto assign) {
    const fs::path path = fs::path(dir) / file;
    if (!fs::exists(path)) return;
    for (const json& j : read_lines(path.string())) {
      const std::string vid = j.at("video").get<std::string>();
      auto it = by_id.find(vid);
      if (it == by_id.end()) throw FormatError(std::string(file) + " names unknown video " + vid, 0);
      Video& v = corpus.videos[it->second];
      const int shot = j.at("shot").get<int>();
      if (shot < 0 || shot >= v.num_shots())
        throw FormatError(std::string(file) + " shot index out of range for " + vid,
                          static_cast<std::size_t>(shot));
      assign(v.shots[static_cast<std::size_t>(shot)], j.at(field).get<int>());
    }
  };
  load_sidecar("corruption.jsonl", "corrupted", [](Shot& s, int v) { s.corrupted = v; });
  load_sidecar("events.jsonl", "instance", [](Shot& s, int v) { s.event_instance = v; });

  for (Video& v : corpus.videos) {
    Tensor feats = load_features((fs::path(dir) / "features" / (v.id + ".tsgf")).string());
    if (feats.dim(0) != v.num_shots())
      throw FormatError("feature container for " + v.id + " has " + std::to_string(feats.dim(0)) +
                            " shots, annotations have " + std::to_string(v.num_shots()),
                        8);
    const int k = feats.dim(1), d = feats.dim(2);
    if (corpus.frames_per_shot == 0) {
      corpus.frames_per_shot = k;
      corpus.feature_dim = d;
    } else if (corpus.frames_per_shot != k || corpus.feature_dim != d) {
      throw FormatError("feature dims for " + v.id + " disagree with the rest of the corpus", 12);
    }
    for (Shot& s : v.shots) {
      std::vector<double> block(static_cast<std::size_t>(k) * d);
      const double* src = feats.raw() + static_cast<std::size_t>(s.index) * k * d;
      std::copy(src, src + block.size(), block.begin());
      s.features = Tensor({k, d}, std::move(block));
    }
  }

  // splits must reference known ids
  corpus.split(corpus.train_ids);
  corpus.split(corpus.test_ids);
  return corpus;
}

std::vector<std::vector<std::string>> groundtruth_token_lists(
    const Corpus&, const std::vector<const Video*>& vids) {
  std::vector<std::vector<std::string>> out;
  for (const Video* v : vids) {
    for (const Shot& s : v->shots) out.push_back(s.groundtruth.tokens);
  }
  return out;
}

}  // namespace tsg
