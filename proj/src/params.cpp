#include "tsg/params.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "tsg/error.hpp"

namespace tsg {

void Parameter::assign(Tensor t) {
  require_same_shape(value, t, "Parameter::assign");
  value = std::move(t);
}

Parameter& ParamSet::insert(const std::string& name, std::vector<int> shape,
                            std::vector<double> data) {
  if (index_.count(name)) throw ContractError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(std::move(shape), std::move(data));
  p->grad.assign(static_cast<std::size_t>(p->value.numel()), 0.0);
  Parameter* raw = p.get();
  storage_.push_back(std::move(p));
  order_.push_back(raw);
  index_.emplace(name, raw);
  return *raw;
}

Parameter& ParamSet::create(const std::string& name, std::vector<int> shape, Rng& rng) {
  if (shape.empty()) throw DimensionError("parameter needs a shape: " + name);
  const int fan_in = shape.back();
  const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
  long long n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (double& v : data) v = rng.uniform(-s, s);
  return insert(name, std::move(shape), std::move(data));
}

Parameter& ParamSet::create_zeros(const std::string& name, std::vector<int> shape) {
  long long n = 1;
  for (int d : shape) n *= d;
  return insert(name, std::move(shape), std::vector<double>(static_cast<std::size_t>(n), 0.0));
}

Parameter* ParamSet::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : it->second;
}

Parameter& ParamSet::at(const std::string& name) const {
  Parameter* p = find(name);
  if (!p) throw ContractError("unknown parameter: " + name);
  return *p;
}

void ParamSet::zero_grads() const {
  for (Parameter* p : order_) p->zero_grad();
}

void ParamSet::set_frozen(const std::string& prefix, bool frozen) const {
  for (Parameter* p : order_) {
    if (p->name.rfind(prefix, 0) == 0) p->frozen = frozen;
  }
}

// ------------------------------------------------------------ checkpoint --

namespace {

constexpr char kMagic[4] = {'T', 'S', 'G', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > buf.size()) throw FormatError(std::string("checkpoint truncated reading ") + what, pos);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos + i])) << (8 * i);
    pos += 8;
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }
};

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return buf;
}

std::string serialize(const std::vector<Parameter*>& params) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    if (p->name.size() > 0xffff) throw ContractError("parameter name too long: " + p->name);
    put_u16(out, static_cast<std::uint16_t>(p->name.size()));
    out.append(p->name);
    out.push_back(static_cast<char>(p->value.rank()));
    for (int d : p->value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p->value.data()) put_f64(out, v);
  }
  return out;
}

}  // namespace

void ParamSet::save(const std::string& path) const { write_file(path, serialize(order_)); }

void ParamSet::save_prefix(const std::string& path, const std::string& prefix) const {
  std::vector<Parameter*> subset;
  for (Parameter* p : order_) {
    if (p->name.rfind(prefix, 0) == 0) subset.push_back(p);
  }
  write_file(path, serialize(subset));
}

void ParamSet::load(const std::string& path) const {
  const std::string buf = read_file(path);
  Reader r{buf};
  r.need(4, "magic");
  if (std::memcmp(buf.data(), kMagic, 4) != 0) throw FormatError("bad checkpoint magic", 0);
  r.pos = 4;
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("parameter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16("name length");
    r.need(name_len, "name");
    std::string name = buf.substr(r.pos, name_len);
    r.pos += name_len;
    r.need(1, "rank");
    const int rank = static_cast<std::uint8_t>(buf[r.pos++]);
    if (rank == 0 || rank > 8) throw FormatError("implausible rank for " + name, r.pos - 1);
    std::vector<int> shape(static_cast<std::size_t>(rank));
    long long numel = 1;
    for (int d = 0; d < rank; ++d) {
      const std::uint32_t dim = r.u32("dimension");
      if (dim == 0 || dim > (1u << 28)) throw FormatError("dimension overflow in " + name, r.pos - 4);
      shape[static_cast<std::size_t>(d)] = static_cast<int>(dim);
      numel *= dim;
      if (numel > (1LL << 31)) throw FormatError("dimension overflow in " + name, r.pos - 4);
    }
    std::vector<double> data(static_cast<std::size_t>(numel));
    for (long long k = 0; k < numel; ++k) data[static_cast<std::size_t>(k)] = r.f64("tensor data");
    Parameter* p = find(name);
    if (!p) throw FormatError("checkpoint names unknown parameter " + name, r.pos);
    Tensor t(std::move(shape), std::move(data));
    if (!p->value.same_shape(t))
      throw FormatError("checkpoint shape " + t.shape_str() + " does not match parameter " + name +
                            " " + p->value.shape_str(),
                        r.pos);
    p->value = std::move(t);
  }
  if (r.pos != buf.size()) throw FormatError("trailing bytes after checkpoint payload", r.pos);
}

// ----------------------------------------------------------------- adam --

Adam::Adam(const ParamSet& params, AdamConfig cfg) : cfg_(cfg), params_(params.all()) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(static_cast<std::size_t>(p->value.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p->value.numel()), 0.0);
  }
}

void Adam::step() {
  if (cfg_.clip_norm > 0) {
    double sq = 0.0;
    for (const Parameter* p : params_) {
      if (p->frozen) continue;
      for (double g : p->grad) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > cfg_.clip_norm) {
      const double s = cfg_.clip_norm / norm;
      for (Parameter* p : params_) {
        if (p->frozen) continue;
        for (double& g : p->grad) g *= s;
      }
    }
  }

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    const int n = p->value.numel();
    std::vector<double> next(p->value.raw(), p->value.raw() + n);
    for (int k = 0; k < n; ++k) {
      const double g = p->grad[static_cast<std::size_t>(k)];
      double& m = m_[i][static_cast<std::size_t>(k)];
      double& v = v_[i][static_cast<std::size_t>(k)];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m / bc1;
      const double vhat = v / bc2;
      next[static_cast<std::size_t>(k)] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p->value = Tensor(p->value.shape(), std::move(next));
    p->zero_grad();
  }
}

}  // namespace tsg
