#include "awt/training/checkpoint.hpp"

#include "awt/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace awt {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'A', 'W', 'T', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    buf_.append(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void put_raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(const std::string& b) : buf_(b) {}
  template <typename T>
  T get() {
    T v;
    get_raw(&v, sizeof v);
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void get_raw(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ValidationError("checkpoint: truncated archive");
  }
  const std::string& buf_;
  std::size_t pos_ = 0;
};

void put_stats(Writer& w, const ChannelStats& s) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(s.mean.size()));
  for (Index c = 0; c < s.mean.size(); ++c) {
    w.put<double>(s.mean(c));
    w.put<double>(s.std(c));
    w.put<std::uint8_t>(c < static_cast<Index>(s.clamped.size()) && s.clamped[static_cast<std::size_t>(c)] ? 1 : 0);
  }
}

ChannelStats get_stats(Reader& r) {
  ChannelStats s;
  const auto n = r.get<std::uint32_t>();
  if (n > 64) throw ValidationError("checkpoint: implausible channel count");
  s.mean.resize(n);
  s.std.resize(n);
  s.clamped.resize(n);
  for (std::uint32_t c = 0; c < n; ++c) {
    s.mean(c) = r.get<double>();
    s.std(c) = r.get<double>();
    s.clamped[c] = r.get<std::uint8_t>() != 0;
  }
  return s;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  Writer w;
  w.put_raw(kMagic, sizeof kMagic);
  const ModelConfig& c = ck.model.config;
  w.put<std::int32_t>(c.class_count);
  for (Index v : {c.conv1_width, c.conv2_width, c.conv3_width, c.disc_hidden, c.disc_outputs}) w.put<std::int64_t>(v);
  w.put<std::uint64_t>(ck.model.seed);
  w.put<std::uint64_t>(ck.split_seed);
  w.put<double>(ck.train_fraction);
  w.put<double>(ck.rate_inertia_hz);
  w.put<double>(ck.rate_trajectory_hz);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ck.class_names.size()));
  for (const auto& n : ck.class_names) w.put_string(n);
  put_stats(w, ck.stats_inertia);
  put_stats(w, ck.stats_trajectory);
  const auto blocks = ck.model.all_blocks();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(blocks.size()));
  for (const ParamBlock<Real>* b : blocks) {
    w.put_string(b->name);
    w.put<std::int64_t>(b->value.rows());
    w.put<std::int64_t>(b->value.cols());
    w.put_raw(b->value.data(), static_cast<std::size_t>(b->value.size()) * sizeof(Real));
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  char magic[8];
  r.get_raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw ValidationError("checkpoint: bad magic");
  ModelConfig c;
  c.class_count = r.get<std::int32_t>();
  for (Index* v : {&c.conv1_width, &c.conv2_width, &c.conv3_width, &c.disc_hidden, &c.disc_outputs}) {
    *v = r.get<std::int64_t>();
    if (*v < 1 || *v > 4096) throw ValidationError("checkpoint: implausible layer width");
  }
  const auto seed = r.get<std::uint64_t>();
  Checkpoint ck{init_model<Real>(c, seed), {}, {}, 0, 0, {}, 0, 0.8};
  ck.split_seed = r.get<std::uint64_t>();
  ck.train_fraction = r.get<double>();
  ck.rate_inertia_hz = r.get<double>();
  ck.rate_trajectory_hz = r.get<double>();
  const auto names = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < names; ++i) ck.class_names.push_back(r.get_string());
  ck.stats_inertia = get_stats(r);
  ck.stats_trajectory = get_stats(r);

  std::map<std::string, ParamBlock<Real>*> by_name;
  for (ParamBlock<Real>* b : ck.model.all_blocks()) by_name[b->name] = b;
  const auto count = r.get<std::uint32_t>();
  if (count != by_name.size()) throw ValidationError("checkpoint: block count does not match architecture");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    const auto rows = r.get<std::int64_t>();
    const auto cols = r.get<std::int64_t>();
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ValidationError("checkpoint: unknown block '" + name + "'");
    ParamBlock<Real>& b = *it->second;
    if (rows != b.value.rows() || cols != b.value.cols()) {
      throw ValidationError("checkpoint: block '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", expected " + std::to_string(b.value.rows()) + "x" +
                            std::to_string(b.value.cols()));
    }
    r.get_raw(b.value.data(), static_cast<std::size_t>(b.value.size()) * sizeof(Real));
  }
  if (!r.done()) throw ValidationError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write checkpoint " + path.string());
  const std::string bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace awt
