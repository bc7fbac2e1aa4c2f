#include "spikegrasp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "spikegrasp/error.hpp"

namespace spikegrasp {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  template <typename T>
  void put(T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(m(r, c));
    }
  }
  void put_vector(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(v[i]);
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw Error("checkpoint truncated");
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  Eigen::MatrixXd get_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>();
    }
    return m;
  }
  Eigen::VectorXd get_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = get<double>();
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ActorCritic& agent) {
  const NetworkSpec& s = agent.actor_spec();
  Writer w;
  w.bytes().append(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(agent.kind() == ModelKind::kSnn ? 0 : 1);
  w.put<std::int32_t>(s.n0);
  w.put<std::int32_t>(s.n1);
  w.put<std::int32_t>(s.n2);
  w.put<std::int32_t>(s.steps);
  w.put<std::int32_t>(s.encoder == encoding::EncoderMode::kCurrent ? 0 : 1);
  w.put<std::int32_t>(s.surrogate.kind == snn::SurrogateKind::kRectangular ? 0
                                                                           : 1);
  for (double v : {s.lif.lambda, s.lif.resistance, s.lif.threshold, s.lif.dt,
                   s.lif.v_reset, s.nlif.lambda, s.nlif.v_clip, s.nlif.dt,
                   s.surrogate.width, s.init_gain_in, s.init_gain_out}) {
    w.put<double>(v);
  }
  w.put_matrix(agent.actor().w_in);
  w.put_matrix(agent.actor().w_out);
  w.put_vector(agent.actor().log_std);
  w.put_matrix(agent.critic().w_in);
  w.put_matrix(agent.critic().w_out);
  const std::uint64_t hash = fnv1a(w.bytes().data(), w.bytes().size());
  w.put<std::uint64_t>(hash);
  return std::move(w.bytes());
}

ActorCritic deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) + 8 ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) !=
          0) {
    throw Error("not a spikegrasp checkpoint (bad magic)");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a(bytes.data(), body)) {
    throw Error("checkpoint checksum mismatch (file corrupt)");
  }

  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kCheckpointMagic); ++i) r.get<char>();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind_tag = r.get<std::uint32_t>();
  if (kind_tag > 1) throw Error("checkpoint has unknown model kind");
  NetworkSpec s;
  s.n0 = r.get<std::int32_t>();
  s.n1 = r.get<std::int32_t>();
  s.n2 = r.get<std::int32_t>();
  s.steps = r.get<std::int32_t>();
  s.encoder = r.get<std::int32_t>() == 0 ? encoding::EncoderMode::kCurrent
                                         : encoding::EncoderMode::kLatency;
  s.surrogate.kind = r.get<std::int32_t>() == 0
                         ? snn::SurrogateKind::kRectangular
                         : snn::SurrogateKind::kFastSigmoid;
  s.lif.lambda = r.get<double>();
  s.lif.resistance = r.get<double>();
  s.lif.threshold = r.get<double>();
  s.lif.dt = r.get<double>();
  s.lif.v_reset = r.get<double>();
  s.nlif.lambda = r.get<double>();
  s.nlif.v_clip = r.get<double>();
  s.nlif.dt = r.get<double>();
  s.surrogate.width = r.get<double>();
  s.init_gain_in = r.get<double>();
  s.init_gain_out = r.get<double>();
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("checkpoint holds an invalid network spec: ") +
                e.what());
  }
  const std::size_t expected =
      r.pos() + sizeof(double) * (std::size_t(s.n0) * s.n1 * 2 +
                                  std::size_t(s.n1) * s.n2 + s.n2 + s.n1) +
      sizeof(std::uint64_t);
  if (expected != bytes.size()) throw Error("checkpoint size mismatch");

  PolicyParams actor;
  actor.w_in = r.get_matrix(s.n0, s.n1);
  actor.w_out = r.get_matrix(s.n1, s.n2);
  actor.log_std = r.get_vector(s.n2);
  PolicyParams critic;
  critic.w_in = r.get_matrix(s.n0, s.n1);
  critic.w_out = r.get_matrix(s.n1, 1);
  return ActorCritic(kind_tag == 0 ? ModelKind::kSnn : ModelKind::kAnn, s,
                     std::move(actor), std::move(critic));
}

void save_checkpoint(const ActorCritic& agent,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  const std::string bytes = serialize_checkpoint(agent);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

ActorCritic load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace spikegrasp
