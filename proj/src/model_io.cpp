#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>

#include "mcal/models.hpp"

namespace mcal {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'A', 'L', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  template <typename T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    out_.append(p, sizeof(T));
  }
  void put_matrix(const Eigen::MatrixXd& m) {
    put<std::uint64_t>(static_cast<std::uint64_t>(m.rows()));
    put<std::uint64_t>(static_cast<std::uint64_t>(m.cols()));
    out_.append(reinterpret_cast<const char*>(m.data()), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Eigen::MatrixXd get_matrix() {
    const auto rows = get<std::uint64_t>();
    const auto cols = get<std::uint64_t>();
    if (rows > (1u << 24) || cols > (1u << 24)) throw std::runtime_error("model blob: bad matrix shape");
    Eigen::MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
    const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(m.size());
    need(bytes);
    std::memcpy(m.data(), in_.data() + pos_, bytes);
    pos_ += bytes;
    return m;
  }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("model blob is truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const ModelState& state) {
  Writer w;
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put(static_cast<std::uint8_t>(state.loss.family));
  w.put(state.loss.gamma);
  w.put(static_cast<std::int32_t>(state.labeled.n_classes()));
  w.put(static_cast<std::uint8_t>(state.labeled.binary()));
  w.put(static_cast<std::uint64_t>(state.labeled.size()));
  for (std::size_t j = 0; j < state.labeled.size(); ++j) {
    w.put(static_cast<std::int64_t>(state.labeled.indices()[j]));
    w.put(static_cast<std::int32_t>(state.labeled.labels()[j]));
  }
  w.put_matrix(state.coeffs);
  w.put_matrix(state.covariance);
  w.put(static_cast<std::int32_t>(state.newton_iterations));
  w.put(state.gradient_norm);
  return w.take();
}

ModelState deserialize_model(std::string_view blob, std::shared_ptr<const SpectralDecomposition> sd) {
  Reader r(blob);
  for (char c : kMagic)
    if (r.get<char>() != c) throw std::runtime_error("not a model blob");
  if (r.get<std::uint32_t>() != kVersion) throw std::runtime_error("unsupported model blob version");
  const auto fam = r.get<std::uint8_t>();
  if (fam > static_cast<std::uint8_t>(Family::ce)) throw std::runtime_error("model blob: bad family");
  ModelState st;
  st.loss.family = static_cast<Family>(fam);
  st.loss.gamma = r.get<double>();
  const auto nc = r.get<std::int32_t>();
  const bool binary = r.get<std::uint8_t>() != 0;
  st.labeled = LabeledSet(nc, binary);
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t j = 0; j < count; ++j) {
    const auto idx = r.get<std::int64_t>();
    const auto lab = r.get<std::int32_t>();
    st.labeled.add(static_cast<Index>(idx), lab);
  }
  st.coeffs = r.get_matrix();
  st.covariance = r.get_matrix();
  st.newton_iterations = r.get<std::int32_t>();
  st.gradient_norm = r.get<double>();
  if (!r.at_end()) throw std::runtime_error("model blob has trailing bytes");
  if (sd && st.coeffs.rows() != sd->rank())
    throw std::runtime_error("model blob does not match the spectral decomposition");
  st.spectral = std::move(sd);
  return st;
}

}  // namespace mcal
