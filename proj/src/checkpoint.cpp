#include "cicw/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "cicw/errors.hpp"

namespace cicw {
namespace {

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  in.read(reinterpret_cast<char*>(bytes), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), ErrorKind::kIo,
          "checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const MLPParams& params) {
  params.validate();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, params.head == OutputHead::kSigmoidBinary ? 0u : 1u);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.layer_sizes.size()));
  for (std::size_t s : params.layer_sizes) put<std::uint64_t>(out, s);
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const Eigen::MatrixXd& w = params.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) put<double>(out, w(r, c));
    }
    for (Eigen::Index r = 0; r < params.biases[l].size(); ++r) put<double>(out, params.biases[l](r));
  }
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing checkpoint");
}

MLPParams read_checkpoint(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(magic)) &&
              std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0,
          ErrorKind::kIo, "not a checkpoint file (bad magic)");
  const auto head_code = get<std::uint32_t>(in);
  require(head_code <= 1, ErrorKind::kIo, "checkpoint has an unknown head code");
  const auto count = get<std::uint32_t>(in);
  require(count >= 2 && count < 1024, ErrorKind::kIo, "checkpoint has an implausible layer count");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes) {
    const auto v = get<std::uint64_t>(in);
    require(v >= 1 && v < (1u << 24), ErrorKind::kIo, "checkpoint has an implausible layer size");
    s = static_cast<std::size_t>(v);
  }
  MLPParams p = MLPParams::zeros(sizes, head_code == 0 ? OutputHead::kSigmoidBinary : OutputHead::kSoftmax);
  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r) {
      for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) p.weights[l](r, c) = get<double>(in);
    }
    for (Eigen::Index r = 0; r < p.biases[l].size(); ++r) p.biases[l](r) = get<double>(in);
  }
  p.validate();
  return p;
}

void save_checkpoint(const std::string& path, const MLPParams& params) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot open '" + path + "' for writing");
  write_checkpoint(out, params);
}

MLPParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, "cannot open checkpoint '" + path + "'");
  return read_checkpoint(in);
}

}  // namespace cicw
