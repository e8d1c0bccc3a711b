#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "seps/binary_io.hpp"
#include "seps/errors.hpp"
#include "seps/nn/mlp.hpp"

namespace seps::nn {

// Layout (all little-endian):
//   char[8]  magic "SEPSMLP\0"
//   u32      format version
//   u32      activation tag
//   u32      number of layer sizes L
//   u64 x L  layer sizes
//   u64      parameter count
//   f64 x P  parameters in layer order (W row-major, then b)
inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'P', 'S', 'M', 'L', 'P', '\0'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(std::ostream& out, const MlpNetwork& net) {
  out.write(kCheckpointMagic, sizeof kCheckpointMagic);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.activation()));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_sizes().size()));
  for (std::size_t s : net.layer_sizes()) io::write_le<std::uint64_t>(out, s);
  io::write_le<std::uint64_t>(out, net.parameter_count());
  for (double p : net.parameters()) io::write_le<double>(out, p);
}

inline MlpNetwork read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, sizeof magic) || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw ParseError("checkpoint: bad magic");
  if (const auto v = io::read_le<std::uint32_t>(in); v != kCheckpointVersion)
    throw ParseError("checkpoint: unsupported format version " + std::to_string(v));
  const auto tag = io::read_le<std::uint32_t>(in);
  if (tag != static_cast<std::uint32_t>(Activation::Tanh)) throw ParseError("checkpoint: unknown activation tag");
  const auto n_sizes = io::read_le<std::uint32_t>(in);
  if (n_sizes < 2 || n_sizes > 64) throw ParseError("checkpoint: implausible layer count");
  std::vector<std::size_t> sizes(n_sizes);
  for (auto& s : sizes) s = io::read_le<std::uint64_t>(in);
  MlpNetwork net(sizes, static_cast<Activation>(tag));
  if (io::read_le<std::uint64_t>(in) != net.parameter_count())
    throw ParseError("checkpoint: parameter count does not match layer sizes");
  for (double& p : net.parameters()) p = io::read_le<double>(in);
  return net;
}

inline void save_checkpoint(const std::filesystem::path& path, const MlpNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, net);
}

inline MlpNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace seps::nn
