#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "dcl/errors.hpp"
#include "dcl/model.hpp"

namespace dcl {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'C', 'L', 'N', 'E', 'T', '\0', '\1'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("checkpoint truncated", 0);
  }
  return v;
}

double read_f64(std::istream& in) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw ParseError("checkpoint truncated", 0);
  }
  return v;
}

void write_layer(std::ostream& out, const DenseLayer& layer) {
  write_u32(out, static_cast<std::uint32_t>(layer.activation));
  write_u32(out, static_cast<std::uint32_t>(layer.out_dim()));
  write_u32(out, static_cast<std::uint32_t>(layer.in_dim()));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) write_f64(out, layer.weight(r, c));
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) write_f64(out, layer.bias(r));
}

DenseLayer read_layer(std::istream& in) {
  const auto act = read_u32(in);
  if (act > static_cast<std::uint32_t>(Activation::Relu)) {
    throw ParseError("checkpoint has unknown activation id " + std::to_string(act), 0);
  }
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  if (rows == 0 || cols == 0 || rows > (1u << 20) || cols > (1u << 20)) {
    throw ParseError("checkpoint layer has implausible shape", 0);
  }
  DenseLayer layer(cols, rows, static_cast<Activation>(act));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = read_f64(in);
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = read_f64(in);
  return layer;
}

}  // namespace

void save_checkpoint(const DenseNet& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(net.trunk().size()));
  for (const auto& layer : net.trunk()) write_layer(out, layer);
  write_u32(out, static_cast<std::uint32_t>(net.num_attributes()));
  for (std::size_t a = 0; a < net.num_attributes(); ++a) {
    write_layer(out, net.embeddings()[a]);
    write_layer(out, net.heads()[a]);
  }
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

DenseNet load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw ParseError("not a checkpoint file (bad magic)", 0);
  }
  if (const auto v = read_u32(in); v != kVersion) {
    throw ParseError("unsupported checkpoint version " + std::to_string(v), 0);
  }
  std::vector<DenseLayer> trunk, embeddings, heads;
  const auto trunk_count = read_u32(in);
  for (std::uint32_t i = 0; i < trunk_count; ++i) trunk.push_back(read_layer(in));
  const auto attr_count = read_u32(in);
  for (std::uint32_t a = 0; a < attr_count; ++a) {
    embeddings.push_back(read_layer(in));
    heads.push_back(read_layer(in));
  }
  return DenseNet(std::move(trunk), std::move(embeddings), std::move(heads));
}

void save_checkpoint(const DenseNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save_checkpoint(net, out);
}

DenseNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace dcl
