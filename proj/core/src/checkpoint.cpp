#include "cofiner/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace cofiner {
namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated checkpoint");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t narrow(std::size_t v) {
  if (v > 0xffffffffULL) throw ArgumentError("dimension does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_checkpoint(const TokenClassifier& model, std::ostream& out) {
  const auto& c = model.config();
  out.write(kCheckpointMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, narrow(c.vocab_size));
  put_u32(out, narrow(c.embed_dim));
  put_u32(out, narrow(c.window));
  put_u32(out, narrow(c.hidden_dim));
  put_u32(out, narrow(c.num_tags));
  put_u64(out, std::bit_cast<std::uint64_t>(c.dropout));
  put_u64(out, c.seed);
  const auto params = model.parameters();
  put_u32(out, narrow(params.size()));
  for (const auto* p : params) {
    put_u32(out, 2);
    put_u32(out, narrow(p->value.rows()));
    put_u32(out, narrow(p->value.cols()));
    for (float x : p->value.flat()) put_u32(out, std::bit_cast<std::uint32_t>(x));
  }
}

void save_checkpoint(const TokenClassifier& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_checkpoint(model, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

TokenClassifier load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw ParseError("not a checkpoint (bad magic)");
  const auto version = get_u32(in);
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  ModelConfig c;
  c.vocab_size = get_u32(in);
  c.embed_dim = get_u32(in);
  c.window = get_u32(in);
  c.hidden_dim = get_u32(in);
  c.num_tags = get_u32(in);
  c.dropout = std::bit_cast<double>(get_u64(in));
  c.seed = get_u64(in);
  TokenClassifier model = TokenClassifier::zeros(c);
  auto params = model.parameters();
  if (get_u32(in) != params.size()) throw ParseError("unexpected tensor count in checkpoint");
  for (auto* p : params) {
    const auto rank = get_u32(in);
    if (rank != 2) throw ParseError("unexpected tensor rank in checkpoint");
    const auto rows = get_u32(in);
    const auto cols = get_u32(in);
    if (rows != p->value.rows() || cols != p->value.cols())
      throw ParseError("tensor shape does not match checkpoint config");
    for (auto& x : p->value.flat()) x = std::bit_cast<float>(get_u32(in));
  }
  return model;
}

TokenClassifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_checkpoint(in);
}

std::uint64_t checkpoint_checksum(const TokenClassifier& model) {
  std::ostringstream buf;
  save_checkpoint(model, buf);
  return fnv1a64(buf.str());
}

std::string checksum_hex(std::uint64_t checksum) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << checksum;
  return out.str();
}

}  // namespace cofiner
