#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "cofiner/model.hpp"

namespace cofiner {

inline constexpr char kCheckpointMagic[4] = {'C', 'F', 'N', 'R'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Little-endian: magic, version u32, config (vocab, embed, window, hidden, tags as u32;
// dropout f64; seed u64), tensor count u32, then per tensor rank u32, dims u32..., f32 payload.
void save_checkpoint(const TokenClassifier& model, std::ostream& out);
void save_checkpoint(const TokenClassifier& model, const std::filesystem::path& path);
TokenClassifier load_checkpoint(std::istream& in);
TokenClassifier load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the serialized bytes; identifies a checkpoint in mask caches and logs.
std::uint64_t checkpoint_checksum(const TokenClassifier& model);
std::string checksum_hex(std::uint64_t checksum);

}  // namespace cofiner
