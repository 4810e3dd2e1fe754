#pragma once

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "semhash/training.hpp"

namespace semhash {

struct Checkpoint {
  TrainConfig config;
  TrainingState state;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary, little-endian:
//   "SEMHCKPT" u32 version
//   str config (serialize_config text)
//   u64 epochs_completed
//   u32 nblocks { str name, u64 rows, u64 cols, f64[rows*cols] }
//   optimizer: u32 nstates { str name, u64 step, f64 x4 adam cfg, u64 n, f64[n] m, f64[n] v }
//   u64 nhistory { u64 epoch, 8 x (u8 present, f64 value) }
// str = u64 length + bytes. Doubles are stored as their IEEE-754 bit patterns.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in, std::string_view source = "<stream>");
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace semhash
