#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "semhash/data.hpp"
#include "semhash/error.hpp"
#include "semhash/training.hpp"

namespace semhash::cli {

namespace fs = std::filesystem;

struct SynthOptions {
  SynthConfig synth;
  fs::path out;
};

struct TrainOptions {
  fs::path manifest;
  fs::path out;  // checkpoint
  std::optional<fs::path> diagnostics;
  std::optional<fs::path> resume;
  TrainConfig config;
};

/// Which records of the manifest a command works on.
enum class Subset { all, train, test, gallery, query };
Subset parse_subset(const std::string& text);

struct EncodeOptions {
  fs::path checkpoint;
  fs::path manifest;
  Subset subset = Subset::gallery;
  fs::path out;
};

struct IndexOptions {
  fs::path codes;
  fs::path manifest;  // item/class metadata per record id
  fs::path out;
};

struct QueryOptions {
  fs::path index;
  fs::path codes;  // must contain the probe
  std::string probe;
  std::size_t top = 10;
};

struct EvalOptions {
  fs::path checkpoint;
  fs::path manifest;
  std::optional<fs::path> index;  // default: built from the manifest gallery
  fs::path out;
  std::optional<fs::path> per_query;
};

struct DistancesOptions {
  fs::path diagnostics;
  fs::path out;
};

struct EmbedOptions {
  fs::path checkpoint;
  fs::path manifest;
  Subset subset = Subset::all;
  fs::path out;
};

// Each command reads its inputs, writes its outputs and prints a short
// summary to `log`. Failures throw semhash::Error subclasses.
void cmd_synth(const SynthOptions& opts, std::ostream& log);
void cmd_train(const TrainOptions& opts, std::ostream& log);
void cmd_encode(const EncodeOptions& opts, std::ostream& log);
void cmd_index(const IndexOptions& opts, std::ostream& log);
void cmd_query(const QueryOptions& opts, std::ostream& out);
void cmd_eval(const EvalOptions& opts, std::ostream& log);
void cmd_distances(const DistancesOptions& opts, std::ostream& log);
void cmd_embed(const EmbedOptions& opts, std::ostream& log);

/// Process exit code for an error kind: 1 usage/config/shape, 2 validation,
/// parse and incompatible files, 3 numeric divergence, 4 I/O.
int exit_code(ErrorKind kind) noexcept;

}  // namespace semhash::cli
