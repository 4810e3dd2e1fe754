#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semhash/data.hpp"
#include "semhash/losses.hpp"
#include "semhash/model.hpp"
#include "semhash/numerics.hpp"
#include "semhash/pairs.hpp"

namespace semhash {

/// Ablation ladder:
///   vanilla  single subjective Cauchy loss
///   dmc      subjective + relational Cauchy losses
///   dmc_c    dmc + classification stage
///   dmc_cd   dmc_c + adversarial pair-order discriminator stage
enum class AblationMode { vanilla, dmc, dmc_c, dmc_cd };

const char* to_string(AblationMode mode) noexcept;
AblationMode parse_ablation_mode(std::string_view text);

bool uses_classifier(AblationMode mode) noexcept;
bool uses_discriminator(AblationMode mode) noexcept;
bool uses_relational_loss(AblationMode mode) noexcept;

struct TrainConfig {
  ModelConfig model;
  CauchyConfig cauchy;
  StageWeights weights;
  AdamConfig adam;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::uint64_t seed = 7;
  AblationMode mode = AblationMode::dmc_cd;
  PairCounts pairs;
  bool reweight_pair_types = false;
  std::size_t diagnostic_pairs_per_type = 200;
  std::size_t checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Desk-scale defaults sized for a dataset of the given shape.
TrainConfig default_train_config(std::size_t input_dim, std::size_t num_classes);

/// Text form used inside checkpoints: one `key=value` per line, fixed order.
std::string serialize_config(const TrainConfig& config);
/// Strict inverse of serialize_config; unknown or missing keys are errors.
TrainConfig parse_config(std::string_view text);

/// Adam state per parameter block, keyed by block name. The encoder and hash
/// blocks are shared by stages 1, 2 and 3b, so their moments mix gradients
/// from every stage that touches them; beta then scales the adversarial step
/// relative to the others.
struct OptimizerGroup {
  std::map<std::string, AdamState> states;

  /// Applies one Adam step to every block present in `grads`. Block states are
  /// created on first use.
  void step(ModelParams& params, const ModelGrads& grads, const AdamConfig& config);

  friend bool operator==(const OptimizerGroup&, const OptimizerGroup&) = default;
};

/// Per-epoch record. Values of inactive stages, and distances of pair types
/// absent from the held-out pool, are empty.
struct EpochDiagnostics {
  std::size_t epoch = 0;  // 1-based
  std::array<std::optional<double>, kPairTypeCount> mean_distance;
  std::optional<double> classification_loss;
  std::optional<double> subjective_loss;
  std::optional<double> relational_loss;
  std::optional<double> discriminator_loss;
  std::optional<double> discriminator_accuracy;

  friend bool operator==(const EpochDiagnostics&, const EpochDiagnostics&) = default;
};

struct TrainingState {
  ModelParams params;
  OptimizerGroup optimizer;
  std::size_t epochs_completed = 0;
  std::vector<EpochDiagnostics> history;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

struct Stage2Result {
  double subjective = 0.0;
  double relational = 0.0;
  double total = 0.0;
};

struct Stage3Result {
  double discriminator_loss = 0.0;   // J_D before the discriminator update
  double discriminator_accuracy = 0.0;
};

/// Runs the per-epoch stage schedule over one dataset. Stage methods are
/// public so that a single update can be exercised in isolation.
class Trainer {
 public:
  Trainer(TrainConfig config, const Dataset& data);
  Trainer(TrainConfig config, const Dataset& data, TrainingState resume);

  /// Stage 1: one Adam step on encoder + classifier minimizing class CE.
  double run_stage1(std::span<const std::size_t> records);
  /// Stage 2: one Adam step on encoder + hash head minimizing the Cauchy losses.
  Stage2Result run_stage2(std::span<const PairSample> pairs);
  /// Stage 3: discriminator step on shuffled type-0 pairs, then an encoder +
  /// hash step ascending beta * J_D with the discriminator frozen.
  Stage3Result run_stage3(std::span<const PairSample> pairs, std::span<const int> shuffle_bits);

  /// Runs every active stage once over freshly shuffled batches and appends
  /// the epoch diagnostics to the history.
  const EpochDiagnostics& run_epoch();

  /// Mean continuous Hamming distance per pair type over the held-out pairs
  /// (sampled once from the test split).
  std::array<std::optional<double>, kPairTypeCount> held_out_distances() const;

  const TrainConfig& config() const noexcept { return config_; }
  const TrainingState& state() const noexcept { return state_; }
  const ModelParams& params() const noexcept { return state_.params; }

 private:
  std::mt19937_64 epoch_stream(std::size_t epoch, std::uint64_t stream) const;
  Matrix pair_inputs(std::span<const PairSample> pairs) const;

  TrainConfig config_;
  const Dataset* data_;
  TrainingState state_;
  std::vector<PairSample> held_out_;
};

struct TrainHooks {
  /// Called after every epoch with the updated state.
  std::function<void(const TrainingState&)> on_epoch;
};

struct TrainResult {
  TrainingState state;
  const std::vector<EpochDiagnostics>& diagnostics() const { return state.history; }
};

/// Trains until `config.epochs` epochs are complete, starting from `resume`
/// when given. Non-finite losses abort with a NumericError naming the epoch
/// and stage.
TrainResult train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks = {},
                  std::optional<TrainingState> resume = std::nullopt);

/// Diagnostics CSV: `epoch,d_type0,d_type1,d_type2,J_C,J_s1,J_s2,J_D,D_acc`,
/// preceded by a `# seed=<S> mode=<M>` comment. Inactive values print as NA.
void write_diagnostics_csv(std::ostream& out, std::span<const EpochDiagnostics> rows,
                           std::uint64_t seed, AblationMode mode);
std::vector<EpochDiagnostics> read_diagnostics_csv(std::istream& in,
                                                   std::string_view source = "<stream>");

}  // namespace semhash
