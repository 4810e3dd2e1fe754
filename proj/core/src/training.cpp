#include "semhash/training.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "semhash/error.hpp"
#include "text_util.hpp"

namespace semhash {

namespace {

// stream ids for epoch-local generators
constexpr std::uint64_t kStreamStage1Order = 1;
constexpr std::uint64_t kStreamPairs = 2;
constexpr std::uint64_t kStreamStage2Order = 3;
constexpr std::uint64_t kStreamStage3Order = 4;
constexpr std::uint64_t kStreamShuffleBits = 5;
constexpr std::uint64_t kHeldOutSalt = 0x5eed'd1a6ull;
constexpr std::uint64_t kInitSalt = 0x1a17'0000ull;

template <typename Fn>
auto with_context(std::size_t epoch, const char* stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError("epoch " + std::to_string(epoch) + ", " + stage + ": " + e.what());
  }
}

void require_finite(double v, std::size_t epoch, const char* stage) {
  if (!std::isfinite(v)) {
    throw NumericError("epoch " + std::to_string(epoch) + ", " + stage + ": non-finite loss");
  }
}

template <typename T>
std::vector<std::span<const T>> batches(const std::vector<T>& items, std::size_t batch_size) {
  std::vector<std::span<const T>> out;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    out.emplace_back(items.data() + start, std::min(batch_size, items.size() - start));
  }
  return out;
}

std::string join_widths(const std::vector<std::size_t>& widths) {
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(widths[i]);
  }
  return out;
}

std::vector<std::size_t> parse_widths(std::string_view text, const std::string& key) {
  std::vector<std::size_t> out;
  if (text.empty()) return out;
  for (auto part : detail::split(text, ',')) {
    std::size_t v = 0;
    if (!detail::parse_int(detail::trim(part), v)) {
      throw ParseError("config key '" + key + "': bad width '" + std::string(part) + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

const char* to_string(AblationMode mode) noexcept {
  switch (mode) {
    case AblationMode::vanilla: return "vanilla";
    case AblationMode::dmc: return "dmc";
    case AblationMode::dmc_c: return "dmc_c";
    case AblationMode::dmc_cd: return "dmc_cd";
  }
  return "?";
}

AblationMode parse_ablation_mode(std::string_view text) {
  if (text == "vanilla") return AblationMode::vanilla;
  if (text == "dmc") return AblationMode::dmc;
  if (text == "dmc_c" || text == "dmc-c") return AblationMode::dmc_c;
  if (text == "dmc_cd" || text == "dmc-cd") return AblationMode::dmc_cd;
  throw ConfigError("unknown ablation mode '" + std::string(text) +
                    "' (expected vanilla, dmc, dmc_c or dmc_cd)");
}

bool uses_classifier(AblationMode mode) noexcept {
  return mode == AblationMode::dmc_c || mode == AblationMode::dmc_cd;
}
bool uses_discriminator(AblationMode mode) noexcept { return mode == AblationMode::dmc_cd; }
bool uses_relational_loss(AblationMode mode) noexcept { return mode != AblationMode::vanilla; }

void TrainConfig::validate() const {
  model.validate();
  cauchy.validate();
  weights.validate();
  adam.validate();
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
}

TrainConfig default_train_config(std::size_t input_dim, std::size_t num_classes) {
  TrainConfig cfg;
  cfg.model.input_dim = input_dim;
  cfg.model.num_classes = num_classes;
  return cfg;
}

std::string serialize_config(const TrainConfig& c) {
  using detail::format_double;
  std::ostringstream out;
  out << "model.input_dim=" << c.model.input_dim << '\n'
      << "model.encoder_widths=" << join_widths(c.model.encoder_widths) << '\n'
      << "model.code_bits=" << c.model.code_bits << '\n'
      << "model.num_classes=" << c.model.num_classes << '\n'
      << "model.classifier_widths=" << join_widths(c.model.classifier_widths) << '\n'
      << "model.discriminator_channels=" << c.model.discriminator_channels << '\n'
      << "model.discriminator_widths=" << join_widths(c.model.discriminator_widths) << '\n'
      << "cauchy.gamma=" << format_double(c.cauchy.gamma) << '\n'
      << "cauchy.epsilon=" << format_double(c.cauchy.epsilon) << '\n'
      << "weights.alpha1=" << format_double(c.weights.alpha1) << '\n'
      << "weights.alpha2=" << format_double(c.weights.alpha2) << '\n'
      << "weights.beta=" << format_double(c.weights.beta) << '\n'
      << "adam.lr=" << format_double(c.adam.lr) << '\n'
      << "adam.beta1=" << format_double(c.adam.beta1) << '\n'
      << "adam.beta2=" << format_double(c.adam.beta2) << '\n'
      << "adam.eps=" << format_double(c.adam.eps) << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "epochs=" << c.epochs << '\n'
      << "seed=" << c.seed << '\n'
      << "mode=" << to_string(c.mode) << '\n'
      << "pairs.type0=" << c.pairs.same_item << '\n'
      << "pairs.type1=" << c.pairs.same_class << '\n'
      << "pairs.type2=" << c.pairs.different_class << '\n'
      << "reweight_pair_types=" << (c.reweight_pair_types ? 1 : 0) << '\n'
      << "diagnostic_pairs_per_type=" << c.diagnostic_pairs_per_type << '\n'
      << "checkpoint_every=" << c.checkpoint_every << '\n';
  return out.str();
}

TrainConfig parse_config(std::string_view text) {
  std::unordered_map<std::string, std::string> kv;
  std::size_t line_no = 0;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(detail::trim(line.substr(0, eq)));
    if (!kv.emplace(key, std::string(detail::trim(line.substr(eq + 1)))).second) {
      throw ParseError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("config: missing key '" + key + "'");
    std::string v = std::move(it->second);
    kv.erase(it);
    return v;
  };
  auto take_size = [&](const std::string& key) {
    std::size_t v = 0;
    const std::string s = take(key);
    if (!detail::parse_int(s, v)) throw ParseError("config key '" + key + "': bad integer '" + s + "'");
    return v;
  };
  auto take_double = [&](const std::string& key) {
    double v = 0;
    const std::string s = take(key);
    if (!detail::parse_double(s, v)) throw ParseError("config key '" + key + "': bad number '" + s + "'");
    return v;
  };

  TrainConfig c;
  c.model.input_dim = take_size("model.input_dim");
  c.model.encoder_widths = parse_widths(take("model.encoder_widths"), "model.encoder_widths");
  c.model.code_bits = take_size("model.code_bits");
  c.model.num_classes = take_size("model.num_classes");
  c.model.classifier_widths =
      parse_widths(take("model.classifier_widths"), "model.classifier_widths");
  c.model.discriminator_channels = take_size("model.discriminator_channels");
  c.model.discriminator_widths =
      parse_widths(take("model.discriminator_widths"), "model.discriminator_widths");
  c.cauchy.gamma = take_double("cauchy.gamma");
  c.cauchy.epsilon = take_double("cauchy.epsilon");
  c.weights.alpha1 = take_double("weights.alpha1");
  c.weights.alpha2 = take_double("weights.alpha2");
  c.weights.beta = take_double("weights.beta");
  c.adam.lr = take_double("adam.lr");
  c.adam.beta1 = take_double("adam.beta1");
  c.adam.beta2 = take_double("adam.beta2");
  c.adam.eps = take_double("adam.eps");
  c.batch_size = take_size("batch_size");
  c.epochs = take_size("epochs");
  {
    const std::string s = take("seed");
    if (!detail::parse_int(s, c.seed)) throw ParseError("config key 'seed': bad integer '" + s + "'");
  }
  c.mode = parse_ablation_mode(take("mode"));
  c.pairs.same_item = take_size("pairs.type0");
  c.pairs.same_class = take_size("pairs.type1");
  c.pairs.different_class = take_size("pairs.type2");
  c.reweight_pair_types = take_size("reweight_pair_types") != 0;
  c.diagnostic_pairs_per_type = take_size("diagnostic_pairs_per_type");
  c.checkpoint_every = take_size("checkpoint_every");
  if (!kv.empty()) throw ParseError("config: unknown key '" + kv.begin()->first + "'");
  c.validate();
  return c;
}

void OptimizerGroup::step(ModelParams& params, const ModelGrads& grads, const AdamConfig& config) {
  std::unordered_map<std::string, std::span<const double>> by_name;
  for_each_grad_block(grads, [&](const std::string& name, std::span<const double> g) {
    by_name.emplace(name, g);
  });
  for_each_block(params, [&](const std::string& name, std::span<double> values, Network) {
    auto it = by_name.find(name);
    if (it == by_name.end()) return;
    auto st = states.find(name);
    if (st == states.end()) st = states.emplace(name, AdamState(values.size(), config)).first;
    st->second.config = config;
    adam_step(values, it->second, st->second, name);
  });
}

Trainer::Trainer(TrainConfig config, const Dataset& data)
    : Trainer(config, data, TrainingState{init_params(config.model, config.seed ^ kInitSalt), {}, 0, {}}) {}

Trainer::Trainer(TrainConfig config, const Dataset& data, TrainingState resume)
    : config_(std::move(config)), data_(&data), state_(std::move(resume)) {
  config_.validate();
  if (data.feature_dim != config_.model.input_dim) {
    throw ConfigError("train: dataset feature dimension " + std::to_string(data.feature_dim) +
                      " != model input_dim " + std::to_string(config_.model.input_dim));
  }
  if (data.num_classes != config_.model.num_classes) {
    throw ConfigError("train: dataset has " + std::to_string(data.num_classes) +
                      " classes, model expects " + std::to_string(config_.model.num_classes));
  }
  if (!(state_.params.config == config_.model)) {
    throw IncompatibleError("train: resume state was built for a different model config");
  }
  if (data.split.train.empty()) throw ConfigError("train: dataset has no training records");

  // held-out pairs for the distance diagnostic, fixed for the whole run
  if (config_.diagnostic_pairs_per_type > 0) {
    for (PairType t : {PairType::same_item, PairType::same_class, PairType::different_class}) {
      PairCounts counts{0, 0, 0};
      switch (t) {
        case PairType::same_item: counts.same_item = config_.diagnostic_pairs_per_type; break;
        case PairType::same_class: counts.same_class = config_.diagnostic_pairs_per_type; break;
        case PairType::different_class:
          counts.different_class = config_.diagnostic_pairs_per_type;
          break;
      }
      try {
        auto part = sample_pairs(data.records, data.split.test, counts,
                                 config_.seed ^ kHeldOutSalt ^ static_cast<std::uint64_t>(to_int(t)));
        held_out_.insert(held_out_.end(), part.begin(), part.end());
      } catch (const ConfigError&) {
        // type not present in the test split: reported as unavailable
      }
    }
  }
}

std::mt19937_64 Trainer::epoch_stream(std::size_t epoch, std::uint64_t stream) const {
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                    static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

Matrix Trainer::pair_inputs(std::span<const PairSample> pairs) const {
  const std::size_t P = pairs.size();
  Matrix x(2 * P, data_->feature_dim);
  for (std::size_t p = 0; p < P; ++p) {
    const auto& fi = data_->records.at(pairs[p].i).features;
    const auto& fj = data_->records.at(pairs[p].j).features;
    std::copy(fi.begin(), fi.end(), x.row(p).begin());
    std::copy(fj.begin(), fj.end(), x.row(P + p).begin());
  }
  return x;
}

double Trainer::run_stage1(std::span<const std::size_t> records) {
  if (!uses_classifier(config_.mode)) {
    throw UsageError(std::string("stage 1 needs the classifier, mode ") + to_string(config_.mode) +
                     " has none");
  }
  if (records.empty()) throw UsageError("stage 1: empty batch");
  ModelParams& params = state_.params;
  std::vector<int> labels;
  labels.reserve(records.size());
  for (auto idx : records) labels.push_back(data_->records.at(idx).class_id);

  const auto enc = encoder_forward(params, data_->features(records));
  const auto cls = classifier_forward(params, enc.features);
  const auto ce = softmax_ce_forward_backward(cls.logits, labels);

  ModelGrads grads;
  const Matrix dz = classifier_backward(params, cls, ce.logit_grad, grads);
  encoder_backward(params, enc.tape, dz, grads);
  state_.optimizer.step(params, grads, config_.adam);
  return ce.loss;
}

Stage2Result Trainer::run_stage2(std::span<const PairSample> pairs) {
  if (pairs.empty()) throw UsageError("stage 2: empty batch");
  ModelParams& params = state_.params;
  const std::size_t P = pairs.size();
  const auto enc = encoder_forward(params, pair_inputs(pairs));
  const auto hash = hash_forward(params, enc.features);

  std::vector<TypedPair> typed(P);
  for (std::size_t p = 0; p < P; ++p) typed[p] = {p, P + p, pairs[p].type};
  Stage2Options opts;
  opts.weights = config_.weights;
  opts.cauchy = config_.cauchy;
  opts.relational = uses_relational_loss(config_.mode);
  opts.reweight_types = config_.reweight_pair_types;
  const Stage2Loss loss = stage2_loss(hash.codes, typed, opts);

  ModelGrads grads;
  const Matrix dz = hash_backward(params, hash, loss.code_grad, grads);
  encoder_backward(params, enc.tape, dz, grads);
  state_.optimizer.step(params, grads, config_.adam);
  return {loss.subjective, loss.relational, loss.total};
}

Stage3Result Trainer::run_stage3(std::span<const PairSample> pairs,
                                 std::span<const int> shuffle_bits) {
  if (!uses_discriminator(config_.mode)) {
    throw UsageError(std::string("stage 3 needs the discriminator, mode ") +
                     to_string(config_.mode) + " has none");
  }
  if (pairs.empty()) throw UsageError("stage 3: empty batch");
  if (shuffle_bits.size() != pairs.size()) throw ShapeError("stage 3: one shuffle bit per pair");
  for (const auto& p : pairs) {
    if (p.type != PairType::same_item) throw UsageError("stage 3 only accepts type-0 pairs");
  }
  ModelParams& params = state_.params;
  const std::size_t P = pairs.size();
  const std::size_t K = params.config.code_bits;
  const double inv_p = 1.0 / static_cast<double>(P);
  const double eps = config_.cauchy.epsilon;

  const auto enc = encoder_forward(params, pair_inputs(pairs));
  const auto hash = hash_forward(params, enc.features);
  Matrix first(P, K);
  Matrix second(P, K);
  for (std::size_t p = 0; p < P; ++p) {
    const auto sp = shuffle_channels(hash.codes.row(p), hash.codes.row(P + p), shuffle_bits[p]);
    std::copy(sp.first.begin(), sp.first.end(), first.row(p).begin());
    std::copy(sp.second.begin(), sp.second.end(), second.row(p).begin());
  }

  // d J_D / d logit, mean BCE over the batch
  auto bce_logit_grads = [&](const DiscriminatorForward& d, double& loss) {
    std::vector<double> g(P);
    loss = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      const double prob = d.probabilities[p];
      const ScalarLoss l = adversarial_bce(prob, shuffle_bits[p], eps);
      loss += l.loss * inv_p;
      g[p] = l.grad * prob * (1.0 - prob) * inv_p;
    }
    return g;
  };

  Stage3Result result;
  {
    const auto d = discriminator_forward(params, first, second);
    std::size_t correct = 0;
    for (std::size_t p = 0; p < P; ++p) {
      const int guess = d.probabilities[p] >= 0.5 ? 1 : 0;
      if (guess == shuffle_bits[p]) ++correct;
    }
    result.discriminator_accuracy = static_cast<double>(correct) * inv_p;
    const auto g = bce_logit_grads(d, result.discriminator_loss);
    ModelGrads grads;
    discriminator_backward(params, d, g, grads, /*accumulate_params=*/true);
    state_.optimizer.step(params, grads, config_.adam);
  }

  if (config_.weights.beta > 0.0) {
    const auto d = discriminator_forward(params, first, second);
    double loss = 0.0;
    const auto g = bce_logit_grads(d, loss);
    ModelGrads grads;
    auto [d_first, d_second] = discriminator_backward(params, d, g, grads, /*accumulate_params=*/false);
    // ascend J_D: undo the shuffle and flip the sign
    Matrix d_codes(2 * P, K);
    for (std::size_t p = 0; p < P; ++p) {
      const bool swapped = shuffle_bits[p] == 1;
      const auto gi = swapped ? d_second.row(p) : d_first.row(p);
      const auto gj = swapped ? d_first.row(p) : d_second.row(p);
      auto di = d_codes.row(p);
      auto dj = d_codes.row(P + p);
      for (std::size_t k = 0; k < K; ++k) {
        di[k] = -config_.weights.beta * gi[k];
        dj[k] = -config_.weights.beta * gj[k];
      }
    }
    const Matrix dz = hash_backward(params, hash, d_codes, grads);
    encoder_backward(params, enc.tape, dz, grads);
    state_.optimizer.step(params, grads, config_.adam);
  }
  return result;
}

std::array<std::optional<double>, kPairTypeCount> Trainer::held_out_distances() const {
  std::array<std::optional<double>, kPairTypeCount> out;
  if (held_out_.empty()) return out;
  const std::size_t P = held_out_.size();
  const auto enc = encoder_forward(state_.params, pair_inputs(held_out_));
  const auto hash = hash_forward(state_.params, enc.features);
  std::array<double, kPairTypeCount> sum{};
  std::array<std::size_t, kPairTypeCount> count{};
  for (std::size_t p = 0; p < P; ++p) {
    const auto t = static_cast<std::size_t>(held_out_[p].type);
    sum[t] += continuous_hamming(hash.codes.row(p), hash.codes.row(P + p));
    count[t] += 1;
  }
  for (std::size_t t = 0; t < kPairTypeCount; ++t) {
    if (count[t] > 0) out[t] = sum[t] / static_cast<double>(count[t]);
  }
  return out;
}

const EpochDiagnostics& Trainer::run_epoch() {
  const std::size_t epoch = state_.epochs_completed + 1;
  EpochDiagnostics diag;
  diag.epoch = epoch;

  if (uses_classifier(config_.mode)) {
    std::vector<std::size_t> order = data_->split.train;
    auto rng = epoch_stream(epoch, kStreamStage1Order);
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    std::size_t n = 0;
    for (auto batch : batches(order, config_.batch_size)) {
      const double l = with_context(epoch, "stage 1", [&] { return run_stage1(batch); });
      require_finite(l, epoch, "stage 1");
      sum += l;
      ++n;
    }
    diag.classification_loss = sum / static_cast<double>(n);
  }

  std::vector<PairSample> pairs =
      sample_pairs(data_->records, data_->split.train, config_.pairs,
                   epoch_stream(epoch, kStreamPairs)());

  if (!pairs.empty()) {
    std::vector<PairSample> order = pairs;
    auto rng = epoch_stream(epoch, kStreamStage2Order);
    std::shuffle(order.begin(), order.end(), rng);
    double s1 = 0.0;
    double s2 = 0.0;
    std::size_t n = 0;
    for (auto batch : batches(order, config_.batch_size)) {
      const auto r = with_context(epoch, "stage 2", [&] { return run_stage2(batch); });
      require_finite(r.total, epoch, "stage 2");
      s1 += r.subjective;
      s2 += r.relational;
      ++n;
    }
    diag.subjective_loss = s1 / static_cast<double>(n);
    if (uses_relational_loss(config_.mode)) diag.relational_loss = s2 / static_cast<double>(n);
  }

  if (uses_discriminator(config_.mode)) {
    std::vector<PairSample> same_item;
    for (const auto& p : pairs) {
      if (p.type == PairType::same_item) same_item.push_back(p);
    }
    auto order_rng = epoch_stream(epoch, kStreamStage3Order);
    std::shuffle(same_item.begin(), same_item.end(), order_rng);
    auto bit_rng = epoch_stream(epoch, kStreamShuffleBits);
    std::bernoulli_distribution coin(0.5);
    double loss = 0.0;
    double acc = 0.0;
    std::size_t n = 0;
    for (auto batch : batches(same_item, config_.batch_size)) {
      std::vector<int> bits(batch.size());
      for (int& b : bits) b = coin(bit_rng) ? 1 : 0;
      const auto r = with_context(epoch, "stage 3", [&] { return run_stage3(batch, bits); });
      require_finite(r.discriminator_loss, epoch, "stage 3");
      loss += r.discriminator_loss * static_cast<double>(batch.size());
      acc += r.discriminator_accuracy * static_cast<double>(batch.size());
      n += batch.size();
    }
    if (n > 0) {
      diag.discriminator_loss = loss / static_cast<double>(n);
      diag.discriminator_accuracy = acc / static_cast<double>(n);
    }
  }

  diag.mean_distance = held_out_distances();
  state_.epochs_completed = epoch;
  state_.history.push_back(diag);
  return state_.history.back();
}

TrainResult train(const TrainConfig& config, const Dataset& data, const TrainHooks& hooks,
                  std::optional<TrainingState> resume) {
  std::optional<Trainer> trainer;
  if (resume) {
    trainer.emplace(config, data, std::move(*resume));
  } else {
    trainer.emplace(config, data);
  }
  while (trainer->state().epochs_completed < config.epochs) {
    trainer->run_epoch();
    if (hooks.on_epoch) hooks.on_epoch(trainer->state());
  }
  return {trainer->state()};
}

void write_diagnostics_csv(std::ostream& out, std::span<const EpochDiagnostics> rows,
                           std::uint64_t seed, AblationMode mode) {
  auto cell = [&](const std::optional<double>& v) {
    out << ',';
    if (v) {
      out << detail::format_double(*v);
    } else {
      out << "NA";
    }
  };
  out << "# seed=" << seed << " mode=" << to_string(mode) << '\n';
  out << "epoch,d_type0,d_type1,d_type2,J_C,J_s1,J_s2,J_D,D_acc\n";
  for (const auto& r : rows) {
    out << r.epoch;
    for (const auto& d : r.mean_distance) cell(d);
    cell(r.classification_loss);
    cell(r.subjective_loss);
    cell(r.relational_loss);
    cell(r.discriminator_loss);
    cell(r.discriminator_accuracy);
    out << '\n';
  }
}

std::vector<EpochDiagnostics> read_diagnostics_csv(std::istream& in, std::string_view source) {
  std::vector<EpochDiagnostics> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (!header_seen) {
      if (text != "epoch,d_type0,d_type1,d_type2,J_C,J_s1,J_s2,J_D,D_acc") {
        throw ParseError(where + ": not a diagnostics CSV header");
      }
      header_seen = true;
      continue;
    }
    const auto fields = detail::split(text, ',');
    if (fields.size() != 9) throw ParseError(where + ": expected 9 fields");
    EpochDiagnostics d;
    if (!detail::parse_int(fields[0], d.epoch)) throw ParseError(where + ": bad epoch");
    auto value = [&](std::size_t i) -> std::optional<double> {
      if (fields[i] == "NA") return std::nullopt;
      double v = 0.0;
      if (!detail::parse_double(fields[i], v)) {
        throw ParseError(where + ": bad value in column " + std::to_string(i + 1));
      }
      return v;
    };
    for (std::size_t t = 0; t < kPairTypeCount; ++t) d.mean_distance[t] = value(1 + t);
    d.classification_loss = value(4);
    d.subjective_loss = value(5);
    d.relational_loss = value(6);
    d.discriminator_loss = value(7);
    d.discriminator_accuracy = value(8);
    rows.push_back(d);
  }
  if (!header_seen) throw ParseError(std::string(source) + ": missing diagnostics header");
  return rows;
}

}  // namespace semhash
