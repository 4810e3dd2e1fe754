#include "semhash/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "semhash/error.hpp"

namespace semhash {

namespace {

constexpr std::string_view kMagic = "SEMHCKPT";
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 28;

void write_group(detail::BinaryWriter& w, const OptimizerGroup& g) {
  w.u32(static_cast<std::uint32_t>(g.states.size()));
  for (const auto& [name, st] : g.states) {
    w.str(name);
    w.u64(st.step);
    w.f64(st.config.lr);
    w.f64(st.config.beta1);
    w.f64(st.config.beta2);
    w.f64(st.config.eps);
    w.u64(st.first_moment.size());
    for (double v : st.first_moment) w.f64(v);
    for (double v : st.second_moment) w.f64(v);
  }
}

OptimizerGroup read_group(detail::BinaryReader& r, const std::map<std::string, std::size_t>& sizes) {
  OptimizerGroup g;
  const auto n = r.u32("optimizer state count");
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = r.str("optimizer block name");
    auto it = sizes.find(name);
    if (it == sizes.end()) throw ParseError(r.where("optimizer block") + ": unknown block '" + name + "'");
    AdamState st;
    st.step = r.u64("adam step");
    st.config.lr = r.f64("adam lr");
    st.config.beta1 = r.f64("adam beta1");
    st.config.beta2 = r.f64("adam beta2");
    st.config.eps = r.f64("adam eps");
    const auto count = r.u64("moment count");
    if (count != it->second) {
      throw ParseError(r.where("moment count") + ": block '" + name + "' expects " +
                       std::to_string(it->second) + " values");
    }
    st.first_moment.resize(count);
    st.second_moment.resize(count);
    for (auto& v : st.first_moment) v = r.f64("first moment");
    for (auto& v : st.second_moment) v = r.f64("second moment");
    if (!g.states.emplace(name, std::move(st)).second) {
      throw ParseError(r.where("optimizer block") + ": duplicate block '" + name + "'");
    }
  }
  return g;
}

void write_opt(detail::BinaryWriter& w, const std::optional<double>& v) {
  w.u8(v ? 1 : 0);
  w.f64(v.value_or(0.0));
}

std::optional<double> read_opt(detail::BinaryReader& r) {
  const auto present = r.u8("diagnostic flag");
  const double v = r.f64("diagnostic value");
  if (present > 1) throw ParseError(r.where("diagnostic flag") + ": expected 0 or 1");
  if (!present) return std::nullopt;
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  detail::BinaryWriter w(out);
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.str(serialize_config(ckpt.config));
  w.u64(ckpt.state.epochs_completed);

  std::uint32_t nblocks = 0;
  for_each_block(ckpt.state.params,
                 [&](const std::string&, std::span<const double>, Network) { ++nblocks; });
  w.u32(nblocks);
  // same order as for_each_block; biases are stored as 1 x n
  const ModelParams& p = ckpt.state.params;
  auto layer = [&](const std::string& prefix, const Layer& l) {
    w.str(prefix + ".weights");
    w.u64(l.weights.rows());
    w.u64(l.weights.cols());
    for (double v : l.weights.values()) w.f64(v);
    w.str(prefix + ".bias");
    w.u64(1);
    w.u64(l.bias.size());
    for (double v : l.bias) w.f64(v);
  };
  for (std::size_t i = 0; i < p.encoder.size(); ++i) layer("encoder." + std::to_string(i), p.encoder[i]);
  layer("hash", p.hash);
  for (std::size_t i = 0; i < p.classifier.size(); ++i)
    layer("classifier." + std::to_string(i), p.classifier[i]);
  for (std::size_t i = 0; i < p.discriminator.size(); ++i)
    layer("discriminator." + std::to_string(i), p.discriminator[i]);

  write_group(w, ckpt.state.optimizer);

  w.u64(ckpt.state.history.size());
  for (const auto& d : ckpt.state.history) {
    w.u64(d.epoch);
    for (const auto& m : d.mean_distance) write_opt(w, m);
    write_opt(w, d.classification_loss);
    write_opt(w, d.subjective_loss);
    write_opt(w, d.relational_loss);
    write_opt(w, d.discriminator_loss);
    write_opt(w, d.discriminator_accuracy);
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

Checkpoint read_checkpoint(std::istream& in, std::string_view source) {
  detail::BinaryReader r(in, source);
  if (r.bytes(kMagic.size(), "magic") != kMagic) {
    throw ParseError(std::string(source) + ": not a checkpoint file (bad magic)");
  }
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw IncompatibleError(std::string(source) + ": checkpoint version " + std::to_string(version) +
                            ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ckpt;
  try {
    ckpt.config = parse_config(r.str("config"));
  } catch (const Error& e) {
    throw ParseError(std::string(source) + ": embedded config: " + e.what());
  }
  ckpt.state.epochs_completed = r.u64("epochs_completed");

  // shapes come from the config; the file must match them block by block
  ckpt.state.params = init_params(ckpt.config.model, 0);
  std::vector<std::pair<std::string, std::span<double>>> blocks;
  std::map<std::string, std::size_t> sizes;
  for_each_block(ckpt.state.params, [&](const std::string& name, std::span<double> v, Network) {
    blocks.emplace_back(name, v);
    sizes.emplace(name, v.size());
  });
  const auto nblocks = r.u32("block count");
  if (nblocks != blocks.size()) {
    throw ParseError(r.where("block count") + ": expected " + std::to_string(blocks.size()) +
                     " blocks, found " + std::to_string(nblocks));
  }
  for (auto& [name, values] : blocks) {
    const std::string got = r.str("block name");
    if (got != name) throw ParseError(r.where("block name") + ": expected '" + name + "', found '" + got + "'");
    const auto rows = r.u64("rows");
    const auto cols = r.u64("cols");
    if (rows > kMaxValues || cols > kMaxValues || rows * cols != values.size()) {
      throw ParseError(r.where("block shape") + ": block '" + name + "' has the wrong size");
    }
    for (auto& v : values) v = r.f64("parameter");
  }
  ckpt.state.optimizer = read_group(r, sizes);
  const auto nhist = r.u64("history count");
  if (nhist > kMaxValues) throw ParseError(r.where("history count") + ": too large");
  for (std::uint64_t i = 0; i < nhist; ++i) {
    EpochDiagnostics d;
    d.epoch = r.u64("epoch");
    for (auto& m : d.mean_distance) m = read_opt(r);
    d.classification_loss = read_opt(r);
    d.subjective_loss = read_opt(r);
    d.relational_loss = read_opt(r);
    d.discriminator_loss = read_opt(r);
    d.discriminator_accuracy = read_opt(r);
    ckpt.state.history.push_back(d);
  }
  r.expect_end();
  return ckpt;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in, path.string());
}

}  // namespace semhash
