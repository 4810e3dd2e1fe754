#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <unordered_map>

#include "semhash/checkpoint.hpp"
#include "semhash/error.hpp"
#include "semhash/evaluation.hpp"
#include "semhash/retrieval.hpp"

namespace semhash::cli {

namespace {

void require_input(const fs::path& path, const char* what) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw IoError(std::string(what) + " '" + path.string() + "' does not exist");
  }
}

void require_output(const fs::path& path, const char* what) {
  if (path.empty()) throw UsageError(std::string(what) + ": empty output path");
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) {
    throw IoError(std::string(what) + ": directory '" + parent.string() + "' does not exist");
  }
  if (fs::is_directory(path, ec)) {
    throw IoError(std::string(what) + ": '" + path.string() + "' is a directory");
  }
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  fn(out);
  out.flush();
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

std::vector<std::size_t> select(const Dataset& data, Subset subset) {
  switch (subset) {
    case Subset::train: return data.split.train;
    case Subset::test: return data.split.test;
    case Subset::gallery: return data.split.gallery;
    case Subset::query: return data.split.query;
    case Subset::all: break;
  }
  std::vector<std::size_t> all(data.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

void check_compatible(const ModelParams& params, const Dataset& data, const fs::path& ckpt) {
  if (params.config.input_dim != data.feature_dim) {
    throw IncompatibleError("checkpoint '" + ckpt.string() + "' expects feature dimension " +
                            std::to_string(params.config.input_dim) + ", manifest has " +
                            std::to_string(data.feature_dim));
  }
}

HammingIndex gallery_index(const Dataset& data, const ModelParams& params, std::uint64_t seed) {
  const auto& idx = data.split.gallery;
  const auto codes = encode_binary(params, data.features(idx));
  std::vector<IndexEntry> entries;
  entries.reserve(idx.size());
  for (auto i : idx) {
    const auto& r = data.records[i];
    entries.push_back({r.record_id, r.item_id, r.class_id});
  }
  return HammingIndex::build(params.config.code_bits, std::move(entries), codes, seed);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "NA";
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << *v;
  return s.str();
}

}  // namespace

Subset parse_subset(const std::string& text) {
  if (text == "all") return Subset::all;
  if (text == "train") return Subset::train;
  if (text == "test") return Subset::test;
  if (text == "gallery") return Subset::gallery;
  if (text == "query") return Subset::query;
  throw UsageError("unknown subset '" + text + "' (expected all, train, test, gallery or query)");
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::shape:
    case ErrorKind::usage:
    case ErrorKind::config: return 1;
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::incompatible: return 2;
    case ErrorKind::numeric: return 3;
    case ErrorKind::io: return 4;
  }
  return 1;
}

void cmd_synth(const SynthOptions& opts, std::ostream& log) {
  require_output(opts.out, "synth");
  const Dataset data = generate_synthetic(opts.synth);
  data.validate();
  write_manifest(opts.out, data);
  log << "wrote " << data.records.size() << " records (train " << data.split.train.size()
      << ", test " << data.split.test.size() << ", gallery " << data.split.gallery.size()
      << ", query " << data.split.query.size() << ") to " << opts.out.string() << '\n';
}

void cmd_train(const TrainOptions& opts, std::ostream& log) {
  require_input(opts.manifest, "manifest");
  require_output(opts.out, "train checkpoint");
  if (opts.diagnostics) require_output(*opts.diagnostics, "train diagnostics");
  if (opts.resume) require_input(*opts.resume, "resume checkpoint");

  const Dataset data = load_manifest(opts.manifest);
  TrainConfig config = opts.config;
  std::optional<TrainingState> resume;
  if (opts.resume) {
    Checkpoint ckpt = load_checkpoint(*opts.resume);
    // everything except the epoch target comes from the checkpoint
    const std::size_t target = config.epochs;
    config = ckpt.config;
    config.epochs = target;
    if (ckpt.state.epochs_completed > target) {
      throw ConfigError("resume: checkpoint already has " +
                        std::to_string(ckpt.state.epochs_completed) + " epochs, target is " +
                        std::to_string(target));
    }
    resume = std::move(ckpt.state);
    log << "resuming at epoch " << resume->epochs_completed << '\n';
  } else {
    config.validate();
  }

  std::vector<EpochDiagnostics> seen;
  auto flush_diagnostics = [&] {
    if (!opts.diagnostics) return;
    write_text(*opts.diagnostics,
               [&](std::ostream& out) { write_diagnostics_csv(out, seen, config.seed, config.mode); });
  };
  TrainHooks hooks;
  hooks.on_epoch = [&](const TrainingState& state) {
    seen = state.history;
    const auto& d = state.history.back();
    log << "epoch " << d.epoch << ": d0 " << fmt_opt(d.mean_distance[0]) << " d1 "
        << fmt_opt(d.mean_distance[1]) << " d2 " << fmt_opt(d.mean_distance[2]) << " J_s1 "
        << fmt_opt(d.subjective_loss) << " J_s2 " << fmt_opt(d.relational_loss) << " J_C "
        << fmt_opt(d.classification_loss) << " J_D " << fmt_opt(d.discriminator_loss) << '\n';
    if (config.checkpoint_every > 0 && state.epochs_completed % config.checkpoint_every == 0) {
      save_checkpoint(opts.out, Checkpoint{config, state});
    }
  };
  if (resume) seen = resume->history;

  TrainResult result;
  try {
    result = train(config, data, hooks, std::move(resume));
  } catch (const NumericError&) {
    flush_diagnostics();
    throw;
  }
  seen = result.state.history;
  save_checkpoint(opts.out, Checkpoint{config, result.state});
  flush_diagnostics();
  log << "trained " << result.state.epochs_completed << " epochs (mode "
      << to_string(config.mode) << "), checkpoint " << opts.out.string() << '\n';
}

void cmd_encode(const EncodeOptions& opts, std::ostream& log) {
  require_input(opts.checkpoint, "checkpoint");
  require_input(opts.manifest, "manifest");
  require_output(opts.out, "encode");
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  const Dataset data = load_manifest(opts.manifest);
  check_compatible(ckpt.state.params, data, opts.checkpoint);
  const auto idx = select(data, opts.subset);
  const auto codes = encode_binary(ckpt.state.params, data.features(idx));
  CodesFile file;
  file.bits = ckpt.config.model.code_bits;
  file.seed = ckpt.config.seed;
  for (std::size_t n = 0; n < idx.size(); ++n) {
    file.records.push_back({data.records[idx[n]].record_id, codes[n]});
  }
  save_codes(opts.out, file);
  log << "encoded " << file.records.size() << " records at K=" << file.bits << " to "
      << opts.out.string() << '\n';
}

void cmd_index(const IndexOptions& opts, std::ostream& log) {
  require_input(opts.codes, "codes file");
  require_input(opts.manifest, "manifest");
  require_output(opts.out, "index");
  const CodesFile codes = load_codes(opts.codes);
  const Dataset data = load_manifest(opts.manifest);
  std::unordered_map<std::string_view, const ItemRecord*> by_id;
  for (const auto& r : data.records) by_id.emplace(r.record_id, &r);
  std::vector<IndexEntry> entries;
  std::vector<BinaryCode> packed;
  for (const auto& rec : codes.records) {
    auto it = by_id.find(rec.record_id);
    if (it == by_id.end()) {
      throw ValidationError(opts.codes.string() + ": record '" + rec.record_id +
                            "' is not in manifest " + opts.manifest.string());
    }
    entries.push_back({rec.record_id, it->second->item_id, it->second->class_id});
    packed.push_back(rec.code);
  }
  const auto index = HammingIndex::build(codes.bits, std::move(entries), packed, codes.seed);
  save_index(opts.out, index);
  log << "indexed " << index.size() << " codes at K=" << index.bits() << " to "
      << opts.out.string() << '\n';
}

void cmd_query(const QueryOptions& opts, std::ostream& out) {
  require_input(opts.index, "index");
  require_input(opts.codes, "codes file");
  const HammingIndex index = load_index(opts.index);
  const CodesFile codes = load_codes(opts.codes);
  const CodeRecord* probe = nullptr;
  for (const auto& r : codes.records) {
    if (r.record_id == opts.probe) probe = &r;
  }
  if (!probe) {
    throw UsageError("probe '" + opts.probe + "' is not in " + opts.codes.string());
  }
  if (probe->code.bits() != index.bits()) {
    throw IncompatibleError("probe code has K=" + std::to_string(probe->code.bits()) +
                            ", index has K=" + std::to_string(index.bits()));
  }
  out << "rank,id,item_id,class_id,distance\n";
  const auto hits = index.query(probe->code, opts.top);
  for (std::size_t n = 0; n < hits.size(); ++n) {
    const auto& e = index.entry(hits[n].position);
    out << n + 1 << ',' << e.id << ',' << e.item_id << ',' << e.class_id << ','
        << hits[n].distance << '\n';
  }
}

void cmd_eval(const EvalOptions& opts, std::ostream& log) {
  require_input(opts.checkpoint, "checkpoint");
  require_input(opts.manifest, "manifest");
  if (opts.index) require_input(*opts.index, "index");
  require_output(opts.out, "eval report");
  if (opts.per_query) require_output(*opts.per_query, "eval per-query report");
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  const Dataset data = load_manifest(opts.manifest);
  check_compatible(ckpt.state.params, data, opts.checkpoint);
  const HammingIndex index = opts.index ? load_index(*opts.index)
                                        : gallery_index(data, ckpt.state.params, ckpt.config.seed);
  std::vector<ItemRecord> queries;
  for (auto i : data.split.query) queries.push_back(data.records[i]);
  const EvalReport report = evaluate(index, queries, ckpt.state.params);
  write_text(opts.out, [&](std::ostream& out) { write_report_csv(out, report, ckpt.config.seed); });
  if (opts.per_query) {
    write_text(*opts.per_query,
               [&](std::ostream& out) { write_per_query_csv(out, report, ckpt.config.seed); });
  }
  log << std::fixed << std::setprecision(2) << "mAP@10 " << 100.0 * report.map_at_10
      << "  mAP@top-1 " << 100.0 * report.map_top_1 << "  mAP@top-3 " << 100.0 * report.map_top_3
      << "  mAP@top-5 " << 100.0 * report.map_top_5 << "  mAP@top-15(>=3) "
      << 100.0 * report.map_top_15_3hits << "  mAP@top-15(>=5) "
      << 100.0 * report.map_top_15_5hits << "  item mAP@10 " << 100.0 * report.item_map_at_10
      << "  (" << report.queries << " queries, " << report.gallery << " gallery)\n";
  log.unsetf(std::ios::floatfield);
}

void cmd_distances(const DistancesOptions& opts, std::ostream& log) {
  require_input(opts.diagnostics, "diagnostics");
  require_output(opts.out, "distances");
  std::ifstream in(opts.diagnostics);
  if (!in) throw IoError("cannot open '" + opts.diagnostics.string() + "'");
  std::string comment;
  if (in.peek() == '#') std::getline(in, comment);
  const auto rows = read_diagnostics_csv(in, opts.diagnostics.string());
  write_text(opts.out, [&](std::ostream& out) {
    if (!comment.empty()) out << comment << '\n';
    out << "epoch,d_type0,d_type1,d_type2\n";
    for (const auto& r : rows) {
      out << r.epoch;
      for (const auto& d : r.mean_distance) {
        out << ',';
        if (d) {
          std::ostringstream s;
          s << std::setprecision(17) << *d;
          out << s.str();
        } else {
          out << "NA";
        }
      }
      out << '\n';
    }
  });
  log << "wrote " << rows.size() << " epochs to " << opts.out.string() << '\n';
}

void cmd_embed(const EmbedOptions& opts, std::ostream& log) {
  require_input(opts.checkpoint, "checkpoint");
  require_input(opts.manifest, "manifest");
  require_output(opts.out, "embed");
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint);
  const Dataset data = load_manifest(opts.manifest);
  check_compatible(ckpt.state.params, data, opts.checkpoint);
  const auto idx = select(data, opts.subset);
  const Matrix z = encoder_forward(ckpt.state.params, data.features(idx)).features;
  write_text(opts.out, [&](std::ostream& out) {
    out << "# seed=" << ckpt.config.seed << " dim=" << z.cols() << '\n';
    out << "record_id,item_id,class_id";
    for (std::size_t c = 0; c < z.cols(); ++c) out << ",z" << c;
    out << '\n';
    out << std::setprecision(17);
    for (std::size_t n = 0; n < idx.size(); ++n) {
      const auto& r = data.records[idx[n]];
      out << r.record_id << ',' << r.item_id << ',' << r.class_id;
      for (double v : z.row(n)) out << ',' << v;
      out << '\n';
    }
  });
  log << "exported " << idx.size() << " embeddings of width " << z.cols() << " to "
      << opts.out.string() << '\n';
}

}  // namespace semhash::cli
