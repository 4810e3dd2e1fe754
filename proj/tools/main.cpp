// semhash command-line front end.

#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"
#include "semhash/error.hpp"

namespace {

using namespace semhash;
using namespace semhash::cli;

// "64,32" -> {64, 32}; "none" or "" -> {}
std::vector<std::size_t> parse_width_list(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  if (text.empty() || text == "none") return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string part = text.substr(start, comma - start);
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(part, &used);
      if (used != part.size() || v == 0) throw std::invalid_argument(part);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(std::string(flag) + ": bad width '" + part + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out.empty() ? "none" : out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semhash: pairwise-supervised binary hashing with Cauchy losses"};
  app.set_config("--config", "", "INI file, one [subcommand] section of key=value lines; flags override it");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  // synth
  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic pose-variation manifest");
  c_synth->add_option("--out", synth.out, "Manifest path")->required();
  c_synth->add_option("--classes", synth.synth.n_classes)->capture_default_str();
  c_synth->add_option("--items", synth.synth.items_per_class, "Items per class")->capture_default_str();
  c_synth->add_option("--poses", synth.synth.poses_per_item, "Poses per item")->capture_default_str();
  c_synth->add_option("--dim", synth.synth.feature_dim, "Feature dimension")->capture_default_str();
  c_synth->add_option("--sigma-class", synth.synth.sigma_class)->capture_default_str();
  c_synth->add_option("--sigma-item", synth.synth.sigma_item)->capture_default_str();
  c_synth->add_option("--sigma-pose", synth.synth.sigma_pose)->capture_default_str();
  c_synth->add_option("--train-fraction", synth.synth.train_fraction)->capture_default_str();
  c_synth->add_option("--test-fraction", synth.synth.test_fraction)->capture_default_str();
  c_synth->add_option("--seed", synth.synth.seed)->capture_default_str();

  // train
  TrainOptions train;
  train.config = default_train_config(16, 5);
  std::string mode = to_string(train.config.mode);
  std::string enc_widths = join(train.config.model.encoder_widths);
  std::string cls_widths = join(train.config.model.classifier_widths);
  std::string dis_widths = join(train.config.model.discriminator_widths);
  std::string diagnostics;
  std::string resume;
  bool reweight = false;
  auto& tc = train.config;
  auto* c_train = app.add_subcommand("train", "Train the hashing model");
  c_train->add_option("--manifest", train.manifest)->required();
  c_train->add_option("--out", train.out, "Checkpoint path")->required();
  c_train->add_option("--diagnostics", diagnostics, "Per-epoch diagnostics CSV");
  c_train->add_option("--resume", resume, "Continue from this checkpoint (its config is reused)");
  c_train->add_option("--mode", mode, "vanilla | dmc | dmc_c | dmc_cd")->capture_default_str();
  c_train->add_option("--epochs", tc.epochs)->capture_default_str();
  c_train->add_option("--seed", tc.seed)->capture_default_str();
  c_train->add_option("--bits", tc.model.code_bits, "Code length K")->capture_default_str();
  c_train->add_option("--encoder-widths", enc_widths)->capture_default_str();
  c_train->add_option("--classifier-widths", cls_widths)->capture_default_str();
  c_train->add_option("--discriminator-widths", dis_widths)->capture_default_str();
  c_train->add_option("--discriminator-channels", tc.model.discriminator_channels)->capture_default_str();
  c_train->add_option("--gamma", tc.cauchy.gamma)->capture_default_str();
  c_train->add_option("--alpha1", tc.weights.alpha1)->capture_default_str();
  c_train->add_option("--alpha2", tc.weights.alpha2)->capture_default_str();
  c_train->add_option("--beta", tc.weights.beta)->capture_default_str();
  c_train->add_option("--lr", tc.adam.lr)->capture_default_str();
  c_train->add_option("--batch-size", tc.batch_size)->capture_default_str();
  c_train->add_option("--type0-pairs", tc.pairs.same_item)->capture_default_str();
  c_train->add_option("--type1-pairs", tc.pairs.same_class)->capture_default_str();
  c_train->add_option("--type2-pairs", tc.pairs.different_class)->capture_default_str();
  c_train->add_flag("--reweight", reweight, "Inverse-frequency weight per pair type in the Cauchy losses");
  c_train->add_option("--diagnostic-pairs", tc.diagnostic_pairs_per_type,
                      "Held-out pairs per type for the distance diagnostic")->capture_default_str();
  c_train->add_option("--checkpoint-every", tc.checkpoint_every,
                      "Also save every N epochs (0: final only)")->capture_default_str();

  // encode
  EncodeOptions encode;
  std::string encode_subset = "gallery";
  auto* c_encode = app.add_subcommand("encode", "Write binary codes for a manifest subset");
  c_encode->add_option("--checkpoint", encode.checkpoint)->required();
  c_encode->add_option("--manifest", encode.manifest)->required();
  c_encode->add_option("--subset", encode_subset, "all | train | test | gallery | query")->capture_default_str();
  c_encode->add_option("--out", encode.out, "Codes path")->required();

  // index
  IndexOptions index;
  auto* c_index = app.add_subcommand("index", "Build a Hamming index from a codes file");
  c_index->add_option("--codes", index.codes)->required();
  c_index->add_option("--manifest", index.manifest, "Source of item/class metadata")->required();
  c_index->add_option("--out", index.out, "Index path")->required();

  // query
  QueryOptions query;
  auto* c_query = app.add_subcommand("query", "Rank the index against one probe code");
  c_query->add_option("--index", query.index)->required();
  c_query->add_option("--codes", query.codes, "Codes file holding the probe")->required();
  c_query->add_option("--probe", query.probe, "Probe record id")->required();
  c_query->add_option("--top", query.top, "Number of results; more than the index returns all")
      ->capture_default_str();

  // eval
  EvalOptions eval;
  std::string eval_index;
  std::string eval_per_query;
  auto* c_eval = app.add_subcommand("eval", "Evaluate the query split against the gallery");
  c_eval->add_option("--checkpoint", eval.checkpoint)->required();
  c_eval->add_option("--manifest", eval.manifest)->required();
  c_eval->add_option("--index", eval_index, "Prebuilt gallery index (default: encode the gallery)");
  c_eval->add_option("--out", eval.out, "Report CSV")->required();
  c_eval->add_option("--per-query", eval_per_query, "Per-query AP CSV");

  // distances
  DistancesOptions distances;
  auto* c_dist = app.add_subcommand("distances", "Per-type mean distance per epoch from diagnostics");
  c_dist->add_option("--diagnostics", distances.diagnostics)->required();
  c_dist->add_option("--out", distances.out)->required();

  // embed
  EmbedOptions embed;
  std::string embed_subset = "all";
  auto* c_embed = app.add_subcommand("embed", "Export encoder features z as CSV");
  c_embed->add_option("--checkpoint", embed.checkpoint)->required();
  c_embed->add_option("--manifest", embed.manifest)->required();
  c_embed->add_option("--subset", embed_subset)->capture_default_str();
  c_embed->add_option("--out", embed.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (c_synth->parsed()) {
      cmd_synth(synth, std::cout);
    } else if (c_train->parsed()) {
      tc.mode = parse_ablation_mode(mode);
      tc.model.encoder_widths = parse_width_list(enc_widths, "--encoder-widths");
      tc.model.classifier_widths = parse_width_list(cls_widths, "--classifier-widths");
      tc.model.discriminator_widths = parse_width_list(dis_widths, "--discriminator-widths");
      tc.reweight_pair_types = reweight;
      if (!diagnostics.empty()) train.diagnostics = diagnostics;
      if (!resume.empty()) train.resume = resume;
      // input width and class count follow the manifest
      const Dataset header = load_manifest(train.manifest);
      tc.model.input_dim = header.feature_dim;
      tc.model.num_classes = header.num_classes;
      cmd_train(train, std::cout);
    } else if (c_encode->parsed()) {
      encode.subset = parse_subset(encode_subset);
      cmd_encode(encode, std::cout);
    } else if (c_index->parsed()) {
      cmd_index(index, std::cout);
    } else if (c_query->parsed()) {
      cmd_query(query, std::cout);
    } else if (c_eval->parsed()) {
      if (!eval_index.empty()) eval.index = eval_index;
      if (!eval_per_query.empty()) eval.per_query = eval_per_query;
      cmd_eval(eval, std::cout);
    } else if (c_dist->parsed()) {
      cmd_distances(distances, std::cout);
    } else if (c_embed->parsed()) {
      embed.subset = parse_subset(embed_subset);
      cmd_embed(embed, std::cout);
    }
  } catch (const semhash::Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << '\n';
    return 4;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return 4;
  }
  return 0;
}
