#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <sys/wait.h>

#include "commands.hpp"
#include "gen.hpp"
#include "semhash/evaluation.hpp"
#include "semhash/checkpoint.hpp"
#include "semhash/retrieval.hpp"

using namespace semhash;
using namespace semhash::cli;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("semhash_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const char* name) const { return path / name; }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

// runs the real executable, returns its exit status
int run(const std::string& args) {
  const std::string cmd = std::string(SEMHASH_EXE) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SynthOptions small_synth(const fs::path& out) {
  SynthOptions s;
  s.synth.n_classes = 3;
  s.synth.items_per_class = 10;
  s.synth.poses_per_item = 4;
  s.synth.feature_dim = 8;
  s.out = out;
  return s;
}

TrainConfig quick_config(AblationMode mode) {
  TrainConfig c = default_train_config(8, 3);
  c.model.encoder_widths = {16};
  c.model.code_bits = 12;
  c.model.classifier_widths = {16};
  c.model.discriminator_widths = {8};
  c.pairs = {60, 80, 80};
  c.epochs = 3;
  c.mode = mode;
  c.diagnostic_pairs_per_type = 20;
  return c;
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(exit_code(ErrorKind::usage) == 1);
  CHECK(exit_code(ErrorKind::config) == 1);
  CHECK(exit_code(ErrorKind::shape) == 1);
  CHECK(exit_code(ErrorKind::validation) == 2);
  CHECK(exit_code(ErrorKind::parse) == 2);
  CHECK(exit_code(ErrorKind::incompatible) == 2);
  CHECK(exit_code(ErrorKind::numeric) == 3);
  CHECK(exit_code(ErrorKind::io) == 4);
  CHECK(parse_subset("gallery") == Subset::gallery);
  CHECK_THROWS_AS(parse_subset("nope"), UsageError);
}

TEST_CASE("synth is deterministic and loadable") {
  TempDir tmp;
  std::ostringstream log;
  cmd_synth(small_synth(tmp / "a.csv"), log);
  cmd_synth(small_synth(tmp / "b.csv"), log);
  CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));
  CHECK_NOTHROW(load_manifest(tmp / "a.csv"));
  auto other = small_synth(tmp / "c.csv");
  other.synth.seed = 9;
  cmd_synth(other, log);
  CHECK(slurp(tmp / "a.csv") != slurp(tmp / "c.csv"));
  CHECK_THROWS_AS(cmd_synth(small_synth("/nonexistent/dir/m.csv"), log), IoError);
}

TEST_CASE("train, encode, index, query, eval, distances, embed") {
  TempDir tmp;
  std::ostringstream log;
  cmd_synth(small_synth(tmp / "m.csv"), log);
  const Dataset data = load_manifest(tmp / "m.csv");

  TrainOptions t;
  t.manifest = tmp / "m.csv";
  t.out = tmp / "model.ckpt";
  t.diagnostics = tmp / "diag.csv";
  t.config = quick_config(AblationMode::dmc_cd);
  cmd_train(t, log);
  const auto diag = lines_of(tmp / "diag.csv");
  REQUIRE(diag.size() == 2 + 3);
  CHECK(diag[1] == "epoch,d_type0,d_type1,d_type2,J_C,J_s1,J_s2,J_D,D_acc");
  const Checkpoint ck = load_checkpoint(tmp / "model.ckpt");
  CHECK(ck.state.epochs_completed == 3);

  EncodeOptions e{tmp / "model.ckpt", tmp / "m.csv", Subset::gallery, tmp / "gallery.codes"};
  cmd_encode(e, log);
  e.subset = Subset::query;
  e.out = tmp / "query.codes";
  cmd_encode(e, log);
  const CodesFile gallery_codes = load_codes(tmp / "gallery.codes");
  CHECK(gallery_codes.records.size() == data.split.gallery.size());
  CHECK(gallery_codes.bits == 12);

  cmd_index(IndexOptions{tmp / "gallery.codes", tmp / "m.csv", tmp / "gallery.idx"}, log);
  const HammingIndex idx = load_index(tmp / "gallery.idx");
  CHECK(idx.size() == data.split.gallery.size());

  const auto& probe = data.records[data.split.query.front()];
  std::ostringstream table;
  cmd_query(QueryOptions{tmp / "gallery.idx", tmp / "query.codes", probe.record_id, 5}, table);
  std::istringstream rows(table.str());
  std::string line;
  std::getline(rows, line);
  CHECK(line == "rank,id,item_id,class_id,distance");
  std::size_t n = 0;
  while (std::getline(rows, line)) ++n;
  CHECK(n == 5);
  CHECK_THROWS_AS(cmd_query(QueryOptions{tmp / "gallery.idx", tmp / "query.codes", "missing", 5}, table),
                  UsageError);

  EvalOptions ev;
  ev.checkpoint = tmp / "model.ckpt";
  ev.manifest = tmp / "m.csv";
  ev.out = tmp / "report.csv";
  ev.per_query = tmp / "per_query.csv";
  cmd_eval(ev, log);
  const auto report = lines_of(tmp / "report.csv");
  REQUIRE(report.size() == 3);
  CHECK(report[1].rfind("mAP@10,", 0) == 0);
  CHECK(lines_of(tmp / "per_query.csv").size() == 2 + data.split.query.size());
  ev.index = tmp / "gallery.idx";
  ev.out = tmp / "report2.csv";
  ev.per_query.reset();
  cmd_eval(ev, log);
  CHECK(slurp(tmp / "report.csv") == slurp(tmp / "report2.csv"));

  cmd_distances(DistancesOptions{tmp / "diag.csv", tmp / "dist.csv"}, log);
  const auto dist = lines_of(tmp / "dist.csv");
  REQUIRE(dist.size() == 2 + 3);
  CHECK(dist[1] == "epoch,d_type0,d_type1,d_type2");

  cmd_embed(EmbedOptions{tmp / "model.ckpt", tmp / "m.csv", Subset::train, tmp / "z.csv"}, log);
  CHECK(lines_of(tmp / "z.csv").size() == 2 + data.split.train.size());
  cmd_embed(EmbedOptions{tmp / "model.ckpt", tmp / "m.csv", Subset::all, tmp / "z.csv"}, log);
  CHECK(lines_of(tmp / "z.csv").size() == 2 + data.records.size());

  // index built from a codes file of another K cannot be queried with these codes
  CHECK_THROWS_AS(cmd_index(IndexOptions{tmp / "missing.codes", tmp / "m.csv", tmp / "x.idx"}, log),
                  IoError);
}

TEST_CASE("resume continues the epoch counter") {
  TempDir tmp;
  std::ostringstream log;
  cmd_synth(small_synth(tmp / "m.csv"), log);
  TrainOptions full;
  full.manifest = tmp / "m.csv";
  full.out = tmp / "full.ckpt";
  full.config = quick_config(AblationMode::dmc_c);
  full.config.epochs = 4;
  cmd_train(full, log);

  TrainOptions half = full;
  half.out = tmp / "half.ckpt";
  half.config.epochs = 2;
  cmd_train(half, log);
  TrainOptions rest = full;
  rest.out = tmp / "rest.ckpt";
  rest.resume = tmp / "half.ckpt";
  rest.diagnostics = tmp / "rest.csv";
  cmd_train(rest, log);
  CHECK(slurp(tmp / "rest.ckpt") == slurp(tmp / "full.ckpt"));
  const auto rows = lines_of(tmp / "rest.csv");
  REQUIRE(rows.size() == 2 + 4);
  CHECK(rows[2].rfind("1,", 0) == 0);
  CHECK(rows[5].rfind("4,", 0) == 0);
}

TEST_CASE("vanilla training skips the classifier and discriminator") {
  TempDir tmp;
  std::ostringstream log;
  cmd_synth(small_synth(tmp / "m.csv"), log);
  TrainOptions t;
  t.manifest = tmp / "m.csv";
  t.out = tmp / "v.ckpt";
  t.diagnostics = tmp / "v.csv";
  t.config = quick_config(AblationMode::vanilla);
  cmd_train(t, log);
  const auto rows = read_diagnostics_csv(*std::make_unique<std::ifstream>(tmp / "v.csv"));
  for (const auto& r : rows) {
    CHECK_FALSE(r.classification_loss.has_value());
    CHECK_FALSE(r.discriminator_loss.has_value());
    CHECK_FALSE(r.relational_loss.has_value());
  }
  const Checkpoint ck = load_checkpoint(tmp / "v.ckpt");
  const ModelParams init = init_params(ck.config.model, ck.config.seed ^ 0x1a170000ull);
  CHECK(checksum(ck.state.params, Network::classifier) == checksum(init, Network::classifier));
  CHECK(checksum(ck.state.params, Network::discriminator) == checksum(init, Network::discriminator));
}

TEST_CASE("executable: flags, config file and exit codes") {
  TempDir tmp;
  const std::string dir = tmp.path.string();
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("synth --out " + dir + "/m.csv --classes 3 --items 10 --poses 4 --dim 8") == 0);
  CHECK(run("synth --out " + dir + "/m2.csv --classes 3 --items 10 --poses 4 --dim 8") == 0);
  CHECK(slurp(tmp / "m.csv") == slurp(tmp / "m2.csv"));
  CHECK(run("synth --out " + dir + "/bad.csv --poses 1") == 1);
  CHECK(run("synth --out /nonexistent/dir/m.csv") == 4);

  {
    std::ofstream cfg(tmp / "train.ini");
    cfg << "[train]\n"
        << "manifest=" << dir << "/m.csv\n"
        << "out=" << dir << "/a.ckpt\n"
        << "epochs=5\n"
        << "bits=12\n"
        << "encoder-widths=16\n"
        << "classifier-widths=16\n"
        << "discriminator-widths=8\n"
        << "type0-pairs=40\ntype1-pairs=40\ntype2-pairs=40\n";
  }
  // flags override the file
  CHECK(run("--config " + dir + "/train.ini train --epochs 2") == 0);
  const Checkpoint ck = load_checkpoint(tmp / "a.ckpt");
  CHECK(ck.state.epochs_completed == 2);
  CHECK(ck.config.model.code_bits == 12);
  {
    std::ofstream cfg(tmp / "bad.ini");
    cfg << "[train]\nmanifest=" << dir << "/m.csv\nout=" << dir << "/b.ckpt\nno-such-key=3\n";
  }
  CHECK(run("--config " + dir + "/bad.ini train") == 1);

  const std::string base = "train --manifest " + dir + "/m.csv --out " + dir +
                           "/c.ckpt --bits 8 --encoder-widths 8 --classifier-widths none "
                           "--discriminator-widths 4 --epochs 1 ";
  CHECK(run(base + "--mode dmc_x") == 1);
  CHECK(run(base + "--batch-size 0") == 1);
  CHECK(run(base + "--lr 1e300 --gamma 1e-300") == 3);
  CHECK(run("train --manifest " + dir + "/missing.csv --out " + dir + "/c.ckpt") == 4);

  {
    std::ofstream bad(tmp / "broken.csv");
    bad << "semhash-manifest 1 dim=2 classes=1 records=1 seed=0\nr0,x,0,0,train,1\n";
  }
  CHECK(run("train --manifest " + dir + "/broken.csv --out " + dir + "/c.ckpt") == 2);
  {
    std::ofstream bad(tmp / "future.csv");
    bad << "semhash-manifest 7 dim=2 classes=1 records=0 seed=0\n";
  }
  CHECK(run("train --manifest " + dir + "/future.csv --out " + dir + "/c.ckpt") == 2);
  {
    std::ofstream bad(tmp / "junk.ckpt");
    bad << "not a checkpoint";
  }
  CHECK(run("encode --checkpoint " + dir + "/junk.ckpt --manifest " + dir + "/m.csv --out " + dir +
            "/x.codes") == 2);
}

TEST_CASE("trained codes rank the probe's other poses first") {
  TempDir tmp;
  std::ostringstream log;
  SynthOptions s;
  s.out = tmp / "m.csv";
  cmd_synth(s, log);
  const Dataset data = load_manifest(tmp / "m.csv");
  TrainOptions t;
  t.manifest = tmp / "m.csv";
  t.out = tmp / "model.ckpt";
  t.config = default_train_config(data.feature_dim, data.num_classes);
  cmd_train(t, log);
  cmd_encode(EncodeOptions{tmp / "model.ckpt", tmp / "m.csv", Subset::gallery, tmp / "g.codes"}, log);
  cmd_encode(EncodeOptions{tmp / "model.ckpt", tmp / "m.csv", Subset::query, tmp / "q.codes"}, log);
  cmd_index(IndexOptions{tmp / "g.codes", tmp / "m.csv", tmp / "g.idx"}, log);

  const std::size_t mates = s.synth.poses_per_item - 1;
  std::size_t first_is_mate = 0, mates_in_top10 = 0;
  for (auto qi : data.split.query) {
    const auto& probe = data.records[qi];
    std::ostringstream table;
    cmd_query(QueryOptions{tmp / "g.idx", tmp / "q.codes", probe.record_id, 10}, table);
    std::istringstream rows(table.str());
    std::string line;
    std::getline(rows, line);
    for (std::size_t rank = 1; std::getline(rows, line); ++rank) {
      // rank,id,item_id,class_id,distance
      const auto a = line.find(',');
      const auto b = line.find(',', a + 1);
      const auto c = line.find(',', b + 1);
      const bool same = line.substr(b + 1, c - b - 1) == probe.item_id;
      mates_in_top10 += same;
      if (rank == 1) first_is_mate += same;
    }
  }
  const double q = static_cast<double>(data.split.query.size());
  MESSAGE("rank-1 same item: " << first_is_mate << "/" << q << ", mean poses in top 10: "
                               << mates_in_top10 / q << " of " << mates);
  CHECK(first_is_mate >= 0.9 * q);
  CHECK(mates_in_top10 / q >= 0.9 * static_cast<double>(mates));
}

TEST_CASE("untrained model on uninformative features scores like a random ranking") {
  // features carry no class signal, so any encoder ranks at random
  TempDir tmp;
  Dataset d;
  d.feature_dim = 8;
  d.num_classes = 5;
  semhash::testing::Gen g(123);
  int next = 0;
  for (int cls = 0; cls < 5; ++cls) {
    for (int item = 0; item < 100; ++item) {
      const std::string iid = "c" + std::to_string(cls) + "i" + std::to_string(item);
      for (int pose = 0; pose < 2; ++pose) {
        const SplitTag tag = item < 10 ? SplitTag::train : (pose == 0 ? SplitTag::query : SplitTag::gallery);
        d.records.push_back({"r" + std::to_string(next++), iid, cls, pose, tag, g.vec(8, -1.0, 1.0)});
      }
    }
  }
  d.index_splits();
  write_manifest(tmp / "m.csv", d);
  std::ostringstream log;
  TrainOptions t;
  t.manifest = tmp / "m.csv";
  t.out = tmp / "init.ckpt";
  t.config = default_train_config(8, 5);
  t.config.epochs = 0;
  cmd_train(t, log);
  EvalOptions ev;
  ev.checkpoint = tmp / "init.ckpt";
  ev.manifest = tmp / "m.csv";
  ev.out = tmp / "r.csv";
  cmd_eval(ev, log);
  const auto row = lines_of(tmp / "r.csv").at(2);
  const double map10 = std::stod(row.substr(0, row.find(','))) / 100.0;

  // Monte-Carlo baseline: mAP@10 of uniformly shuffled gallery labels
  std::vector<int> labels;
  for (auto i : d.split.gallery) labels.push_back(d.records[i].class_id);
  double baseline = 0.0;
  const int rounds = 20000;
  for (int r = 0; r < rounds; ++r) {
    std::shuffle(labels.begin(), labels.end(), g.engine());
    const int cls = static_cast<int>(g.index(5));
    std::vector<int> rel(10);
    for (std::size_t k = 0; k < 10; ++k) rel[k] = labels[k] == cls;
    baseline += semhash::testing::naive_ap(rel, 10);
  }
  baseline /= rounds;
  MESSAGE("random-init mAP@10 " << map10 << ", random-ranking baseline " << baseline);
  CHECK(std::abs(map10 - baseline) < 0.05);
}
