#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include "botaclip/io.hpp"
#include "botaclip/training.hpp"
#include "botaclip_cli/commands.hpp"
#include "botaclip_cli/config.hpp"
#include "botaclip_cli/manifest.hpp"
#include "testing.hpp"

using namespace botaclip;
using namespace botaclip::cli;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("botaclip_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the installed binary; returns its exit status. stdout and stderr
// go to files inside dir.
int exe(const fs::path& dir, const std::string& args) {
  std::string cmd = std::string(BOTACLIP_EXE) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                    (dir / "stderr.txt").string();
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const std::string kSmall =
    " --set model.embed_dim=12 model.botania_hidden=16 model.botania_penultimate=8 train.batch_size=32"
    " train.max_epochs=3 metrics.n_trees=5";

void synth(const fs::path& out) {
  ASSERT_EQ(run({"botaclip", "synth", "--out", out.string(), "--pairs", "96", "--img-dim", "12", "--species", "24"}), 0);
}

}  // namespace

TEST(Config, JsonRoundTripAndHash) {
  RunConfig cfg;
  cfg.seed = 7;
  cfg.train.lambda = 0.25;
  cfg.arch.variant = Variant::Attention;
  json doc = to_json(cfg);
  RunConfig back = config_from_json(doc);
  EXPECT_EQ(to_json(back).dump(), doc.dump());
  EXPECT_EQ(config_hash(back), config_hash(cfg));
  EXPECT_EQ(config_hash(cfg).size(), 64u);
  back.seed = 8;
  EXPECT_NE(config_hash(back), config_hash(cfg));
}

TEST(Config, StrictSchema) {
  json doc = to_json(RunConfig{});
  doc["train"]["learning_rate"] = 0.1;
  EXPECT_ERROR_KIND(BadConfig, config_from_json(doc));
  json typed = to_json(RunConfig{});
  typed["train"]["lambda"] = "one";
  EXPECT_ERROR_KIND(BadConfig, config_from_json(typed));
  json partial = json::object({{"seed", 3}});
  EXPECT_EQ(config_from_json(partial).seed, 3u);
}

TEST(Config, OverridesReplaceExistingKeysOnly) {
  json doc = to_json(RunConfig{});
  apply_override(doc, "train.lambda=0");
  apply_override(doc, "model.variant=mlp");
  RunConfig cfg = config_from_json(doc);
  EXPECT_EQ(cfg.train.lambda, 0.0);
  EXPECT_EQ(cfg.arch.variant, Variant::Mlp);
  EXPECT_ERROR_KIND(BadConfig, apply_override(doc, "train.nope=1"));
  EXPECT_ERROR_KIND(BadConfig, apply_override(doc, "no_equals_sign"));
}

TEST(Config, FileThenOverrides) {
  fs::path dir = scratch("resolve");
  fs::path file = dir / "cfg.json";
  write_text(file, R"({"seed": 5, "train": {"lambda": 2.0}})");
  RunConfig cfg = resolve_config(file.string(), {"train.lambda=0.5"});
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.train.lambda, 0.5);
  write_text(file, R"({"sed": 5})");
  EXPECT_ERROR_KIND(BadConfig, resolve_config(file.string(), {}));
}

TEST(ExitCodes, UsageDataNumeric) {
  fs::path dir = scratch("exit");
  EXPECT_EQ(exe(dir, ""), kExitUsage);
  EXPECT_EQ(exe(dir, "synth"), kExitUsage);  // --out missing
  EXPECT_EQ(exe(dir, "synth --out " + (dir / "d").string() + " --set train.bogus=1"), kExitUsage);
  std::string err = read_text(dir / "stderr.txt");
  EXPECT_NE(err.find("\"exit_code\":1"), std::string::npos);
  EXPECT_NE(err.find("BadConfig"), std::string::npos);

  write_text(dir / "garbage.emb", "not an embedding file at all, definitely not");
  fs::path model = dir / "m.ckpt";
  write_text(model, "junk");
  EXPECT_EQ(exe(dir, "embed --model " + model.string() + " --in " + (dir / "garbage.emb").string() + " --out " +
                         (dir / "o.emb").string()),
            kExitData);

  // A zero row cannot be normalized.
  fs::path data = dir / "syn";
  synth(data);
  ASSERT_EQ(exe(dir, "train-botaclip --data " + data.string() + " --points " + (data / "cover.csv").string() +
                         " --out " + (dir / "m.ckpt").string() + kSmall),
            kExitUsage) << "--points is not an option of train-botaclip";
  ASSERT_EQ(exe(dir, "train-botaclip --data " + data.string() + " --out " + (dir / "m.ckpt").string() + kSmall), 0)
      << read_text(dir / "stderr.txt");
  save_embeddings(dir / "zero.emb", Matrix(2, 12), std::vector<std::string>{"a", "b"});
  EXPECT_EQ(exe(dir, "embed --model " + (dir / "m.ckpt").string() + " --in " + (dir / "zero.emb").string() +
                         " --out " + (dir / "o.emb").string()),
            kExitNumeric);
  EXPECT_NE(read_text(dir / "stderr.txt").find("ZeroRow"), std::string::npos);
}

TEST(Pipeline, ManifestsAndStats) {
  fs::path dir = scratch("pipeline");
  fs::path data = dir / "syn";
  synth(data);
  EXPECT_TRUE(fs::exists(data / "manifest.json"));
  fs::path ckpt = dir / "model.ckpt";
  std::string small = kSmall;
  ASSERT_EQ(exe(dir, "train-botaclip --data " + data.string() + " --out " + ckpt.string() + small), 0)
      << read_text(dir / "stderr.txt");
  EXPECT_TRUE(fs::exists(dir / "model.ckpt.log.csv"));
  ASSERT_TRUE(fs::exists(dir / "model.ckpt.manifest.json"));

  json m = json::parse(read_text(dir / "model.ckpt.manifest.json"));
  EXPECT_EQ(m["command"], "train-botaclip");
  EXPECT_EQ(m["config"]["model"]["embed_dim"], 12);
  EXPECT_EQ(m["config_sha256"].get<std::string>().size(), 64u);
  std::string dump = m.dump();
  EXPECT_NE(dump.find(sha256_file(ckpt)), std::string::npos);

  fs::path emb = dir / "adapted.emb";
  ASSERT_EQ(exe(dir, "embed --model " + ckpt.string() + " --in " + (data / "image_view0.emb").string() + " --out " +
                         emb.string()),
            0);
  EmbeddingFile adapted = load_embeddings(emb, false);
  EXPECT_EQ(adapted.values.rows(), 96u);
  EXPECT_EQ(adapted.values.cols(), 12u);

  fs::path rep = dir / "plant.csv";
  ASSERT_EQ(exe(dir, "eval --task plant --features " + emb.string() + " --targets " + (data / "targets.csv").string() +
                         " --points " + (data / "cover.csv").string() + " --out " + rep.string() + small),
            0)
      << read_text(dir / "stderr.txt");
  MetricReport r = read_metric_report(rep);
  EXPECT_EQ(r.metrics.front(), "tss");

  // The same report under two names: nothing to separate.
  ASSERT_EQ(exe(dir, "stats --report a=" + rep.string() + " --report b=" + rep.string() + " --metric tss --out " +
                         (dir / "stats.csv").string()),
            0)
      << read_text(dir / "stderr.txt");
  EXPECT_NE(read_text(dir / "stdout.txt").find("no winner"), std::string::npos);
  EXPECT_NE(read_text(dir / "stats.csv").find("all-zero"), std::string::npos);
}

TEST(Embed, IdentityAdapterReproducesNormalizedInput) {
  fs::path dir = scratch("identity");
  Rng rng(3);
  Matrix x = botaclip::testing::random_matrix(rng, 10, 6);
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("r" + std::to_string(i));
  save_embeddings(dir / "in.emb", x, ids);

  ArchitectureConfig arch;
  arch.embed_dim = 6;
  arch.botania.hidden = 8;
  arch.botania.penultimate = 4;
  BotaclipModel model(arch, 6, 5, 3);
  model.init(rng);
  for (Parameter* p : model.image_parameters()) {
    p->value.fill(0.0);
    if (p->value.rows() == p->value.cols()) {
      for (std::size_t i = 0; i < p->value.rows(); ++i) p->value(i, i) = 1.0;
    }
  }
  save_checkpoint(dir / "id.ckpt", model_to_checkpoint(model));
  ASSERT_EQ(run({"botaclip", "embed", "--model", (dir / "id.ckpt").string(), "--in", (dir / "in.emb").string(), "--out",
                 (dir / "out.emb").string()}),
            0);
  EmbeddingFile in = load_embeddings(dir / "in.emb", true);
  EmbeddingFile out = load_embeddings(dir / "out.emb", false);
  EXPECT_EQ(out.ids, ids);
  for (std::size_t k = 0; k < in.values.size(); ++k) EXPECT_NEAR(out.values.values()[k], in.values.values()[k], 1e-7);
}

TEST(Determinism, RerunIsByteIdentical) {
  fs::path a = scratch("det_a");
  fs::path b = scratch("det_b");
  for (const fs::path& d : {a, b}) {
    synth(d / "syn");
    ASSERT_EQ(exe(d, "train-botaclip --data " + (d / "syn").string() + " --out " + (d / "m.ckpt").string() + kSmall),
              0);
  }
  EXPECT_EQ(read_text(a / "m.ckpt"), read_text(b / "m.ckpt"));
  EXPECT_EQ(read_text(a / "m.ckpt.log.csv"), read_text(b / "m.ckpt.log.csv"));
  EXPECT_EQ(read_text(a / "syn" / "cover.csv"), read_text(b / "syn" / "cover.csv"));
}
