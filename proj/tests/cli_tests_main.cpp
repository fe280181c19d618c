/*
 * Copyright 2026 the awae authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end contract checks for the command-line binary. argv[1] is the
// binary path; every test spawns it through the shell and inspects exit
// codes, stdout, and the files it writes.

#define DOCTEST_CONFIG_IMPLEMENT
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "awae/baselines.hpp"
#include "awae/data.hpp"
#include "awae/kv.hpp"
#include "awae/mlp.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;                          // path to the binary under test
const std::string kRoot = "cli_suite.tmp";  // scratch tree, wiped in main()

struct RunResult {
  int code = -1;
  std::string out;  // captured stdout
  std::string err;  // captured stderr
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
  static int counter = 0;
  const std::string out_file = kRoot + "/out_" + std::to_string(counter) + ".txt";
  const std::string err_file = kRoot + "/err_" + std::to_string(counter) + ".txt";
  ++counter;

  const std::string cmd = env_prefix + "\"" + g_cli + "\" " + args + " > " +
                          out_file + " 2> " + err_file;
  const int status = std::system(cmd.c_str());

  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out_file);
  r.err = slurp(err_file);
  return r;
}

// A small clustered dataset, synthesized through the binary itself once.
const std::string& dataset() {
  static std::string dir = [] {
    const std::string d = kRoot + "/ds";
    const RunResult r = run_cli(
        "synthesize --out " + d +
        " --users 40 --items 20 --clusters 2 --clicks 6 --seed 9");
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

const std::string kFastOverrides =
    " --set hidden_dim=12 --set latent_dim=6 --set batch_size=16"
    " --set max_epochs=2 --set patience=3 --set early_stop_metric=ndcg@3"
    " --set seed=1";

// A trained run directory shared by the evaluate/compare tests.
const std::string& base_run() {
  static std::string dir = [] {
    const std::string d = kRoot + "/run_base";
    const RunResult r =
        run_cli("train --data " + dataset() + " --run-dir " + d + kFastOverrides);
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::string slurp_path(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree_bytes(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), dir).generic_string()] =
          slurp_path(entry.path());
    }
  }
  return files;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("help and usage-error exit codes") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("train --help").code == 0);
  CHECK(run_cli("").code == 1);             // a subcommand is required
  CHECK(run_cli("frobnicate").code == 1);   // unknown subcommand
  CHECK(run_cli("train").code == 1);        // missing required --data
  const RunResult r = run_cli("train --data missing --bogus-flag 1");
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("config key validation and exit codes") {
  SUBCASE("unknown --set key fails as usage error") {
    const RunResult r =
        run_cli("train --data " + dataset() + " --set bogus_key=1");
    CHECK(r.code == 1);
    CHECK(r.err.find("bogus_key") != std::string::npos);
  }
  SUBCASE("malformed --set fails as usage error") {
    CHECK(run_cli("train --data " + dataset() + " --set beta").code == 1);
    CHECK(run_cli("train --data " + dataset() + " --set =3").code == 1);
  }
  SUBCASE("bad values fail as usage errors") {
    CHECK(run_cli("train --data " + dataset() + " --set cost=nope").code == 1);
    CHECK(run_cli("train --data " + dataset() + " --set beta=abc").code == 1);
    CHECK(run_cli("train --data " + dataset() + " --set model=resnet").code == 1);
    CHECK(run_cli("train --data " + dataset() +
                  " --set early_stop_metric=precision@5" + kFastOverrides)
              .code == 1);
  }
  SUBCASE("unknown key in a config file fails as usage error") {
    const std::string cfg = kRoot + "/bad.cfg";
    std::ofstream(cfg) << "bogus_file_key=1\n";
    CHECK(run_cli("train --data " + dataset() + " --config " + cfg).code == 1);
  }
  SUBCASE("missing config file fails as usage error") {
    CHECK(run_cli("train --data " + dataset() + " --config nowhere.cfg").code == 1);
  }
  SUBCASE("missing dataset fails as data error") {
    CHECK(run_cli("train --data " + kRoot + "/nope" + kFastOverrides).code == 2);
  }
}

TEST_CASE("prepare ingests a log and writes a reloadable split") {
  const std::string csv = kRoot + "/log.csv";
  {
    std::ofstream out(csv);
    out << "user,item,rating\n";
    // 12 users, up to 10 items; every user keeps >= 3 clicks at rating >= 3.
    for (int u = 0; u < 12; ++u) {
      for (int i = 0; i < 5; ++i) {
        const int item = (u % 2 == 0) ? i : 5 + i;
        out << "u" << u << ",i" << item << "," << (3 + (u + i) % 3) << "\n";
      }
      out << "u" << u << ",i0,1\n";  // below min-value, must be ignored
    }
  }

  const std::string ds = kRoot + "/prepared";
  const RunResult r = run_cli("prepare --input " + csv + " --out " + ds +
                              " --min-value 3 --min-user-clicks 2 --seed 4");
  REQUIRE(r.code == 0);

  const awae::ClickMatrix train = awae::ClickMatrix::load(ds + "/train");
  const awae::HeldoutPair val = awae::HeldoutPair::load(ds + "/val");
  const awae::HeldoutPair test = awae::HeldoutPair::load(ds + "/test");
  val.validate();
  test.validate();
  CHECK(train.n_items() == 10);
  CHECK(train.n_items() == val.foldin.n_items());

  const awae::KvFile summary = awae::KvFile::load(ds + "/summary");
  CHECK(summary.get_u64("n_users") == 12);
  CHECK(summary.get_u64("n_items") == 10);
  CHECK(summary.get_u64("n_train_users") == train.n_users());
  CHECK(summary.get_u64("n_val_users") == val.foldin.n_users());
  CHECK(summary.get_u64("n_test_users") == test.foldin.n_users());

  SUBCASE("preparation is deterministic") {
    const std::string ds2 = kRoot + "/prepared2";
    REQUIRE(run_cli("prepare --input " + csv + " --out " + ds2 +
                    " --min-value 3 --min-user-clicks 2 --seed 4")
                .code == 0);
    CHECK(tree_bytes(ds) == tree_bytes(ds2));
  }
  SUBCASE("a different seed moves users between splits") {
    const std::string ds3 = kRoot + "/prepared3";
    REQUIRE(run_cli("prepare --input " + csv + " --out " + ds3 +
                    " --min-value 3 --min-user-clicks 2 --seed 5")
                .code == 0);
    CHECK_FALSE(tree_bytes(ds) == tree_bytes(ds3));
  }
  SUBCASE("malformed logs are rejected with the offending line") {
    const std::string bad = kRoot + "/bad.csv";
    std::ofstream(bad) << "user,item,rating\nu1,i1,5\nu2\n";
    const RunResult br = run_cli("prepare --input " + bad + " --out " + kRoot +
                                 "/never --min-user-clicks 1");
    CHECK(br.code == 2);
    CHECK(br.err.find(":3") != std::string::npos);  // line number in the message
  }
}

TEST_CASE("train writes the full artifact set and echoes its config") {
  const std::string& run = base_run();

  CHECK(fs::exists(run + "/steps.csv"));
  CHECK(fs::exists(run + "/epochs.csv"));
  CHECK(fs::exists(run + "/admm.csv"));
  CHECK(fs::exists(run + "/best"));
  CHECK(fs::exists(run + "/config"));
  CHECK(fs::exists(run + "/result"));

  const awae::KvFile config = awae::KvFile::load(run + "/config");
  CHECK(config.get("hidden_dim") == "12");
  CHECK(config.get("latent_dim") == "6");
  CHECK(config.get("model") == "awae");
  CHECK(config.get("early_stop_metric") == "ndcg@3");

  const awae::KvFile result = awae::KvFile::load(run + "/result");
  CHECK(result.get("model") == "awae");
  CHECK(result.get_u64("epochs_run") == count_lines(slurp_path(run + "/epochs.csv")) - 1);
  const std::string marker = slurp_path(run + "/best");
  CHECK(marker == "epoch_" + std::to_string(result.get_u64("best_epoch")) + "\n");

  // The console log names each epoch and the artifact directory.
  const RunResult r =
      run_cli("train --data " + dataset() + " --run-dir " + kRoot +
              "/run_console" + kFastOverrides);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("epoch 1") != std::string::npos);
  CHECK(r.out.find("artifacts in ") != std::string::npos);
  CHECK(r.out.find("best epoch") != std::string::npos);
}

TEST_CASE("relative run directories resolve under the run root variable") {
  const fs::path root = fs::absolute(kRoot + "/rootdir");
  fs::create_directories(root);
  const RunResult r =
      run_cli("train --data " + dataset() + " --run-dir myrun" + kFastOverrides,
              "AWAE_RUN_ROOT=" + root.string() + " ");
  REQUIRE(r.code == 0);
  CHECK(fs::exists(root / "myrun" / "steps.csv"));
  CHECK(fs::exists(root / "myrun" / "result"));
}

TEST_CASE("evaluate renders metric tables from run dirs and checkpoints") {
  const std::string& run = base_run();

  SUBCASE("csv to stdout, resolving the best marker") {
    const RunResult r = run_cli("evaluate --checkpoint " + run + " --data " +
                                dataset() + " --split val --r 1,3");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("metric,R,mean,n_users\n") == 0);
    CHECK(count_lines(r.out) == 5);  // header + recall@{1,3} + ndcg@{1,3}
    CHECK(r.out.find("recall,1,") != std::string::npos);
    CHECK(r.out.find("ndcg,3,") != std::string::npos);
  }

  SUBCASE("a direct checkpoint directory scores identically") {
    const std::string marker = slurp_path(run + "/best");
    const std::string epoch_dir =
        run + "/" + marker.substr(0, marker.find('\n'));
    const RunResult via_run = run_cli("evaluate --checkpoint " + run + " --data " +
                                      dataset() + " --split val --r 3");
    const RunResult via_dir = run_cli("evaluate --checkpoint " + epoch_dir +
                                      " --data " + dataset() + " --split val --r 3");
    REQUIRE(via_run.code == 0);
    REQUIRE(via_dir.code == 0);
    CHECK(via_run.out == via_dir.out);
  }

  SUBCASE("json output parses and matches the csv values") {
    const RunResult r = run_cli("evaluate --checkpoint " + run + " --data " +
                                dataset() + " --split val --r 3 --format json");
    REQUIRE(r.code == 0);
    const nlohmann::json parsed = nlohmann::json::parse(r.out);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0]["metric"] == "recall");
    CHECK(parsed[1]["metric"] == "ndcg");
    CHECK(parsed[0]["R"] == 3);
  }

  SUBCASE("--out writes the table to a file instead") {
    const std::string out_file = kRoot + "/eval.csv";
    const RunResult direct = run_cli("evaluate --checkpoint " + run + " --data " +
                                     dataset() + " --split val --r 3");
    const RunResult to_file =
        run_cli("evaluate --checkpoint " + run + " --data " + dataset() +
                " --split val --r 3 --out " + out_file);
    REQUIRE(to_file.code == 0);
    CHECK(slurp_path(out_file) == direct.out);
  }

  SUBCASE("bad arguments are rejected") {
    CHECK(run_cli("evaluate --checkpoint " + run + " --data " + dataset() +
                  " --split future")
              .code == 1);
    CHECK(run_cli("evaluate --checkpoint " + run + " --data " + dataset() +
                  " --r 0")
              .code == 1);
    CHECK(run_cli("evaluate --checkpoint " + run + " --data " + dataset() +
                  " --format yaml")
              .code == 1);
    CHECK(run_cli("evaluate --checkpoint " + kRoot + "/no_ck --data " + dataset())
              .code == 2);
  }
}

TEST_CASE("compare tabulates several checkpoints on one split") {
  const std::string& run = base_run();
  const std::string dae_run = kRoot + "/run_dae";
  REQUIRE(run_cli("train --data " + dataset() + " --run-dir " + dae_run +
                  " --set model=mult_dae" + kFastOverrides)
              .code == 0);

  const RunResult r = run_cli("compare --data " + dataset() +
                              " --split val --r 3 baseline=" + dae_run + " " + run);
  REQUIRE(r.code == 0);
  CHECK(r.out.find("model,metric,R,mean,n_users\n") == 0);
  CHECK(count_lines(r.out) == 5);  // header + 2 models x {recall, ndcg}
  CHECK(r.out.find("baseline,recall,3,") != std::string::npos);
  CHECK(r.out.find("baseline,ndcg,3,") != std::string::npos);
  // The unlabeled checkpoint is named by its stored model kind.
  CHECK(r.out.find("awae,recall,3,") != std::string::npos);

  SUBCASE("metric values agree with evaluate") {
    const RunResult ev = run_cli("evaluate --checkpoint " + dae_run + " --data " +
                                 dataset() + " --split val --r 3");
    REQUIRE(ev.code == 0);
    std::istringstream lines(ev.out);
    std::string header, recall_row;
    std::getline(lines, header);
    std::getline(lines, recall_row);  // "recall,3,<mean>,<n>"
    CHECK(r.out.find("baseline," + recall_row) != std::string::npos);
  }
}

TEST_CASE("sweep trains one run per value and tabulates the results") {
  const std::string sweep_dir = kRoot + "/sweep";
  const RunResult r = run_cli("sweep --data " + dataset() + " --param beta" +
                              " --values 0,0.5 --out-dir " + sweep_dir +
                              " --split val --r 3 --workers 2" + kFastOverrides);
  REQUIRE(r.code == 0);

  CHECK(fs::exists(sweep_dir + "/beta_0/steps.csv"));
  CHECK(fs::exists(sweep_dir + "/beta_0.5/steps.csv"));
  CHECK(awae::KvFile::load(sweep_dir + "/beta_0/config").get("beta") == "0");
  CHECK(awae::KvFile::load(sweep_dir + "/beta_0.5/config").get("beta") == "0.5");

  const std::string table = slurp_path(sweep_dir + "/sweep.csv");
  CHECK(table.find("param,param_value,metric,R,mean\n") == 0);
  CHECK(count_lines(table) == 5);  // header + 2 values x {recall, ndcg}
  CHECK(table.find("beta,0,recall,3,") != std::string::npos);
  CHECK(table.find("beta,0.5,ndcg,3,") != std::string::npos);

  SUBCASE("sweeping an unknown key is a usage error") {
    CHECK(run_cli("sweep --data " + dataset() + " --param nope --values 1,2" +
                  " --out-dir " + kRoot + "/sweep_bad" + kFastOverrides)
              .code == 1);
  }
}

TEST_CASE("the variational model trains and scores through the same commands") {
  const std::string run = kRoot + "/run_vae";
  const RunResult tr = run_cli("train --data " + dataset() + " --run-dir " + run +
                               " --set model=mult_vae --set kl_anneal_steps=4" +
                               kFastOverrides);
  REQUIRE(tr.code == 0);

  const std::string marker = slurp_path(run + "/best");
  const std::string epoch_dir = run + "/" + marker.substr(0, marker.find('\n'));
  const awae::VaeParams p = awae::load_vae_checkpoint(epoch_dir);
  CHECK(p.latent_dim == 6);

  const RunResult ev = run_cli("evaluate --checkpoint " + run + " --data " +
                               dataset() + " --split val --r 3");
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("recall,3,") != std::string::npos);

  // And it can sit in a comparison next to the reconstruction models.
  const RunResult cmp = run_cli("compare --data " + dataset() +
                                " --split val --r 3 " + base_run() + " " + run);
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.find("mult_vae,recall,3,") != std::string::npos);
}

TEST_CASE("identical train invocations produce byte-identical artifacts") {
  const std::string r1 = kRoot + "/det1", r2 = kRoot + "/det2";
  REQUIRE(run_cli("train --data " + dataset() + " --run-dir " + r1 +
                  " --set delta=0.1 --set alpha=0.05" + kFastOverrides)
              .code == 0);
  REQUIRE(run_cli("train --data " + dataset() + " --run-dir " + r2 +
                  " --set delta=0.1 --set alpha=0.05" + kFastOverrides)
              .code == 0);
  CHECK(tree_bytes(r1) == tree_bytes(r2));
}

int cli_tests_main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_tests <path-to-cli-binary>\n");
    return 2;
  }
  g_cli = fs::absolute(argv[1]).string();
  if (!fs::exists(g_cli)) {
    std::fprintf(stderr, "no binary at %s\n", g_cli.c_str());
    return 2;
  }

  fs::remove_all(kRoot);
  fs::create_directories(kRoot);

  doctest::Context ctx;
  const int rc = ctx.run();
  if (rc == 0) fs::remove_all(kRoot);  // keep the tree for debugging failures
  return rc;
}

int main(int argc, char** argv) { return cli_tests_main(argc, argv); }
