#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "adl/pipeline.hpp"
#include "helpers.hpp"

using namespace adl;

namespace {

// A small labeled corpus: per class, tones at distinct frequencies, laid out
// as <dir>/<raw label>/<clip>.wav so extraction picks labels up from the
// directory names.
void make_wav_corpus(const std::filesystem::path& dir, int clips_per_class, double seconds) {
  const std::vector<std::pair<std::string, double>> classes = {
      {"Toilet flush", 300.0},
      {"Toothbrush", 900.0},
      {"Piano", 1800.0},
      {"Vacuum cleaner", 3200.0},
  };
  Rng rng(6);
  for (const auto& [label, freq] : classes) {
    std::filesystem::create_directories(dir / label);
    for (int i = 0; i < clips_per_class; ++i) {
      PcmSignal sig = testutil::make_sine(freq * (1.0 + 0.01 * i), seconds, 16000, 0.4);
      for (double& v : sig.samples) v += 0.05 * rng.normal();
      for (double& v : sig.samples) v = std::clamp(v, -1.0, 1.0);
      write_wav(dir / label / ("clip" + std::to_string(i) + ".wav"), sig);
    }
  }
}

PipelineConfig fast_train_config(const std::filesystem::path& records,
                                 const std::filesystem::path& model) {
  PipelineConfig cfg;
  cfg.records = records.string();
  cfg.model = model.string();
  cfg.window = 1;
  cfg.resample.method = ResampleMethod::random;
  cfg.train.max_epochs = 2;
  cfg.train.batch_size = 8;
  return cfg;
}

}  // namespace

TEST_CASE("config files parse sections, comments, and key = value lines") {
  testutil::TempDir dir("cfg");
  {
    std::ofstream out(dir / "p.conf");
    out << "# pipeline settings\n";
    out << "[paths]\n";
    out << "records = out/r.adle\n";
    out << "[resample]\n";
    out << "method = smote   # synthetic balancing\n";
    out << "k_neighbors = 7\n";
    out << "[segment]\n";
    out << "window = 5\n";
    out << "[train]\n";
    out << "learning_rate = 0.01\n";
    out << "max_epochs = 3\n";
    out << "[eval]\n";
    out << "k = 1,3\n";
    out << "sweep_windows = 1, 5, 15\n";
  }
  PipelineConfig cfg;
  load_config_file(cfg, dir / "p.conf");
  CHECK(cfg.records == "out/r.adle");
  CHECK(cfg.resample.method == ResampleMethod::smote);
  CHECK(cfg.resample.k_neighbors == 7);
  CHECK(cfg.window == 5);
  CHECK(cfg.train.learning_rate == 0.01);
  CHECK(cfg.train.max_epochs == 3);
  CHECK(cfg.eval_ks == std::vector<int>{1, 3});
  CHECK(cfg.sweep_windows == std::vector<int>{1, 5, 15});

  SUBCASE("malformed lines are format errors") {
    std::ofstream(dir / "bad.conf") << "no equals sign here\n";
    CHECK_THROWS_AS(load_config_file(cfg, dir / "bad.conf"), Error);
  }
  SUBCASE("defaults reproduce the deployed setting") {
    const PipelineConfig defaults;
    CHECK(defaults.window == 10);
    CHECK(defaults.resample.method == ResampleMethod::random);
    CHECK(defaults.resample.k_neighbors == 5);
    CHECK(defaults.split_ratio == 0.9);
    CHECK(defaults.train.learning_rate == 0.001);
    CHECK(defaults.train.decay == 1e-6);
    CHECK(defaults.train.momentum == 0.9);
    CHECK(defaults.train.batch_size == 100);
    CHECK(defaults.train.max_epochs == 20);
    CHECK(defaults.train.seed == 0);
    CHECK(defaults.sweep_windows == std::vector<int>{1, 3, 5, 10, 15});
  }
}

TEST_CASE("set_all_seeds overrides every seed field") {
  PipelineConfig cfg;
  cfg.set_all_seeds(31);
  CHECK(cfg.extractor_seed == 31);
  CHECK(cfg.resample.seed == 31);
  CHECK(cfg.split_seed == 31);
  CHECK(cfg.train.seed == 31);
}

TEST_CASE("exit codes map error categories to the documented table") {
  CHECK(exit_code_for(errc::input) == 2);
  CHECK(exit_code_for(errc::format) == 3);
  CHECK(exit_code_for(errc::unsupported_format) == 3);
  CHECK(exit_code_for(errc::corruption) == 3);
  CHECK(exit_code_for(errc::numeric) == 4);
}

TEST_CASE("extract builds labeled records from a directory corpus") {
  testutil::TempDir dir("extract");
  make_wav_corpus(dir / "wavs", 2, 2.0);

  PipelineConfig cfg;
  cfg.subject = "s1";
  std::ostringstream log;
  const ExtractSummary summary = run_extract(dir / "wavs", dir / "out.adle", cfg, log);
  CHECK(summary.files_ok == 8);
  CHECK(summary.files_failed == 0);
  CHECK(summary.clips == 8);
  CHECK(summary.vectors == 8 * 2);  // 2 s -> 198 frames -> 2 patches per clip

  const RecordFile file = read_records(dir / "out.adle");
  REQUIRE(file.clips.size() == 8);
  for (const auto& clip : file.clips) {
    CHECK(clip.subject_id == "s1");
    CHECK(clip.raw_labels.size() == 1);
    CHECK(clip.vectors.size() == 2);
  }

  SUBCASE("re-running is byte-identical") {
    const ExtractSummary again = run_extract(dir / "wavs", dir / "out2.adle", cfg, log);
    CHECK(again.vectors == summary.vectors);
    CHECK(testutil::read_file_bytes(dir / "out.adle") ==
          testutil::read_file_bytes(dir / "out2.adle"));
  }
  SUBCASE("undecodable files are skipped with a logged reason") {
    std::ofstream(dir / "wavs" / "broken.wav") << "not a wav";
    std::ostringstream log2;
    const ExtractSummary s2 = run_extract(dir / "wavs", dir / "out3.adle", cfg, log2);
    CHECK(s2.files_failed == 1);
    CHECK(s2.files_ok == 8);
    CHECK(log2.str().find("broken.wav") != std::string::npos);
  }
  SUBCASE("an empty directory is an input error") {
    std::filesystem::create_directories(dir / "empty");
    CHECK_THROWS_AS(run_extract(dir / "empty", dir / "out4.adle", cfg, log), Error);
  }
}

TEST_CASE("extract honors --label for single files and exports CSV on request") {
  testutil::TempDir dir("extract1");
  write_wav(dir / "one.wav", testutil::make_sine(500.0, 1.5, 16000, 0.3));

  PipelineConfig cfg;
  cfg.labels = {"Boiling"};
  cfg.export_csv = true;
  std::ostringstream log;
  run_extract(dir / "one.wav", dir / "one.adle", cfg, log);

  const RecordFile file = read_records(dir / "one.adle");
  REQUIRE(file.clips.size() == 1);
  CHECK(file.clips[0].raw_labels == std::set<std::string>{"Boiling"});
  CHECK(file.clips[0].clip_id == "one");
  CHECK(std::filesystem::exists(dir / "one.adle.csv"));
}

TEST_CASE("train-eval-predict round trip on the tone corpus") {
  testutil::TempDir dir("e2e");
  make_wav_corpus(dir / "wavs", 3, 3.0);

  PipelineConfig cfg;
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);

  PipelineConfig tcfg = fast_train_config(dir / "r.adle", dir / "m.adlm");
  const TrainSummary summary = run_train(tcfg, log);
  CHECK(summary.clips_used == 12);
  CHECK(summary.best_epoch >= 1);
  CHECK(std::filesystem::exists(dir / "m.adlm"));
  CHECK(std::filesystem::exists(dir / "m.adlm.scaler"));
  CHECK(std::filesystem::exists(dir / "m.adlm.history.csv"));

  // History rows: epoch,train_loss,val_accuracy.
  {
    std::ifstream in(dir / "m.adlm.history.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "epoch,train_loss,val_accuracy");
    std::string row;
    std::size_t rows = 0;
    while (std::getline(in, row)) ++rows;
    CHECK(rows == summary.history.size());
  }

  SUBCASE("eval writes reports and top-3 dominates top-1") {
    PipelineConfig ecfg = tcfg;
    ecfg.reports = (dir / "reports").string();
    ecfg.eval_ks = {1, 3, 5};
    const EvalReport report = run_eval(ecfg, log);
    CHECK(std::filesystem::exists(dir / "reports" / "per_subject.csv"));
    CHECK(std::filesystem::exists(dir / "reports" / "summary.txt"));
    CHECK(report.top3_weighted_mean >= report.top1_weighted_mean);
    for (const auto& s : report.per_subject) CHECK(s.top3_weighted >= s.top1_weighted);

    // The extra requested k shows up in the summary and dominates top-3.
    REQUIRE(report.extra_topk_weighted_mean.size() == 1);
    CHECK(report.extra_topk_weighted_mean[0].first == 5);
    CHECK(report.extra_topk_weighted_mean[0].second >= report.top3_weighted_mean);
    std::ifstream in(dir / "reports" / "summary.csv");
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(contents.find("top5_weighted_mean,") != std::string::npos);
  }

  SUBCASE("sweep emits one report per window plus a summary") {
    PipelineConfig scfg = tcfg;
    scfg.reports = (dir / "sweep").string();
    scfg.sweep_windows = {1, 2};
    const auto points = run_sweep(scfg, log);
    REQUIRE(points.size() == 2);
    CHECK(std::filesystem::exists(dir / "sweep" / "sweep_w1" / "summary.csv"));
    CHECK(std::filesystem::exists(dir / "sweep" / "sweep_w2" / "summary.csv"));
    std::ifstream in(dir / "sweep" / "sweep_summary.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "window,top1_weighted_mean,top3_weighted_mean,overall_f1");
  }

  SUBCASE("predict emits one row per segment with probabilities summing below 1") {
    PipelineConfig pcfg = tcfg;
    pcfg.pca_records = (dir / "r.adle").string();
    pcfg.window = 1;
    write_wav(dir / "probe.wav", testutil::make_sine(910.0, 2.0, 16000, 0.4));
    const auto rows = run_predict(dir / "probe.wav", pcfg, log);
    REQUIRE(rows.size() == 2);  // 2 s -> 2 patches at window 1
    CHECK(rows[0].start_time == doctest::Approx(0.0));
    CHECK(rows[1].start_time == doctest::Approx(0.96));
    for (const auto& row : rows) {
      double sum = 0.0;
      for (const auto& [cls, p] : row.top3) {
        CHECK(cls >= 0);
        CHECK(p >= 0.0);
        sum += p;
      }
      CHECK(sum <= 1.0 + 1e-9);
    }
  }

  SUBCASE("SMOTE training writes the synthetic provenance log on request") {
    PipelineConfig scfg = fast_train_config(dir / "r.adle", dir / "ms.adlm");
    scfg.resample.method = ResampleMethod::smote;
    scfg.resample.k_neighbors = 2;
    scfg.smote_log = (dir / "smote.csv").string();
    run_train(scfg, log);
    std::ifstream in(dir / "smote.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "class,x_index,n_index,lambda");
  }

  SUBCASE("predict rejects audio shorter than one segment") {
    PipelineConfig pcfg = tcfg;
    pcfg.window = 10;  // needs 9.6 s
    write_wav(dir / "short.wav", testutil::make_sine(910.0, 2.0, 16000, 0.4));
    try {
      run_predict(dir / "short.wav", pcfg, log);
      FAIL("expected too-short error");
    } catch (const Error& e) {
      CHECK(e.code() == errc::input);
      CHECK(std::string(e.what()).find("too short") != std::string::npos);
    }
  }
}

TEST_CASE("training twice with the same seeds produces byte-identical artifacts") {
  testutil::TempDir dir("det");
  make_wav_corpus(dir / "wavs", 3, 2.0);
  PipelineConfig cfg;
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);

  PipelineConfig a = fast_train_config(dir / "r.adle", dir / "a.adlm");
  PipelineConfig b = fast_train_config(dir / "r.adle", dir / "b.adlm");
  run_train(a, log);
  run_train(b, log);
  CHECK(testutil::read_file_bytes(dir / "a.adlm") == testutil::read_file_bytes(dir / "b.adlm"));
  CHECK(testutil::read_file_bytes(dir / "a.adlm.scaler") ==
        testutil::read_file_bytes(dir / "b.adlm.scaler"));
  CHECK(testutil::read_file_bytes(dir / "a.adlm.history.csv") ==
        testutil::read_file_bytes(dir / "b.adlm.history.csv"));
}

TEST_CASE("train refuses records with fewer than two classes") {
  testutil::TempDir dir("refuse");
  std::filesystem::create_directories(dir / "wavs" / "Piano");
  write_wav(dir / "wavs" / "Piano" / "a.wav", testutil::make_sine(800.0, 2.0, 16000, 0.4));
  write_wav(dir / "wavs" / "Piano" / "b.wav", testutil::make_sine(820.0, 2.0, 16000, 0.4));
  PipelineConfig cfg;
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);
  PipelineConfig tcfg = fast_train_config(dir / "r.adle", dir / "m.adlm");
  try {
    run_train(tcfg, log);
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.code() == errc::input);
    CHECK(std::string(e.what()).find("2 activity classes") != std::string::npos);
  }
}

TEST_CASE("eval rejects a shape-incompatible checkpoint") {
  testutil::TempDir dir("schema");
  make_wav_corpus(dir / "wavs", 2, 2.0);
  PipelineConfig cfg;
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);

  CnnSpec small;
  small.input_len = 16;
  small.conv_channels = {2, 2, 2};
  small.dense_units = 4;
  save_model(CnnModel::seeded(small, 0), dir / "bad.adlm");
  ScalerParams sc;
  sc.min.assign(16, 0.0);
  sc.max.assign(16, 1.0);
  save_scaler(sc, dir / "bad.adlm.scaler");

  PipelineConfig ecfg;
  ecfg.records = (dir / "r.adle").string();
  ecfg.model = (dir / "bad.adlm").string();
  try {
    run_eval(ecfg, log);
    FAIL("expected schema error");
  } catch (const Error& e) {
    CHECK(e.code() == errc::format);
  }
}

TEST_CASE("a 30 s recording at window 10 predicts exactly 3 segments") {
  testutil::TempDir dir("seg30");
  make_wav_corpus(dir / "wavs", 3, 2.0);
  PipelineConfig cfg;
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);
  PipelineConfig tcfg = fast_train_config(dir / "r.adle", dir / "m.adlm");
  run_train(tcfg, log);

  // 30 s -> 2998 log-mel frames -> 31 embedding vectors -> floor(31/10) = 3.
  write_wav(dir / "long.wav", testutil::make_sine(600.0, 30.0, 16000, 0.4));
  PipelineConfig pcfg = tcfg;
  pcfg.window = 10;
  pcfg.pca_records = (dir / "r.adle").string();
  const auto rows = run_predict(dir / "long.wav", pcfg, log);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].start_time == doctest::Approx(9.6));
  CHECK(rows[2].start_time == doctest::Approx(19.2));
}

#ifdef ADL_CLI_BIN
namespace {

int run_cli(const std::string& args) {
  const int status = std::system((std::string(ADL_CLI_BIN) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("the adlrec binary wires the pipeline together with documented exit codes") {
  testutil::TempDir dir("cli");
  make_wav_corpus(dir / "wavs", 3, 2.0);
  const std::string records = (dir / "r.adle").string();
  const std::string model = (dir / "m.adlm").string();

  SUBCASE("extract, train, eval, predict, sweep round trip") {
    CHECK(run_cli("extract " + (dir / "wavs").string() + " " + records) == 0);
    CHECK(run_cli("train " + records + " " + model +
                  " --window 1 --max-epochs 2 --batch-size 8") == 0);
    CHECK(run_cli("eval " + model + " " + records + " --window 1 --reports " +
                  (dir / "rep").string()) == 0);
    CHECK(std::filesystem::exists(dir / "rep" / "summary.csv"));
    write_wav(dir / "probe.wav", testutil::make_sine(900.0, 2.0, 16000, 0.4));
    CHECK(run_cli("predict " + model + " " + (dir / "probe.wav").string() +
                  " --window 1 --pca-records " + records) == 0);
    CHECK(run_cli("sweep " + model + " " + records + " --windows 1,2 --reports " +
                  (dir / "sw").string()) == 0);
    CHECK(std::filesystem::exists(dir / "sw" / "sweep_summary.csv"));
  }

  SUBCASE("missing input exits 2; malformed records exit 3") {
    CHECK(run_cli("extract " + (dir / "missing").string() + " " + records) == 2);
    std::ofstream(dir / "junk.adle") << "not a record file";
    CHECK(run_cli("train " + (dir / "junk.adle").string() + " " + model) == 3);
  }

  SUBCASE("config file values apply and flags override them") {
    CHECK(run_cli("extract " + (dir / "wavs").string() + " " + records) == 0);
    {
      std::ofstream conf(dir / "run.conf");
      conf << "[segment]\nwindow = 1\n[train]\nmax_epochs = 2\nbatch_size = 8\n";
    }
    CHECK(run_cli("train " + records + " " + model + " --config " + (dir / "run.conf").string()) ==
          0);
    CHECK(std::filesystem::exists(model));
  }

  SUBCASE("ADL_REPORT_DIR overrides the report directory") {
    CHECK(run_cli("extract " + (dir / "wavs").string() + " " + records) == 0);
    CHECK(run_cli("train " + records + " " + model +
                  " --window 1 --max-epochs 2 --batch-size 8") == 0);
    const std::string env_dir = (dir / "env_reports").string();
    const int status = std::system(("ADL_REPORT_DIR=" + env_dir + " " + ADL_CLI_BIN + " eval " +
                                    model + " " + records + " --window 1 >/dev/null 2>&1")
                                       .c_str());
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(std::filesystem::exists(dir / "env_reports" / "summary.csv"));
  }
}
#endif  // ADL_CLI_BIN

TEST_CASE("subject override funnels every instance onto one subject") {
  testutil::TempDir dir("subj");
  make_wav_corpus(dir / "wavs", 3, 2.0);
  PipelineConfig cfg;
  cfg.subject = "alpha";
  std::ostringstream log;
  run_extract(dir / "wavs", dir / "r.adle", cfg, log);
  PipelineConfig tcfg = fast_train_config(dir / "r.adle", dir / "m.adlm");
  run_train(tcfg, log);

  PipelineConfig ecfg = tcfg;
  ecfg.reports = (dir / "rep").string();
  ecfg.subject_override = "merged";
  const EvalReport report = run_eval(ecfg, log);
  REQUIRE(report.per_subject.size() == 1);
  CHECK(report.per_subject[0].subject == "merged");
}
