#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eegmi/container.hpp"
#include "eegmi/hashing.hpp"
#include "eegmi/pipeline.hpp"
#include "synthetic.hpp"

using namespace eegmi;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

class PipelineTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        mirror_ = new fs::path(eegmi::testing::scratch_dir("pipeline-mirror"));
        eegmi::testing::SyntheticRunOptions o;
        o.seconds = 40;
        o.seed = 3;
        for (int s : {1, 2}) eegmi::testing::write_synthetic_subject(*mirror_, s, {3, 4}, o);
    }
    static void TearDownTestSuite() {
        fs::remove_all(*mirror_);
        delete mirror_;
    }

    void TearDown() override {
        for (const auto& d : dirs_) fs::remove_all(d);
    }

    fs::path scratch(const std::string& name) {
        dirs_.push_back(eegmi::testing::scratch_dir(name));
        return dirs_.back();
    }

    /// Small but complete configuration.
    PipelineConfig small_config(const std::string& name) {
        auto c = default_config();
        c.seed = 11;
        c.data.source = mirror_->string();
        c.data.cache_dir = scratch(name + "-cache");
        c.data.subjects = {1, 2};
        c.data.runs = {3, 4};
        c.ica.n_components = 10;
        c.window = WindowSpec{160, 40};
        c.features.welch = WelchConfig{128, 64};
        c.train.epochs = 3;
        c.train.batch_size = 32;
        c.out_dir = scratch(name + "-out");
        return c;
    }

    static std::size_t count_skipped(const PipelineRun& r, bool skipped) {
        std::size_t n = 0;
        for (const auto& e : r.events) n += e.skipped == skipped;
        return n;
    }

    static inline fs::path* mirror_ = nullptr;
    std::vector<fs::path> dirs_;
};

}  // namespace

TEST_F(PipelineTest, FullRunWritesEveryStage) {
    const auto c = small_config("full");
    const auto run = run_pipeline(c);
    EXPECT_EQ(run.events.size(), 2u * 7u + 1u);
    EXPECT_EQ(count_skipped(run, true), 0u);
    EXPECT_EQ(run.report.succeeded, 2u);
    const auto& out = c.out_dir;
    for (const char* rel : {"S001/preprocess/R03.band.sig", "S001/preprocess/R04.hpf.sig", "S001/ica/R03.clean.sig",
                            "S001/ica/R03.ica", "S001/ica/R04.stats.csv", "S001/segment/windows.csv",
                            "S001/segment/counts.json", "S001/features/features.csv", "S001/train/model.bin",
                            "S001/train/model_trialwise.bin", "S001/train/history.csv", "S001/train/normalizer.txt",
                            "S001/evaluate/metrics.csv", "S001/evaluate/confusion_trialwise.csv",
                            "S001/evaluate/evaluation.json", "reports/subjects.csv", "reports/S002_metrics.csv",
                            "reports/S001_accuracy.svg", "reports/S002_loss.svg", "reports/summary.json",
                            "manifest.json", "config.yaml"})
        EXPECT_TRUE(fs::is_regular_file(out / rel)) << rel;
    EXPECT_FALSE(fs::exists(out / ".lock"));
    EXPECT_TRUE(verify_manifest(out).empty());

    const auto summary = nlohmann::json::parse(slurp(out / "reports" / "summary.json"));
    EXPECT_EQ(summary["succeeded"], 2);
    EXPECT_EQ(summary["reference_mean_accuracy"].size(), 3u);
    EXPECT_TRUE(summary["subjects"]["1"].contains("trialwise_accuracy"));
    const auto eval = nlohmann::json::parse(slurp(out / "S001" / "evaluate" / "evaluation.json"));
    EXPECT_EQ(eval["windows"].get<int>(), eval["train_rows"].get<int>() + eval["test_rows"].get<int>());
    const auto features = load_feature_csv(out / "S001" / "features" / "features.csv");
    EXPECT_EQ(features.columns.size(), 322u);
    EXPECT_EQ(static_cast<int>(features.rows()), eval["windows"].get<int>());
}

TEST_F(PipelineTest, RerunSkipsEverything) {
    const auto c = small_config("rerun");
    run_pipeline(c);
    const auto before = slurp(c.out_dir / "reports" / "summary.json");
    const auto again = run_pipeline(c);
    EXPECT_EQ(count_skipped(again, false), 0u);
    EXPECT_EQ(again.events.size(), 15u);
    EXPECT_EQ(slurp(c.out_dir / "reports" / "summary.json"), before);
    EXPECT_NEAR(again.report.mean_accuracy, nlohmann::json::parse(before)["mean_test_accuracy"].get<double>(), 0.0);
}

TEST_F(PipelineTest, FilterEditRecomputesDownstreamOnly) {
    auto c = small_config("edit");
    run_pipeline(c);
    c.filters.bp_high = 30.0;
    const auto r = run_pipeline(c);
    for (const auto& e : r.events) {
        if (e.stage == Stage::Fetch) EXPECT_TRUE(e.skipped);
        else EXPECT_FALSE(e.skipped) << to_string(e.stage);
    }
    EXPECT_TRUE(verify_manifest(c.out_dir).empty());
}

TEST_F(PipelineTest, SegmentEditKeepsCleanedSignals) {
    auto c = small_config("seg");
    run_pipeline(c);
    c.window.stride = 80;
    const auto r = run_pipeline(c);
    for (const auto& e : r.events) {
        const bool upstream = e.stage == Stage::Fetch || e.stage == Stage::Preprocess || e.stage == Stage::Ica;
        EXPECT_EQ(e.skipped, upstream) << to_string(e.stage);
    }
}

TEST_F(PipelineTest, DeletedIntermediateIsRegeneratedIdentically) {
    const auto c = small_config("regen");
    run_pipeline(c);
    const auto path = c.out_dir / "S001" / "features" / "features.csv";
    const auto original = slurp(path);
    fs::remove(path);
    const auto r = run_pipeline(c);
    EXPECT_EQ(slurp(path), original);
    for (const auto& e : r.events) {
        const bool redone = e.subject == 1 && e.stage == Stage::Features;
        EXPECT_EQ(e.skipped, !redone) << e.subject << " " << to_string(e.stage);
    }
}

TEST_F(PipelineTest, TamperedArtifactDetected) {
    const auto c = small_config("tamper");
    run_pipeline(c);
    std::ofstream(c.out_dir / "S002" / "train" / "history.csv", std::ios::app) << "x\n";
    std::ofstream(c.out_dir / "stray.txt") << "x";
    const auto problems = verify_manifest(c.out_dir);
    ASSERT_EQ(problems.size(), 2u);
    const auto r = run_pipeline(c);
    std::size_t redone = 0;
    for (const auto& e : r.events) redone += !e.skipped;
    EXPECT_GE(redone, 1u);
    fs::remove(c.out_dir / "stray.txt");
    EXPECT_TRUE(verify_manifest(c.out_dir).empty());
}

TEST_F(PipelineTest, TwoOutputDirectoriesAreByteIdentical) {
    const auto a = small_config("det-a");
    auto b = small_config("det-b");
    run_pipeline(a);
    run_pipeline(b);
    for (const char* rel : {"S001/features/features.csv", "S002/features/features.csv", "S001/train/model.bin",
                            "S001/train/model_trialwise.bin", "S002/ica/R04.ica", "S001/evaluate/evaluation.json",
                            "reports/subjects.csv", "reports/summary.json", "reports/S001_accuracy.svg",
                            "reports/S002_metrics.csv"})
        EXPECT_EQ(sha256_file(a.out_dir / rel), sha256_file(b.out_dir / rel)) << rel;
}

TEST_F(PipelineTest, FailingSubjectRecordedOthersContinue) {
    auto c = small_config("fail");
    c.data.subjects = {1, 3};
    const auto r = run_pipeline(c);
    EXPECT_EQ(r.report.succeeded, 1u);
    EXPECT_FALSE(r.report.subjects[1].ok);
    const auto manifest = nlohmann::json::parse(slurp(c.out_dir / "manifest.json"));
    EXPECT_EQ(manifest["failures"]["S003"]["stage"], "fetch");
    const auto subjects = slurp(c.out_dir / "reports" / "subjects.csv");
    EXPECT_NE(subjects.find("3,failed"), std::string::npos);
    EXPECT_TRUE(verify_manifest(c.out_dir).empty());
}

TEST_F(PipelineTest, LockedOutputRejected) {
    const auto c = small_config("lock");
    fs::create_directories(c.out_dir);
    std::ofstream(c.out_dir / ".lock") << ::getpid() << "\n";
    EXPECT_THROW(run_pipeline(c), OutputLockedError);
    // a lock left by a dead process is taken over
    std::ofstream(c.out_dir / ".lock", std::ios::trunc) << 999999999 << "\n";
    RunOptions o;
    o.until = Stage::Fetch;
    EXPECT_NO_THROW(run_pipeline(c, o));
    EXPECT_FALSE(fs::exists(c.out_dir / ".lock"));
}

TEST_F(PipelineTest, UntilStopsEarly) {
    const auto c = small_config("until");
    RunOptions o;
    o.until = Stage::Segment;
    const auto r = run_pipeline(c, o);
    EXPECT_EQ(r.events.size(), 8u);
    EXPECT_TRUE(fs::exists(c.out_dir / "S002" / "segment" / "windows.csv"));
    EXPECT_FALSE(fs::exists(c.out_dir / "S001" / "features"));
    EXPECT_FALSE(fs::exists(c.out_dir / "reports"));
    EXPECT_EQ(parse_stage("evaluate"), Stage::Evaluate);
    EXPECT_THROW(parse_stage("deploy"), std::invalid_argument);
}

TEST_F(PipelineTest, SweepWritesOneRowPerConfig) {
    const auto c = small_config("sweep");
    const std::vector<SweepConfig> configs = {{1.0, 75}, {0.5, 50}};
    const auto rep = run_sweep(c, 1, configs);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_TRUE(rep.rows[0].ok) << rep.rows[0].error;
    EXPECT_EQ(rep.rows[0].window_len, 160u);
    EXPECT_EQ(rep.rows[0].stride, 40u);
    EXPECT_TRUE(fs::exists(c.out_dir / "sweep" / "S001_sweep.csv"));
    EXPECT_TRUE(verify_manifest(c.out_dir).empty());
}

TEST_F(PipelineTest, ChecksAgainstReports) {
    const auto c = small_config("checks");
    run_pipeline(c);
    std::ofstream(c.out_dir / "checks.yaml") << "checks:\n"
                                                "  - {name: floor, file: reports/summary.json, key: succeeded, min: 2}\n"
                                                "  - {name: ceiling, file: reports/summary.json, key: mean_test_accuracy, max: -1}\n"
                                                "  - {name: nested, file: reports/summary.json, key: subjects.1.windows, min: 1}\n"
                                                "  - {name: missing, file: reports/summary.json, key: nope}\n";
    const auto res = run_checks(c.out_dir / "checks.yaml", c.out_dir);
    ASSERT_EQ(res.size(), 4u);
    EXPECT_TRUE(res[0].passed) << res[0].detail;
    EXPECT_FALSE(res[1].passed);
    EXPECT_TRUE(res[2].passed) << res[2].detail;
    EXPECT_FALSE(res[3].passed);
    fs::remove(c.out_dir / "checks.yaml");
}

TEST(Container, RoundTrip) {
    RunSignal s;
    s.subject = 7;
    s.run = 12;
    s.task = TaskClass::MotorImagery;
    s.fs = 160.0;
    s.channels = {"C3..", "Cz..", "C4.."};
    s.data = Eigen::MatrixXd::Random(3, 50);
    s.events = {{EventCode::T0, 0.0, 0.1}, {EventCode::T2, 0.1, 0.2}};
    const auto bytes = encode_signal(s);
    const auto back = decode_signal(bytes);
    EXPECT_EQ(back.subject, 7);
    EXPECT_EQ(back.run, 12);
    EXPECT_EQ(back.task, TaskClass::MotorImagery);
    EXPECT_EQ(back.channels, s.channels);
    EXPECT_EQ(back.data, s.data);
    EXPECT_EQ(back.events, s.events);
    EXPECT_EQ(encode_signal(back), bytes);
    auto cut = bytes;
    cut.resize(cut.size() - 8);
    EXPECT_THROW(decode_signal(cut), std::runtime_error);
}
