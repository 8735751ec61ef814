#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "support.hpp"

using namespace mhl;
using mhl::testing::TempDir;

namespace {

/// Small dataset spec for command-level tests.
RunConfig toy_run(const std::filesystem::path& data_dir) {
    RunConfig rc;
    rc.data.num_videos = 8;
    rc.data.t_min = 12;
    rc.data.t_max = 16;
    rc.data.segment_len_min = 2;
    rc.data.segment_len_max = 4;
    rc.data.dims = {12, 6, 10};
    rc.data.signal_dims = 4;
    rc.model.hidden = 8;
    rc.model.heads = 2;
    rc.train.epochs = 2;
    rc.train.batch_size = 4;
    rc.val_fraction = 0.25;
    rc.test_fraction = 0.25;
    rc.data_dir = data_dir.string();
    return rc;
}

cli::CommandOptions options(const RunConfig& rc, const std::filesystem::path& out, std::ostream& log) {
    cli::CommandOptions o;
    o.config = rc;
    o.out = out;
    o.log = &log;
    return o;
}

std::string slurp(const std::filesystem::path& p) { return read_file_text(p); }

std::size_t line_count(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST(RunConfig, EmptyTextGivesDefaults) {
    const auto rc = parse_run_config("# nothing\n\n");
    EXPECT_EQ(format_run_config(rc), format_run_config(RunConfig{}));
    EXPECT_EQ(rc.train.lr, 1e-4);
    EXPECT_EQ(rc.train.batch_size, 32u);
    EXPECT_EQ(rc.loss.lambda_smooth, 0.1);
    EXPECT_EQ(rc.loss.lambda_con, 0.2);
    EXPECT_EQ(rc.model.heads, 4u);
}

TEST(RunConfig, ParsesEveryKind) {
    const auto rc = parse_run_config(
        "model.heads = 2\n"
        "model.cma=false  # trailing comment\n"
        "model.fusion = dcm\n"
        "train.lr = 0.001\n"
        "data.carriers = v, at\n"
        "data.dims = 10,20,30\n"
        "text_mode = naive\n"
        "data_dir = /tmp/x\n");
    EXPECT_EQ(rc.model.heads, 2u);
    EXPECT_FALSE(rc.model.use_cma);
    EXPECT_EQ(rc.train.lr, 0.001);
    ASSERT_EQ(rc.data.carriers.size(), 2u);
    EXPECT_EQ(carrier_name(rc.data.carriers[1]), "at");
    EXPECT_EQ(rc.data.dims[2], 30u);
    EXPECT_EQ(rc.text_mode, TextMode::kNaive);
    EXPECT_EQ(rc.data_dir, "/tmp/x");
}

TEST(RunConfig, RejectsUnknownKeysWithLocation) {
    try {
        parse_run_config("train.lr = 1e-3\nmodel.layers = 3\n", "run.cfg");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("run.cfg:2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("model.layers"), std::string::npos) << msg;
    }
}

TEST(RunConfig, RejectsMalformedValues) {
    EXPECT_THROW(parse_run_config("train.epochs = ten\n"), ConfigError);
    EXPECT_THROW(parse_run_config("train.epochs = 10x\n"), ConfigError);
    EXPECT_THROW(parse_run_config("model.cma = maybe\n"), ConfigError);
    EXPECT_THROW(parse_run_config("model.fusion = mid\n"), ConfigError);
    EXPECT_THROW(parse_run_config("data.carriers = vx\n"), ConfigError);
    EXPECT_THROW(parse_run_config("data.dims = 1,2\n"), ConfigError);
    EXPECT_THROW(parse_run_config("text_mode = words\n"), ConfigError);
    EXPECT_THROW(parse_run_config("no equals sign\n"), ConfigError);
    EXPECT_THROW(parse_run_config("train.lr = 1\ntrain.lr = 2\n"), ConfigError);
}

TEST(RunConfig, FormatRoundTrips) {
    RunConfig rc;
    rc.train.lr = 3.3e-5;
    rc.loss.tau = 0.07;
    rc.model.use_dms = false;
    rc.data.carriers = {parse_carrier("vt")};
    rc.set_seed(19);
    const auto back = parse_run_config(format_run_config(rc));
    EXPECT_EQ(format_run_config(back), format_run_config(rc));
    EXPECT_EQ(back.train.lr, 3.3e-5);
    EXPECT_EQ(back.model.seed, 19u);
    EXPECT_EQ(back.split_seed, 19u);
}

TEST(RunConfig, EveryKeyIsDocumented) {
    const std::string doc = describe_config_keys();
    EXPECT_EQ(line_count(doc), config_keys().size());
    for (const auto& k : config_keys()) {
        EXPECT_FALSE(k.help.empty()) << k.name;
        EXPECT_TRUE(k.source == "method" || k.source == "implementation") << k.name;
    }
}

TEST(RunConfig, ValidateCatchesBadSplit) {
    RunConfig rc;
    rc.val_fraction = 0.6;
    rc.test_fraction = 0.4;
    EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(GenData, WritesReadableDataset) {
    TempDir dir("cli_gen");
    std::ostringstream log;
    auto rc = toy_run(dir.path() / "data");
    const auto sum = cli::cmd_gen_data(options(rc, dir.path() / "data", log));
    EXPECT_EQ(sum.videos, 8u);
    EXPECT_EQ(sum.positives, 4u);
    const auto data = load_dataset(dir.path() / "data");
    ASSERT_EQ(data.size(), 8u);
    for (const auto& s : data) EXPECT_NO_THROW(s.validate());
    EXPECT_NE(log.str().find("8 videos"), std::string::npos);
}

TEST(GenData, AllPositiveFraction) {
    TempDir dir("cli_gen_pos");
    std::ostringstream log;
    auto rc = toy_run(dir.path());
    rc.data.positive_fraction = 1.0;
    cli::cmd_gen_data(options(rc, dir.path(), log));
    for (const auto& e : read_manifest(dir.path())) EXPECT_EQ(e.label, 1);
}

TEST(GenData, SeedChangesPayloadNotSchema) {
    TempDir dir("cli_gen_seed");
    std::ostringstream log;
    auto rc = toy_run(dir.path());
    cli::cmd_gen_data(options(rc, dir.path() / "a", log));
    rc.data.seed = 1;
    cli::cmd_gen_data(options(rc, dir.path() / "b", log));
    const auto ma = read_manifest(dir.path() / "a");
    const auto mb = read_manifest(dir.path() / "b");
    ASSERT_EQ(ma.size(), mb.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
        EXPECT_EQ(to_json(ma[i]).size(), to_json(mb[i]).size());
        EXPECT_EQ(ma[i].id, mb[i].id);
    }
    EXPECT_NE(read_file_bytes(dir.path() / "a" / ma[0].video_path), read_file_bytes(dir.path() / "b" / mb[0].video_path));
}

class CommandTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = std::make_unique<TempDir>("cli_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        rc_ = toy_run(dir_->path() / "data");
        cli::cmd_gen_data(options(rc_, dir_->path() / "data", log_));
    }
    std::filesystem::path root() const { return dir_->path(); }

    std::unique_ptr<TempDir> dir_;
    RunConfig rc_;
    std::ostringstream log_;
};

TEST_F(CommandTest, TrainWritesTwoEpochLogAndCheckpoints) {
    const auto out = cli::cmd_train(options(rc_, root() / "run", log_));
    ASSERT_EQ(out.size(), 1u);
    const std::string csv = slurp(root() / "run" / "train_log.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), train_log_header());
    // 4 training videos, batch 4: one step per epoch.
    EXPECT_EQ(line_count(csv), 1u + 2u);
    EXPECT_EQ(out[0].result.state.history.back().epoch, 2u);
    EXPECT_TRUE(std::filesystem::exists(root() / "run" / "checkpoints" / "best" / "params.json"));
    EXPECT_TRUE(std::filesystem::exists(root() / "run" / "checkpoints" / "last" / "params.json"));
    EXPECT_TRUE(std::filesystem::exists(root() / "run" / "report.json"));
    const auto again = parse_run_config(slurp(root() / "run" / "run_config.txt"));
    EXPECT_EQ(format_run_config(again), format_run_config(rc_));
}

TEST_F(CommandTest, TrainIsIdempotent) {
    cli::cmd_train(options(rc_, root() / "a", log_));
    cli::cmd_train(options(rc_, root() / "b", log_));
    for (const char* f : {"train_log.csv", "report.json", "report.csv", "run_config.txt"})
        EXPECT_EQ(slurp(root() / "a" / f), slurp(root() / "b" / f)) << f;
    EXPECT_EQ(read_file_bytes(root() / "a" / "checkpoints" / "last" / "head.fused.W.mhlf"),
              read_file_bytes(root() / "b" / "checkpoints" / "last" / "head.fused.W.mhlf"));
}

TEST_F(CommandTest, KDivSweepWritesOneReportPerValue) {
    auto o = options(rc_, root() / "sweep", log_);
    o.k_div_sweep = {1, 2, 3, 5};
    rc_.train.epochs = 1;
    o.config.train.epochs = 1;
    const auto out = cli::cmd_train(o);
    EXPECT_EQ(out.size(), 4u);
    for (int k : {1, 2, 3, 5}) {
        const auto d = root() / "sweep" / ("k_div_" + std::to_string(k));
        EXPECT_TRUE(std::filesystem::exists(d / "report.json")) << d;
        EXPECT_NE(slurp(d / "run_config.txt").find("loss.k_div = " + std::to_string(k)), std::string::npos);
    }
    EXPECT_EQ(line_count(slurp(root() / "sweep" / "k_div_sweep.csv")), 5u);
}

TEST_F(CommandTest, EvalReportsAllSplitsInUnitRange) {
    const auto reports = cli::cmd_eval(options(rc_, root() / "eval", log_));
    ASSERT_EQ(reports.size(), 3u);
    const auto j = nlohmann::json::parse(slurp(root() / "eval" / "report.json"));
    for (const char* split : {"train", "val", "test"}) {
        ASSERT_TRUE(j.contains(split)) << split;
        for (const char* k : {"mAP", "pr_auc", "positive_fraction"}) {
            const double v = j[split][k].get<double>();
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    EXPECT_EQ(line_count(slurp(root() / "eval" / "report.csv")), 4u);
}

TEST_F(CommandTest, EvalUsesCheckpoint) {
    cli::cmd_train(options(rc_, root() / "run", log_));
    auto o = options(rc_, root() / "eval", log_);
    o.checkpoint = root() / "run" / "checkpoints" / "best";
    cli::cmd_eval(o);
    // Best parameters are what train reported.
    EXPECT_EQ(slurp(root() / "eval" / "report.json"), slurp(root() / "run" / "report.json"));
    o.checkpoint = root() / "missing";
    EXPECT_THROW(cli::cmd_eval(o), IoError);
}

TEST_F(CommandTest, PredictWritesCurveFiles) {
    const auto entries = read_manifest(rc_.data_dir);
    auto o = options(rc_, root() / "pred", log_);
    o.sample = entries[0].id;
    const auto tr = cli::cmd_predict(o);
    const std::string csv = slurp(root() / "pred" / "curve.csv");
    EXPECT_EQ(line_count(csv), entries[0].frames + 1);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,y,P_v,P_a,P_l,alpha_v,alpha_a,alpha_l");
    EXPECT_EQ(tr.frames, entries[0].frames);
    const std::string svg = slurp(root() / "pred" / "curve.svg");
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("href"), std::string::npos);
    EXPECT_EQ(svg.find("url("), std::string::npos);
    o.sample = "no_such_video";
    EXPECT_THROW(cli::cmd_predict(o), IndexError);
}

TEST(CurveSvg, BalancedTagsAndShading) {
    PredictionTrace tr;
    tr.frames = 4;
    tr.fused = {0.1, 0.9, 0.7, 0.2};
    for (auto& b : tr.branch) b.assign(4, 0.5);
    for (auto& g : tr.gate) g.assign(4, 1.0);
    const auto svg = cli::curve_svg(tr, "a<b");
    std::size_t opens = 0, selfclose = 0, closes = 0;
    for (std::size_t i = 0; i + 1 < svg.size(); ++i) {
        if (svg[i] == '<' && svg[i + 1] == '/') ++closes;
        else if (svg[i] == '<') ++opens;
        if (svg[i] == '/' && svg[i + 1] == '>') ++selfclose;
    }
    EXPECT_EQ(opens, closes + selfclose);
    EXPECT_NE(svg.find("a&lt;b"), std::string::npos);
    // Two frames above 0.5, each shaded once.
    std::size_t shaded = 0;
    for (auto p = svg.find("#f4c7c3"); p != std::string::npos; p = svg.find("#f4c7c3", p + 1)) ++shaded;
    EXPECT_EQ(shaded, 2u);
}

TEST_F(CommandTest, AblateWritesOneRowPerGridEntry) {
    rc_.train.epochs = 1;
    cli::cmd_ablate(options(rc_, root() / "abl", log_));
    const std::string csv = slurp(root() / "abl" / "ablation.csv");
    EXPECT_EQ(line_count(csv), 1 + ablation_grid(rc_.model).size());
    for (const auto& row : ablation_grid(rc_.model)) EXPECT_NE(csv.find(row.name + ","), std::string::npos);
}
