// Command-line front end: gen-data, train, eval, predict, ablate.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>

#include "commands.hpp"

namespace {

struct Flags {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string data;
    std::string checkpoint;
    std::string sample;
    std::vector<std::size_t> k_div;
    std::optional<std::size_t> heads;
    std::string text_mode;
    bool no_encoder = false, no_cma = false, no_dms = false, no_contrast = false, no_mamil = false;
};

void add_common(CLI::App* cmd, Flags& f, bool with_checkpoint, bool with_sample) {
    cmd->add_option("--config", f.config_path, "flat key = value config file");
    cmd->add_option("--set", f.overrides, "extra key=value override (repeatable)");
    cmd->add_option("--seed", f.seed, "seed applied to data, split, init, shuffle and loss");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--data", f.data, "dataset directory (overrides data_dir)");
    if (with_checkpoint) cmd->add_option("--checkpoint", f.checkpoint, "checkpoint directory");
    if (with_sample) cmd->add_option("--sample", f.sample, "sample id from the manifest");
    cmd->add_option("--k-div", f.k_div, "top-K divisor; several values run a sweep (train)");
    cmd->add_option("--heads", f.heads, "attention heads");
    cmd->add_option("--text-mode", f.text_mode, "sentence|naive|none")->check(CLI::IsMember({"sentence", "naive", "none"}));
    cmd->add_flag("--no-encoder", f.no_encoder, "disable temporal encoders");
    cmd->add_flag("--no-cma", f.no_cma, "disable cross-modal attention");
    cmd->add_flag("--no-dms", f.no_dms, "disable modality gates");
    cmd->add_flag("--no-contrast", f.no_contrast, "disable the contrastive term");
    cmd->add_flag("--no-mamil", f.no_mamil, "select on fused scores only");
}

mhl::cli::CommandOptions resolve(const Flags& f, const std::string& default_out) {
    mhl::cli::CommandOptions o;
    mhl::RunConfig rc = f.config_path.empty() ? mhl::RunConfig{} : mhl::load_run_config(f.config_path);
    std::string extra;
    for (const auto& kv : f.overrides) extra += kv + "\n";
    rc = mhl::parse_run_config(extra, "--set", rc);
    if (f.seed) rc.set_seed(*f.seed);
    if (!f.data.empty()) rc.data_dir = f.data;
    if (f.heads) rc.model.heads = *f.heads;
    if (!f.text_mode.empty()) rc.text_mode = mhl::parse_text_mode(f.text_mode);
    if (f.no_encoder) rc.model.use_encoder = false;
    if (f.no_cma) rc.model.use_cma = false;
    if (f.no_dms) rc.model.use_dms = false;
    if (f.no_contrast) rc.model.use_contrast = false;
    if (f.no_mamil) rc.model.use_mamil = false;
    if (f.k_div.size() == 1) rc.loss.k_div = f.k_div.front();
    if (f.k_div.size() > 1) o.k_div_sweep = f.k_div;
    o.config = rc;
    o.out = f.out.empty() ? default_out : f.out;
    if (!f.checkpoint.empty()) o.checkpoint = f.checkpoint;
    o.sample = f.sample;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly supervised multimodal temporal localisation"};
    app.require_subcommand(1);
    Flags f;
    auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset");
    auto* trn = app.add_subcommand("train", "train on a dataset, write checkpoints and train_log.csv");
    auto* evl = app.add_subcommand("eval", "score a checkpoint (or seed init) on train/val/test");
    auto* prd = app.add_subcommand("predict", "per-frame curve for one sample");
    auto* abl = app.add_subcommand("ablate", "train the module toggle grid, write ablation.csv");
    auto* keys = app.add_subcommand("config-keys", "print every config key with default and source");
    add_common(gen, f, false, false);
    add_common(trn, f, false, false);
    add_common(evl, f, true, false);
    add_common(prd, f, true, true);
    add_common(abl, f, false, false);
    CLI11_PARSE(app, argc, argv);

    try {
        if (keys->parsed()) {
            std::cout << mhl::describe_config_keys();
            return 0;
        }
        const auto t0 = std::chrono::steady_clock::now();
        if (gen->parsed()) mhl::cli::cmd_gen_data(resolve(f, "data"));
        if (trn->parsed()) mhl::cli::cmd_train(resolve(f, "run"));
        if (evl->parsed()) mhl::cli::cmd_eval(resolve(f, "eval"));
        if (prd->parsed()) mhl::cli::cmd_predict(resolve(f, "predict"));
        if (abl->parsed()) mhl::cli::cmd_ablate(resolve(f, "ablate"));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cerr << "done in " << secs << " s\n";
    } catch (const mhl::TrainingDiverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
