#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhl/cli/run_config.hpp"
#include "mhl/mhl.hpp"

namespace mhl::cli {

namespace fs = std::filesystem;

/// Options shared by the subcommands on top of the RunConfig.
struct CommandOptions {
    RunConfig config;
    fs::path out = "out";
    std::optional<fs::path> checkpoint;
    std::string sample;
    std::vector<std::size_t> k_div_sweep;
    std::ostream* log = &std::cout;
};

struct LoadedData {
    std::vector<VideoSample> all, train, val, test;
};

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

/// Input widths come from the data, not from the config file.
inline ModelConfig model_for(const RunConfig& rc, const std::vector<VideoSample>& data) {
    ModelConfig m = rc.model;
    if (!data.empty())
        for (std::size_t i = 0; i < 3; ++i) m.input_dims[i] = data.front().features[i].values.cols();
    m.validate();
    return m;
}

inline LoadedData load_split(const RunConfig& rc) {
    LoadedData d;
    d.all = load_dataset(rc.data_dir, rc.text_mode);
    if (d.all.empty()) throw ArgumentError("dataset '" + rc.data_dir + "' is empty");
    const auto s = split_indices(d.all.size(), rc.val_fraction, rc.test_fraction, rc.split_seed);
    d.train = select(d.all, s.train);
    d.val = select(d.all, s.val);
    d.test = select(d.all, s.test);
    return d;
}

struct GenDataSummary {
    std::size_t videos = 0, positives = 0, frames = 0, positive_frames = 0;
};

inline GenDataSummary cmd_gen_data(const CommandOptions& o) {
    const auto& rc = o.config;
    rc.data.validate();
    std::vector<RawSample> raws;
    GenDataSummary sum;
    for (auto& v : generate_synthetic_raw(rc.data)) {
        sum.videos += 1;
        sum.positives += v.raw.label == 1;
        sum.frames += v.raw.frames();
        for (auto b : *v.raw.frame_truth) sum.positive_frames += b;
        raws.push_back(std::move(v.raw));
    }
    ensure_dir(o.out);
    write_dataset(o.out, raws);
    *o.log << "wrote " << sum.videos << " videos (" << sum.positives << " positive, " << sum.frames << " frames, "
           << sum.positive_frames << " positive frames) to " << o.out.string() << "\n";
    return sum;
}

inline void write_reports(const fs::path& dir, const std::vector<std::pair<std::string, EvalReport>>& reports) {
    nlohmann::json j = nlohmann::json::object();
    std::string csv = "split," + EvalReport::csv_header() + "\n";
    for (const auto& [name, r] : reports) {
        j[name] = r.to_json();
        csv += name + "," + r.csv_row() + "\n";
    }
    write_file_text(dir / "report.json", j.dump(2) + "\n");
    write_file_text(dir / "report.csv", csv);
}

inline std::vector<std::pair<std::string, EvalReport>> evaluate_splits(const LoadedData& d, const ModelParams<float>& p,
                                                                      const ModelConfig& cfg) {
    std::vector<std::pair<std::string, EvalReport>> out;
    if (!d.train.empty()) out.emplace_back("train", evaluate(d.train, p, cfg));
    if (!d.val.empty()) out.emplace_back("val", evaluate(d.val, p, cfg));
    if (!d.test.empty()) out.emplace_back("test", evaluate(d.test, p, cfg));
    return out;
}

struct TrainOutcome {
    TrainResult result;
    ModelConfig model;
    std::vector<std::pair<std::string, EvalReport>> reports;
};

/// Trains one configuration into `dir`: checkpoints, train_log.csv,
/// resolved config and split reports of the best parameters.
inline TrainOutcome train_into(const fs::path& dir, const RunConfig& rc, const LoadedData& d, std::ostream& log) {
    ensure_dir(dir);
    TrainOutcome out;
    out.model = model_for(rc, d.all);
    TrainConfig tc = rc.train;
    tc.checkpoint_dir = (dir / "checkpoints").string();
    write_file_text(dir / "run_config.txt", format_run_config(rc));
    const Validator v = d.val.empty() ? Validator{} : map_validator(d.val, out.model);
    out.result = train(weak_view(d.train), out.model, rc.loss, tc, v);
    write_file_text(dir / "train_log.csv", format_train_log(out.result.state.history));
    out.reports = evaluate_splits(d, out.result.best_params, out.model);
    write_reports(dir, out.reports);
    for (const auto& [name, r] : out.reports) {
        log << dir.string() << " " << name << ": mAP " << r.mAP << " roc_auc "
            << (r.roc_auc ? std::to_string(*r.roc_auc) : std::string("n/a")) << "\n";
    }
    return out;
}

inline std::vector<TrainOutcome> cmd_train(const CommandOptions& o) {
    o.config.validate();
    const auto d = load_split(o.config);
    std::vector<TrainOutcome> out;
    if (o.k_div_sweep.empty()) {
        out.push_back(train_into(o.out, o.config, d, *o.log));
        return out;
    }
    ensure_dir(o.out);
    std::string csv = "k_div," + EvalReport::csv_header() + "\n";
    for (auto k : o.k_div_sweep) {
        RunConfig rc = o.config;
        rc.loss.k_div = k;
        out.push_back(train_into(o.out / ("k_div_" + std::to_string(k)), rc, d, *o.log));
        for (const auto& [name, r] : out.back().reports)
            if (name == "test") csv += std::to_string(k) + "," + r.csv_row() + "\n";
    }
    write_file_text(o.out / "k_div_sweep.csv", csv);
    return out;
}

inline ModelParams<float> params_for(const CommandOptions& o, const ModelConfig& cfg) {
    if (o.checkpoint) return load_checkpoint(*o.checkpoint, cfg);
    return ModelParams<float>::initialize(cfg);
}

inline std::vector<std::pair<std::string, EvalReport>> cmd_eval(const CommandOptions& o) {
    o.config.validate();
    const auto d = load_split(o.config);
    const auto cfg = model_for(o.config, d.all);
    const auto reports = evaluate_splits(d, params_for(o, cfg), cfg);
    ensure_dir(o.out);
    write_reports(o.out, reports);
    for (const auto& [name, r] : reports) *o.log << name << ": " << r.to_json().dump() << "\n";
    return reports;
}

inline std::string curve_csv(const PredictionTrace& tr) {
    std::string out = "t,y,P_v,P_a,P_l,alpha_v,alpha_a,alpha_l\n";
    char buf[64];
    for (std::size_t t = 0; t < tr.frames; ++t) {
        out += std::to_string(t);
        for (double v : {tr.fused[t], tr.branch[0][t], tr.branch[1][t], tr.branch[2][t], tr.gate[0][t], tr.gate[1][t],
                         tr.gate[2][t]}) {
            std::snprintf(buf, sizeof buf, ",%.9g", v);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

/// Probability polyline over time with frames above 0.5 shaded.
inline std::string curve_svg(const PredictionTrace& tr, const std::string& title) {
    const double w = 800, h = 240, pad = 30;
    const double pw = w - 2 * pad, ph = h - 2 * pad;
    const double step = tr.frames > 1 ? pw / static_cast<double>(tr.frames - 1) : 0.0;
    auto x = [&](std::size_t t) { return pad + step * static_cast<double>(t); };
    auto y = [&](double p) { return pad + ph * (1.0 - p); };
    char buf[160];
    std::string s;
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" viewBox=\"0 0 %g %g\">\n", w, h,
                  w, h);
    s += buf;
    std::string safe;
    for (char c : title) {
        if (c == '<') safe += "&lt;";
        else if (c == '>') safe += "&gt;";
        else if (c == '&') safe += "&amp;";
        else safe += c;
    }
    s += "<title>" + safe + "</title>\n";
    s += "<rect x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const double band = step > 0 ? step : pw;
    for (std::size_t t = 0; t < tr.frames; ++t) {
        if (tr.fused[t] <= 0.5) continue;
        std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"#f4c7c3\"/>\n",
                      x(t) - band / 2, pad, band, ph);
        s += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n", pad,
                  y(0.5), pad + pw, y(0.5));
    s += buf;
    std::snprintf(buf, sizeof buf, "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"none\" stroke=\"black\"/>\n",
                  pad, pad, pw, ph);
    s += buf;
    s += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < tr.frames; ++t) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", t ? " " : "", x(t), y(tr.fused[t]));
        s += buf;
    }
    s += "\"/>\n</svg>\n";
    return s;
}

inline PredictionTrace cmd_predict(const CommandOptions& o) {
    o.config.validate();
    if (o.sample.empty()) throw ArgumentError("predict needs --sample ID");
    const auto entries = read_manifest(o.config.data_dir);
    const ManifestEntry* hit = nullptr;
    for (const auto& e : entries)
        if (e.id == o.sample) hit = &e;
    if (!hit) throw IndexError("no sample '" + o.sample + "' in dataset '" + o.config.data_dir + "'");
    const auto sample = read_sample(o.config.data_dir, *hit, o.config.text_mode);
    const auto cfg = model_for(o.config, {sample});
    const auto trace = predict(sample, params_for(o, cfg), cfg);
    ensure_dir(o.out);
    write_file_text(o.out / "curve.csv", curve_csv(trace));
    write_file_text(o.out / "curve.svg", curve_svg(trace, o.sample));
    *o.log << "wrote " << trace.frames << " frames to " << (o.out / "curve.csv").string() << "\n";
    return trace;
}

/// Trains every row of the module ablation grid and writes ablation.csv.
inline std::vector<std::pair<std::string, EvalReport>> cmd_ablate(const CommandOptions& o) {
    o.config.validate();
    const auto d = load_split(o.config);
    ensure_dir(o.out);
    std::vector<std::pair<std::string, EvalReport>> out;
    std::string csv = "row,fusion,encoder,cma,dms,contrast,mamil," + EvalReport::csv_header() + "\n";
    for (const auto& row : ablation_grid(o.config.model)) {
        RunConfig rc = o.config;
        rc.model = row.config;
        const auto r = train_into(o.out / row.name, rc, d, *o.log);
        EvalReport test;
        for (const auto& [name, rep] : r.reports)
            if (name == "test") test = rep;
        const auto& c = row.config;
        csv += row.name + "," + std::string(to_string(c.fusion)) + "," + std::to_string(c.use_encoder) + "," +
               std::to_string(c.use_cma) + "," + std::to_string(c.use_dms) + "," + std::to_string(c.use_contrast) + "," +
               std::to_string(c.use_mamil) + "," + test.csv_row() + "\n";
        out.emplace_back(row.name, test);
    }
    write_file_text(o.out / "ablation.csv", csv);
    return out;
}

}  // namespace mhl::cli
