// Command-line surface for the date-spotting pipeline. One binary with
// subcommands; stages communicate through the documented file formats
// (manifest.jsonl, .dsfeat feature dumps, .dspot models, .jsonl hits,
// .csv reports) so each stage can be rerun independently.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <thread>

#include "datespot/pipeline.hpp"

using namespace datespot;
namespace fs = std::filesystem;

namespace {

// Deterministic parallel map over an index range: results land by index,
// so the output is identical regardless of the job count.
void parallel_for(size_t n, int jobs, const std::function<void(size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));
    for (int j = 0; j < jobs; ++j)
        pool.emplace_back([&, j] {
            try {
                for (size_t i = next++; i < n; i = next++) fn(i);
            } catch (...) {
                errors[size_t(j)] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

FeatureKind parse_feature(const std::string& s) {
    if (s == "binary") return FeatureKind::Binary;
    if (s == "gray") return FeatureKind::Gray;
    if (s == "combined") return FeatureKind::Combined;
    if (s == "marti-bunke") return FeatureKind::MartiBunke;
    throw CLI::ValidationError("--feature", "unknown feature kind '" + s + "'");
}

FeatureTag tag_for(FeatureKind k) {
    switch (k) {
        case FeatureKind::Binary: return FeatureTag::Binary;
        case FeatureKind::Gray: return FeatureTag::Gray;
        case FeatureKind::Combined: return FeatureTag::Combined;
        case FeatureKind::MartiBunke: return FeatureTag::Combined;
    }
    return FeatureTag::Combined;
}

ImageU8 load_rgb(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("image file missing: " + path);
    return png::load(path);
}

std::vector<FeatureRecord> featurize_manifest(const CorpusManifest& manifest, FeatureKind kind,
                                              double gamma, double noise, std::uint64_t noise_seed,
                                              int jobs) {
    std::vector<FeatureRecord> records(manifest.samples.size());
    parallel_for(manifest.samples.size(), jobs, [&](size_t i) {
        const auto& s = manifest.samples[i];
        ImageU8 img = load_rgb(manifest.image_file(s).string());
        if (noise > 0.0) img = add_gaussian_noise(img, NoiseSpec{noise, noise_seed + i});
        records[i].id = s.id;
        records[i].seq = extract_line_features(img, kind, {}, {}, gamma);
        records[i].seq.tag = tag_for(kind);
    });
    return records;
}

std::map<std::string, FeatureSequence> features_by_id(std::vector<FeatureRecord> records) {
    std::map<std::string, FeatureSequence> out;
    for (auto& r : records) out[r.id] = std::move(r.seq);
    return out;
}

ModelContainer require_model(const std::string& path) {
    if (!fs::exists(path)) throw std::runtime_error("model file missing: " + path);
    return load_model(path);
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw std::runtime_error("empty integer list: '" + s + "'");
    return out;
}

std::vector<int> parse_int_range(const std::string& s) {
    auto dots = s.find("..");
    if (dots == std::string::npos) return parse_int_list(s);
    int lo = std::stoi(s.substr(0, dots));
    int hi = std::stoi(s.substr(dots + 2));
    if (hi < lo) throw std::runtime_error("bad range: '" + s + "'");
    std::vector<int> out;
    for (int v = lo; v <= hi; ++v) out.push_back(v);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"datespot: date-field spotting in rendered text lines"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI config file");
    std::string save_config;
    app.add_option("--save-config", save_config,
                   "Write the effective configuration to this file and continue");
    int jobs = int(std::thread::hardware_concurrency());
    app.add_option("--jobs", jobs, "Worker threads for per-line stages")->capture_default_str();

    std::string default_model_dir;
    if (const char* env = std::getenv("DATESPOT_MODEL_DIR")) default_model_dir = env;
    auto resolve_model = [&](const std::string& path) {
        if (fs::exists(path) || default_model_dir.empty() || path.find('/') != std::string::npos)
            return path;
        return (fs::path(default_model_dir) / path).string();
    };

    // --- synth ---------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "Generate a synthetic line corpus");
    std::string synth_out = "corpus";
    SynthConfig synth_cfg;
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    synth->add_option("--lines", synth_cfg.lines)->capture_default_str();
    synth->add_option("--date-frac", synth_cfg.date_fraction)->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
    synth->add_option("--train-frac", synth_cfg.train_fraction)->capture_default_str();
    synth->add_option("--val-frac", synth_cfg.validation_fraction)->capture_default_str();
    synth->add_option("--scales", synth_cfg.scale_jitter,
                      "Per-line glyph scales to sample from (empty = fixed scale)");
    synth->add_option("--glyph-jitter", synth_cfg.style.glyph_jitter,
                      "Per-glyph degradation strength in [0,1]")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    // --- enhance / binarize ---------------------------------------------
    auto* enhance = app.add_subcommand("enhance", "Dump the fused gray image for one line PNG");
    std::string enh_image, enh_out = "enhanced.png";
    enhance->add_option("--image", enh_image)->required();
    enhance->add_option("--out", enh_out)->capture_default_str();

    auto* binarize = app.add_subcommand("binarize", "Dump the binarized image for one line PNG");
    std::string bin_image, bin_out = "binary.png";
    double bin_gamma = 0.05;
    binarize->add_option("--image", bin_image)->required();
    binarize->add_option("--out", bin_out)->capture_default_str();
    binarize->add_option("--gamma", bin_gamma)->capture_default_str();

    // --- featurize -------------------------------------------------------
    auto* featurize = app.add_subcommand("featurize", "Extract frame features for a corpus");
    std::string feat_corpus, feat_out = "features.dsfeat", feat_kind = "combined";
    double feat_gamma = 0.05, feat_noise = 0.0;
    std::uint64_t feat_noise_seed = 99;
    featurize->add_option("--corpus", feat_corpus, "manifest.jsonl path")->required();
    featurize->add_option("--out", feat_out)->capture_default_str();
    featurize->add_option("--feature", feat_kind, "binary|gray|combined|marti-bunke")
        ->capture_default_str();
    featurize->add_option("--gamma", feat_gamma)->capture_default_str();
    featurize->add_option("--noise", feat_noise)->capture_default_str();
    featurize->add_option("--noise-seed", feat_noise_seed)->capture_default_str();

    // --- train -----------------------------------------------------------
    auto* train = app.add_subcommand("train", "Embedded HMM training");
    std::string train_corpus, train_features, train_out = "model.dspot", train_mode = "viterbi";
    TrainConfig train_cfg;
    bool train_shape = false;
    std::string train_feat_kind = "combined";
    train->add_option("--corpus", train_corpus)->required();
    train->add_option("--features", train_features, ".dsfeat file from featurize")->required();
    train->add_option("--out", train_out)->capture_default_str();
    train->add_option("--states", train_cfg.states_letters, "J for letters/digits")
        ->capture_default_str();
    train->add_option("--states-punct", train_cfg.states_punct)->capture_default_str();
    train->add_option("--gaussians", train_cfg.max_gaussians, "final mixtures per state (G)")
        ->capture_default_str();
    train->add_option("--iterations", train_cfg.max_iterations)->capture_default_str();
    train->add_option("--mode", train_mode, "viterbi|forward-backward")->capture_default_str();
    train->add_flag("--shapecode", train_shape, "train shape-coded character models");
    train->add_option("--feature", train_feat_kind)->capture_default_str();

    // --- tandem-train ------------------------------------------------------
    auto* ttrain = app.add_subcommand("tandem-train", "MLP + PCA tandem stage and HMM retrain");
    std::string tt_corpus, tt_features, tt_model, tt_out = "tandem.dspot",
                tt_out_features = "tandem.dsfeat";
    MlpConfig tt_mlp;
    int tt_pca = 40;
    ttrain->add_option("--corpus", tt_corpus)->required();
    ttrain->add_option("--features", tt_features, "base features (.dsfeat)")->required();
    ttrain->add_option("--model", tt_model, "base model for forced alignment")->required();
    ttrain->add_option("--out", tt_out)->capture_default_str();
    ttrain->add_option("--out-features", tt_out_features, "transformed features for spotting")
        ->capture_default_str();
    ttrain->add_option("--hidden", tt_mlp.hidden)->capture_default_str();
    ttrain->add_option("--epochs", tt_mlp.max_epochs)->capture_default_str();
    ttrain->add_option("--learning-rate", tt_mlp.learning_rate)->capture_default_str();
    ttrain->add_option("--pca", tt_pca)->capture_default_str();
    ttrain->add_option("--seed", tt_mlp.seed)->capture_default_str();
    TrainConfig tt_retrain;
    tt_retrain.max_gaussians = 2;
    tt_retrain.max_iterations = 4;
    ttrain->add_option("--gaussians", tt_retrain.max_gaussians, "mixtures for the retrained HMMs")
        ->capture_default_str();
    ttrain->add_option("--iterations", tt_retrain.max_iterations)->capture_default_str();

    // --- spot ------------------------------------------------------------
    auto* spot = app.add_subcommand("spot", "Scan a corpus for date fields");
    std::string sp_corpus, sp_features, sp_model, sp_out = "hits.jsonl", sp_partition = "test";
    double sp_threshold = 0.0;
    bool sp_local = false, sp_range = false;
    spot->add_option("--corpus", sp_corpus)->required();
    spot->add_option("--features", sp_features)->required();
    spot->add_option("--model", sp_model)->required();
    spot->add_option("--out", sp_out)->capture_default_str();
    spot->add_option("--threshold", sp_threshold)->capture_default_str();
    spot->add_option("--partition", sp_partition, "train|validation|test|all")
        ->capture_default_str();
    spot->add_flag("--local", sp_local, "defer acceptance to the per-line-optimal evaluator");
    spot->add_flag("--range-filter", sp_range, "drop calendar-invalid decodings");

    // --- eval ------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "Score hits against manifest ground truth");
    std::string ev_corpus, ev_hits, ev_report = "report.csv", ev_curve, ev_partition = "test";
    double ev_threshold = 0.0;
    eval->add_option("--corpus", ev_corpus)->required();
    eval->add_option("--hits", ev_hits)->required();
    eval->add_option("--out", ev_report)->capture_default_str();
    eval->add_option("--curve", ev_curve, "also write the global PR curve CSV");
    eval->add_option("--threshold", ev_threshold)->capture_default_str();
    eval->add_option("--partition", ev_partition)->capture_default_str();

    // --- sweep -----------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "Grid over mixture sizes and state counts");
    std::string sw_corpus, sw_out = "sweep.csv", sw_feature = "combined";
    std::string sw_gaussians = "1,2,4", sw_states = "2..4";
    bool sw_shape = false, sw_tandem = false;
    double sw_noise = 0.0;
    sweep->add_option("--corpus", sw_corpus)->required();
    sweep->add_option("--out", sw_out)->capture_default_str();
    sweep->add_option("--feature", sw_feature)->capture_default_str();
    sweep->add_option("--gaussians", sw_gaussians, "comma list, e.g. 1,2,4,8")
        ->capture_default_str();
    sweep->add_option("--states", sw_states, "comma list or lo..hi range")->capture_default_str();
    sweep->add_option("--noise", sw_noise)->capture_default_str();
    sweep->add_flag("--shapecode", sw_shape);
    sweep->add_flag("--tandem", sw_tandem);

    // --- bench -----------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "Per-line spotting wall time");
    std::string bm_corpus, bm_features, bm_model;
    bench->add_option("--corpus", bm_corpus)->required();
    bench->add_option("--features", bm_features)->required();
    bench->add_option("--model", bm_model)->required();

    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();
    CLI11_PARSE(app, argc, argv);
    if (!save_config.empty()) {
        std::ofstream os(save_config);
        os << app.config_to_str(true, true);
    }

    try {
        if (*synth) {
            CorpusManifest m = synthesize_corpus(synth_cfg, synth_out);
            size_t dated = 0;
            for (const auto& s : m.samples) dated += s.date_spans.empty() ? 0 : 1;
            std::cout << "wrote " << m.samples.size() << " lines (" << dated
                      << " date-bearing) to " << synth_out << std::endl;
        } else if (*enhance) {
            auto [smooths, fused] = enhance_line(load_rgb(enh_image));
            png::save(enh_out, plane_to_u8(fused.plane));
            std::cout << "wrote " << enh_out << std::endl;
        } else if (*binarize) {
            auto [smooths, fused] = enhance_line(load_rgb(bin_image));
            BinaryImage bin = threshold_binary(text_posterior(smooths), bin_gamma);
            png::save(bin_out, plane_to_u8(bin.plane));
            std::cout << "wrote " << bin_out << std::endl;
        } else if (*featurize) {
            CorpusManifest m = load_manifest(feat_corpus);
            auto records = featurize_manifest(m, parse_feature(feat_kind), feat_gamma, feat_noise,
                                              feat_noise_seed, jobs);
            save_features(records, feat_out);
            std::cout << "wrote " << records.size() << " feature sequences to " << feat_out
                      << std::endl;
        } else if (*train) {
            CorpusManifest m = load_manifest(train_corpus, false);
            auto feats = features_by_id(load_features(train_features));
            if (train_mode == "forward-backward")
                train_cfg.mode = TrainConfig::Mode::ForwardBackward;
            else if (train_mode != "viterbi")
                throw std::runtime_error("unknown training mode '" + train_mode + "'");
            Alphabet alphabet = train_shape ? shape_alphabet() : Alphabet::characters();
            TrainStats stats;
            ModelContainer mc;
            mc.models = train_corpus_models(m, feats, alphabet, train_shape, train_cfg, &stats);
            mc.shape_coded = train_shape;
            mc.feature_tag = tag_for(parse_feature(train_feat_kind));
            save_model(mc, train_out);
            for (const auto& w : stats.warnings) std::cerr << "warning: " << w << std::endl;
            std::cout << "trained " << mc.models.size() << " character models -> " << train_out
                      << std::endl;
        } else if (*ttrain) {
            CorpusManifest m = load_manifest(tt_corpus, false);
            auto feats = features_by_id(load_features(tt_features));
            ModelContainer base = require_model(resolve_model(tt_model));
            if (base.feature_tag != FeatureTag::Combined)
                throw std::runtime_error(
                    "tandem training requires a model trained on combined features");
            // Keep the retrained topology aligned with the base model's.
            if (auto it = base.models.find("a"); it != base.models.end())
                tt_retrain.states_letters = it->second.num_states;
            if (auto it = base.models.find("/"); it != base.models.end())
                tt_retrain.states_punct = it->second.num_states;
            TandemArtifacts art =
                fit_tandem(m, feats, base.models,
                           base.shape_coded ? shape_alphabet() : Alphabet::characters(),
                           base.shape_coded, tt_mlp, tt_pca, tt_retrain);
            ModelContainer out;
            out.models = art.models;
            out.shape_coded = base.shape_coded;
            out.feature_tag = FeatureTag::Tandem;
            out.classifier = art.classifier;
            out.pca = art.pca;
            save_model(out, tt_out);
            std::vector<FeatureRecord> records;
            for (auto& [id, seq] : art.features) records.push_back({id, std::move(seq)});
            save_features(records, tt_out_features);
            std::cout << "wrote " << tt_out << " and " << tt_out_features << std::endl;
        } else if (*spot) {
            CorpusManifest m = load_manifest(sp_corpus, false);
            auto feats = features_by_id(load_features(sp_features));
            ModelContainer mc = require_model(resolve_model(sp_model));
            if (sp_range && mc.shape_coded)
                throw std::runtime_error(
                    "--range-filter needs plain-alphabet decodings; this model is shape-coded");
            Spotter spotter(mc.models, mc.shape_coded);
            SpotEvalConfig cfg;
            cfg.window = mc.window;
            cfg.policy.mode =
                sp_local ? ThresholdPolicy::Mode::Local : ThresholdPolicy::Mode::Global;
            cfg.policy.global_threshold = sp_threshold;
            cfg.range_filter = sp_range;
            if (sp_partition == "all")
                cfg.partition.reset();
            else
                cfg.partition = partition_from_name(sp_partition);
            std::vector<std::string> errors;
            auto hits = spot_corpus(m, feats, spotter, cfg, &errors);
            for (const auto& e : errors) std::cerr << "warning: " << e << std::endl;
            save_hits(hits, sp_out);
            std::cout << "wrote " << hits.size() << " hits to " << sp_out << std::endl;
        } else if (*eval) {
            CorpusManifest m = load_manifest(ev_corpus, false);
            auto hits = load_hits(ev_hits);
            SpotEvalConfig cfg;
            cfg.policy.global_threshold = ev_threshold;
            if (ev_partition == "all")
                cfg.partition.reset();
            else
                cfg.partition = partition_from_name(ev_partition);
            EvalReport rep = evaluate_corpus(m, hits, cfg);
            rep.feature = "(from hits)";
            save_report_csv({rep}, ev_report);
            if (!ev_curve.empty()) {
                std::vector<TruthSpan> truths;
                for (const auto& s : m.samples) {
                    if (cfg.partition && s.partition != *cfg.partition) continue;
                    for (const auto& sp : s.date_spans)
                        truths.push_back({s.id, sp.model, sp.start, sp.end});
                }
                save_pr_curve_csv(pr_curve_and_map(hits, truths).first, ev_curve);
            }
            std::cout << "P " << rep.operating.precision << "  R " << rep.operating.recall
                      << "  F " << rep.operating.f << "  MAP(global) " << rep.map_global
                      << "  MAP(local) " << rep.map_local << std::endl;
        } else if (*sweep) {
            CorpusManifest m = load_manifest(sw_corpus);
            std::vector<PipelineConfig> grid;
            for (int g : parse_int_list(sw_gaussians))
                for (int s : parse_int_range(sw_states)) {
                    PipelineConfig cell;
                    cell.feature = parse_feature(sw_feature);
                    cell.tandem = sw_tandem;
                    cell.shape_coded = sw_shape;
                    cell.noise = sw_noise;
                    cell.train.max_gaussians = g;
                    cell.train.states_letters = s;
                    cell.train.states_punct = std::min(s, 3);
                    grid.push_back(cell);
                }
            auto reports = run_matrix(m, grid);
            save_report_csv(reports, sw_out);
            std::cout << "wrote " << reports.size() << " grid cells to " << sw_out << std::endl;
        } else if (*bench) {
            CorpusManifest m = load_manifest(bm_corpus, false);
            auto feats = features_by_id(load_features(bm_features));
            ModelContainer mc = require_model(resolve_model(bm_model));
            Spotter spotter(mc.models, mc.shape_coded);
            std::vector<double> times;
            for (const auto& s : m.samples) {
                auto it = feats.find(s.id);
                if (it == feats.end()) continue;
                auto t0 = std::chrono::steady_clock::now();
                for (DateModel md : {DateModel::A, DateModel::B, DateModel::C})
                    (void)spotter.score_line(it->second, md);
                times.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            }
            if (times.empty()) throw std::runtime_error("no lines matched the feature file");
            std::sort(times.begin(), times.end());
            double sum = 0.0;
            for (double t : times) sum += t;
            std::cout << "lines " << times.size() << "  mean " << sum / double(times.size())
                      << " s  median " << times[times.size() / 2] << " s  max " << times.back()
                      << " s" << std::endl;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
