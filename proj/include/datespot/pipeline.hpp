#ifndef DATESPOT_PIPELINE_HPP
#define DATESPOT_PIPELINE_HPP

// End-to-end plumbing shared by the CLI and the integration tests:
// image -> enhanced gray / binary -> frame features -> HMM training ->
// optional tandem stage -> spotting -> evaluation.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datespot/binarize.hpp"
#include "datespot/corpus.hpp"
#include "datespot/enhance.hpp"
#include "datespot/eval.hpp"
#include "datespot/features.hpp"
#include "datespot/hmm.hpp"
#include "datespot/model_io.hpp"
#include "datespot/png_io.hpp"
#include "datespot/spotter.hpp"
#include "datespot/tandem.hpp"

namespace datespot {

enum class FeatureKind { Binary, Gray, Combined, MartiBunke };

inline std::string feature_kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Binary: return "binary";
        case FeatureKind::Gray: return "gray";
        case FeatureKind::Combined: return "combined";
        case FeatureKind::MartiBunke: return "marti-bunke";
    }
    return "?";
}

/// Full per-line front end: enhancement, binarization, feature extraction.
inline FeatureSequence extract_line_features(const ImageU8& img, FeatureKind kind,
                                             const SlidingWindowConfig& win = {},
                                             const PhogConfig& phog = {}, double gamma = 0.05) {
    auto [smooths, fused] = enhance_line(img);
    const Plane& gray = fused.plane;
    PosteriorMap post = text_posterior(smooths);
    BinaryImage bin = threshold_binary(post, gamma);
    const Plane& binf = bin.plane;

    switch (kind) {
        case FeatureKind::Gray: {
            FeatureSequence s = extract_sequence(gray, win, phog);
            s.tag = FeatureTag::Gray;
            return s;
        }
        case FeatureKind::Binary: {
            FeatureSequence s = extract_sequence(binf, win, phog);
            s.tag = FeatureTag::Binary;
            return s;
        }
        case FeatureKind::Combined: {
            FeatureSequence b = extract_sequence(binf, win, phog);
            FeatureSequence g = extract_sequence(gray, win, phog);
            FeatureSequence s = concat_features(b, g);
            s.tag = FeatureTag::Combined;
            return s;
        }
        case FeatureKind::MartiBunke:
            return marti_bunke_features(binf);
    }
    throw std::logic_error("unreachable");
}

/// Per-line features for a whole corpus, keyed by sample id. Noise (if any)
/// is applied to the RGB image before enhancement.
inline std::map<std::string, FeatureSequence> compute_corpus_features(
    const CorpusManifest& manifest, FeatureKind kind, const SlidingWindowConfig& win = {},
    const PhogConfig& phog = {}, double gamma = 0.05, double noise = 0.0,
    std::uint64_t noise_seed = 99) {
    std::map<std::string, FeatureSequence> out;
    std::uint64_t k = 0;
    for (const auto& s : manifest.samples) {
        ImageU8 img = png::load(manifest.image_file(s).string());
        if (noise > 0.0) img = add_gaussian_noise(img, NoiseSpec{noise, noise_seed + k});
        out[s.id] = extract_line_features(img, kind, win, phog, gamma);
        ++k;
    }
    return out;
}

inline std::vector<std::string> transcript_labels(const std::string& transcript,
                                                  const Alphabet& alphabet, bool shape_coded) {
    if (shape_coded) return recode(transcript);
    return alphabet.split_transcript(transcript);
}

/// Embedded training over the train partition of a corpus.
inline ModelSet train_corpus_models(const CorpusManifest& manifest,
                                    const std::map<std::string, FeatureSequence>& features,
                                    const Alphabet& alphabet, bool shape_coded,
                                    const TrainConfig& cfg, TrainStats* stats = nullptr) {
    std::vector<TrainingLine> lines;
    for (const auto& s : manifest.samples) {
        if (s.partition != Partition::Train) continue;
        auto it = features.find(s.id);
        if (it == features.end()) throw std::runtime_error("missing features for line " + s.id);
        lines.push_back({&it->second, transcript_labels(s.transcript, alphabet, shape_coded)});
    }
    return train_embedded(lines, alphabet, cfg, stats);
}

struct TandemArtifacts {
    FrameClassifier classifier;
    PcaTransform pca;
    std::map<std::string, FeatureSequence> features;  // transformed, all lines
    ModelSet models;                                  // retrained on tandem features
};

/// Tandem stage: forced alignment on the train partition labels the frames,
/// an MLP learns per-frame class posteriors, PCA compresses them, and the
/// HMMs are retrained on the concatenated features.
inline TandemArtifacts fit_tandem(const CorpusManifest& manifest,
                                  const std::map<std::string, FeatureSequence>& base_features,
                                  const ModelSet& base_models, const Alphabet& alphabet,
                                  bool shape_coded, const MlpConfig& mlp_cfg, int pca_dim,
                                  const TrainConfig& retrain_cfg) {
    std::vector<std::vector<float>> frames;
    std::vector<int> labels;
    for (const auto& s : manifest.samples) {
        if (s.partition != Partition::Train) continue;
        const FeatureSequence& seq = base_features.at(s.id);
        Alignment a = forced_align(base_models, transcript_labels(s.transcript, alphabet, shape_coded), seq);
        CompositeNetwork net =
            build_transcript_network(transcript_labels(s.transcript, alphabet, shape_coded), base_models);
        for (int t = 0; t < seq.count; ++t) {
            auto f = seq.frame(t);
            frames.emplace_back(f.begin(), f.end());
            labels.push_back(alphabet.index_of(net.unit_labels[size_t(a.frames[size_t(t)].unit_id)]));
        }
    }

    TandemArtifacts art;
    art.classifier = train_frame_classifier(frames, labels, alphabet.size(), mlp_cfg);

    std::vector<FeatureSequence> train_posteriors;
    for (const auto& s : manifest.samples)
        if (s.partition == Partition::Train)
            train_posteriors.push_back(posteriors(art.classifier, base_features.at(s.id)));
    art.pca = fit_pca(train_posteriors, pca_dim);

    for (const auto& [id, seq] : base_features)
        art.features[id] = tandem_transform(art.classifier, art.pca, seq);
    art.models = train_corpus_models(manifest, art.features, alphabet, shape_coded, retrain_cfg);
    return art;
}

// ---------------------------------------------------------------------------
// Spot + evaluate
// ---------------------------------------------------------------------------

struct SpotEvalConfig {
    SlidingWindowConfig window;
    ThresholdPolicy policy;
    bool range_filter = false;
    std::optional<Partition> partition = Partition::Test;  // nullopt = all lines
};

inline std::vector<SpotHit> spot_corpus(const CorpusManifest& manifest,
                                        const std::map<std::string, FeatureSequence>& features,
                                        const Spotter& spotter, const SpotEvalConfig& cfg,
                                        std::vector<std::string>* errors = nullptr) {
    std::vector<ScanLine> lines;
    for (const auto& s : manifest.samples) {
        if (cfg.partition && s.partition != *cfg.partition) continue;
        auto it = features.find(s.id);
        if (it == features.end()) throw std::runtime_error("missing features for line " + s.id);
        lines.push_back({s.id, &it->second, s.geometry, int(s.transcript.size())});
    }
    ScanResult res = scan_corpus(lines, spotter,
                                 {DateModel::A, DateModel::B, DateModel::C}, cfg.policy,
                                 cfg.window);
    if (errors) *errors = res.errors;
    std::vector<SpotHit> hits = std::move(res.hits);
    if (cfg.range_filter && !spotter.shape_coded()) hits = apply_range_filter(hits);
    return hits;
}

inline EvalReport evaluate_corpus(const CorpusManifest& manifest, const std::vector<SpotHit>& hits,
                                  const SpotEvalConfig& cfg) {
    std::vector<TruthSpan> truths;
    for (const auto& s : manifest.samples) {
        if (cfg.partition && s.partition != *cfg.partition) continue;
        for (const auto& sp : s.date_spans) truths.push_back({s.id, sp.model, sp.start, sp.end});
    }
    return evaluate_hits(hits, truths, cfg.policy.global_threshold);
}

// ---------------------------------------------------------------------------
// Whole-run driver
// ---------------------------------------------------------------------------

struct PipelineConfig {
    FeatureKind feature = FeatureKind::Combined;
    bool tandem = false;
    bool shape_coded = false;
    SlidingWindowConfig window;
    PhogConfig phog;
    double gamma = 0.05;
    double noise = 0.0;           // applied at feature time (train stays clean)
    std::uint64_t noise_seed = 99;
    TrainConfig train;
    MlpConfig mlp;
    int pca_dim = 40;
    SpotEvalConfig spot;
    bool range_filter = false;
};

/// Train on the clean train partition and evaluate on the (optionally noisy)
/// selected partition of the same corpus.
inline EvalReport run_pipeline(const CorpusManifest& manifest, const PipelineConfig& cfg) {
    Alphabet alphabet = cfg.shape_coded ? shape_alphabet() : Alphabet::characters();

    auto clean = compute_corpus_features(manifest, cfg.feature, cfg.window, cfg.phog, cfg.gamma);
    ModelSet models = train_corpus_models(manifest, clean, alphabet, cfg.shape_coded, cfg.train);

    std::map<std::string, FeatureSequence> eval_features =
        cfg.noise > 0.0 ? compute_corpus_features(manifest, cfg.feature, cfg.window, cfg.phog,
                                                  cfg.gamma, cfg.noise, cfg.noise_seed)
                        : clean;

    SpotEvalConfig spot_cfg = cfg.spot;
    spot_cfg.window = cfg.window;
    spot_cfg.range_filter = cfg.range_filter;

    EvalReport rep;
    if (cfg.tandem) {
        TandemArtifacts art = fit_tandem(manifest, clean, models, alphabet, cfg.shape_coded,
                                         cfg.mlp, cfg.pca_dim, cfg.train);
        std::map<std::string, FeatureSequence> eval_tandem;
        for (const auto& [id, seq] : eval_features)
            eval_tandem[id] = tandem_transform(art.classifier, art.pca, seq);
        Spotter spotter(art.models, cfg.shape_coded);
        auto hits = spot_corpus(manifest, eval_tandem, spotter, spot_cfg);
        rep = evaluate_corpus(manifest, hits, spot_cfg);
        rep.feature = "tandem";
    } else {
        Spotter spotter(models, cfg.shape_coded);
        auto hits = spot_corpus(manifest, eval_features, spotter, spot_cfg);
        rep = evaluate_corpus(manifest, hits, spot_cfg);
        rep.feature = feature_kind_name(cfg.feature);
    }
    rep.shape_coded = cfg.shape_coded;
    rep.states = cfg.train.states_letters;
    rep.gaussians = cfg.train.max_gaussians;
    rep.noise = cfg.noise;
    return rep;
}

/// Sweep grid: one report per cell; failures are recorded and the grid
/// continues.
inline std::vector<EvalReport> run_matrix(const CorpusManifest& manifest,
                                          const std::vector<PipelineConfig>& grid) {
    std::vector<EvalReport> reports;
    for (const auto& cell : grid) {
        try {
            reports.push_back(run_pipeline(manifest, cell));
        } catch (const std::exception& e) {
            EvalReport rep;
            rep.feature = cell.tandem ? "tandem" : feature_kind_name(cell.feature);
            rep.shape_coded = cell.shape_coded;
            rep.states = cell.train.states_letters;
            rep.gaussians = cell.train.max_gaussians;
            rep.noise = cell.noise;
            rep.error = e.what();
            reports.push_back(rep);
        }
    }
    return reports;
}

/// Convenience umbrella include marker.
inline const char* library_version() { return "1.0.0"; }

}  // namespace datespot

#endif
