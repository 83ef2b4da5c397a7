#ifndef DATESPOT_SPOTTER_HPP
#define DATESPOT_SPOTTER_HPP

// Line scoring: locate the best keyword span with a filler*.keyword.filler*
// network, then score it with the length-normalized keyword/filler
// log-likelihood ratio. Includes corpus scanning, decoded-range filtering,
// and the JSON-lines hit format.

#include <json.hpp>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "datespot/corpus.hpp"
#include "datespot/features.hpp"
#include "datespot/grammar.hpp"
#include "datespot/hmm.hpp"

namespace datespot {

struct SpotHit {
    std::string line_id;
    DateModel model = DateModel::A;
    double score = 0.0;
    int frame_begin = 0, frame_end = 0;  // [begin, end)
    int char_begin = 0, char_end = 0;    // [begin, end) in the transcript
    std::string decoded;
    bool accepted = false;
};

struct ThresholdPolicy {
    enum class Mode { Global, Local } mode = Mode::Global;
    double global_threshold = 0.0;
};

inline FeatureSequence slice_sequence(const FeatureSequence& seq, int begin, int end) {
    if (begin < 0 || end > seq.count || begin >= end)
        throw std::invalid_argument("slice_sequence: bad range");
    FeatureSequence out;
    out.resize(end - begin, seq.dim);
    out.tag = seq.tag;
    std::copy(seq.values.begin() + long(begin) * seq.dim, seq.values.begin() + long(end) * seq.dim,
              out.values.begin());
    return out;
}

/// Map a frame span back to transcript character indices using the rendered
/// line geometry. Falls back to a proportional mapping when no geometry is
/// available.
inline std::pair<int, int> frames_to_chars(int frame_begin, int frame_end, int total_frames,
                                           const SlidingWindowConfig& win,
                                           const std::optional<LineGeometry>& geom,
                                           int transcript_len) {
    if (transcript_len <= 0) return {0, 0};
    double c0, c1;
    if (geom && geom->height_px > 0 && geom->advance_px > 0) {
        double scale = double(win.line_height) / double(geom->height_px);
        double px0 = double(frame_begin * win.stride()) / scale;
        double px1 = double((frame_end - 1) * win.stride() + win.window_width) / scale;
        c0 = (px0 - geom->margin_px) / double(geom->advance_px);
        c1 = (px1 - geom->margin_px) / double(geom->advance_px);
    } else {
        c0 = double(frame_begin) / double(total_frames) * transcript_len;
        c1 = double(frame_end) / double(total_frames) * transcript_len;
    }
    int a = std::clamp(int(std::lround(c0)), 0, transcript_len - 1);
    int b = std::clamp(int(std::lround(c1)), a + 1, transcript_len);
    return {a, b};
}

class Spotter {
public:
    Spotter(const ModelSet& models, bool shape_coded)
        : models_(&models), shape_coded_(shape_coded), filler_(build_filler(models)) {
        for (DateModel m : {DateModel::A, DateModel::B, DateModel::C}) {
            SymbolNet sn = build_date_symbolnet(m);
            if (shape_coded_) sn = shape_code_symbolnet(sn);
            keyword_.emplace(m, compile_symbolnet(sn, models, true));
            line_.emplace(m, build_line_network(keyword_.at(m), filler_));
        }
    }

    bool shape_coded() const { return shape_coded_; }
    const CompositeNetwork& filler() const { return filler_; }
    const CompositeNetwork& keyword_network(DateModel m) const { return keyword_.at(m); }

    /// Best keyword span and its length-normalized log-likelihood ratio; none
    /// when the line admits no keyword path.
    std::optional<SpotHit> score_line(const FeatureSequence& seq, DateModel model) const {
        auto path = viterbi(line_.at(model), seq);
        if (!path) return std::nullopt;
        int a = -1, b = -1;
        for (int t = 0; t < int(path->frames.size()); ++t)
            if (path->frames[size_t(t)].in_keyword) {
                if (a < 0) a = t;
                b = t + 1;
            }
        if (a < 0) return std::nullopt;

        FeatureSequence span = slice_sequence(seq, a, b);
        auto kw = viterbi(keyword_.at(model), span);
        auto fl = viterbi(filler_, span);
        if (!kw || !fl) return std::nullopt;

        SpotHit hit;
        hit.model = model;
        hit.frame_begin = a;
        hit.frame_end = b;
        hit.score = (kw->log_likelihood - fl->log_likelihood) / double(b - a);
        for (const auto& label : kw->unit_sequence(keyword_.at(model))) hit.decoded += label;
        return hit;
    }

private:
    const ModelSet* models_;
    bool shape_coded_;
    CompositeNetwork filler_;
    std::map<DateModel, CompositeNetwork> keyword_;
    std::map<DateModel, CompositeNetwork> line_;
};

struct ScanLine {
    std::string id;
    const FeatureSequence* seq = nullptr;
    std::optional<LineGeometry> geometry;
    int transcript_len = 0;
};

struct ScanResult {
    std::vector<SpotHit> hits;
    std::vector<std::string> errors;  // per-line failures, scan continues
};

/// One best hit per (line, model). Accept decisions follow the global
/// threshold; local mode defers acceptance to the evaluator.
inline ScanResult scan_corpus(const std::vector<ScanLine>& lines, const Spotter& spotter,
                              const std::vector<DateModel>& grammars,
                              const ThresholdPolicy& policy,
                              const SlidingWindowConfig& win = {}) {
    ScanResult result;
    for (const auto& line : lines) {
        for (DateModel m : grammars) {
            try {
                auto hit = spotter.score_line(*line.seq, m);
                if (!hit) continue;
                hit->line_id = line.id;
                auto [c0, c1] = frames_to_chars(hit->frame_begin, hit->frame_end,
                                                line.seq->count, win, line.geometry,
                                                line.transcript_len);
                hit->char_begin = c0;
                hit->char_end = c1;
                hit->accepted = policy.mode == ThresholdPolicy::Mode::Global
                                    ? hit->score >= policy.global_threshold
                                    : true;
                result.hits.push_back(std::move(*hit));
            } catch (const std::exception& e) {
                result.errors.push_back(line.id + "/" + std::string(1, model_tag(m)) + ": " +
                                        e.what());
            }
        }
    }
    return result;
}

/// Drop hits whose decoded date fails the semantic range check. Only
/// meaningful on plain-alphabet decodings; shape-coded callers skip it.
inline std::vector<SpotHit> apply_range_filter(const std::vector<SpotHit>& hits) {
    std::vector<SpotHit> kept;
    for (const auto& h : hits)
        if (range_postfilter(h.decoded)) kept.push_back(h);
    return kept;
}

// ---------------------------------------------------------------------------
// JSON-lines hit format
// ---------------------------------------------------------------------------

inline void save_hits(const std::vector<SpotHit>& hits, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    for (const auto& h : hits) {
        nlohmann::json j;
        j["line_id"] = h.line_id;
        j["model"] = std::string(1, model_tag(h.model));
        j["score"] = h.score;
        j["span_frames"] = {h.frame_begin, h.frame_end};
        j["span_chars"] = {h.char_begin, h.char_end};
        j["decoded"] = h.decoded;
        j["accepted"] = h.accepted;
        os << j.dump() << "\n";
    }
}

inline std::vector<SpotHit> load_hits(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open hits file: " + path);
    std::vector<SpotHit> hits;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        SpotHit h;
        h.line_id = j.at("line_id").get<std::string>();
        h.model = model_from_tag(j.at("model").get<std::string>().at(0));
        h.score = j.at("score").get<double>();
        h.frame_begin = j.at("span_frames").at(0).get<int>();
        h.frame_end = j.at("span_frames").at(1).get<int>();
        h.char_begin = j.at("span_chars").at(0).get<int>();
        h.char_end = j.at("span_chars").at(1).get<int>();
        h.decoded = j.at("decoded").get<std::string>();
        h.accepted = j.at("accepted").get<bool>();
        hits.push_back(std::move(h));
    }
    return hits;
}

}  // namespace datespot

#endif
