#ifndef DATESPOT_EVAL_HPP
#define DATESPOT_EVAL_HPP

// Retrieval evaluation: span matching, precision/recall/F, PR curves and
// their area ("MAP" in this project's usage) under global and per-line
// optimal (local) thresholds, plus CSV report output.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "datespot/grammar.hpp"
#include "datespot/spotter.hpp"

namespace datespot {

struct ConfusionCounts {
    long tp = 0, fp = 0, fn = 0;
};

struct TruthSpan {
    std::string line_id;
    DateModel model = DateModel::A;
    int char_begin = 0, char_end = 0;  // [begin, end)
};

struct PrPoint {
    double threshold = 0.0, precision = 0.0, recall = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;  // thresholds strictly decreasing
};

inline double span_iou(int a0, int a1, int b0, int b1) {
    int inter = std::min(a1, b1) - std::max(a0, b0);
    if (inter <= 0) return 0.0;
    int uni = std::max(a1, b1) - std::min(a0, b0);
    return double(inter) / double(uni);
}

/// One-to-one matching: a hit is a true positive when its character span
/// overlaps a same-line, same-model truth span with IoU >= min_iou; each
/// truth span matches at most one hit. Hits are consumed in descending
/// score order (ties by line id) so the matching is deterministic.
inline ConfusionCounts match_hits(const std::vector<SpotHit>& hits,
                                  const std::vector<TruthSpan>& truths, double min_iou = 0.5) {
    std::vector<const SpotHit*> order;
    for (const auto& h : hits) order.push_back(&h);
    std::stable_sort(order.begin(), order.end(), [](const SpotHit* a, const SpotHit* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->line_id < b->line_id;
    });

    std::vector<bool> used(truths.size(), false);
    ConfusionCounts c;
    for (const SpotHit* h : order) {
        int best = -1;
        double best_iou = 0.0;
        for (size_t i = 0; i < truths.size(); ++i) {
            const auto& t = truths[i];
            if (used[i] || t.line_id != h->line_id || t.model != h->model) continue;
            double iou = span_iou(h->char_begin, h->char_end, t.char_begin, t.char_end);
            if (iou >= min_iou && iou > best_iou) {
                best_iou = iou;
                best = int(i);
            }
        }
        if (best >= 0) {
            used[size_t(best)] = true;
            ++c.tp;
        } else {
            ++c.fp;
        }
    }
    for (bool u : used)
        if (!u) ++c.fn;
    return c;
}

struct Prf {
    double precision = 0.0, recall = 0.0, f = 0.0;
};

inline Prf precision_recall_f(const ConfusionCounts& c) {
    Prf r;
    if (c.tp > 0) {
        r.precision = double(c.tp) / double(c.tp + c.fp);
        r.recall = double(c.tp) / double(c.tp + c.fn);
        r.f = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
}

namespace eval_detail {

/// Sweep the global threshold over all distinct scores (descending),
/// recomputing counts each time with only accepted hits.
inline PrCurve sweep(const std::vector<SpotHit>& hits, const std::vector<TruthSpan>& truths,
                     double min_iou) {
    std::set<double, std::greater<double>> thresholds;
    for (const auto& h : hits) thresholds.insert(h.score);
    PrCurve curve;
    for (double t : thresholds) {
        std::vector<SpotHit> accepted;
        for (const auto& h : hits)
            if (h.score >= t) accepted.push_back(h);
        Prf p = precision_recall_f(match_hits(accepted, truths, min_iou));
        curve.points.push_back({t, p.precision, p.recall});
    }
    return curve;
}

inline double curve_area(const PrCurve& curve) {
    if (curve.points.empty()) return 0.0;
    // Prepend (R=0, P=first precision), enforce monotone recall ordering
    // (it already is, thresholds descending), trapezoidal area.
    double area = 0.0;
    double prev_r = 0.0, prev_p = curve.points.front().precision;
    for (const auto& pt : curve.points) {
        if (pt.recall < prev_r) continue;
        area += (pt.recall - prev_r) * 0.5 * (pt.precision + prev_p);
        prev_r = pt.recall;
        prev_p = pt.precision;
    }
    return area;
}

}  // namespace eval_detail

inline std::pair<PrCurve, double> pr_curve_and_map(const std::vector<SpotHit>& hits,
                                                   const std::vector<TruthSpan>& truths,
                                                   double min_iou = 0.5) {
    PrCurve curve = eval_detail::sweep(hits, truths, min_iou);
    return {curve, eval_detail::curve_area(curve)};
}

/// Local (per-line-optimal threshold) evaluation: for each line, pick the
/// threshold over that line's own scores that maximizes the line's
/// F-measure (ties resolved toward the higher threshold). Hits the line's
/// optimal threshold rejects are demoted below every retained score before
/// the global sweep, so the ranking reflects per-line tuning. This is an
/// evaluation-only upper bound, not a deployment mode.
inline std::pair<PrCurve, double> pr_curve_and_map_local(const std::vector<SpotHit>& hits,
                                                         const std::vector<TruthSpan>& truths,
                                                         double min_iou = 0.5) {
    std::map<std::string, std::vector<const SpotHit*>> by_line;
    for (const auto& h : hits) by_line[h.line_id].push_back(&h);
    std::map<std::string, std::vector<TruthSpan>> truth_by_line;
    for (const auto& t : truths) truth_by_line[t.line_id].push_back(t);

    double min_score = 0.0, max_score = 0.0;
    if (!hits.empty()) {
        min_score = max_score = hits.front().score;
        for (const auto& h : hits) {
            min_score = std::min(min_score, h.score);
            max_score = std::max(max_score, h.score);
        }
    }
    const double demote = (max_score - min_score) + 1.0;

    std::vector<SpotHit> rescored;
    for (auto& [line_id, line_hits] : by_line) {
        const auto& line_truth = truth_by_line[line_id];  // may be empty
        std::set<double, std::greater<double>> cand;
        for (const SpotHit* h : line_hits) cand.insert(h->score);
        cand.insert(max_score + 1.0);  // "reject everything" is a candidate
        double best_t = max_score + 1.0, best_f = -1.0;
        for (double t : cand) {
            std::vector<SpotHit> accepted;
            for (const SpotHit* h : line_hits)
                if (h->score >= t) accepted.push_back(*h);
            ConfusionCounts c = match_hits(accepted, line_truth, min_iou);
            double f = precision_recall_f(c).f;
            if (line_truth.empty() && accepted.empty()) f = 1.0;  // perfect rejection
            if (f > best_f + 1e-12) {
                best_f = f;
                best_t = t;
            }
        }
        for (const SpotHit* h : line_hits) {
            SpotHit copy = *h;
            if (h->score < best_t) copy.score -= demote;
            rescored.push_back(std::move(copy));
        }
    }
    PrCurve curve = eval_detail::sweep(rescored, truths, min_iou);
    return {curve, eval_detail::curve_area(curve)};
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalReport {
    // Run metadata.
    std::string feature;      // binary | gray | combined | tandem | marti-bunke
    bool shape_coded = false;
    int states = 0;
    int gaussians = 0;
    double noise = 0.0;

    // Pooled over all models, at the operating threshold.
    Prf operating;
    double map_global = 0.0;
    double map_local = 0.0;
    // Per model ("A"/"B"/"C") global MAP, plus their unweighted mean.
    std::map<char, double> map_per_model;
    double map_model_mean = 0.0;
    std::string error;  // nonempty when this grid cell failed
};

inline EvalReport evaluate_hits(const std::vector<SpotHit>& hits,
                                const std::vector<TruthSpan>& truths, double threshold,
                                double min_iou = 0.5) {
    EvalReport rep;
    std::vector<SpotHit> accepted;
    for (const auto& h : hits)
        if (h.score >= threshold) accepted.push_back(h);
    rep.operating = precision_recall_f(match_hits(accepted, truths, min_iou));
    rep.map_global = pr_curve_and_map(hits, truths, min_iou).second;
    rep.map_local = pr_curve_and_map_local(hits, truths, min_iou).second;
    double sum = 0.0;
    int n = 0;
    for (DateModel m : {DateModel::A, DateModel::B, DateModel::C}) {
        std::vector<SpotHit> mh;
        std::vector<TruthSpan> mt;
        for (const auto& h : hits)
            if (h.model == m) mh.push_back(h);
        for (const auto& t : truths)
            if (t.model == m) mt.push_back(t);
        if (mt.empty() && mh.empty()) continue;
        double map = pr_curve_and_map(mh, mt, min_iou).second;
        rep.map_per_model[model_tag(m)] = map;
        sum += map;
        ++n;
    }
    rep.map_model_mean = n > 0 ? sum / n : 0.0;
    return rep;
}

inline void save_pr_curve_csv(const PrCurve& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "threshold,precision,recall\n";
    for (const auto& p : curve.points)
        os << p.threshold << "," << p.precision << "," << p.recall << "\n";
}

inline void save_report_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << "feature,shape_coded,states,gaussians,noise,precision,recall,f,"
          "map_global,map_local,map_A,map_B,map_C,map_model_mean,error\n";
    for (const auto& r : reports) {
        auto per = [&](char m) {
            auto it = r.map_per_model.find(m);
            return it == r.map_per_model.end() ? 0.0 : it->second;
        };
        os << r.feature << "," << (r.shape_coded ? 1 : 0) << "," << r.states << ","
           << r.gaussians << "," << r.noise << "," << r.operating.precision << ","
           << r.operating.recall << "," << r.operating.f << "," << r.map_global << ","
           << r.map_local << "," << per('A') << "," << per('B') << "," << per('C') << ","
           << r.map_model_mean << "," << r.error << "\n";
    }
}

/// Ground truth spans from a manifest (character indices).
inline std::vector<TruthSpan> truth_from_manifest(const CorpusManifest& manifest) {
    std::vector<TruthSpan> truths;
    for (const auto& s : manifest.samples)
        for (const auto& sp : s.date_spans)
            truths.push_back({s.id, sp.model, sp.start, sp.end});
    return truths;
}

}  // namespace datespot

#endif
