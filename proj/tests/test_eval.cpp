#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "datespot/eval.hpp"

using namespace datespot;

namespace {

SpotHit hit(const std::string& line, DateModel m, double score, int c0, int c1) {
    SpotHit h;
    h.line_id = line;
    h.model = m;
    h.score = score;
    h.char_begin = c0;
    h.char_end = c1;
    h.accepted = true;
    return h;
}

TruthSpan truth(const std::string& line, DateModel m, int c0, int c1) {
    return TruthSpan{line, m, c0, c1};
}

}  // namespace

TEST_CASE("span iou arithmetic") {
    CHECK(span_iou(0, 4, 0, 4) == doctest::Approx(1.0));
    CHECK(span_iou(0, 4, 2, 6) == doctest::Approx(2.0 / 6.0));
    CHECK(span_iou(0, 4, 4, 8) == doctest::Approx(0.0));
    CHECK(span_iou(0, 2, 6, 8) == doctest::Approx(0.0));
}

TEST_CASE("matching is one-to-one within line and model") {
    std::vector<TruthSpan> truths{truth("a", DateModel::A, 3, 13)};

    ConfusionCounts c = match_hits({hit("a", DateModel::A, 1.0, 3, 13)}, truths);
    CHECK(c.tp == 1);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);

    // Wrong line and wrong model are both false positives.
    c = match_hits({hit("b", DateModel::A, 1.0, 3, 13)}, truths);
    CHECK(c.tp == 0);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    c = match_hits({hit("a", DateModel::B, 1.0, 3, 13)}, truths);
    CHECK(c.fp == 1);

    // Two overlapping hits on one truth: the higher-scored one wins.
    c = match_hits({hit("a", DateModel::A, 2.0, 3, 13), hit("a", DateModel::A, 1.0, 4, 12)},
                   truths);
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 0);

    // IoU below 0.5 does not match: [3,13) vs [10,14) has IoU 3/11.
    c = match_hits({hit("a", DateModel::A, 1.0, 10, 14)}, truths);
    CHECK(c.tp == 0);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
}

TEST_CASE("precision recall f arithmetic") {
    Prf p = precision_recall_f({3, 1, 1});
    CHECK(p.precision == doctest::Approx(0.75));
    CHECK(p.recall == doctest::Approx(0.75));
    CHECK(p.f == doctest::Approx(0.75));
    p = precision_recall_f({0, 5, 2});
    CHECK(p.precision == 0.0);
    CHECK(p.recall == 0.0);
    CHECK(p.f == 0.0);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c{long(rng() % 20), long(rng() % 20), long(rng() % 20)};
        Prf r = precision_recall_f(c);
        if (c.tp > 0) {
            CHECK(r.f ==
                  doctest::Approx(2 * r.precision * r.recall / (r.precision + r.recall))
                      .epsilon(1e-12));
            CHECK(r.f <= std::min(2 * r.precision, 2 * r.recall) + 1e-12);
        } else {
            CHECK(r.f == 0.0);
        }
    }
}

TEST_CASE("perfect ranking yields area one") {
    std::vector<TruthSpan> truths{truth("a", DateModel::A, 0, 4), truth("b", DateModel::A, 0, 4),
                                  truth("c", DateModel::A, 0, 4)};
    std::vector<SpotHit> hits{hit("a", DateModel::A, 3.0, 0, 4), hit("b", DateModel::A, 2.0, 0, 4),
                              hit("c", DateModel::A, 1.0, 0, 4)};
    auto [curve, map] = pr_curve_and_map(hits, truths);
    CHECK(map == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points.front().threshold == 3.0);
    CHECK(curve.points.back().recall == doctest::Approx(1.0));
}

TEST_CASE("six-hit ranking matches a hand-computed area") {
    // Ranking: TP FP TP TP FP FP over four truths (one never retrieved).
    std::vector<TruthSpan> truths{truth("a", DateModel::A, 0, 4), truth("b", DateModel::A, 0, 4),
                                  truth("c", DateModel::A, 0, 4), truth("d", DateModel::A, 0, 4)};
    std::vector<SpotHit> hits{hit("a", DateModel::A, 6.0, 0, 4), hit("e", DateModel::A, 5.0, 0, 4),
                              hit("b", DateModel::A, 4.0, 0, 4), hit("c", DateModel::A, 3.0, 0, 4),
                              hit("f", DateModel::A, 2.0, 0, 4), hit("g", DateModel::A, 1.0, 0, 4)};
    auto [curve, map] = pr_curve_and_map(hits, truths);
    // Trapezoids: 1/4*1 + 1/4*(2/3+1/2)/2 + 1/4*(3/4+2/3)/2 = 55/96.
    CHECK(map == doctest::Approx(55.0 / 96.0).epsilon(1e-12));
    REQUIRE(curve.points.size() == 6);
    CHECK(curve.points[3].precision == doctest::Approx(0.75));
    CHECK(curve.points[3].recall == doctest::Approx(0.75));
}

TEST_CASE("per-line thresholds never lose to the global sweep") {
    // Line z carries only a high-scoring false positive; the local policy
    // rejects it outright, the global sweep cannot.
    std::vector<TruthSpan> truths{truth("x", DateModel::A, 0, 4), truth("y", DateModel::A, 0, 4)};
    std::vector<SpotHit> hits{hit("y", DateModel::A, 3.0, 0, 4), hit("z", DateModel::A, 2.5, 0, 4),
                              hit("x", DateModel::A, 1.0, 0, 4)};
    double global = pr_curve_and_map(hits, truths).second;
    double local = pr_curve_and_map_local(hits, truths).second;
    CHECK(local >= global - 1e-12);
    CHECK(local == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(global < 1.0);

    // Randomized property check.
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<SpotHit> hs;
        std::vector<TruthSpan> ts;
        int lines = 2 + int(rng() % 4);
        for (int l = 0; l < lines; ++l) {
            std::string id = "l" + std::to_string(l);
            if (rng() % 2) ts.push_back(truth(id, DateModel::A, 0, 4));
            int n = int(rng() % 3);
            for (int i = 0; i < n; ++i) {
                int c0 = int(rng() % 6);
                hs.push_back(hit(id, DateModel::A, double(rng() % 100) / 10.0, c0, c0 + 4));
            }
        }
        double g = pr_curve_and_map(hs, ts).second;
        double lo = pr_curve_and_map_local(hs, ts).second;
        CHECK(lo >= g - 1e-12);
    }
}

TEST_CASE("evaluate_hits fills the report consistently") {
    std::vector<TruthSpan> truths{truth("a", DateModel::A, 0, 4), truth("b", DateModel::B, 0, 4)};
    std::vector<SpotHit> hits{hit("a", DateModel::A, 2.0, 0, 4), hit("b", DateModel::B, 1.0, 0, 4),
                              hit("c", DateModel::A, 0.5, 0, 4)};
    EvalReport rep = evaluate_hits(hits, truths, 1.0);
    CHECK(rep.operating.precision == doctest::Approx(1.0));
    CHECK(rep.operating.recall == doctest::Approx(1.0));
    CHECK(rep.map_local >= rep.map_global - 1e-12);
    REQUIRE(rep.map_per_model.count('A') == 1);
    REQUIRE(rep.map_per_model.count('B') == 1);
    CHECK(rep.map_per_model.at('B') == doctest::Approx(1.0));
    CHECK(rep.map_model_mean ==
          doctest::Approx((rep.map_per_model.at('A') + rep.map_per_model.at('B')) / 2.0));
}

TEST_CASE("csv writers emit one row per entry") {
    auto tmp = std::filesystem::temp_directory_path();
    std::string curve_path = (tmp / "curve.csv").string();
    std::string report_path = (tmp / "report.csv").string();

    PrCurve curve;
    curve.points = {{2.0, 1.0, 0.5}, {1.0, 0.75, 1.0}};
    save_pr_curve_csv(curve, curve_path);
    EvalReport rep;
    rep.feature = "combined";
    rep.states = 6;
    rep.gaussians = 4;
    rep.map_global = 0.9;
    save_report_csv({rep}, report_path);

    auto count_lines = [](const std::string& p) {
        std::ifstream is(p);
        std::string line;
        int n = 0;
        while (std::getline(is, line)) ++n;
        return n;
    };
    CHECK(count_lines(curve_path) == 3);   // header + 2 points
    CHECK(count_lines(report_path) == 2);  // header + 1 row
    std::remove(curve_path.c_str());
    std::remove(report_path.c_str());
}

TEST_CASE("truth spans come straight from the manifest annotations") {
    CorpusManifest m;
    LineSample s;
    s.id = "s1";
    s.transcript = "on 04/18/2014 ok";
    s.date_spans = annotate_dates(s.transcript);
    m.samples.push_back(s);
    s.id = "s2";
    s.transcript = "no dates here";
    s.date_spans.clear();
    m.samples.push_back(s);

    auto truths = truth_from_manifest(m);
    REQUIRE(truths.size() == 1);
    CHECK(truths[0].line_id == "s1");
    CHECK(truths[0].model == DateModel::A);
    CHECK(truths[0].char_begin == 3);
    CHECK(truths[0].char_end == 13);
}
