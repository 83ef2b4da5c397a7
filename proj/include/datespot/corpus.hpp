#ifndef DATESPOT_CORPUS_HPP
#define DATESPOT_CORPUS_HPP

// Corpus handling: JSON-lines manifests, deterministic synthetic rendering
// of text-line images from the embedded glyph set, and Gaussian degradation
// for the robustness experiments.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "datespot/alphabet.hpp"
#include "datespot/font5x7.hpp"
#include "datespot/grammar.hpp"
#include "datespot/image.hpp"
#include "datespot/png_io.hpp"

namespace datespot {

enum class Partition { Train, Validation, Test };

inline std::string partition_name(Partition p) {
    switch (p) {
        case Partition::Train: return "train";
        case Partition::Validation: return "validation";
        case Partition::Test: return "test";
    }
    return "?";
}

inline Partition partition_from_name(const std::string& s) {
    if (s == "train") return Partition::Train;
    if (s == "validation") return Partition::Validation;
    if (s == "test") return Partition::Test;
    throw std::invalid_argument("unknown partition: " + s);
}

/// Pixel geometry of a rendered line, used to map decoded frame spans back
/// to character indices.
struct LineGeometry {
    int advance_px = 0;  // horizontal advance per character
    int margin_px = 0;   // left margin before the first character
    int height_px = 0;   // rendered line height
};

struct LineSample {
    std::string id;
    std::string image_path;  // relative to the manifest directory
    std::string transcript;
    std::vector<TextSpan> date_spans;
    Partition partition = Partition::Train;
    std::optional<LineGeometry> geometry;
};

struct CorpusManifest {
    std::filesystem::path root;  // directory holding the manifest
    std::vector<LineSample> samples;

    std::filesystem::path image_file(const LineSample& s) const {
        return root / s.image_path;
    }
};

// ---------------------------------------------------------------------------
// Manifest I/O (JSON lines)
// ---------------------------------------------------------------------------

namespace detail {

inline void validate_sample(const LineSample& s, size_t record_index) {
    int prev_end = 0;
    for (const auto& span : s.date_spans) {
        std::ostringstream where;
        where << "record " << record_index << " (id '" << s.id << "')";
        if (span.start < 0 || span.end > int(s.transcript.size()) || span.start >= span.end)
            throw std::runtime_error(where.str() + ": span out of bounds");
        if (span.start < prev_end)
            throw std::runtime_error(where.str() + ": spans overlap or are unordered");
        prev_end = span.end;
        std::string text = s.transcript.substr(size_t(span.start), size_t(span.end - span.start));
        if (!matches_full(span.model, text))
            throw std::runtime_error(where.str() + ": span text '" + text +
                                     "' does not match model " + model_tag(span.model));
    }
}

}  // namespace detail

inline CorpusManifest load_manifest(const std::filesystem::path& path, bool check_images = true) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("manifest not found: " + path.string());
    CorpusManifest m;
    m.root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    std::string line;
    size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": malformed JSON: " + e.what());
        }
        LineSample s;
        try {
            s.id = j.at("id").get<std::string>();
            s.image_path = j.at("image_path").get<std::string>();
            s.transcript = j.at("transcript").get<std::string>();
            s.partition = partition_from_name(j.at("partition").get<std::string>());
            for (const auto& sp : j.at("spans")) {
                TextSpan t;
                t.start = sp.at(0).get<int>();
                t.end = sp.at(1).get<int>();
                t.model = model_from_tag(sp.at(2).get<std::string>().at(0));
                s.date_spans.push_back(t);
            }
            if (j.contains("geom")) {
                LineGeometry g;
                g.advance_px = j["geom"].at("advance_px").get<int>();
                g.margin_px = j["geom"].at("margin_px").get<int>();
                g.height_px = j["geom"].at("height_px").get<int>();
                s.geometry = g;
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": bad record: " + e.what());
        }
        detail::validate_sample(s, line_no);
        if (check_images && !std::filesystem::exists(m.root / s.image_path))
            throw std::runtime_error("manifest line " + std::to_string(line_no) +
                                     ": image file missing: " + s.image_path);
        m.samples.push_back(std::move(s));
    }
    return m;
}

inline void save_manifest(const CorpusManifest& m, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write manifest: " + path.string());
    for (const auto& s : m.samples) {
        nlohmann::json j;
        j["id"] = s.id;
        j["image_path"] = s.image_path;
        j["transcript"] = s.transcript;
        j["partition"] = partition_name(s.partition);
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& sp : s.date_spans)
            spans.push_back({sp.start, sp.end, std::string(1, model_tag(sp.model))});
        j["spans"] = spans;
        if (s.geometry) {
            j["geom"] = {{"advance_px", s.geometry->advance_px},
                         {"margin_px", s.geometry->margin_px},
                         {"height_px", s.geometry->height_px}};
        }
        f << j.dump() << "\n";
    }
}

// ---------------------------------------------------------------------------
// Synthetic rendering
// ---------------------------------------------------------------------------

struct RenderStyle {
    int scale = 8;        // pixels per font cell unit
    int margin_cells = 1; // blank cells at each side
    // Base gray levels; per-sample jitter is derived from the seed.
    int background = 60;
    int foreground = 220;
    float contrast = 1.0f;  // scales fg/bg separation around their midpoint
    // Per-glyph-instance degradation in [0,1]: stroke dropout, edge bleed,
    // and vertical wobble, as in compressed video stills. 0 = crisp.
    float glyph_jitter = 0.0f;
};

/// Deterministic rendering of `text` with the embedded glyph set.
/// Bright text on a darker, mildly tinted background.
inline ImageU8 render_line(const std::string& text, const RenderStyle& style, uint64_t seed) {
    if (text.empty()) throw std::invalid_argument("render_line: empty text");
    for (char c : text)
        if (!has_glyph(c))
            throw std::invalid_argument(std::string("render_line: unsupported glyph '") + c + "'");

    const int cell_w = 6, cell_h = 9;  // 5x7 glyph plus spacing
    const int s = style.scale;
    const int margin = style.margin_cells * cell_w * s;
    const int width = margin * 2 + int(text.size()) * cell_w * s;
    const int height = cell_h * s;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> jitter(-12, 12);
    std::uniform_int_distribution<int> tint(-8, 8);
    float mid = 0.5f * float(style.background + style.foreground);
    float half = 0.5f * float(style.foreground - style.background) * style.contrast;
    int bg = std::clamp(int(std::lround(mid - half)) + jitter(rng), 0, 255);
    int fg = std::clamp(int(std::lround(mid + half)) + jitter(rng), 0, 255);
    int tint_r = tint(rng), tint_g = tint(rng), tint_b = tint(rng);
    // Gentle horizontal illumination ramp, as in video stills.
    std::uniform_int_distribution<int> ramp_dist(-15, 15);
    int ramp = ramp_dist(rng);

    ImageU8 img(width, height, 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            int base = bg + ramp * x / std::max(1, width - 1);
            img.at(x, y, 0) = uint8_t(std::clamp(base + tint_r, 0, 255));
            img.at(x, y, 1) = uint8_t(std::clamp(base + tint_g, 0, 255));
            img.at(x, y, 2) = uint8_t(std::clamp(base + tint_b, 0, 255));
        }

    const float jit = std::clamp(style.glyph_jitter, 0.0f, 1.0f);
    std::uniform_real_distribution<float> u01(0.0f, 1.0f);
    for (size_t i = 0; i < text.size(); ++i) {
        const Glyph5x7& g = glyph_for(text[i]);
        int ox = margin + int(i) * cell_w * s;
        int oy = s;  // one cell unit of top padding
        int wobble = 0;
        if (jit > 0.0f) {
            int amp = std::max(1, int(std::lround(jit * s)));
            wobble = std::uniform_int_distribution<int>(-amp, amp)(rng);
        }
        for (int gy = 0; gy < 7; ++gy)
            for (int gx = 0; gx < 5; ++gx) {
                bool ink = g.ink(gx, gy);
                if (jit > 0.0f) {
                    if (ink && u01(rng) < 0.18f * jit) continue;  // stroke dropout
                    // Edge bleed: background cells next to ink may fill in.
                    if (!ink && !(u01(rng) < 0.15f * jit &&
                                  ((gx > 0 && g.ink(gx - 1, gy)) ||
                                   (gx < 4 && g.ink(gx + 1, gy)) ||
                                   (gy > 0 && g.ink(gx, gy - 1)) ||
                                   (gy < 6 && g.ink(gx, gy + 1)))))
                        continue;
                } else if (!ink) {
                    continue;
                }
                for (int dy = 0; dy < s; ++dy)
                    for (int dx = 0; dx < s; ++dx) {
                        int x = ox + gx * s + dx;
                        int y = std::clamp(oy + wobble + gy * s + dy, 0, height - 1);
                        img.at(x, y, 0) = uint8_t(std::clamp(fg + tint_r, 0, 255));
                        img.at(x, y, 1) = uint8_t(std::clamp(fg + tint_g, 0, 255));
                        img.at(x, y, 2) = uint8_t(std::clamp(fg + tint_b, 0, 255));
                    }
            }
    }
    return img;
}

inline LineGeometry render_geometry(const std::string& text, const RenderStyle& style) {
    (void)text;
    LineGeometry g;
    g.advance_px = 6 * style.scale;
    g.margin_px = style.margin_cells * 6 * style.scale;
    g.height_px = 9 * style.scale;
    return g;
}

/// Render a line and auto-annotate date spans by grammar matching.
inline std::pair<LineSample, ImageU8> synthesize_line(const std::string& text,
                                                      const RenderStyle& style, uint64_t seed) {
    ImageU8 img = render_line(text, style, seed);
    LineSample s;
    s.transcript = text;
    s.date_spans = annotate_dates(text);
    s.geometry = render_geometry(text, style);
    return {std::move(s), std::move(img)};
}

// ---------------------------------------------------------------------------
// Gaussian noise
// ---------------------------------------------------------------------------

struct NoiseSpec {
    double level = 0.0;  // fraction of full dynamic range (sigma = level * 255)
    uint64_t seed = 0;
};

inline ImageU8 add_gaussian_noise(const ImageU8& img, const NoiseSpec& spec) {
    if (spec.level < 0.0 || spec.level > 1.0)
        throw std::invalid_argument("noise level must be in [0,1]");
    if (spec.level == 0.0) return img;
    ImageU8 out = img;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.level * 255.0);
    for (auto& v : out.data) {
        double nv = double(v) + noise(rng);
        v = uint8_t(std::clamp<long>(std::lround(nv), 0, 255));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Corpus generator
// ---------------------------------------------------------------------------

struct SynthConfig {
    int lines = 200;
    double date_fraction = 0.5;
    uint64_t seed = 1;
    RenderStyle style;
    // Optional per-line glyph-scale variation, as in video frames that mix
    // text sizes. Empty = render every line at style.scale.
    std::vector<int> scale_jitter;
    double train_fraction = 0.6;
    double validation_fraction = 0.1;
    int max_filler_words = 2;  // words around the date / per non-date line
};

namespace detail {

inline const std::vector<std::string>& filler_lexicon() {
    // Month-free word list so non-date lines cannot form semi-numeric dates.
    static const std::vector<std::string> words = {
        "news",   "update", "report", "today",  "live",  "event",  "world",
        "sports", "video",  "exam",   "result", "team",  "score",  "final",
        "show",   "tour",   "open",   "from",   "with",  "this",   "channel",
        "breaking", "match", "daily", "Delhi",  "India", "online", "press"};
    return words;
}

inline std::string random_date_text(DateModel m, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> day_d(1, 31), month_d(1, 12), coin(0, 1);
    auto two = [](int v) {
        std::string s = std::to_string(v);
        return s.size() == 1 ? "0" + s : s;
    };
    auto suffix_for = [](int d) -> std::string {
        int last = d % 10, tens = d % 100;
        if (tens >= 11 && tens <= 13) return "th";
        if (last == 1) return "st";
        if (last == 2) return "nd";
        if (last == 3) return "rd";
        return "th";
    };
    int day = day_d(rng), month = month_d(rng);
    std::uniform_int_distribution<int> y2(70, 99), y4(1970, 2025);
    switch (m) {
        case DateModel::A: {
            const char puncts[] = {'/', '-', '.'};
            char p = puncts[std::uniform_int_distribution<int>(0, 2)(rng)];
            std::string d = coin(rng) ? two(day) : std::to_string(day);
            std::string mo = coin(rng) ? two(month) : std::to_string(month);
            std::string y = coin(rng) ? std::to_string(y4(rng)) : two(y2(rng) % 100);
            if (coin(rng)) std::swap(d, mo);  // both dd/mm and mm/dd occur
            return d + p + mo + p + y;
        }
        case DateModel::B: {
            // Year, when present, always follows ", " so that no Model C
            // substring ("month space digits") can be carved out of it.
            static const std::vector<std::string> months = month_tokens_title();
            std::string mo = months[std::uniform_int_distribution<size_t>(
                0, months.size() - 1)(rng)];
            if (coin(rng))
                std::transform(mo.begin(), mo.end(), mo.begin(),
                               [](unsigned char c) { return char(std::toupper(c)); });
            std::string d = coin(rng) ? two(day) : std::to_string(day);
            std::string text = d;
            if (coin(rng) && d[0] != '0') text += suffix_for(day);
            text += " " + mo;
            if (coin(rng))
                text += ", " + (coin(rng) ? std::to_string(y4(rng)) : two(y2(rng) % 100));
            return text;
        }
        case DateModel::C: {
            static const std::vector<std::string> months = month_tokens_title();
            std::string mo = months[std::uniform_int_distribution<size_t>(
                0, months.size() - 1)(rng)];
            if (coin(rng))
                std::transform(mo.begin(), mo.end(), mo.begin(),
                               [](unsigned char c) { return char(std::toupper(c)); });
            std::string d = coin(rng) ? two(day) : std::to_string(day);
            std::string text = mo;
            bool abbreviated = mo.size() <= 4;
            text += (abbreviated && coin(rng)) ? ". " : " ";
            text += d;
            if (coin(rng) && d[0] != '0') text += suffix_for(day);
            if (coin(rng))
                text += ", " + (coin(rng) ? std::to_string(y4(rng)) : two(y2(rng) % 100));
            return text;
        }
    }
    throw std::logic_error("unreachable");
}

inline std::string random_words(int count, std::mt19937_64& rng) {
    const auto& lex = filler_lexicon();
    std::uniform_int_distribution<size_t> pick(0, lex.size() - 1);
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (!out.empty()) out += ' ';
        out += lex[pick(rng)];
    }
    return out;
}

}  // namespace detail

/// Generate a seeded corpus under `out_dir`: PNG line images plus
/// `manifest.jsonl`. Date-bearing lines rotate through Models A/B/C.
inline CorpusManifest synthesize_corpus(const SynthConfig& cfg,
                                        const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir / "images");
    CorpusManifest m;
    m.root = out_dir;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<int> word_count(1, std::max(1, cfg.max_filler_words));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int model_cycle = 0;

    for (int i = 0; i < cfg.lines; ++i) {
        bool with_date = unit(rng) < cfg.date_fraction;
        std::string text;
        if (with_date) {
            DateModel model = static_cast<DateModel>(model_cycle++ % 3);
            std::string date = detail::random_date_text(model, rng);
            std::string before = detail::random_words(word_count(rng), rng);
            std::string after = detail::random_words(word_count(rng) - 1, rng);
            text = before + " " + date + (after.empty() ? "" : " " + after);
        } else {
            text = detail::random_words(word_count(rng) + 1, rng);
            std::uniform_int_distribution<int> num(1, 9999);
            if (unit(rng) < 0.3) text += " " + std::to_string(num(rng));
        }

        RenderStyle style = cfg.style;
        if (!cfg.scale_jitter.empty())
            style.scale = cfg.scale_jitter[std::uniform_int_distribution<size_t>(
                0, cfg.scale_jitter.size() - 1)(rng)];
        auto [sample, img] = synthesize_line(text, style, rng());
        char buf[32];
        std::snprintf(buf, sizeof(buf), "line_%05d", i);
        sample.id = buf;
        sample.image_path = std::string("images/") + buf + ".png";
        double u = double(i) / std::max(1, cfg.lines);
        sample.partition = u < cfg.train_fraction ? Partition::Train
                           : u < cfg.train_fraction + cfg.validation_fraction
                               ? Partition::Validation
                               : Partition::Test;
        png::save((out_dir / sample.image_path).string(), img);
        m.samples.push_back(std::move(sample));
    }
    save_manifest(m, out_dir / "manifest.jsonl");
    return m;
}

}  // namespace datespot

#endif
