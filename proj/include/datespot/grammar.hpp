#ifndef DATESPOT_GRAMMAR_HPP
#define DATESPOT_GRAMMAR_HPP

// Date grammars: the three date models as regular expressions (symbolic
// matcher) and as symbol-level networks (compiled into HMM decoding
// networks), the shape-code recode table, and the day/month range filter.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "datespot/alphabet.hpp"

namespace datespot {

enum class DateModel { A, B, C };

inline char model_tag(DateModel m) {
    switch (m) {
        case DateModel::A: return 'A';
        case DateModel::B: return 'B';
        case DateModel::C: return 'C';
    }
    return '?';
}

inline DateModel model_from_tag(char t) {
    switch (t) {
        case 'A': return DateModel::A;
        case 'B': return DateModel::B;
        case 'C': return DateModel::C;
    }
    throw std::invalid_argument(std::string("unknown date model tag: ") + t);
}

struct TextSpan {
    int start = 0;  // inclusive char index
    int end = 0;    // exclusive char index
    DateModel model = DateModel::A;
};

// ---------------------------------------------------------------------------
// Lexicons
// ---------------------------------------------------------------------------

/// Month tokens in Title case; UPPER variants are derived.
inline const std::vector<std::string>& month_tokens_title() {
    static const std::vector<std::string> months = {
        // Full names first so that alternation prefers the longest token.
        "January", "February", "March", "April", "May", "June", "July",
        "August", "September", "October", "November", "December",
        "Sept", "Jan", "Feb", "Mar", "Apr", "Jun", "Jul", "Aug", "Sep",
        "Oct", "Nov", "Dec"};
    return months;
}

inline std::vector<std::string> month_tokens_all() {
    std::vector<std::string> all;
    for (const auto& m : month_tokens_title()) {
        all.push_back(m);
        std::string upper = m;
        std::transform(upper.begin(), upper.end(), upper.begin(),
                       [](unsigned char c) { return char(std::toupper(c)); });
        if (upper != m) all.push_back(upper);
    }
    // Longest-first keeps both regex alternation and maximal matching honest
    // ("Sept" must win over "Sep").
    std::stable_sort(all.begin(), all.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return all;
}

inline const std::vector<std::string>& suffix_tokens() {
    static const std::vector<std::string> s = {"st", "nd", "rd", "th",
                                               "ST", "ND", "RD", "TH"};
    return s;
}

// ---------------------------------------------------------------------------
// Regular-expression matcher (symbolic oracle for the HMM networks)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string month_alternation() {
    std::string out;
    for (const auto& m : month_tokens_all()) {
        if (!out.empty()) out += '|';
        out += m;
    }
    return out;
}

inline const std::regex& model_regex(DateModel m) {
    static const std::regex a(R"(([0-9]{2}|[0-9])[/.\-]([0-9]{2}|[0-9])[/.\-]([0-9]{4}|[0-9]{2}))");
    static const std::regex b("([0-9]{2}|[0-9])(st|nd|rd|th|ST|ND|RD|TH)? (" +
                              month_alternation() +
                              ")(?:(?:, |,| )([0-9]{4}|[0-9]{2}))?");
    static const std::regex c("(" + month_alternation() +
                              ")(?:\\. |\\.| )([0-9]{2}|[0-9])(st|nd|rd|th|ST|ND|RD|TH)?"
                              "(?:(?:, |,| )([0-9]{4}|[0-9]{2}))?");
    switch (m) {
        case DateModel::A: return a;
        case DateModel::B: return b;
        case DateModel::C: return c;
    }
    throw std::logic_error("unreachable");
}

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

/// Full-string membership in a model's language.
inline bool matches_full(DateModel m, const std::string& text) {
    return std::regex_match(text, detail::model_regex(m));
}

/// All maximal substrings of `text` in the model's language. A match is kept
/// only if it is not flanked by alphanumerics (avoids clipping longer digit
/// or letter runs). Matches are found left to right and do not overlap.
inline std::vector<TextSpan> match_text(DateModel m, const std::string& text) {
    const std::regex& re = detail::model_regex(m);
    std::vector<TextSpan> out;
    size_t pos = 0;
    while (pos < text.size()) {
        std::smatch match;
        std::string rest = text.substr(pos);
        if (!std::regex_search(rest, match, re, std::regex_constants::match_continuous)) {
            ++pos;
            continue;
        }
        size_t start = pos;
        size_t end = pos + size_t(match.length(0));
        bool left_ok = start == 0 || !detail::is_alnum(text[start - 1]);
        bool right_ok = end == text.size() || !detail::is_alnum(text[end]);
        if (left_ok && right_ok && end > start) {
            out.push_back({int(start), int(end), m});
            pos = end;
        } else {
            ++pos;
        }
    }
    return out;
}

/// Spans for all three models, non-overlapping (longer spans win ties).
inline std::vector<TextSpan> annotate_dates(const std::string& text) {
    std::vector<TextSpan> all;
    for (DateModel m : {DateModel::A, DateModel::B, DateModel::C}) {
        auto spans = match_text(m, text);
        all.insert(all.end(), spans.begin(), spans.end());
    }
    std::sort(all.begin(), all.end(), [](const TextSpan& a, const TextSpan& b) {
        if (a.start != b.start) return a.start < b.start;
        return (a.end - a.start) > (b.end - b.start);
    });
    std::vector<TextSpan> kept;
    for (const auto& s : all) {
        if (kept.empty() || s.start >= kept.back().end) kept.push_back(s);
    }
    return kept;
}

// ---------------------------------------------------------------------------
// Symbol-level networks (compiled against character HMMs elsewhere)
// ---------------------------------------------------------------------------

/// Epsilon-NFA over unit labels. Node 0 is the start; `accept` marks finals.
struct SymbolNet {
    struct Edge {
        int from = 0;
        int to = 0;
        std::string label;  // empty = epsilon
    };
    int num_nodes = 0;
    std::vector<Edge> edges;
    int start = 0;
    int accept = 0;

    int add_node() { return num_nodes++; }
    void add_edge(int from, int to, std::string label = {}) {
        edges.push_back({from, to, std::move(label)});
    }
};

namespace detail {

// Thompson-style fragment builder.
struct Frag {
    int in = 0;
    int out = 0;
};

struct NetBuilder {
    SymbolNet net;

    Frag sym(const std::string& label) {
        Frag f{net.add_node(), net.add_node()};
        net.add_edge(f.in, f.out, label);
        return f;
    }
    Frag word(const std::string& token) {
        Frag f{net.add_node(), net.add_node()};
        int cur = f.in;
        for (size_t i = 0; i < token.size(); ++i) {
            int next = (i + 1 == token.size()) ? f.out : net.add_node();
            net.add_edge(cur, next, std::string(1, token[i]));
            cur = next;
        }
        return f;
    }
    Frag seq(const Frag& a, const Frag& b) {
        net.add_edge(a.out, b.in);
        return {a.in, b.out};
    }
    Frag alt(const std::vector<Frag>& parts) {
        Frag f{net.add_node(), net.add_node()};
        for (const auto& p : parts) {
            net.add_edge(f.in, p.in);
            net.add_edge(p.out, f.out);
        }
        return f;
    }
    Frag opt(const Frag& a) {
        Frag f{net.add_node(), net.add_node()};
        net.add_edge(f.in, a.in);
        net.add_edge(a.out, f.out);
        net.add_edge(f.in, f.out);
        return f;
    }

    Frag digit() {
        std::vector<Frag> ds;
        for (char c = '0'; c <= '9'; ++c) ds.push_back(sym(std::string(1, c)));
        return alt(ds);
    }
    Frag digits(int n) {
        Frag f = digit();
        for (int i = 1; i < n; ++i) f = seq(f, digit());
        return f;
    }
    Frag day() { return alt({digits(2), digits(1)}); }
    Frag year() { return alt({digits(4), digits(2)}); }
    Frag punct() { return alt({sym("/"), sym("-"), sym(".")}); }
    Frag space() { return sym(" "); }
    Frag comma() { return sym(","); }
    Frag suffix() {
        std::vector<Frag> parts;
        for (const auto& s : suffix_tokens()) parts.push_back(word(s));
        return alt(parts);
    }
    Frag month() {
        std::vector<Frag> parts;
        for (const auto& m : month_tokens_all()) parts.push_back(word(m));
        return alt(parts);
    }
    // (comma space? | space) year
    Frag year_part() {
        Frag sep = alt({seq(comma(), opt(space())), space()});
        return seq(sep, year());
    }
};

}  // namespace detail

/// Symbol network for one date model over the character alphabet.
inline SymbolNet build_date_symbolnet(DateModel m) {
    detail::NetBuilder b;
    detail::Frag f{};
    switch (m) {
        case DateModel::A:
            f = b.seq(b.seq(b.seq(b.seq(b.day(), b.punct()), b.day()), b.punct()), b.year());
            break;
        case DateModel::B:
            f = b.seq(b.seq(b.seq(b.seq(b.day(), b.opt(b.suffix())), b.space()), b.month()),
                      b.opt(b.year_part()));
            break;
        case DateModel::C: {
            // month (". " | "." | " ") day suffix? yearpart?
            detail::Frag sep = b.alt({b.seq(b.sym("."), b.opt(b.space())), b.space()});
            f = b.seq(b.seq(b.seq(b.seq(b.month(), sep), b.day()), b.opt(b.suffix())),
                      b.opt(b.year_part()));
            break;
        }
    }
    b.net.start = f.in;
    b.net.accept = f.out;
    return b.net;
}

/// NFA simulation: does the network accept exactly this label sequence?
inline bool symbolnet_accepts(const SymbolNet& net, const std::vector<std::string>& labels) {
    std::vector<std::vector<const SymbolNet::Edge*>> out(size_t(net.num_nodes));
    for (const auto& e : net.edges) out[size_t(e.from)].push_back(&e);

    auto closure = [&](std::set<int>& states) {
        std::vector<int> stack(states.begin(), states.end());
        while (!stack.empty()) {
            int s = stack.back();
            stack.pop_back();
            for (const auto* e : out[size_t(s)])
                if (e->label.empty() && states.insert(e->to).second) stack.push_back(e->to);
        }
    };

    std::set<int> cur = {net.start};
    closure(cur);
    for (const auto& label : labels) {
        std::set<int> next;
        for (int s : cur)
            for (const auto* e : out[size_t(s)])
                if (e->label == label) next.insert(e->to);
        if (next.empty()) return false;
        closure(next);
        cur = std::move(next);
    }
    return cur.count(net.accept) != 0;
}

inline bool symbolnet_accepts(const SymbolNet& net, const std::string& text) {
    std::vector<std::string> labels;
    for (char c : text) labels.emplace_back(1, c);
    return symbolnet_accepts(net, labels);
}

// ---------------------------------------------------------------------------
// Shape coding (Table-style merge of visually confusable characters)
// ---------------------------------------------------------------------------

/// Per-character shape codes; each alphanumeric maps to 1-2 primitives.
inline const std::map<char, std::string>& shape_code_map() {
    static const std::map<char, std::string> table = {
        {'A', "A"},  {'B', "B"},  {'C', "C"},  {'D', "O"},  {'E', "E"},
        {'F', "F"},  {'G', "C"},  {'H', "ll"}, {'I', "l"},  {'J', "l"},
        {'K', "lc"}, {'L', "l"},  {'M', "ll"}, {'N', "ll"}, {'O', "O"},
        {'P', "P"},  {'Q', "Q"},  {'R', "R"},  {'S', "S"},  {'T', "l"},
        {'U', "ll"}, {'V', "ll"}, {'W', "ll"}, {'X', "uc"}, {'Y', "ll"},
        {'Z', "Z"},
        {'a', "a"},  {'b', "lo"}, {'c', "c"},  {'d', "ol"}, {'e', "e"},
        {'f', "f"},  {'g', "g"},  {'h', "I"},  {'i', "i"},  {'j', "j"},
        {'k', "lc"}, {'l', "l"},  {'m', "m"},  {'n', "m"},  {'o', "O"},
        {'p', "no"}, {'q', "on"}, {'r', "r"},  {'s', "s"},  {'t', "lc"},
        {'u', "v"},  {'v', "v"},  {'w', "vv"}, {'x', "uc"}, {'y', "y"},
        {'z', "z"},
        {'0', "O"},  {'1', "I"},  {'2', "2"},  {'3', "3"},  {'4', "O"},
        {'5', "5"},  {'6', "6"},  {'7', "l"},  {'8', "B"},  {'9', "9"},
    };
    return table;
}

/// Shape code of one character as unit labels. Punctuation, space and comma
/// pass through unchanged.
inline std::vector<std::string> shape_code(char c) {
    if (c == '/' || c == '-' || c == '.' || c == ' ' || c == ',')
        return {std::string(1, c)};
    auto it = shape_code_map().find(c);
    if (it == shape_code_map().end())
        throw std::invalid_argument(std::string("no shape code for character '") + c + "'");
    std::vector<std::string> out;
    for (char p : it->second) out.emplace_back(1, p);
    return out;
}

inline std::vector<std::string> recode(const std::string& transcript) {
    std::vector<std::string> out;
    for (char c : transcript) {
        auto codes = shape_code(c);
        out.insert(out.end(), codes.begin(), codes.end());
    }
    return out;
}

/// Alphabet of shape primitives plus pass-through punctuation.
inline Alphabet shape_alphabet() {
    std::set<std::string> prims;
    for (const auto& [c, code] : shape_code_map())
        for (char p : code) prims.insert(std::string(1, p));
    for (const char* p : {"/", "-", ".", " ", ","}) prims.insert(p);
    return Alphabet(std::vector<std::string>(prims.begin(), prims.end()));
}

/// Rewrite a symbol network over characters into one over shape primitives.
inline SymbolNet shape_code_symbolnet(const SymbolNet& net) {
    SymbolNet out;
    out.num_nodes = net.num_nodes;
    out.start = net.start;
    out.accept = net.accept;
    for (const auto& e : net.edges) {
        if (e.label.empty()) {
            out.add_edge(e.from, e.to);
            continue;
        }
        auto codes = shape_code(e.label[0]);
        int cur = e.from;
        for (size_t i = 0; i < codes.size(); ++i) {
            int next = (i + 1 == codes.size()) ? e.to : out.add_node();
            out.add_edge(cur, next, codes[i]);
            cur = next;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Semantic range filter (day <= 31, month <= 12)
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<int> month_number(const std::string& token) {
    static const std::vector<std::vector<std::string>> names = {
        {"January", "Jan"},  {"February", "Feb"}, {"March", "Mar"},
        {"April", "Apr"},    {"May"},             {"June", "Jun"},
        {"July", "Jul"},     {"August", "Aug"},   {"September", "Sep", "Sept"},
        {"October", "Oct"},  {"November", "Nov"}, {"December", "Dec"}};
    std::string lower = token;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    for (size_t i = 0; i < names.size(); ++i)
        for (const auto& n : names[i]) {
            std::string nl = n;
            std::transform(nl.begin(), nl.end(), nl.begin(),
                           [](unsigned char c) { return char(std::tolower(c)); });
            if (nl == lower) return int(i) + 1;
        }
    return std::nullopt;
}

inline bool valid_day(int d) { return d >= 1 && d <= 31; }
inline bool valid_month(int m) { return m >= 1 && m <= 12; }

}  // namespace detail

/// Accepts a syntactically matched date span iff its day/month fields can be
/// read as in-range values. Ambiguous d/m order (Model A) accepts if either
/// assignment is valid. Unparseable input is rejected.
inline bool range_postfilter(const std::string& span_text) {
    std::smatch m;
    if (std::regex_match(span_text, m, detail::model_regex(DateModel::A))) {
        int f1 = std::stoi(m[1].str());
        int f2 = std::stoi(m[2].str());
        bool dm = detail::valid_day(f1) && detail::valid_month(f2);
        bool md = detail::valid_month(f1) && detail::valid_day(f2);
        return dm || md;
    }
    if (std::regex_match(span_text, m, detail::model_regex(DateModel::B)))
        return detail::valid_day(std::stoi(m[1].str()));
    if (std::regex_match(span_text, m, detail::model_regex(DateModel::C)))
        return detail::valid_day(std::stoi(m[2].str()));
    return false;
}

}  // namespace datespot

#endif
