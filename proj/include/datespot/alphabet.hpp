#ifndef DATESPOT_ALPHABET_HPP
#define DATESPOT_ALPHABET_HPP

// Symbol inventory shared by the corpus, the HMM units and the grammars.
// Units are identified by string labels so that single characters and
// shape-code primitives live in the same namespace.

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace datespot {

class Alphabet {
public:
    Alphabet() = default;
    explicit Alphabet(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
        for (size_t i = 0; i < symbols_.size(); ++i) index_[symbols_[i]] = int(i);
        if (index_.size() != symbols_.size())
            throw std::invalid_argument("alphabet has duplicate symbols");
    }

    // 62 alphanumerics + '/', '-', '.' + space, plus comma: the character
    // inventory used for rendering, transcripts and character HMMs.
    static Alphabet characters() {
        std::vector<std::string> s;
        for (char c = '0'; c <= '9'; ++c) s.emplace_back(1, c);
        for (char c = 'A'; c <= 'Z'; ++c) s.emplace_back(1, c);
        for (char c = 'a'; c <= 'z'; ++c) s.emplace_back(1, c);
        s.emplace_back("/");
        s.emplace_back("-");
        s.emplace_back(".");
        s.emplace_back(" ");
        s.emplace_back(",");
        return Alphabet(std::move(s));
    }

    int size() const { return int(symbols_.size()); }
    const std::string& symbol(int i) const { return symbols_[size_t(i)]; }
    const std::vector<std::string>& symbols() const { return symbols_; }

    bool contains(const std::string& s) const { return index_.count(s) != 0; }
    int index_of(const std::string& s) const {
        auto it = index_.find(s);
        if (it == index_.end()) throw std::invalid_argument("symbol not in alphabet: '" + s + "'");
        return it->second;
    }

    /// Split a character transcript into per-character unit labels.
    std::vector<std::string> split_transcript(const std::string& text) const {
        std::vector<std::string> out;
        out.reserve(text.size());
        for (char c : text) {
            std::string s(1, c);
            if (!contains(s)) throw std::invalid_argument("character not in alphabet: '" + s + "'");
            out.push_back(std::move(s));
        }
        return out;
    }

private:
    std::vector<std::string> symbols_;
    std::map<std::string, int> index_;
};

}  // namespace datespot

#endif
