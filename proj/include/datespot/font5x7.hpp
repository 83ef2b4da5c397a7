#ifndef DATESPOT_FONT5X7_HPP
#define DATESPOT_FONT5X7_HPP

// Embedded 5x7 bitmap glyphs for the supported character set. Each glyph is
// seven rows of five cells, '#' marking an ink pixel. Having the glyphs in
// the source keeps corpus synthesis free of any font-file dependency.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace datespot {

struct Glyph5x7 {
    std::array<const char*, 7> rows;
    bool ink(int x, int y) const { return rows[size_t(y)][size_t(x)] == '#'; }
};

inline const std::map<char, Glyph5x7>& font5x7() {
    static const std::map<char, Glyph5x7> table = {
        {'0', {{" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "}}},
        {'1', {{"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}}},
        {'2', {{" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"}}},
        {'3', {{"#####", "   # ", "  #  ", "   # ", "    #", "#   #", " ### "}}},
        {'4', {{"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "}}},
        {'5', {{"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "}}},
        {'6', {{"  ## ", " #   ", "#    ", "#### ", "#   #", "#   #", " ### "}}},
        {'7', {{"#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "}}},
        {'8', {{" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "}}},
        {'9', {{" ### ", "#   #", "#   #", " ####", "    #", "   # ", " ##  "}}},
        {'A', {{" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}}},
        {'B', {{"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "}}},
        {'C', {{" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "}}},
        {'D', {{"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "}}},
        {'E', {{"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"}}},
        {'F', {{"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "}}},
        {'G', {{" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"}}},
        {'H', {{"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}}},
        {'I', {{" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}}},
        {'J', {{"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "}}},
        {'K', {{"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"}}},
        {'L', {{"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"}}},
        {'M', {{"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"}}},
        {'N', {{"#   #", "##  #", "# # #", "#  ##", "#   #", "#   #", "#   #"}}},
        {'O', {{" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}}},
        {'P', {{"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "}}},
        {'Q', {{" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"}}},
        {'R', {{"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"}}},
        {'S', {{" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "}}},
        {'T', {{"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "}}},
        {'U', {{"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}}},
        {'V', {{"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "}}},
        {'W', {{"#   #", "#   #", "#   #", "# # #", "# # #", "## ##", "#   #"}}},
        {'X', {{"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"}}},
        {'Y', {{"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "}}},
        {'Z', {{"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"}}},
        {'a', {{"     ", "     ", " ### ", "    #", " ####", "#   #", " ####"}}},
        {'b', {{"#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#### "}}},
        {'c', {{"     ", "     ", " ####", "#    ", "#    ", "#    ", " ####"}}},
        {'d', {{"    #", "    #", " ####", "#   #", "#   #", "#   #", " ####"}}},
        {'e', {{"     ", "     ", " ### ", "#   #", "#####", "#    ", " ### "}}},
        {'f', {{"  ###", " #   ", "#### ", " #   ", " #   ", " #   ", " #   "}}},
        {'g', {{"     ", " ####", "#   #", "#   #", " ####", "    #", " ### "}}},
        {'h', {{"#    ", "#    ", "#### ", "#   #", "#   #", "#   #", "#   #"}}},
        {'i', {{"  #  ", "     ", " ##  ", "  #  ", "  #  ", "  #  ", " ### "}}},
        {'j', {{"   # ", "     ", "  ## ", "   # ", "   # ", "#  # ", " ##  "}}},
        {'k', {{"#    ", "#    ", "#  # ", "# #  ", "##   ", "# #  ", "#  # "}}},
        {'l', {{" ##  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}}},
        {'m', {{"     ", "     ", "## # ", "# # #", "# # #", "# # #", "# # #"}}},
        {'n', {{"     ", "     ", "#### ", "#   #", "#   #", "#   #", "#   #"}}},
        {'o', {{"     ", "     ", " ### ", "#   #", "#   #", "#   #", " ### "}}},
        {'p', {{"     ", "#### ", "#   #", "#   #", "#### ", "#    ", "#    "}}},
        {'q', {{"     ", " ####", "#   #", "#   #", " ####", "    #", "    #"}}},
        {'r', {{"     ", "     ", "# ## ", "##   ", "#    ", "#    ", "#    "}}},
        {'s', {{"     ", "     ", " ####", "#    ", " ### ", "    #", "#### "}}},
        {'t', {{" #   ", " #   ", "#### ", " #   ", " #   ", " #  #", "  ## "}}},
        {'u', {{"     ", "     ", "#   #", "#   #", "#   #", "#  ##", " ## #"}}},
        {'v', {{"     ", "     ", "#   #", "#   #", "#   #", " # # ", "  #  "}}},
        {'w', {{"     ", "     ", "#   #", "#   #", "# # #", "# # #", " # # "}}},
        {'x', {{"     ", "     ", "#   #", " # # ", "  #  ", " # # ", "#   #"}}},
        {'y', {{"     ", "#   #", "#   #", " ####", "    #", "#   #", " ### "}}},
        {'z', {{"     ", "     ", "#####", "   # ", "  #  ", " #   ", "#####"}}},
        {'/', {{"    #", "    #", "   # ", "  #  ", " #   ", "#    ", "#    "}}},
        {'-', {{"     ", "     ", "     ", "#####", "     ", "     ", "     "}}},
        {'.', {{"     ", "     ", "     ", "     ", "     ", " ##  ", " ##  "}}},
        {',', {{"     ", "     ", "     ", "     ", " ##  ", " ##  ", " #   "}}},
        {' ', {{"     ", "     ", "     ", "     ", "     ", "     ", "     "}}},
    };
    return table;
}

inline const Glyph5x7& glyph_for(char c) {
    const auto& t = font5x7();
    auto it = t.find(c);
    if (it == t.end())
        throw std::invalid_argument(std::string("no glyph for character '") + c + "'");
    return it->second;
}

inline bool has_glyph(char c) { return font5x7().count(c) != 0; }

}  // namespace datespot

#endif
