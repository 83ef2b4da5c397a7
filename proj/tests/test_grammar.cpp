#include <doctest.h>

#include <random>

#include "datespot/grammar.hpp"

using namespace datespot;

TEST_CASE("numeric model accepts well-formed dates and rejects malformed ones") {
    CHECK(matches_full(DateModel::A, "04/18/2014"));
    CHECK(matches_full(DateModel::A, "4-5-99"));
    CHECK(matches_full(DateModel::A, "31.12.99"));
    CHECK(matches_full(DateModel::A, "35/13/2001"));  // syntactic only; range filter rejects
    CHECK_FALSE(matches_full(DateModel::A, "123/4/99"));
    CHECK_FALSE(matches_full(DateModel::A, "4/5"));
    CHECK_FALSE(matches_full(DateModel::A, "04/18/204"));
    CHECK_FALSE(matches_full(DateModel::A, "04 18 2014"));
}

TEST_CASE("day-first model handles suffixes and optional years") {
    CHECK(matches_full(DateModel::B, "16 MAY"));
    CHECK(matches_full(DateModel::B, "3rd June 2014"));
    CHECK(matches_full(DateModel::B, "21 September, 1999"));
    CHECK(matches_full(DateModel::B, "5 Sept 99"));
    CHECK_FALSE(matches_full(DateModel::B, "May 16"));
    CHECK_FALSE(matches_full(DateModel::B, "16MAY"));
    CHECK_FALSE(matches_full(DateModel::B, "16 Mayhem"));
}

TEST_CASE("month-first model handles separators, suffixes and optional years") {
    CHECK(matches_full(DateModel::C, "May 16, 2014"));
    CHECK(matches_full(DateModel::C, "May. 3"));
    CHECK(matches_full(DateModel::C, "DEC 25 2014"));
    CHECK(matches_full(DateModel::C, "June 1st"));
    CHECK_FALSE(matches_full(DateModel::C, "16 May"));
    CHECK_FALSE(matches_full(DateModel::C, "Maybe 16"));
}

TEST_CASE("annotation finds the date but not the time in a timestamp line") {
    auto spans = annotate_dates("shot at 04/18/2014 14:45 sharp");
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].model == DateModel::A);
    CHECK(spans[0].start == 8);
    CHECK(spans[0].end == 18);
}

TEST_CASE("annotation does not clip digit runs") {
    CHECK(annotate_dates("serial 123/45/678 code").empty());
    CHECK(annotate_dates("x04/18/2014").empty());
}

TEST_CASE("annotation keeps non-overlapping spans from multiple models") {
    auto spans = annotate_dates("from 04/18/2014 to 3rd June 2015 maybe");
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].model == DateModel::A);
    CHECK(spans[1].model == DateModel::B);
}

TEST_CASE("symbol networks agree with the regular expressions on samples") {
    std::vector<std::pair<DateModel, std::string>> samples = {
        {DateModel::A, "04/18/2014"}, {DateModel::A, "4-5-99"},
        {DateModel::B, "16 MAY"},     {DateModel::B, "3rd June 2014"},
        {DateModel::C, "May 16, 2014"}, {DateModel::C, "Dec. 25"},
    };
    for (const auto& [m, text] : samples) {
        SymbolNet net = build_date_symbolnet(m);
        CHECK(symbolnet_accepts(net, text) == matches_full(m, text));
    }
    SymbolNet a = build_date_symbolnet(DateModel::A);
    CHECK_FALSE(symbolnet_accepts(a, std::string("04/18")));
    CHECK_FALSE(symbolnet_accepts(a, std::string("abc")));
}

TEST_CASE("numeric network and regex agree on random strings") {
    SymbolNet net = build_date_symbolnet(DateModel::A);
    std::mt19937_64 rng(11);
    const std::string sigma = "0123456789/-.";
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<size_t> pick(0, sigma.size() - 1);
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        int n = len(rng);
        for (int j = 0; j < n; ++j) s += sigma[pick(rng)];
        CHECK(symbolnet_accepts(net, s) == matches_full(DateModel::A, s));
    }
}

TEST_CASE("shape recode expands characters to primitive labels") {
    auto codes = recode("Hello");
    std::vector<std::string> expect = {"l", "l", "e", "l", "l", "O"};
    CHECK(codes == expect);
    CHECK(recode("18") == std::vector<std::string>{"I", "B"});
    CHECK(recode("/ ,") == std::vector<std::string>{"/", " ", ","});
}

TEST_CASE("shape-coded network accepts exactly the recodings of accepted strings") {
    for (DateModel m : {DateModel::A, DateModel::B, DateModel::C}) {
        SymbolNet chars = build_date_symbolnet(m);
        SymbolNet shapes = shape_code_symbolnet(chars);
        for (const std::string& text :
             {std::string("04/18/2014"), std::string("16 MAY"), std::string("May 16, 2014")}) {
            if (!matches_full(m, text)) continue;
            CHECK(symbolnet_accepts(shapes, recode(text)));
        }
    }
    SymbolNet shapes_a = shape_code_symbolnet(build_date_symbolnet(DateModel::A));
    CHECK_FALSE(symbolnet_accepts(shapes_a, recode("04/18")));
}

TEST_CASE("shape alphabet covers every primitive produced by recoding") {
    Alphabet shapes = shape_alphabet();
    for (const auto& [c, code] : shape_code_map())
        for (char p : code) CHECK(shapes.contains(std::string(1, p)));
}

TEST_CASE("range filter enforces day and month limits") {
    CHECK_FALSE(range_postfilter("35/13/2001"));
    CHECK(range_postfilter("31/12/99"));
    CHECK(range_postfilter("06/05/1994"));
    CHECK(range_postfilter("12/25/2014"));  // month-day reading is valid
    CHECK_FALSE(range_postfilter("13/32/99"));
    CHECK(range_postfilter("3rd June 2014"));
    CHECK_FALSE(range_postfilter("32nd June 2014"));
    CHECK(range_postfilter("May 31"));
    CHECK_FALSE(range_postfilter("May 55"));
    CHECK_FALSE(range_postfilter("not a date"));
}
