#include <gtest/gtest.h>

#include "t2s/statements.hpp"

using namespace t2s;

namespace {

std::vector<Statement> parse(const std::string& body) {
    return parse_statements(csv::expect_header(csv::parse(body), statements_header(), "test"));
}

std::vector<GroundTruth> parse_gt(const std::string& body) {
    return parse_ground_truth(csv::expect_header(csv::parse(body), {"party", "statement_nr", "label"}, "test"));
}

}  // namespace

TEST(Csv, QuotedFieldsAndCrlf) {
    const auto recs = csv::parse("\xEF\xBB\xBF" "a,b\r\n\"x, y\",\"he said \"\"hi\"\"\"\r\n\r\n\"multi\nline\",z\n");
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0].fields[0], "a");
    EXPECT_EQ(recs[1].fields[0], "x, y");
    EXPECT_EQ(recs[1].fields[1], "he said \"hi\"");
    EXPECT_EQ(recs[2].fields[0], "multi\nline");
    EXPECT_THROW(csv::parse("\"open,quote\n"), DataError);
}

TEST(Csv, FormatRoundTrip) {
    const csv::Row row{"plain", "with,comma", "with \"quote\"", "new\nline", ""};
    const auto recs = csv::parse(csv::format_row(row));
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].fields, row);
}

TEST(Statements, EnglishRow) {
    const auto st = parse("nr,lang,sentence,topic\n1,en,\"overall, being EU members is a disadvantage\",European Union disadvantages\n");
    ASSERT_EQ(st.size(), 1u);
    EXPECT_EQ(st[0].nr, 1);
    EXPECT_EQ(st[0].in("en").sentence, "overall, being EU members is a disadvantage");
    EXPECT_EQ(st[0].in("en").topic, "European Union disadvantages");
}

TEST(Statements, ItalianRow) {
    const auto st = parse("nr,lang,sentence,topic\n2,it,l'Italia dovrebbe uscire dall'Euro,uscire dall'euro\n");
    ASSERT_EQ(st.size(), 1u);
    EXPECT_EQ(st[0].nr, 2);
    EXPECT_EQ(st[0].in("it").sentence, "l'Italia dovrebbe uscire dall'Euro");
    EXPECT_EQ(st[0].in("it").topic, "uscire dall'euro");
    EXPECT_THROW(st[0].in("en"), DataError);
}

TEST(Statements, HeaderOnlyIsEmpty) {
    EXPECT_TRUE(parse("nr,lang,sentence,topic\n").empty());
}

TEST(Statements, WrongHeaderRejected) {
    EXPECT_THROW(parse("id,lang,sentence,topic\n1,en,a,b\n"), DataError);
}

TEST(Statements, DuplicateAndMissingLanguage) {
    EXPECT_THROW(parse("nr,lang,sentence,topic\n1,en,a,b\n1,en,c,d\n"), DataError);
    EXPECT_THROW(parse("nr,lang,sentence,topic\n1,en,a,b\n1,it,c,d\n2,en,e,f\n"), DataError);
    EXPECT_THROW(parse("nr,lang,sentence,topic\nx,en,a,b\n"), DataError);
}

TEST(Statements, SortedByNumberAndRoundTrips) {
    const auto st = parse("nr,lang,sentence,topic\n3,en,s3,t3\n1,en,\"s1, with comma\",t1\n2,en,s2,\"t \"\"2\"\"\"\n");
    ASSERT_EQ(st.size(), 3u);
    EXPECT_EQ(st[0].nr, 1);
    EXPECT_EQ(st[2].nr, 3);
    EXPECT_EQ(parse(serialize_statements(st)), st);
    EXPECT_EQ(find_statement(st, 2).in("en").topic, "t \"2\"");
    EXPECT_THROW(find_statement(st, 9), DataError);
}

TEST(Statements, FixtureHasTwentyBilingualStatements) {
    const auto st = load_statements(T2S_FIXTURES "/statements.csv");
    ASSERT_EQ(st.size(), 20u);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(st[i].nr, i + 1);
        EXPECT_EQ(st[i].texts.size(), 2u);
    }
    EXPECT_EQ(st[1].in("en").sentence, "Italy should exit the euro");
    EXPECT_EQ(st[1].in("en").topic, "exit the euro");
}

TEST(GroundTruthCsv, ValidRows) {
    const auto gt = parse_gt("party,statement_nr,label\nlega,1,5\npd,1,1\n");
    ASSERT_EQ(gt.size(), 2u);
    EXPECT_EQ(gt[0].party, "lega");
    EXPECT_EQ(gt[0].label.value(), 5);
    EXPECT_EQ(parties_of(gt), (std::vector<std::string>{"lega", "pd"}));
}

TEST(GroundTruthCsv, LabelOutOfRangeNamesLine) {
    try {
        parse_gt("party,statement_nr,label\nlega,1,5\nlega,2,6\n");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse_gt("party,statement_nr,label\nlega,1,0\n"), DataError);
    EXPECT_THROW(parse_gt("party,statement_nr,label\nlega,1,five\n"), DataError);
    EXPECT_THROW(parse_gt("party,statement_nr,label\nlega,1,3\nlega,1,4\n"), DataError);
}

TEST(GroundTruthCsv, SixPartiesTwentyStatements) {
    std::string body = "party,statement_nr,label\n";
    for (int p = 0; p < 6; ++p) {
        for (int s = 1; s <= 20; ++s) {
            body += "p" + std::to_string(p) + "," + std::to_string(s) + "," + std::to_string(1 + (p + s) % 5) + "\n";
        }
    }
    const auto gt = parse_gt(body);
    EXPECT_EQ(gt.size(), 120u);
    EXPECT_EQ(parties_of(gt).size(), 6u);
    EXPECT_EQ(load_ground_truth(T2S_FIXTURES "/ground_truth.csv").size(), 120u);
}

TEST(AgreementLabelType, RangeChecked) {
    EXPECT_THROW(AgreementLabel(0), DataError);
    EXPECT_THROW(AgreementLabel(6), DataError);
    EXPECT_EQ(AgreementLabel::neutral().value(), 3);
}
