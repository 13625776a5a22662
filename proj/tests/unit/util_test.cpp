#include <gtest/gtest.h>

#include <stlabel/util.hpp>

#include "support/temp_dir.hpp"

using namespace stlabel;

TEST(Util, TrimAndSplit) {
    EXPECT_EQ(trim("  a b \t"), "a b");
    EXPECT_EQ(trim(""), "");
    EXPECT_EQ(trim(" \r\n"), "");
    auto parts = split("a\tb\t\tc", '\t');
    ASSERT_EQ(parts.size(), 4u);
    EXPECT_EQ(parts[0], "a");
    EXPECT_EQ(parts[2], "");
    EXPECT_EQ(parts[3], "c");
    EXPECT_EQ(split("", '\t').size(), 1u);
}

TEST(Util, CanonicalGeneSymbol) {
    EXPECT_EQ(canonical_gene_symbol(" krt8 "), "KRT8");
    EXPECT_EQ(canonical_gene_symbol("Cd3e"), "CD3E");
}

TEST(Util, FormatDoubleRoundTrips) {
    for (double v : {0.0, 1.0, -1.5, 0.1, 1e-300, 3.141592653589793, 1e17, -0.30000000000000004}) {
        double back;
        ASSERT_TRUE(parse_double(format_double(v), back)) << format_double(v);
        EXPECT_EQ(back, v);
    }
    EXPECT_EQ(format_double(0.5), "0.5");
}

TEST(Util, ParseIntRejectsTrailingGarbage) {
    int64_t v;
    EXPECT_TRUE(parse_int64("42", v));
    EXPECT_EQ(v, 42);
    EXPECT_FALSE(parse_int64("42x", v));
    EXPECT_FALSE(parse_int64("", v));
    EXPECT_FALSE(parse_int64("4.2", v));
    double d;
    EXPECT_TRUE(parse_double("-3.5e2", d));
    EXPECT_EQ(d, -350.0);
    EXPECT_FALSE(parse_double("nanx", d));
}

TEST(Util, Fnv1a64KnownValues) {
    // reference values of the standard FNV-1a 64-bit parameters
    EXPECT_EQ(fnv1a64(""), 14695981039346656037ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_NE(fnv1a64("ab"), fnv1a64("ba"));
    EXPECT_EQ(hex64(0), "0000000000000000");
    EXPECT_EQ(hex64(0xdeadbeefull), "00000000deadbeef");
}

TEST(Util, FileRoundTrip) {
    testsupport::TempDir tmp;
    const std::string path = tmp.sub("data.bin");
    std::string payload = "line1\nline2\n";
    payload.push_back('\0');  // byte-exact round trip, not text semantics
    payload += "tail";
    write_text_file(path, payload);
    EXPECT_EQ(read_text_file(path), payload);
    EXPECT_THROW(read_text_file(tmp.sub("missing.txt")), IoError);
}
