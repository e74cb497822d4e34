#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "actseq/csv.hpp"
#include "actseq/errors.hpp"

using namespace actseq;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("reader handles quoted fields, CRLF and embedded separators") {
    const auto path = write_temp(
        "actseq_csv_test.csv",
        "a,b,c\r\n1,\"x, y\",\"he said \"\"hi\"\"\"\r\n2,\"multi\nline\",plain\n");
    csv::Reader reader(path);
    CHECK(reader.header() == std::vector<std::string>{"a", "b", "c"});
    REQUIRE(reader.next());
    CHECK(reader.field(0) == "1");
    CHECK(reader.field(1) == "x, y");
    CHECK(reader.field(2) == "he said \"hi\"");
    REQUIRE(reader.next());
    CHECK(reader.field(1) == "multi\nline");
    CHECK(reader.field(2) == "plain");
    CHECK_FALSE(reader.next());
}

TEST_CASE("reader errors") {
    CHECK_THROWS_AS(csv::Reader("/nonexistent/file.csv"), InputError);
    const auto path = write_temp("actseq_csv_cols.csv", "a,b\n1,2\n");
    csv::Reader reader(path);
    CHECK(reader.column("b") == 1);
    CHECK(reader.column("zzz") == -1);
    CHECK_THROWS_WITH_AS(static_cast<void>(reader.require_column("zzz")),
                         doctest::Contains("zzz"), InputError);
}

TEST_CASE("write_row quoting round-trips through the reader") {
    std::ostringstream os;
    std::vector<std::string> header = {"x", "y"};
    std::vector<std::string> row = {"plain", "a,\"b\"\nc"};
    csv::write_row(os, header);
    csv::write_row(os, row);
    const auto path = write_temp("actseq_csv_roundtrip.csv", os.str());
    csv::Reader reader(path);
    REQUIRE(reader.next());
    CHECK(reader.field(0) == "plain");
    CHECK(reader.field(1) == "a,\"b\"\nc");
}

TEST_CASE("format_double survives a parse round trip exactly") {
    for (double v : {0.1, 1.0 / 3.0, 685.8, 1e-300, 2.6390573296152584}) {
        CHECK(std::stod(csv::format_double(v)) == v);
    }
}
