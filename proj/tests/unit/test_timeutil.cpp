#include <doctest.h>

#include "nightwatch/errors.hpp"
#include "nightwatch/timeutil.hpp"

using namespace nightwatch;

TEST_CASE("iso8601 parses known instants") {
  CHECK(parse_iso8601_ms("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_iso8601_ms("1970-01-01T00:00:00.250Z") == 250);
  CHECK(parse_iso8601_ms("2023-11-14T22:13:20Z") == 1700000000000LL);
  CHECK(parse_iso8601_ms("2000-03-01T12:00:00Z") == 951912000000LL);
}

TEST_CASE("iso8601 format/parse round trip") {
  for (int64_t t : {0LL, 1700000000123LL, 951912000000LL, 4102444799999LL}) {
    CHECK(parse_iso8601_ms(format_iso8601_ms(t)) == t);
  }
  CHECK(format_iso8601_ms(1700000000000LL) == "2023-11-14T22:13:20.000Z");
}

TEST_CASE("iso8601 rejects malformed input") {
  CHECK_THROWS_AS(parse_iso8601_ms("2023-11-14 22:13:20"), FormatError);
  CHECK_THROWS_AS(parse_iso8601_ms("2023-11-14T22:13:20"), FormatError);   // no zone
  CHECK_THROWS_AS(parse_iso8601_ms("2023-11-14T22:13:20+02"), FormatError);
  CHECK_THROWS_AS(parse_iso8601_ms("2023-13-01T00:00:00Z"), FormatError);  // month 13
  CHECK_THROWS_AS(parse_iso8601_ms("garbage"), FormatError);
  CHECK_THROWS_AS(parse_iso8601_ms("2023-11-14T22:13:20Zjunk"), FormatError);
}
