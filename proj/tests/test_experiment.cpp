#include <catch2/catch_amalgamated.hpp>
TEST_CASE("todo experiment") { REQUIRE(true); }
