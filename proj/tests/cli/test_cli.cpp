#include <catch2/catch_amalgamated.hpp>
TEST_CASE("cli placeholder", "[cli]") { REQUIRE(true); }
