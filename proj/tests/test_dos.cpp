#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pltrap/dos.hpp"

TEST_CASE("placeholder") { CHECK(true); }
