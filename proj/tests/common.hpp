#pragma once

#include <cmath>

#include <doctest.h>

// absolute-tolerance check that still prints the observed gap on failure
#define CHECK_NEAR(a, b, tol) CHECK_LT(std::abs((a) - (b)), (tol))
#define REQUIRE_NEAR(a, b, tol) REQUIRE_LT(std::abs((a) - (b)), (tol))
