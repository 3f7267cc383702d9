#include "doctest.h"

TEST_SUITE("mixer") {}
