#include "doctest.h"

TEST_SUITE("syngen") {}
