#include "doctest.h"

TEST_SUITE("contrastive") {}
