#include "doctest.h"
#include "properties.hpp"

using namespace rsm::props;

namespace {
void require(const PropertyResult& r) {
  INFO(r.name << ": " << r.detail);
  CHECK(r.ok);
}
}  // namespace

TEST_CASE("finite differences") { require(finite_difference_suite()); }
TEST_CASE("grid fuzz") { require(grid_fuzz()); }
TEST_CASE("balls fuzz") { require(balls_fuzz()); }
TEST_CASE("cci permutation invariance") { require(cci_permutation_invariance()); }
TEST_CASE("gumbel") { require(gumbel_properties()); }
TEST_CASE("loss and hits oracles") { require(loss_and_hits_oracles()); }
TEST_CASE("residual identity") { require(residual_identity()); }
TEST_CASE("sequential vs parallel") { require(sequential_parallel_probe()); }
TEST_CASE("round trips") { require(round_trips()); }
