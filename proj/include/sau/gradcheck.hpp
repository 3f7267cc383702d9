#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sau/model.hpp"

namespace sau {

using ObjectiveFn = std::function<Var(Tape&, const std::vector<Var>&)>;

/// Objective value at the given parameters (forward only).
double objective_value(const ModelState& state, const ObjectiveFn& objective);

/// Max per-coordinate relative error between the tape gradient and central
/// finite differences over every trainable coordinate.
double fd_max_rel_error(const ModelState& state, const ObjectiveFn& objective, double fd_step);

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t instances = 0;
  std::size_t coords = 0;
};

/// Runs `instances` random small instances per loss (mixed CE, supcon, the
/// three noise-dropping variants, and the combined step objective) and
/// reports the worst relative error for each. Instances whose rectifier
/// pre-activations sit within 10*fd_step of a kink are redrawn, since
/// central differences are meaningless across the kink.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed, std::size_t instances,
                                                 double fd_step);

}  // namespace sau
