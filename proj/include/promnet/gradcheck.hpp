#pragma once

#include <functional>
#include <string>
#include <vector>

#include "promnet/tensor.hpp"

namespace promnet {

// Central finite differences against hand-written adjoints, in 64-bit mode.
// f re-evaluates the scalar loss from the current contents of *inputs[i];
// analytic[i] holds dLoss/dInputs[i] at the unperturbed point. Returns the
// worst relative error max(|a-n| / max(|a|,|n|,1e-8)) over all elements.
double finite_difference_max_rel_error(const std::function<double()>& f,
                                       const std::vector<TensorD*>& inputs,
                                       const std::vector<const TensorD*>& analytic,
                                       double eps = 1e-4);

struct GradCheckCase {
  std::string name;
  double threshold;
  std::function<double()> run;  // returns the max relative error
};

// The named 64-bit verification suite: primitives, the recurrent cell, a
// 3-step unrolled sequence and both tiny end-to-end models.
std::vector<GradCheckCase> gradcheck_suite();

struct GradCheckOutcome {
  std::string name;
  double max_rel_error = 0.0;
  double threshold = 0.0;
  bool passed = false;
};

// Runs the suite (optionally a single named check). perturb_adjoints is a test
// hook that skews every analytic gradient so the checker itself can be shown
// to catch a wrong adjoint.
std::vector<GradCheckOutcome> run_gradcheck(const std::string& only = "",
                                            bool perturb_adjoints = false);

}  // namespace promnet
