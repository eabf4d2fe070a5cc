#pragma once

#include "awt/numerics/grad_check.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace awt {

/// One gradient-check scenario. `setup` builds its parameter blocks (owned by
/// the returned state) and the loss closure over them.
struct GradCase {
  struct State {
    std::vector<std::unique_ptr<ParamBlock<double>>> blocks;
    std::shared_ptr<void> layers;                // owner of `layer_blocks`
    std::vector<ParamBlock<double>*> layer_blocks;
    std::function<Var(Tape<double>&)> loss;

    ParamBlock<double>& add(const std::string& name, Index rows, Index cols, std::mt19937_64& rng, double scale = 1);
    std::vector<ParamBlock<double>*> pointers() const;
  };

  std::string name;
  std::function<State(std::mt19937_64&)> setup;
};

struct GradCaseResult {
  std::string name;
  double max_rel_error = 0;
  std::size_t coordinates = 0;
  std::size_t refined = 0;
  bool passed = false;
};

struct GradSuiteResult {
  std::vector<GradCaseResult> cases;
  double seconds = 0;
  bool passed() const;
};

inline constexpr double kGradTolerance = 1e-4;

/// Every differentiable op on small random shapes (batch <= 2, channels <= 4,
/// length <= 12), plus the composed encoder/decoder and discriminator paths.
std::vector<GradCase> default_grad_cases();

/// Runs each case through `grad_check` with step 1e-4 and 256 sampled
/// coordinates (all of them when fewer exist). Coordinates above `tolerance`
/// are re-measured at smaller steps before failing.
GradSuiteResult run_gradient_suite(const std::vector<GradCase>& cases, std::uint64_t seed = 1,
                                   double tolerance = kGradTolerance);
GradSuiteResult run_gradient_suite(std::uint64_t seed = 1);

}  // namespace awt
