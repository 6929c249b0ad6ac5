#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fuse/predictor.hpp"

namespace fuse {

// Built-in desk-scale fixtures, all 1x8x8.
//
//   two-region   : two scene models whose condition acts only on one half of
//                  the image (columns 0-3 for the "left" model, 4-7 for the
//                  "right" one); off-region the conditional and unconditional
//                  entries coincide, so the prediction gap is exactly zero
//                  there. Used for region-specialization experiments.
//   single-gaussian : one condition with pinned pseudo-random per-pixel
//                  mean in [-1,1] and std in [0.3,1]; used for distribution
//                  convergence checks.
//   spike        : a tabulated predictor pair with constant salience
//                  profiles; the expert's profile carries an isolated
//                  single-pixel spike inside the general model's plateau,
//                  which reacts to the blur switch.

inline constexpr GridShape kFixtureShape{1, 8, 8};

// Conditions: "left" (mean 1.0 on columns 0-3, std 0.4) and "background"
// (mean 0, std 0.4).
std::map<std::string, ConditionStats> two_region_conditions_g();
// Conditions: "right" (mean 1.0 on columns 4-7, std 0.4) and "background".
std::map<std::string, ConditionStats> two_region_conditions_e();
// Condition: "scene" with the pinned random field.
std::map<std::string, ConditionStats> single_gaussian_conditions();

// Constant-affine tabulated predictors (gain 0 everywhere) whose
// conditional/unconditional bias gap is the documented salience profile.
// Both are defined for timesteps in [1, T] with a single bucket.
TabulatedPredictor spike_tabulated_g(int T = 10);
TabulatedPredictor spike_tabulated_e(int T = 10);
// Location of the expert profile's isolated spike.
inline constexpr int kSpikeY = 3;
inline constexpr int kSpikeX = 1;

// Names accepted by builtin model specs and by `fuse export-fixture`.
std::vector<std::string> builtin_fixture_names();

// Writes the fixture's model files plus ready-to-run configs under
// <root>/<name>/. Returns the created directory.
std::filesystem::path export_fixture(const std::string& name,
                                     const std::filesystem::path& root);

} // namespace fuse
