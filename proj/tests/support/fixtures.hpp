#pragma once

#include <string>
#include <vector>

#include "dynasto/safety.hpp"
#include "dynasto/types.hpp"

namespace testsupport {

using dynasto::Trace;

/// One step of a hand-built two-vehicle trace (heading 0, default sizes).
struct Way {
  double ego_x = 0.0;
  double ego_y = 0.0;
  double ego_vx = 25.0;
  double adv_x = 0.0;
  double adv_y = 0.0;
  double adv_vx = 25.0;
  double adv_vy = 0.0;
};

/// Builds a trace from waypoints; accelerations are the per-step speed
/// deltas. collided marks the last step as the collision step.
Trace make_trace(const std::vector<Way>& pts, bool collided);

/// Hand-designed classification fixtures with their expected outcomes.
struct ClassificationFixture {
  std::string name;
  Trace trace;
  dynasto::safety::Label label;
  std::optional<dynasto::safety::Rule> rule;
  std::optional<int> onset;  // checked when present
};

std::vector<ClassificationFixture> classification_fixtures();

/// Seven event-sequence classes, ~15 samples each, for clustering checks.
struct LabeledEvents {
  std::vector<std::vector<int>> events;
  std::vector<int> labels;
};
LabeledEvents labeled_event_fixture();

/// Labeled similar/distinct descriptive-vector pairs for threshold
/// calibration.
struct DedupFixture {
  std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
  std::vector<bool> similar;
};
DedupFixture dedup_fixture(std::uint64_t seed);

}  // namespace testsupport
