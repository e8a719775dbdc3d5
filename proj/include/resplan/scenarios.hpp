#pragma once

// Scenario documents: a world, the assessment rules its intelligence update
// implies, the operator's standing preferences and a reference set of
// resilience constraints.
//
//   scenario-format v1
//   (name t1)
//   (title "...")
//   (update "...")
//   (grid <width> <height>)
//   (horizon <steps>)
//   (uav <id> (at <x> <y>) [(can-carry false)] [(operational false)])
//   (target <id> (path (<x> <y>) ...) [(status unknown|friendly|hostile)])
//   (asset <id> (at <x> <y>) [(needs <pallet> ...)])
//   (pallet <id> (at <x> <y>))
//   (goal photo|visit|supply <subject>)
//   (constants [(goal-reward r)] [(action-cost c)] [(ordering-reward r)]
//              [(default-probability p)] [(discount g)])
//   (hypothesis <name> (<value> <prior>) ...)
//   (rule (action any|move|photo|pickup|drop) [filters...] [outcome] [(on-failure mode)])
//   (operator-preferences <preference forms>...)
//   (reference-constraints <preference forms>...)
//
// Rule filters: (uav id) (target id) (pallet id) (asset id) (cells (x y) ...)
// (near <target> <radius>) (moves-from k) (moves-every n) (from t) (until t).
// Outcome: (probability p) or (when <hypothesis> <value>).

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "resplan/assess.hpp"
#include "resplan/domain.hpp"
#include "resplan/prefs.hpp"

namespace resplan::scenarios {

inline constexpr const char* format_header = "scenario-format v1";

struct Scenario {
  std::string name;
  std::string title;
  std::string update;  // intelligence update as briefed to the operator
  assess::AssessmentModel model;
  prefs::PreferenceSet operator_preferences;
  prefs::PreferenceSet reference_constraints;

  const domain::World& world() const { return model.world; }
  /// Preference and ordering weights used when parsing against this scenario.
  prefs::ParseOptions parse_options() const { return {model.goal_reward, model.ordering_reward}; }

  bool operator==(const Scenario& o) const;
};

/// Throws ParseError (with location) for malformed documents and
/// ValidationError naming the offending field otherwise.
Scenario parse(const std::string& text, const std::string& fallback_name = "scenario");
std::string render(const Scenario& s);

/// Reads a file; the name defaults to the file's stem. Throws Error on I/O failure.
Scenario load(const std::string& path);

/// The six bundled reconstructions t1..t6, in order.
const std::vector<Scenario>& bundled();
/// Throws ValidationError for an unknown name.
const Scenario& bundled(const std::string& name);
std::vector<std::string> bundled_names();

namespace detail {
/// (name, text) of each bundled file; generated at build time.
const std::vector<std::pair<std::string, std::string>>& bundled_sources();
}  // namespace detail

}  // namespace resplan::scenarios
