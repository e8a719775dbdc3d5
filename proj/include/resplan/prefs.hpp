#pragma once

// Operator constraint language: PDDL3-style preferences written as
// s-expressions, grounded against a world and lowered to LTLf.
//
//   (preference <name> <template> [<weight>])
//   (forall (?v - <type> ...) <preference-or-forall>)
//   (ordering <earlier> <later> [<weight>])
//
// Templates: (sometime c) (always c) (sometime-after c c) (sometime-before c c)
// (at-most-once c) (at-end c), where c is a boolean combination of atoms built
// with and / or / not / imply.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "resplan/domain.hpp"
#include "resplan/ltl.hpp"
#include "resplan/sexpr.hpp"

namespace resplan::prefs {

enum class TemplateKind { sometime, always, sometime_after, sometime_before, at_most_once, at_end };

std::string template_name(TemplateKind k);

/// A template over ground conditions. `first` and `second` are propositional
/// formulas whose atoms are rendered domain propositions; `second` is only
/// meaningful for sometime-after and sometime-before.
struct Template {
  TemplateKind kind = TemplateKind::sometime;
  ltl::Formula first;
  std::optional<ltl::Formula> second;

  bool operator==(const Template&) const = default;
};

struct Preference {
  std::string name;
  Template body;
  double weight = 20.0;

  bool operator==(const Preference&) const = default;
};

struct Ordering {
  std::string earlier;
  std::string later;
  double weight = 10.0;

  bool operator==(const Ordering&) const = default;
};

struct PreferenceSet {
  std::vector<Preference> preferences;
  std::vector<Ordering> orderings;

  bool empty() const { return preferences.empty() && orderings.empty(); }
  const Preference* find(const std::string& name) const;
  bool operator==(const PreferenceSet&) const = default;
};

enum class ConstraintKind { control, declarative };

std::string kind_name(ConstraintKind k);

struct ParseOptions {
  double preference_weight = 20.0;
  double ordering_weight = 10.0;
};

/// Throws ParseError for malformed text and ValidationError (with location)
/// for unknown predicates or entities, type mismatches, unbound variables,
/// duplicate names and dangling orderings.
PreferenceSet parse(const std::string& text, const domain::World& world, const ParseOptions& options = {});

/// Same, over already-read top-level forms (embedded sections of a larger
/// document keep their source locations).
PreferenceSet parse(const std::vector<sexpr::Node>& forms, const domain::World& world,
                    const ParseOptions& options = {});

/// Canonical text, one top-level form per line; forall groups appear expanded.
std::string render(const PreferenceSet& set, const ParseOptions& defaults = {});

std::string render(const Template& t);

/// The LTLf formula a template stands for. Throws ValidationError when a
/// condition is not propositional.
ltl::Formula lower(const Template& t);

/// Location-directed (control) versus property-directed (declarative).
/// Control iff every atom is an agentloc fact, or the template sequences
/// conditions (sometime-after / sometime-before) and mentions an agentloc fact.
ConstraintKind classify(const Preference& p);

/// Sum of ordering weights whose two preferences are both satisfied with
/// time(earlier) <= time(later). `first_satisfied` maps every preference name
/// to its first satisfaction timestep, or nullopt when unsatisfied; a name
/// missing from the map is an error.
double score_orderings(const PreferenceSet& set, const std::map<std::string, std::optional<int>>& first_satisfied);

/// Concatenation; throws ValidationError on a name clash.
PreferenceSet merge(const PreferenceSet& a, const PreferenceSet& b);

/// Inverse of domain::Proposition::render for atom names appearing in
/// lowered formulas.
domain::Proposition parse_atom(const std::string& text);

}  // namespace resplan::prefs
