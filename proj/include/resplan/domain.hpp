#pragma once

// Deterministic grid-world model: UAVs, moving targets, assets and pallets.
// Everything here is an immutable value; operations are pure functions.

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace resplan::domain {

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

inline int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

struct Grid {
  int width = 1;
  int height = 1;

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool operator==(const Grid&) const = default;
};

enum class TargetStatus { unknown, friendly, hostile };

struct Uav {
  std::string id;
  Cell start;
  bool can_carry = true;
  bool operational = true;
  bool operator==(const Uav&) const = default;
};

struct Target {
  std::string id;
  std::vector<Cell> trajectory;  // one cell per timestep; holds the last cell afterwards
  TargetStatus status = TargetStatus::unknown;

  Cell at(int t) const {
    auto last = static_cast<int>(trajectory.size()) - 1;
    return trajectory[static_cast<std::size_t>(t < last ? t : last)];
  }
  bool operator==(const Target&) const = default;
};

struct Asset {
  std::string id;
  Cell location;
  std::vector<std::string> needs;  // pallets this asset accepts; any one supplies it
  bool operator==(const Asset&) const = default;
};

struct Pallet {
  std::string id;
  Cell location;
  bool operator==(const Pallet&) const = default;
};

enum class GoalKind { photo, visit, supply };

/// A mission goal: photograph a target, visit an asset, or supply an asset
/// with one of the pallets it needs. Achieved by any UAV.
struct Goal {
  GoalKind kind = GoalKind::photo;
  std::string subject;  // target or asset id

  std::string id() const;
  bool operator==(const Goal&) const = default;
  auto operator<=>(const Goal&) const = default;
};

class World;

/// Joint state at one timestep. Set-valued fields are bitsets laid out by
/// World::photo_bit / visit_bit / delivery_bit.
struct JointState {
  int t = 0;
  std::vector<Cell> uav_at;
  std::vector<int> carrying;  // pallet index per UAV, -1 when empty-handed
  std::vector<Cell> pallet_at;
  std::uint64_t photos = 0;
  std::uint64_t visited = 0;
  std::uint64_t delivered = 0;

  bool operator==(const JointState&) const = default;
};

enum class ActionKind : std::uint8_t { move, photo, pickup, drop, wait };
enum class Direction : std::uint8_t { north, south, east, west };

/// One UAV's action for a timestep. `arg` indexes the world's targets
/// (photo), pallets (pickup) or assets (drop).
struct UavAction {
  ActionKind kind = ActionKind::wait;
  Direction dir = Direction::north;
  int arg = -1;

  static UavAction move(Direction d) { return {ActionKind::move, d, -1}; }
  static UavAction photo(int target) { return {ActionKind::photo, Direction::north, target}; }
  static UavAction pickup(int pallet) { return {ActionKind::pickup, Direction::north, pallet}; }
  static UavAction drop(int asset) { return {ActionKind::drop, Direction::north, asset}; }
  static UavAction wait() { return {}; }

  bool is_wait() const { return kind == ActionKind::wait; }
  auto operator<=>(const UavAction&) const = default;
};

/// One entry per UAV in world order; non-operational UAVs carry Wait.
using JointAction = std::vector<UavAction>;

enum class Predicate { agentloc, have_photo, visited, carry_pallet, delivered, t_eq };

/// A grounded atomic proposition, rendered in the constraint language as
/// e.g. `(agentloc uav1 v4 v3)` or `(have-photo t1 uav1)`.
struct Proposition {
  Predicate pred = Predicate::agentloc;
  std::string first;   // uav / target / asset / pallet id, by predicate
  std::string second;  // uav / asset id, by predicate
  int x = 0;           // agentloc x, t-eq k
  int y = 0;

  std::string render() const;
  auto operator<=>(const Proposition&) const = default;
};

std::string predicate_name(Predicate p);
std::optional<Predicate> predicate_from_name(const std::string& name);

/// Proposition with entity ids resolved to world indices.
struct ResolvedProposition {
  Predicate pred = Predicate::agentloc;
  int i = -1;
  int j = -1;
  Cell cell;
  int k = 0;
};

std::string direction_name(Direction d);
Cell moved(Cell c, Direction d);

class World {
 public:
  World() = default;

  /// Validates every invariant and throws ValidationError naming the field.
  World(Grid grid, std::vector<Uav> uavs, std::vector<Target> targets, std::vector<Asset> assets,
        std::vector<Pallet> pallets, int horizon, std::vector<Goal> goals);

  const Grid& grid() const { return grid_; }
  const std::vector<Uav>& uavs() const { return uavs_; }
  const std::vector<Target>& targets() const { return targets_; }
  const std::vector<Asset>& assets() const { return assets_; }
  const std::vector<Pallet>& pallets() const { return pallets_; }
  int horizon() const { return horizon_; }
  const std::vector<Goal>& goals() const { return goals_; }

  std::optional<int> uav_index(const std::string& id) const { return find(uav_ix_, id); }
  std::optional<int> target_index(const std::string& id) const { return find(target_ix_, id); }
  std::optional<int> asset_index(const std::string& id) const { return find(asset_ix_, id); }
  std::optional<int> pallet_index(const std::string& id) const { return find(pallet_ix_, id); }

  int photo_bit(int target, int uav) const { return target * num_uavs() + uav; }
  int visit_bit(int asset, int uav) const { return asset * num_uavs() + uav; }
  int delivery_bit(int pallet, int asset) const { return pallet * num_assets() + asset; }
  bool asset_needs(int asset, int pallet) const;

  int num_uavs() const { return static_cast<int>(uavs_.size()); }
  int num_assets() const { return static_cast<int>(assets_.size()); }

  /// Entities at their start positions, empty sets, t = 0. UAVs starting on
  /// an asset have visited it.
  JointState initial_state() const;

  /// Resolves ids against this world; throws ValidationError on an unknown
  /// entity or an off-grid cell.
  ResolvedProposition resolve(const Proposition& p) const;

  bool operator==(const World& o) const {
    return grid_ == o.grid_ && uavs_ == o.uavs_ && targets_ == o.targets_ && assets_ == o.assets_ &&
           pallets_ == o.pallets_ && horizon_ == o.horizon_ && goals_ == o.goals_;
  }

 private:
  using Index = std::unordered_map<std::string, int>;
  static std::optional<int> find(const Index& ix, const std::string& id) {
    auto it = ix.find(id);
    if (it == ix.end()) return std::nullopt;
    return it->second;
  }

  Grid grid_;
  std::vector<Uav> uavs_;
  std::vector<Target> targets_;
  std::vector<Asset> assets_;
  std::vector<Pallet> pallets_;
  int horizon_ = 20;
  std::vector<Goal> goals_;
  Index uav_ix_, target_ix_, asset_ix_, pallet_ix_;
};

// Bitset helpers over JointState.
inline bool has_bit(std::uint64_t set, int bit) { return (set >> bit) & 1u; }
bool has_photo(const JointState& s, const World& w, int target, int uav);
bool has_visited(const JointState& s, const World& w, int asset, int uav);
bool is_delivered(const JointState& s, const World& w, int pallet, int asset);
bool pallet_consumed(const JointState& s, const World& w, int pallet);

/// Per-UAV actions whose preconditions hold, in tie-break order:
/// Move N,S,E,W; TakePhoto by target; PickUp by pallet; Drop by asset; Wait.
std::vector<UavAction> applicable_for(const JointState& s, const World& w, int uav);

/// Joint actions whose every component is applicable and which never pick up
/// one pallet twice. UAV 0's choice varies slowest. `operational` overrides
/// the world's flags when given (UAVs lost during execution).
std::vector<JointAction> applicable(const JointState& s, const World& w,
                                    const std::vector<bool>* operational = nullptr);

/// Throws PreconditionError naming the violated precondition and the UAV.
void check_applicable(const JointState& s, const JointAction& a, const World& w,
                      const std::vector<bool>* operational = nullptr);

/// Returns the empty string when `a` is applicable for UAV `uav`, otherwise
/// a description of the violated precondition.
std::string precondition_failure(const JointState& s, const World& w, int uav, const UavAction& a);

JointState step(const JointState& s, const JointAction& a, const World& w,
                const std::vector<bool>* operational = nullptr);

bool holds(const ResolvedProposition& p, const JointState& s, const World& w);

/// Every grounded proposition true in `s`, sorted.
std::vector<Proposition> propositions(const JointState& s, const World& w);

bool goal_satisfied(const Goal& g, const JointState& s, const World& w);

/// Ids of the mission goals achieved by the final state of `trace`.
std::set<std::string> goals_satisfied(const std::vector<JointState>& trace, const World& w);

int count_actions(const JointAction& a);

std::string render_action(const UavAction& a, const World& w);

}  // namespace resplan::domain
