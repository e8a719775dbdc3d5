#include "resplan/domain.hpp"

#include <algorithm>

#include "resplan/error.hpp"

namespace resplan::domain {

namespace {

std::string cell_text(Cell c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; }

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

template <typename T>
void index_ids(const std::vector<T>& items, const char* kind, std::unordered_map<std::string, int>& ix,
               std::set<std::string>& all_ids) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& id = items[i].id;
    require(!id.empty(), std::string(kind) + " with empty id");
    require(all_ids.insert(id).second, "duplicate entity id '" + id + "'");
    ix.emplace(id, static_cast<int>(i));
  }
}

}  // namespace

std::string Goal::id() const {
  switch (kind) {
    case GoalKind::photo:
      return "photo-" + subject;
    case GoalKind::visit:
      return "visit-" + subject;
    case GoalKind::supply:
      return "supply-" + subject;
  }
  return subject;
}

std::string predicate_name(Predicate p) {
  switch (p) {
    case Predicate::agentloc:
      return "agentloc";
    case Predicate::have_photo:
      return "have-photo";
    case Predicate::visited:
      return "visited";
    case Predicate::carry_pallet:
      return "carry-pallet";
    case Predicate::delivered:
      return "delivered";
    case Predicate::t_eq:
      return "t-eq";
  }
  return "?";
}

std::optional<Predicate> predicate_from_name(const std::string& name) {
  for (auto p : {Predicate::agentloc, Predicate::have_photo, Predicate::visited, Predicate::carry_pallet,
                 Predicate::delivered, Predicate::t_eq}) {
    if (predicate_name(p) == name) return p;
  }
  return std::nullopt;
}

std::string Proposition::render() const {
  switch (pred) {
    case Predicate::agentloc:
      return "(agentloc " + first + " v" + std::to_string(x) + " v" + std::to_string(y) + ")";
    case Predicate::t_eq:
      return "(t-eq " + std::to_string(x) + ")";
    default:
      return "(" + predicate_name(pred) + " " + first + " " + second + ")";
  }
}

std::string direction_name(Direction d) {
  switch (d) {
    case Direction::north:
      return "N";
    case Direction::south:
      return "S";
    case Direction::east:
      return "E";
    case Direction::west:
      return "W";
  }
  return "?";
}

Cell moved(Cell c, Direction d) {
  switch (d) {
    case Direction::north:
      return {c.x, c.y + 1};
    case Direction::south:
      return {c.x, c.y - 1};
    case Direction::east:
      return {c.x + 1, c.y};
    case Direction::west:
      return {c.x - 1, c.y};
  }
  return c;
}

World::World(Grid grid, std::vector<Uav> uavs, std::vector<Target> targets, std::vector<Asset> assets,
             std::vector<Pallet> pallets, int horizon, std::vector<Goal> goals)
    : grid_(grid),
      uavs_(std::move(uavs)),
      targets_(std::move(targets)),
      assets_(std::move(assets)),
      pallets_(std::move(pallets)),
      horizon_(horizon),
      goals_(std::move(goals)) {
  require(grid_.width >= 1 && grid_.height >= 1, "grid: width and height must be at least 1");
  require(horizon_ >= 1, "horizon: must be at least 1");
  require(horizon_ <= 120, "horizon: must be at most 120");
  require(!uavs_.empty(), "uavs: at least one UAV is required");
  require(uavs_.size() <= 8, "uavs: at most 8 UAVs are supported");

  std::set<std::string> ids;
  index_ids(uavs_, "uav", uav_ix_, ids);
  index_ids(targets_, "target", target_ix_, ids);
  index_ids(assets_, "asset", asset_ix_, ids);
  index_ids(pallets_, "pallet", pallet_ix_, ids);

  require(targets_.size() * uavs_.size() <= 64, "targets: too many target/UAV pairs (max 64)");
  require(assets_.size() * uavs_.size() <= 64, "assets: too many asset/UAV pairs (max 64)");
  require(pallets_.size() * std::max<std::size_t>(assets_.size(), 1) <= 64,
          "pallets: too many pallet/asset pairs (max 64)");

  for (const auto& u : uavs_) {
    require(grid_.contains(u.start), "uav " + u.id + ": start " + cell_text(u.start) + " outside grid");
  }
  for (const auto& t : targets_) {
    require(!t.trajectory.empty(), "target " + t.id + ": trajectory is empty");
    for (auto c : t.trajectory) {
      require(grid_.contains(c), "target " + t.id + ": trajectory cell " + cell_text(c) + " outside grid");
    }
  }
  for (const auto& a : assets_) {
    require(grid_.contains(a.location), "asset " + a.id + ": location " + cell_text(a.location) + " outside grid");
    for (const auto& p : a.needs) {
      require(pallet_ix_.count(p) == 1, "asset " + a.id + ": needs unknown pallet '" + p + "'");
    }
  }
  for (const auto& p : pallets_) {
    require(grid_.contains(p.location), "pallet " + p.id + ": location " + cell_text(p.location) + " outside grid");
  }
  std::set<Goal> seen;
  for (const auto& g : goals_) {
    require(seen.insert(g).second, "goals: duplicate goal " + g.id());
    switch (g.kind) {
      case GoalKind::photo:
        require(target_ix_.count(g.subject) == 1, "goals: photo of unknown target '" + g.subject + "'");
        break;
      case GoalKind::visit:
        require(asset_ix_.count(g.subject) == 1, "goals: visit of unknown asset '" + g.subject + "'");
        break;
      case GoalKind::supply: {
        auto it = asset_ix_.find(g.subject);
        require(it != asset_ix_.end(), "goals: supply of unknown asset '" + g.subject + "'");
        require(!assets_[static_cast<std::size_t>(it->second)].needs.empty(),
                "goals: asset " + g.subject + " needs no pallet");
        break;
      }
    }
  }
}

bool World::asset_needs(int asset, int pallet) const {
  const auto& needs = assets_[static_cast<std::size_t>(asset)].needs;
  return std::find(needs.begin(), needs.end(), pallets_[static_cast<std::size_t>(pallet)].id) != needs.end();
}

JointState World::initial_state() const {
  JointState s;
  s.t = 0;
  for (const auto& u : uavs_) {
    s.uav_at.push_back(u.start);
    s.carrying.push_back(-1);
  }
  for (const auto& p : pallets_) s.pallet_at.push_back(p.location);
  for (int a = 0; a < num_assets(); ++a) {
    for (int u = 0; u < num_uavs(); ++u) {
      if (s.uav_at[static_cast<std::size_t>(u)] == assets_[static_cast<std::size_t>(a)].location) {
        s.visited |= std::uint64_t{1} << visit_bit(a, u);
      }
    }
  }
  return s;
}

ResolvedProposition World::resolve(const Proposition& p) const {
  ResolvedProposition r;
  r.pred = p.pred;
  auto need = [&](std::optional<int> ix, const std::string& id, const char* kind) {
    if (!ix) throw ValidationError("unknown " + std::string(kind) + " '" + id + "' in " + p.render());
    return *ix;
  };
  switch (p.pred) {
    case Predicate::agentloc:
      r.i = need(uav_index(p.first), p.first, "uav");
      r.cell = {p.x, p.y};
      if (!grid_.contains(r.cell)) throw ValidationError("cell " + cell_text(r.cell) + " outside grid in " + p.render());
      break;
    case Predicate::have_photo:
      r.i = need(target_index(p.first), p.first, "target");
      r.j = need(uav_index(p.second), p.second, "uav");
      break;
    case Predicate::visited:
      r.i = need(asset_index(p.first), p.first, "asset");
      r.j = need(uav_index(p.second), p.second, "uav");
      break;
    case Predicate::carry_pallet:
      r.i = need(pallet_index(p.first), p.first, "pallet");
      r.j = need(uav_index(p.second), p.second, "uav");
      break;
    case Predicate::delivered:
      r.i = need(pallet_index(p.first), p.first, "pallet");
      r.j = need(asset_index(p.second), p.second, "asset");
      break;
    case Predicate::t_eq:
      r.k = p.x;
      break;
  }
  return r;
}

bool has_photo(const JointState& s, const World& w, int target, int uav) {
  return has_bit(s.photos, w.photo_bit(target, uav));
}

bool has_visited(const JointState& s, const World& w, int asset, int uav) {
  return has_bit(s.visited, w.visit_bit(asset, uav));
}

bool is_delivered(const JointState& s, const World& w, int pallet, int asset) {
  return has_bit(s.delivered, w.delivery_bit(pallet, asset));
}

bool pallet_consumed(const JointState& s, const World& w, int pallet) {
  for (int a = 0; a < w.num_assets(); ++a) {
    if (is_delivered(s, w, pallet, a)) return true;
  }
  return false;
}

std::string precondition_failure(const JointState& s, const World& w, int uav, const UavAction& a) {
  const auto u = static_cast<std::size_t>(uav);
  const Cell here = s.uav_at[u];
  switch (a.kind) {
    case ActionKind::wait:
      return {};
    case ActionKind::move:
      if (!w.grid().contains(moved(here, a.dir))) return "move " + direction_name(a.dir) + " leaves the grid";
      return {};
    case ActionKind::photo: {
      if (a.arg < 0 || a.arg >= static_cast<int>(w.targets().size())) return "photo of unknown target";
      const auto& target = w.targets()[static_cast<std::size_t>(a.arg)];
      if (target.at(s.t) != here) return "photo requires co-location with target " + target.id;
      return {};
    }
    case ActionKind::pickup: {
      if (a.arg < 0 || a.arg >= static_cast<int>(w.pallets().size())) return "pickup of unknown pallet";
      const auto& pallet = w.pallets()[static_cast<std::size_t>(a.arg)];
      if (!w.uavs()[u].can_carry) return "pickup by a UAV that cannot carry";
      if (s.carrying[u] >= 0) return "pickup while already carrying";
      for (auto c : s.carrying) {
        if (c == a.arg) return "pickup of pallet " + pallet.id + " already carried";
      }
      if (pallet_consumed(s, w, a.arg)) return "pickup of delivered pallet " + pallet.id;
      if (s.pallet_at[static_cast<std::size_t>(a.arg)] != here) return "pickup requires co-location with pallet " + pallet.id;
      return {};
    }
    case ActionKind::drop: {
      if (a.arg < 0 || a.arg >= w.num_assets()) return "drop at unknown asset";
      const auto& asset = w.assets()[static_cast<std::size_t>(a.arg)];
      if (s.carrying[u] < 0) return "drop while carrying nothing";
      if (asset.location != here) return "drop requires being at asset " + asset.id;
      return {};
    }
  }
  return "unknown action";
}

std::vector<UavAction> applicable_for(const JointState& s, const World& w, int uav) {
  std::vector<UavAction> out;
  auto consider = [&](UavAction a) {
    if (precondition_failure(s, w, uav, a).empty()) out.push_back(a);
  };
  for (auto d : {Direction::north, Direction::south, Direction::east, Direction::west}) consider(UavAction::move(d));
  for (int i = 0; i < static_cast<int>(w.targets().size()); ++i) consider(UavAction::photo(i));
  for (int i = 0; i < static_cast<int>(w.pallets().size()); ++i) consider(UavAction::pickup(i));
  for (int i = 0; i < w.num_assets(); ++i) consider(UavAction::drop(i));
  out.push_back(UavAction::wait());
  return out;
}

namespace {

bool is_operational(const World& w, const std::vector<bool>* operational, std::size_t u) {
  return operational ? (*operational)[u] : w.uavs()[u].operational;
}

bool double_pickup(const JointAction& a) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].kind != ActionKind::pickup) continue;
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      if (a[j].kind == ActionKind::pickup && a[j].arg == a[i].arg) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<JointAction> applicable(const JointState& s, const World& w, const std::vector<bool>* operational) {
  const auto n = static_cast<std::size_t>(w.num_uavs());
  std::vector<std::vector<UavAction>> options(n);
  for (std::size_t u = 0; u < n; ++u) {
    options[u] = is_operational(w, operational, u) ? applicable_for(s, w, static_cast<int>(u))
                                                   : std::vector<UavAction>{UavAction::wait()};
  }
  std::vector<JointAction> out;
  JointAction current(n);
  std::vector<std::size_t> pick(n, 0);
  while (true) {
    for (std::size_t u = 0; u < n; ++u) current[u] = options[u][pick[u]];
    if (!double_pickup(current)) out.push_back(current);
    std::size_t u = n;
    while (u > 0) {
      --u;
      if (++pick[u] < options[u].size()) break;
      pick[u] = 0;
      if (u == 0) return out;
    }
    if (n == 0) return out;
  }
}

void check_applicable(const JointState& s, const JointAction& a, const World& w, const std::vector<bool>* operational) {
  if (a.size() != static_cast<std::size_t>(w.num_uavs())) {
    throw PreconditionError("joint action has " + std::to_string(a.size()) + " entries, world has " +
                            std::to_string(w.num_uavs()) + " UAVs");
  }
  if (s.t >= w.horizon()) throw PreconditionError("state at t=" + std::to_string(s.t) + " is at the horizon");
  for (std::size_t u = 0; u < a.size(); ++u) {
    const auto& id = w.uavs()[u].id;
    if (!is_operational(w, operational, u) && !a[u].is_wait()) {
      throw PreconditionError("uav " + id + ": not operational, only wait is allowed");
    }
    auto why = precondition_failure(s, w, static_cast<int>(u), a[u]);
    if (!why.empty()) throw PreconditionError("uav " + id + ": " + why);
  }
  if (double_pickup(a)) throw PreconditionError("two UAVs pick up the same pallet");
}

JointState step(const JointState& s, const JointAction& a, const World& w, const std::vector<bool>* operational) {
  check_applicable(s, a, w, operational);
  JointState next = s;
  next.t = s.t + 1;
  for (std::size_t u = 0; u < a.size(); ++u) {
    const auto& act = a[u];
    const int uav = static_cast<int>(u);
    switch (act.kind) {
      case ActionKind::move:
        next.uav_at[u] = moved(s.uav_at[u], act.dir);
        break;
      case ActionKind::photo:
        next.photos |= std::uint64_t{1} << w.photo_bit(act.arg, uav);
        break;
      case ActionKind::pickup:
        next.carrying[u] = act.arg;
        break;
      case ActionKind::drop: {
        const int pallet = s.carrying[u];
        next.carrying[u] = -1;
        next.pallet_at[static_cast<std::size_t>(pallet)] = w.assets()[static_cast<std::size_t>(act.arg)].location;
        if (w.asset_needs(act.arg, pallet)) next.delivered |= std::uint64_t{1} << w.delivery_bit(pallet, act.arg);
        break;
      }
      case ActionKind::wait:
        break;
    }
  }
  for (std::size_t u = 0; u < a.size(); ++u) {
    if (next.carrying[u] >= 0) next.pallet_at[static_cast<std::size_t>(next.carrying[u])] = next.uav_at[u];
    for (int asset = 0; asset < w.num_assets(); ++asset) {
      if (next.uav_at[u] == w.assets()[static_cast<std::size_t>(asset)].location) {
        next.visited |= std::uint64_t{1} << w.visit_bit(asset, static_cast<int>(u));
      }
    }
  }
  return next;
}

bool holds(const ResolvedProposition& p, const JointState& s, const World& w) {
  switch (p.pred) {
    case Predicate::agentloc:
      return s.uav_at[static_cast<std::size_t>(p.i)] == p.cell;
    case Predicate::have_photo:
      return has_photo(s, w, p.i, p.j);
    case Predicate::visited:
      return has_visited(s, w, p.i, p.j);
    case Predicate::carry_pallet:
      return s.carrying[static_cast<std::size_t>(p.j)] == p.i;
    case Predicate::delivered:
      return is_delivered(s, w, p.i, p.j);
    case Predicate::t_eq:
      return s.t == p.k;
  }
  return false;
}

std::vector<Proposition> propositions(const JointState& s, const World& w) {
  std::vector<Proposition> out;
  const auto& uavs = w.uavs();
  for (std::size_t u = 0; u < uavs.size(); ++u) {
    out.push_back({Predicate::agentloc, uavs[u].id, {}, s.uav_at[u].x, s.uav_at[u].y});
    if (s.carrying[u] >= 0) {
      out.push_back({Predicate::carry_pallet, w.pallets()[static_cast<std::size_t>(s.carrying[u])].id, uavs[u].id});
    }
  }
  for (std::size_t t = 0; t < w.targets().size(); ++t) {
    for (std::size_t u = 0; u < uavs.size(); ++u) {
      if (has_photo(s, w, static_cast<int>(t), static_cast<int>(u))) {
        out.push_back({Predicate::have_photo, w.targets()[t].id, uavs[u].id});
      }
    }
  }
  for (std::size_t a = 0; a < w.assets().size(); ++a) {
    for (std::size_t u = 0; u < uavs.size(); ++u) {
      if (has_visited(s, w, static_cast<int>(a), static_cast<int>(u))) {
        out.push_back({Predicate::visited, w.assets()[a].id, uavs[u].id});
      }
    }
  }
  for (std::size_t p = 0; p < w.pallets().size(); ++p) {
    for (std::size_t a = 0; a < w.assets().size(); ++a) {
      if (is_delivered(s, w, static_cast<int>(p), static_cast<int>(a))) {
        out.push_back({Predicate::delivered, w.pallets()[p].id, w.assets()[a].id});
      }
    }
  }
  out.push_back({Predicate::t_eq, {}, {}, s.t, 0});
  std::sort(out.begin(), out.end());
  return out;
}

bool goal_satisfied(const Goal& g, const JointState& s, const World& w) {
  switch (g.kind) {
    case GoalKind::photo: {
      const int target = *w.target_index(g.subject);
      for (int u = 0; u < w.num_uavs(); ++u) {
        if (has_photo(s, w, target, u)) return true;
      }
      return false;
    }
    case GoalKind::visit: {
      const int asset = *w.asset_index(g.subject);
      for (int u = 0; u < w.num_uavs(); ++u) {
        if (has_visited(s, w, asset, u)) return true;
      }
      return false;
    }
    case GoalKind::supply: {
      const int asset = *w.asset_index(g.subject);
      for (int p = 0; p < static_cast<int>(w.pallets().size()); ++p) {
        if (is_delivered(s, w, p, asset)) return true;
      }
      return false;
    }
  }
  return false;
}

std::set<std::string> goals_satisfied(const std::vector<JointState>& trace, const World& w) {
  std::set<std::string> out;
  if (trace.empty()) return out;
  for (const auto& g : w.goals()) {
    if (goal_satisfied(g, trace.back(), w)) out.insert(g.id());
  }
  return out;
}

int count_actions(const JointAction& a) {
  int n = 0;
  for (const auto& x : a) n += x.is_wait() ? 0 : 1;
  return n;
}

std::string render_action(const UavAction& a, const World& w) {
  switch (a.kind) {
    case ActionKind::move:
      return "move(" + direction_name(a.dir) + ")";
    case ActionKind::photo:
      return "photo(" + w.targets()[static_cast<std::size_t>(a.arg)].id + ")";
    case ActionKind::pickup:
      return "pickup(" + w.pallets()[static_cast<std::size_t>(a.arg)].id + ")";
    case ActionKind::drop:
      return "drop(" + w.assets()[static_cast<std::size_t>(a.arg)].id + ")";
    case ActionKind::wait:
      return "wait";
  }
  return "?";
}

}  // namespace resplan::domain
