#pragma once

#include <cstdint>
#include <limits>
#include <string>

namespace optsmr {

/// Identifier of a multicast group: one of the K indexed groups g_0..g_{K-1},
/// or the distinguished group that every server thread subscribes to.
class GroupId {
public:
  static GroupId indexed(unsigned i) { return GroupId(i); }
  static GroupId all() { return GroupId(kAll); }

  bool is_all() const { return v_ == kAll; }
  unsigned index() const { return v_; }

  friend bool operator==(GroupId a, GroupId b) { return a.v_ == b.v_; }
  friend bool operator!=(GroupId a, GroupId b) { return a.v_ != b.v_; }

  std::string str() const { return is_all() ? "all" : "g" + std::to_string(v_); }

private:
  explicit GroupId(unsigned v) : v_(v) {}
  static constexpr unsigned kAll = std::numeric_limits<unsigned>::max();
  unsigned v_;
};

/// Destination set of a multicast. Either a single indexed group or the
/// full set {g_0..g_{K-1}}; no other subsets exist. A GroupSet is never
/// empty by construction.
class GroupSet {
public:
  static GroupSet singleton(unsigned i) { return GroupSet(GroupId::indexed(i)); }
  static GroupSet singleton(GroupId g) { return GroupSet(g); }
  static GroupSet all_groups() { return GroupSet(GroupId::all()); }

  bool is_all() const { return g_.is_all(); }
  bool is_singleton() const { return !g_.is_all(); }
  unsigned index() const { return g_.index(); }

  /// Lowest group index among the destinations; the deterministic executor
  /// pick for synchronous mode.
  unsigned min_index() const { return is_all() ? 0u : g_.index(); }

  friend bool operator==(GroupSet a, GroupSet b) { return a.g_ == b.g_; }
  friend bool operator!=(GroupSet a, GroupSet b) { return !(a == b); }

  std::string str() const { return g_.str(); }

private:
  explicit GroupSet(GroupId g) : g_(g) {}
  GroupId g_;
};

}  // namespace optsmr
