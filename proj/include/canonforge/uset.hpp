#pragma once

#include <compare>
#include <cstdint>
#include <deque>
#include <shared_mutex>
#include <string>

namespace canonforge {

using UsetId = std::uint32_t;

struct UsetInfo {
  UsetId id = 0;
  std::string name;
  std::uint32_t size = 0;
};

/// Append-only registry of unlabeled sets. Ids are assigned in creation
/// order and never reused, so any ordering derived from ids is stable for
/// a fixed creation sequence. Names are informative only and need not be
/// unique.
class UsetRegistry {
public:
  static UsetRegistry& global();

  UsetId create(std::uint32_t size, std::string name);
  UsetInfo info(UsetId id) const;
  std::uint32_t size_of(UsetId id) const;
  std::string name_of(UsetId id) const;
  std::uint32_t count() const;

private:
  mutable std::shared_mutex mu_;
  std::deque<UsetInfo> entries_;
};

/// An indivisible value belonging to an unlabeled set. Identified by
/// (uset id, index); the pair also defines the atom's position in the
/// total order.
struct Atom {
  UsetId uset = 0;
  std::uint32_t index = 0;

  friend constexpr auto operator<=>(const Atom&, const Atom&) = default;
};

/// Handle for a registered unlabeled set.
class Uset {
public:
  Uset(std::uint32_t size, std::string name);

  UsetId id() const { return id_; }
  std::uint32_t size() const { return size_; }
  const std::string& name() const { return name_; }
  Atom atom(std::uint32_t index) const;  // throws std::out_of_range

private:
  UsetId id_;
  std::uint32_t size_;
  std::string name_;
};

}  // namespace canonforge
