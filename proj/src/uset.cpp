#include "canonforge/uset.hpp"

#include <mutex>
#include <stdexcept>

namespace canonforge {

UsetRegistry& UsetRegistry::global() {
  static UsetRegistry registry;
  return registry;
}

UsetId UsetRegistry::create(std::uint32_t size, std::string name) {
  std::unique_lock lock(mu_);
  UsetId id = static_cast<UsetId>(entries_.size());
  entries_.push_back(UsetInfo{id, std::move(name), size});
  return id;
}

UsetInfo UsetRegistry::info(UsetId id) const {
  std::shared_lock lock(mu_);
  if (id >= entries_.size()) throw std::out_of_range("unknown uset id");
  return entries_[id];
}

std::uint32_t UsetRegistry::size_of(UsetId id) const { return info(id).size; }

std::string UsetRegistry::name_of(UsetId id) const { return info(id).name; }

std::uint32_t UsetRegistry::count() const {
  std::shared_lock lock(mu_);
  return static_cast<std::uint32_t>(entries_.size());
}

Uset::Uset(std::uint32_t size, std::string name) : size_(size), name_(name) {
  id_ = UsetRegistry::global().create(size, std::move(name));
}

Atom Uset::atom(std::uint32_t index) const {
  if (index >= size_)
    throw std::out_of_range("atom index " + std::to_string(index) + " out of range for uset '" +
                            name_ + "' of size " + std::to_string(size_));
  return Atom{id_, index};
}

}  // namespace canonforge
