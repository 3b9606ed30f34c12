#include "canonforge/value.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace canonforge {

Value Value::text(std::string s) {
  return Value(Rep(std::make_shared<const std::string>(std::move(s))));
}

Value Value::tuple(ValueList items) {
  return Value(Rep(TupleRep{std::make_shared<const ValueList>(std::move(items))}));
}

Value Value::set(ValueList items) {
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return Value(Rep(SetRep{std::make_shared<const ValueList>(std::move(items))}));
}

Value Value::map(MapEntries entries) {
  std::sort(entries.begin(), entries.end(),
            [](const MapEntry& a, const MapEntry& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i - 1].first == entries[i].first)
      throw std::invalid_argument("map with duplicate key " + entries[i].first.str());
  }
  return Value(Rep(MapRep{std::make_shared<const MapEntries>(std::move(entries))}));
}

std::span<const Value> Value::items() const {
  if (auto* t = std::get_if<TupleRep>(&rep_)) return *t->items;
  if (auto* s = std::get_if<SetRep>(&rep_)) return *s->items;
  throw std::logic_error("items() on non-sequence value");
}

std::span<const MapEntry> Value::entries() const {
  return *std::get<MapRep>(rep_).entries;
}

namespace {

std::strong_ordering compare_lists(std::span<const Value> a, std::span<const Value> b) {
  if (auto c = a.size() <=> b.size(); c != 0) return c;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (auto c = Value::compare(a[i], b[i]); c != 0) return c;
  }
  return std::strong_ordering::equal;
}

}  // namespace

std::strong_ordering Value::compare(const Value& a, const Value& b) {
  if (auto c = a.rep_.index() <=> b.rep_.index(); c != 0) return c;
  switch (a.kind()) {
    case Kind::Unit:
      return std::strong_ordering::equal;
    case Kind::Boolean:
      return a.as_bool() <=> b.as_bool();
    case Kind::Integer:
      return a.as_int() <=> b.as_int();
    case Kind::Text:
      return a.as_text().compare(b.as_text()) <=> 0;
    case Kind::AtomK:
      return a.as_atom() <=> b.as_atom();
    case Kind::Tuple:
    case Kind::Set:
      return compare_lists(a.items(), b.items());
    case Kind::Map: {
      auto ea = a.entries(), eb = b.entries();
      if (auto c = ea.size() <=> eb.size(); c != 0) return c;
      for (std::size_t i = 0; i < ea.size(); ++i) {
        if (auto c = compare(ea[i].first, eb[i].first); c != 0) return c;
        if (auto c = compare(ea[i].second, eb[i].second); c != 0) return c;
      }
      return std::strong_ordering::equal;
    }
  }
  throw std::logic_error("unreachable value kind");
}

std::string Value::str() const {
  std::ostringstream out;
  switch (kind()) {
    case Kind::Unit:
      out << "None";
      break;
    case Kind::Boolean:
      out << (as_bool() ? "True" : "False");
      break;
    case Kind::Integer:
      out << as_int();
      break;
    case Kind::Text:
      out << '\'' << as_text() << '\'';
      break;
    case Kind::AtomK: {
      Atom a = as_atom();
      out << UsetRegistry::global().name_of(a.uset) << a.index;
      break;
    }
    case Kind::Tuple: {
      auto xs = items();
      out << '(';
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ", ";
        out << xs[i].str();
      }
      if (xs.size() == 1) out << ',';
      out << ')';
      break;
    }
    case Kind::Set: {
      auto xs = items();
      out << '{';
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out << ", ";
        out << xs[i].str();
      }
      out << '}';
      break;
    }
    case Kind::Map: {
      auto es = entries();
      out << '{';
      for (std::size_t i = 0; i < es.size(); ++i) {
        if (i) out << "; ";
        out << es[i].first.str() << ": " << es[i].second.str();
      }
      out << '}';
      break;
    }
  }
  return out.str();
}

namespace {

void collect_atoms(const Value& v, std::vector<Atom>& out) {
  switch (v.kind()) {
    case Kind::AtomK:
      out.push_back(v.as_atom());
      break;
    case Kind::Tuple:
    case Kind::Set:
      for (const Value& child : v.items()) collect_atoms(child, out);
      break;
    case Kind::Map:
      for (const MapEntry& e : v.entries()) {
        collect_atoms(e.first, out);
        collect_atoms(e.second, out);
      }
      break;
    default:
      break;
  }
}

}  // namespace

std::vector<Atom> atoms_of(const Value& v) {
  std::vector<Atom> out;
  collect_atoms(v, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool has_gap(std::span<const Atom> sorted_atoms) {
  // Sorted input groups each uset together with ascending unique indices,
  // so a uset's indices form the prefix 0..k-1 iff the last one is k-1.
  std::size_t i = 0;
  while (i < sorted_atoms.size()) {
    std::size_t j = i;
    while (j + 1 < sorted_atoms.size() && sorted_atoms[j + 1].uset == sorted_atoms[i].uset) ++j;
    if (sorted_atoms[j].index != static_cast<std::uint32_t>(j - i)) return true;
    i = j + 1;
  }
  return false;
}

std::optional<Value> parent_of(const Value& v) {
  switch (v.kind()) {
    case Kind::Tuple: {
      auto xs = v.items();
      if (xs.empty()) return std::nullopt;
      return Value::tuple(ValueList(xs.begin(), xs.end() - 1));
    }
    case Kind::Set: {
      auto xs = v.items();
      if (xs.empty()) return std::nullopt;
      return Value::set(ValueList(xs.begin(), xs.end() - 1));
    }
    case Kind::Map: {
      auto es = v.entries();
      if (es.empty()) return std::nullopt;
      return Value::map(MapEntries(es.begin(), es.end() - 1));
    }
    default:
      return std::nullopt;
  }
}

}  // namespace canonforge
