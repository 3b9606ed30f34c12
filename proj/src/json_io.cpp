#include "canonforge/json_io.hpp"

#include <functional>
#include <utility>
#include <vector>

#include "canonforge/errors.hpp"

namespace canonforge {

namespace {

using nlohmann::json;

const Uset& resolve_uset(const std::string& name, const UsetTable& usets) {
  auto it = usets.find(name);
  if (it == usets.end())
    throw EngineError("unknown uset '" + name + "' (declared: " +
                      [&] {
                        std::string all;
                        for (const auto& [n, u] : usets)
                          all += (all.empty() ? "" : ", ") + n;
                        return all.empty() ? std::string("none") : all;
                      }() +
                      ")");
  return it->second;
}

PredFn named_predicate(const std::string& name) {
  if (name == "distinct")
    return [](const Value& v) {
      auto items = v.items();
      for (std::size_t i = 0; i < items.size(); ++i)
        for (std::size_t j = i + 1; j < items.size(); ++j)
          if (items[i] == items[j]) return false;
      return true;
    };
  if (name == "no_loop")
    return [](const Value& v) { return v.items()[0] != v.items()[1]; };
  if (name == "nonempty")
    return [](const Value& v) { return !v.items().empty(); };
  throw EngineError("unknown predicate '" + name +
                    "' (built in: distinct, no_loop, nonempty)");
}

json require(const json& j, const char* field, const char* kind) {
  if (!j.contains(field))
    throw EngineError(std::string(kind) + " spec needs a '" + field +
                      "' field: " + j.dump());
  return j.at(field);
}

}  // namespace

nlohmann::json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Kind::Unit:
      return nullptr;
    case Kind::Boolean:
      return v.as_bool();
    case Kind::Integer:
      return v.as_int();
    case Kind::Text:
      return v.as_text();
    case Kind::AtomK: {
      const Atom a = v.as_atom();
      return json{{"uset", UsetRegistry::global().name_of(a.uset)},
                  {"i", a.index}};
    }
    case Kind::Tuple: {
      json arr = json::array();
      for (const Value& item : v.items()) arr.push_back(value_to_json(item));
      return arr;
    }
    case Kind::Set: {
      json arr = json::array();
      for (const Value& item : v.items()) arr.push_back(value_to_json(item));
      return json{{"set", std::move(arr)}};
    }
    case Kind::Map: {
      json arr = json::array();
      for (const MapEntry& e : v.entries())
        arr.push_back(json::array(
            {value_to_json(e.first), value_to_json(e.second)}));
      return json{{"map", std::move(arr)}};
    }
  }
  throw EngineError("unknown value kind");
}

Value value_from_json(const nlohmann::json& j, const UsetTable& usets) {
  if (j.is_null()) return Value::unit();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_number_integer() || j.is_number_unsigned())
    return Value::integer(j.get<std::int64_t>());
  if (j.is_string()) return Value::text(j.get<std::string>());
  if (j.is_array()) {
    ValueList items;
    items.reserve(j.size());
    for (const json& item : j) items.push_back(value_from_json(item, usets));
    return Value::tuple(std::move(items));
  }
  if (j.is_object()) {
    if (j.contains("uset")) {
      const Uset& u = resolve_uset(j.at("uset").get<std::string>(), usets);
      const auto index = require(j, "i", "atom").get<std::uint64_t>();
      if (index >= u.size())
        throw EngineError("atom index " + std::to_string(index) +
                          " exceeds uset '" + u.name() + "' of size " +
                          std::to_string(u.size()));
      return Value::atom(u, static_cast<std::uint32_t>(index));
    }
    if (j.contains("set")) {
      ValueList items;
      for (const json& item : j.at("set"))
        items.push_back(value_from_json(item, usets));
      return Value::set(std::move(items));
    }
    if (j.contains("map")) {
      MapEntries entries;
      for (const json& e : j.at("map")) {
        if (!e.is_array() || e.size() != 2)
          throw EngineError("map entries must be [key, value] pairs: " +
                            e.dump());
        entries.emplace_back(value_from_json(e[0], usets),
                             value_from_json(e[1], usets));
      }
      return Value::map(std::move(entries));
    }
  }
  throw EngineError("unrecognized value encoding: " + j.dump());
}

DomainSpec domain_from_json(const nlohmann::json& spec) {
  UsetTable usets;
  if (spec.contains("usets")) {
    for (const json& u : spec.at("usets")) {
      const auto name = require(u, "name", "uset").get<std::string>();
      const auto size = require(u, "size", "uset").get<std::int64_t>();
      if (size <= 0)
        throw EngineError("uset '" + name + "' needs a positive size");
      if (usets.count(name))
        throw EngineError("uset '" + name + "' is declared twice");
      usets.emplace(name, Uset(static_cast<std::uint32_t>(size), name));
    }
  }

  std::function<Domain(const json&)> parse = [&](const json& j) -> Domain {
    if (!j.is_object())
      throw EngineError("domain spec must be an object: " + j.dump());
    const auto kind = require(j, "kind", "domain").get<std::string>();
    if (kind == "range")
      return range_domain(require(j, "n", "range").get<std::int64_t>());
    if (kind == "boolean") return boolean_domain();
    if (kind == "none") return none_domain();
    if (kind == "uset")
      return uset_domain(
          resolve_uset(require(j, "name", "uset").get<std::string>(), usets));
    if (kind == "values" || kind == "cnf_values") {
      ValueList items;
      for (const json& item : require(j, "items", kind.c_str()))
        items.push_back(value_from_json(item, usets));
      return kind == "values" ? values_domain(std::move(items))
                              : cnf_values(std::move(items));
    }
    if (kind == "product" || kind == "join") {
      std::vector<Domain> parts;
      for (const json& part : require(j, "of", kind.c_str()))
        parts.push_back(parse(part));
      return kind == "product" ? product(std::move(parts))
                               : join(std::move(parts));
    }
    if (kind == "sequences")
      return sequences(parse(require(j, "of", "sequences")),
                       require(j, "k", "sequences").get<std::uint32_t>());
    if (kind == "subsets") {
      Domain of = parse(require(j, "of", "subsets"));
      if (j.contains("k")) return subsets(of, j.at("k").get<std::uint32_t>());
      return subsets(of);
    }
    if (kind == "mappings")
      return mappings(parse(require(j, "keys", "mappings")),
                      parse(require(j, "values", "mappings")));
    if (kind == "filter")
      return filter_domain(
          parse(require(j, "of", "filter")),
          named_predicate(require(j, "pred", "filter").get<std::string>()),
          require(j, "pred", "filter").get<std::string>());
    throw EngineError("unknown domain kind '" + kind +
                      "' (known: range, boolean, none, uset, values, "
                      "cnf_values, product, sequences, subsets, mappings, "
                      "join, filter)");
  };

  Domain d = parse(require(spec, "domain", "top-level"));
  return DomainSpec{std::move(usets), std::move(d)};
}

DomainSpec domain_from_json_text(const std::string& text) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw EngineError(std::string("spec is not valid JSON: ") + e.what());
  }
  return domain_from_json(parsed);
}

}  // namespace canonforge
