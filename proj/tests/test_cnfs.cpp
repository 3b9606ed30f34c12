#include <algorithm>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "canonforge/cnfs.hpp"
#include "canonforge/domain.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace canonforge;
using namespace testkit;

namespace {

Value pair_of(const Uset& u, std::uint32_t i, std::uint32_t j) {
  return tup({Value::atom(u, i), Value::atom(u, j)});
}

ValueList sorted_copy(ValueList xs) {
  std::sort(xs.begin(), xs.end());
  return xs;
}

/// Independent oracle: materialize the domain and keep each element that is
/// the least member of its class, via the permutation-search canonical_form.
/// Deduplicated, since joins may repeat elements but classes are reported
/// once.
ValueList brute_canonical(const Domain& d) {
  ValueList out;
  for (const Value& v : collect_all(d))
    if (canonical_form(v) == v) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Random strict domain with a small exact size, for oracle comparisons.
Domain random_strict(Rng& rng, int depth, int& uset_budget) {
  auto leaf = [&]() -> Domain {
    switch (below(rng, 5)) {
      case 0:
        return range_domain(1 + static_cast<std::int64_t>(below(rng, 3)));
      case 1:
        return boolean_domain();
      case 2:
        return none_domain();
      default:
        if (uset_budget > 0) {
          --uset_budget;
          return uset_domain(1 + static_cast<std::uint32_t>(below(rng, 3)), "u");
        }
        return range_domain(2);
    }
  };
  if (depth <= 0) return leaf();
  switch (below(rng, 5)) {
    case 0:
      return product({random_strict(rng, depth - 1, uset_budget),
                      random_strict(rng, depth - 1, uset_budget)});
    case 1: {
      Domain c = random_strict(rng, depth - 1, uset_budget);
      if (!c.span() || *c.span() > 5) c = leaf();
      if (below(rng, 2) == 0) {
        auto k = static_cast<std::uint32_t>(
            below(rng, std::min<std::uint64_t>(*c.span(), 3) + 1));
        return subsets(c, k);
      }
      return subsets(c);
    }
    case 2: {
      Domain v = random_strict(rng, depth - 1, uset_budget);
      if (!v.span() || *v.span() > 6) v = leaf();
      return mappings(leaf(), v);
    }
    case 3:
      return join({random_strict(rng, depth - 1, uset_budget),
                   random_strict(rng, depth - 1, uset_budget)});
    default:
      return sequences(random_strict(rng, depth - 1, uset_budget),
                       1 + static_cast<std::uint32_t>(below(rng, 2)));
  }
}

}  // namespace

TEST_SUITE("cnfs") {

TEST_CASE("values are canonical exactly when least in their class") {
  Uset a(3, "a");
  CHECK(is_canonical(tup({Value::atom(a, 0), Value::atom(a, 1)})));
  CHECK_FALSE(is_canonical(tup({Value::atom(a, 1), Value::atom(a, 0)})));
  CHECK_FALSE(is_canonical(set({Value::atom(a, 0), Value::atom(a, 2)})));  // gap
  CHECK(is_canonical(Value::atom(a, 0)));
  CHECK_FALSE(is_canonical(Value::atom(a, 1)));
  CHECK(is_canonical(vi(5)));
  CHECK(is_canonical(tup({})));
  CHECK(is_canonical(set({})));
  Uset b(2, "b");
  CHECK(is_canonical(set({Value::atom(a, 0), Value::atom(b, 0)})));
  CHECK_FALSE(is_canonical(set({Value::atom(a, 0), Value::atom(b, 1)})));
}

TEST_CASE("search nodes carry depth and used atom prefixes") {
  Uset a(3, "a");
  SearchNode n = SearchNode::from_value(tup({Value::atom(a, 0), Value::atom(a, 1)}));
  CHECK(n.depth == 2);
  REQUIRE(n.used_atoms.size() == 1);
  CHECK(n.used_atoms[0] == std::pair<UsetId, std::uint32_t>{a.id(), 2});

  SearchNode empty = SearchNode::from_value(set({}));
  CHECK(empty.depth == 0);
  CHECK(empty.used_atoms.empty());

  CHECK_THROWS_AS(SearchNode::from_value(vi(3)), std::invalid_argument);
  CHECK_THROWS_AS(SearchNode::from_value(set({Value::atom(a, 1)})),
                  std::invalid_argument);  // gapped
}

TEST_CASE("extensions of tuple and set nodes") {
  Uset big(1000, "a");
  Domain d = uset_domain(big);

  auto ext0 = extensions(SearchNode::from_value(tup({})), d);
  REQUIRE(ext0.size() == 1);
  CHECK(ext0[0] == Value::atom(big, 0));

  auto ext1 = extensions(SearchNode::from_value(tup({Value::atom(big, 0)})), d);
  REQUIRE(ext1.size() == 2);
  CHECK(ext1[0] == Value::atom(big, 0));
  CHECK(ext1[1] == Value::atom(big, 1));

  Uset a(3, "a");
  auto exts =
      extensions(SearchNode::from_value(set({Value::atom(a, 0)})), uset_domain(a));
  REQUIRE(exts.size() == 1);
  CHECK(exts[0] == Value::atom(a, 1));

  // Tuple extensions over a composite subdomain: every gap-free image of
  // each canonical pair, in image order.
  Domain pairs = uset_domain(a) * uset_domain(a);
  auto root = extensions(SearchNode::from_value(tup({})), pairs);
  ValueList want = {pair_of(a, 0, 0), pair_of(a, 0, 1), pair_of(a, 1, 0)};
  CHECK(root == want);

  CHECK_THROWS_AS(extensions(SearchNode::from_value(map({})), d),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      extensions(SearchNode::from_value(tup({})),
                 filter_domain(d, [](const Value&) { return true; })),
      NonStrictDomainError);
}

TEST_CASE("products enumerate canonical tuples") {
  Uset a(3, "a");
  Domain sq = uset_domain(a) * uset_domain(a);
  ValueList got = cnfs_collect(sq);
  ValueList want = {pair_of(a, 0, 0), pair_of(a, 0, 1)};
  CHECK(got == want);

  // Mixed with an atom-free operand: integers never constrain the images.
  Domain mixed = range_domain(2) * uset_domain(a);
  ValueList got2 = cnfs_collect(mixed);
  ValueList want2 = {tup({vi(0), Value::atom(a, 0)}), tup({vi(1), Value::atom(a, 0)})};
  CHECK(got2 == want2);
  CHECK(sorted_copy(got2) == brute_canonical(mixed));
}

TEST_CASE("huge usets cost nothing extra") {
  Uset a(1000, "a");
  Domain sq = uset_domain(a) * uset_domain(a);
  ValueList got = cnfs_collect(sq);
  REQUIRE(got.size() == 2);
  CHECK(got[0] == pair_of(a, 0, 0));
  CHECK(got[1] == pair_of(a, 0, 1));
  CHECK(cnfs_collect(uset_domain(a)) == ValueList{Value::atom(a, 0)});
}

TEST_CASE("sums concatenate and deduplicate classes") {
  Uset a(3, "a");
  Uset b(2, "b");
  ValueList got = cnfs_collect(uset_domain(a) + uset_domain(b));
  ValueList want = {Value::atom(a, 0), Value::atom(b, 0)};
  CHECK(got == want);

  // Overlapping operands: a class is reported once.
  ValueList once = cnfs_collect(uset_domain(a) + uset_domain(a));
  CHECK(once == ValueList{Value::atom(a, 0)});

  Domain mix = uset_domain(a) + cnf_values({Value::atom(a, 0)});
  CHECK(cnfs_collect(mix) == ValueList{Value::atom(a, 0)});
}

TEST_CASE("subsets emit one canonical set per class in preorder") {
  Uset a(3, "a");
  ValueList got = cnfs_collect(subsets(uset_domain(a)));
  ValueList want = {
      set({}),
      set({Value::atom(a, 0)}),
      set({Value::atom(a, 0), Value::atom(a, 1)}),
      set({Value::atom(a, 0), Value::atom(a, 1), Value::atom(a, 2)}),
  };
  CHECK(got == want);
  for (std::size_t card = 0; card < want.size(); ++card)
    CHECK(got[card].items().size() == card);
}

TEST_CASE("digraphs on two nodes, exact listing") {
  Uset n(2, "n");
  Domain edges = uset_domain(n) * uset_domain(n);
  Domain graphs = subsets(edges);

  auto g = [&](std::vector<std::pair<int, int>> es) {
    ValueList items;
    for (auto [i, j] : es)
      items.push_back(pair_of(n, static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(j)));
    return set(std::move(items));
  };
  ValueList want = {
      g({}),
      g({{0, 0}}),
      g({{0, 0}, {1, 1}}),
      g({{0, 0}, {0, 1}}),
      g({{0, 0}, {0, 1}, {1, 1}}),
      g({{0, 0}, {0, 1}, {1, 0}}),
      g({{0, 0}, {0, 1}, {1, 0}, {1, 1}}),
      g({{0, 0}, {1, 0}}),
      g({{0, 1}}),
      g({{0, 1}, {1, 0}}),
  };

  ValueList fast = cnfs_collect(graphs);
  ValueList generic = cnfs_collect(graphs, {.force_generic = true});
  CHECK(fast == want);
  CHECK(generic == want);

  // 16 labeled graphs collapse onto these 10 classes.
  ValueList all = collect_all(graphs);
  CHECK(all.size() == 16);
  CHECK(sorted_copy(fast) == brute_canonical(graphs));
}

TEST_CASE("fixed cardinality subsets") {
  Uset a(4, "a");
  ValueList got = cnfs_collect(subsets(uset_domain(a), 2));
  REQUIRE(got.size() == 1);
  CHECK(got[0] == set({Value::atom(a, 0), Value::atom(a, 1)}));

  CHECK(cnfs_collect(subsets(uset_domain(a), 0)) == ValueList{set({})});

  Uset n(3, "n");
  Domain two_edges = subsets(uset_domain(n) * uset_domain(n), 2);
  ValueList fast = cnfs_collect(two_edges);
  ValueList generic = cnfs_collect(two_edges, {.force_generic = true});
  CHECK(fast == generic);
  CHECK(sorted_copy(fast) == brute_canonical(two_edges));
}

TEST_CASE("mappings enumerate canonical assignments") {
  Uset k(2, "k");
  Uset v(2, "v");
  auto m = [](std::initializer_list<MapEntry> es) { return map(MapEntries(es)); };

  ValueList got = cnfs_collect(mappings(uset_domain(k), uset_domain(v)));
  ValueList want = {
      m({{Value::atom(k, 0), Value::atom(v, 0)},
         {Value::atom(k, 1), Value::atom(v, 0)}}),
      m({{Value::atom(k, 0), Value::atom(v, 0)},
         {Value::atom(k, 1), Value::atom(v, 1)}}),
  };
  CHECK(got == want);
  CHECK(sorted_copy(got) == brute_canonical(mappings(uset_domain(k), uset_domain(v))));

  // Keys and values drawing from the same uset: the unary functions on two
  // interchangeable points have three shapes (constant, identity, swap).
  Uset q(2, "q");
  Domain fns = mappings(uset_domain(q), uset_domain(q));
  ValueList fgot = cnfs_collect(fns);
  ValueList fwant = {
      m({{Value::atom(q, 0), Value::atom(q, 0)},
         {Value::atom(q, 1), Value::atom(q, 0)}}),
      m({{Value::atom(q, 0), Value::atom(q, 0)},
         {Value::atom(q, 1), Value::atom(q, 1)}}),
      m({{Value::atom(q, 0), Value::atom(q, 1)},
         {Value::atom(q, 1), Value::atom(q, 0)}}),
  };
  CHECK(fgot == fwant);
  CHECK(sorted_copy(fgot) == brute_canonical(fns));

  // Keys with atoms of their own.
  Uset s(2, "s");
  Domain table = mappings(uset_domain(q) * uset_domain(s), uset_domain(q));
  CHECK(sorted_copy(cnfs_collect(table)) == brute_canonical(table));
}

TEST_CASE("elementary domains") {
  CHECK(cnfs_collect(range_domain(4)) ==
        ValueList{vi(0), vi(1), vi(2), vi(3)});
  CHECK(cnfs_collect(boolean_domain()) == ValueList{vb(false), vb(true)});
  CHECK(cnfs_collect(none_domain()) == ValueList{Value::unit()});

  Uset a(3, "a");
  Value x = set({Value::atom(a, 0)});
  Value y = set({Value::atom(a, 0), Value::atom(a, 1)});
  // cnf_values reports the given representatives in the given order.
  CHECK(cnfs_collect(cnf_values({y, x})) == ValueList{y, x});
}

TEST_CASE("non-strict domains are rejected") {
  Domain d = range_domain(4);
  CHECK_THROWS_AS(cnfs_collect(values_domain({vi(1)})), NonStrictDomainError);
  CHECK_THROWS_AS(cnfs_collect(map_domain(d, [](const Value& v) { return v; })),
                  NonStrictDomainError);
  CHECK_THROWS_AS(
      cnfs_collect(filter_domain(d, [](const Value&) { return true; })),
      NonStrictDomainError);
  CHECK_THROWS_AS(
      cnfs_collect(d + filter_domain(d, [](const Value&) { return true; })),
      NonStrictDomainError);
  CHECK_THROWS_WITH_AS(cnfs_collect(values_domain({vi(1)})),
                       doctest::Contains("strict"), NonStrictDomainError);
}

TEST_CASE("digraphs on three nodes agree with the exhaustive filter") {
  Uset n(3, "n");
  Domain graphs = subsets(uset_domain(n) * uset_domain(n));

  ValueList oracle = brute_canonical(graphs);  // 512 sets, filtered
  CHECK(oracle.size() == 104);

  ValueList fast = cnfs_collect(graphs);
  ValueList generic = cnfs_collect(graphs, {.force_generic = true});
  CHECK(fast == generic);
  CHECK(fast.size() == 104);
  CHECK(sorted_copy(fast) == oracle);

  // Completeness and uniqueness in isomorphism terms: pairwise distinct
  // classes, and every emitted form is its own class minimum.
  for (std::size_t i = 0; i < fast.size(); ++i) {
    CHECK(canonical_form(fast[i]) == fast[i]);
    for (std::size_t j = i + 1; j < fast.size(); ++j)
      CHECK_FALSE(is_isomorphic(fast[i], fast[j]));
  }
}

TEST_CASE("parent chains of canonical forms stay canonical") {
  Uset n(3, "n");
  Domain graphs = subsets(uset_domain(n) * uset_domain(n));
  std::size_t steps = 0;
  for (const Value& g : cnfs_collect(graphs)) {
    std::optional<Value> cur = g;
    while (cur) {
      CHECK(is_canonical(*cur));
      cur = parent_of(*cur);
      ++steps;
    }
  }
  CHECK(steps > 300);
}

TEST_CASE("random strict domains match the exhaustive filter") {
  Rng rng(20260817);
  int done = 0;
  while (done < 30) {
    int uset_budget = 3;
    Domain d = random_strict(rng, 1 + static_cast<int>(below(rng, 2)), uset_budget);
    if (!d.size() || *d.size() > 5000 || *d.size() == 0) continue;
    ++done;
    CAPTURE(d.describe());
    ValueList got = cnfs_collect(d);
    ValueList generic = cnfs_collect(d, {.force_generic = true});
    CHECK(got == generic);
    for (const Value& v : got) CHECK(is_canonical(v));
    CHECK(sorted_copy(got) == brute_canonical(d));
  }
}

TEST_CASE("flat and generic subset walks emit identical sequences") {
  // Two usets inside the element tuples exercise the multi-rank encoding.
  Uset p(2, "p");
  Uset q(3, "q");
  Domain rel = subsets(uset_domain(p) * uset_domain(q));
  ValueList fast = cnfs_collect(rel);
  ValueList generic = cnfs_collect(rel, {.force_generic = true});
  CHECK(fast == generic);
  CHECK(sorted_copy(fast) == brute_canonical(rel));

  // Bare atoms as elements.
  Uset a(5, "a");
  ValueList fs = cnfs_collect(subsets(uset_domain(a)));
  ValueList gs = cnfs_collect(subsets(uset_domain(a)), {.force_generic = true});
  CHECK(fs == gs);
  CHECK(fs.size() == 6);  // one class per cardinality 0..5

  // Triples, fixed cardinality.
  Uset t(2, "t");
  Domain triples = subsets(sequences(uset_domain(t), 3), 2);
  CHECK(cnfs_collect(triples) == cnfs_collect(triples, {.force_generic = true}));
}

}  // TEST_SUITE
