// Exhaustive enumeration of small structures, one canonical representative
// per isomorphism class, in a deterministic order. Canonical means: the
// bit-encoding of the order is minimal over all permutations of the carrier,
// and the approximation relation's encoding is minimal over the order's
// automorphisms.

#pragma once

#include <latkit/proximity.hpp>

#include <algorithm>
#include <numeric>

namespace latkit {

namespace detail {

inline std::uint64_t relation_encoding(const Relation& r,
                                       const std::vector<std::uint32_t>& perm) {
  const std::uint32_t n = r.rows();
  std::uint64_t code = 0;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (r.get(perm[i], perm[j]))
        code |= std::uint64_t{1} << (i * n + j);
  return code;
}

inline std::vector<std::vector<std::uint32_t>> all_permutations(
    std::uint32_t n) {
  std::vector<std::uint32_t> p(n);
  std::iota(p.begin(), p.end(), 0u);
  std::vector<std::vector<std::uint32_t>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// Fast axiom filters without diagnosis bookkeeping, used to discard the bulk
// of candidate relations before full validation.
inline bool quick_poset(const Relation& le) {
  const std::uint32_t n = le.rows();
  for (std::uint32_t a = 0; a < n; ++a)
    if (!le.get(a, a)) return false;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      if (!le.get(a, b)) continue;
      if (a != b && le.get(b, a)) return false;
      if (!le.row(b).subset_of(le.row(a))) return false;
    }
  return true;
}

inline bool quick_proximity(const Relation& le, const Relation& prec) {
  const std::uint32_t n = le.rows();
  for (std::uint32_t a = 0; a < n; ++a) {
    if (prec.col(a).none()) return false;
    // idempotence, both directions
    for (std::uint32_t b = 0; b < n; ++b) {
      bool direct = prec.get(a, b);
      bool through = false;
      for (std::uint32_t c = 0; c < n && !through; ++c)
        through = prec.get(a, c) && prec.get(c, b);
      if (direct != through) return false;
    }
  }
  for (std::uint32_t c = 0; c < n; ++c)
    for (std::uint32_t a = 0; a < n; ++a) {
      if (!prec.get(c, a)) continue;
      // lower closure of approximant sets
      for (std::uint32_t b = 0; b < n; ++b)
        if (le.get(b, c) && !prec.get(b, a)) return false;
      // directedness
      for (std::uint32_t c2 = 0; c2 < n; ++c2) {
        if (!prec.get(c2, a)) continue;
        bool bound = false;
        for (std::uint32_t u = 0; u < n && !bound; ++u)
          bound = prec.get(u, a) && le.get(c, u) && le.get(c2, u);
        if (!bound) return false;
      }
    }
  // upper closure: a prec b and b le c imply a prec c
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      if (!prec.get(a, b)) continue;
      if (!le.row(b).subset_of(prec.row(a))) return false;
    }
  return true;
}

}  // namespace detail

inline CarrierPtr enumeration_carrier(std::uint32_t n) {
  std::vector<std::string> atoms;
  for (std::uint32_t k = 0; k < n; ++k)
    atoms.push_back(std::string(1, static_cast<char>('a' + k)));
  return Carrier::make_base(atoms);
}

// All partial orders on n points, canonical representatives only, ordered by
// encoding.
inline std::vector<Relation> enumerate_posets(std::uint32_t n) {
  if (n > 5)
    throw SizeCapExceeded(n, 5, "poset enumeration");
  CarrierPtr S = enumeration_carrier(n);
  auto perms = detail::all_permutations(n);
  std::vector<Relation> out;
  const std::uint64_t total = std::uint64_t{1} << (n * n);
  for (std::uint64_t code = 0; code < total; ++code) {
    Relation le(S, S);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j)
        if ((code >> (i * n + j)) & 1u) le.set(i, j);
    if (!detail::quick_poset(le)) continue;
    bool canonical = true;
    for (const auto& p : perms)
      if (detail::relation_encoding(le, p) < code) {
        canonical = false;
        break;
      }
    if (canonical) out.push_back(std::move(le));
  }
  return out;
}

inline std::vector<std::vector<std::uint32_t>> order_automorphisms(
    const Relation& le) {
  auto perms = detail::all_permutations(le.rows());
  std::vector<std::vector<std::uint32_t>> out;
  std::uint64_t base = detail::relation_encoding(le, perms.front());
  for (const auto& p : perms)
    if (detail::relation_encoding(le, p) == base) out.push_back(p);
  return out;
}

// All proximity posets on n points up to isomorphism, grouped by canonical
// underlying order.
inline std::vector<ProximityPoset> enumerate_proximity_posets(std::uint32_t n) {
  if (n > 4)
    throw SizeCapExceeded(n, 4, "proximity-poset enumeration");
  std::vector<ProximityPoset> out;
  for (const Relation& le : enumerate_posets(n)) {
    auto autos = order_automorphisms(le);
    const CarrierPtr& S = le.src();
    const std::uint64_t total = std::uint64_t{1} << (n * n);
    for (std::uint64_t code = 0; code < total; ++code) {
      Relation prec(S, S);
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
          if ((code >> (i * n + j)) & 1u) prec.set(i, j);
      if (!detail::quick_proximity(le, prec)) continue;
      bool canonical = true;
      for (const auto& p : autos)
        if (detail::relation_encoding(prec, p) < code) {
          canonical = false;
          break;
        }
      if (!canonical) continue;
      out.emplace_back(S, le, prec);
    }
  }
  return out;
}

// All proximity join-semilattices on n points up to isomorphism that validate
// at the requested kind (proximity-jsl, strong, or localized).
inline std::vector<ProximityJSL> enumerate_proximity_jsls(
    StructureKind kind, std::uint32_t n) {
  if (!kind_needs_joins(kind))
    throw KindUnavailable("enumerate_proximity_jsls: kind carries no joins");
  if (n > 4)
    throw SizeCapExceeded(n, 4, "proximity-jsl enumeration");
  std::vector<ProximityJSL> out;
  for (const Relation& le : enumerate_posets(n)) {
    auto with_joins = try_attach_joins(le.src(), le, le);
    if (!with_joins) continue;  // order is not a join-semilattice
    auto autos = order_automorphisms(le);
    const CarrierPtr& S = le.src();
    const std::uint64_t total = std::uint64_t{1} << (n * n);
    for (std::uint64_t code = 0; code < total; ++code) {
      Relation prec(S, S);
      for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < n; ++j)
          if ((code >> (i * n + j)) & 1u) prec.set(i, j);
      if (!detail::quick_proximity(le, prec)) continue;
      bool canonical = true;
      for (const auto& p : autos)
        if (detail::relation_encoding(prec, p) < code) {
          canonical = false;
          break;
        }
      if (!canonical) continue;
      ProximityJSL candidate(ProximityPoset(S, le, prec),
                             with_joins->bottom(), with_joins->join_table());
      if (kind == StructureKind::LocalizedStrongProximityJSL) {
        if (!validate_structure(StructureKind::StrongProximityJSL, candidate)
                 .ok)
          continue;
        if (!is_localized(candidate, LocalizedMode::Basic).ok) continue;
        candidate.grant_badge(StructureKind::LocalizedStrongProximityJSL);
      } else if (!validate_structure(kind, candidate).ok) {
        continue;
      }
      out.push_back(std::move(candidate));
    }
  }
  return out;
}

// Brute-force isomorphism test between proximity posets (used to audit the
// canonical-representative filter).
inline bool isomorphic(const ProximityPoset& A, const ProximityPoset& B) {
  if (A.size() != B.size()) return false;
  for (const auto& p : detail::all_permutations(A.size())) {
    bool ok = true;
    for (std::uint32_t i = 0; i < A.size() && ok; ++i)
      for (std::uint32_t j = 0; j < A.size() && ok; ++j)
        ok = (A.le().get(i, j) == B.le().get(p[i], p[j])) &&
             (A.prec().get(i, j) == B.prec().get(p[i], p[j]));
    if (ok) return true;
  }
  return false;
}

}  // namespace latkit
