// Materialized completions of finite ordered structures: ideal and
// rounded-ideal completions ordered by inclusion, the characterized way-below
// relation (cross-checkable against a first-principles computation), verified
// join tables, frame analysis with independently brute-forced meets,
// interpretation of relations as maps between completions, and image
// factorization of idempotent maps.

#pragma once

#include <latkit/proximity.hpp>

#include <optional>

namespace latkit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// A relation handed to interpret_relation failed approximability validation.
class NotApproximable : public Error {
 public:
  explicit NotApproximable(const Diagnosis& d)
      : Error("relation is not approximable: " + d.summary()), details(d) {}
  Diagnosis details;
};

// The map handed to split_idempotent is not idempotent.
class NotIdempotent : public Error {
 public:
  using Error::Error;
};

// A point-to-point table does not respect the inclusion order.
class NotMonotone : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Completion lattices
// ---------------------------------------------------------------------------

// Exhaustive checks over subsets of points (first-principles way-below,
// directed-union verification) run only up to this many points.
inline constexpr std::uint32_t kPointsExhaustiveMax = 12;

// A completion materialized extensionally: every point is a subset of the
// base carrier, identity of points is set equality, and the order is
// inclusion. Points are kept sorted by their bit pattern so that equal
// lattices have equal representations.
struct CompletionLattice {
  enum class Construction { Ideals, RoundedIdeals, SplitImage };

  Construction construction = Construction::Ideals;
  CarrierPtr base;                      // carrier the points are subsets of
  CarrierPtr point_carrier;             // one atom per point, index-aligned
  std::vector<FinSubset> points;        // ascending by bit pattern
  Relation order;                       // inclusion between points
  Relation waybelow;                    // characterized way-below
  std::optional<Relation> base_prec;    // approximation relation, when rounded

  bool has_joins = false;
  std::vector<std::uint32_t> join_table;  // row-major, when has_joins
  bool has_meets = false;
  std::vector<std::uint32_t> meet_table;  // row-major, when has_meets
  std::optional<std::uint32_t> bottom;    // least point, when one exists
  std::optional<std::uint32_t> top;       // greatest point, when one exists

  std::uint32_t size() const {
    return static_cast<std::uint32_t>(points.size());
  }
  const FinSubset& point(std::uint32_t i) const { return points[i]; }
  bool leq(std::uint32_t i, std::uint32_t j) const { return order.get(i, j); }
  bool wb(std::uint32_t i, std::uint32_t j) const {
    return waybelow.get(i, j);
  }
  std::uint32_t join(std::uint32_t i, std::uint32_t j) const {
    if (!has_joins) throw Error("CompletionLattice: no join table attached");
    return join_table[static_cast<std::size_t>(i) * size() + j];
  }
  std::uint32_t meet(std::uint32_t i, std::uint32_t j) const {
    if (!has_meets) throw Error("CompletionLattice: no meet table attached");
    return meet_table[static_cast<std::size_t>(i) * size() + j];
  }

  std::optional<std::uint32_t> index_of(const BitVec& bits) const {
    auto it = std::lower_bound(
        points.begin(), points.end(), bits,
        [](const FinSubset& p, const BitVec& b) {
          return p.bits().numeric_less(b);
        });
    if (it == points.end() || !(it->bits() == bits)) return std::nullopt;
    return static_cast<std::uint32_t>(it - points.begin());
  }

  // Same base, same point sets, same attached structure.
  bool same_points_as(const CompletionLattice& o) const {
    if (!same_carrier(base, o.base) || points.size() != o.points.size())
      return false;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!(points[i].bits() == o.points[i].bits())) return false;
    return true;
  }
};

namespace detail {

// Fresh carrier with one atom per point; zero-padded names keep the
// alphabetical interning order aligned with point indices.
inline CarrierPtr make_point_carrier(std::size_t count) {
  std::size_t width = 1;
  for (std::size_t c = count > 0 ? count - 1 : 0; c >= 10; c /= 10) ++width;
  std::vector<std::string> names;
  names.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string digits = std::to_string(i);
    names.push_back("p" + std::string(width - digits.size(), '0') + digits);
  }
  return Carrier::make_base(std::move(names));
}

inline Relation inclusion_order(const CarrierPtr& pc,
                                const std::vector<FinSubset>& pts) {
  Relation out(pc, pc);
  for (std::uint32_t i = 0; i < pts.size(); ++i)
    for (std::uint32_t j = 0; j < pts.size(); ++j)
      if (pts[i].bits().subset_of(pts[j].bits())) out.set(i, j);
  return out;
}

// I way-below J iff some a in J has I contained in elem_down[a]; elem_down
// is the principal approximation down-set of each base element.
inline Relation characterized_waybelow(const CarrierPtr& pc,
                                       const std::vector<FinSubset>& pts,
                                       const std::vector<BitVec>& elem_down) {
  Relation out(pc, pc);
  for (std::uint32_t j = 0; j < pts.size(); ++j) {
    for (auto a : pts[j].members())
      for (std::uint32_t i = 0; i < pts.size(); ++i)
        if (!out.get(i, j) && pts[i].bits().subset_of(elem_down[a]))
          out.set(i, j);
  }
  return out;
}

inline std::optional<std::uint32_t> least_point(
    const std::vector<FinSubset>& pts, const std::vector<std::uint32_t>& among) {
  for (auto u : among) {
    bool least = true;
    for (auto k : among)
      if (!pts[u].bits().subset_of(pts[k].bits())) {
        least = false;
        break;
      }
    if (least) return u;
  }
  return std::nullopt;
}

// Least upper bound of a set of points inside the point set, if one exists.
inline std::optional<std::uint32_t> brute_lub(
    const std::vector<FinSubset>& pts, const std::vector<std::uint32_t>& of) {
  std::vector<std::uint32_t> ub;
  for (std::uint32_t k = 0; k < pts.size(); ++k) {
    bool upper = true;
    for (auto x : of)
      if (!pts[x].bits().subset_of(pts[k].bits())) {
        upper = false;
        break;
      }
    if (upper) ub.push_back(k);
  }
  return least_point(pts, ub);
}

// Greatest lower bound, dually.
inline std::optional<std::uint32_t> brute_glb(
    const std::vector<FinSubset>& pts, const std::vector<std::uint32_t>& of) {
  std::vector<std::uint32_t> lb;
  for (std::uint32_t k = 0; k < pts.size(); ++k) {
    bool lower = true;
    for (auto x : of)
      if (!pts[k].bits().subset_of(pts[x].bits())) {
        lower = false;
        break;
      }
    if (lower) lb.push_back(k);
  }
  // Greatest element of the lower bounds.
  for (auto u : lb) {
    bool greatest = true;
    for (auto k : lb)
      if (!pts[k].bits().subset_of(pts[u].bits())) {
        greatest = false;
        break;
      }
    if (greatest) return u;
  }
  return std::nullopt;
}

inline void attach_extremes(CompletionLattice& L) {
  std::vector<std::uint32_t> all(L.points.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  L.bottom = least_point(L.points, all);
  for (auto u : all) {
    bool greatest = true;
    for (auto k : all)
      if (!L.points[k].bits().subset_of(L.points[u].bits())) {
        greatest = false;
        break;
      }
    if (greatest) {
      L.top = u;
      break;
    }
  }
}

inline bool subset_directed(const Relation& le, const BitVec& I) {
  if (I.none()) return false;
  auto m = I.members();
  for (auto x : m)
    for (auto y : m) {
      bool bounded = false;
      for (auto z : m)
        if (le.get(x, z) && le.get(y, z)) {
          bounded = true;
          break;
        }
      if (!bounded) return false;
    }
  return true;
}

// a in I iff some b in I has a approximating b.
inline bool subset_rounded(const Relation& prec, const BitVec& I) {
  for (std::uint32_t a = 0; a < prec.rows(); ++a) {
    bool reaches = prec.row_intersects(a, I);
    if (reaches != I.get(a)) return false;
  }
  return true;
}

// All inhabited directed down-closed subsets, sorted by bit pattern.
inline std::vector<BitVec> ideal_points(const Relation& le, std::size_t cap) {
  // The down-set enumeration is given generous headroom; the cap proper
  // applies to the ideals that survive the directedness filter.
  std::vector<BitVec> down = down_closed_sets(
      le, std::max<std::size_t>(cap, std::size_t{1} << 20));
  std::vector<BitVec> out;
  for (auto& I : down)
    if (subset_directed(le, I)) out.push_back(I);
  if (out.size() > cap)
    throw SizeCapExceeded(out.size(), cap, "ideal enumeration");
  return out;
}

// For small lattices, check that the union of every directed set of points
// is again a point (finitely, directed joins are unions).
inline void verify_directed_unions(const CompletionLattice& L) {
  const std::uint32_t n = L.size();
  if (n > kPointsExhaustiveMax) return;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::uint32_t> of;
    for (std::uint32_t i = 0; i < n; ++i)
      if ((mask >> i) & 1u) of.push_back(i);
    bool directed = true;
    for (auto x : of) {
      for (auto y : of) {
        bool bounded = false;
        for (auto z : of)
          if (L.leq(x, z) && L.leq(y, z)) {
            bounded = true;
            break;
          }
        if (!bounded) {
          directed = false;
          break;
        }
      }
      if (!directed) break;
    }
    if (!directed) continue;
    BitVec u(L.base->size());
    for (auto x : of) u |= L.points[x].bits();
    if (!L.index_of(u))
      throw InternalCheckFailure(
          "completion: union of a directed set of points is not a point");
  }
}

inline std::vector<BitVec> principal_down_sets(const Relation& r) {
  std::vector<BitVec> down(r.rows(), BitVec(r.rows()));
  for (std::uint32_t a = 0; a < r.rows(); ++a)
    for (std::uint32_t b = 0; b < r.rows(); ++b)
      if (r.get(b, a)) down[a].set(b);
  return down;
}

inline CompletionLattice assemble(CompletionLattice::Construction c,
                                  const CarrierPtr& base,
                                  std::vector<BitVec> pts,
                                  const std::vector<BitVec>& elem_down,
                                  std::optional<Relation> base_prec) {
  CompletionLattice L;
  L.construction = c;
  L.base = base;
  L.point_carrier = make_point_carrier(pts.size());
  L.points.reserve(pts.size());
  for (auto& b : pts) L.points.emplace_back(base, std::move(b));
  L.order = inclusion_order(L.point_carrier, L.points);
  L.waybelow = characterized_waybelow(L.point_carrier, L.points, elem_down);
  L.base_prec = std::move(base_prec);
  attach_extremes(L);
  verify_directed_unions(L);
  return L;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Ideal completion
// ---------------------------------------------------------------------------

// All ideals (inhabited directed down-sets) of a finite poset, ordered by
// inclusion, with way-below characterized as I << J iff I fits under a
// single element of J.
inline CompletionLattice ideal_completion(const CarrierPtr& carrier,
                                          const Relation& le,
                                          std::size_t cap = kDefaultCap) {
  ProximityPoset tmp(carrier, le, le);
  require_kind(tmp, StructureKind::Poset);
  std::vector<BitVec> pts = detail::ideal_points(le, cap);
  return detail::assemble(CompletionLattice::Construction::Ideals, carrier,
                          std::move(pts), detail::principal_down_sets(le),
                          std::nullopt);
}

inline CompletionLattice ideal_completion(const ProximityPoset& S,
                                          std::size_t cap = kDefaultCap) {
  require_kind(S, StructureKind::Poset);
  std::vector<BitVec> pts = detail::ideal_points(S.le(), cap);
  return detail::assemble(CompletionLattice::Construction::Ideals,
                          S.carrier(), std::move(pts),
                          detail::principal_down_sets(S.le()), std::nullopt);
}

// ---------------------------------------------------------------------------
// Rounded-ideal completion
// ---------------------------------------------------------------------------

namespace detail {

// Points computed two independent ways: as approximation images of ideals,
// and as the ideals satisfying the roundedness predicate. The two must agree.
inline std::vector<BitVec> rounded_ideal_points(const Relation& le,
                                                const Relation& prec,
                                                std::size_t cap) {
  std::vector<BitVec> ideals = ideal_points(le, cap);
  std::vector<BitVec> images;
  for (auto& I : ideals) {
    BitVec im(le.rows());
    for (std::uint32_t a = 0; a < le.rows(); ++a)
      if (prec.row_intersects(a, I)) im.set(a);
    images.push_back(std::move(im));
  }
  std::sort(images.begin(), images.end(),
            [](const BitVec& a, const BitVec& b) { return a.numeric_less(b); });
  images.erase(std::unique(images.begin(), images.end()), images.end());

  std::vector<BitVec> predicate;
  for (auto& I : ideals)
    if (subset_rounded(prec, I)) predicate.push_back(I);

  if (images != predicate)
    throw InternalCheckFailure(
        "rounded-ideal completion: image and predicate computations of the "
        "point set disagree");
  return images;
}

}  // namespace detail

inline CompletionLattice rounded_ideal_completion(const ProximityPoset& S,
                                                  std::size_t cap =
                                                      kDefaultCap) {
  require_kind(S, StructureKind::ProximityPoset);
  std::vector<BitVec> pts =
      detail::rounded_ideal_points(S.le(), S.prec(), cap);
  return detail::assemble(CompletionLattice::Construction::RoundedIdeals,
                          S.carrier(), std::move(pts),
                          detail::principal_down_sets(S.prec()), S.prec());
}

// For a proximity join-semilattice the completion additionally carries
// finite joins: the bottom point is the approximation down-set of 0, and
// I v J collects everything approximating some a v b with a in I, b in J.
// Every table entry is verified to be a genuine least upper bound.
inline CompletionLattice rounded_ideal_completion(const ProximityJSL& S,
                                                  std::size_t cap =
                                                      kDefaultCap) {
  require_kind(S, StructureKind::ProximityJSL);
  CompletionLattice L = rounded_ideal_completion(S.base(), cap);
  L.construction = CompletionLattice::Construction::RoundedIdeals;
  const std::uint32_t p = L.size();
  std::vector<BitVec> down = detail::principal_down_sets(S.prec());

  auto point_index = [&](const BitVec& b, const char* what) {
    auto idx = L.index_of(b);
    if (!idx)
      throw InternalCheckFailure(std::string(what) +
                                 ": computed join set is not a point");
    return *idx;
  };

  L.join_table.assign(static_cast<std::size_t>(p) * p, 0);
  for (std::uint32_t i = 0; i < p; ++i)
    for (std::uint32_t j = 0; j < p; ++j) {
      BitVec acc(S.size());
      for (auto a : L.points[i].members())
        for (auto b : L.points[j].members()) acc |= down[S.join(a, b)];
      std::uint32_t v = point_index(acc, "rounded-ideal join");
      auto lub = detail::brute_lub(L.points, {i, j});
      if (!lub || *lub != v)
        throw InternalCheckFailure(
            "rounded-ideal join: formula result is not the least upper "
            "bound");
      L.join_table[static_cast<std::size_t>(i) * p + j] = v;
    }
  L.has_joins = true;

  std::uint32_t zero = point_index(down[S.bottom()], "rounded-ideal bottom");
  if (!L.bottom || *L.bottom != zero)
    throw InternalCheckFailure(
        "rounded-ideal bottom: formula result is not the least point");
  return L;
}

// ---------------------------------------------------------------------------
// First-principles way-below
// ---------------------------------------------------------------------------

// Way-below computed from the definition: I << J iff every directed set of
// points whose least upper bound dominates J contains a point dominating I.
// Exhaustive over all subsets of points, so capped at kPointsExhaustiveMax.
inline Relation waybelow_first_principles(const CompletionLattice& L) {
  const std::uint32_t n = L.size();
  if (n > kPointsExhaustiveMax)
    throw SizeCapExceeded(n, kPointsExhaustiveMax,
                          "waybelow_first_principles");
  struct DirectedSet {
    std::vector<std::uint32_t> members;
    std::uint32_t lub;
  };
  std::vector<DirectedSet> directed;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::uint32_t> of;
    for (std::uint32_t i = 0; i < n; ++i)
      if ((mask >> i) & 1u) of.push_back(i);
    bool dir = true;
    for (auto x : of) {
      for (auto y : of) {
        bool bounded = false;
        for (auto z : of)
          if (L.leq(x, z) && L.leq(y, z)) {
            bounded = true;
            break;
          }
        if (!bounded) {
          dir = false;
          break;
        }
      }
      if (!dir) break;
    }
    if (!dir) continue;
    auto lub = detail::brute_lub(L.points, of);
    if (!lub) continue;  // no join to test against
    directed.push_back({std::move(of), *lub});
  }
  Relation out(L.point_carrier, L.point_carrier);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      bool wb = true;
      for (const auto& d : directed) {
        if (!L.leq(j, d.lub)) continue;
        bool hit = false;
        for (auto z : d.members)
          if (L.leq(i, z)) {
            hit = true;
            break;
          }
        if (!hit) {
          wb = false;
          break;
        }
      }
      if (wb) out.set(i, j);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Frame analysis
// ---------------------------------------------------------------------------

struct FrameReport {
  bool has_finite_meets = false;  // a top and every binary glb exist
  bool has_finite_joins = false;  // a bottom and every binary lub exist
  bool is_distributive = false;   // meet distributes over join, all triples
  bool is_frame = false;
  // True when the base approximation relation was available and the meet
  // formula (intersect, then take the approximation image) reproduced the
  // top and every brute-forced meet.
  bool meets_by_formula = false;
  std::optional<std::uint32_t> top;
  std::vector<std::uint32_t> meet_table;  // valid when has_finite_meets
  std::vector<std::string> notes;
};

// Meets are brute-forced as greatest lower bounds; when the lattice carries
// its base approximation relation the formula meets are computed as well and
// the two are required to agree wherever the formula yields a point.
inline FrameReport frame_analysis(const CompletionLattice& L) {
  FrameReport rep;
  const std::uint32_t n = L.size();
  rep.top = L.top;

  std::vector<std::optional<std::uint32_t>> glb(
      static_cast<std::size_t>(n) * n);
  std::vector<std::optional<std::uint32_t>> lub(
      static_cast<std::size_t>(n) * n);
  bool all_glb = true, all_lub = true;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) {
      glb[static_cast<std::size_t>(i) * n + j] =
          detail::brute_glb(L.points, {i, j});
      lub[static_cast<std::size_t>(i) * n + j] =
          detail::brute_lub(L.points, {i, j});
      all_glb = all_glb && glb[static_cast<std::size_t>(i) * n + j].has_value();
      all_lub = all_lub && lub[static_cast<std::size_t>(i) * n + j].has_value();
    }
  rep.has_finite_meets = all_glb && L.top.has_value();
  rep.has_finite_joins = all_lub && L.bottom.has_value();
  if (!L.top) rep.notes.push_back("no greatest point");
  if (!L.bottom) rep.notes.push_back("no least point");

  if (rep.has_finite_meets) {
    rep.meet_table.assign(static_cast<std::size_t>(n) * n, 0);
    for (std::size_t k = 0; k < rep.meet_table.size(); ++k)
      rep.meet_table[k] = *glb[k];
  }

  if (rep.has_finite_meets && rep.has_finite_joins) {
    rep.is_distributive = true;
    for (std::uint32_t i = 0; i < n && rep.is_distributive; ++i)
      for (std::uint32_t j = 0; j < n && rep.is_distributive; ++j)
        for (std::uint32_t k = 0; k < n; ++k) {
          std::uint32_t lhs =
              *glb[static_cast<std::size_t>(i) * n +
                   *lub[static_cast<std::size_t>(j) * n + k]];
          std::uint32_t rhs =
              *lub[static_cast<std::size_t>(
                       *glb[static_cast<std::size_t>(i) * n + j]) *
                       n +
                   *glb[static_cast<std::size_t>(i) * n + k]];
          if (lhs != rhs) {
            rep.is_distributive = false;
            rep.notes.push_back(
                "meet fails to distribute over join at points " +
                std::to_string(i) + "," + std::to_string(j) + "," +
                std::to_string(k));
            break;
          }
        }
  } else {
    rep.notes.push_back("not a lattice; distributivity not applicable");
  }
  rep.is_frame =
      rep.has_finite_meets && rep.has_finite_joins && rep.is_distributive;

  if (L.base_prec) {
    const Relation& prec = *L.base_prec;
    bool agree = true;
    auto formula_set = [&](const BitVec& of) {
      BitVec out(prec.rows());
      for (std::uint32_t a = 0; a < prec.rows(); ++a)
        if (prec.row_intersects(a, of)) out.set(a);
      return out;
    };
    // Top: the approximation image of the whole base.
    BitVec full(prec.rows());
    for (std::uint32_t a = 0; a < prec.rows(); ++a) full.set(a);
    auto ft = L.index_of(formula_set(full));
    if (!ft) {
      agree = false;
      if (L.has_joins)
        throw InternalCheckFailure(
            "frame analysis: formula top is not a point of a join-carrying "
            "completion");
      rep.notes.push_back("formula top is not a point");
    } else if (L.top && *ft != *L.top) {
      throw InternalCheckFailure(
          "frame analysis: formula top differs from the greatest point");
    }
    for (std::uint32_t i = 0; i < n && agree; ++i)
      for (std::uint32_t j = 0; j < n; ++j) {
        auto fm =
            L.index_of(formula_set(L.points[i].bits() & L.points[j].bits()));
        auto g = glb[static_cast<std::size_t>(i) * n + j];
        if (!fm) {
          agree = false;
          if (L.has_joins)
            throw InternalCheckFailure(
                "frame analysis: formula meet is not a point of a "
                "join-carrying completion");
          rep.notes.push_back("formula meet is not a point");
          break;
        }
        if (!g || *fm != *g)
          throw InternalCheckFailure(
              "frame analysis: formula meet is not the greatest lower "
              "bound");
      }
    rep.meets_by_formula = agree;
  }
  return rep;
}

// Copy of L with the report's verified meet structure attached.
inline CompletionLattice with_meets(CompletionLattice L,
                                    const FrameReport& rep) {
  if (rep.has_finite_meets) {
    L.has_meets = true;
    L.meet_table = rep.meet_table;
  }
  return L;
}

// ---------------------------------------------------------------------------
// Lattice maps
// ---------------------------------------------------------------------------

// A point-to-point function between completion lattices.
struct LatticeMap {
  CompletionLattice source;
  CompletionLattice target;
  std::vector<std::uint32_t> table;

  std::uint32_t apply(std::uint32_t i) const { return table[i]; }

  bool operator==(const LatticeMap& o) const {
    return source.same_points_as(o.source) &&
           target.same_points_as(o.target) && table == o.table;
  }
};

// Builds a map and rejects tables that do not respect inclusion.
inline LatticeMap lattice_map(CompletionLattice source,
                              CompletionLattice target,
                              std::vector<std::uint32_t> table) {
  if (table.size() != source.size())
    throw Error("lattice_map: table size does not match the source");
  for (auto v : table)
    if (v >= target.size())
      throw Error("lattice_map: table entry out of range");
  for (std::uint32_t i = 0; i < source.size(); ++i)
    for (std::uint32_t j = 0; j < source.size(); ++j)
      if (source.leq(i, j) && !target.leq(table[i], table[j]))
        throw NotMonotone("lattice_map: table is not monotone at points " +
                          std::to_string(i) + " <= " + std::to_string(j));
  return LatticeMap{std::move(source), std::move(target), std::move(table)};
}

inline LatticeMap identity_map(CompletionLattice L) {
  std::vector<std::uint32_t> t(L.size());
  for (std::uint32_t i = 0; i < t.size(); ++i) t[i] = i;
  CompletionLattice copy = L;
  return LatticeMap{std::move(copy), std::move(L), std::move(t)};
}

// compose(g, f): first f, then g.
inline LatticeMap compose(const LatticeMap& g, const LatticeMap& f) {
  if (!f.target.same_points_as(g.source))
    throw CarrierMismatch("compose: middle completions differ");
  std::vector<std::uint32_t> t(f.table.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = g.table[f.table[i]];
  return LatticeMap{f.source, g.target, std::move(t)};
}

// ---------------------------------------------------------------------------
// Interpreting relations as maps between completions
// ---------------------------------------------------------------------------

// An approximable relation r from src to dst acts contravariantly on the
// completions: the induced map sends a point of the dst completion to its
// preimage under r, which lands in the src completion. Monotonicity and
// directed-union preservation are verified on every point pair.
inline LatticeMap interpret_relation(const Relation& r,
                                     const ProximityPoset& src,
                                     const ProximityPoset& dst,
                                     std::size_t cap = kDefaultCap) {
  Diagnosis d = validate_morphism(MorphismKind::Approximable, r, src, dst);
  if (!d.ok) throw NotApproximable(d);
  CompletionLattice from = rounded_ideal_completion(dst, cap);
  CompletionLattice to = rounded_ideal_completion(src, cap);

  std::vector<std::uint32_t> table(from.size());
  for (std::uint32_t j = 0; j < from.size(); ++j) {
    BitVec pre(src.size());
    for (std::uint32_t a = 0; a < src.size(); ++a)
      if (r.row_intersects(a, from.points[j].bits())) pre.set(a);
    auto idx = to.index_of(pre);
    if (!idx)
      throw InternalCheckFailure(
          "interpret_relation: preimage of a point is not a point");
    table[j] = *idx;
  }
  for (std::uint32_t i = 0; i < from.size(); ++i)
    for (std::uint32_t j = 0; j < from.size(); ++j) {
      if (from.leq(i, j) && !to.leq(table[i], table[j]))
        throw InternalCheckFailure(
            "interpret_relation: induced map is not monotone");
      if (from.leq(i, j)) {
        // On a directed pair the union is the larger point; its image must
        // be the union of the images.
        BitVec u = to.points[table[i]].bits() | to.points[table[j]].bits();
        if (!(u == to.points[table[j]].bits()))
          throw InternalCheckFailure(
              "interpret_relation: induced map does not preserve directed "
              "unions");
      }
    }
  return LatticeMap{std::move(from), std::move(to), std::move(table)};
}

// Join-semilattice variant: the completions carry join tables, and when r
// additionally validates as join-approximable the induced map is verified
// to preserve the bottom point and the join table.
inline LatticeMap interpret_relation(const Relation& r,
                                     const ProximityJSL& src,
                                     const ProximityJSL& dst,
                                     std::size_t cap = kDefaultCap) {
  LatticeMap base = interpret_relation(r, src.base(), dst.base(), cap);
  LatticeMap map{rounded_ideal_completion(dst, cap),
                 rounded_ideal_completion(src, cap), base.table};

  Diagnosis jd = validate_morphism(MorphismKind::JoinApproximable, r, src, dst);
  if (jd.ok) {
    if (map.table[*map.source.bottom] != *map.target.bottom)
      throw InternalCheckFailure(
          "interpret_relation: join-approximable map moved the bottom "
          "point");
    for (std::uint32_t i = 0; i < map.source.size(); ++i)
      for (std::uint32_t j = 0; j < map.source.size(); ++j)
        if (map.table[map.source.join(i, j)] !=
            map.target.join(map.table[i], map.table[j]))
          throw InternalCheckFailure(
              "interpret_relation: join-approximable map broke the join "
              "table");
  }
  return map;
}

// ---------------------------------------------------------------------------
// Splitting idempotent maps
// ---------------------------------------------------------------------------

// Image factorization of an idempotent monotone map on a completion. The
// image points are the fixed points of the table; way-below is computed by
// the characterization through the ambient lattice (p below-in-image q iff
// some ambient point c has p under the image of c and c way-below q) and
// cross-checked against the first-principles computation when small enough.
inline CompletionLattice split_idempotent(const LatticeMap& f) {
  if (!f.source.same_points_as(f.target))
    throw CarrierMismatch(
        "split_idempotent: source and target must be the same completion");
  const CompletionLattice& A = f.source;
  const std::uint32_t n = A.size();
  if (f.table.size() != n)
    throw Error("split_idempotent: malformed table");
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (A.leq(i, j) && !A.leq(f.table[i], f.table[j]))
        throw NotMonotone("split_idempotent: map is not monotone at points " +
                          std::to_string(i) + " <= " + std::to_string(j));
  for (std::uint32_t i = 0; i < n; ++i)
    if (f.table[f.table[i]] != f.table[i])
      throw NotIdempotent(
          "split_idempotent: map is not idempotent at point " +
          std::to_string(i));

  // The image of an idempotent is its fixed-point set.
  std::vector<std::uint32_t> img;
  for (std::uint32_t i = 0; i < n; ++i)
    if (f.table[i] == i) img.push_back(i);

  CompletionLattice L;
  L.construction = CompletionLattice::Construction::SplitImage;
  L.base = A.base;
  L.base_prec = A.base_prec;
  L.point_carrier = detail::make_point_carrier(img.size());
  for (auto i : img) L.points.push_back(A.points[i]);
  L.order = detail::inclusion_order(L.point_carrier, L.points);

  const std::uint32_t p = static_cast<std::uint32_t>(img.size());
  L.waybelow = Relation(L.point_carrier, L.point_carrier);
  for (std::uint32_t i = 0; i < p; ++i)
    for (std::uint32_t j = 0; j < p; ++j) {
      bool wb = false;
      for (std::uint32_t c = 0; c < n && !wb; ++c)
        wb = A.leq(img[i], f.table[c]) && A.wb(c, img[j]);
      if (wb) L.waybelow.set(i, j);
    }
  detail::attach_extremes(L);
  detail::verify_directed_unions(L);
  if (p <= kPointsExhaustiveMax &&
      !(L.waybelow == waybelow_first_principles(L)))
    throw InternalCheckFailure(
        "split_idempotent: characterized way-below disagrees with the "
        "first-principles computation");

  if (A.has_joins) {
    // Joins in the image: apply the map after joining in the ambient
    // lattice. Verified as least upper bounds of the image.
    L.join_table.assign(static_cast<std::size_t>(p) * p, 0);
    bool preserves = true;
    for (std::uint32_t i = 0; i < n && preserves; ++i)
      for (std::uint32_t j = 0; j < n; ++j)
        if (f.table[A.join(i, j)] != A.join(f.table[i], f.table[j])) {
          preserves = false;
          break;
        }
    std::vector<std::uint32_t> pos(n, 0);
    for (std::uint32_t k = 0; k < p; ++k) pos[img[k]] = k;
    for (std::uint32_t i = 0; i < p; ++i)
      for (std::uint32_t j = 0; j < p; ++j) {
        std::uint32_t v = f.table[A.join(img[i], img[j])];
        auto lub = detail::brute_lub(L.points, {i, j});
        if (!lub || L.points[*lub].bits() != A.points[v].bits())
          throw InternalCheckFailure(
              "split_idempotent: image join is not the least upper bound");
        if (preserves && v != A.join(img[i], img[j]))
          throw InternalCheckFailure(
              "split_idempotent: join-preserving map did not yield a "
              "sub-semilattice");
        L.join_table[static_cast<std::size_t>(i) * p + j] = pos[v];
      }
    L.has_joins = true;
    std::uint32_t zero = pos[f.table[*A.bottom]];
    if (!L.bottom || *L.bottom != zero)
      throw InternalCheckFailure(
          "split_idempotent: image of the bottom is not the least image "
          "point");
  }
  return L;
}

// The idempotent induced by the approximation relation on the ideal
// completion: each ideal is sent to its approximation image. Splitting it
// reproduces the rounded-ideal completion.
inline LatticeMap rounding_idempotent(const ProximityPoset& S,
                                      std::size_t cap = kDefaultCap) {
  require_kind(S, StructureKind::ProximityPoset);
  CompletionLattice Idl = ideal_completion(S, cap);
  std::vector<std::uint32_t> table(Idl.size());
  for (std::uint32_t i = 0; i < Idl.size(); ++i) {
    BitVec im(S.size());
    for (std::uint32_t a = 0; a < S.size(); ++a)
      if (S.prec().row_intersects(a, Idl.points[i].bits())) im.set(a);
    auto idx = Idl.index_of(im);
    if (!idx)
      throw InternalCheckFailure(
          "rounding_idempotent: approximation image of an ideal is not an "
          "ideal");
    table[i] = *idx;
  }
  CompletionLattice copy = Idl;
  return lattice_map(std::move(copy), std::move(Idl), std::move(table));
}

}  // namespace latkit
