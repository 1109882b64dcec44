// Proximity posets and proximity join-semilattices on finite carriers:
// structure validation with re-checkable counterexample witnesses, morphism
// classification (approximable / join-approximable / lawson / proximity),
// the localization property in three equivalent forms, and the strengthening
// construction together with its verified inverse pair of relations.

#pragma once

#include <latkit/core.hpp>

#include <optional>

namespace latkit {

// ---------------------------------------------------------------------------
// Diagnoses
// ---------------------------------------------------------------------------

// One failed law together with the elements that violate it, named so the
// violation can be re-checked by hand.
struct Witness {
  std::string law;
  std::vector<std::string> where;

  std::string to_string() const {
    std::string out = law;
    if (!where.empty()) {
      out += " @ (";
      for (std::size_t i = 0; i < where.size(); ++i) {
        if (i) out += ", ";
        out += where[i];
      }
      out += ")";
    }
    return out;
  }
};

struct Diagnosis {
  bool ok = true;
  std::vector<Witness> witnesses;
  std::vector<std::string> notes;

  explicit operator bool() const { return ok; }

  void fail(std::string law, std::vector<std::string> where) {
    ok = false;
    witnesses.push_back(Witness{std::move(law), std::move(where)});
  }
  // Records at most one witness per law, keeping diagnoses short.
  bool seen(const std::string& law) const {
    for (const auto& w : witnesses)
      if (w.law == law) return true;
    return false;
  }
  void fail_once(const std::string& law, std::vector<std::string> where) {
    if (!seen(law)) fail(law, std::move(where));
  }
  void note(std::string text) { notes.push_back(std::move(text)); }
  void absorb(const Diagnosis& other) {
    ok = ok && other.ok;
    witnesses.insert(witnesses.end(), other.witnesses.begin(),
                     other.witnesses.end());
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  }
  std::string summary() const {
    if (ok) return "pass";
    std::string out = "fail:";
    for (const auto& w : witnesses) {
      out += " [";
      out += w.to_string();
      out += "]";
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Structure kinds
// ---------------------------------------------------------------------------

enum class StructureKind : std::uint32_t {
  Poset = 0,
  JoinSemilattice = 1,
  ProximityPoset = 2,
  ProximityJSL = 3,
  StrongProximityJSL = 4,
  LocalizedStrongProximityJSL = 5,
};

inline const char* kind_name(StructureKind k) {
  switch (k) {
    case StructureKind::Poset: return "poset";
    case StructureKind::JoinSemilattice: return "jsl";
    case StructureKind::ProximityPoset: return "proximity-poset";
    case StructureKind::ProximityJSL: return "proximity-jsl";
    case StructureKind::StrongProximityJSL: return "strong-proximity-jsl";
    case StructureKind::LocalizedStrongProximityJSL:
      return "localized-strong-proximity-jsl";
  }
  return "?";
}

inline std::optional<StructureKind> kind_from_name(const std::string& s) {
  for (auto k : {StructureKind::Poset, StructureKind::JoinSemilattice,
                 StructureKind::ProximityPoset, StructureKind::ProximityJSL,
                 StructureKind::StrongProximityJSL,
                 StructureKind::LocalizedStrongProximityJSL})
    if (s == kind_name(k)) return k;
  return std::nullopt;
}

// Which weaker kinds each kind entails, as a bitmask over StructureKind.
inline std::uint32_t kind_closure(StructureKind k) {
  auto bit = [](StructureKind x) {
    return 1u << static_cast<std::uint32_t>(x);
  };
  switch (k) {
    case StructureKind::Poset: return bit(StructureKind::Poset);
    case StructureKind::JoinSemilattice:
      return bit(StructureKind::Poset) | bit(StructureKind::JoinSemilattice);
    case StructureKind::ProximityPoset:
      return bit(StructureKind::Poset) | bit(StructureKind::ProximityPoset);
    case StructureKind::ProximityJSL:
      return kind_closure(StructureKind::JoinSemilattice) |
             kind_closure(StructureKind::ProximityPoset) |
             bit(StructureKind::ProximityJSL);
    case StructureKind::StrongProximityJSL:
      return kind_closure(StructureKind::ProximityJSL) |
             bit(StructureKind::StrongProximityJSL);
    case StructureKind::LocalizedStrongProximityJSL:
      return kind_closure(StructureKind::StrongProximityJSL) |
             bit(StructureKind::LocalizedStrongProximityJSL);
  }
  return 0;
}

inline bool kind_needs_joins(StructureKind k) {
  return (kind_closure(k) &
          (1u << static_cast<std::uint32_t>(StructureKind::JoinSemilattice))) !=
         0;
}

// Requested operation needs data (joins, validated kinds, ...) the given
// structure does not carry.
class KindUnavailable : public Error {
 public:
  using Error::Error;
};

// An operation's precondition kind failed to validate.
class NotValidated : public Error {
 public:
  NotValidated(StructureKind kind, const Diagnosis& d)
      : Error(std::string("structure does not validate as ") +
              kind_name(kind) + ": " + d.summary()),
        kind(kind) {}
  StructureKind kind;
};

// ---------------------------------------------------------------------------
// Structures
// ---------------------------------------------------------------------------

// A carrier with a partial order and an approximation relation. Validation
// results are cached as badges so enumeration loops do not re-run axiom
// checks; badges only record kinds that actually validated (or, for carriers
// past the exhaustive-check threshold, were explicitly assumed).
class ProximityPoset {
 public:
  ProximityPoset(CarrierPtr carrier, Relation le, Relation prec)
      : carrier_(std::move(carrier)), le_(std::move(le)),
        prec_(std::move(prec)) {
    if (!same_carrier(le_.src(), carrier_) ||
        !same_carrier(le_.dst(), carrier_) ||
        !same_carrier(prec_.src(), carrier_) ||
        !same_carrier(prec_.dst(), carrier_))
      throw CarrierMismatch("ProximityPoset: relations must live on the carrier");
  }

  const CarrierPtr& carrier() const { return carrier_; }
  const Relation& le() const { return le_; }
  const Relation& prec() const { return prec_; }
  std::uint32_t size() const { return carrier_->size(); }
  std::string name_of(std::uint32_t i) const { return carrier_->name_of(i); }

  bool has_badge(StructureKind k) const {
    return (badges_ & (1u << static_cast<std::uint32_t>(k))) != 0;
  }
  void grant_badge(StructureKind k) const { badges_ |= kind_closure(k); }
  void grant_assumed(StructureKind k) const {
    grant_badge(k);
    assumed_ = true;
  }
  bool badge_assumed() const { return assumed_; }

 private:
  CarrierPtr carrier_;
  Relation le_;
  Relation prec_;
  mutable std::uint32_t badges_ = 0;
  mutable bool assumed_ = false;
};

// A proximity poset whose order carries a join-semilattice structure.
class ProximityJSL {
 public:
  ProximityJSL(ProximityPoset base, std::uint32_t bottom,
               std::vector<std::uint32_t> join_table)
      : base_(std::move(base)), bottom_(bottom), join_(std::move(join_table)) {
    const std::uint32_t n = base_.size();
    if (bottom_ >= n || join_.size() != static_cast<std::size_t>(n) * n)
      throw Error("ProximityJSL: malformed bottom/join data");
    for (auto v : join_)
      if (v >= n) throw Error("ProximityJSL: join table entry out of range");
  }

  const ProximityPoset& base() const { return base_; }
  const CarrierPtr& carrier() const { return base_.carrier(); }
  const Relation& le() const { return base_.le(); }
  const Relation& prec() const { return base_.prec(); }
  std::uint32_t size() const { return base_.size(); }
  std::string name_of(std::uint32_t i) const { return base_.name_of(i); }

  std::uint32_t bottom() const { return bottom_; }
  std::uint32_t join(std::uint32_t a, std::uint32_t b) const {
    return join_[static_cast<std::size_t>(a) * size() + b];
  }
  // Join over a finite subset; the empty subset yields bottom.
  std::uint32_t join_of(const BitVec& A) const {
    std::uint32_t acc = bottom_;
    A.for_each([&](std::uint32_t x) { acc = join(acc, x); });
    return acc;
  }
  const std::vector<std::uint32_t>& join_table() const { return join_; }

  bool has_badge(StructureKind k) const { return base_.has_badge(k); }
  void grant_badge(StructureKind k) const { base_.grant_badge(k); }
  void grant_assumed(StructureKind k) const { base_.grant_assumed(k); }
  bool badge_assumed() const { return base_.badge_assumed(); }

 private:
  ProximityPoset base_;
  std::uint32_t bottom_;
  std::vector<std::uint32_t> join_;
};

// All joins of finite subsets of D (the empty subset contributes bottom).
inline BitVec join_closure(const ProximityJSL& S, const BitVec& D) {
  BitVec out(S.size());
  out.set(S.bottom());
  bool changed = true;
  while (changed) {
    changed = false;
    out.for_each([&](std::uint32_t x) {
      D.for_each([&](std::uint32_t d) {
        std::uint32_t j = S.join(x, d);
        if (!out.get(j)) {
          out.set(j);
          changed = true;
        }
      });
    });
  }
  return out;
}

// Least element and binary least upper bounds read off a partial order, when
// they exist.
inline std::optional<std::uint32_t> least_element(const Relation& le) {
  for (std::uint32_t b = 0; b < le.rows(); ++b) {
    bool least = true;
    for (std::uint32_t a = 0; a < le.rows() && least; ++a)
      if (!le.get(b, a)) least = false;
    if (least) return b;
  }
  return std::nullopt;
}

inline std::optional<std::uint32_t> join_in_order(const Relation& le,
                                                  std::uint32_t a,
                                                  std::uint32_t b) {
  std::optional<std::uint32_t> best;
  for (std::uint32_t u = 0; u < le.rows(); ++u) {
    if (!le.get(a, u) || !le.get(b, u)) continue;
    if (!best || le.get(u, *best)) best = u;
  }
  if (!best) return std::nullopt;
  // the one-pass candidate is the minimum iff it is below every upper bound
  for (std::uint32_t u = 0; u < le.rows(); ++u)
    if (le.get(a, u) && le.get(b, u) && !le.get(*best, u)) return std::nullopt;
  return best;
}

// Attach a join-semilattice structure derived from the order, if one exists.
inline std::optional<ProximityJSL> try_attach_joins(const CarrierPtr& S,
                                                    const Relation& le,
                                                    const Relation& prec) {
  auto bot = least_element(le);
  if (!bot) return std::nullopt;
  const std::uint32_t n = S->size();
  std::vector<std::uint32_t> table(static_cast<std::size_t>(n) * n);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      auto j = join_in_order(le, a, b);
      if (!j) return std::nullopt;
      table[static_cast<std::size_t>(a) * n + b] = *j;
    }
  return ProximityJSL(ProximityPoset(S, le, prec), *bot, std::move(table));
}

// ---------------------------------------------------------------------------
// Structure validation
// ---------------------------------------------------------------------------

namespace detail {

inline void check_poset(const ProximityPoset& S, Diagnosis& d) {
  const Relation& le = S.le();
  const std::uint32_t n = S.size();
  for (std::uint32_t a = 0; a < n; ++a)
    if (!le.get(a, a)) d.fail_once("le-reflexive", {S.name_of(a)});
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      if (!le.get(a, b)) continue;
      if (a != b && le.get(b, a))
        d.fail_once("le-antisymmetric", {S.name_of(a), S.name_of(b)});
      for (std::uint32_t c = 0; c < n; ++c)
        if (le.get(b, c) && !le.get(a, c))
          d.fail_once("le-transitive",
                      {S.name_of(a), S.name_of(b), S.name_of(c)});
    }
}

inline void check_jsl(const ProximityJSL& S, Diagnosis& d) {
  const Relation& le = S.le();
  const std::uint32_t n = S.size();
  for (std::uint32_t a = 0; a < n; ++a)
    if (!le.get(S.bottom(), a)) d.fail_once("bottom-least", {S.name_of(a)});
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      std::uint32_t j = S.join(a, b);
      if (!le.get(a, j) || !le.get(b, j))
        d.fail_once("join-upper-bound",
                    {S.name_of(a), S.name_of(b), S.name_of(j)});
      for (std::uint32_t c = 0; c < n; ++c)
        if (le.get(a, c) && le.get(b, c) && !le.get(j, c))
          d.fail_once("join-least-upper",
                      {S.name_of(a), S.name_of(b), S.name_of(c)});
    }
}

inline void check_proximity(const ProximityPoset& S, Diagnosis& d) {
  const Relation& le = S.le();
  const Relation& prec = S.prec();
  const std::uint32_t n = S.size();

  // idempotence of the approximation relation, in both directions
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b) {
      bool direct = prec.get(a, b);
      bool through = false;
      for (std::uint32_t c = 0; c < n && !through; ++c)
        through = prec.get(a, c) && prec.get(c, b);
      if (through && !direct)
        d.fail_once("prec-compositional", {S.name_of(a), S.name_of(b)});
      if (direct && !through)
        d.fail_once("prec-interpolative", {S.name_of(a), S.name_of(b)});
    }

  for (std::uint32_t a = 0; a < n; ++a) {
    // the approximants of a form an ideal ...
    if (prec.col(a).none()) d.fail_once("down-prec-inhabited", {S.name_of(a)});
    for (std::uint32_t c = 0; c < n; ++c) {
      if (!prec.get(c, a)) continue;
      for (std::uint32_t b = 0; b < n; ++b)
        if (le.get(b, c) && !prec.get(b, a))
          d.fail_once("down-prec-lower",
                      {S.name_of(b), S.name_of(c), S.name_of(a)});
      for (std::uint32_t c2 = 0; c2 < n; ++c2) {
        if (!prec.get(c2, a)) continue;
        bool bound = false;
        for (std::uint32_t u = 0; u < n && !bound; ++u)
          bound = prec.get(u, a) && le.get(c, u) && le.get(c2, u);
        if (!bound)
          d.fail_once("down-prec-directed",
                      {S.name_of(c), S.name_of(c2), S.name_of(a)});
      }
    }
    // ... and what a approximates is an upper set. (Roundedness of both
    // sides is exactly the two idempotence directions checked above.)
    for (std::uint32_t b = 0; b < n; ++b) {
      if (!prec.get(a, b)) continue;
      for (std::uint32_t c = 0; c < n; ++c)
        if (le.get(b, c) && !prec.get(a, c))
          d.fail_once("up-prec-upper",
                      {S.name_of(a), S.name_of(b), S.name_of(c)});
    }
  }
}

inline void check_strong(const ProximityJSL& S, Diagnosis& d) {
  const Relation& le = S.le();
  const Relation& prec = S.prec();
  const std::uint32_t n = S.size();
  for (std::uint32_t a = 0; a < n; ++a)
    if (prec.get(a, S.bottom()) && a != S.bottom())
      d.fail_once("strong-zero", {S.name_of(a)});
  for (std::uint32_t b = 0; b < n; ++b)
    for (std::uint32_t c = 0; c < n; ++c) {
      std::uint32_t j = S.join(b, c);
      for (std::uint32_t a = 0; a < n; ++a) {
        if (!prec.get(a, j)) continue;
        bool split = false;
        for (std::uint32_t bp = 0; bp < n && !split; ++bp) {
          if (!prec.get(bp, b)) continue;
          for (std::uint32_t cp = 0; cp < n && !split; ++cp)
            split = prec.get(cp, c) && le.get(a, S.join(bp, cp));
        }
        if (!split)
          d.fail_once("strong-join-split",
                      {S.name_of(a), S.name_of(b), S.name_of(c)});
      }
    }
}

inline void check_localized_basic(const ProximityJSL& S, Diagnosis& d) {
  const Relation& le = S.le();
  const Relation& prec = S.prec();
  const std::uint32_t n = S.size();
  for (std::uint32_t b = 0; b < n; ++b)
    for (std::uint32_t c = 0; c < n; ++c)
      for (std::uint32_t dd = 0; dd < n; ++dd) {
        if (!le.get(b, S.join(c, dd))) continue;
        for (std::uint32_t a = 0; a < n; ++a) {
          if (!prec.get(a, b)) continue;
          bool found = false;
          for (std::uint32_t a1 = 0; a1 < n && !found; ++a1) {
            if (!prec.get(a1, b) || !prec.get(a1, c)) continue;
            for (std::uint32_t a2 = 0; a2 < n && !found; ++a2)
              found = prec.get(a2, b) && prec.get(a2, dd) &&
                      prec.get(a, S.join(a1, a2));
          }
          if (!found)
            d.fail_once("localized-basic", {S.name_of(a), S.name_of(b),
                                            S.name_of(c), S.name_of(dd)});
        }
      }
}

}  // namespace detail

inline Diagnosis validate_structure(StructureKind kind,
                                    const ProximityPoset& S) {
  if (kind_needs_joins(kind))
    throw KindUnavailable(std::string("kind ") + kind_name(kind) +
                          " requires join data");
  Diagnosis d;
  detail::check_poset(S, d);
  if (kind == StructureKind::ProximityPoset) detail::check_proximity(S, d);
  if (d.ok) S.grant_badge(kind);
  return d;
}

inline Diagnosis validate_structure(StructureKind kind,
                                    const ProximityJSL& S) {
  Diagnosis d;
  std::uint32_t want = kind_closure(kind);
  auto wants = [&](StructureKind k) {
    return (want & (1u << static_cast<std::uint32_t>(k))) != 0;
  };
  detail::check_poset(S.base(), d);
  if (wants(StructureKind::JoinSemilattice)) detail::check_jsl(S, d);
  if (wants(StructureKind::ProximityPoset))
    detail::check_proximity(S.base(), d);
  if (wants(StructureKind::StrongProximityJSL) && d.ok)
    detail::check_strong(S, d);
  if (wants(StructureKind::LocalizedStrongProximityJSL) && d.ok)
    detail::check_localized_basic(S, d);
  if (d.ok) S.grant_badge(kind);
  return d;
}

// Validation is exhaustive only up to this carrier size; beyond it,
// require_kind records an assumed badge instead of running axiom checks.
inline constexpr std::uint32_t kValidateExhaustiveMax = 512;

template <typename Structure>
inline void require_kind(const Structure& S, StructureKind kind) {
  if (S.has_badge(kind)) return;
  if (S.size() > kValidateExhaustiveMax) {
    S.grant_assumed(kind);
    return;
  }
  Diagnosis d = validate_structure(kind, S);
  if (!d.ok) throw NotValidated(kind, d);
}

// ---------------------------------------------------------------------------
// Localization, in three equivalent formulations
// ---------------------------------------------------------------------------

enum class LocalizedMode { Basic, General, Finite, All };

namespace detail {

// General form: an approximant of a common bound of two finite joins is
// approximated by a join of common approximants.
inline void check_localized_general(const ProximityJSL& S, Diagnosis& d) {
  const Relation& le = S.le();
  const Relation& prec = S.prec();
  const std::uint32_t n = S.size();
  if (n > 20)
    throw SizeCapExceeded(std::uint64_t{1} << std::min<std::uint32_t>(n, 63),
                          std::uint64_t{1} << 20,
                          "localization check: subset scan");
  const std::uint32_t subsets = 1u << n;

  // joins reachable from common approximants, memoized per approximant set
  std::vector<BitVec> reach(subsets, BitVec(0));
  std::vector<bool> have(subsets, false);
  auto reachable = [&](const BitVec& D) -> const BitVec& {
    std::uint64_t key = 0;
    D.for_each([&](std::uint32_t x) { key |= std::uint64_t{1} << x; });
    if (!have[key]) {
      reach[key] = join_closure(S, D);
      have[key] = true;
    }
    return reach[key];
  };

  for (std::uint32_t Am = 0; Am < subsets; ++Am) {
    BitVec A = BitVec::from_mask(n, Am);
    std::uint32_t joinA = S.join_of(A);
    BitVec downA = prec.preimage(FinSubset(S.carrier(), A)).bits();
    for (std::uint32_t Bm = 0; Bm < subsets; ++Bm) {
      BitVec B = BitVec::from_mask(n, Bm);
      std::uint32_t joinB = S.join_of(B);
      BitVec downB = prec.preimage(FinSubset(S.carrier(), B)).bits();
      BitVec common = downA;
      common &= downB;
      const BitVec& joins = reachable(common);
      for (std::uint32_t ap = 0; ap < n; ++ap) {
        if (!le.get(ap, joinA) || !le.get(ap, joinB)) continue;
        for (std::uint32_t a = 0; a < n; ++a) {
          if (!prec.get(a, ap)) continue;
          bool found = false;
          joins.for_each([&](std::uint32_t j) {
            if (prec.get(a, j)) found = true;
          });
          if (!found) {
            d.fail_once("localized-general",
                        {S.name_of(a), S.name_of(ap),
                         FinSubset(S.carrier(), A).to_string(),
                         FinSubset(S.carrier(), B).to_string()});
            return;
          }
        }
      }
    }
  }
}

// Finite-family form, checked for families of up to three finite subsets
// (larger families reduce to the binary case by induction, mirroring how the
// general form generates this one).
inline void check_localized_finite(const ProximityJSL& S, Diagnosis& d) {
  const Relation& le = S.le();
  const Relation& prec = S.prec();
  const std::uint32_t n = S.size();
  if (n > 16)
    throw SizeCapExceeded(std::uint64_t{1} << std::min<std::uint32_t>(n, 63),
                          std::uint64_t{1} << 16,
                          "localization check: family scan");
  const std::uint32_t subsets = 1u << n;

  std::vector<BitVec> down(subsets, BitVec(n));
  std::vector<std::uint32_t> jn(subsets, 0);
  for (std::uint32_t m = 0; m < subsets; ++m) {
    BitVec A = BitVec::from_mask(n, m);
    down[m] = prec.preimage(FinSubset(S.carrier(), A)).bits();
    jn[m] = S.join_of(A);
  }

  auto check_family = [&](const std::vector<std::uint32_t>& fam) -> bool {
    BitVec inter(n);
    for (std::uint32_t x = 0; x < n; ++x) inter.set(x);
    for (auto m : fam) inter &= down[m];
    BitVec joins = join_closure(S, inter);
    for (std::uint32_t ap = 0; ap < n; ++ap) {
      bool below_all = true;
      for (auto m : fam)
        if (!le.get(ap, jn[m])) below_all = false;
      if (!below_all) continue;
      for (std::uint32_t a = 0; a < n; ++a) {
        if (!prec.get(a, ap)) continue;
        bool found = false;
        joins.for_each([&](std::uint32_t j) {
          if (prec.get(a, j)) found = true;
        });
        if (!found) {
          std::vector<std::string> where{S.name_of(a), S.name_of(ap)};
          for (auto m : fam)
            where.push_back(
                FinSubset(S.carrier(), BitVec::from_mask(n, m)).to_string());
          d.fail_once("localized-finite", std::move(where));
          return false;
        }
      }
    }
    return true;
  };

  if (!check_family({})) return;
  for (std::uint32_t m0 = 0; m0 < subsets; ++m0) {
    if (!check_family({m0})) return;
    for (std::uint32_t m1 = m0; m1 < subsets; ++m1) {
      if (!check_family({m0, m1})) return;
      for (std::uint32_t m2 = m1; m2 < subsets; ++m2)
        if (!check_family({m0, m1, m2})) return;
    }
  }
}

}  // namespace detail

inline Diagnosis is_localized(const ProximityJSL& S,
                              LocalizedMode mode = LocalizedMode::All) {
  require_kind(S, StructureKind::StrongProximityJSL);
  Diagnosis basic, general, finite;
  bool have_basic = false, have_general = false, have_finite = false;
  if (mode == LocalizedMode::Basic || mode == LocalizedMode::All) {
    detail::check_localized_basic(S, basic);
    have_basic = true;
  }
  if (mode == LocalizedMode::General || mode == LocalizedMode::All) {
    detail::check_localized_general(S, general);
    have_general = true;
  }
  if (mode == LocalizedMode::Finite || mode == LocalizedMode::All) {
    detail::check_localized_finite(S, finite);
    have_finite = true;
  }
  if (mode == LocalizedMode::All) {
    if (basic.ok != general.ok || basic.ok != finite.ok)
      throw InternalCheckFailure(
          std::string("localization formulations disagree: basic=") +
          (basic.ok ? "pass" : "fail") + " general=" +
          (general.ok ? "pass" : "fail") + " finite=" +
          (finite.ok ? "pass" : "fail"));
  }
  Diagnosis out;
  if (have_basic) out.absorb(basic);
  if (have_general) out.absorb(general);
  if (have_finite) out.absorb(finite);
  if (out.ok && mode == LocalizedMode::All)
    S.grant_badge(StructureKind::LocalizedStrongProximityJSL);
  return out;
}

// ---------------------------------------------------------------------------
// Morphism validation
// ---------------------------------------------------------------------------

enum class MorphismKind { Approximable, JoinApproximable, Lawson, Proximity };

inline const char* morphism_kind_name(MorphismKind k) {
  switch (k) {
    case MorphismKind::Approximable: return "approximable";
    case MorphismKind::JoinApproximable: return "join-approximable";
    case MorphismKind::Lawson: return "lawson";
    case MorphismKind::Proximity: return "proximity";
  }
  return "?";
}

inline std::optional<MorphismKind> morphism_kind_from_name(
    const std::string& s) {
  for (auto k : {MorphismKind::Approximable, MorphismKind::JoinApproximable,
                 MorphismKind::Lawson, MorphismKind::Proximity})
    if (s == morphism_kind_name(k)) return k;
  return std::nullopt;
}

namespace detail {

inline void check_approximable(const Relation& r, const ProximityPoset& src,
                               const ProximityPoset& dst, Diagnosis& d) {
  const Relation& le = src.le();
  const Relation& lep = dst.le();
  const std::uint32_t n = src.size(), m = dst.size();

  for (std::uint32_t b = 0; b < m; ++b) {
    if (r.col(b).none()) d.fail_once("preimage-inhabited", {dst.name_of(b)});
    for (std::uint32_t a = 0; a < n; ++a) {
      if (!r.get(a, b)) continue;
      for (std::uint32_t a0 = 0; a0 < n; ++a0)
        if (le.get(a0, a) && !r.get(a0, b))
          d.fail_once("preimage-lower",
                      {src.name_of(a0), src.name_of(a), dst.name_of(b)});
      for (std::uint32_t a2 = 0; a2 < n; ++a2) {
        if (!r.get(a2, b)) continue;
        bool bound = false;
        for (std::uint32_t u = 0; u < n && !bound; ++u)
          bound = r.get(u, b) && le.get(a, u) && le.get(a2, u);
        if (!bound)
          d.fail_once("preimage-directed",
                      {src.name_of(a), src.name_of(a2), dst.name_of(b)});
      }
    }
  }
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < m; ++b) {
      if (!r.get(a, b)) continue;
      for (std::uint32_t b2 = 0; b2 < m; ++b2)
        if (lep.get(b, b2) && !r.get(a, b2))
          d.fail_once("image-upper",
                      {src.name_of(a), dst.name_of(b), dst.name_of(b2)});
    }

  // the approximation relations act as identities under composition
  Relation right = compose(r, src.prec());
  if (!(right == r)) {
    auto diff = right.first_difference(r);
    d.fail_once("right-identity",
                {src.name_of(diff->first), dst.name_of(diff->second)});
  }
  Relation left = compose(dst.prec(), r);
  if (!(left == r)) {
    auto diff = left.first_difference(r);
    d.fail_once("left-identity",
                {src.name_of(diff->first), dst.name_of(diff->second)});
  }
}

inline void check_lawson(const Relation& r, const ProximityPoset& src,
                         const ProximityPoset& dst, Diagnosis& d,
                         bool cross_check) {
  const Relation& prec = src.prec();
  const Relation& precp = dst.prec();
  const std::uint32_t n = src.size(), m = dst.size();

  bool clause_ok = true;
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t ap = 0; ap < n; ++ap) {
      if (!prec.get(a, ap)) continue;
      if (r.row(a).none()) {
        d.fail_once("lawson-total", {src.name_of(a), src.name_of(ap)});
        clause_ok = false;
      }
      for (std::uint32_t b = 0; b < m; ++b) {
        if (!r.get(ap, b)) continue;
        for (std::uint32_t c = 0; c < m; ++c) {
          if (!r.get(ap, c)) continue;
          bool found = false;
          for (std::uint32_t dd = 0; dd < m && !found; ++dd)
            found = precp.get(dd, b) && precp.get(dd, c) && r.get(a, dd);
          if (!found) {
            d.fail_once("lawson-pair", {src.name_of(a), src.name_of(ap),
                                        dst.name_of(b), dst.name_of(c)});
            clause_ok = false;
          }
        }
      }
    }

  // The two-clause form must agree with the single-formula form quantified
  // over finite subsets of the target; a mismatch would falsify the
  // equivalence this module relies on.
  if (cross_check && m <= 16) {
    bool single_ok = true;
    std::pair<std::uint32_t, std::uint32_t> bad{0, 0};
    std::uint32_t badB = 0;
    for (std::uint32_t a = 0; a < n && single_ok; ++a)
      for (std::uint32_t ap = 0; ap < n && single_ok; ++ap) {
        if (!prec.get(a, ap)) continue;
        for (std::uint32_t Bm = 0; Bm < (1u << m) && single_ok; ++Bm) {
          BitVec B = BitVec::from_mask(m, Bm);
          if (!B.subset_of(r.row(ap))) continue;
          bool found = false;
          for (std::uint32_t dd = 0; dd < m && !found; ++dd) {
            if (!r.get(a, dd)) continue;
            bool below_all = true;
            B.for_each([&](std::uint32_t b) {
              if (!precp.get(dd, b)) below_all = false;
            });
            found = below_all;
          }
          if (!found) {
            single_ok = false;
            bad = {a, ap};
            badB = Bm;
          }
        }
      }
    if (single_ok != clause_ok)
      throw InternalCheckFailure(
          "two-clause and single-formula characterizations disagree at (" +
          src.name_of(bad.first) + ", " + src.name_of(bad.second) + ", B=" +
          std::to_string(badB) + ")");
  }
}

inline void check_join_preserving(const Relation& r, const ProximityJSL& src,
                                  const ProximityJSL& dst, Diagnosis& d) {
  const std::uint32_t n = src.size(), m = dst.size();
  for (std::uint32_t a = 0; a < n; ++a)
    if (r.get(a, dst.bottom()) && a != src.bottom())
      d.fail_once("join-zero", {src.name_of(a)});
  for (std::uint32_t b = 0; b < m; ++b)
    for (std::uint32_t c = 0; c < m; ++c) {
      std::uint32_t j = dst.join(b, c);
      for (std::uint32_t a = 0; a < n; ++a) {
        if (!r.get(a, j)) continue;
        bool split = false;
        for (std::uint32_t bp = 0; bp < n && !split; ++bp) {
          if (!r.get(bp, b)) continue;
          for (std::uint32_t cp = 0; cp < n && !split; ++cp)
            split = r.get(cp, c) && src.le().get(a, src.join(bp, cp));
        }
        if (!split)
          d.fail_once("join-split",
                      {src.name_of(a), dst.name_of(b), dst.name_of(c)});
      }
    }
}

}  // namespace detail

inline Diagnosis validate_morphism(MorphismKind kind, const Relation& r,
                                   const ProximityPoset& src,
                                   const ProximityPoset& dst) {
  if (kind == MorphismKind::JoinApproximable || kind == MorphismKind::Proximity)
    throw KindUnavailable(std::string("morphism kind ") +
                          morphism_kind_name(kind) + " requires join data");
  if (!same_carrier(r.src(), src.carrier()) ||
      !same_carrier(r.dst(), dst.carrier()))
    throw CarrierMismatch("validate_morphism: relation endpoints mismatch");
  require_kind(src, StructureKind::ProximityPoset);
  require_kind(dst, StructureKind::ProximityPoset);
  Diagnosis d;
  detail::check_approximable(r, src, dst, d);
  if (kind == MorphismKind::Lawson)
    detail::check_lawson(r, src, dst, d, /*cross_check=*/d.ok);
  return d;
}

inline Diagnosis validate_morphism(MorphismKind kind, const Relation& r,
                                   const ProximityJSL& src,
                                   const ProximityJSL& dst) {
  if (!same_carrier(r.src(), src.carrier()) ||
      !same_carrier(r.dst(), dst.carrier()))
    throw CarrierMismatch("validate_morphism: relation endpoints mismatch");
  if (kind == MorphismKind::Approximable || kind == MorphismKind::Lawson)
    return validate_morphism(kind, r, src.base(), dst.base());
  require_kind(src, StructureKind::ProximityJSL);
  require_kind(dst, StructureKind::ProximityJSL);
  Diagnosis d;
  if (kind == MorphismKind::Proximity) {
    auto endpoint = [&](const ProximityJSL& X, const char* side) {
      if (X.has_badge(StructureKind::LocalizedStrongProximityJSL)) return;
      if (!validate_structure(StructureKind::StrongProximityJSL, X).ok ||
          !is_localized(X).ok)
        d.fail("endpoint-localized", {side});
    };
    endpoint(src, "source");
    endpoint(dst, "target");
  }
  detail::check_approximable(r, src.base(), dst.base(), d);
  bool approx_ok = d.ok;
  detail::check_join_preserving(r, src, dst, d);
  if (kind == MorphismKind::Proximity)
    detail::check_lawson(r, src.base(), dst.base(), d,
                         /*cross_check=*/approx_ok);
  return d;
}

// ---------------------------------------------------------------------------
// Strengthening
// ---------------------------------------------------------------------------

// Output of the strengthening construction: a strong structure built on
// classes of finite subsets of the input, the quotient bookkeeping, and the
// verified pair of mutually inverse relations connecting it to the input.
struct Strengthening {
  ProximityJSL strong;
  QuotientMap classes;      // finite subsets of the input -> classes
  Relation to_base;         // class  r  element   (morphism strong -> input)
  Relation from_base;       // element  s  class   (morphism input -> strong)
};

inline Strengthening strengthen(const ProximityJSL& S,
                                std::uint32_t cap = kDefaultCap) {
  require_kind(S, StructureKind::ProximityJSL);
  const std::uint32_t n = S.size();
  CarrierPtr fin = Carrier::make_fin(S.carrier(), cap);
  const std::uint32_t fs = fin->size();
  const Relation& prec = S.prec();

  // For each finite subset A: the joins of subsets approximating A from
  // below. Two subsets compare when every such join of the first is
  // approximated by one of the second.
  std::vector<BitVec> lower_joins(fs, BitVec(n));
  for (std::uint32_t Am = 0; Am < fs; ++Am) {
    BitVec A = subset_of_fin_element(fin, Am).bits();
    for (std::uint32_t Cm = 0; Cm < fs; ++Cm) {
      BitVec C = subset_of_fin_element(fin, Cm).bits();
      if (lower_extends(prec, C, A)) lower_joins[Am].set(S.join_of(C));
    }
  }
  Relation lev(fin, fin);
  for (std::uint32_t Am = 0; Am < fs; ++Am) {
    for (std::uint32_t Bm = 0; Bm < fs; ++Bm) {
      BitVec targets(n);
      lower_joins[Bm].for_each([&](std::uint32_t y) {
        for (std::uint32_t x = 0; x < n; ++x)
          if (prec.get(x, y)) targets.set(x);
      });
      if (lower_joins[Am].subset_of(targets)) lev.set(Am, Bm);
    }
  }

  Relation precv(fin, fin);
  for (std::uint32_t Bm = 0; Bm < fs; ++Bm) {
    BitVec B = subset_of_fin_element(fin, Bm).bits();
    for (std::uint32_t Cm = 0; Cm < fs; ++Cm) {
      BitVec C = subset_of_fin_element(fin, Cm).bits();
      if (!lower_extends(prec, C, B)) continue;
      for (std::uint32_t Am = 0; Am < fs; ++Am)
        if (lev.get(Am, Cm)) precv.set(Am, Bm);
    }
  }

  auto refl = poset_reflection(lev);
  const CarrierPtr& Q = refl.map.quotient();
  const std::uint32_t q = Q->size();

  // push the approximation relation down to classes, checking that it only
  // depends on the class
  Relation precq(Q, Q);
  for (std::uint32_t x = 0; x < q; ++x)
    for (std::uint32_t y = 0; y < q; ++y)
      if (precv.get(refl.map.representative(x), refl.map.representative(y)))
        precq.set(x, y);
  for (std::uint32_t Am = 0; Am < fs; ++Am)
    for (std::uint32_t Bm = 0; Bm < fs; ++Bm)
      if (precv.get(Am, Bm) !=
          precq.get(refl.map.class_of(Am), refl.map.class_of(Bm)))
        throw InternalCheckFailure(
            "strengthening: approximation not class-invariant");

  // joins on classes: union of member subsets
  std::uint32_t bottom_class = refl.map.class_of(0);
  std::vector<std::uint32_t> join_table(static_cast<std::size_t>(q) * q);
  for (std::uint32_t x = 0; x < q; ++x)
    for (std::uint32_t y = 0; y < q; ++y) {
      std::uint32_t ux = refl.map.representative(x);
      std::uint32_t uy = refl.map.representative(y);
      BitVec u = subset_of_fin_element(fin, ux).bits();
      u |= subset_of_fin_element(fin, uy).bits();
      join_table[static_cast<std::size_t>(x) * q + y] =
          refl.map.class_of(fin_index_of(FinSubset(S.carrier(), u), fin));
    }

  ProximityJSL strong(ProximityPoset(Q, refl.order, precq), bottom_class,
                      std::move(join_table));
  Diagnosis ds = validate_structure(StructureKind::StrongProximityJSL, strong);
  if (!ds.ok)
    throw InternalCheckFailure("strengthening: output not strong: " +
                               ds.summary());

  // the mutually inverse pair
  Relation to_base(Q, S.carrier());
  for (std::uint32_t x = 0; x < q; ++x) {
    std::uint32_t rep = refl.map.representative(x);
    for (std::uint32_t a = 0; a < n; ++a) {
      std::uint32_t sing = fin_index_of(
          FinSubset::of(S.carrier(), {a}), fin);
      if (precv.get(rep, sing)) to_base.set(x, a);
    }
  }
  Relation from_base(S.carrier(), Q);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t x = 0; x < q; ++x) {
      std::uint32_t rep = refl.map.representative(x);
      bool hit = false;
      lower_joins[rep].for_each([&](std::uint32_t j) {
        if (prec.get(a, j)) hit = true;
      });
      if (hit) from_base.set(a, x);
    }

  if (!(compose(from_base, to_base) == precq))
    throw InternalCheckFailure(
        "strengthening: inverse pair does not compose to the strong "
        "approximation");
  if (!(compose(to_base, from_base) == prec))
    throw InternalCheckFailure(
        "strengthening: inverse pair does not compose to the input "
        "approximation");
  Diagnosis dr = validate_morphism(MorphismKind::Approximable, to_base,
                                   strong.base(), S.base());
  Diagnosis dsb = validate_morphism(MorphismKind::Approximable, from_base,
                                    S.base(), strong.base());
  if (!dr.ok || !dsb.ok)
    throw InternalCheckFailure("strengthening: inverse pair not approximable");

  return Strengthening{std::move(strong), std::move(refl.map),
                       std::move(to_base), std::move(from_base)};
}

// ---------------------------------------------------------------------------
// Fixtures
// ---------------------------------------------------------------------------

// Two-element chain o < i with the approximation equal to the order.
inline ProximityJSL chain2_fixture() {
  auto S = Carrier::make_base({"o", "i"});
  std::uint32_t o = *S->index_of("o"), i = *S->index_of("i");
  Relation le(S, S);
  le.set(o, o);
  le.set(o, i);
  le.set(i, i);
  return *try_attach_joins(S, le, le);
}

// Two-element chain where only the bottom approximates anything: the top is
// reachable in the limit but never finitely.
inline ProximityPoset gap2_fixture() {
  auto S = Carrier::make_base({"o", "i"});
  std::uint32_t o = *S->index_of("o"), i = *S->index_of("i");
  Relation le(S, S);
  le.set(o, o);
  le.set(o, i);
  le.set(i, i);
  Relation prec(S, S);
  prec.set(o, o);
  prec.set(o, i);
  return ProximityPoset(S, le, prec);
}

// Four-element diamond 0 < a,b < 1 with the approximation equal to the order.
inline ProximityJSL diamond_fixture() {
  auto S = Carrier::make_base({"0", "a", "b", "1"});
  std::uint32_t z = *S->index_of("0"), a = *S->index_of("a"),
                b = *S->index_of("b"), t = *S->index_of("1");
  Relation le(S, S);
  for (std::uint32_t x : {z, a, b, t}) {
    le.set(x, x);
    le.set(z, x);
    le.set(x, t);
  }
  return *try_attach_joins(S, le, le);
}

}  // namespace latkit
