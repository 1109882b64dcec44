#pragma once
// Finite relation algebra: carriers, canonical finite subsets and families,
// dense bit-matrix relations, lower/upper extensions, the star operator,
// and preorder quotients. Everything is immutable after construction and
// safe to share across threads.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace latkit {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CarrierMismatch : Error {
  using Error::Error;
};

struct SizeCapExceeded : Error {
  std::uint64_t required = 0;
  std::uint64_t cap = 0;
  SizeCapExceeded(std::uint64_t req, std::uint64_t c, const std::string& what_arg)
      : Error(what_arg + " (required " + std::to_string(req) + ", cap " +
              std::to_string(c) + ")"),
        required(req),
        cap(c) {}
};

struct FinCarrierUnavailable : Error {
  using Error::Error;
};

struct NotPreorder : Error {
  std::uint32_t a = 0, b = 0;
  NotPreorder(std::uint32_t x, std::uint32_t y, const std::string& what_arg)
      : Error(what_arg), a(x), b(y) {}
};

// Raised when two computations that a theorem says must agree disagree;
// always indicates a bug in this library, never bad user input.
struct InternalCheckFailure : Error {
  using Error::Error;
};

inline constexpr std::uint64_t kDefaultCap = 4096;
// Dense bit matrices refuse carriers above this many elements.
inline constexpr std::uint32_t kMaxRelationSide = 1u << 16;

// ---------------------------------------------------------------------------
// BitVec: fixed-width bit vector with value semantics
// ---------------------------------------------------------------------------

class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::uint32_t n) : n_(n), w_((n + 63) / 64, 0) {}

  std::uint32_t size() const { return n_; }

  bool get(std::uint32_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::uint32_t i, bool v = true) {
    if (v)
      w_[i >> 6] |= std::uint64_t{1} << (i & 63);
    else
      w_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
  }

  bool any() const {
    for (auto x : w_)
      if (x) return true;
    return false;
  }
  bool none() const { return !any(); }

  std::uint32_t count() const {
    std::uint32_t c = 0;
    for (auto x : w_) c += static_cast<std::uint32_t>(__builtin_popcountll(x));
    return c;
  }

  bool subset_of(const BitVec& o) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & ~o.w_[i]) return false;
    return true;
  }

  bool intersects(const BitVec& o) const {
    for (std::size_t i = 0; i < w_.size(); ++i)
      if (w_[i] & o.w_[i]) return true;
    return false;
  }

  BitVec& operator|=(const BitVec& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] |= o.w_[i];
    return *this;
  }
  BitVec& operator&=(const BitVec& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= o.w_[i];
    return *this;
  }
  BitVec& subtract(const BitVec& o) {
    for (std::size_t i = 0; i < w_.size(); ++i) w_[i] &= ~o.w_[i];
    return *this;
  }

  friend BitVec operator|(BitVec a, const BitVec& b) { return a |= b; }
  friend BitVec operator&(BitVec a, const BitVec& b) { return a &= b; }

  bool operator==(const BitVec& o) const = default;

  // Numeric order (highest word most significant); canonical subset order.
  bool numeric_less(const BitVec& o) const {
    for (std::size_t i = w_.size(); i-- > 0;)
      if (w_[i] != o.w_[i]) return w_[i] < o.w_[i];
    return false;
  }

  template <class F>
  void for_each(F f) const {
    for (std::size_t wi = 0; wi < w_.size(); ++wi) {
      std::uint64_t x = w_[wi];
      while (x) {
        std::uint32_t b = static_cast<std::uint32_t>(__builtin_ctzll(x));
        f(static_cast<std::uint32_t>(wi * 64 + b));
        x &= x - 1;
      }
    }
  }

  std::vector<std::uint32_t> members() const {
    std::vector<std::uint32_t> out;
    for_each([&](std::uint32_t i) { out.push_back(i); });
    return out;
  }

  std::optional<std::uint32_t> first() const {
    std::optional<std::uint32_t> r;
    for (std::size_t wi = 0; wi < w_.size(); ++wi)
      if (w_[wi]) return static_cast<std::uint32_t>(
          wi * 64 + __builtin_ctzll(w_[wi]));
    return r;
  }

  std::size_t hash() const {
    std::size_t h = 1469598103934665603ull;
    for (auto x : w_) {
      h ^= static_cast<std::size_t>(x);
      h *= 1099511628211ull;
    }
    return h;
  }

  static BitVec of(std::uint32_t n, std::initializer_list<std::uint32_t> idx) {
    BitVec b(n);
    for (auto i : idx) b.set(i);
    return b;
  }
  static BitVec from_mask(std::uint32_t n, std::uint64_t mask) {
    BitVec b(n);
    for (std::uint32_t i = 0; i < n && i < 64; ++i)
      if ((mask >> i) & 1u) b.set(i);
    return b;
  }
  // Valid only for n <= 64.
  std::uint64_t low_mask() const { return w_.empty() ? 0 : w_[0]; }

 private:
  std::uint32_t n_ = 0;
  std::vector<std::uint64_t> w_;
};

struct BitVecHash {
  std::size_t operator()(const BitVec& b) const { return b.hash(); }
};

// ---------------------------------------------------------------------------
// Carrier
// ---------------------------------------------------------------------------

class Carrier;
using CarrierPtr = std::shared_ptr<const Carrier>;

class Carrier {
 public:
  enum class Origin { base, fin_of, quotient_of };

  static CarrierPtr make_base(std::vector<std::string> atoms) {
    std::sort(atoms.begin(), atoms.end());
    for (std::size_t i = 1; i < atoms.size(); ++i)
      if (atoms[i] == atoms[i - 1])
        throw Error("duplicate atom '" + atoms[i] + "' in carrier");
    auto c = std::shared_ptr<Carrier>(new Carrier());
    c->origin_ = Origin::base;
    c->atoms_ = std::move(atoms);
    c->size_ = c->atoms_.size();
    return c;
  }

  // Enumerates all finite subsets of `base` as elements; element index i is
  // the subset whose membership mask is exactly i.
  static CarrierPtr make_fin(const CarrierPtr& base,
                             std::uint64_t cap = kDefaultCap) {
    if (base->size() > 62)
      throw SizeCapExceeded(std::uint64_t{1} << 62, cap,
                            "finite-subset carrier over " +
                                std::to_string(base->size()) + " elements");
    std::uint64_t need = std::uint64_t{1} << base->size();
    if (need > cap)
      throw SizeCapExceeded(need, cap, "finite-subset carrier");
    auto c = std::shared_ptr<Carrier>(new Carrier());
    c->origin_ = Origin::fin_of;
    c->parent_ = base;
    c->size_ = need;
    return c;
  }

  // reps: ascending parent indices, one per class, in class order.
  static CarrierPtr make_quotient(const CarrierPtr& base,
                                  std::vector<std::uint32_t> reps) {
    auto c = std::shared_ptr<Carrier>(new Carrier());
    c->origin_ = Origin::quotient_of;
    c->parent_ = base;
    c->reps_ = std::move(reps);
    c->size_ = c->reps_.size();
    return c;
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(size_); }
  Origin origin() const { return origin_; }
  const CarrierPtr& parent() const { return parent_; }
  const std::vector<std::uint32_t>& class_reps() const { return reps_; }

  std::string name_of(std::uint32_t i) const {
    switch (origin_) {
      case Origin::base:
        return atoms_[i];
      case Origin::fin_of: {
        std::string s = "{";
        bool fst = true;
        for (std::uint32_t b = 0; b < parent_->size(); ++b)
          if ((static_cast<std::uint64_t>(i) >> b) & 1u) {
            if (!fst) s += ",";
            s += parent_->name_of(b);
            fst = false;
          }
        return s + "}";
      }
      case Origin::quotient_of:
        return parent_->name_of(reps_[i]);
    }
    return {};
  }

  std::optional<std::uint32_t> index_of(const std::string& atom) const {
    auto it = std::lower_bound(atoms_.begin(), atoms_.end(), atom);
    if (it != atoms_.end() && *it == atom)
      return static_cast<std::uint32_t>(it - atoms_.begin());
    return std::nullopt;
  }

  const std::vector<std::string>& atoms() const { return atoms_; }

  bool same_as(const Carrier& o) const {
    if (this == &o) return true;
    if (origin_ != o.origin_ || size_ != o.size_) return false;
    switch (origin_) {
      case Origin::base:
        return atoms_ == o.atoms_;
      case Origin::fin_of:
        return parent_->same_as(*o.parent_);
      case Origin::quotient_of:
        return reps_ == o.reps_ && parent_->same_as(*o.parent_);
    }
    return false;
  }

 private:
  Carrier() = default;
  Origin origin_ = Origin::base;
  CarrierPtr parent_;
  std::vector<std::string> atoms_;
  std::vector<std::uint32_t> reps_;
  std::uint64_t size_ = 0;
};

inline bool same_carrier(const CarrierPtr& a, const CarrierPtr& b) {
  return a == b || (a && b && a->same_as(*b));
}

inline void require_same_carrier(const CarrierPtr& a, const CarrierPtr& b,
                                 const char* where) {
  if (!same_carrier(a, b))
    throw CarrierMismatch(std::string(where) + ": carriers differ");
}

inline CarrierPtr fin_carrier(const CarrierPtr& c,
                              std::uint64_t cap = kDefaultCap) {
  return Carrier::make_fin(c, cap);
}

// ---------------------------------------------------------------------------
// FinSubset: canonical finite subset of one carrier
// ---------------------------------------------------------------------------

class FinSubset {
 public:
  explicit FinSubset(CarrierPtr c) : carrier_(std::move(c)), bits_(carrier_->size()) {}
  FinSubset(CarrierPtr c, BitVec b) : carrier_(std::move(c)), bits_(std::move(b)) {
    if (bits_.size() != carrier_->size())
      throw CarrierMismatch("subset width does not match carrier");
  }

  static FinSubset of(const CarrierPtr& c,
                      std::initializer_list<std::uint32_t> idx) {
    return FinSubset(c, BitVec::of(c->size(), idx));
  }
  static FinSubset of_indices(const CarrierPtr& c,
                              const std::vector<std::uint32_t>& idx) {
    BitVec b(c->size());
    for (auto i : idx) b.set(i);
    return FinSubset(c, std::move(b));
  }
  static FinSubset of_atoms(const CarrierPtr& c,
                            const std::vector<std::string>& names) {
    BitVec b(c->size());
    for (const auto& s : names) {
      auto i = c->index_of(s);
      if (!i) throw Error("unknown atom '" + s + "'");
      b.set(*i);
    }
    return FinSubset(c, std::move(b));
  }
  static FinSubset full(const CarrierPtr& c) {
    BitVec b(c->size());
    for (std::uint32_t i = 0; i < c->size(); ++i) b.set(i);
    return FinSubset(c, std::move(b));
  }

  const CarrierPtr& carrier() const { return carrier_; }
  const BitVec& bits() const { return bits_; }

  bool contains(std::uint32_t i) const { return bits_.get(i); }
  std::uint32_t count() const { return bits_.count(); }
  bool empty() const { return bits_.none(); }
  bool inhabited() const { return bits_.any(); }
  std::vector<std::uint32_t> members() const { return bits_.members(); }

  FinSubset unite(const FinSubset& o) const {
    require_same_carrier(carrier_, o.carrier_, "unite");
    return FinSubset(carrier_, bits_ | o.bits_);
  }
  FinSubset intersect(const FinSubset& o) const {
    require_same_carrier(carrier_, o.carrier_, "intersect");
    return FinSubset(carrier_, bits_ & o.bits_);
  }
  bool subset_of(const FinSubset& o) const {
    require_same_carrier(carrier_, o.carrier_, "subset_of");
    return bits_.subset_of(o.bits_);
  }
  // Inhabited intersection.
  bool meets(const FinSubset& o) const {
    require_same_carrier(carrier_, o.carrier_, "meets");
    return bits_.intersects(o.bits_);
  }

  bool operator==(const FinSubset& o) const {
    return same_carrier(carrier_, o.carrier_) && bits_ == o.bits_;
  }
  bool numeric_less(const FinSubset& o) const {
    return bits_.numeric_less(o.bits_);
  }

  std::string to_string() const {
    std::string s = "{";
    bool fst = true;
    bits_.for_each([&](std::uint32_t i) {
      if (!fst) s += ",";
      s += carrier_->name_of(i);
      fst = false;
    });
    return s + "}";
  }

 private:
  CarrierPtr carrier_;
  BitVec bits_;
};

// Conversions between subsets of C and elements of fin_of(C).
inline std::uint32_t fin_index_of(const FinSubset& A, const CarrierPtr& finC) {
  if (finC->origin() != Carrier::Origin::fin_of)
    throw CarrierMismatch("fin_index_of: not a finite-subset carrier");
  require_same_carrier(A.carrier(), finC->parent(), "fin_index_of");
  return static_cast<std::uint32_t>(A.bits().low_mask());
}

inline FinSubset subset_of_fin_element(const CarrierPtr& finC,
                                       std::uint32_t element) {
  if (finC->origin() != Carrier::Origin::fin_of)
    throw CarrierMismatch("subset_of_fin_element: not a finite-subset carrier");
  return FinSubset(finC->parent(),
                   BitVec::from_mask(finC->parent()->size(), element));
}

// ---------------------------------------------------------------------------
// FinFamily: canonical finite family of finite subsets of one carrier
// ---------------------------------------------------------------------------

class FinFamily {
 public:
  explicit FinFamily(CarrierPtr c) : carrier_(std::move(c)) {}
  FinFamily(CarrierPtr c, std::vector<BitVec> members)
      : carrier_(std::move(c)), members_(std::move(members)) {
    canonicalize();
  }

  static FinFamily of(const CarrierPtr& c, const std::vector<FinSubset>& subs) {
    std::vector<BitVec> ms;
    ms.reserve(subs.size());
    for (const auto& s : subs) {
      require_same_carrier(s.carrier(), c, "FinFamily::of");
      ms.push_back(s.bits());
    }
    return FinFamily(c, std::move(ms));
  }

  const CarrierPtr& carrier() const { return carrier_; }
  std::size_t size() const { return members_.size(); }
  FinSubset member(std::size_t i) const {
    return FinSubset(carrier_, members_[i]);
  }
  const std::vector<BitVec>& raw_members() const { return members_; }

  bool contains(const FinSubset& s) const {
    return std::binary_search(
        members_.begin(), members_.end(), s.bits(),
        [](const BitVec& a, const BitVec& b) { return a.numeric_less(b); });
  }

  FinFamily with(const FinSubset& s) const {
    auto ms = members_;
    ms.push_back(s.bits());
    return FinFamily(carrier_, std::move(ms));
  }

  // Union of all members.
  FinSubset unite_all() const {
    BitVec u(carrier_->size());
    for (const auto& m : members_) u |= m;
    return FinSubset(carrier_, std::move(u));
  }

  bool operator==(const FinFamily& o) const {
    return same_carrier(carrier_, o.carrier_) && members_ == o.members_;
  }

  std::string to_string() const {
    std::string s = "{";
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (i) s += ",";
      s += FinSubset(carrier_, members_[i]).to_string();
    }
    return s + "}";
  }

 private:
  void canonicalize() {
    std::sort(members_.begin(), members_.end(),
              [](const BitVec& a, const BitVec& b) { return a.numeric_less(b); });
    members_.erase(std::unique(members_.begin(), members_.end()),
                   members_.end());
  }
  CarrierPtr carrier_;
  std::vector<BitVec> members_;
};

// ---------------------------------------------------------------------------
// Relation: dense bit matrix between two carriers
// ---------------------------------------------------------------------------

class Relation {
 public:
  Relation() = default;
  Relation(CarrierPtr src, CarrierPtr dst)
      : src_(std::move(src)), dst_(std::move(dst)) {
    rows_ = src_->size();
    cols_ = dst_->size();
    if (rows_ > kMaxRelationSide || cols_ > kMaxRelationSide)
      throw SizeCapExceeded(std::max<std::uint64_t>(rows_, cols_),
                            kMaxRelationSide, "relation carrier too large");
    wpr_ = (cols_ + 63) / 64;
    bits_.assign(static_cast<std::size_t>(rows_) * wpr_, 0);
  }

  static Relation identity(const CarrierPtr& c) {
    Relation r(c, c);
    for (std::uint32_t i = 0; i < c->size(); ++i) r.set(i, i);
    return r;
  }
  static Relation full(const CarrierPtr& a, const CarrierPtr& b) {
    Relation r(a, b);
    for (std::uint32_t i = 0; i < r.rows_; ++i)
      for (std::uint32_t j = 0; j < r.cols_; ++j) r.set(i, j);
    return r;
  }
  static Relation empty(const CarrierPtr& a, const CarrierPtr& b) {
    return Relation(a, b);
  }

  const CarrierPtr& src() const { return src_; }
  const CarrierPtr& dst() const { return dst_; }
  std::uint32_t rows() const { return rows_; }
  std::uint32_t cols() const { return cols_; }

  bool get(std::uint32_t a, std::uint32_t b) const {
    return (bits_[static_cast<std::size_t>(a) * wpr_ + (b >> 6)] >> (b & 63)) & 1u;
  }
  void set(std::uint32_t a, std::uint32_t b, bool v = true) {
    auto& w = bits_[static_cast<std::size_t>(a) * wpr_ + (b >> 6)];
    if (v)
      w |= std::uint64_t{1} << (b & 63);
    else
      w &= ~(std::uint64_t{1} << (b & 63));
  }

  BitVec row(std::uint32_t a) const {
    BitVec b(cols_);
    for (std::uint32_t w = 0; w < wpr_; ++w)
      for (std::uint32_t k = 0; k < 64 && w * 64 + k < cols_; ++k)
        if ((bits_[static_cast<std::size_t>(a) * wpr_ + w] >> k) & 1u)
          b.set(w * 64 + k);
    return b;
  }
  BitVec col(std::uint32_t b) const {
    BitVec c(rows_);
    for (std::uint32_t a = 0; a < rows_; ++a)
      if (get(a, b)) c.set(a);
    return c;
  }

  void or_row_into(BitVec& acc, std::uint32_t a) const {
    for (std::uint32_t w = 0; w < wpr_; ++w) {
      std::uint64_t x = bits_[static_cast<std::size_t>(a) * wpr_ + w];
      if (!x) continue;
      for (std::uint32_t k = 0; k < 64; ++k)
        if ((x >> k) & 1u) acc.set(w * 64 + k);
    }
  }

  // Forward image rU = {b | exists a in U with a r b}.
  FinSubset image(const FinSubset& U) const {
    require_same_carrier(U.carrier(), src_, "image");
    BitVec acc(cols_);
    U.bits().for_each([&](std::uint32_t a) { or_row_into(acc, a); });
    return FinSubset(dst_, std::move(acc));
  }
  // Preimage r^-V = {a | exists b in V with a r b}.
  FinSubset preimage(const FinSubset& V) const {
    require_same_carrier(V.carrier(), dst_, "preimage");
    BitVec acc(rows_);
    for (std::uint32_t a = 0; a < rows_; ++a)
      if (row_intersects(a, V.bits())) acc.set(a);
    return FinSubset(src_, std::move(acc));
  }

  bool row_intersects(std::uint32_t a, const BitVec& v) const {
    for (std::uint32_t w = 0; w < wpr_; ++w) {
      std::uint64_t x = bits_[static_cast<std::size_t>(a) * wpr_ + w];
      if (!x) continue;
      for (std::uint32_t k = 0; k < 64 && w * 64 + k < cols_; ++k)
        if (((x >> k) & 1u) && v.get(w * 64 + k)) return true;
    }
    return false;
  }
  bool row_subset_of(std::uint32_t a, const BitVec& v) const {
    for (std::uint32_t w = 0; w < wpr_; ++w) {
      std::uint64_t x = bits_[static_cast<std::size_t>(a) * wpr_ + w];
      if (!x) continue;
      for (std::uint32_t k = 0; k < 64 && w * 64 + k < cols_; ++k)
        if (((x >> k) & 1u) && !v.get(w * 64 + k)) return false;
    }
    return true;
  }

  bool operator==(const Relation& o) const {
    return same_carrier(src_, o.src_) && same_carrier(dst_, o.dst_) &&
           bits_ == o.bits_;
  }
  bool subset_of(const Relation& o) const {
    if (!same_carrier(src_, o.src_) || !same_carrier(dst_, o.dst_))
      throw CarrierMismatch("subset_of: relations over different carriers");
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i] & ~o.bits_[i]) return false;
    return true;
  }

  std::optional<std::pair<std::uint32_t, std::uint32_t>> first_difference(
      const Relation& o) const {
    for (std::uint32_t a = 0; a < rows_; ++a)
      for (std::uint32_t b = 0; b < cols_; ++b)
        if (get(a, b) != o.get(a, b)) return std::make_pair(a, b);
    return std::nullopt;
  }

  bool is_reflexive() const {
    for (std::uint32_t i = 0; i < rows_; ++i)
      if (!get(i, i)) return false;
    return true;
  }
  bool is_transitive() const {
    for (std::uint32_t a = 0; a < rows_; ++a)
      for (std::uint32_t b = 0; b < cols_; ++b)
        if (get(a, b))
          for (std::uint32_t c = 0; c < cols_; ++c)
            if (get(b, c) && !get(a, c)) return false;
    return true;
  }
  bool is_antisymmetric() const {
    for (std::uint32_t a = 0; a < rows_; ++a)
      for (std::uint32_t b = a + 1; b < cols_; ++b)
        if (get(a, b) && get(b, a)) return false;
    return true;
  }

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs() const {
    std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
    for (std::uint32_t a = 0; a < rows_; ++a)
      for (std::uint32_t b = 0; b < cols_; ++b)
        if (get(a, b)) out.emplace_back(a, b);
    return out;
  }

 private:
  CarrierPtr src_, dst_;
  std::uint32_t rows_ = 0, cols_ = 0, wpr_ = 0;
  std::vector<std::uint64_t> bits_;
};

// compose(s, r): first r, then s. (a,c) holds iff some b has (a,b) in r and
// (b,c) in s.
inline Relation compose(const Relation& s, const Relation& r) {
  if (!same_carrier(r.dst(), s.src()))
    throw CarrierMismatch("compose: middle carriers differ");
  Relation out(r.src(), s.dst());
  for (std::uint32_t a = 0; a < r.rows(); ++a) {
    BitVec acc(s.cols());
    for (std::uint32_t b = 0; b < r.cols(); ++b)
      if (r.get(a, b)) s.or_row_into(acc, b);
    acc.for_each([&](std::uint32_t c) { out.set(a, c); });
  }
  return out;
}

inline Relation converse(const Relation& r) {
  Relation out(r.dst(), r.src());
  for (std::uint32_t a = 0; a < r.rows(); ++a)
    for (std::uint32_t b = 0; b < r.cols(); ++b)
      if (r.get(a, b)) out.set(b, a);
  return out;
}

// ---------------------------------------------------------------------------
// Extensions between finite-subset carriers
// ---------------------------------------------------------------------------

// A r_L B iff every a in A has some b in B with a r b.
inline Relation lower_extension(const Relation& r,
                                std::uint64_t cap = kDefaultCap) {
  CarrierPtr fs, fd;
  try {
    fs = Carrier::make_fin(r.src(), cap);
    fd = Carrier::make_fin(r.dst(), cap);
  } catch (const SizeCapExceeded& e) {
    throw FinCarrierUnavailable(std::string("lower_extension: ") + e.what());
  }
  Relation out(fs, fd);
  const std::uint32_t n = r.src()->size(), m = r.dst()->size();
  // pre[B] = set of a with row(a) meeting B, as a mask over src.
  std::vector<std::uint64_t> colmask(m, 0);
  for (std::uint32_t b = 0; b < m; ++b)
    for (std::uint32_t a = 0; a < n; ++a)
      if (r.get(a, b)) colmask[b] |= std::uint64_t{1} << a;
  std::vector<std::uint64_t> pre(std::uint64_t{1} << m, 0);
  for (std::uint64_t B = 1; B < (std::uint64_t{1} << m); ++B) {
    std::uint32_t lb = static_cast<std::uint32_t>(__builtin_ctzll(B));
    pre[B] = pre[B & (B - 1)] | colmask[lb];
  }
  for (std::uint64_t A = 0; A < (std::uint64_t{1} << n); ++A)
    for (std::uint64_t B = 0; B < (std::uint64_t{1} << m); ++B)
      if ((A & ~pre[B]) == 0)
        out.set(static_cast<std::uint32_t>(A), static_cast<std::uint32_t>(B));
  return out;
}

// A r_U B iff every b in B has some a in A with a r b.
inline Relation upper_extension(const Relation& r,
                                std::uint64_t cap = kDefaultCap) {
  CarrierPtr fs, fd;
  try {
    fs = Carrier::make_fin(r.src(), cap);
    fd = Carrier::make_fin(r.dst(), cap);
  } catch (const SizeCapExceeded& e) {
    throw FinCarrierUnavailable(std::string("upper_extension: ") + e.what());
  }
  Relation out(fs, fd);
  const std::uint32_t n = r.src()->size(), m = r.dst()->size();
  std::vector<std::uint64_t> rowmask(n, 0);
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < m; ++b)
      if (r.get(a, b)) rowmask[a] |= std::uint64_t{1} << b;
  // img[A] = set of b reachable from some a in A.
  std::vector<std::uint64_t> img(std::uint64_t{1} << n, 0);
  for (std::uint64_t A = 1; A < (std::uint64_t{1} << n); ++A) {
    std::uint32_t la = static_cast<std::uint32_t>(__builtin_ctzll(A));
    img[A] = img[A & (A - 1)] | rowmask[la];
  }
  for (std::uint64_t A = 0; A < (std::uint64_t{1} << n); ++A)
    for (std::uint64_t B = 0; B < (std::uint64_t{1} << m); ++B)
      if ((B & ~img[A]) == 0)
        out.set(static_cast<std::uint32_t>(A), static_cast<std::uint32_t>(B));
  return out;
}

// Pointwise forms, usable without materializing fin carriers.
inline bool lower_extends(const Relation& r, const BitVec& A, const BitVec& B) {
  bool ok = true;
  A.for_each([&](std::uint32_t a) {
    if (ok && !r.row_intersects(a, B)) ok = false;
  });
  return ok;
}
inline bool upper_extends(const Relation& r, const BitVec& A, const BitVec& B) {
  bool ok = true;
  B.for_each([&](std::uint32_t b) {
    if (!ok) return;
    bool found = false;
    A.for_each([&](std::uint32_t a) {
      if (!found && r.get(a, b)) found = true;
    });
    if (!found) ok = false;
  });
  return ok;
}

// ---------------------------------------------------------------------------
// Star operator on families
// ---------------------------------------------------------------------------

// U* is built inductively: {}* = {{}}; (U + A)* = {B ∪ C | B in U*, C an
// inhabited subset of A}. The result is canonical and independent of the
// enumeration order of U (property-tested).
inline FinFamily star(const FinFamily& U, std::uint64_t cap = kDefaultCap) {
  const CarrierPtr& c = U.carrier();
  std::vector<BitVec> acc{BitVec(c->size())};
  for (std::size_t i = 0; i < U.size(); ++i) {
    const BitVec& A = U.raw_members()[i];
    auto mem = A.members();
    if (mem.size() > 20)
      throw SizeCapExceeded(std::uint64_t{1} << mem.size(), cap,
                            "star: member too large");
    std::vector<BitVec> next;
    for (const auto& B : acc) {
      for (std::uint64_t sub = 1; sub < (std::uint64_t{1} << mem.size());
           ++sub) {
        BitVec u = B;
        for (std::size_t k = 0; k < mem.size(); ++k)
          if ((sub >> k) & 1u) u.set(mem[k]);
        next.push_back(std::move(u));
      }
    }
    std::sort(next.begin(), next.end(),
              [](const BitVec& a, const BitVec& b) { return a.numeric_less(b); });
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.size() > cap)
      throw SizeCapExceeded(next.size(), cap, "star: family too large");
    acc = std::move(next);
  }
  return FinFamily(c, std::move(acc));
}

// ---------------------------------------------------------------------------
// QuotientMap and poset reflection
// ---------------------------------------------------------------------------

class QuotientMap {
 public:
  QuotientMap() = default;

  // Explicit backing.
  QuotientMap(CarrierPtr base, CarrierPtr quotient,
              std::vector<std::uint32_t> class_of)
      : base_(std::move(base)),
        quotient_(std::move(quotient)),
        class_of_(std::move(class_of)) {}

  // Implicit backing: class_of computed on demand.
  QuotientMap(CarrierPtr base, CarrierPtr quotient,
              std::function<std::uint32_t(std::uint32_t)> fn)
      : base_(std::move(base)), quotient_(std::move(quotient)), fn_(std::move(fn)) {}

  const CarrierPtr& base() const { return base_; }
  const CarrierPtr& quotient() const { return quotient_; }
  std::uint32_t class_count() const { return quotient_->size(); }

  std::uint32_t class_of(std::uint32_t base_index) const {
    if (!class_of_.empty()) return class_of_[base_index];
    return fn_(base_index);
  }
  std::uint32_t representative(std::uint32_t cls) const {
    return quotient_->class_reps()[cls];
  }
  std::vector<std::uint32_t> members_of(std::uint32_t cls) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < base_->size(); ++i)
      if (class_of(i) == cls) out.push_back(i);
    return out;
  }

 private:
  CarrierPtr base_, quotient_;
  std::vector<std::uint32_t> class_of_;
  std::function<std::uint32_t(std::uint32_t)> fn_;
};

struct PosetReflection {
  Relation order;  // induced partial order on the quotient carrier
  QuotientMap map;
};

// Quotient a preorder by mutual comparability; representatives are the
// minimum-index members, classes are ordered by representative index.
inline PosetReflection poset_reflection(const Relation& pre) {
  if (!same_carrier(pre.src(), pre.dst()))
    throw CarrierMismatch("poset_reflection: endpoint carriers differ");
  const std::uint32_t n = pre.rows();
  for (std::uint32_t i = 0; i < n; ++i)
    if (!pre.get(i, i)) throw NotPreorder(i, i, "not reflexive");
  for (std::uint32_t a = 0; a < n; ++a)
    for (std::uint32_t b = 0; b < n; ++b)
      if (pre.get(a, b))
        for (std::uint32_t c = 0; c < n; ++c)
          if (pre.get(b, c) && !pre.get(a, c))
            throw NotPreorder(a, c, "not transitive");

  std::vector<std::uint32_t> class_of(n, 0);
  std::vector<std::uint32_t> reps;
  for (std::uint32_t i = 0; i < n; ++i) {
    bool found = false;
    for (std::uint32_t k = 0; k < reps.size() && !found; ++k) {
      std::uint32_t r = reps[k];
      if (pre.get(i, r) && pre.get(r, i)) {
        class_of[i] = k;
        found = true;
      }
    }
    if (!found) {
      class_of[i] = static_cast<std::uint32_t>(reps.size());
      reps.push_back(i);
    }
  }
  auto q = Carrier::make_quotient(pre.src(), reps);
  Relation ord(q, q);
  for (std::uint32_t i = 0; i < q->size(); ++i)
    for (std::uint32_t j = 0; j < q->size(); ++j)
      if (pre.get(reps[i], reps[j])) ord.set(i, j);
  if (!ord.is_antisymmetric())
    throw InternalCheckFailure("poset_reflection: induced order not antisymmetric");
  return PosetReflection{std::move(ord),
                         QuotientMap(pre.src(), q, std::move(class_of))};
}

// ---------------------------------------------------------------------------
// Down-set / up-set enumeration (order-theoretic utilities)
// ---------------------------------------------------------------------------

// All downward-closed subsets of a poset/preorder, sorted numerically.
// Throws SizeCapExceeded once more than `cap` distinct sets are found.
inline std::vector<BitVec> down_closed_sets(
    const Relation& le, std::size_t cap = std::numeric_limits<std::size_t>::max()) {
  if (!same_carrier(le.src(), le.dst()))
    throw CarrierMismatch("down_closed_sets: endpoint carriers differ");
  const std::uint32_t n = le.rows();
  std::vector<BitVec> down(n, BitVec(n));
  for (std::uint32_t x = 0; x < n; ++x)
    for (std::uint32_t y = 0; y < n; ++y)
      if (le.get(y, x)) down[x].set(y);
  std::vector<BitVec> out;
  std::unordered_map<BitVec, bool, BitVecHash> seen;
  std::vector<BitVec> stack{BitVec(n)};
  seen[stack.back()] = true;
  while (!stack.empty()) {
    BitVec m = std::move(stack.back());
    stack.pop_back();
    out.push_back(m);
    if (out.size() > cap)
      throw SizeCapExceeded(out.size(), cap, "down_closed_sets");
    // Every down-closed set is a union of principal down-sets, and unions of
    // down-closed sets are down-closed, so adjoining down[x] for each missing
    // x reaches exactly the down-closed sets (cycles included).
    for (std::uint32_t x = 0; x < n; ++x) {
      if (m.get(x)) continue;
      BitVec nm = m;
      nm |= down[x];
      nm.set(x);
      if (!seen.count(nm)) {
        seen[nm] = true;
        stack.push_back(nm);
      }
    }
  }
  std::sort(out.begin(), out.end(),
            [](const BitVec& a, const BitVec& b) { return a.numeric_less(b); });
  return out;
}

inline std::vector<BitVec> up_closed_sets(
    const Relation& le, std::size_t cap = std::numeric_limits<std::size_t>::max()) {
  return down_closed_sets(converse(le), cap);
}

// Downward closure of a subset under le.
inline BitVec down_closure(const Relation& le, const BitVec& A) {
  BitVec out(le.rows());
  A.for_each([&](std::uint32_t x) {
    for (std::uint32_t y = 0; y < le.rows(); ++y)
      if (le.get(y, x)) out.set(y);
  });
  return out;
}
inline BitVec up_closure(const Relation& le, const BitVec& A) {
  BitVec out(le.rows());
  A.for_each([&](std::uint32_t x) {
    for (std::uint32_t y = 0; y < le.rows(); ++y)
      if (le.get(x, y)) out.set(y);
  });
  return out;
}

}  // namespace latkit
