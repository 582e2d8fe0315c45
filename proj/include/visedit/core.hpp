#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "visedit/errors.hpp"

namespace visedit {

// One of the 17 mouth-shape equivalence classes. Values are 1-based so they
// line up with the conventional v01..v17 names.
class VisemeId {
 public:
  static constexpr int kCount = 17;

  constexpr explicit VisemeId(int value) : value_(value) {}

  constexpr int value() const { return value_; }
  // 0-based, for array indexing.
  constexpr int index() const { return value_ - 1; }
  // "v01".."v17"
  std::string name() const;

  constexpr bool operator==(const VisemeId&) const = default;
  constexpr auto operator<=>(const VisemeId&) const = default;

 private:
  int value_;
};

// An interned ARPABET phone code (stress digit included) or the silence
// marker "sp". Construction validates against the fixed inventory; after
// that, comparisons and viseme lookups are integer operations.
class PhoneLabel {
 public:
  // Throws UnknownPhoneme if `code` is not in the inventory. Matching is
  // case-insensitive; the canonical spelling is upper-case except "sp".
  explicit PhoneLabel(std::string_view code);

  // Canonical spelling.
  const std::string& text() const;
  VisemeId viseme() const;
  bool is_silence() const;
  // Index into the inventory, stable across runs.
  int id() const { return id_; }
  // Collapses stress digits: AA0/AA1/AA2 share a base, consonants are their
  // own base.
  int base_id() const;

  bool operator==(const PhoneLabel&) const = default;
  auto operator<=>(const PhoneLabel&) const = default;

 private:
  std::uint8_t id_;
};

// Number of codes in the inventory (17 viseme groups).
std::size_t phone_inventory_size();
// Canonical code spellings in inventory order.
std::span<const std::string_view> phone_inventory();

// Viseme for a raw code string; throws UnknownPhoneme.
VisemeId viseme_of(std::string_view code);
VisemeId viseme_of(const PhoneLabel& label);

// A labeled interval of speech. Times are seconds; t_out must exceed t_in
// (zero-duration phones are rejected when documents are ingested).
struct Phone {
  PhoneLabel label;
  double t_in = 0.0;
  double t_out = 0.0;

  double duration() const { return t_out - t_in; }

  bool operator==(const Phone&) const = default;
};

// Monotone, non-overlapping run of phones. Gaps are allowed; overlaps and
// non-positive durations are not.
class PhoneSequence {
 public:
  PhoneSequence() = default;

  // Validates ordering; throws OverlapError on overlap or regression,
  // ParseError on a non-positive duration.
  static PhoneSequence from_phones(std::vector<Phone> phones);

  const std::vector<Phone>& phones() const { return phones_; }
  std::size_t size() const { return phones_.size(); }
  bool empty() const { return phones_.empty(); }
  const Phone& operator[](std::size_t i) const { return phones_[i]; }

  // Sum of phone durations (gaps excluded).
  double total_duration() const;
  // Copy of phones [begin, end), original timestamps kept.
  PhoneSequence slice(std::size_t begin, std::size_t end) const;

  bool operator==(const PhoneSequence&) const = default;

 private:
  std::vector<Phone> phones_;
};

// Knobs for the matching cost. Defaults are the working configuration; the
// two small weights keep ties broken without drowning the viseme term.
struct CostParams {
  double c_insert = 1.0;
  double c_delete = 1.0;
  // Weight on duration mismatch inside a swap.
  double chi = 1e-4;
  // Per-segment length penalty weight (divided by segment phone count).
  double phi = 1e-3;
  // Treat AA0/AA1/AA2 etc. as the same phoneme when scoring swaps.
  bool stress_insensitive = false;

  // Throws ParseError if any weight is negative or a cost is non-positive.
  void validate() const;
};

// 0 for the identical phoneme, 0.5 for distinct phonemes sharing a viseme,
// 1 otherwise. With stress_insensitive, labels differing only in stress
// digit count as the identical phoneme.
double viseme_distance(const PhoneLabel& a, const PhoneLabel& b,
                       bool stress_insensitive = false);

// Duration-weighted substitution cost:
//   viseme_distance * (|p| + |q|) + chi * ||p| - |q||
// so confusable long phones still cost something to exchange and near-equal
// durations are preferred among equal visemes.
double swap_cost(const Phone& p, const Phone& q, const CostParams& params);

}  // namespace visedit
