#include "visedit/core.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <unordered_map>

namespace visedit {
namespace {

struct InventoryEntry {
  std::string_view code;
  int viseme;
};

// The phone inventory, grouped by viseme. ARPABET vowels carry their stress
// digit (0 none, 1 primary, 2 secondary); "sp" is the silence marker and
// gets a group of its own. Every vowel family sits in a single group, so
// stress variants always share a viseme.
constexpr std::array<InventoryEntry, 70> kInventory = {{
    {"AA0", 1},  {"AA1", 1},  {"AA2", 1},
    {"AH0", 2},  {"AH1", 2},  {"AH2", 2},  {"HH", 2},
    {"AO0", 3},  {"AO1", 3},  {"AO2", 3},
    {"AW0", 4},  {"AW1", 4},  {"AW2", 4},  {"OW0", 4}, {"OW1", 4}, {"OW2", 4},
    {"OY0", 5},  {"OY1", 5},  {"OY2", 5},  {"UH0", 5}, {"UH1", 5}, {"UH2", 5},
    {"UW0", 5},  {"UW1", 5},  {"UW2", 5},
    {"EH0", 6},  {"EH1", 6},  {"EH2", 6},  {"AE0", 6}, {"AE1", 6}, {"AE2", 6},
    {"IH0", 7},  {"IH1", 7},  {"IH2", 7},  {"AY0", 7}, {"AY1", 7}, {"AY2", 7},
    {"EY0", 8},  {"EY1", 8},  {"EY2", 8},
    {"Y", 9},    {"IY0", 9},  {"IY1", 9},  {"IY2", 9},
    {"R", 10},   {"ER0", 10}, {"ER1", 10}, {"ER2", 10},
    {"L", 11},
    {"W", 12},
    {"M", 13},   {"P", 13},   {"B", 13},
    {"N", 14},   {"NG", 14},  {"DH", 14},  {"D", 14},  {"G", 14},  {"T", 14},
    {"Z", 14},   {"ZH", 14},  {"TH", 14},  {"K", 14},  {"S", 14},
    {"CH", 15},  {"JH", 15},  {"SH", 15},
    {"F", 16},   {"V", 16},
    {"sp", 17},
}};

struct Tables {
  std::array<std::string, kInventory.size()> canonical;
  std::array<std::string_view, kInventory.size()> canonical_views;
  std::array<int, kInventory.size()> viseme;
  std::array<int, kInventory.size()> base;
  std::unordered_map<std::string, int> by_code;
};

Tables build_tables() {
  Tables t;
  std::unordered_map<std::string, int> base_ids;
  for (std::size_t i = 0; i < kInventory.size(); ++i) {
    const auto& e = kInventory[i];
    t.canonical[i] = std::string(e.code);
    t.canonical_views[i] = t.canonical[i];
    t.viseme[i] = e.viseme;
    std::string base(e.code);
    if (std::isdigit(static_cast<unsigned char>(base.back()))) base.pop_back();
    t.base[i] = base_ids.emplace(base, static_cast<int>(base_ids.size()))
                    .first->second;
    t.by_code.emplace(t.canonical[i], static_cast<int>(i));
  }
  return t;
}

const Tables& tables() {
  static const Tables t = build_tables();
  return t;
}

std::string normalize_code(std::string_view code) {
  std::string up;
  up.reserve(code.size());
  for (char c : code) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "SP") return "sp";
  return up;
}

}  // namespace

std::string VisemeId::name() const {
  char buf[8];
  std::snprintf(buf, sizeof buf, "v%02d", value_);
  return buf;
}

PhoneLabel::PhoneLabel(std::string_view code) {
  const auto& t = tables();
  auto it = t.by_code.find(normalize_code(code));
  if (it == t.by_code.end()) {
    throw UnknownPhoneme("unknown phone code '" + std::string(code) + "'");
  }
  id_ = static_cast<std::uint8_t>(it->second);
}

const std::string& PhoneLabel::text() const { return tables().canonical[id_]; }

VisemeId PhoneLabel::viseme() const { return VisemeId(tables().viseme[id_]); }

bool PhoneLabel::is_silence() const { return viseme() == VisemeId(17); }

int PhoneLabel::base_id() const { return tables().base[id_]; }

std::size_t phone_inventory_size() { return kInventory.size(); }

std::span<const std::string_view> phone_inventory() {
  return tables().canonical_views;
}

VisemeId viseme_of(std::string_view code) { return PhoneLabel(code).viseme(); }

VisemeId viseme_of(const PhoneLabel& label) { return label.viseme(); }

PhoneSequence PhoneSequence::from_phones(std::vector<Phone> phones) {
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (!(phones[i].t_out > phones[i].t_in)) {
      throw ParseError("phone " + std::to_string(i) + " ('" +
                       phones[i].label.text() + "') has non-positive duration");
    }
    if (i > 0 && phones[i].t_in < phones[i - 1].t_out) {
      throw OverlapError("phone " + std::to_string(i) + " ('" +
                         phones[i].label.text() +
                         "') starts before the previous phone ends");
    }
  }
  PhoneSequence seq;
  seq.phones_ = std::move(phones);
  return seq;
}

double PhoneSequence::total_duration() const {
  double sum = 0.0;
  for (const Phone& p : phones_) sum += p.duration();
  return sum;
}

PhoneSequence PhoneSequence::slice(std::size_t begin, std::size_t end) const {
  PhoneSequence seq;
  seq.phones_.assign(phones_.begin() + begin, phones_.begin() + end);
  return seq;
}

void CostParams::validate() const {
  if (!(c_insert > 0.0) || !(c_delete > 0.0)) {
    throw ParseError("insert/delete costs must be positive");
  }
  if (chi < 0.0 || phi < 0.0) {
    throw ParseError("chi and phi must be non-negative");
  }
}

double viseme_distance(const PhoneLabel& a, const PhoneLabel& b,
                       bool stress_insensitive) {
  if (a == b) return 0.0;
  if (stress_insensitive && a.base_id() == b.base_id()) return 0.0;
  if (a.viseme() == b.viseme()) return 0.5;
  return 1.0;
}

double swap_cost(const Phone& p, const Phone& q, const CostParams& params) {
  const double dp = p.duration();
  const double dq = q.duration();
  return viseme_distance(p.label, q.label, params.stress_insensitive) *
             (dp + dq) +
         params.chi * std::abs(dp - dq);
}

}  // namespace visedit
