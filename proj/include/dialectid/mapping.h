#ifndef DIALECTID_MAPPING_H_
#define DIALECTID_MAPPING_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dialectid/ingest.h"

namespace dialectid {

inline constexpr std::uint64_t kDefaultInventoryThreshold = 15'000'000;

// Word totals per (country, register).
struct CorpusStats {
  std::map<std::pair<std::string, Register>, std::uint64_t> counts;

  void add(const GeoDocument& doc);
  // Associative and commutative, so partial tabulations can be combined in
  // any order.
  void merge(const CorpusStats& other);
  std::uint64_t words(const std::string& country, Register reg) const;

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

CorpusStats tabulate(std::span<const GeoDocument> docs);

struct VarietyInventory {
  std::vector<std::string> varieties;  // sorted
  std::uint64_t threshold = kDefaultInventoryThreshold;

  bool contains(const std::string& country) const;
};

// Countries at or above threshold in both WEB and SOCIAL.
VarietyInventory select_inventory(
    const CorpusStats& stats,
    std::uint64_t threshold = kDefaultInventoryThreshold);

// "country,register,words", sorted by country then register.
void write_stats_csv(std::ostream& out, const CorpusStats& stats);
CorpusStats read_stats_csv(std::istream& in);

void write_inventory(std::ostream& out, const VarietyInventory& inv);
VarietyInventory read_inventory(std::istream& in);

// Country -> region name, from CSV "country,region" with header.
std::map<std::string, std::string> read_region_map(std::istream& in);

// Reporting view: totals grouped by region ("region,register,words").
// Countries missing from the map are grouped under "Other".
void write_region_csv(std::ostream& out, const CorpusStats& stats,
                      const std::map<std::string, std::string>& region_map);

}  // namespace dialectid

#endif  // DIALECTID_MAPPING_H_
