#include "dialectid/mapping.h"

#include <algorithm>
#include <istream>
#include <ostream>

#include "dialectid/error.h"
#include "dialectid/text.h"

namespace dialectid {

void CorpusStats::add(const GeoDocument& doc) {
  counts[{doc.country, doc.reg}] += doc.word_count;
}

void CorpusStats::merge(const CorpusStats& other) {
  for (const auto& [key, n] : other.counts) counts[key] += n;
}

std::uint64_t CorpusStats::words(const std::string& country, Register reg) const {
  const auto it = counts.find({country, reg});
  return it == counts.end() ? 0 : it->second;
}

CorpusStats tabulate(std::span<const GeoDocument> docs) {
  CorpusStats stats;
  for (const auto& d : docs) stats.add(d);
  return stats;
}

bool VarietyInventory::contains(const std::string& country) const {
  return std::binary_search(varieties.begin(), varieties.end(), country);
}

VarietyInventory select_inventory(const CorpusStats& stats,
                                  std::uint64_t threshold) {
  VarietyInventory inv;
  inv.threshold = threshold;
  for (const auto& [key, n] : stats.counts) {
    const auto& country = key.first;
    if (!inv.varieties.empty() && inv.varieties.back() == country) continue;
    if (stats.words(country, Register::kWeb) >= threshold &&
        stats.words(country, Register::kSocial) >= threshold) {
      inv.varieties.push_back(country);
    }
  }
  // std::map iteration is already ordered by country.
  return inv;
}

void write_stats_csv(std::ostream& out, const CorpusStats& stats) {
  out << "country,register,words\n";
  for (const auto& [key, n] : stats.counts) {
    out << csv_escape(key.first) << ',' << register_name(key.second) << ','
        << n << '\n';
  }
}

CorpusStats read_stats_csv(std::istream& in) {
  CorpusStats stats;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_row(line);
    if (f.size() != 3) throw ParseError(lineno, "expected 'country,register,words'");
    try {
      stats.counts[{f[0], parse_register(f[1])}] += std::stoull(f[2]);
    } catch (const Error&) {
      throw ParseError(lineno, "bad register '" + f[1] + "'");
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad word count '" + f[2] + "'");
    }
  }
  return stats;
}

void write_inventory(std::ostream& out, const VarietyInventory& inv) {
  for (const auto& v : inv.varieties) out << v << '\n';
}

VarietyInventory read_inventory(std::istream& in) {
  VarietyInventory inv;
  inv.threshold = 0;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    inv.varieties.push_back(t);
  }
  std::sort(inv.varieties.begin(), inv.varieties.end());
  inv.varieties.erase(std::unique(inv.varieties.begin(), inv.varieties.end()),
                      inv.varieties.end());
  return inv;
}

std::map<std::string, std::string> read_region_map(std::istream& in) {
  std::map<std::string, std::string> map;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_row(line);
    if (f.size() != 2) throw ParseError(lineno, "expected 'country,region'");
    map[f[0]] = f[1];
  }
  return map;
}

void write_region_csv(std::ostream& out, const CorpusStats& stats,
                      const std::map<std::string, std::string>& region_map) {
  std::map<std::pair<std::string, Register>, std::uint64_t> regions;
  for (const auto& [key, n] : stats.counts) {
    const auto it = region_map.find(key.first);
    const std::string region = it == region_map.end() ? "Other" : it->second;
    regions[{region, key.second}] += n;
  }
  out << "region,register,words\n";
  for (const auto& [key, n] : regions) {
    out << csv_escape(key.first) << ',' << register_name(key.second) << ','
        << n << '\n';
  }
}

}  // namespace dialectid
