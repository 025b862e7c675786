#ifndef DIALECTID_INGEST_H_
#define DIALECTID_INGEST_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dialectid {

enum class Register { kWeb, kSocial };

const char* register_name(Register r);  // "WEB" / "SOCIAL"
Register parse_register(std::string_view name);

struct Coordinates {
  double lat = 0.0;
  double lon = 0.0;
};

struct RawDocument {
  std::string source_id;
  Register reg = Register::kWeb;
  std::string text;
  std::optional<std::string> domain_suffix;  // WEB only
  std::optional<Coordinates> coordinates;    // SOCIAL only
  std::string month;                         // "YYYY-MM"
  std::optional<std::string> language;
};

struct GeoDocument : RawDocument {
  std::string country;  // ISO 3166 alpha-2, upper case
  std::size_t word_count = 0;
};

// ---------------------------------------------------------------------------
// Paragraph extraction

// Text inside <p> elements, one whitespace-normalized string per top-level
// paragraph, in document order. Script, style and comment content is
// skipped; nested <p> is treated literally (no implicit closing). Common
// character entities are decoded. Never throws.
std::vector<std::string> extract_paragraphs(std::string_view html);

// The paragraphs above joined by single spaces.
std::string extract_paragraph_text(std::string_view html);

// ---------------------------------------------------------------------------
// Geo-referencing

class TldTable {
 public:
  TldTable() = default;
  TldTable(std::unordered_map<std::string, std::string> suffix_to_country,
           std::unordered_set<std::string> exclusions);

  // CSV "suffix,country" with header; exclusions one suffix per line.
  static TldTable load(const std::string& table_path,
                       const std::string& exclusions_path);
  static TldTable parse(std::istream& table, std::istream* exclusions);

  // Country for a lowercase suffix without leading dot; absent for excluded,
  // generic or unknown suffixes.
  std::optional<std::string> georeference(std::string_view suffix) const;

  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
  std::unordered_set<std::string> exclusions_;
};

std::optional<std::string> tld_georeference(std::string_view suffix,
                                            const TldTable& table);

struct City {
  std::string name;
  std::string country;
  double lat = 0.0;
  double lon = 0.0;
};

inline constexpr double kEarthRadiusKm = 6371.0088;
inline constexpr double kDefaultCityRadiusKm = 50.0;

double haversine_km(double lat1, double lon1, double lat2, double lon2);

// Nearest-city lookup. Cities are sorted by (name, country) on construction;
// equal distances resolve to the smaller sorted index. Candidates are
// bucketed by latitude band, which is exact because great-circle distance
// is never smaller than the latitude arc.
class CityIndex {
 public:
  explicit CityIndex(std::vector<City> cities);

  // CSV "name,country,lat,lon" with a required header row.
  static CityIndex load(const std::string& path);
  static CityIndex parse(std::istream& in);

  // Index into cities() of the nearest city within radius_km.
  std::optional<std::size_t> nearest(const Coordinates& point,
                                     double radius_km) const;

  const std::vector<City>& cities() const { return cities_; }

 private:
  std::vector<City> cities_;
  double band_deg_ = 1.0;
  std::vector<std::vector<std::uint32_t>> bands_;
};

std::optional<std::string> city_georeference(
    const Coordinates& point, const CityIndex& cities,
    double radius_km = kDefaultCityRadiusKm);

// ---------------------------------------------------------------------------
// Boilerplate

// Case-insensitive ECMAScript patterns, one per line; '#' lines are comments.
// A paragraph matching any pattern is dropped.
class BoilerplateFilter {
 public:
  BoilerplateFilter() = default;
  explicit BoilerplateFilter(const std::vector<std::string>& patterns);
  static BoilerplateFilter load(const std::string& path);

  bool is_boilerplate(std::string_view paragraph) const;
  std::size_t size() const { return patterns_.size(); }

 private:
  std::vector<std::regex> patterns_;
};

// ---------------------------------------------------------------------------
// Record processing

struct WebRecord {
  std::string source_id;
  std::string domain_suffix;
  std::string month;
  std::string html;
  std::optional<std::string> language;
};

struct SocialRecord {
  std::string post_id;
  double lat = 0.0;
  double lon = 0.0;
  std::string month;
  std::string text;
  std::string language;
};

struct IngestOptions {
  std::size_t min_web_words = 40;
  std::size_t min_social_chars = 50;
  double city_radius_km = kDefaultCityRadiusKm;
  // Documents whose language differs are dropped. WEB records without a
  // language field are assumed to be in this language.
  std::string language = "en";
};

struct IngestCounters {
  std::size_t seen = 0;
  std::size_t too_short = 0;
  std::size_t wrong_language = 0;
  std::size_t not_georeferenced = 0;
  std::size_t malformed = 0;
  std::size_t kept = 0;
};

class Ingestor {
 public:
  Ingestor(TldTable tlds, const CityIndex* cities, BoilerplateFilter boilerplate,
           IngestOptions options);

  std::optional<GeoDocument> web(const WebRecord& record);
  std::optional<GeoDocument> social(const SocialRecord& record);

  const IngestCounters& counters() const { return counters_; }
  IngestCounters& counters() { return counters_; }

 private:
  TldTable tlds_;
  const CityIndex* cities_;
  BoilerplateFilter boilerplate_;
  IngestOptions options_;
  IngestCounters counters_;
};

// Both throw Error(kParse) on malformed JSON lines; missing fields likewise.
WebRecord parse_web_record(std::string_view line);
SocialRecord parse_social_record(std::string_view line);

// ---------------------------------------------------------------------------
// Deduplication

// Case-folded, whitespace-collapsed text used as the duplicate key.
std::string dedup_key(std::string_view text);

// Keeps the first occurrence of each normalized text per source_id and per
// month (one streaming pass), then per (country, language) over the
// survivors (second pass). Kept documents are returned unchanged and in
// input order.
std::vector<GeoDocument> deduplicate(std::vector<GeoDocument> docs);

// ---------------------------------------------------------------------------
// GeoDocument serialization: one JSON object per line.

std::string to_ndjson(const GeoDocument& doc);
GeoDocument geo_document_from_ndjson(std::string_view line);

void for_each_ndjson_line(std::istream& in,
                          const std::function<void(std::string_view, int)>& fn);

}  // namespace dialectid

#endif  // DIALECTID_INGEST_H_
