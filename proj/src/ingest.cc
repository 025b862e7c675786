#include "dialectid/ingest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <utility>

#include "dialectid/error.h"
#include "dialectid/text.h"
#include "json.hpp"

namespace dialectid {

using nlohmann::json;

const char* register_name(Register r) {
  return r == Register::kWeb ? "WEB" : "SOCIAL";
}

Register parse_register(std::string_view name) {
  if (name == "WEB" || name == "web" || name == "CC") return Register::kWeb;
  if (name == "SOCIAL" || name == "social" || name == "TW") {
    return Register::kSocial;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown register '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Paragraph extraction

namespace {

bool is_alpha(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_alnum(char c) { return is_alpha(c) || (c >= '0' && c <= '9'); }

void append_utf8(std::string& out, std::uint32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    cp = 0xFFFD;
  }
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Decodes the entity starting at html[i] == '&'. Returns the number of bytes
// consumed, or 0 when the text is not a recognized entity.
std::size_t decode_entity(std::string_view html, std::size_t i,
                          std::string& out) {
  const std::size_t semi = html.find(';', i);
  if (semi == std::string_view::npos || semi - i > 10) return 0;
  const std::string_view body = html.substr(i + 1, semi - i - 1);
  if (body.empty()) return 0;
  if (body[0] == '#') {
    std::uint32_t cp = 0;
    const bool hex = body.size() > 1 && (body[1] == 'x' || body[1] == 'X');
    const std::string_view digits = body.substr(hex ? 2 : 1);
    if (digits.empty()) return 0;
    for (char c : digits) {
      int d;
      if (c >= '0' && c <= '9') {
        d = c - '0';
      } else if (hex && c >= 'a' && c <= 'f') {
        d = c - 'a' + 10;
      } else if (hex && c >= 'A' && c <= 'F') {
        d = c - 'A' + 10;
      } else {
        return 0;
      }
      cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
      if (cp > 0x10FFFF) cp = 0x110000;
    }
    append_utf8(out, cp);
    return semi - i + 1;
  }
  static const std::pair<std::string_view, std::string_view> kNamed[] = {
      {"amp", "&"},  {"lt", "<"},   {"gt", ">"},
      {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
  };
  for (const auto& [name, text] : kNamed) {
    if (body == name) {
      out.append(text);
      return semi - i + 1;
    }
  }
  return 0;
}

std::size_t find_ci(std::string_view hay, std::string_view needle,
                    std::size_t from) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size(); ++k) {
      char c = hay[i + k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c != needle[k]) {
        ok = false;
        break;
      }
    }
    if (ok) return i;
  }
  return std::string_view::npos;
}

// End of a tag starting at '<', honoring quoted attribute values. Returns
// npos when the tag never closes.
std::size_t tag_end(std::string_view html, std::size_t i) {
  char quote = 0;
  for (std::size_t k = i + 1; k < html.size(); ++k) {
    const char c = html[k];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '>') {
      return k;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::vector<std::string> extract_paragraphs(std::string_view html) {
  std::vector<std::string> paragraphs;
  std::string current;
  int depth = 0;
  auto flush = [&] {
    std::string p = normalize_whitespace(current);
    if (!p.empty()) paragraphs.push_back(std::move(p));
    current.clear();
  };

  std::size_t i = 0;
  while (i < html.size()) {
    const char c = html[i];
    if (c == '&') {
      if (depth > 0) {
        const std::size_t used = decode_entity(html, i, current);
        if (used > 0) {
          i += used;
          continue;
        }
        current.push_back('&');
      }
      ++i;
      continue;
    }
    if (c != '<') {
      if (depth > 0) current.push_back(c);
      ++i;
      continue;
    }

    // Markup.
    if (html.substr(i, 4) == "<!--") {
      const std::size_t end = html.find("-->", i + 4);
      if (end == std::string_view::npos) break;
      i = end + 3;
      continue;
    }
    const bool closing = i + 1 < html.size() && html[i + 1] == '/';
    const std::size_t name_start = i + (closing ? 2 : 1);
    const bool declaration = !closing && i + 1 < html.size() &&
                             (html[i + 1] == '!' || html[i + 1] == '?');
    if (!declaration &&
        (name_start >= html.size() || !is_alpha(html[name_start]))) {
      // A bare '<' is text.
      if (depth > 0) current.push_back('<');
      ++i;
      continue;
    }
    const std::size_t end = tag_end(html, i);
    if (end == std::string_view::npos) break;
    if (declaration) {
      i = end + 1;
      continue;
    }
    std::size_t name_end = name_start;
    while (name_end < end && is_alnum(html[name_end])) ++name_end;
    const std::string name =
        casefold(html.substr(name_start, name_end - name_start));
    const bool self_closing = end > i && html[end - 1] == '/';
    i = end + 1;

    if (!closing && (name == "script" || name == "style")) {
      if (self_closing) continue;
      const std::size_t close = find_ci(html, "</" + name, i);
      if (close == std::string_view::npos) break;
      const std::size_t close_end = tag_end(html, close);
      if (close_end == std::string_view::npos) break;
      i = close_end + 1;
      continue;
    }
    if (name == "p") {
      if (self_closing) continue;
      if (!closing) {
        if (depth > 0) current.push_back(' ');
        ++depth;
      } else if (depth > 0) {
        --depth;
        if (depth == 0) {
          flush();
        } else {
          current.push_back(' ');
        }
      }
      continue;
    }
    if (depth > 0 && name == "br") current.push_back(' ');
  }
  if (depth > 0) flush();
  return paragraphs;
}

std::string extract_paragraph_text(std::string_view html) {
  return join(extract_paragraphs(html), " ");
}

// ---------------------------------------------------------------------------
// TLD table

TldTable::TldTable(std::unordered_map<std::string, std::string> suffix_to_country,
                   std::unordered_set<std::string> exclusions)
    : table_(std::move(suffix_to_country)), exclusions_(std::move(exclusions)) {}

TldTable TldTable::parse(std::istream& table, std::istream* exclusions) {
  std::unordered_map<std::string, std::string> map;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(table, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_csv_row(t);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(lineno, "expected 'suffix,country'");
    }
    std::string suffix = casefold(fields[0]);
    if (suffix[0] == '.') suffix.erase(0, 1);
    std::string country = fields[1];
    for (char& ch : country) {
      if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
    }
    map[suffix] = country;
  }
  std::unordered_set<std::string> excl;
  if (exclusions != nullptr) {
    while (std::getline(*exclusions, line)) {
      std::string t = casefold(trim(line));
      if (t.empty() || t[0] == '#') continue;
      if (t[0] == '.') t.erase(0, 1);
      excl.insert(t);
    }
  }
  return TldTable(std::move(map), std::move(excl));
}

TldTable TldTable::load(const std::string& table_path,
                        const std::string& exclusions_path) {
  std::ifstream table(table_path);
  if (!table) throw Error(ErrorCode::kIo, "cannot open " + table_path);
  if (exclusions_path.empty()) return parse(table, nullptr);
  std::ifstream excl(exclusions_path);
  if (!excl) throw Error(ErrorCode::kIo, "cannot open " + exclusions_path);
  return parse(table, &excl);
}

std::optional<std::string> TldTable::georeference(std::string_view suffix) const {
  const std::string key(suffix);
  if (exclusions_.count(key)) return std::nullopt;
  const auto it = table_.find(key);
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> tld_georeference(std::string_view suffix,
                                            const TldTable& table) {
  return table.georeference(suffix);
}

// ---------------------------------------------------------------------------
// Cities

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kRad = 3.14159265358979323846 / 180.0;
  const double dlat = (lat2 - lat1) * kRad;
  const double dlon = (lon2 - lon1) * kRad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kRad) * std::cos(lat2 * kRad) *
                       std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace {

std::size_t band_of(double lat, double band_deg, std::size_t nbands) {
  const double b = std::floor((lat + 90.0) / band_deg);
  if (b < 0) return 0;
  return std::min(static_cast<std::size_t>(b), nbands - 1);
}

}  // namespace

CityIndex::CityIndex(std::vector<City> cities) : cities_(std::move(cities)) {
  for (const City& c : cities_) {
    if (!(c.lat >= -90.0 && c.lat <= 90.0) ||
        !(c.lon >= -180.0 && c.lon <= 180.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "city '" + c.name + "' has out-of-range coordinates");
    }
  }
  std::stable_sort(cities_.begin(), cities_.end(),
                   [](const City& a, const City& b) {
                     if (a.name != b.name) return a.name < b.name;
                     return a.country < b.country;
                   });
  const std::size_t nbands = static_cast<std::size_t>(180.0 / band_deg_);
  bands_.assign(nbands, {});
  for (std::size_t i = 0; i < cities_.size(); ++i) {
    bands_[band_of(cities_[i].lat, band_deg_, nbands)].push_back(
        static_cast<std::uint32_t>(i));
  }
}

CityIndex CityIndex::parse(std::istream& in) {
  std::vector<City> cities;
  std::string line;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto fields = split_csv_row(t);
    if (header) {
      if (fields.size() < 4 || casefold(fields[0]) != "name") {
        throw ParseError(lineno, "cities file needs header 'name,country,lat,lon'");
      }
      header = false;
      continue;
    }
    if (fields.size() != 4) {
      throw ParseError(lineno, "expected 'name,country,lat,lon'");
    }
    City c;
    c.name = fields[0];
    c.country = fields[1];
    try {
      c.lat = std::stod(fields[2]);
      c.lon = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw ParseError(lineno, "bad coordinate");
    }
    cities.push_back(std::move(c));
  }
  if (header) throw ParseError(lineno, "cities file is missing its header");
  return CityIndex(std::move(cities));
}

CityIndex CityIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return parse(in);
}

std::optional<std::size_t> CityIndex::nearest(const Coordinates& point,
                                              double radius_km) const {
  if (cities_.empty()) return std::nullopt;
  const std::size_t nbands = bands_.size();
  const double reach_deg = radius_km / kEarthRadiusKm * 180.0 /
                               3.14159265358979323846 +
                           1e-9;
  const std::size_t lo = band_of(point.lat - reach_deg, band_deg_, nbands);
  const std::size_t hi = band_of(point.lat + reach_deg, band_deg_, nbands);
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t b = lo; b <= hi; ++b) {
    for (std::uint32_t idx : bands_[b]) {
      const City& c = cities_[idx];
      const double d = haversine_km(point.lat, point.lon, c.lat, c.lon);
      if (d > radius_km) continue;
      if (!best || d < best_d || (d == best_d && idx < *best)) {
        best = idx;
        best_d = d;
      }
    }
  }
  return best;
}

std::optional<std::string> city_georeference(const Coordinates& point,
                                             const CityIndex& cities,
                                             double radius_km) {
  const auto idx = cities.nearest(point, radius_km);
  if (!idx) return std::nullopt;
  return cities.cities()[*idx].country;
}

// ---------------------------------------------------------------------------
// Boilerplate

BoilerplateFilter::BoilerplateFilter(const std::vector<std::string>& patterns) {
  for (const auto& p : patterns) {
    try {
      patterns_.emplace_back(p, std::regex::ECMAScript | std::regex::icase |
                                    std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::kParse,
                  "bad boilerplate pattern '" + p + "': " + e.what());
    }
  }
}

BoilerplateFilter BoilerplateFilter::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    patterns.push_back(t);
  }
  return BoilerplateFilter(patterns);
}

bool BoilerplateFilter::is_boilerplate(std::string_view paragraph) const {
  for (const auto& re : patterns_) {
    if (std::regex_search(paragraph.begin(), paragraph.end(), re)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Record processing

Ingestor::Ingestor(TldTable tlds, const CityIndex* cities,
                   BoilerplateFilter boilerplate, IngestOptions options)
    : tlds_(std::move(tlds)),
      cities_(cities),
      boilerplate_(std::move(boilerplate)),
      options_(std::move(options)) {}

std::optional<GeoDocument> Ingestor::web(const WebRecord& record) {
  ++counters_.seen;
  const auto country = tlds_.georeference(casefold(record.domain_suffix));
  if (!country) {
    ++counters_.not_georeferenced;
    return std::nullopt;
  }
  std::vector<std::string> kept;
  for (auto& p : extract_paragraphs(record.html)) {
    if (!boilerplate_.is_boilerplate(p)) kept.push_back(std::move(p));
  }
  std::string text = join(kept, " ");
  const std::size_t words = count_words(text);
  if (words < options_.min_web_words) {
    ++counters_.too_short;
    return std::nullopt;
  }
  const std::string language = record.language.value_or(options_.language);
  if (!options_.language.empty() && language != options_.language) {
    ++counters_.wrong_language;
    return std::nullopt;
  }
  GeoDocument doc;
  doc.source_id = record.source_id;
  doc.reg = Register::kWeb;
  doc.text = std::move(text);
  doc.domain_suffix = casefold(record.domain_suffix);
  doc.month = record.month;
  doc.language = language;
  doc.country = *country;
  doc.word_count = words;
  ++counters_.kept;
  return doc;
}

std::optional<GeoDocument> Ingestor::social(const SocialRecord& record) {
  ++counters_.seen;
  std::string text = normalize_whitespace(record.text);
  // The length gate precedes the language check.
  if (utf8_length(text) < options_.min_social_chars) {
    ++counters_.too_short;
    return std::nullopt;
  }
  if (!options_.language.empty() && record.language != options_.language) {
    ++counters_.wrong_language;
    return std::nullopt;
  }
  if (cities_ == nullptr) {
    ++counters_.not_georeferenced;
    return std::nullopt;
  }
  const Coordinates point{record.lat, record.lon};
  if (!(point.lat >= -90 && point.lat <= 90 && point.lon >= -180 &&
        point.lon <= 180)) {
    ++counters_.malformed;
    return std::nullopt;
  }
  auto country = city_georeference(point, *cities_, options_.city_radius_km);
  if (!country) {
    ++counters_.not_georeferenced;
    return std::nullopt;
  }
  GeoDocument doc;
  doc.source_id = record.post_id;
  doc.reg = Register::kSocial;
  doc.word_count = count_words(text);
  doc.text = std::move(text);
  doc.coordinates = point;
  doc.month = record.month;
  doc.language = record.language;
  doc.country = std::move(*country);
  ++counters_.kept;
  return doc;
}

namespace {

json parse_json_line(std::string_view line) {
  try {
    return json::parse(line.begin(), line.end());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad JSON record: ") + e.what());
  }
}

template <typename T>
T required(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw Error(ErrorCode::kParse, std::string("record is missing '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kParse, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

WebRecord parse_web_record(std::string_view line) {
  const json j = parse_json_line(line);
  WebRecord r;
  r.source_id = required<std::string>(j, "source_id");
  r.domain_suffix = required<std::string>(j, "domain_suffix");
  r.month = required<std::string>(j, "month");
  r.html = required<std::string>(j, "html");
  if (j.contains("language") && j["language"].is_string()) {
    r.language = j["language"].get<std::string>();
  }
  return r;
}

SocialRecord parse_social_record(std::string_view line) {
  const json j = parse_json_line(line);
  SocialRecord r;
  r.post_id = required<std::string>(j, "post_id");
  r.lat = required<double>(j, "lat");
  r.lon = required<double>(j, "lon");
  r.month = required<std::string>(j, "month");
  r.text = required<std::string>(j, "text");
  r.language = required<std::string>(j, "language");
  return r;
}

// ---------------------------------------------------------------------------
// Deduplication

std::string dedup_key(std::string_view text) {
  return normalize_whitespace(casefold(text));
}

std::vector<GeoDocument> deduplicate(std::vector<GeoDocument> docs) {
  struct ScopedKey {
    std::string scope;
    Hash128 hash;
    bool operator==(const ScopedKey&) const = default;
  };
  struct ScopedKeyHasher {
    std::size_t operator()(const ScopedKey& k) const {
      return std::hash<std::string>()(k.scope) ^ Hash128Hasher()(k.hash);
    }
  };

  std::vector<Hash128> hashes;
  hashes.reserve(docs.size());
  for (const auto& d : docs) hashes.push_back(fnv1a128(dedup_key(d.text)));

  // Pass 1: same site, same month. Every occurrence registers its keys.
  std::unordered_set<ScopedKey, ScopedKeyHasher> site_seen;
  std::unordered_set<ScopedKey, ScopedKeyHasher> month_seen;
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const bool new_site = site_seen.insert({docs[i].source_id, hashes[i]}).second;
    const bool new_month = month_seen.insert({docs[i].month, hashes[i]}).second;
    if (new_site && new_month) survivors.push_back(i);
  }

  // Pass 2: same (country, language) across the surviving corpus.
  std::unordered_set<ScopedKey, ScopedKeyHasher> country_seen;
  std::vector<GeoDocument> out;
  out.reserve(survivors.size());
  for (std::size_t i : survivors) {
    std::string scope = docs[i].country;
    scope.push_back('\x1f');
    scope.append(docs[i].language.value_or(""));
    if (country_seen.insert({std::move(scope), hashes[i]}).second) {
      out.push_back(std::move(docs[i]));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

std::string to_ndjson(const GeoDocument& doc) {
  // nlohmann::ordered_json keeps the field order stable in the output.
  nlohmann::ordered_json j;
  j["source_id"] = doc.source_id;
  j["register"] = register_name(doc.reg);
  j["country"] = doc.country;
  j["month"] = doc.month;
  if (doc.language) j["language"] = *doc.language;
  if (doc.domain_suffix) j["domain_suffix"] = *doc.domain_suffix;
  if (doc.coordinates) {
    j["lat"] = doc.coordinates->lat;
    j["lon"] = doc.coordinates->lon;
  }
  j["word_count"] = doc.word_count;
  j["text"] = doc.text;
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

GeoDocument geo_document_from_ndjson(std::string_view line) {
  const json j = parse_json_line(line);
  GeoDocument d;
  d.source_id = required<std::string>(j, "source_id");
  d.reg = parse_register(required<std::string>(j, "register"));
  d.country = required<std::string>(j, "country");
  d.month = j.value("month", std::string());
  if (j.contains("language") && j["language"].is_string()) {
    d.language = j["language"].get<std::string>();
  }
  if (j.contains("domain_suffix") && j["domain_suffix"].is_string()) {
    d.domain_suffix = j["domain_suffix"].get<std::string>();
  }
  if (j.contains("lat") && j.contains("lon")) {
    d.coordinates = Coordinates{j["lat"].get<double>(), j["lon"].get<double>()};
  }
  d.text = required<std::string>(j, "text");
  d.word_count = j.contains("word_count") ? j["word_count"].get<std::size_t>()
                                          : count_words(d.text);
  return d;
}

void for_each_ndjson_line(std::istream& in,
                          const std::function<void(std::string_view, int)>& fn) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    fn(line, lineno);
  }
}

}  // namespace dialectid
