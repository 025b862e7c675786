#include "dialectid/ingest.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "dialectid/error.h"
#include "dialectid/random.h"
#include "dialectid/text.h"

namespace dialectid {
namespace {

// ---------------------------------------------------------------------------
// Paragraph extraction against a tree-walking oracle. Random documents are
// built as trees, rendered to HTML, and the expected paragraphs are read off
// the tree directly.

struct Node {
  enum Kind { kText, kElement, kComment } kind = kText;
  std::string tag;   // element name, lower case
  std::string raw;   // text as rendered (may hold entities)
  std::string text;  // decoded text
  std::vector<std::unique_ptr<Node>> children;
};

const char* kWords[] = {"alpha", "beta", "gamma", "delta", "eps", "zeta", "eta"};

std::unique_ptr<Node> random_text(Rng& rng) {
  auto n = std::make_unique<Node>();
  n->kind = Node::kText;
  const int parts = 1 + static_cast<int>(rng.below(4));
  for (int i = 0; i < parts; ++i) {
    switch (rng.below(8)) {
      case 0: n->raw += "&amp;"; n->text += "&"; break;
      case 1: n->raw += "&lt;"; n->text += "<"; break;
      case 2: n->raw += "&#65;"; n->text += "A"; break;
      case 3: n->raw += "&#x263A;"; n->text += "\xE2\x98\xBA"; break;
      case 4: n->raw += "\n\t"; n->text += " "; break;
      default: {
        const std::string w = kWords[rng.below(7)];
        n->raw += w;
        n->text += w;
      }
    }
    n->raw += " ";
    n->text += " ";
  }
  return n;
}

std::unique_ptr<Node> random_tree(Rng& rng, int depth) {
  if (depth == 0 || rng.below(3) == 0) {
    if (rng.below(10) == 0) {
      auto c = std::make_unique<Node>();
      c->kind = Node::kComment;
      c->raw = "<!-- <p>hidden</p> -->";
      return c;
    }
    return random_text(rng);
  }
  static const char* kTags[] = {"p", "p", "div", "span", "b", "script", "style", "br"};
  auto n = std::make_unique<Node>();
  n->kind = Node::kElement;
  n->tag = kTags[rng.below(8)];
  if (n->tag == "script" || n->tag == "style") {
    auto t = std::make_unique<Node>();
    t->raw = "if (a < b && c) { x = '<p>no</p>'; }";
    t->text = t->raw;
    n->children.push_back(std::move(t));
    return n;
  }
  if (n->tag == "br") return n;
  const int kids = static_cast<int>(rng.below(4));
  for (int i = 0; i < kids; ++i) n->children.push_back(random_tree(rng, depth - 1));
  return n;
}

std::string render(const Node& n, Rng& rng) {
  switch (n.kind) {
    case Node::kText: return n.raw;
    case Node::kComment: return n.raw;
    case Node::kElement: break;
  }
  std::string name = n.tag;
  if (rng.below(3) == 0) {
    for (char& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  std::string open = "<" + name;
  if (rng.below(3) == 0) open += " class=\"a>b\" data-x='1'";
  if (n.tag == "br") return open + (rng.below(2) ? "/>" : ">");
  std::string out = open + ">";
  for (const auto& c : n.children) out += render(*c, rng);
  return out + "</" + name + ">";
}

void walk(const Node& n, int& depth, std::string& current,
          std::vector<std::string>& out) {
  auto flush = [&] {
    std::string p = normalize_whitespace(current);
    if (!p.empty()) out.push_back(p);
    current.clear();
  };
  switch (n.kind) {
    case Node::kComment: return;
    case Node::kText:
      if (depth > 0) current += n.text;
      return;
    case Node::kElement: break;
  }
  if (n.tag == "script" || n.tag == "style") return;
  if (n.tag == "br") {
    if (depth > 0) current += ' ';
    return;
  }
  const bool is_p = n.tag == "p";
  if (is_p) {
    if (depth > 0) current += ' ';
    ++depth;
  }
  for (const auto& c : n.children) walk(*c, depth, current, out);
  if (is_p) {
    --depth;
    if (depth == 0) {
      flush();
    } else {
      current += ' ';
    }
  }
}

TEST(ExtractTest, MatchesTreeOracleOnRandomDocuments) {
  Rng rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    Node root;
    root.kind = Node::kElement;
    root.tag = "body";
    const int kids = 1 + static_cast<int>(rng.below(5));
    for (int i = 0; i < kids; ++i) root.children.push_back(random_tree(rng, 4));
    const std::string html = "<!DOCTYPE html><html>" + render(root, rng) + "</html>";
    int depth = 0;
    std::string current;
    std::vector<std::string> expected;
    walk(root, depth, current, expected);
    ASSERT_EQ(extract_paragraphs(html), expected) << html;
  }
}

TEST(ExtractTest, FixedCases) {
  EXPECT_EQ(extract_paragraphs("<p>a<p>b</p>c</p><p>d</p>"),
            (std::vector<std::string>{"a b c", "d"}));
  EXPECT_EQ(extract_paragraphs("<div>outside</div><p>in<br>side</p>"),
            (std::vector<std::string>{"in side"}));
  EXPECT_EQ(extract_paragraphs("<p>x<script>var p = '<p>';</script>y</p>"),
            (std::vector<std::string>{"xy"}));
  EXPECT_EQ(extract_paragraphs("<p>Tom &amp; Jerry &copy; 3 < 4</p>"),
            (std::vector<std::string>{"Tom & Jerry &copy; 3 < 4"}));
  EXPECT_EQ(extract_paragraphs("<p>unclosed tail"), (std::vector<std::string>{"unclosed tail"}));
  EXPECT_TRUE(extract_paragraphs("<p></p><p>   </p>").empty());
  EXPECT_TRUE(extract_paragraphs("<pre>not a paragraph</pre>").empty());
  EXPECT_EQ(extract_paragraph_text("<p>one</p><p>two</p>"), "one two");
}

TEST(ExtractTest, NeverThrowsOnGarbage) {
  Rng rng(5);
  const std::string alphabet = "<>/p!-&;#x \"'abc";
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    const auto len = rng.below(60);
    for (std::uint64_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
    EXPECT_NO_THROW(extract_paragraphs(s));
  }
}

// ---------------------------------------------------------------------------
// Geo-referencing

TldTable small_tlds() {
  std::istringstream table("suffix,country\nuk,GB\n.ca,ca\nio,IO\ntv,TV\nus,US\n");
  std::istringstream excl("# unrelated use\nio\n.tv\n");
  return TldTable::parse(table, &excl);
}

TEST(TldTest, LooksUpCountryCodes) {
  const TldTable t = small_tlds();
  EXPECT_EQ(tld_georeference("uk", t), "GB");
  EXPECT_EQ(tld_georeference("ca", t), "CA");
  EXPECT_EQ(tld_georeference("com", t), std::nullopt);
  EXPECT_EQ(tld_georeference("io", t), std::nullopt);
  EXPECT_EQ(tld_georeference("tv", t), std::nullopt);
}

TEST(TldTest, BundledTableCoversTheInventory) {
  const TldTable t = TldTable::load(DIALECTID_DATA_DIR "/tld_table.csv",
                                    DIALECTID_DATA_DIR "/tld_exclusions.txt");
  for (const char* s : {"za", "ng", "ca", "us", "in", "pk", "my", "ph", "uk", "ie", "pt",
                        "ch", "au", "nz"}) {
    EXPECT_TRUE(t.georeference(s).has_value()) << s;
  }
  EXPECT_EQ(t.georeference("uk"), "GB");
  for (const char* s : {"ai", "fm", "io", "ly", "ag", "tv", "com", "org"}) {
    EXPECT_FALSE(t.georeference(s).has_value()) << s;
  }
}

TEST(TldTest, MalformedRowsReportTheLine) {
  std::istringstream table("suffix,country\nuk,GB\nbroken\n");
  try {
    TldTable::parse(table, nullptr);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(CityTest, HaversineKnownDistances) {
  // London to Paris is about 343.5 km; a quarter meridian is pi/2 * R.
  EXPECT_NEAR(haversine_km(51.5074, -0.1278, 48.8566, 2.3522), 343.5, 1.0);
  EXPECT_NEAR(haversine_km(0, 0, 90, 0), kEarthRadiusKm * 3.14159265358979323846 / 2, 1e-6);
  EXPECT_NEAR(haversine_km(10, 179.9, 10, -179.9), haversine_km(10, 0, 10, 0.2), 1e-9);
  EXPECT_EQ(haversine_km(12.5, 7.25, 12.5, 7.25), 0.0);
}

// Exhaustive scan over the sorted city list.
std::optional<std::size_t> scan_nearest(const std::vector<City>& sorted, Coordinates p,
                                        double radius) {
  std::optional<std::size_t> best;
  double best_d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double d = haversine_km(p.lat, p.lon, sorted[i].lat, sorted[i].lon);
    if (d <= radius && (!best || d < best_d)) {
      best = i;
      best_d = d;
    }
  }
  return best;
}

TEST(CityTest, IndexMatchesExhaustiveScan) {
  Rng rng(99);
  std::vector<City> cities;
  for (int i = 0; i < 3000; ++i) {
    City c;
    c.name = "c" + std::to_string(rng.below(2500));
    c.country = std::string(1, static_cast<char>('A' + rng.below(26))) + "X";
    // Clusters near the poles and the antimeridian on purpose.
    switch (rng.below(4)) {
      case 0: c.lat = 85 + 5 * rng.uniform(); c.lon = 360 * rng.uniform() - 180; break;
      case 1: c.lat = 40 * rng.uniform() - 20; c.lon = 179 + rng.uniform(); break;
      default: c.lat = 180 * rng.uniform() - 90; c.lon = 360 * rng.uniform() - 180;
    }
    cities.push_back(c);
  }
  // Exact duplicates at one spot: the sorted-first one must win.
  cities.push_back({"zz", "QQ", 10.0, 10.0});
  cities.push_back({"aa", "QQ", 10.0, 10.0});
  const CityIndex index(cities);
  auto sorted = cities;
  std::stable_sort(sorted.begin(), sorted.end(), [](const City& a, const City& b) {
    return std::tie(a.name, a.country) < std::tie(b.name, b.country);
  });
  ASSERT_EQ(index.cities().size(), sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    ASSERT_EQ(index.cities()[i].name, sorted[i].name);
    ASSERT_EQ(index.cities()[i].country, sorted[i].country);
  }
  for (int q = 0; q < 3000; ++q) {
    Coordinates p;
    if (q % 3 == 0) {
      const City& c = cities[rng.below(cities.size())];
      p = {std::clamp(c.lat + 0.5 * rng.uniform() - 0.25, -90.0, 90.0),
           std::clamp(c.lon + 0.5 * rng.uniform() - 0.25, -180.0, 180.0)};
    } else {
      p = {180 * rng.uniform() - 90, 360 * rng.uniform() - 180};
    }
    const double radius = q % 2 ? 50.0 : 400.0 * rng.uniform();
    ASSERT_EQ(index.nearest(p, radius), scan_nearest(sorted, p, radius))
        << p.lat << "," << p.lon << " r=" << radius;
  }
  const auto hit = index.nearest({10.0, 10.0}, 1.0);
  ASSERT_TRUE(hit.has_value());
  EXPECT_EQ(index.cities()[*hit].name, "aa");
}

TEST(CityTest, RadiusBoundary) {
  const CityIndex index({{"Origin", "OO", 0.0, 0.0}});
  const double one_deg = haversine_km(0, 0, 0, 1);
  EXPECT_TRUE(index.nearest({0, 1}, one_deg).has_value());
  EXPECT_FALSE(index.nearest({0, 1}, one_deg * (1 - 1e-9)).has_value());
  EXPECT_EQ(city_georeference({0.2, 0.2}, index), "OO");
  EXPECT_EQ(city_georeference({5, 5}, index), std::nullopt);
}

TEST(CityTest, RejectsBadInput) {
  EXPECT_THROW(CityIndex({{"x", "XX", 95.0, 0.0}}), Error);
  std::istringstream no_header("London,GB,51.5,-0.1\n");
  EXPECT_THROW(CityIndex::parse(no_header), ParseError);
  std::istringstream ok("name,country,lat,lon\nLondon,GB,51.5,-0.1\n\"Washington, D.C.\",US,38.9,-77.04\n");
  const CityIndex idx = CityIndex::parse(ok);
  EXPECT_EQ(idx.cities().size(), 2u);
  EXPECT_EQ(idx.cities()[1].name, "Washington, D.C.");
}

// ---------------------------------------------------------------------------
// Records

std::string words(int n, const std::string& w = "word") {
  std::string s;
  for (int i = 0; i < n; ++i) s += w + std::to_string(i % 7) + " ";
  return s;
}

Ingestor make_ingestor(const CityIndex* cities) {
  return Ingestor(small_tlds(), cities,
                  BoilerplateFilter({"all rights reserved", "^(home|menu)$"}), IngestOptions{});
}

TEST(IngestorTest, WebKeepsLongGeoreferencedPages) {
  Ingestor ing = make_ingestor(nullptr);
  WebRecord r{"site-1", "UK", "2017-02",
              "<p>" + words(40) + "</p><p>All Rights Reserved 2017</p><p>Menu</p>", {}};
  const auto doc = ing.web(r);
  ASSERT_TRUE(doc.has_value());
  EXPECT_EQ(doc->country, "GB");
  EXPECT_EQ(doc->word_count, 40u);
  EXPECT_EQ(doc->reg, Register::kWeb);
  EXPECT_EQ(doc->language, "en");
  EXPECT_EQ(doc->domain_suffix, "uk");

  r.html = "<p>" + words(39) + "</p><p>all rights reserved</p>";
  EXPECT_FALSE(ing.web(r).has_value());
  r.html = "<p>" + words(40) + "</p>";
  r.domain_suffix = "com";
  EXPECT_FALSE(ing.web(r).has_value());
  r.domain_suffix = "io";
  EXPECT_FALSE(ing.web(r).has_value());
  r.domain_suffix = "ca";
  r.language = "fr";
  EXPECT_FALSE(ing.web(r).has_value());
  const auto& c = ing.counters();
  EXPECT_EQ(c.seen, 5u);
  EXPECT_EQ(c.kept, 1u);
  EXPECT_EQ(c.too_short, 1u);
  EXPECT_EQ(c.not_georeferenced, 2u);
  EXPECT_EQ(c.wrong_language, 1u);
}

TEST(IngestorTest, SocialLengthGateCountsCodePoints) {
  const CityIndex cities({{"Toronto", "CA", 43.6532, -79.3832}});
  Ingestor ing = make_ingestor(&cities);
  std::string fifty(49, 'a');
  fifty += "\xC3\xA9";  // 50 code points, 51 bytes
  SocialRecord r{"t1", 43.7, -79.4, "2018-01", fifty, "en"};
  EXPECT_TRUE(ing.social(r).has_value());
  r.text = std::string(48, 'a') + "\xC3\xA9";
  EXPECT_FALSE(ing.social(r).has_value());
  EXPECT_EQ(ing.counters().too_short, 1u);
  // The length gate runs before the language check.
  r.language = "de";
  EXPECT_FALSE(ing.social(r).has_value());
  EXPECT_EQ(ing.counters().too_short, 2u);
  EXPECT_EQ(ing.counters().wrong_language, 0u);
  r.text = fifty;
  EXPECT_FALSE(ing.social(r).has_value());
  EXPECT_EQ(ing.counters().wrong_language, 1u);
}

TEST(IngestorTest, SocialNeedsACityWithinRadius) {
  const CityIndex cities({{"Toronto", "CA", 43.6532, -79.3832}});
  Ingestor ing = make_ingestor(&cities);
  const std::string text = words(12);
  SocialRecord near{"t1", 43.9, -79.5, "2018-01", text, "en"};
  const auto doc = ing.social(near);
  ASSERT_TRUE(doc.has_value());
  EXPECT_EQ(doc->country, "CA");
  ASSERT_TRUE(doc->coordinates.has_value());
  SocialRecord far{"t2", 45.0, -79.4, "2018-01", text, "en"};
  EXPECT_FALSE(ing.social(far).has_value());
  SocialRecord bad{"t3", 123.0, 0.0, "2018-01", text, "en"};
  EXPECT_FALSE(ing.social(bad).has_value());
  EXPECT_EQ(ing.counters().malformed, 1u);
}

TEST(IngestorTest, ParsesRecords) {
  const WebRecord w = parse_web_record(
      R"({"source_id":"s","domain_suffix":"ca","month":"2016-05","html":"<p>x</p>"})");
  EXPECT_EQ(w.domain_suffix, "ca");
  EXPECT_FALSE(w.language.has_value());
  const SocialRecord s = parse_social_record(
      R"({"post_id":"p","lat":1.5,"lon":-2,"month":"2018-03","text":"hi","language":"en"})");
  EXPECT_DOUBLE_EQ(s.lon, -2.0);
  EXPECT_THROW(parse_web_record("{not json"), Error);
  EXPECT_THROW(parse_social_record(R"({"post_id":"p"})"), Error);
}

// ---------------------------------------------------------------------------
// Deduplication

GeoDocument doc(std::string id, std::string month, std::string country, std::string text) {
  GeoDocument d;
  d.source_id = std::move(id);
  d.month = std::move(month);
  d.country = std::move(country);
  d.language = "en";
  d.text = std::move(text);
  d.word_count = count_words(d.text);
  return d;
}

std::vector<std::string> ids(const std::vector<GeoDocument>& docs) {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(d.source_id + "/" + d.month + "/" + d.country);
  return out;
}

TEST(DedupTest, Scopes) {
  std::vector<GeoDocument> docs = {
      doc("a", "2017-01", "CA", "Same text here"),
      doc("a", "2017-02", "US", "same   TEXT here"),  // same site
      doc("b", "2017-01", "US", "same text here"),    // same month
      doc("c", "2017-03", "CA", "same text here"),    // same country
      doc("d", "2017-04", "US", "same text here"),    // new in every scope
      doc("e", "2017-04", "GB", "different"),
  };
  EXPECT_EQ(ids(deduplicate(docs)),
            (std::vector<std::string>{"a/2017-01/CA", "d/2017-04/US", "e/2017-04/GB"}));
}

TEST(DedupTest, LanguageSeparatesCountryScope) {
  auto a = doc("a", "2017-01", "CH", "guten tag");
  auto b = doc("b", "2017-02", "CH", "guten tag");
  b.language = "de";
  EXPECT_EQ(deduplicate({a, b}).size(), 2u);
}

TEST(DedupTest, IdempotentAndOrderPreserving) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GeoDocument> docs;
    for (int i = 0; i < 300; ++i) {
      docs.push_back(doc("s" + std::to_string(rng.below(20)),
                         "2017-0" + std::to_string(1 + rng.below(4)),
                         std::string(1, static_cast<char>('A' + rng.below(3))) + "B",
                         "text " + std::to_string(rng.below(40))));
    }
    const auto once = deduplicate(docs);
    const auto twice = deduplicate(once);
    ASSERT_EQ(ids(once), ids(twice));
    // Kept documents appear in input order.
    std::size_t j = 0;
    for (const auto& d : docs) {
      if (j < once.size() && d.source_id == once[j].source_id && d.text == once[j].text &&
          d.month == once[j].month && d.country == once[j].country) {
        ++j;
      }
    }
    EXPECT_EQ(j, once.size());
  }
}

TEST(NdjsonTest, GeoDocumentRoundTrip) {
  GeoDocument d = doc("s1", "2017-05", "NZ", "kia ora \"quoted\" \xC3\xA9");
  d.reg = Register::kSocial;
  d.coordinates = Coordinates{-36.85, 174.76};
  const GeoDocument back = geo_document_from_ndjson(to_ndjson(d));
  EXPECT_EQ(back.source_id, d.source_id);
  EXPECT_EQ(back.reg, Register::kSocial);
  EXPECT_EQ(back.country, "NZ");
  EXPECT_EQ(back.text, d.text);
  EXPECT_EQ(back.word_count, d.word_count);
  ASSERT_TRUE(back.coordinates.has_value());
  EXPECT_DOUBLE_EQ(back.coordinates->lat, -36.85);
  EXPECT_EQ(to_ndjson(back), to_ndjson(d));
}

TEST(NdjsonTest, InvalidUtf8DoesNotThrow) {
  GeoDocument d = doc("s1", "2017-05", "NZ", "bad \xFF byte");
  EXPECT_NO_THROW(to_ndjson(d));
}

}  // namespace
}  // namespace dialectid
