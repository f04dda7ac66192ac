#include "advscen/semantics.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "advscen/errors.hpp"
#include "advscen/rng.hpp"

namespace advscen {

namespace {

constexpr std::string_view kSlotTags[5] = {"C", "P", "B", "R", "L"};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Position of the first occurrence of `phrase` as a token run in `tokens`.
std::optional<std::size_t> find_phrase(const std::vector<std::string>& tokens, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > tokens.size()) return std::nullopt;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<long>(i))) return i;
  }
  return std::nullopt;
}

template <typename T, std::size_t N>
void add_vocabulary(SynonymTable& t, std::string_view category, const std::array<T, N>& values) {
  for (T v : values) t.add(category, to_string(v), to_string(v));
}

std::optional<double> parse_offset(std::string_view text) {
  static const std::regex re(R"((\d+(?:\.\d+)?)\s*(?:m|meters|metres|meter)\b)", std::regex::icase);
  std::cmatch m;
  if (std::regex_search(text.data(), text.data() + text.size(), m, re)) return std::stod(m[1].str());
  return std::nullopt;
}

}  // namespace

const char* const kInstructionPrompt =
    "You write safety-critical driving test scenarios. Starting from the benign scene below, introduce exactly one "
    "adversarial road user whose action violates a traffic rule yet stays physically plausible. Ground every choice "
    "in the retrieved knowledge. Answer with exactly five lines and nothing else:\n"
    "C: <agent class: car, truck, pedestrian, cyclist or scooter>\n"
    "P: <position relative to the ego vehicle, with a distance in meters>\n"
    "B: <behavior of the adversarial agent>\n"
    "R: <road type: straight, intersection, t-junction, roundabout or curve>\n"
    "L: <traffic light state: red, yellow, green or none>";

std::string_view to_string(BackendMode m) { return m == BackendMode::kRemote ? "remote" : "template"; }

std::optional<BackendMode> parse_backend_mode(std::string_view s) {
  if (s == "template") return BackendMode::kTemplate;
  if (s == "remote") return BackendMode::kRemote;
  return std::nullopt;
}

std::string build_remote_request(const BackendConfig& cfg, std::string_view base_prompt,
                                 const std::vector<KnowledgeEntry>& retrieved) {
  std::string user = "Benign scene: " + std::string(base_prompt) + "\n\nRetrieved knowledge:\n";
  for (const KnowledgeEntry& e : retrieved) {
    user += "- [" + std::string(to_string(e.source)) + " " + e.id + "] " + e.text + "\n";
  }
  nlohmann::ordered_json body;
  body["model"] = cfg.model;
  body["temperature"] = 0;
  body["messages"] = nlohmann::ordered_json::array(
      {{{"role", "system"}, {"content", kInstructionPrompt}}, {{"role", "user"}, {"content", user}}});
  return body.dump();
}

SemanticTuple parse_reply(std::string_view reply) {
  std::string text(reply);
  const auto parsed = nlohmann::json::parse(text, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object()) {
    if (parsed.contains("choices") && !parsed["choices"].empty()) {
      text = parsed["choices"][0]["message"]["content"].get<std::string>();
    } else if (parsed.contains("content") && parsed["content"].is_string()) {
      text = parsed["content"].get<std::string>();
    }
  }
  std::string slots[5];
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string line = trim(std::string_view(text).substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    for (int i = 0; i < 5; ++i) {
      if (line.size() >= 2 && line.compare(0, kSlotTags[i].size(), kSlotTags[i]) == 0 && line[1] == ':' && slots[i].empty()) {
        slots[i] = trim(std::string_view(line).substr(2));
      }
    }
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  for (int i = 0; i < 5; ++i) {
    if (slots[i].empty()) throw ParseError("reply is missing slot `" + std::string(kSlotTags[i]) + ":`", std::string(kSlotTags[i]));
  }
  return {slots[0], slots[1], slots[2], slots[3], slots[4]};
}

std::string http_post(const std::string& url, const std::string& body, double timeout_s, const std::string& token) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw BackendError("invalid endpoint URL `" + url + "`");
  const std::string path = m[2].matched ? m[2].str() : "/";
  httplib::Client client(m[1].str());
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) throw BackendError("request to `" + url + "` failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw BackendError("request to `" + url + "` returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

SemanticTuple generate_semantics(std::string_view base_prompt, const std::vector<KnowledgeEntry>& retrieved,
                                 const BackendConfig& backend) {
  if (backend.mode == BackendMode::kRemote) {
    const std::string body = build_remote_request(backend, base_prompt, retrieved);
    const char* tok = backend.token_env.empty() ? nullptr : std::getenv(backend.token_env.c_str());
    const std::string token = tok ? tok : "";
    const Transport& send = backend.transport ? backend.transport : Transport(http_post);
    // One retry covers both transport failures and replies missing a slot.
    for (int attempt = 0;; ++attempt) {
      try {
        return parse_reply(send(backend.url, body, backend.timeout_s, token));
      } catch (const Error&) {
        if (attempt >= 1) throw;
      }
    }
  }

  const KnowledgeEntry* typ = nullptr;
  for (const KnowledgeEntry& e : retrieved) {
    if (e.source == KbSource::kCrash && e.typology) {
      typ = &e;
      break;
    }
  }
  if (!typ) throw BackendError("template backend needs at least one D_c typology among the retrieved entries");
  const Typology& ty = *typ->typology;
  Rng rng(backend.seed, "semantics");
  const double span = std::floor(ty.offset_hi) - std::ceil(ty.offset_lo);
  const double offset = std::ceil(ty.offset_lo) + (span > 0 ? static_cast<double>(rng.below(static_cast<std::uint64_t>(span) + 1)) : 0.0);
  SemanticTuple t;
  t.phi_c = ty.cls;
  t.phi_p = ty.placement + " " + std::to_string(static_cast<int>(offset)) + " m ahead";
  t.phi_b = ty.maneuver;
  t.phi_R = ty.roads[rng.below(ty.roads.size())];
  t.phi_L = ty.lights[rng.below(ty.lights.size())];
  return t;
}

std::string_view to_string(Placement p) {
  switch (p) {
    case Placement::kAheadSameLane: return "ahead-same-lane";
    case Placement::kAheadAdjacentLane: return "ahead-adjacent-lane";
    case Placement::kOccludedRoadside: return "occluded-roadside";
    case Placement::kOncoming: return "oncoming";
    case Placement::kCrossingLeft: return "crossing-left";
    case Placement::kCrossingRight: return "crossing-right";
  }
  return "?";
}

std::optional<Placement> parse_placement(std::string_view s) {
  for (Placement p : {Placement::kAheadSameLane, Placement::kAheadAdjacentLane, Placement::kOccludedRoadside,
                      Placement::kOncoming, Placement::kCrossingLeft, Placement::kCrossingRight}) {
    if (to_string(p) == s) return p;
  }
  return std::nullopt;
}

SynonymTable::Row& SynonymTable::row(std::string_view category, std::string_view canonical) {
  for (Row& r : rows_) {
    if (r.category == category && r.canonical == canonical) return r;
  }
  rows_.push_back({std::string(category), std::string(canonical), {}});
  return rows_.back();
}

void SynonymTable::add(std::string_view category, std::string_view canonical, std::string_view phrase) {
  std::vector<std::string> toks = tokenize(phrase);
  if (toks.empty()) return;
  Row& r = row(category, canonical);
  if (std::find(r.phrases.begin(), r.phrases.end(), toks) == r.phrases.end()) r.phrases.push_back(std::move(toks));
}

SynonymTable SynonymTable::vocabulary_only() {
  SynonymTable t;
  add_vocabulary(t, "class", std::array{AgentClass::kCar, AgentClass::kTruck, AgentClass::kPedestrian,
                                        AgentClass::kCyclist, AgentClass::kScooter});
  add_vocabulary(t, "placement", std::array{Placement::kAheadSameLane, Placement::kAheadAdjacentLane,
                                            Placement::kOccludedRoadside, Placement::kOncoming,
                                            Placement::kCrossingLeft, Placement::kCrossingRight});
  add_vocabulary(t, "behavior", std::array{Behavior::kLaneFollow, Behavior::kStationary, Behavior::kCrossing,
                                           Behavior::kSuddenEmergence, Behavior::kRedLightRun, Behavior::kCutIn,
                                           Behavior::kHardBrake, Behavior::kLeftTurn});
  add_vocabulary(t, "road", std::array{RoadType::kStraight, RoadType::kIntersection, RoadType::kTJunction,
                                       RoadType::kRoundabout, RoadType::kCurve});
  add_vocabulary(t, "light", std::array{LightState::kRed, LightState::kYellow, LightState::kGreen, LightState::kNone});
  return t;
}

SynonymTable SynonymTable::load(const std::filesystem::path& path) {
  SynonymTable t = vocabulary_only();
  std::ifstream in(path);
  if (!in) throw Error("cannot open synonym table `" + path.string() + "`");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto p1 = s.find('|');
    const auto p2 = p1 == std::string::npos ? std::string::npos : s.find('|', p1 + 1);
    if (p2 == std::string::npos) throw ParseError("synonym line needs `category|canonical|synonyms`", {}, line_no);
    const std::string cat = trim(std::string_view(s).substr(0, p1));
    const std::string canon = trim(std::string_view(s).substr(p1 + 1, p2 - p1 - 1));
    bool known = false;
    for (const Row& r : t.rows_) known = known || (r.category == cat && r.canonical == canon);
    if (!known) throw ParseError("`" + canon + "` is not a " + cat + " vocabulary word", cat, line_no);
    std::string_view rest = std::string_view(s).substr(p2 + 1);
    while (!rest.empty()) {
      const auto c = rest.find(',');
      t.add(cat, canon, rest.substr(0, c));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
  }
  return t;
}

std::optional<std::string> SynonymTable::match(std::string_view category, std::string_view text) const {
  const std::vector<std::string> toks = tokenize(text);
  const Row* best = nullptr;
  std::size_t best_len = 0;
  std::size_t best_pos = 0;
  for (const Row& r : rows_) {
    if (r.category != category) continue;
    for (const auto& phrase : r.phrases) {
      const auto pos = find_phrase(toks, phrase);
      if (!pos) continue;
      if (!best || phrase.size() > best_len || (phrase.size() == best_len && *pos < best_pos)) {
        best = &r;
        best_len = phrase.size();
        best_pos = *pos;
      }
    }
  }
  if (!best) return std::nullopt;
  return best->canonical;
}

std::vector<std::string> SynonymTable::nearest(std::string_view category, std::string_view text, std::size_t n) const {
  std::string key;
  for (const std::string& w : tokenize(text)) key += w;
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const Row& r : rows_) {
    if (r.category == category) scored.emplace_back(edit_distance(key, r.canonical), r.canonical);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && i < n; ++i) out.push_back(scored[i].second);
  return out;
}

StructuredTuple parse_semantics(const SemanticTuple& t, const SynonymTable& table) {
  auto fail = [&](std::string_view category, const std::string& text) {
    std::string msg = "cannot map " + std::string(category) + " `" + text + "`; nearest vocabulary entries:";
    for (const std::string& w : table.nearest(category, text)) msg += " " + w;
    throw ParseError(msg, std::string(category));
  };
  StructuredTuple s;
  const auto cls = table.match("class", t.phi_c);
  if (!cls) fail("class", t.phi_c);
  s.cls = *parse_agent_class(*cls);
  const auto road = table.match("road", t.phi_R);
  if (!road) fail("road", t.phi_R);
  s.road = *parse_road_type(*road);
  if (const auto p = table.match("placement", t.phi_p)) s.placement = *parse_placement(*p);
  if (const auto b = table.match("behavior", t.phi_b)) s.behavior = *parse_behavior(*b);
  if (const auto l = table.match("light", t.phi_L)) s.light = *parse_light_state(*l);
  s.offset = parse_offset(t.phi_p).value_or(kDefaultOffset);
  return s;
}

}  // namespace advscen
