#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advscen/knowledge.hpp"
#include "advscen/scenario.hpp"

namespace advscen {

/// Free-text descriptions of the adversary class, position, behavior and
/// the road type and light state.
struct SemanticTuple {
  std::string phi_c;
  std::string phi_p;
  std::string phi_b;
  std::string phi_R;
  std::string phi_L;
  bool operator==(const SemanticTuple&) const = default;
};

enum class BackendMode { kTemplate, kRemote };
std::string_view to_string(BackendMode m);
std::optional<BackendMode> parse_backend_mode(std::string_view s);

/// Sends one request body and returns the raw response body. Throws
/// BackendError on transport failure.
using Transport = std::function<std::string(const std::string& url, const std::string& body,
                                            double timeout_s, const std::string& token)>;

struct BackendConfig {
  BackendMode mode = BackendMode::kTemplate;
  std::string url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model = "scenario-writer";
  double timeout_s = 30.0;
  std::string token_env = "ADVSCEN_API_TOKEN";
  std::uint64_t seed = 0;
  Transport transport;  // defaults to an HTTP POST when empty
};

extern const char* const kInstructionPrompt;

/// Chat-style request body for the remote backend.
std::string build_remote_request(const BackendConfig& cfg, std::string_view base_prompt,
                                 const std::vector<KnowledgeEntry>& retrieved);
/// Extracts the five `C:`/`P:`/`B:`/`R:`/`L:` lines from a reply (plain text
/// or a chat-completion JSON document). Throws ParseError naming a missing slot.
SemanticTuple parse_reply(std::string_view reply);

SemanticTuple generate_semantics(std::string_view base_prompt, const std::vector<KnowledgeEntry>& retrieved,
                                 const BackendConfig& backend);

/// HTTP POST transport (cpp-httplib).
std::string http_post(const std::string& url, const std::string& body, double timeout_s, const std::string& token);

enum class Placement {
  kAheadSameLane,
  kAheadAdjacentLane,
  kOccludedRoadside,
  kOncoming,
  kCrossingLeft,
  kCrossingRight,
};
std::string_view to_string(Placement p);
std::optional<Placement> parse_placement(std::string_view s);

inline constexpr double kDefaultOffset = 25.0;

struct StructuredTuple {
  AgentClass cls = AgentClass::kCar;
  Placement placement = Placement::kAheadSameLane;
  double offset = kDefaultOffset;  // meters ahead along the route
  Behavior behavior = Behavior::kLaneFollow;
  RoadType road = RoadType::kStraight;
  LightState light = LightState::kNone;
  bool operator==(const StructuredTuple&) const = default;
};

/// Phrase table mapping free text onto the closed vocabularies. Categories are
/// "class", "placement", "behavior", "road" and "light".
class SynonymTable {
 public:
  struct Row {
    std::string category;
    std::string canonical;
    std::vector<std::vector<std::string>> phrases;  // tokenized, canonical first
  };

  /// Rows for the vocabulary words themselves, no synonyms.
  static SynonymTable vocabulary_only();
  /// Reads `category|canonical|syn1,syn2` lines on top of the vocabulary.
  static SynonymTable load(const std::filesystem::path& path);
  void add(std::string_view category, std::string_view canonical, std::string_view phrase);

  /// Canonical word whose phrase matches `text`: longest phrase wins, then
  /// earliest position in the text, then table order.
  std::optional<std::string> match(std::string_view category, std::string_view text) const;
  /// Vocabulary words of a category ordered by edit distance to `text`.
  std::vector<std::string> nearest(std::string_view category, std::string_view text, std::size_t n = 3) const;

  const std::vector<Row>& rows() const { return rows_; }

 private:
  Row& row(std::string_view category, std::string_view canonical);
  std::vector<Row> rows_;
};

/// Maps the tuple onto (c, p, b, R, L). Unmappable class or road type throws
/// ParseError listing the nearest vocabulary entries; an unmatched placement
/// falls back to ahead-same-lane, behavior to lane-follow and light to none.
StructuredTuple parse_semantics(const SemanticTuple& t, const SynonymTable& table);

}  // namespace advscen
