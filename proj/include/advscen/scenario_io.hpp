#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "advscen/scenario.hpp"

namespace advscen {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kScenarioVersion = "advscen-scenario/1";

/// Serializes to the scenario document (see docs/scenario_format.md).
std::string serialize_scenario(const AdvScenario& s);
/// Parses a scenario document. Throws ParseError naming the field (or line
/// for syntax errors) and VersionError when `version` differs from `expected`.
AdvScenario parse_scenario(std::string_view text, std::string_view expected = kScenarioVersion);

void save_scenario(const AdvScenario& s, const std::filesystem::path& path);
AdvScenario load_scenario(const std::filesystem::path& path, std::string_view expected = kScenarioVersion);

/// Pretty printer that keeps arrays of scalars on a single line, so point
/// lists serialize one point per line.
std::string format_json(const Json& j);

// Building blocks shared with the road library and config files.
Json to_json(const Vec2& p);
Json to_json(const std::vector<Vec2>& pts);
Json to_json(const SceneContext& c);
Json to_json(const AgentSpec& a);
Json to_json(const PerturbationRecord& p);

/// `where` is the dotted path used in error messages.
Vec2 vec2_from_json(const Json& j, const std::string& where);
std::vector<Vec2> points_from_json(const Json& j, const std::string& where);
SceneContext context_from_json(const Json& j, const std::string& where = "context");
AgentSpec agent_spec_from_json(const Json& j, const std::string& where);

/// Returns j[key] or throws ParseError("missing field `key`").
const Json& require_field(const Json& j, const std::string& key, const std::string& where);
double require_number(const Json& j, const std::string& key, const std::string& where);
std::string require_string(const Json& j, const std::string& key, const std::string& where);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace advscen
