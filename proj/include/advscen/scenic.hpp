#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "advscen/scenario.hpp"

namespace advscen {

/// Replaces every `{name}` marker. Unknown markers throw ParseError so no
/// placeholder survives.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& slots);

/// Slot values for a meta-scenario (town, road, light, poses, behavior...).
std::map<std::string, std::string> scenic_slots(const MetaScenario& m);

/// Renders the Scenic-syntax template for a meta-scenario. Text only.
std::string emit_scenic(const MetaScenario& m, std::string_view tmpl);

/// True when `text` still contains a `{identifier}` marker.
bool has_unfilled_slot(std::string_view text);

}  // namespace advscen
