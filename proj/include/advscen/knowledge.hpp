#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace advscen {

enum class KbSource { kRegulation, kLicense, kCrash };  // D_r, D_l, D_c

std::string_view to_string(KbSource s);  // "D_r", "D_l", "D_c"
std::optional<KbSource> parse_kb_source(std::string_view s);

/// Slot set of a pre-crash typology. Fields hold vocabulary words as they
/// appear in the file; parse_semantics resolves them.
struct Typology {
  std::string cls;
  std::string placement;
  std::string maneuver;
  std::vector<std::string> roads;   // compatible road types
  std::vector<std::string> lights;  // compatible light states
  double offset_lo = 25.0;
  double offset_hi = 25.0;
};

struct KnowledgeEntry {
  KbSource source = KbSource::kRegulation;
  std::string id;
  std::vector<std::string> tags;
  std::string text;
  std::optional<Typology> typology;  // present exactly for D_c
};

using KnowledgeBase = std::vector<KnowledgeEntry>;

/// Parses `source|id|tags|text[|slots]`; tags are comma separated, slots are
/// `key=value` pairs separated by `;`. Throws ParseError with the line number.
KnowledgeEntry parse_kb_line(std::string_view line, int line_no = 0);
/// Loads a record file; blank lines and lines starting with '#' are skipped.
KnowledgeBase load_knowledge_file(const std::filesystem::path& path);
/// Loads regulations.kb, license.kb and precrash.kb from a data directory.
KnowledgeBase load_knowledge_base(const std::filesystem::path& dir);

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

struct RetrievalHit {
  const KnowledgeEntry* entry = nullptr;
  double score = 0.0;
};

/// TF-IDF cosine ranking of documents (tags + text) against the prompt.
/// idf(w) = ln((1 + N) / (1 + df(w))) + 1, tf is the raw count. Ties are
/// broken by source (D_c, D_r, D_l) and then id.
std::vector<RetrievalHit> retrieve_scored(const KnowledgeBase& kb, std::string_view prompt, std::size_t k);
std::vector<KnowledgeEntry> retrieve(const KnowledgeBase& kb, std::string_view prompt, std::size_t k);

}  // namespace advscen
