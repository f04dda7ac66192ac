#include "advscen/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "advscen/errors.hpp"

namespace advscen {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int source_rank(KbSource s) {
  switch (s) {
    case KbSource::kCrash: return 0;
    case KbSource::kRegulation: return 1;
    case KbSource::kLicense: return 2;
  }
  return 3;
}

Typology parse_slots(const std::string& slots, int line_no) {
  Typology t;
  bool have_offset = false;
  for (const std::string& kv : split(slots, ';')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("slot `" + kv + "` is not key=value", kv, line_no);
    const std::string key = trim(std::string_view(kv).substr(0, eq));
    const std::string value = trim(std::string_view(kv).substr(eq + 1));
    if (key == "class") {
      t.cls = value;
    } else if (key == "placement") {
      t.placement = value;
    } else if (key == "maneuver") {
      t.maneuver = value;
    } else if (key == "roads") {
      t.roads = split(value, ',');
    } else if (key == "lights") {
      t.lights = split(value, ',');
    } else if (key == "offset") {
      const auto dash = value.find('-');
      try {
        t.offset_lo = std::stod(value.substr(0, dash));
        t.offset_hi = dash == std::string::npos ? t.offset_lo : std::stod(value.substr(dash + 1));
      } catch (const std::exception&) {
        throw ParseError("bad offset range `" + value + "`", "offset", line_no);
      }
      have_offset = true;
    } else {
      throw ParseError("unknown slot `" + key + "`", key, line_no);
    }
  }
  for (const auto& [name, value] : {std::pair<const char*, bool>{"class", !t.cls.empty()},
                                    {"placement", !t.placement.empty()},
                                    {"maneuver", !t.maneuver.empty()},
                                    {"roads", !t.roads.empty()},
                                    {"lights", !t.lights.empty()}}) {
    if (!value) throw ParseError(std::string("typology is missing slot `") + name + "`", name, line_no);
  }
  if (!have_offset) {
    t.offset_lo = 25.0;
    t.offset_hi = 25.0;
  }
  return t;
}

}  // namespace

std::string_view to_string(KbSource s) {
  switch (s) {
    case KbSource::kRegulation: return "D_r";
    case KbSource::kLicense: return "D_l";
    case KbSource::kCrash: return "D_c";
  }
  return "?";
}

std::optional<KbSource> parse_kb_source(std::string_view s) {
  if (s == "D_r") return KbSource::kRegulation;
  if (s == "D_l") return KbSource::kLicense;
  if (s == "D_c") return KbSource::kCrash;
  return std::nullopt;
}

KnowledgeEntry parse_kb_line(std::string_view line, int line_no) {
  const std::vector<std::string> f = split(line, '|');
  if (f.size() != 4 && f.size() != 5) {
    throw ParseError("expected 4 or 5 `|`-separated fields, got " + std::to_string(f.size()), {}, line_no);
  }
  KnowledgeEntry e;
  const auto src = parse_kb_source(f[0]);
  if (!src) throw ParseError("unknown source `" + f[0] + "`", "source", line_no);
  e.source = *src;
  e.id = f[1];
  if (e.id.empty()) throw ParseError("empty id", "id", line_no);
  for (std::string& t : split(f[2], ',')) {
    if (!t.empty()) e.tags.push_back(std::move(t));
  }
  e.text = f[3];
  if (e.text.empty()) throw ParseError("empty text", "text", line_no);
  if (e.source == KbSource::kCrash) {
    if (f.size() != 5) throw ParseError("D_c entry `" + e.id + "` has no slot set", "slots", line_no);
    e.typology = parse_slots(f[4], line_no);
  } else if (f.size() == 5 && !f[4].empty()) {
    throw ParseError("only D_c entries carry slots", "slots", line_no);
  }
  return e;
}

KnowledgeBase load_knowledge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open knowledge file `" + path.string() + "`");
  KnowledgeBase kb;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      kb.push_back(parse_kb_line(t, line_no));
    } catch (const ParseError& e) {
      throw ParseError(path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what(), e.field(), line_no);
    }
  }
  return kb;
}

KnowledgeBase load_knowledge_base(const std::filesystem::path& dir) {
  KnowledgeBase kb;
  for (const char* name : {"regulations.kb", "license.kb", "precrash.kb"}) {
    KnowledgeBase part = load_knowledge_file(dir / name);
    kb.insert(kb.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return kb;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<RetrievalHit> retrieve_scored(const KnowledgeBase& kb, std::string_view prompt, std::size_t k) {
  if (k == 0) throw DomainError("retrieve: k must be at least 1");
  if (kb.empty()) return {};

  std::vector<std::map<std::string, double>> tf(kb.size());
  std::map<std::string, double> df;
  for (std::size_t i = 0; i < kb.size(); ++i) {
    std::string doc;
    for (const std::string& t : kb[i].tags) doc += t + " ";
    doc += kb[i].text;
    for (const std::string& w : tokenize(doc)) tf[i][w] += 1.0;
    for (const auto& [w, c] : tf[i]) df[w] += 1.0;
  }
  const double n = static_cast<double>(kb.size());
  auto idf = [&](const std::string& w) {
    const auto it = df.find(w);
    const double d = it == df.end() ? 0.0 : it->second;
    return std::log((1.0 + n) / (1.0 + d)) + 1.0;
  };

  std::map<std::string, double> q;
  for (const std::string& w : tokenize(prompt)) q[w] += 1.0;
  double qnorm = 0.0;
  for (auto& [w, c] : q) {
    c *= idf(w);
    qnorm += c * c;
  }
  qnorm = std::sqrt(qnorm);

  std::vector<RetrievalHit> hits;
  hits.reserve(kb.size());
  for (std::size_t i = 0; i < kb.size(); ++i) {
    double dnorm = 0.0;
    double dotp = 0.0;
    for (const auto& [w, c] : tf[i]) {
      const double v = c * idf(w);
      dnorm += v * v;
      const auto it = q.find(w);
      if (it != q.end()) dotp += v * it->second;
    }
    const double denom = std::sqrt(dnorm) * qnorm;
    hits.push_back({&kb[i], denom > 0.0 ? dotp / denom : 0.0});
  }
  std::sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score) return a.score > b.score;
    const int ra = source_rank(a.entry->source);
    const int rb = source_rank(b.entry->source);
    if (ra != rb) return ra < rb;
    return a.entry->id < b.entry->id;
  });
  hits.resize(std::min(k, hits.size()));
  return hits;
}

std::vector<KnowledgeEntry> retrieve(const KnowledgeBase& kb, std::string_view prompt, std::size_t k) {
  std::vector<KnowledgeEntry> out;
  for (const RetrievalHit& h : retrieve_scored(kb, prompt, k)) out.push_back(*h.entry);
  return out;
}

}  // namespace advscen
