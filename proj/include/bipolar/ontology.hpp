#pragma once

// Topic codebook model, YAML loader/validator and the combinatorial
// expansion into a mirrored, polarity-balanced statement dataset.

#include <yaml-cpp/yaml.h>

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bipolar/common.hpp"
#include "bipolar/hash.hpp"
#include "json.hpp"

namespace bipolar {

inline constexpr std::string_view kEntitySlot = "{entity}";

// language code -> text
using LanguageText = std::map<std::string, std::string>;

struct Entity {
  std::string id;
  LanguageText display_name;
  LanguageText demonym;
  std::string native_language;
  std::map<std::string, std::string> metadata;

  const std::string* name_in(const std::string& language) const {
    auto it = display_name.find(language);
    return it == display_name.end() ? nullptr : &it->second;
  }
};

using FormKey = std::pair<Role, Frame>;

struct StatementTemplate {
  std::string id;  // "<category>/<pair>/<polarity>"
  // (subject, present) holds the base text; other entries are role/frame variants.
  std::map<FormKey, LanguageText> forms;

  const std::string* resolve(Role role, Frame frame, const std::string& language) const {
    auto f = forms.find({role, frame});
    if (f == forms.end()) return nullptr;
    auto t = f->second.find(language);
    return t == f->second.end() ? nullptr : &t->second;
  }
};

struct EventPair {
  std::string id;
  StatementTemplate positive_template;
  StatementTemplate negative_template;

  const StatementTemplate& for_polarity(Polarity p) const {
    return p == Polarity::positive ? positive_template : negative_template;
  }
};

struct Category {
  std::string id;
  std::string label;
  std::optional<std::string> cameo_code;
  std::vector<EventPair> event_pairs;
};

struct Codebook {
  std::string topic_id;
  std::string base_language = "en";
  std::array<Entity, 2> entities;
  std::vector<Category> categories;
  Role default_role = Role::subject;
  std::set<Frame> default_frames{Frame::present};
  // Translated preambles for full-prompt-language variants.
  LanguageText preamble_translations;
  // Overrides the bundled in-context asset when present.
  std::optional<std::string> context;

  const Entity& entity_a() const { return entities[0]; }
  const Entity& entity_b() const { return entities[1]; }

  const Entity* find_entity(std::string_view id) const {
    for (const auto& e : entities)
      if (e.id == id) return &e;
    return nullptr;
  }

  const Category* find_category(std::string_view id) const {
    for (const auto& c : categories)
      if (c.id == id) return &c;
    return nullptr;
  }

  const StatementTemplate& find_template(std::string_view category_id, std::string_view pair_id,
                                         Polarity polarity) const {
    if (const auto* c = find_category(category_id)) {
      for (const auto& p : c->event_pairs)
        if (p.id == pair_id) return p.for_polarity(polarity);
    }
    throw Error("codebook has no event pair '" + std::string(category_id) + "/" +
                std::string(pair_id) + "'");
  }

  std::vector<std::string> category_ids() const {
    std::vector<std::string> out;
    for (const auto& c : categories) out.push_back(c.id);
    return out;
  }
};

struct StatementRecord {
  std::string statement_id;
  std::string topic_id;
  std::string category_id;
  std::string event_pair_id;
  Polarity polarity = Polarity::positive;
  std::string entity_id;
  Role role = Role::subject;
  Frame frame = Frame::present;
  std::string language;
  std::string text;
  std::string mirror_id;

  bool operator==(const StatementRecord&) const = default;
};

namespace detail {

inline std::size_t count_slots(std::string_view text) {
  std::size_t n = 0;
  for (auto pos = text.find(kEntitySlot); pos != std::string_view::npos;
       pos = text.find(kEntitySlot, pos + kEntitySlot.size()))
    ++n;
  return n;
}

inline std::optional<FormKey> parse_form_key(std::string_view key) {
  auto dot = key.find('.');
  if (dot != std::string_view::npos) {
    auto r = parse_role(key.substr(0, dot));
    auto f = parse_frame(key.substr(dot + 1));
    if (r && f) return FormKey{*r, *f};
    return std::nullopt;
  }
  if (auto r = parse_role(key)) return FormKey{*r, Frame::present};
  if (auto f = parse_frame(key)) return FormKey{Role::subject, *f};
  return std::nullopt;
}

class CodebookReader {
 public:
  std::vector<std::string> violations;

  void violate(const std::string& path, const std::string& what) {
    violations.push_back(path.empty() ? what : path + ": " + what);
  }

  std::string scalar(const YAML::Node& n, const std::string& path, bool required = true) {
    if (!n || n.IsNull()) {
      if (required) violate(path, "required");
      return {};
    }
    if (!n.IsScalar()) {
      violate(path, "expected a scalar");
      return {};
    }
    return n.as<std::string>();
  }

  std::map<std::string, std::string> string_map(const YAML::Node& n, const std::string& path) {
    std::map<std::string, std::string> out;
    if (!n || n.IsNull()) return out;
    if (!n.IsMap()) {
      violate(path, "expected a mapping");
      return out;
    }
    for (const auto& kv : n) {
      auto key = kv.first.as<std::string>();
      out[key] = scalar(kv.second, path + "." + key);
    }
    return out;
  }

  Entity entity(const YAML::Node& n, const std::string& path, const std::string& base_language) {
    Entity e;
    if (!n.IsMap()) {
      violate(path, "expected a mapping");
      return e;
    }
    e.id = scalar(n["id"], path + ".id");
    e.display_name = string_map(n["name"], path + ".name");
    e.demonym = string_map(n["demonym"], path + ".demonym");
    e.native_language = scalar(n["native_language"], path + ".native_language", false);
    e.metadata = string_map(n["metadata"], path + ".metadata");
    if (!e.display_name.count(base_language))
      violate(path + ".name", "missing display name for base language '" + base_language + "'");
    return e;
  }

  StatementTemplate statement_template(const YAML::Node& n, const std::string& path,
                                       std::string id) {
    StatementTemplate t;
    t.id = std::move(id);
    if (!n.IsMap()) {
      violate(path, "expected a mapping of language -> template");
      return t;
    }
    auto& base = t.forms[{Role::subject, Frame::present}];
    for (const auto& kv : n) {
      auto key = kv.first.as<std::string>();
      if (key == "forms") continue;
      base[key] = scalar(kv.second, path + "." + key);
    }
    if (const auto forms = n["forms"]) {
      if (!forms.IsMap()) {
        violate(path + ".forms", "expected a mapping");
      } else {
        for (const auto& kv : forms) {
          auto key = kv.first.as<std::string>();
          auto fk = parse_form_key(key);
          if (!fk) {
            violate(path + ".forms." + key, "unknown form (expected <role>, <frame> or <role>.<frame>)");
            continue;
          }
          for (auto& [lang, text] : string_map(kv.second, path + ".forms." + key))
            t.forms[*fk][lang] = text;
        }
      }
    }
    if (base.empty()) t.forms.erase({Role::subject, Frame::present});
    for (const auto& [fk, texts] : t.forms) {
      for (const auto& [lang, text] : texts) {
        auto slots = count_slots(text);
        if (slots != 1)
          violate(path, "template " + t.id + " form " + std::string(to_string(fk.first)) + "." +
                            std::string(to_string(fk.second)) + " [" + lang + "] must contain exactly one " +
                            std::string(kEntitySlot) + " slot, found " + std::to_string(slots));
      }
    }
    if (t.forms.empty()) violate(path, "template " + t.id + " has no text");
    return t;
  }

  Codebook codebook(const YAML::Node& root) {
    Codebook cb;
    if (!root.IsMap()) {
      violate("", "codebook root must be a mapping");
      return cb;
    }
    cb.topic_id = scalar(root["topic"], "topic");
    if (root["base_language"]) cb.base_language = scalar(root["base_language"], "base_language");

    const auto ents = root["entities"];
    if (!ents || !ents.IsSequence() || ents.size() != 2) {
      violate("entities", "exactly two entities required");
    } else {
      for (std::size_t i = 0; i < 2; ++i)
        cb.entities[i] = entity(ents[i], "entities[" + std::to_string(i) + "]", cb.base_language);
      if (!cb.entities[0].id.empty() && cb.entities[0].id == cb.entities[1].id)
        violate("entities", "entity identifiers must be distinct ('" + cb.entities[0].id + "')");
    }

    if (const auto d = root["defaults"]) {
      if (d["role"]) {
        auto s = scalar(d["role"], "defaults.role");
        if (auto r = parse_role(s)) cb.default_role = *r;
        else violate("defaults.role", "unknown role '" + s + "'");
      }
      if (const auto fr = d["frames"]) {
        cb.default_frames.clear();
        if (!fr.IsSequence()) {
          violate("defaults.frames", "expected a list");
        } else {
          for (std::size_t i = 0; i < fr.size(); ++i) {
            auto s = scalar(fr[i], "defaults.frames[" + std::to_string(i) + "]");
            if (auto f = parse_frame(s)) cb.default_frames.insert(*f);
            else violate("defaults.frames[" + std::to_string(i) + "]", "unknown frame '" + s + "'");
          }
        }
      }
    }

    if (const auto p = root["prompts"]) {
      cb.preamble_translations = string_map(p["preamble"], "prompts.preamble");
      if (p["context"]) cb.context = scalar(p["context"], "prompts.context");
    }

    const auto cats = root["categories"];
    if (!cats || !cats.IsSequence() || cats.size() == 0) {
      violate("categories", "at least one category required");
      return cb;
    }
    std::set<std::string> seen_cats;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      const std::string path = "categories[" + std::to_string(i) + "]";
      const auto& cn = cats[i];
      Category c;
      if (!cn.IsMap()) {
        violate(path, "expected a mapping");
        continue;
      }
      c.id = scalar(cn["id"], path + ".id");
      c.label = cn["label"] ? scalar(cn["label"], path + ".label") : c.id;
      if (cn["cameo"]) c.cameo_code = scalar(cn["cameo"], path + ".cameo");
      if (!c.id.empty() && !seen_cats.insert(c.id).second)
        violate(path + ".id", "duplicate category id '" + c.id + "'");

      const auto evs = cn["events"];
      if (!evs || !evs.IsSequence() || evs.size() == 0) {
        violate(path + ".events", "at least one event pair required");
      } else {
        std::set<std::string> seen_pairs;
        for (std::size_t j = 0; j < evs.size(); ++j) {
          const std::string epath = path + ".events[" + std::to_string(j) + "]";
          const auto& en = evs[j];
          EventPair ep;
          ep.id = scalar(en["id"], epath + ".id");
          if (!ep.id.empty() && !seen_pairs.insert(ep.id).second)
            violate(epath + ".id", "duplicate event pair id '" + ep.id + "'");
          const std::string tid = c.id + "/" + ep.id;
          bool both = true;
          for (auto pol : kPolarities) {
            const std::string key(to_string(pol));
            const auto tn = en[key];
            if (!tn || tn.IsNull()) {
              violate(epath, "event pair '" + ep.id + "' is missing its " + key + "_template");
              both = false;
              continue;
            }
            auto tpl = statement_template(tn, epath + "." + key, tid + "/" + key);
            (pol == Polarity::positive ? ep.positive_template : ep.negative_template) = std::move(tpl);
          }
          if (both) {
            for (const auto& [fk, texts] : ep.positive_template.forms) {
              auto other = ep.negative_template.forms.find(fk);
              if (other == ep.negative_template.forms.end()) continue;
              for (const auto& [lang, text] : texts) {
                auto o = other->second.find(lang);
                if (o != other->second.end() && o->second == text)
                  violate(epath, "event pair '" + ep.id + "' has identical positive and negative [" +
                                     lang + "] templates");
              }
            }
          }
          c.event_pairs.push_back(std::move(ep));
        }
      }
      cb.categories.push_back(std::move(c));
    }
    return cb;
  }
};

}  // namespace detail

inline Codebook parse_codebook(const std::string& text, const std::string& source = "<codebook>") {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  detail::CodebookReader reader;
  Codebook cb;
  try {
    cb = reader.codebook(root);
  } catch (const YAML::Exception& e) {
    throw ParseError(source + ": " + e.what());
  }
  if (!reader.violations.empty()) throw ValidationError(std::move(reader.violations));
  return cb;
}

inline Codebook load_codebook(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return parse_codebook(text, path.string());
}

inline std::string render_statement(const StatementTemplate& tpl, const Entity& entity, Role role,
                                    Frame frame, const std::string& language) {
  const auto* name = entity.name_in(language);
  if (!name)
    throw ValidationError({"entity '" + entity.id + "' has no display name for language '" +
                           language + "'"});
  const auto* form = tpl.resolve(role, frame, language);
  if (!form)
    throw ValidationError({"template " + tpl.id + " has no " + std::string(to_string(role)) + "." +
                           std::string(to_string(frame)) + " form for language '" + language + "'"});
  std::string out = *form;
  auto pos = out.find(kEntitySlot);
  if (pos == std::string::npos || detail::count_slots(out) != 1)
    throw ValidationError({"template " + tpl.id + " [" + language + "] must contain exactly one " +
                           std::string(kEntitySlot) + " slot"});
  out.replace(pos, kEntitySlot.size(), *name);
  return out;
}

inline std::string make_statement_id(const StatementRecord& r) {
  std::string key;
  for (std::string_view part :
       {std::string_view(r.topic_id), std::string_view(r.category_id),
        std::string_view(r.event_pair_id), to_string(r.polarity), std::string_view(r.entity_id),
        to_string(r.role), to_string(r.frame), std::string_view(r.language),
        std::string_view(r.text)}) {
    key += part;
    key += '\x1f';
  }
  return sha256_hex(key).substr(0, 16);
}

// Order: category, event pair, polarity, role, frame, language, then entity_a before entity_b.
inline std::vector<StatementRecord> generate_dataset(const Codebook& cb, const std::set<Role>& roles,
                                                     const std::set<Frame>& frames,
                                                     const std::set<std::string>& languages) {
  std::vector<std::string> errors;
  for (const auto& lang : languages)
    for (const auto& e : cb.entities)
      if (!e.name_in(lang))
        errors.push_back("entity '" + e.id + "' has no display name for language '" + lang + "'");
  for (const auto& c : cb.categories)
    for (const auto& p : c.event_pairs)
      for (auto pol : kPolarities)
        for (auto r : roles)
          for (auto f : frames)
            for (const auto& lang : languages)
              if (!p.for_polarity(pol).resolve(r, f, lang))
                errors.push_back("template " + p.for_polarity(pol).id + " cannot resolve role=" +
                                 std::string(to_string(r)) + " frame=" + std::string(to_string(f)) +
                                 " language=" + lang);
  if (!errors.empty()) throw ValidationError(std::move(errors));

  std::vector<StatementRecord> out;
  for (const auto& c : cb.categories)
    for (const auto& p : c.event_pairs)
      for (auto pol : kPolarities)
        for (auto r : roles)
          for (auto f : frames)
            for (const auto& lang : languages) {
              std::array<StatementRecord, 2> pair;
              for (std::size_t i = 0; i < 2; ++i) {
                auto& rec = pair[i];
                rec.topic_id = cb.topic_id;
                rec.category_id = c.id;
                rec.event_pair_id = p.id;
                rec.polarity = pol;
                rec.entity_id = cb.entities[i].id;
                rec.role = r;
                rec.frame = f;
                rec.language = lang;
                rec.text = render_statement(p.for_polarity(pol), cb.entities[i], r, f, lang);
                rec.statement_id = make_statement_id(rec);
              }
              pair[0].mirror_id = pair[1].statement_id;
              pair[1].mirror_id = pair[0].statement_id;
              out.push_back(std::move(pair[0]));
              out.push_back(std::move(pair[1]));
            }
  return out;
}

// Re-render a record's template in another language, keeping all other coordinates.
inline std::string render_translation(const Codebook& cb, const StatementRecord& s,
                                      const std::string& language) {
  const auto* e = cb.find_entity(s.entity_id);
  if (!e) throw ValidationError({"statement " + s.statement_id + " references unknown entity '" + s.entity_id + "'"});
  return render_statement(cb.find_template(s.category_id, s.event_pair_id, s.polarity), *e, s.role,
                          s.frame, language);
}

// ---- dataset JSONL ----------------------------------------------------------

inline nlohmann::ordered_json to_json(const StatementRecord& r) {
  nlohmann::ordered_json j;
  j["statement_id"] = r.statement_id;
  j["topic_id"] = r.topic_id;
  j["category_id"] = r.category_id;
  j["event_pair_id"] = r.event_pair_id;
  j["polarity"] = to_string(r.polarity);
  j["entity_id"] = r.entity_id;
  j["role"] = to_string(r.role);
  j["frame"] = to_string(r.frame);
  j["language"] = r.language;
  j["text"] = r.text;
  j["mirror_id"] = r.mirror_id;
  return j;
}

inline StatementRecord statement_from_json(const nlohmann::json& j) {
  StatementRecord r;
  r.statement_id = j.at("statement_id").get<std::string>();
  r.topic_id = j.at("topic_id").get<std::string>();
  r.category_id = j.at("category_id").get<std::string>();
  r.event_pair_id = j.at("event_pair_id").get<std::string>();
  auto pol = parse_polarity(j.at("polarity").get<std::string>());
  auto role = parse_role(j.at("role").get<std::string>());
  auto frame = parse_frame(j.at("frame").get<std::string>());
  if (!pol || !role || !frame) throw ParseError("statement " + r.statement_id + ": bad enum value");
  r.polarity = *pol;
  r.role = *role;
  r.frame = *frame;
  r.entity_id = j.at("entity_id").get<std::string>();
  r.language = j.at("language").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.mirror_id = j.at("mirror_id").get<std::string>();
  return r;
}

inline std::string dataset_to_jsonl(const std::vector<StatementRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

inline std::vector<StatementRecord> dataset_from_jsonl(std::string_view text) {
  std::vector<StatementRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(statement_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<StatementRecord> load_dataset(const std::filesystem::path& path) {
  return dataset_from_jsonl(read_file(path));
}

inline std::unordered_map<std::string, const StatementRecord*> index_by_id(
    const std::vector<StatementRecord>& dataset) {
  std::unordered_map<std::string, const StatementRecord*> idx;
  idx.reserve(dataset.size());
  for (const auto& r : dataset) idx.emplace(r.statement_id, &r);
  return idx;
}

}  // namespace bipolar
