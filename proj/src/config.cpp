#include "mobitok/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "mobitok/error.hpp"

namespace mobitok {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

std::string parse_quoted_string(const std::string& text,
                                const std::string& where) {
  if (text.size() < 2 || text.front() != '"' || text.back() != '"') {
    throw ConfigError("[config] " + where + ": malformed string " + text);
  }
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    const char c = text[i];
    if (c == '\\') {
      if (i + 2 >= text.size() + 1) {
        throw ConfigError("[config] " + where + ": dangling escape");
      }
      const char next = text[++i];
      switch (next) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        default:
          throw ConfigError("[config] " + where + ": unsupported escape \\" +
                            std::string(1, next));
      }
    } else if (c == '"') {
      throw ConfigError("[config] " + where + ": stray quote");
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool looks_like_integer(const std::string& text) {
  std::size_t i = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (i >= text.size()) return false;
  for (; i < text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
  }
  return true;
}

std::vector<std::string> split_array_items(const std::string& inner,
                                           const std::string& where) {
  std::vector<std::string> items;
  std::string cur;
  bool in_string = false;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    const char c = inner[i];
    if (in_string) {
      cur.push_back(c);
      if (c == '\\' && i + 1 < inner.size()) {
        cur.push_back(inner[++i]);
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
      cur.push_back(c);
    } else if (c == ',') {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_string) {
    throw ConfigError("[config] " + where + ": unterminated string in array");
  }
  const std::string last = trim(cur);
  if (!last.empty()) items.push_back(last);
  for (const auto& item : items) {
    if (item.empty()) {
      throw ConfigError("[config] " + where + ": empty array element");
    }
  }
  return items;
}

TomlValue parse_value(const std::string& text, const std::string& where) {
  if (text.empty()) {
    throw ConfigError("[config] " + where + ": missing value");
  }
  if (text.front() == '"') {
    return TomlValue{parse_quoted_string(text, where)};
  }
  if (text.front() == '[') {
    if (text.back() != ']') {
      throw ConfigError("[config] " + where +
                        ": arrays must close on the same line");
    }
    std::vector<TomlValue> items;
    for (const auto& item :
         split_array_items(text.substr(1, text.size() - 2), where)) {
      items.push_back(parse_value(item, where));
    }
    return TomlValue{std::move(items)};
  }
  if (text == "true") return TomlValue{true};
  if (text == "false") return TomlValue{false};
  if (looks_like_integer(text)) {
    return TomlValue{static_cast<std::int64_t>(std::stoll(text))};
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(text, &used);
    if (used == text.size()) return TomlValue{d};
  } catch (const std::exception&) {
  }
  throw ConfigError("[config] " + where + ": cannot parse value '" + text +
                    "'");
}

}  // namespace

std::string TomlValue::as_string(const std::string& field) const {
  if (const auto* s = std::get_if<std::string>(&data)) return *s;
  throw ConfigError("[config] field '" + field + "' must be a string");
}

std::int64_t TomlValue::as_integer(const std::string& field) const {
  if (const auto* i = std::get_if<std::int64_t>(&data)) return *i;
  throw ConfigError("[config] field '" + field + "' must be an integer");
}

double TomlValue::as_float(const std::string& field) const {
  if (const auto* d = std::get_if<double>(&data)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&data)) {
    return static_cast<double>(*i);
  }
  throw ConfigError("[config] field '" + field + "' must be a number");
}

bool TomlValue::as_bool(const std::string& field) const {
  if (const auto* b = std::get_if<bool>(&data)) return *b;
  throw ConfigError("[config] field '" + field + "' must be a boolean");
}

const std::vector<TomlValue>& TomlValue::as_array(
    const std::string& field) const {
  if (const auto* a = std::get_if<std::vector<TomlValue>>(&data)) return *a;
  throw ConfigError("[config] field '" + field + "' must be an array");
}

TomlTable parse_toml(std::istream& in, const std::string& origin) {
  TomlTable table;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    const std::string text = trim(strip_comment(line));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) {
        throw ConfigError("[config] " + where + ": malformed section header");
      }
      section = trim(text.substr(1, text.size() - 2));
      if (section.empty()) {
        throw ConfigError("[config] " + where + ": empty section name");
      }
      table[section];
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("[config] " + where + ": expected key = value");
    }
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("[config] " + where + ": empty key");
    }
    table[section][key] = parse_value(trim(text.substr(eq + 1)), where);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[config] cannot open config file: " + path);
  return parse_toml(in, path);
}

TomlValue parse_toml_scalar(const std::string& text) {
  return parse_value(trim(text), "override");
}

void apply_override(TomlTable& table, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("[config] override must look like section.key=value: " +
                      spec);
  }
  const std::string path = trim(spec.substr(0, eq));
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError("[config] override key must be section.key: " + spec);
  }
  table[path.substr(0, dot)][path.substr(dot + 1)] =
      parse_toml_scalar(spec.substr(eq + 1));
}

namespace {

const std::map<std::string, TomlValue>* find_section(const TomlTable& table,
                                                     const std::string& name) {
  auto it = table.find(name);
  return it == table.end() ? nullptr : &it->second;
}

template <typename Fn>
void with_key(const TomlTable& table, const std::string& section,
              const std::string& key, Fn&& fn) {
  const auto* sec = find_section(table, section);
  if (!sec) return;
  auto it = sec->find(key);
  if (it == sec->end()) return;
  fn(it->second, section + "." + key);
}

std::vector<double> float_array(const TomlValue& value,
                                const std::string& field) {
  std::vector<double> out;
  for (const auto& item : value.as_array(field)) {
    out.push_back(item.as_float(field));
  }
  return out;
}

std::vector<int> int_array(const TomlValue& value, const std::string& field) {
  std::vector<int> out;
  for (const auto& item : value.as_array(field)) {
    out.push_back(static_cast<int>(item.as_integer(field)));
  }
  return out;
}

void check_known_keys(const TomlTable& table) {
  static const std::map<std::string, std::vector<std::string>> known = {
      {"paths",
       {"checkins", "locations", "embeddings", "output_dir", "templates_dir"}},
      {"ingest",
       {"format", "min_visits", "gap_hours", "min_len", "f_train", "f_val",
        "f_test"}},
      {"describe", {"radius_km", "k", "geohash_precision"}},
      {"embed", {"dim"}},
      {"quantizer",
       {"levels", "codebook_size", "code_dim", "alpha", "encoder_hidden",
        "learning_rate", "batch_size", "epochs", "seed", "codebook_init",
        "dead_code_reseed"}},
      {"sft", {"ratios", "template_version", "seed",
               "timezone_offset_minutes"}},
      {"decode", {"order", "smoothing_k", "width", "topn"}},
      {"eval", {"ks", "ratios", "seed"}},
      {"sweep", {"k_values", "l_values"}},
  };
  for (const auto& [section, keys] : table) {
    auto kit = known.find(section);
    if (kit == known.end()) {
      throw ConfigError("[config] unknown section '" + section + "'");
    }
    for (const auto& [key, _] : keys) {
      if (std::find(kit->second.begin(), kit->second.end(), key) ==
          kit->second.end()) {
        throw ConfigError("[config] unknown key '" + section + "." + key +
                          "'");
      }
    }
  }
}

}  // namespace

PipelineConfig pipeline_config_from_table(const TomlTable& table) {
  check_known_keys(table);
  PipelineConfig cfg;
  with_key(table, "paths", "checkins",
           [&](const TomlValue& v, const std::string& f) {
             cfg.paths.checkins = v.as_string(f);
           });
  with_key(table, "paths", "locations",
           [&](const TomlValue& v, const std::string& f) {
             cfg.paths.locations = v.as_string(f);
           });
  with_key(table, "paths", "embeddings",
           [&](const TomlValue& v, const std::string& f) {
             cfg.paths.embeddings = v.as_string(f);
           });
  with_key(table, "paths", "output_dir",
           [&](const TomlValue& v, const std::string& f) {
             cfg.paths.output_dir = v.as_string(f);
           });
  with_key(table, "paths", "templates_dir",
           [&](const TomlValue& v, const std::string& f) {
             cfg.paths.templates_dir = v.as_string(f);
           });

  with_key(table, "ingest", "format",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.format = v.as_string(f);
           });
  with_key(table, "ingest", "min_visits",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.min_visits =
                 static_cast<std::size_t>(v.as_integer(f));
           });
  with_key(table, "ingest", "gap_hours",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.gap_hours = v.as_float(f);
           });
  with_key(table, "ingest", "min_len",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.min_len = static_cast<std::size_t>(v.as_integer(f));
           });
  with_key(table, "ingest", "f_train",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.f_train = v.as_float(f);
           });
  with_key(table, "ingest", "f_val",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.f_val = v.as_float(f);
           });
  with_key(table, "ingest", "f_test",
           [&](const TomlValue& v, const std::string& f) {
             cfg.ingest.f_test = v.as_float(f);
           });

  with_key(table, "describe", "radius_km",
           [&](const TomlValue& v, const std::string& f) {
             cfg.describe.radius_km = v.as_float(f);
           });
  with_key(table, "describe", "k",
           [&](const TomlValue& v, const std::string& f) {
             cfg.describe.k = static_cast<std::size_t>(v.as_integer(f));
           });
  with_key(table, "describe", "geohash_precision",
           [&](const TomlValue& v, const std::string& f) {
             cfg.describe.geohash_precision =
                 static_cast<int>(v.as_integer(f));
           });

  with_key(table, "embed", "dim",
           [&](const TomlValue& v, const std::string& f) {
             cfg.embed.dim = static_cast<int>(v.as_integer(f));
           });

  with_key(table, "quantizer", "levels",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.levels = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "quantizer", "codebook_size",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.codebook_size = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "quantizer", "code_dim",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.code_dim = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "quantizer", "alpha",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.alpha = v.as_float(f);
           });
  with_key(table, "quantizer", "encoder_hidden",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.encoder_hidden = int_array(v, f);
           });
  with_key(table, "quantizer", "learning_rate",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.learning_rate = v.as_float(f);
           });
  with_key(table, "quantizer", "batch_size",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.batch_size = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "quantizer", "epochs",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.epochs = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "quantizer", "seed",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.seed =
                 static_cast<std::uint64_t>(v.as_integer(f));
           });
  with_key(table, "quantizer", "codebook_init",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.codebook_init =
                 codebook_init_from_string(v.as_string(f));
           });
  with_key(table, "quantizer", "dead_code_reseed",
           [&](const TomlValue& v, const std::string& f) {
             cfg.quantizer.dead_code_reseed = v.as_bool(f);
           });

  with_key(table, "sft", "ratios",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sft.recovery_ratios = float_array(v, f);
           });
  with_key(table, "sft", "template_version",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sft.template_version = v.as_string(f);
           });
  with_key(table, "sft", "seed",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sft.seed = static_cast<std::uint64_t>(v.as_integer(f));
           });
  with_key(table, "sft", "timezone_offset_minutes",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sft.timezone_offset_minutes =
                 static_cast<int>(v.as_integer(f));
           });

  with_key(table, "decode", "order",
           [&](const TomlValue& v, const std::string& f) {
             cfg.decode.order = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "decode", "smoothing_k",
           [&](const TomlValue& v, const std::string& f) {
             cfg.decode.smoothing_k = v.as_float(f);
           });
  with_key(table, "decode", "width",
           [&](const TomlValue& v, const std::string& f) {
             cfg.decode.width = static_cast<int>(v.as_integer(f));
           });
  with_key(table, "decode", "topn",
           [&](const TomlValue& v, const std::string& f) {
             cfg.decode.topn = static_cast<int>(v.as_integer(f));
           });

  with_key(table, "eval", "ks", [&](const TomlValue& v, const std::string& f) {
    cfg.eval.ks.clear();
    for (int k : int_array(v, f)) {
      cfg.eval.ks.push_back(static_cast<std::size_t>(k));
    }
  });
  with_key(table, "eval", "ratios",
           [&](const TomlValue& v, const std::string& f) {
             cfg.eval.ratios = float_array(v, f);
           });
  with_key(table, "eval", "seed",
           [&](const TomlValue& v, const std::string& f) {
             cfg.eval.seed = static_cast<std::uint64_t>(v.as_integer(f));
           });

  with_key(table, "sweep", "k_values",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sweep.k_values = int_array(v, f);
           });
  with_key(table, "sweep", "l_values",
           [&](const TomlValue& v, const std::string& f) {
             cfg.sweep.l_values = int_array(v, f);
           });

  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  checkin_format_from_string(ingest.format);
  if (ingest.min_visits < 1) {
    throw ConfigError("[config] ingest.min_visits must be >= 1");
  }
  if (!(ingest.gap_hours > 0.0)) {
    throw ConfigError("[config] ingest.gap_hours must be > 0");
  }
  if (ingest.min_len < 1) {
    throw ConfigError("[config] ingest.min_len must be >= 1");
  }
  if (!(ingest.f_train > 0.0) || !(ingest.f_val >= 0.0) ||
      !(ingest.f_test > 0.0) ||
      std::abs(ingest.f_train + ingest.f_val + ingest.f_test - 1.0) > 1e-9) {
    throw ConfigError(
        "[config] ingest split fractions must be positive and sum to 1");
  }
  if (!(describe.radius_km > 0.0)) {
    throw ConfigError("[config] describe.radius_km must be > 0");
  }
  if (describe.k < 1) throw ConfigError("[config] describe.k must be >= 1");
  if (describe.geohash_precision < 1 || describe.geohash_precision > 12) {
    throw ConfigError("[config] describe.geohash_precision must be in [1,12]");
  }
  if (embed.dim < 8) throw ConfigError("[config] embed.dim must be >= 8");
  quantizer.validate();
  for (double r : sft.recovery_ratios) {
    if (!(r > 0.0) || !(r < 1.0)) {
      throw ConfigError("[config] sft.ratios entries must be inside (0, 1)");
    }
  }
  if (decode.order < 1) throw ConfigError("[config] decode.order must be >= 1");
  if (decode.smoothing_k < 0.0) {
    throw ConfigError("[config] decode.smoothing_k must be >= 0");
  }
  if (decode.width < 1) throw ConfigError("[config] decode.width must be >= 1");
  if (decode.topn < 1) throw ConfigError("[config] decode.topn must be >= 1");
  if (eval.ks.empty()) throw ConfigError("[config] eval.ks must be non-empty");
  for (std::size_t k : eval.ks) {
    if (k < 1) throw ConfigError("[config] eval.ks entries must be >= 1");
  }
  for (double r : eval.ratios) {
    if (!(r > 0.0) || !(r < 1.0)) {
      throw ConfigError("[config] eval.ratios entries must be inside (0, 1)");
    }
  }
  for (int k : sweep.k_values) {
    if (k < 1) throw ConfigError("[config] sweep.k_values must be >= 1");
  }
  for (int l : sweep.l_values) {
    if (l < 1 || l > 26) {
      throw ConfigError("[config] sweep.l_values must be in [1, 26]");
    }
  }
}

PipelineConfig load_pipeline_config(
    const std::string& path, const std::vector<std::string>& overrides) {
  TomlTable table = parse_toml_file(path);
  for (const auto& spec : overrides) apply_override(table, spec);
  if (const char* env_seed = std::getenv("MOBITOK_SEED")) {
    const TomlValue seed = parse_toml_scalar(env_seed);
    table["quantizer"]["seed"] = seed;
    table["sft"]["seed"] = seed;
    table["eval"]["seed"] = seed;
  }
  return pipeline_config_from_table(table);
}

}  // namespace mobitok
