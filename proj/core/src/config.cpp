#include "vcap/config.hpp"

#include "vcap/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdlib>
#include <set>
#include <sstream>

namespace vcap {

namespace pt = boost::property_tree;

namespace {

Error config_error(const std::string& msg) { return Error(ErrorKind::Config, msg); }

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& where, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw config_error(where + ": invalid number '" + text + "'");
  return v;
}

std::int64_t parse_int(const std::string& where, const std::string& text) {
  return parse_number<std::int64_t>(where, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

std::string expand_env(const std::string& value, const EnvLookup& env) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto open = value.find("${", pos);
    if (open == std::string::npos) {
      out.append(value, pos);
      return out;
    }
    auto close = value.find('}', open + 2);
    if (close == std::string::npos) throw config_error("unterminated ${ in '" + value + "'");
    std::string name = value.substr(open + 2, close - open - 2);
    auto v = env(name);
    if (!v) throw config_error("environment variable '" + name + "' is not set");
    out.append(value, pos, open - pos);
    out += *v;
    pos = close + 1;
  }
}

void RunConfig::validate() const {
  filter.validate();
  if (workers < 1) throw config_error("workers must be at least 1");
  if (agent_parallelism < 1) throw config_error("agent_parallelism must be at least 1");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const EnvLookup& env) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw config_error(std::string("config: ") + e.what());
  }

  RunConfig cfg;
  std::set<std::string> agent_names;
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw config_error("config: key '" + section + "' outside a section");
    auto value = [&](const pt::ptree& v) { return expand_env(trim(v.data()), env); };
    const std::string where_prefix = "[" + section + "] ";

    if (section == "run") {
      for (const auto& [key, v] : body) {
        std::string val = value(v);
        std::string where = where_prefix + key;
        if (key == "manifest") {
          cfg.manifest = resolve(base_dir, val);
        } else if (key == "run_dir") {
          cfg.run_dir = resolve(base_dir, val);
        } else if (key == "workers") {
          auto n = parse_int(where, val);
          if (n < 1) throw config_error(where + " must be at least 1");
          cfg.workers = static_cast<std::size_t>(n);
        } else if (key == "agent_parallelism") {
          auto n = parse_int(where, val);
          if (n < 1) throw config_error(where + " must be at least 1");
          cfg.agent_parallelism = static_cast<std::size_t>(n);
        } else if (key == "video_frames") {
          auto n = parse_int(where, val);
          if (n < 0) throw config_error(where + " must be non-negative");
          cfg.video_frames = static_cast<std::size_t>(n);
        } else if (key == "policy") {
          auto p = parse_failure_policy(val);
          if (!p) throw config_error(where + ": expected strict or best-effort");
          cfg.policy = *p;
        } else if (key == "mock") {
          cfg.mock_fixture = resolve(base_dir, val);
        } else if (key == "seed") {
          cfg.seed = static_cast<std::uint64_t>(parse_int(where, val));
        } else if (key == "template_dir") {
          cfg.agents.template_dir = resolve(base_dir, val);
        } else {
          throw config_error("unknown key " + where);
        }
      }
    } else if (section == "filter") {
      for (const auto& [key, v] : body) {
        std::string val = value(v);
        std::string where = where_prefix + key;
        if (key == "min_short_edge") {
          cfg.filter.min_short_edge = parse_int(where, val);
        } else if (key == "max_aspect_ratio") {
          cfg.filter.max_aspect_ratio = parse_number<double>(where, val);
        } else if (key == "min_video_height") {
          cfg.filter.min_video_height = parse_int(where, val);
        } else {
          throw config_error("unknown key " + where);
        }
      }
    } else if (section.rfind("profiles.", 0) == 0) {
      ModelProfile p;
      p.name = section.substr(9);
      for (const auto& [key, v] : body) {
        std::string val = value(v);
        std::string where = where_prefix + key;
        if (key == "endpoint") {
          p.endpoint = val;
        } else if (key == "model") {
          p.model_id = val;
        } else if (key == "api_key") {
          p.api_key = val;
        } else if (key == "price_in") {
          p.price_in = Money::parse(val);
        } else if (key == "price_out") {
          p.price_out = Money::parse(val);
        } else if (key == "max_concurrency") {
          p.max_concurrency = static_cast<int>(parse_int(where, val));
        } else if (key == "timeout") {
          p.timeout = parse_number<double>(where, val);
        } else if (key == "max_retries") {
          p.max_retries = static_cast<int>(parse_int(where, val));
        } else {
          throw config_error("unknown key " + where);
        }
      }
      if (p.model_id.empty()) throw config_error(where_prefix + "needs a model");
      cfg.profiles.add(std::move(p));
    } else if (section.rfind("agents.", 0) == 0) {
      AgentOverride o;
      o.name = section.substr(7);
      if (o.name.empty() || !agent_names.insert(o.name).second) {
        throw config_error("duplicate or empty agent section " + where_prefix);
      }
      for (const auto& [key, v] : body) {
        std::string val = value(v);
        std::string where = where_prefix + key;
        if (key == "template_path") {
          o.template_path = resolve(base_dir, val);
        } else if (key == "category") {
          o.category = parse_category(val);
          if (!o.category) throw config_error(where + ": unknown category '" + val + "'");
        } else if (key == "modality") {
          o.modality = parse_modality(val);
          if (!o.modality) throw config_error(where + ": unknown modality '" + val + "'");
        } else if (key == "media") {
          o.media = parse_media_constraint(val);
          if (!o.media) throw config_error(where + ": expected any, image or video");
        } else if (key == "model_binding") {
          o.model_binding = val;
        } else if (key == "max_output_tokens") {
          o.max_output_tokens = static_cast<int>(parse_int(where, val));
        } else {
          throw config_error("unknown key " + where);
        }
      }
      cfg.agents.agents.push_back(std::move(o));
    } else if (section.rfind("workflows.", 0) == 0) {
      auto domain = parse_domain(section.substr(10));
      if (!domain) throw config_error("unknown domain in section " + where_prefix);
      WorkflowSpec spec = cfg.workflows.workflow_for(*domain);
      for (const auto& [key, v] : body) {
        std::string val = value(v);
        if (key == "agents") {
          spec.functional_agents = split_list(val);
        } else if (key == "summary") {
          spec.summary_agent = val;
        } else {
          throw config_error("unknown key " + where_prefix + key);
        }
      }
      cfg.workflows.override_row(std::move(spec));
    } else {
      throw config_error("unknown config section [" + section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw config_error(e.what());
  }
  return parse_config(text, path.parent_path(), env);
}

}  // namespace vcap
