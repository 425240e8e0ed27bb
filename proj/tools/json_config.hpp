#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <istream>
#include <string>
#include <vector>

namespace glk::cli {

// Reads `--config` files as a JSON object. Top-level scalar and array entries
// map to the long option of the same name (underscores read as dashes) on the
// subcommand being run. An object-valued entry is a per-subcommand section and
// is only applied when its key names that subcommand; other sections are
// ignored so one file can configure a whole pipeline.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const CLI::Option* opt : app->get_options()) {
      if (opt->get_lnames().empty() || opt->get_configurable() == false) continue;
      const std::string& name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        out[name] = res.size() == 1 ? nlohmann::ordered_json(res.front()) : nlohmann::ordered_json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        out[name] = opt->get_default_str();
      }
    }
    return out.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(input);
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("invalid JSON config: ") + e.what());
    }
    if (!doc.is_object()) throw CLI::ConversionError("JSON config must be an object");
    const auto parsed = root_->get_subcommands();
    if (parsed.empty()) return {};
    std::vector<CLI::ConfigItem> items;
    add_items(doc, parsed.front()->get_name(), items, true);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_null()) throw CLI::ConversionError("JSON config values may not be null");
    if (v.is_structured()) throw CLI::ConversionError("nested JSON value in config");
    return v.dump();
  }

  static void add_items(const nlohmann::json& obj, const std::string& section, std::vector<CLI::ConfigItem>& items,
                        bool top) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_object()) {
        if (top && key == section) add_items(value, section, items, false);
        else if (!top) throw CLI::ConversionError("nested JSON object in config section " + section);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = {section};
      item.name = key;
      std::replace(item.name.begin(), item.name.end(), '_', '-');
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  const CLI::App* root_;
};

}  // namespace glk::cli
