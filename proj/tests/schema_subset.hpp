// SPDX-License-Identifier: MIT
#pragma once

// Validator for the subset of JSON Schema draft-07 used by
// schema/report.schema.json: type, enum, required, properties, items
// (single-schema form), minItems, minimum, oneOf, and $ref into
// #/definitions. Annotation keywords ($schema, title, description,
// definitions) are ignored. Unknown constraint keywords fail loudly so the
// schema cannot silently outgrow the validator.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace schema_subset {

using nlohmann::json;

class Validator {
 public:
  explicit Validator(json schema) : root_(std::move(schema)) {}

  /// Returns the list of violations ("path: message"); empty means valid.
  std::vector<std::string> validate(const json& value) const {
    std::vector<std::string> errors;
    check(root_, value, "$", errors);
    return errors;
  }

 private:
  static bool matches_type(const std::string& type, const json& v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
      if (v.is_number_integer()) return true;
      // Draft-07 treats 3.0 as an integer.
      return v.is_number_float() &&
             std::floor(v.get<double>()) == v.get<double>();
    }
    throw std::runtime_error("schema uses unsupported type: " + type);
  }

  const json& resolve(const json& schema) const {
    if (!schema.contains("$ref")) return schema;
    const std::string ref = schema.at("$ref").get<std::string>();
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) {
      throw std::runtime_error("schema uses unsupported $ref: " + ref);
    }
    return root_.at("definitions").at(ref.substr(prefix.size()));
  }

  void check(const json& raw_schema, const json& value, const std::string& path,
             std::vector<std::string>& errors) const {
    const json& schema = resolve(raw_schema);
    for (const auto& [key, spec] : schema.items()) {
      if (key == "$schema" || key == "title" || key == "description" ||
          key == "definitions" || key == "$ref") {
        continue;
      }
      if (key == "type") {
        if (!matches_type(spec.get<std::string>(), value)) {
          errors.push_back(path + ": expected type " +
                           spec.get<std::string>());
        }
      } else if (key == "enum") {
        bool hit = false;
        for (const auto& option : spec) hit = hit || option == value;
        if (!hit) errors.push_back(path + ": value not in enum");
      } else if (key == "required") {
        if (value.is_object()) {
          for (const auto& name : spec) {
            if (!value.contains(name.get<std::string>())) {
              errors.push_back(path + ": missing required member " +
                               name.get<std::string>());
            }
          }
        }
      } else if (key == "properties") {
        if (value.is_object()) {
          for (const auto& [name, sub] : spec.items()) {
            if (value.contains(name)) {
              check(sub, value.at(name), path + "." + name, errors);
            }
          }
        }
      } else if (key == "items") {
        if (value.is_array()) {
          for (std::size_t i = 0; i < value.size(); ++i) {
            check(spec, value.at(i), path + "[" + std::to_string(i) + "]",
                  errors);
          }
        }
      } else if (key == "minItems") {
        if (value.is_array() && value.size() < spec.get<std::size_t>()) {
          errors.push_back(path + ": fewer than minItems elements");
        }
      } else if (key == "minimum") {
        if (value.is_number() && value.get<double>() < spec.get<double>()) {
          errors.push_back(path + ": below minimum");
        }
      } else if (key == "oneOf") {
        int hits = 0;
        for (const auto& option : spec) {
          std::vector<std::string> sub;
          check(option, value, path, sub);
          if (sub.empty()) ++hits;
        }
        if (hits != 1) {
          errors.push_back(path + ": oneOf matched " + std::to_string(hits) +
                           " branches (want exactly 1)");
        }
      } else {
        throw std::runtime_error("schema uses unsupported keyword: " + key);
      }
    }
  }

  json root_;
};

}  // namespace schema_subset
