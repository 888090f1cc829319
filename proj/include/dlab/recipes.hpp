#pragma once

#include <string>
#include <vector>

#include "dlab/config.hpp"

namespace dlab {

struct Recipe {
  std::string name;
  std::string description;
  std::string config_text;  // flat key=value body, parseable by parse_config_text
};

/// Built-in figure-reproducing configurations, desk scale.
const std::vector<Recipe>& recipes();

const Recipe& find_recipe(const std::string& name);

}  // namespace dlab
