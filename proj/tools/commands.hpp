#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cli_config.hpp"

namespace edist::cli {

/// CSV plot data: a header row plus string cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct Artifacts {
  json result = json::object();
  std::optional<Table> table;
};

struct Command {
  std::string name;
  std::string summary;
  std::vector<Param> params;
  std::function<Artifacts(const Config&)> run;
};

/// Every subcommand with its full schema (globals included).
const std::vector<Command>& commands();

/// Shortest text that reads back as the same double.
std::string cell(double v);
std::string cell(std::size_t v);

}  // namespace edist::cli
