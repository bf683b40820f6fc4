#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>

#include <CLI11.hpp>

#include "commands.hpp"
#include "edist/error.hpp"
#include "edist/measures.hpp"

namespace fs = std::filesystem;
using namespace edist::cli;

namespace {

const std::string kVersion = std::string("edist ") + EDIST_VERSION;

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

std::string render_csv(const Config& cfg, const Table& t) {
  std::string out = "# " + kVersion + "\n# command: " + cfg.command() + "\n# config: " + cfg.provenance().dump() + "\n";
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_escape(cells[i]);
    out += "\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

// Files are written next to their targets and renamed only after every
// artifact of the run is complete.
class PendingOutputs {
 public:
  ~PendingOutputs() {
    for (const auto& [tmp, target] : files_) {
      std::error_code ec;
      fs::remove(tmp, ec);
    }
  }
  void stage(const std::string& target, const std::string& content) {
    const std::string tmp = target + ".partial";
    files_.emplace_back(tmp, target);
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    out.close();
    if (!out) throw edist::Error("cannot write '" + target + "'");
  }
  void commit() {
    for (const auto& [tmp, target] : files_) fs::rename(tmp, target);
    files_.clear();
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

int run(const Command& cmd, const Config& cfg) {
  static const std::set<std::string> kNoTable{"energy", "halfspace", "tstat", "test"};
  if (cfg.has("csv") && kNoTable.count(cmd.name)) {
    throw ConfigError("'" + cmd.name + "' produces no CSV output (--csv)");
  }
  const Artifacts a = cmd.run(cfg);
  json doc = {{"command", cmd.name}, {"config", cfg.provenance()}, {"result", a.result}, {"version", kVersion}};
  const std::string text = doc.dump(2) + "\n";
  PendingOutputs pending;
  if (cfg.has("output")) pending.stage(cfg.str("output"), text);
  if (cfg.has("csv") && a.table) pending.stage(cfg.str("csv"), render_csv(cfg, *a.table));
  pending.commit();
  if (!cfg.has("output")) std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized energy distances, halfspace discrepancies and two-sample experiments", "edist"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::optional<std::string> config_file;
    std::map<std::string, std::string> raw;
    std::vector<std::pair<std::string, CLI::Option*>> options;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& cmd : commands()) {
    auto b = std::make_unique<Bound>();
    b->cmd = &cmd;
    b->sub = app.add_subcommand(cmd.name, cmd.summary);
    b->sub->add_option("--config", b->config_file, "JSON config file; flags override its values");
    for (const auto& p : cmd.params) {
      auto* opt = b->sub->add_option(p.positional ? p.key : flag_name(p.key), b->raw[p.key], p.help);
      b->options.emplace_back(p.key, opt);
    }
    bound.push_back(std::move(b));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    std::optional<Config> cfg;
    try {
      std::vector<std::pair<std::string, std::string>> flags;
      for (const auto& [key, opt] : b->options) {
        if (opt->count() > 0) flags.emplace_back(key, b->raw[key]);
      }
      cfg.emplace(resolve_config(b->cmd->name, b->cmd->params, b->config_file, flags));
      return run(*b->cmd, *cfg);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    } catch (const edist::CsvError& e) {
      std::cerr << "input error: " << e.what() << "\n";
      return 2;
    } catch (const edist::InvalidArgument& e) {
      std::cerr << "invalid argument: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
