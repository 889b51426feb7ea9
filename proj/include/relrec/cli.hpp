#pragma once
// Command-line driver. Exit codes: 0 success, 1 engine error (message
// prefixed with its API code), 2 usage error.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relrec/engine.hpp"
#include "relrec/service.hpp"

namespace relrec {

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"relrec: relation discovery and recommendation over an art-historical catalogue"};
  app.name("relrec");
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::optional<std::string> config_path, manifest, out_dir, decisions;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--manifest", manifest, "dump manifest (overrides the config)");
  app.add_option("--seed", seed, "fold seed");
  app.add_option("--decisions", decisions, "decision log (JSON lines)");

  auto* ingest_cmd = app.add_subcommand("ingest", "load a dump and report counts");
  ingest_cmd->add_option("--out", out_dir, "output directory");
  auto* expand_cmd = app.add_subcommand("expand", "write the candidate pair tables");
  expand_cmd->add_option("--out", out_dir, "output directory");
  auto* eda_cmd = app.add_subcommand("eda", "write the relation statistics report");
  eda_cmd->add_option("--out", out_dir, "output directory");

  std::string spec = "auto", model = "auto", unit_name = "historian_pair";
  auto* train_cmd = app.add_subcommand("train", "train a model on all labeled pairs");
  train_cmd->add_option("--spec", spec, "feature spec or auto");
  train_cmd->add_option("--model", model, "lr, nb, dt or auto")->check(CLI::IsMember({"lr", "nb", "dt", "auto"}));
  train_cmd->add_option("--unit", unit_name, "historian_pair or collection_pair")
      ->check(CLI::IsMember({"historian_pair", "collection_pair", "historians", "collections"}));
  train_cmd->add_option("--out", out_dir, "output directory");

  bool grid_flag = false;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "cross-validate every model on every spec");
  evaluate_cmd->add_flag("--grid", grid_flag, "evaluate the full grid (default)");
  evaluate_cmd->add_option("--out", out_dir, "output directory");

  std::string entity;
  std::optional<std::size_t> limit;
  auto* recommend_cmd = app.add_subcommand("recommend", "ranked recommendations for one entity");
  recommend_cmd->add_option("--entity", entity, "historian or collection id")->required();
  recommend_cmd->add_option("--limit", limit, "maximum number of results");
  recommend_cmd->add_option("--out", out_dir, "output directory");

  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--port", port, "listen port");
  serve_cmd->add_option("--host", host, "listen address");

  std::string what;
  auto* export_cmd = app.add_subcommand("export", "write a snapshot or derived artifacts");
  export_cmd->add_option("--what", what, "store, datasets or report")
      ->required()
      ->check(CLI::IsMember({"store", "datasets", "report"}));
  export_cmd->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    RunConfig cfg = config_path ? load_run_config(*config_path) : RunConfig{};
    if (manifest) cfg.manifest = *manifest;
    if (seed) cfg.seed = *seed;
    if (decisions) cfg.decisions_log = *decisions;
    if (out_dir) cfg.out = *out_dir;
    Engine engine(cfg);
    const auto& dir = engine.config().out;
    auto list = [&](const std::vector<std::filesystem::path>& files) {
      for (const auto& f : files) out << "wrote " << f.string() << '\n';
    };

    if (*ingest_cmd) {
      if (!engine.loaded()) throw Error(ErrorCode::missing_input, "ingest needs --manifest");
      auto summary = engine.ingest_summary();
      write_json_file(dir / "ingest.json", summary);
      std::ofstream amb(dir / "ambiguities.jsonl");
      for (const auto& a : engine.ambiguities()) amb << to_json(a).dump() << '\n';
      out << summary.dump(2) << '\n';
      list({dir / "ingest.json", dir / "ambiguities.jsonl"});
    } else if (*expand_cmd) {
      list(write_expand_artifacts(engine, dir));
    } else if (*eda_cmd) {
      auto files = write_eda_artifacts(engine, dir);
      write_report_text(out, engine.eda_report());
      list(files);
    } else if (*train_cmd) {
      Unit unit = *parse_unit(unit_name);
      auto m = engine.train(unit, spec, model);
      auto path = dir / ("model_" + std::string(to_string(unit)) + ".json");
      write_json_file(path, to_json(m));
      out << "trained " << to_string(m.kind) << " on " << m.spec.name << " (" << to_string(unit) << ")\n";
      list({path});
    } else if (*evaluate_cmd) {
      auto files = write_grid_artifacts(engine, dir);
      write_grid_table(out, engine.grid(Unit::historian_pair));
      write_grid_table(out, engine.grid(Unit::collection_pair));
      list(files);
    } else if (*recommend_cmd) {
      auto recs = engine.recommend(EntityId(entity), limit);
      std::filesystem::create_directories(dir);
      auto path = dir / ("recommendations_" + entity + ".jsonl");
      std::ofstream f(path);
      write_recommendations(f, recs);
      write_recommendations(out, recs);
      list({path});
    } else if (*serve_cmd) {
      Service service(engine);
      out << "serving on " << host << ':' << port << std::endl;
      service.run(host, port);
    } else if (*export_cmd) {
      if (what == "store") {
        out << "wrote " << engine.export_snapshot(dir / "snapshot").string() << '\n';
      } else if (what == "datasets") {
        list(write_expand_artifacts(engine, dir / "datasets"));
      } else {
        list(write_eda_artifacts(engine, dir / "report"));
        list(write_grid_artifacts(engine, dir / "report"));
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error[" << to_string(e.api()) << "] " << e.message();
    if (!e.detail().empty()) err << " (" << e.detail() << ")";
    err << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error[internal] " << e.what() << '\n';
    return 1;
  }
}

}  // namespace relrec
