#include <CLI11.hpp>

#include <iostream>

#include "cfqp/errors.hpp"
#include "commands.hpp"

namespace {

struct Common {
  int precision = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::vector<double> scales;
  std::string out;
  std::string config;
  CLI::Option* seed_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) cmd->add_option("config", c.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--precision", c.precision, "arithmetic width")->check(CLI::IsMember({32, 64}));
  cmd->add_option("--tol", c.tol, "KKT tolerance for discovery (default 1e-10 at 64-bit, 1e-4 at 32-bit)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--steps", c.steps, "points per sweep / extreme sweep length");
  cmd->add_option("--scales", c.scales, "comma-separated load scales, ascending")->delimiter(',');
  cmd->add_option("--out", c.out, "output path");
}

cfqp::cli::Config configure(const Common& c) {
  auto cfg = cfqp::cli::load_config(c.config);
  if (c.precision) cfg.precision = c.precision == 32 ? cfqp::Precision::f32 : cfqp::Precision::f64;
  if (c.tol > 0.0) cfg.tol = c.tol;
  if (c.seed_opt && c.seed_opt->count()) cfg.seed = c.seed;
  if (c.steps) cfg.steps = c.steps;
  if (!c.scales.empty()) cfg.scales = c.scales;
  return cfg;
}

void print_error(std::string_view kind, int code, std::string_view message) {
  cfqp::json e{{"error", kind}, {"code", code}, {"message", message}};
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form mp-QP models: discovery, prediction and KKT reporting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cfqp 1.0");

  Common discover_opts, predict_opts, report_opts, gen_opts, bench_opts, import_opts;
  std::string log_path, model_path, thetas_path, data_path, kind, input;
  std::size_t count = 1000;
  bool discovered_only = false;

  auto* discover = app.add_subcommand("discover", "grow a model by learning via discovery");
  add_common(discover, discover_opts);
  discover->add_option("--log", log_path, "event log (JSON lines); default <out>.log.jsonl");

  auto* predict = app.add_subcommand("predict", "evaluate a model on a dataset");
  add_common(predict, predict_opts);
  predict->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--thetas", thetas_path, "parameter points (.csv or JSON lines)")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("kkt-report", "mean and worst squared KKT violations per condition");
  add_common(report, report_opts);
  report->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  report->add_option("--data", data_path, "dataset (.csv or JSON lines)")->required()->check(CLI::ExistingFile);
  report->add_flag("--discovered-only", discovered_only, "exclude points whose oracle region is not in the model");

  auto* gen = app.add_subcommand("gen-data", "generate a DC-OPF parameter dataset");
  gen->add_option("kind", kind, "local | extreme | scaled | planning")
      ->required()
      ->check(CLI::IsMember({"local", "extreme", "scaled", "planning"}));
  add_common(gen, gen_opts);
  gen->add_option("--count", count, "points (per scale for 'scaled', per hour for 'planning')");

  auto* bench = app.add_subcommand("bench", "time the model batch against per-instance oracle solves");
  add_common(bench, bench_opts);
  bench->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  bench->add_option("--count", count, "parameter points")->check(CLI::PositiveNumber);

  auto* import = app.add_subcommand("import-case", "convert a MATPOWER case file to JSON");
  import->add_option("input", input, "MATPOWER .m file")->required()->check(CLI::ExistingFile);
  add_common(import, import_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*discover) {
      const auto cfg = configure(discover_opts);
      const std::string out = discover_opts.out.empty() ? "model.json" : discover_opts.out;
      const std::string log = log_path.empty() ? std::filesystem::path(out).replace_extension(".log.jsonl").string() : log_path;
      (void)cfqp::cli::cmd_discover(cfg, out, log, std::cout);
      std::cout << "model: " << out << "\nlog: " << log << '\n';
    } else if (*predict) {
      (void)cfqp::cli::cmd_predict(configure(predict_opts), model_path, thetas_path, predict_opts.out, std::cout);
    } else if (*report) {
      cfqp::cli::KktReportOptions o;
      if (report_opts.precision)
        o.modes = {report_opts.precision == 32 ? cfqp::Precision::f32 : cfqp::Precision::f64};
      o.discovered_only = discovered_only;
      auto cfg = configure(report_opts);
      cfg.precision.reset();
      (void)cfqp::cli::cmd_kkt_report(cfg, model_path, data_path, report_opts.out, o, std::cout);
    } else if (*gen) {
      if (gen_opts.out.empty()) throw cfqp::ParseError("gen-data needs --out");
      (void)cfqp::cli::cmd_gen_data(configure(gen_opts), kind, count, gen_opts.out, std::cout);
    } else if (*bench) {
      (void)cfqp::cli::cmd_bench(configure(bench_opts), model_path, count, std::cout);
    } else if (*import) {
      const std::string out =
          import_opts.out.empty() ? std::filesystem::path(input).replace_extension(".json").string() : import_opts.out;
      (void)cfqp::cli::cmd_import_case(input, out, std::cout);
    }
  } catch (const cfqp::Error& e) {
    const int code = cfqp::cli::exit_code(e.kind());
    print_error(cfqp::to_string(e.kind()), code, e.what());
    return code;
  } catch (const std::exception& e) {
    print_error("internal", 1, e.what());
    return 1;
  }
  return 0;
}
