#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "impactlab/pipeline.hpp"
#include "impactlab/types.hpp"

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitStageFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"limit-order-book trade reconstruction and price-impact analytics"};

  std::string config_path;
  std::string input, meta, out, stage_name = "all";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int bins = 0;
  bool synthetic = false;

  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--input", input, "event CSV to ingest");
  app.add_flag("--synthetic", synthetic, "generate a synthetic event stream");
  app.add_option("--meta", meta, "stock metadata CSV");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--bins", bins, "equal-count bins per (stock,type)");
  app.add_option("--stage", stage_name,
                 "stage to run: all|simulate|trades|impact|collapse|tails|summary");
  app.add_option("--set", overrides, "extra key=value overrides")
      ->take_all();

  CLI11_PARSE(app, argc, argv);

  try {
    impactlab::pipeline::Config config;
    if (!config_path.empty())
      config = impactlab::pipeline::load_config_file(config_path);
    if (!input.empty()) config.input = input;
    if (synthetic) config.synthetic = true;
    if (!meta.empty()) config.meta = meta;
    if (!out.empty()) config.out = out;
    if (app.count("--seed")) config.seed = seed;
    if (app.count("--bins")) config.bins = bins;
    for (const std::string& kv : overrides) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos)
        throw impactlab::pipeline::ValidationError("--set expects key=value");
      impactlab::pipeline::apply_override(config, kv.substr(0, eq),
                                          kv.substr(eq + 1));
    }

    impactlab::pipeline::run(config,
                             impactlab::pipeline::parse_stage(stage_name));
    return 0;
  } catch (const impactlab::pipeline::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const impactlab::ParseError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const impactlab::NonMonotoneSeq& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stage failure: %s\n", e.what());
    return kExitStageFailure;
  }
}
