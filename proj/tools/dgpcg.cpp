// dgpcg: verify | train | eval | ablate

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgpcg/config.hpp"
#include "dgpcg/errors.hpp"
#include "dgpcg/runner.hpp"
#include "dgpcg/trainer.hpp"
#include "dgpcg/verify.hpp"

namespace fs = std::filesystem;
using namespace dgpcg;

namespace {

constexpr int kExitConfig = 2;

// Builds the run config: file (if any), then `--key value` pairs in order.
RunConfig build_config(const std::string& config_path, const std::vector<std::string>& extras) {
  RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& flag = extras[i];
    if (flag.rfind("--", 0) != 0 || flag.size() <= 2)
      throw Error(Errc::InvalidConfig, "unexpected argument '" + flag + "'");
    std::string key = flag.substr(2), value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw Error(Errc::InvalidConfig, "flag --" + key + " needs a value");
      value = extras[++i];
    }
    apply_override(cfg, key, value);
  }
  cfg.finalize();
  return cfg;
}

int cmd_verify(const std::vector<std::string>& suites, bool flip, std::uint64_t seed) {
  VerifyOptions opt;
  opt.suites = suites;
  opt.flip_pseudo_grad = flip;
  opt.seed = seed;
  for (const auto& s : suites)
    if (std::find(verify_suites().begin(), verify_suites().end(), s) == verify_suites().end())
      throw Error(Errc::InvalidConfig, "unknown suite '" + s + "'");
  return run_verify(opt, std::cout);
}

int cmd_train(const RunConfig& cfg) {
  const auto s = train_run(cfg, cfg.output_dir, true, &std::cout);
  std::printf("final psnr %.4f ssim %.4f -> %s\n", s.last.psnr, s.last.ssim,
              cfg.output_dir.string().c_str());
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& checkpoint) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  const CycleGan model = CycleGan::from_checkpoint(ckpt);
  const Dataset data = make_dataset(cfg.data);
  const EvalResult r = evaluate(model.g_wc, data.test_weather, data.test_clean);
  std::printf("checkpoint,step,psnr,ssim\n%s,%llu,%.6f,%.6f\n", checkpoint.c_str(),
              static_cast<unsigned long long>(ckpt.step), r.psnr, r.ssim);
  return 0;
}

int cmd_ablate(const RunConfig& base) {
  auto grid = ablation_grid(base);
  fs::create_directories(base.output_dir);
  run_ablation(grid, base, &std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep-GP pseudo-label supervision for unpaired restoration"};
  app.require_subcommand(1);

  std::vector<std::string> suites;
  bool flip = false;
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify", "run the self-check suites");
  verify->add_option("--suite", suites, "suite to run (repeatable)");
  verify->add_flag("--inject-sign-flip", flip, "negate pseudo_loss_grad to prove the checks bite");
  verify->add_option("--seed", verify_seed, "seed for the randomized cases");

  std::string config_path, checkpoint;
  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat JSON run config");
    sub->allow_extras();
    return sub;
  };
  auto* train = with_config(app.add_subcommand("train", "train one model"));
  auto* eval = with_config(app.add_subcommand("eval", "score a checkpoint on the test set"));
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  auto* ablate = with_config(app.add_subcommand("ablate", "depth / neighbor / lambda sweeps"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (verify->parsed()) return cmd_verify(suites, flip, verify_seed);
    for (CLI::App* sub : {train, eval, ablate}) {
      if (!sub->parsed()) continue;
      const RunConfig cfg = build_config(config_path, sub->remaining());
      if (sub == train) return cmd_train(cfg);
      if (sub == eval) return cmd_eval(cfg, checkpoint);
      return cmd_ablate(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "dgpcg: " << e.what() << '\n';
    return e.code() == Errc::InvalidConfig ? kExitConfig : 1;
  } catch (const std::exception& e) {
    std::cerr << "dgpcg: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
