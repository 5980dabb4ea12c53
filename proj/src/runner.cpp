#include "dgpcg/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <thread>

#include "dgpcg/errors.hpp"

namespace dgpcg {

namespace fs = std::filesystem;

RunSummary train_run(const RunConfig& cfg, const fs::path& dir, bool artifacts, std::ostream* log) {
  fs::create_directories(dir);
  {
    std::ofstream rc(dir / "run_config.json");
    rc << to_json(cfg);
  }
  std::ofstream csv(dir / "metrics.csv");
  if (!csv) throw Error(Errc::IoError, "cannot write " + (dir / "metrics.csv").string());
  csv << epoch_csv_header() << '\n';

  Trainer trainer(cfg.train, make_dataset(cfg.data));
  const std::size_t last = cfg.train.epochs - 1;
  std::vector<double> sigma;
  RunSummary summary;
  trainer.run([&](const EpochStats& es) {
    csv << epoch_csv_row(es) << '\n';
    csv.flush();
    sigma.push_back(es.mean_sigma2);
    summary.last = es;
    if (log) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %3zu  psnr %.3f  ssim %.4f  sigma2 %.4g  total %.5g\n",
                    es.epoch, es.psnr, es.ssim, es.mean_sigma2, es.losses.total);
      *log << line << std::flush;
    }
    if (!artifacts) return;
    const std::string tag = std::to_string(es.epoch);
    if ((es.epoch + 1) % cfg.checkpoint_every == 0 || es.epoch == last)
      write_checkpoint(dir / ("ckpt_" + tag + ".bin"), trainer.model().checkpoint(trainer.step()));
    if ((es.epoch + 1) % cfg.sample_every == 0 || es.epoch == last) {
      const auto& d = trainer.data();
      const std::size_t n = std::min(cfg.samples_per_eval, d.test_weather.size());
      for (std::size_t i = 0; i < n; ++i) {
        Patch restored = d.test_weather[i];
        restored.pixels = trainer.model().g_wc.forward(restored.pixels).y;
        write_pgm(dir / ("sample_" + tag + "_" + std::to_string(i) + ".pgm"),
                  triptych(d.test_weather[i], restored, d.test_clean[i]));
      }
    }
    if (cfg.dump_banks && cfg.train.dgp_enabled) {
      write_bank(dir / ("bank_" + tag + "_weather.bin"), trainer.banks().weather);
      write_bank(dir / ("bank_" + tag + "_clean.bin"), trainer.banks().clean);
    }
  });
  const std::size_t k = std::min<std::size_t>(5, sigma.size());
  for (std::size_t i = 0; i < k; ++i) {
    summary.mean_sigma2_first5 += sigma[i] / static_cast<double>(k);
    summary.mean_sigma2_last5 += sigma[sigma.size() - 1 - i] / static_cast<double>(k);
  }
  return summary;
}

std::vector<GridPoint> ablation_grid(const RunConfig& base) {
  std::vector<GridPoint> grid;
  auto add = [&](const std::string& axis, const std::string& value, RunConfig cfg) {
    cfg.finalize();
    grid.push_back({axis, value, std::move(cfg), {}});
  };
  for (auto depth : base.ablate_depths) {
    RunConfig c = base;
    c.gp_depth = depth;
    add("depth", std::to_string(depth), c);
  }
  for (auto nn : base.ablate_neighbors) {
    RunConfig c = base;
    c.train.n_neighbors = nn;
    add("neighbors", std::to_string(nn), c);
  }
  for (auto lambda : base.ablate_lambdas) {
    RunConfig c = base;
    c.train.lambda_p = lambda;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    add("lambda", buf, c);
  }
  return grid;
}

void run_ablation(std::vector<GridPoint>& grid, const RunConfig& base, std::ostream* log) {
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      auto& g = grid[i];
      g.result = train_run(g.config, base.output_dir / (g.axis + "_" + g.value), false);
      if (!log) continue;
      char line[160];
      std::snprintf(line, sizeof(line), "%s=%s psnr %.4f ssim %.4f\n", g.axis.c_str(),
                    g.value.c_str(), g.result.last.psnr, g.result.last.ssim);
      std::lock_guard<std::mutex> lock(log_mu);
      *log << line << std::flush;
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(base.jobs, grid.size()); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const std::string axis : {"depth", "neighbors", "lambda"}) {
    std::ofstream os(base.output_dir / ("summary_" + axis + ".csv"));
    if (!os) throw Error(Errc::IoError, "cannot write summary for " + axis);
    os << axis << ",seed,epochs,psnr,ssim,mean_sigma2_first5,mean_sigma2_last5\n";
    for (const auto& g : grid) {
      if (g.axis != axis) continue;
      char line[256];
      std::snprintf(line, sizeof(line), "%s,%llu,%zu,%.6f,%.6f,%.9g,%.9g\n", g.value.c_str(),
                    static_cast<unsigned long long>(g.config.train.seed), g.config.train.epochs,
                    g.result.last.psnr, g.result.last.ssim, g.result.mean_sigma2_first5,
                    g.result.mean_sigma2_last5);
      os << line;
    }
  }
}

}  // namespace dgpcg
