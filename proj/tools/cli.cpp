#include "cli.hpp"

#include "efg/alloc_probe.hpp"
#include "efg/composition.hpp"
#include "efg/efg_io.hpp"
#include "efg/eval.hpp"
#include "efg/gradients.hpp"
#include "efg/marching_cubes.hpp"
#include "efg/metrics.hpp"
#include "efg/trainer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

namespace efg::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

/// Plain-text key=value record of a run.
class Manifest {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, double value) { add(key, fmt(value)); }
  void add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write manifest " + path);
    for (const auto& [k, v] : entries_) out << k << '=' << v << '\n';
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string join_args(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) {
    if (!s.empty()) s += ' ';
    s += a;
  }
  return s;
}

/// Grid and training flags shared by `fit` and `decompose`.
struct TrainFlags {
  std::string shape;
  std::string variant = "combined";
  std::string degree = "1";
  int resolution = 8;
  bool fixed_scale = false;
  TrainConfig train;
  std::string out = "fit";

  void add_to(CLI::App& app) {
    app.add_option("--shape", shape, "sphere:r=R | box:x=,y=,z= | torus:R=,r= | mesh.obj")->required();
    app.add_option("--variant", variant, "trilinear | nrbf | func | offset | combined")->capture_default_str();
    app.add_option("--deg", degree, "polynomial degree 0-3, or cube")->capture_default_str();
    app.add_option("--res", resolution, "grid resolution R")->check(CLI::Range(1, 1024))->capture_default_str();
    app.add_flag("--fixed-scale", fixed_scale, "do not learn the RBF scales");
    app.add_option("--iters", train.iterations, "training iterations")->capture_default_str();
    app.add_option("--lr", train.learning_rate, "learning rate")->capture_default_str();
    app.add_option("--batch-volume", train.batch_volume, "uniform samples per batch")->capture_default_str();
    app.add_option("--batch-near", train.batch_near, "near-surface samples per batch")->capture_default_str();
    app.add_option("--sigma", train.near_surface_sigma, "near-surface perturbation")->capture_default_str();
    app.add_option("--beta1", train.beta1)->capture_default_str();
    app.add_option("--beta2", train.beta2)->capture_default_str();
    app.add_option("--eps", train.epsilon)->capture_default_str();
    app.add_option("--weight-decay", train.weight_decay)->capture_default_str();
    app.add_option("--init-stddev", train.init_stddev)->capture_default_str();
    app.add_flag("--mean-shift,!--no-mean-shift", train.mean_shift, "mean-shift init of offset banks");
    app.add_option("--mean-shift-points", train.mean_shift_points)->capture_default_str();
    app.add_option("--log-every", train.log_every)->capture_default_str();
    app.add_option("--seed", train.seed)->capture_default_str();
    app.add_option("--workers", train.workers)->capture_default_str();
    app.add_option("--out", out, "output prefix")->capture_default_str();
  }

  GridConfig grid_config() const {
    GridConfig g;
    g.variant = parse_variant(variant);
    g.degree = parse_degree(degree);
    g.resolution = resolution;
    g.learnable_scale = !fixed_scale;
    validate(g);
    return g;
  }

  void record(Manifest& m, const GridConfig& g) const {
    m.add("shape", shape);
    m.add("variant", to_string(g.variant));
    m.add("degree", to_string(g.degree));
    m.add("resolution", g.resolution);
    m.add("learnable_scale", g.learnable_scale);
    m.add("iterations", train.iterations);
    m.add("learning_rate", train.learning_rate);
    m.add("batch_volume", train.batch_volume);
    m.add("batch_near", train.batch_near);
    m.add("near_surface_sigma", train.near_surface_sigma);
    m.add("beta1", train.beta1);
    m.add("beta2", train.beta2);
    m.add("epsilon", train.epsilon);
    m.add("weight_decay", train.weight_decay);
    m.add("init_stddev", train.init_stddev);
    m.add("mean_shift", train.mean_shift);
    m.add("mean_shift_points", train.mean_shift_points);
    m.add("log_every", train.log_every);
    m.add("seed", train.seed);
    m.add("workers", train.workers);
  }
};

void write_loss_csv(const std::string& path, const std::vector<LossRecord>& history) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << "iteration,loss\n" << std::setprecision(17);
  for (const auto& r : history) out << r.iteration << ',' << r.loss << '\n';
}

int cmd_fit(const TrainFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = Clock::now();
  const GridConfig g = f.grid_config();
  f.train.validate();
  const SdfOracle oracle = parse_shape(f.shape);
  Manifest m;
  m.add("command", std::string("fit"));
  m.add("argv", join_args(args));
  f.record(m, g);
  m.add("param_count", param_count(g.variant, g.degree, g.resolution, g.learnable_scale));

  const std::string efg_path = f.out + ".efg";
  const std::string loss_path = f.out + ".loss.csv";
  try {
    const FitResult r = fit(oracle, g, f.train);
    save_efg(efg_path, r.grid);
    write_loss_csv(loss_path, r.history);
    const double final_loss = r.history.empty() ? 0.0 : r.history.back().loss;
    m.add("output_grid", efg_path);
    m.add("output_loss", loss_path);
    m.add("final_loss", final_loss);
    m.add("wall_time_s", seconds_since(t0));
    m.add("status", std::string("ok"));
    m.save(f.out + ".manifest");
    out << "wrote " << efg_path << " (" << r.grid.data().size() << " parameters), final loss " << final_loss
        << '\n';
    return kOk;
  } catch (const TrainingAborted& e) {
    const std::string snap = f.out + ".abort.efg";
    save_efg(snap, e.snapshot);
    m.add("status", std::string("numerical_abort"));
    m.add("abort_iteration", e.iteration);
    m.add("abort_snapshot", snap);
    m.add("wall_time_s", seconds_since(t0));
    m.save(f.out + ".manifest");
    throw;
  }
}

int cmd_mesh(const std::string& grid_path, const std::string& obj_path, int resolution, bool normals,
             int workers, const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const ParamGrid grid = load_efg(grid_path);
  const EvalOptions opts{workers};
  Isosurface iso = extract_surface(grid, resolution, opts);
  std::size_t flagged = 0;
  if (normals && !iso.mesh.vertices.empty()) {
    NormalEstimate n = estimate_normals(grid, iso.mesh.vertices, opts);
    iso.mesh.normals = std::move(n.normals);
    flagged = n.flagged_count;
  }
  save_obj(obj_path, iso.mesh);
  if (!iso.has_surface) err << "warning: field has no zero crossing; wrote an empty mesh\n";
  if (flagged > 0) err << "warning: " << flagged << " vertices have a vanishing gradient; normals left at zero\n";
  Manifest m;
  m.add("command", std::string("mesh"));
  m.add("argv", join_args(args));
  m.add("input_grid", grid_path);
  m.add("output_mesh", obj_path);
  m.add("resolution", resolution);
  m.add("normals", normals);
  m.add("workers", workers);
  m.add("vertices", static_cast<std::int64_t>(iso.mesh.vertices.size()));
  m.add("triangles", static_cast<std::int64_t>(iso.mesh.triangles.size()));
  m.add("empty", !iso.has_surface);
  m.add("flagged_normals", static_cast<std::int64_t>(flagged));
  m.add("wall_time_s", seconds_since(t0));
  m.save(obj_path + ".manifest");
  out << "wrote " << obj_path << ": " << iso.mesh.vertices.size() << " vertices, " << iso.mesh.triangles.size()
      << " triangles\n";
  return kOk;
}

struct MetricsFlags {
  std::string grid;
  std::string shape;
  std::string reference;
  std::size_t samples = 100000;
  std::size_t cd_samples = 100000;
  int mc_res = 64;
  std::uint64_t seed = 0;
  int workers = 1;
  bool csv = false;
  std::string manifest = "metrics.manifest";
};

int cmd_metrics(const MetricsFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = Clock::now();
  if (f.shape.empty() && f.reference.empty()) throw InputError("metrics needs --shape or --reference");
  const ParamGrid grid = load_efg(f.grid);
  std::optional<SdfOracle> oracle;
  std::optional<TriMesh> reference;
  if (!f.shape.empty()) oracle.emplace(parse_shape(f.shape));
  if (!f.reference.empty()) {
    reference = load_obj(f.reference);
    if (reference->empty()) throw InputError("reference mesh has no faces: " + f.reference);
    if (!oracle) oracle.emplace(std::make_shared<const MeshSdf>(*reference));
  }

  MetricBudget budget;
  budget.volume_samples = f.samples;
  budget.near_samples = f.samples;
  budget.seed = derive_seed(f.seed, Stream::Sampling, 1);
  budget.workers = f.workers;
  const VolumeMetrics vm = volume_metrics(grid, *oracle, budget);

  const Isosurface iso = extract_surface(grid, f.mc_res, EvalOptions{f.workers});
  double cd = std::numeric_limits<double>::infinity();
  if (iso.has_surface) {
    std::mt19937_64 rng(derive_seed(f.seed, Stream::Sampling, 2));
    const auto a = sample_surface(iso.mesh, f.cd_samples, rng);
    const auto b = reference ? sample_surface(*reference, f.cd_samples, rng) : oracle->sample_surface(f.cd_samples, rng);
    cd = chamfer(a, b, f.workers);
  }
  const double cd_scaled = 1e3 * cd;
  if (f.csv) {
    out << "cd,vol_ae,vol_iou,near_ae,near_iou\n" << std::setprecision(10) << cd_scaled << ',' << vm.volume_ae << ','
        << vm.volume_iou << ',' << vm.near_ae << ',' << vm.near_iou << '\n';
  } else {
    out << std::fixed << std::setprecision(3) << "CD (x1e3)         " << cd_scaled << '\n'
        << "Volume-AE (x1e4)  " << vm.volume_ae << '\n'
        << "Volume-IOU (%)    " << vm.volume_iou << '\n'
        << "Near-AE (x1e4)    " << vm.near_ae << '\n'
        << "Near-IOU (%)      " << vm.near_iou << '\n';
  }
  Manifest m;
  m.add("command", std::string("metrics"));
  m.add("argv", join_args(args));
  m.add("input_grid", f.grid);
  m.add("shape", f.shape);
  m.add("reference", f.reference);
  m.add("samples", static_cast<std::uint64_t>(f.samples));
  m.add("cd_samples", static_cast<std::uint64_t>(f.cd_samples));
  m.add("mc_res", f.mc_res);
  m.add("seed", f.seed);
  m.add("workers", f.workers);
  m.add("cd_x1e3", cd_scaled);
  m.add("vol_ae_x1e4", vm.volume_ae);
  m.add("vol_iou_pct", vm.volume_iou);
  m.add("near_ae_x1e4", vm.near_ae);
  m.add("near_iou_pct", vm.near_iou);
  m.add("wall_time_s", seconds_since(t0));
  m.save(f.manifest);
  return kOk;
}

struct DecomposeFlags {
  TrainFlags train;
  int bands = 3;
  int slice_res = 128;
  double slice_z = 0.0;
};

int cmd_decompose(const DecomposeFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = Clock::now();
  const GridConfig g = f.train.grid_config();
  f.train.train.validate();
  if (f.bands < 0) throw ConfigError("--bands must be >= 0");
  const SdfOracle oracle = parse_shape(f.train.shape);
  Manifest m;
  m.add("command", std::string("decompose"));
  m.add("argv", join_args(args));
  f.train.record(m, g);
  m.add("bands", f.bands);

  const CosineFitResult r = cosine_fit(oracle, f.bands, g, f.train.train);
  const std::string stack_path = f.train.out + ".stack";
  const std::string loss_path = f.train.out + ".loss.csv";
  const std::string slice_path = f.train.out + ".slices.csv";
  save_stack(stack_path, r.stack.bands);
  write_loss_csv(loss_path, r.history);

  std::vector<Vec3> pts;
  const int n = std::max(2, f.slice_res);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) pts.emplace_back(-1.0 + 2.0 * x / (n - 1), -1.0 + 2.0 * y / (n - 1), f.slice_z);
  const EvalOptions opts{f.train.train.workers};
  const auto partial = cosine_partial_sums(r.stack, pts, opts);
  {
    std::ofstream s(slice_path);
    if (!s) throw InputError("cannot write " + slice_path);
    s << "band,x,y,value,partial\n" << std::setprecision(10);
    for (int b = 0; b < r.stack.band_count(); ++b) {
      const auto band = evaluate(r.stack.bands[static_cast<std::size_t>(b)], pts, opts);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        s << b << ',' << pts[j].x() << ',' << pts[j].y() << ',' << cosine_weight(b, pts[j]) * band[j] << ','
          << partial[static_cast<std::size_t>(b)][j] << '\n';
      }
    }
  }
  const double final_loss = r.history.empty() ? 0.0 : r.history.back().loss;
  m.add("param_count", r.stack.param_count());
  m.add("output_stack", stack_path);
  m.add("output_loss", loss_path);
  m.add("output_slices", slice_path);
  m.add("slice_res", n);
  m.add("slice_z", f.slice_z);
  m.add("final_loss", final_loss);
  m.add("wall_time_s", seconds_since(t0));
  m.save(f.train.out + ".manifest");
  out << "wrote " << stack_path << " (" << r.stack.band_count() << " bands), final loss " << final_loss << '\n';
  return kOk;
}

int cmd_splice(const std::string& a_path, const std::string& b_path, const std::string& axis_name,
               double threshold, const std::string& out_path, const std::vector<std::string>& args,
               std::ostream& out) {
  const auto t0 = Clock::now();
  const ParamGrid a = load_efg(a_path);
  const ParamGrid b = load_efg(b_path);
  SplicePlane plane;
  plane.axis = axis_name == "x" ? 0 : axis_name == "y" ? 1 : 2;
  plane.threshold = threshold;
  const ParamGrid c = splice_grids(a, b, plane);
  save_efg(out_path, c);
  Manifest m;
  m.add("command", std::string("splice"));
  m.add("argv", join_args(args));
  m.add("input_a", a_path);
  m.add("input_b", b_path);
  m.add("axis", axis_name);
  m.add("threshold", threshold);
  m.add("output_grid", out_path);
  m.add("wall_time_s", seconds_since(t0));
  m.save(out_path + ".manifest");
  out << "wrote " << out_path << '\n';
  return kOk;
}

struct BenchFlags {
  std::vector<int> resolutions{4, 32};
  std::vector<std::int64_t> queries{16384};
  std::string variant = "combined";
  std::string degree = "1";
  int workers = 1;
  std::uint64_t seed = 0;
  std::string manifest = "bench.manifest";
};

int cmd_bench(const BenchFlags& f, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = Clock::now();
  Manifest m;
  m.add("command", std::string("bench"));
  m.add("argv", join_args(args));
  m.add("variant", f.variant);
  m.add("degree", f.degree);
  m.add("workers", f.workers);
  m.add("seed", f.seed);
  out << "I,J,fwd_ms,bwd_ms,peak_bytes\n";
  int row = 0;
  for (int r : f.resolutions) {
    GridConfig g;
    g.variant = parse_variant(f.variant);
    g.degree = parse_degree(f.degree);
    g.resolution = r;
    validate(g);
    const ParamGrid grid = init_grid(g, InitSpec{derive_seed(f.seed, Stream::Init)});
    for (std::int64_t j : f.queries) {
      if (j < 1) throw ConfigError("--queries values must be >= 1");
      std::mt19937_64 rng(derive_seed(f.seed, Stream::Sampling, static_cast<std::uint64_t>(row)));
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      std::vector<Vec3> q(static_cast<std::size_t>(j));
      for (auto& p : q) {
        const double x = u(rng), y = u(rng), z = u(rng);
        p = Vec3(x, y, z);
      }
      const std::vector<double> up(q.size(), 1.0 / static_cast<double>(q.size()));
      const EvalOptions opts{f.workers};
      alloc_probe::reset_peak();
      const std::size_t base = alloc_probe::stats().current;
      const auto ta = Clock::now();
      const EvalBatch batch = forward(grid, q, opts);
      const auto tb = Clock::now();
      const GradBuffer grads = backward(grid, batch, up, opts);
      const auto tc = Clock::now();
      const std::size_t peak = alloc_probe::stats().peak - base;
      const double fwd = std::chrono::duration<double, std::milli>(tb - ta).count();
      const double bwd = std::chrono::duration<double, std::milli>(tc - tb).count();
      const std::int64_t keys = grid.key_count();
      out << keys << ',' << j << ',' << std::fixed << std::setprecision(3) << fwd << ',' << bwd << ','
          << std::defaultfloat << peak << '\n';
      const std::string key = "row" + std::to_string(row++);
      m.add(key, std::to_string(keys) + "," + std::to_string(j) + "," + fmt(fwd) + "," + fmt(bwd) + "," +
                     std::to_string(peak));
    }
  }
  m.add("wall_time_s", seconds_since(t0));
  m.save(f.manifest);
  return kOk;
}

/// Moves `--config PATH` out of `args` and splices the file's entries in
/// front of the remaining flags, so explicit flags win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::vector<std::string> from_file;
  for (std::size_t k = 0; k < args.size(); ++k) {
    std::string path;
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw InputError("--config needs a path");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
      continue;
    }
    auto entries = read_config_args(path);
    from_file.insert(from_file.end(), entries.begin(), entries.end());
  }
  if (from_file.empty() || rest.empty()) return rest;
  std::vector<std::string> out{rest[0]};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

}  // namespace

std::vector<std::string> read_config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  std::vector<std::string> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(n) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    out.push_back("--" + key + "=" + value);
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app("Fit, mesh and evaluate signed distance fields stored as RBF-interpolated polynomial grids.",
               "efg");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value file of flag defaults");
  };

  TrainFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "train a grid on a shape");
  fit_flags.add_to(*fit_cmd);
  add_config(fit_cmd);

  std::string mesh_grid, mesh_out = "mesh.obj";
  int mesh_res = 64;
  bool mesh_normals = false;
  int mesh_workers = 1;
  auto* mesh_cmd = app.add_subcommand("mesh", "extract the zero level set with marching cubes");
  mesh_cmd->add_option("--grid", mesh_grid, ".efg file")->required();
  mesh_cmd->add_option("--out", mesh_out, "output OBJ")->capture_default_str();
  mesh_cmd->add_option("--res", mesh_res, "samples per axis")->check(CLI::Range(2, 4096))->capture_default_str();
  mesh_cmd->add_flag("--normals", mesh_normals, "write per-vertex normals from the field gradient");
  mesh_cmd->add_option("--workers", mesh_workers)->capture_default_str();
  add_config(mesh_cmd);

  MetricsFlags mf;
  auto* metrics_cmd = app.add_subcommand("metrics", "CD, AE and IOU against a reference shape");
  metrics_cmd->add_option("--grid", mf.grid, ".efg file")->required();
  metrics_cmd->add_option("--shape", mf.shape, "reference shape spec (as for fit)");
  metrics_cmd->add_option("--reference", mf.reference, "reference OBJ, used without normalization");
  metrics_cmd->add_option("--samples", mf.samples, "volume and near-surface samples")->capture_default_str();
  metrics_cmd->add_option("--cd-samples", mf.cd_samples, "surface samples per side")->capture_default_str();
  metrics_cmd->add_option("--mc-res", mf.mc_res, "marching cubes resolution")->check(CLI::Range(2, 4096))->capture_default_str();
  metrics_cmd->add_option("--seed", mf.seed)->capture_default_str();
  metrics_cmd->add_option("--workers", mf.workers)->capture_default_str();
  metrics_cmd->add_flag("--csv", mf.csv, "machine-readable output");
  metrics_cmd->add_option("--manifest", mf.manifest)->capture_default_str();
  add_config(metrics_cmd);

  DecomposeFlags df;
  df.train.out = "decompose";
  auto* dec_cmd = app.add_subcommand("decompose", "fit a cosine-series stack of grids");
  df.train.add_to(*dec_cmd);
  dec_cmd->add_option("--bands", df.bands, "highest band B (B+1 grids)")->capture_default_str();
  dec_cmd->add_option("--slice-res", df.slice_res)->capture_default_str();
  dec_cmd->add_option("--slice-z", df.slice_z)->capture_default_str();
  add_config(dec_cmd);

  std::string sa, sb, saxis = "x", sout = "splice.efg";
  double sthreshold = 0.0;
  auto* splice_cmd = app.add_subcommand("splice", "combine two grids along an axis-aligned plane");
  splice_cmd->add_option("--a", sa, "grid used below the plane")->required();
  splice_cmd->add_option("--b", sb, "grid used above the plane")->required();
  splice_cmd->add_option("--axis", saxis)->check(CLI::IsMember({"x", "y", "z"}))->capture_default_str();
  splice_cmd->add_option("--threshold", sthreshold)->capture_default_str();
  splice_cmd->add_option("--out", sout)->capture_default_str();
  add_config(splice_cmd);

  BenchFlags bf;
  auto* bench_cmd = app.add_subcommand("bench", "time forward/backward and report peak workspace");
  bench_cmd->add_option("--res", bf.resolutions, "grid resolutions")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--queries", bf.queries, "batch sizes J")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--variant", bf.variant)->capture_default_str();
  bench_cmd->add_option("--deg", bf.degree)->capture_default_str();
  bench_cmd->add_option("--workers", bf.workers)->capture_default_str();
  bench_cmd->add_option("--seed", bf.seed)->capture_default_str();
  bench_cmd->add_option("--manifest", bf.manifest)->capture_default_str();
  add_config(bench_cmd);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);

    if (fit_cmd->parsed()) return cmd_fit(fit_flags, raw_args, out);
    if (mesh_cmd->parsed()) {
      return cmd_mesh(mesh_grid, mesh_out, mesh_res, mesh_normals, mesh_workers, raw_args, out, err);
    }
    if (metrics_cmd->parsed()) return cmd_metrics(mf, raw_args, out);
    if (dec_cmd->parsed()) return cmd_decompose(df, raw_args, out);
    if (splice_cmd->parsed()) return cmd_splice(sa, sb, saxis, sthreshold, sout, raw_args, out);
    if (bench_cmd->parsed()) return cmd_bench(bf, raw_args, out);
    return kUsageError;
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsageError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const TrainingAborted& e) {
    err << "error: " << e.what() << "; snapshot written next to the outputs\n";
    return kNumericalAbort;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalAbort;
  }
}

}  // namespace efg::cli
