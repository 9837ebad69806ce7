#include "sphg/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sphg/io.hpp"
#include "sphg/parallel.hpp"
#include "sphg/training.hpp"
#include "sphg/verify.hpp"

namespace sphg {

namespace fs = std::filesystem;

namespace {

const char* kHelpFooter = R"(Exit codes: 0 success, 1 runtime or verification failure, 2 usage error.
SPHG_THREADS=N is equivalent to --threads N; results never depend on N.

CSV outputs:
  train  learning_curve.csv  epoch,steps,train_loss,val_loss
  eval   <out>               index,weighted_relative,lat_weighted_mse,acc
  export <out>               lat,lon,channel,value   (degrees; lat = 90 - colatitude)
  bench  <out>               op,precision,lmax,nlat,nlon,channels,reps,seconds_per_call

Every artifact-producing command writes a key=value manifest with the command,
configuration, seed, tool version, SHA-256 digests of inputs and outputs, and
wall time.)";

std::string fmt(double v, int precision = 17) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string join_args(const std::vector<std::string>& args) {
  std::string s = "sphg";
  for (const auto& a : args) s += " " + a;
  return s;
}

// ---- models ---------------------------------------------------------------

Field<double> forward(const Model& m, const Field<double>& x) {
  return std::visit([&](const auto& mm) { return model_forward(mm, x, nullptr); }, m);
}

LayerFlags flags_from(const Config& c) {
  return {c.get_bool("model.use_correction"), c.get_bool("model.use_mlp")};
}

Config model_section(const Config& c) {
  Config out;
  for (const auto& [k, v] : c.values()) {
    if (k.rfind("model.", 0) == 0) out.set(k, v);
  }
  return out;
}

// ---- train ----------------------------------------------------------------

TrainConfig train_config_from(const Config& c, int threads) {
  TrainConfig t;
  t.lr = c.get_double("train.lr");
  t.epochs = static_cast<int>(c.get_int("train.epochs"));
  t.batch_size = static_cast<int>(c.get_int("train.batch_size"));
  t.max_steps = static_cast<int>(c.get_int("train.max_steps"));
  t.seed = static_cast<std::uint64_t>(c.get_int("train.seed"));
  t.loss = loss_kind_from_string(c.get_string("train.loss"));
  t.weights = c.get_bool("train.legacy_weights") ? LossWeights::Legacy : LossWeights::Quadrature;
  t.threads = threads;
  if (!(t.lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (t.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (t.epochs < 1) throw ConfigError("train.epochs must be >= 1");
  return t;
}

TaskSpec task_spec_from(const Config& c, int n) {
  TaskSpec s;
  s.kind = task_kind_from_string(c.get_string("data.task"));
  s.lmax = static_cast<int>(c.get_int("data.lmax"));
  s.n = n;
  s.channels = static_cast<int>(c.get_int("data.channels"));
  s.slope = c.get_double("data.slope");
  s.seed = static_cast<std::uint64_t>(c.get_int("data.seed"));
  s.nlat = static_cast<int>(c.get_int("data.nlat"));
  s.nlon = static_cast<int>(c.get_int("data.nlon"));
  s.grid = grid_kind_from_string(c.get_string("data.grid"));
  s.terrain = terrain_kind_from_string(c.get_string("data.terrain"));
  s.terrain_seed = static_cast<std::uint64_t>(c.get_int("data.terrain_seed"));
  return s;
}

double weighted_relative_mean(const Model& m, const FieldDataset& ds, LossWeights w, int threads) {
  std::vector<double> v(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    v[i] = weighted_relative_loss(forward(m, ds.inputs[i]), ds.targets[i], w);
  });
  double s = 0.0;
  for (double x : v) s += x;
  return ds.size() ? s / static_cast<double>(ds.size()) : 0.0;
}

int cmd_train(const std::string& config_path, bool print_config, int threads,
              const std::vector<std::string>& args, std::ostream& out) {
  Config cfg = default_train_config();
  if (print_config) {
    out << cfg.to_text();
    return 0;
  }
  const auto t0 = std::chrono::steady_clock::now();
  cfg.merge_known(Config::parse(read_file(config_path)));
  const TrainConfig tc = train_config_from(cfg, threads);
  const int n_train = static_cast<int>(cfg.get_int("data.n_train"));
  const int n_test = static_cast<int>(cfg.get_int("data.n_test"));
  if (n_train < 1 || n_test < 0) throw ConfigError("data.n_train must be >= 1 and data.n_test >= 0");

  RunManifest man;
  man.command = join_args(args);
  man.config = cfg;
  man.seed = tc.seed;
  man.threads = threads;
  man.add_input(config_path);

  FieldDataset all;
  const std::string data_path = cfg.get_string("data.path");
  if (data_path.empty()) {
    all = generate(task_spec_from(cfg, n_train + n_test), threads);
  } else {
    all = load_dataset(data_path);
    if (all.size() < static_cast<std::size_t>(n_train + n_test)) {
      throw ConfigError("dataset " + data_path + " holds " + std::to_string(all.size()) +
                        " samples, config needs " + std::to_string(n_train + n_test));
    }
    man.add_input(fs::path(data_path) / "dataset.txt");
  }
  auto [train_set, rest] = all.split(static_cast<std::size_t>(n_train));
  auto [test_set, unused] = rest.split(static_cast<std::size_t>(n_test));

  const auto& x0 = train_set.inputs.front();
  Model model = build_model(cfg, x0.grid_ptr(), x0.channels(), train_set.targets.front().channels());
  const TrainReport rep = std::visit(
      [&](auto& m) { return train(m, train_set, test_set, tc); }, model);
  const double test_rel =
      test_set.size() ? weighted_relative_mean(model, test_set, tc.weights, threads) : rep.final_val_loss;

  const fs::path dir = cfg.get_string("output.dir");
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.sphg", model, cfg);
  write_file(dir / "learning_curve.csv", rep.learning_curve_csv());
  std::ostringstream report;
  report << "steps=" << rep.steps << "\n"
         << "epochs=" << rep.epochs.size() << "\n"
         << "final_train_loss=" << fmt(rep.final_train_loss) << "\n"
         << "final_val_loss=" << fmt(rep.final_val_loss) << "\n"
         << "test_weighted_relative=" << fmt(test_rel) << "\n"
         << "parameters=" << std::visit([](const auto& m) { return parameter_count(m); }, model) << "\n";
  write_file(dir / "report.txt", report.str());
  for (const char* f : {"checkpoint.sphg", "learning_curve.csv", "report.txt"}) man.add_output(dir / f);
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "manifest.txt", man.to_text());

  out << report.str();
  out << "wrote " << dir.string() << "\n";
  return 0;
}

// ---- gen ------------------------------------------------------------------

int cmd_gen(const TaskSpec& spec, const std::string& out_dir, int threads,
            const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const FieldDataset ds = generate(spec, threads);
  const fs::path dir = out_dir.empty() ? fs::path("data") / to_string(spec.kind) : fs::path(out_dir);
  const auto files = save_dataset(dir, ds);
  RunManifest man;
  man.command = join_args(args);
  man.config = Config::parse(task_spec_to_text(spec));
  man.seed = spec.seed;
  man.threads = threads;
  for (const auto& f : files) man.add_output(f);
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "manifest.txt", man.to_text());
  out << "wrote " << ds.size() << " " << to_string(spec.kind) << " pairs to " << dir.string() << "\n";
  return 0;
}

// ---- eval -----------------------------------------------------------------

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir, const std::string& out_csv,
             int threads, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Model model = load_checkpoint(ckpt_path);
  const FieldDataset ds = load_dataset(data_dir);
  if (ds.size() == 0) throw ConfigError("eval: empty dataset");

  Field<double> clim = ds.targets.front();
  for (std::size_t i = 1; i < ds.size(); ++i) clim.values() += ds.targets[i].values();
  clim.values() /= static_cast<double>(ds.size());

  const std::size_t n = ds.size();
  std::vector<double> rel(n), mse(n), acc(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto pred = forward(model, ds.inputs[i]);
    rel[i] = weighted_relative_loss(pred, ds.targets[i]);
    mse[i] = lat_weighted_mse(pred, ds.targets[i]);
    try {
      acc[i] = acc_metric(pred, ds.targets[i], clim);
    } catch (const DegenerateError&) {
      acc[i] = std::nan("");
    }
  });
  std::ostringstream csv;
  csv << "index,weighted_relative,lat_weighted_mse,acc\n";
  double srel = 0, smse = 0, sacc = 0;
  std::size_t nacc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    csv << i << ',' << fmt(rel[i]) << ',' << fmt(mse[i]) << ',' << fmt(acc[i]) << '\n';
    srel += rel[i];
    smse += mse[i];
    if (std::isfinite(acc[i])) {
      sacc += acc[i];
      ++nacc;
    }
  }
  const fs::path csv_path = out_csv.empty() ? fs::path("eval.csv") : fs::path(out_csv);
  write_file(csv_path, csv.str());

  out << std::left << std::setw(20) << "metric" << "mean\n";
  out << std::setw(20) << "weighted_relative" << fmt(srel / n, 6) << "\n";
  out << std::setw(20) << "lat_weighted_mse" << fmt(smse / n, 6) << "\n";
  out << std::setw(20) << "acc" << (nacc ? fmt(sacc / nacc, 6) : std::string("nan")) << "\n";
  out << std::setw(20) << "samples" << n << "\n";

  RunManifest man;
  man.command = join_args(args);
  man.threads = threads;
  man.add_input(ckpt_path);
  man.add_input(fs::path(data_dir) / "dataset.txt");
  man.add_output(csv_path);
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(csv_path.string() + ".manifest.txt", man.to_text());
  return 0;
}

// ---- export ---------------------------------------------------------------

int cmd_export(const std::string& field_path, const std::string& out_csv,
               const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const Field<double> f = read_field(field_path);
  const auto& g = f.grid();
  std::ostringstream csv;
  csv << "lat,lon,channel,value\n";
  const double deg = 180.0 / std::numbers::pi;
  for (int i = 0; i < g.nlat; ++i) {
    for (int j = 0; j < g.nlon; ++j) {
      for (int c = 0; c < f.channels(); ++c) {
        csv << fmt(90.0 - g.colatitudes(i) * deg) << ',' << fmt(g.longitude(j) * deg) << ',' << c
            << ',' << fmt(f(c, i, j)) << '\n';
      }
    }
  }
  if (out_csv.empty()) {
    out << csv.str();
    return 0;
  }
  write_file(out_csv, csv.str());
  RunManifest man;
  man.command = join_args(args);
  man.add_input(field_path);
  man.add_output(out_csv);
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(out_csv + ".manifest.txt", man.to_text());
  return 0;
}

// ---- bench ----------------------------------------------------------------

template <typename Scalar>
double time_per_call(int reps, const std::function<void()>& fn) {
  fn();
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

template <typename Scalar>
void bench_transforms(int lmax, int channels, int reps, std::ostringstream& csv) {
  auto g = make_grid(lmax + 1, 2 * (lmax + 1));
  const ShtPlan<Scalar> plan(g, lmax);
  Field<Scalar> f(g, channels);
  f.values().setRandom();
  const auto c = plan.analyze(f);
  const char* prec = sizeof(Scalar) == 4 ? "float32" : "float64";
  volatile Scalar sink = 0;
  const double ts = time_per_call<Scalar>(reps, [&] { sink = sink + plan.analyze(f).data(0, 0).real(); });
  const double ti = time_per_call<Scalar>(reps, [&] { sink = sink + plan.synthesize(c).values()(0, 0); });
  csv << "sht," << prec << ',' << lmax << ',' << g->nlat << ',' << g->nlon << ',' << channels << ','
      << reps << ',' << fmt(ts, 6) << '\n';
  csv << "isht," << prec << ',' << lmax << ',' << g->nlat << ',' << g->nlon << ',' << channels << ','
      << reps << ',' << fmt(ti, 6) << '\n';
}

int cmd_bench(const std::vector<int>& lmaxes, int channels, int reps, bool use_float,
              const std::string& out_csv, const std::vector<std::string>& args, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream csv;
  csv << "op,precision,lmax,nlat,nlon,channels,reps,seconds_per_call\n";
  for (int lmax : lmaxes) {
    if (lmax < 1) throw ConfigError("bench: lmax must be >= 1");
    bench_transforms<double>(lmax, channels, reps, csv);
    if (use_float) bench_transforms<float>(lmax, channels, reps, csv);
    auto g = make_grid(lmax + 1, 2 * (lmax + 1));
    LayerConfig lc;
    lc.in_grid = g;
    lc.c_in = channels;
    lc.c_out = channels;
    const GsnoLayer layer = layer_init(lc, 1);
    Field<double> x(g, channels);
    x.values().setRandom();
    volatile double sink = 0;
    const double tl = time_per_call<double>(reps, [&] { sink = sink + gsno_forward(layer, x).values()(0, 0); });
    csv << "layer_forward,float64," << lmax << ',' << g->nlat << ',' << g->nlon << ',' << channels
        << ',' << reps << ',' << fmt(tl, 6) << '\n';
  }
  const fs::path path = out_csv.empty() ? fs::path("bench.csv") : fs::path(out_csv);
  write_file(path, csv.str());
  out << csv.str();
  RunManifest man;
  man.command = join_args(args);
  man.add_output(path);
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(path.string() + ".manifest.txt", man.to_text());
  return 0;
}

// ---- verify ---------------------------------------------------------------

int cmd_verify(int lmax, int threads, std::ostream& out) {
  VerifyOptions o;
  o.lmax = lmax;
  o.threads = threads;
  const auto results = run_verification(o);
  std::size_t failed = 0;
  out << std::left << std::setw(16) << "module" << std::setw(40) << "check" << std::setw(14)
      << "defect" << std::setw(12) << "tolerance" << "result\n";
  for (const auto& r : results) {
    out << std::setw(16) << r.module << std::setw(40) << r.name << std::setw(14) << fmt(r.value, 3)
        << std::setw(12) << fmt(r.tolerance, 3) << (r.pass ? "PASS" : "FAIL") << "\n";
    if (!r.pass) ++failed;
  }
  out << results.size() - failed << "/" << results.size() << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated integer list, got " + s);
    }
  }
  return out;
}

}  // namespace

void RunManifest::add_input(const fs::path& p) { inputs.emplace_back(p.string(), sha256_hex(read_file(p))); }
void RunManifest::add_output(const fs::path& p) { outputs.emplace_back(p.string(), sha256_hex(read_file(p))); }

std::string RunManifest::to_text() const {
  std::ostringstream os;
  os << "command=" << command << "\n"
     << "tool_version=" << version << "\n"
     << "seed=" << seed << "\n"
     << "threads=" << threads << "\n"
     << "wall_seconds=" << fmt(wall_seconds, 6) << "\n";
  for (const auto& [k, v] : config.values()) os << "config." << k << "=" << v << "\n";
  for (const auto& [p, d] : inputs) os << "input." << p << "=" << d << "\n";
  for (const auto& [p, d] : outputs) os << "output." << p << "=" << d << "\n";
  return os.str();
}

Config default_train_config() {
  return Config::parse(R"(
data.task=poisson
data.path=
data.lmax=15
data.channels=1
data.n_train=256
data.n_test=64
data.seed=7
data.slope=0
data.nlat=0
data.nlon=0
data.grid=gauss
data.terrain=random
data.terrain_seed=1234
model.kind=layer
model.use_correction=true
model.use_mlp=false
model.mlp_ratio=2
model.embed=8
model.pos_enc=true
model.seed=1
train.lr=0.001
train.epochs=125
train.batch_size=16
train.max_steps=2000
train.seed=0
train.loss=weighted_relative
train.legacy_weights=false
output.dir=run
)");
}

Model build_model(const Config& c, const GridPtr& grid, int c_in, int c_out) {
  const std::string kind = c.get_string("model.kind");
  const auto seed = static_cast<std::uint64_t>(c.get_int("model.seed"));
  const double ratio = c.get_double("model.mlp_ratio");
  if (kind == "layer") {
    LayerConfig lc;
    lc.in_grid = grid;
    lc.c_in = c_in;
    lc.c_out = c_out;
    lc.mlp_ratio = ratio;
    lc.flags = flags_from(c);
    return layer_init(lc, seed);
  }
  if (kind == "gshnet") {
    GshNetConfig nc;
    nc.c_in = c_in;
    nc.c_out = c_out;
    nc.embed = static_cast<int>(c.get_int("model.embed"));
    nc.mlp_ratio = ratio;
    nc.full = grid;
    nc.pos_enc = c.get_bool("model.pos_enc");
    nc.use_correction = c.get_bool("model.use_correction");
    nc.use_mlp = c.get_bool("model.use_mlp");
    return build_gshnet(nc, seed);
  }
  throw ConfigError("model.kind must be layer or gshnet, got " + kind);
}

void save_checkpoint(const fs::path& path, const Model& model, const Config& cfg) {
  Checkpoint ck;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        GridPtr grid;
        int c_in = 0, c_out = 0, lmax = 0;
        if constexpr (std::is_same_v<M, GsnoLayer>) {
          grid = m.in_grid;
          c_in = m.c_in;
          c_out = m.c_out;
          lmax = m.lmax;
        } else {
          grid = m.full;
          c_in = m.cfg.c_in;
          c_out = m.cfg.c_out;
          lmax = m.full->lmax;
        }
        ck.header.nlat = static_cast<std::uint32_t>(grid->nlat);
        ck.header.nlon = static_cast<std::uint32_t>(grid->nlon);
        ck.header.channels = static_cast<std::uint32_t>(c_in);
        ck.header.lmax = static_cast<std::uint32_t>(lmax);
        ck.header.grid = grid->kind;
        Config blob = model_section(cfg);
        blob.set("io.c_out", std::to_string(c_out));
        ck.config = blob.to_text();
        ck.tensors = export_tensors(m);
      },
      model);
  write_file(path, encode_checkpoint(ck));
}

Model load_checkpoint(const fs::path& path) {
  Checkpoint ck;
  try {
    ck = decode_checkpoint(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const Config blob = Config::parse(ck.config);
  const auto grid = make_grid(static_cast<int>(ck.header.nlat), static_cast<int>(ck.header.nlon), ck.header.grid);
  Model m = build_model(blob, grid, static_cast<int>(ck.header.channels),
                        static_cast<int>(blob.get_int("io.c_out")));
  std::visit([&](auto& mm) { import_tensors(mm, ck.tensors); }, m);
  return m;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"sphg: spherical spectral operators, Green's-function layers and their verification"};
  app.footer(kHelpFooter);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: SPHG_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "Run the property suite; exit 0 iff every check passes");
  int verify_lmax = 15;
  verify->add_option("--lmax", verify_lmax, "Band limit of the transform checks")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset (poisson, position, position_hard)");
  std::string task_name;
  TaskSpec spec;
  std::string gen_out, grid_name = "gauss", terrain_name = "random";
  gen->add_option("task", task_name, "Task name")->required();
  gen->add_option("--lmax", spec.lmax, "Band limit of the random inputs");
  gen->add_option("--n", spec.n, "Number of pairs");
  gen->add_option("--seed", spec.seed, "Generator seed");
  gen->add_option("--slope", spec.slope, "Spectrum slope: coefficients scale as (1+l)^-slope");
  gen->add_option("--channels", spec.channels, "Channels per field");
  gen->add_option("--nlat", spec.nlat, "Rings (default lmax+1)");
  gen->add_option("--nlon", spec.nlon, "Longitudes (default 2*nlat)");
  gen->add_option("--grid", grid_name, "gauss or equiangular");
  gen->add_option("--terrain", terrain_name, "random or two_cap");
  gen->add_option("--terrain-seed", spec.terrain_seed, "Terrain seed");
  gen->add_option("--out", gen_out, "Output directory (default data/<task>)");

  auto* trn = app.add_subcommand("train", "Train a model from a key=value config file");
  std::string config_path;
  bool print_config = false;
  trn->add_option("config", config_path, "Config file");
  trn->add_flag("--print-config", print_config, "Print every setting with its default and exit");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
  std::string ckpt_path, data_dir, eval_out;
  ev->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();
  ev->add_option("dataset", data_dir, "Dataset directory")->required();
  ev->add_option("--out", eval_out, "CSV path (default eval.csv)");

  auto* ex = app.add_subcommand("export", "Write a field file as lat,lon,channel,value CSV");
  std::string field_path, export_out;
  ex->add_option("field", field_path, "Field file")->required();
  ex->add_option("--out", export_out, "CSV path (default stdout)");

  auto* bench = app.add_subcommand("bench", "Time SHT, ISHT and layer forward");
  std::string bench_lmax = "15,31";
  int bench_channels = 4, bench_reps = 5;
  bool bench_float = false;
  std::string bench_out;
  bench->add_option("--lmax", bench_lmax, "Comma-separated band limits");
  bench->add_option("--channels", bench_channels, "Channels")->check(CLI::PositiveNumber);
  bench->add_option("--reps", bench_reps, "Repetitions")->check(CLI::PositiveNumber);
  bench->add_flag("--float", bench_float, "Also time single-precision transforms");
  bench->add_option("--out", bench_out, "CSV path (default bench.csv)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run 'sphg --help' for usage\n";
    return 2;
  }
  if (trn->parsed() && config_path.empty() && !print_config) {
    err << "error: train needs a config file (or --print-config)\n";
    return 2;
  }
  if (threads <= 0) threads = default_threads();

  try {
    if (verify->parsed()) return cmd_verify(verify_lmax, threads, out);
    if (gen->parsed()) {
      spec.kind = task_kind_from_string(task_name);
      spec.grid = grid_kind_from_string(grid_name);
      spec.terrain = terrain_kind_from_string(terrain_name);
      return cmd_gen(spec, gen_out, threads, args, out);
    }
    if (trn->parsed()) return cmd_train(config_path, print_config, threads, args, out);
    if (ev->parsed()) return cmd_eval(ckpt_path, data_dir, eval_out, threads, args, out);
    if (ex->parsed()) return cmd_export(field_path, export_out, args, out);
    if (bench->parsed()) {
      return cmd_bench(parse_int_list(bench_lmax), bench_channels, bench_reps, bench_float, bench_out,
                       args, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace sphg
