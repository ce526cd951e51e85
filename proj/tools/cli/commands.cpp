#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <set>

namespace sensorplace::cli {

void Reporter::info(std::string_view message) const {
  if (!quiet_) out_ << message << '\n';
}

void Reporter::warn(std::string_view message) const {
  if (!quiet_) err_ << "warning: " << message << '\n';
}

std::vector<Index> parse_index_list(std::string_view text) {
  std::vector<Index> out;
  if (io::detail::trim(text).empty()) return out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    std::string_view item = io::detail::trim(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    Index v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size()) {
      throw ConfigError("bad state index '" + std::string(item) + "' in '" + std::string(text) + "'");
    }
    out.push_back(v);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

namespace {

// Config, data and geometry loaded and cross-checked before any fitting.
struct Context {
  RunConfig cfg;
  SnapshotMatrix train;
  GridGeometry geometry;
  std::optional<Matrix> custom_modes;
  std::vector<double> costs;
};

std::filesystem::path output_dir(const GlobalOptions& global, const RunConfig* cfg) {
  if (global.output) return *global.output;
  return cfg ? cfg->output_dir : std::filesystem::path(".");
}

std::vector<double> read_vector_csv(const std::filesystem::path& path, bool header) {
  const Matrix m = io::read_matrix_csv(path, header);
  if (m.rows() != 1 && m.cols() != 1) throw ConfigError(path.string() + ": expected a single row or column");
  return {m.data(), m.data() + m.size()};
}

Context load_context(const GlobalOptions& global) {
  if (!global.config) throw ConfigError("--config is required for this command");
  RunConfig cfg = load_config(*global.config);
  if (global.seed) {
    cfg.basis.seed = *global.seed;
    cfg.rmse_curve.noise_seed = *global.seed;
  }
  SnapshotMatrix train(io::read_matrix_csv(cfg.train_path, cfg.header));
  GridGeometry geometry = cfg.image ? GridGeometry(*cfg.image)
                                    : GridGeometry(io::read_coordinates_csv(*cfg.coordinates_path, cfg.x_column,
                                                                            cfg.y_column, cfg.z_column));
  if (geometry.size() != train.n_states()) {
    throw ConfigError("grid has " + std::to_string(geometry.size()) + " locations but the data has " +
                      std::to_string(train.n_states()) + " states");
  }
  Context ctx{std::move(cfg), std::move(train), std::move(geometry), std::nullopt, {}};
  if (ctx.cfg.custom_basis_path) ctx.custom_modes = io::read_matrix_csv(*ctx.cfg.custom_basis_path);
  if (ctx.cfg.costs_path) {
    ctx.costs = read_vector_csv(*ctx.cfg.costs_path, false);
    if (ctx.costs.size() != ctx.train.n_states()) throw ConfigError("cost vector length does not match the number of states");
  }
  if (ctx.cfg.constraint) {
    const auto& c = *ctx.cfg.constraint;
    for (const Index i : c.predetermined) {
      if (i >= ctx.train.n_states()) throw ConfigError("predetermined sensor " + std::to_string(i) + " is out of range");
    }
  }
  return ctx;
}

// States inside the configured region, or the predetermined list when there
// is no region.
std::vector<Index> constrained_indices(const Context& ctx) {
  const auto& c = *ctx.cfg.constraint;
  if (c.region) return get_constraint_indices(*c.region, ctx.geometry);
  return c.predetermined;
}

SsporModel build_model(const Context& ctx, const Reporter& report) {
  BasisConfig basis = ctx.cfg.basis;
  basis.custom_modes = ctx.custom_modes;
  OptimizerConfig optimizer = QrOptimizer{};
  switch (ctx.cfg.optimizer) {
    case OptimizerKind::Qr: break;
    case OptimizerKind::Ccqr: optimizer = CcqrOptimizer{ctx.costs}; break;
    case OptimizerKind::Tpgr: optimizer = TpgrOptimizer{*ctx.cfg.prior}; break;
    case OptimizerKind::Gqr: {
      const auto& c = *ctx.cfg.constraint;
      GqrOptimizer g;
      g.spec.idx_constrained = constrained_indices(ctx);
      g.spec.mode = c.mode;
      g.spec.s = c.s;
      g.spec.d = c.d;
      if (c.mode == ConstraintMode::Distance) g.spec.geometry = ctx.geometry;
      if (c.mode == ConstraintMode::Predetermined) g.predetermined = c.predetermined;
      optimizer = std::move(g);
      break;
    }
  }
  SsporModel model(std::move(basis), std::move(optimizer), ctx.cfg.n_sensors);
  model.set_warning_handler([&report](std::string_view m) { report.warn(m); });
  return model;
}

std::optional<PriorSpec> prior_or_warn(const Context& ctx, const Reporter& report) {
  if (!ctx.cfg.prior) report.warn("no [prior] section; using a flat prior of scale 1.0 with noise 1.0");
  return ctx.cfg.prior;
}

PriorSpec prior_or_flat(const Context& ctx, const Reporter& report) {
  return prior_or_warn(ctx, report).value_or(PriorSpec{});
}

std::string point_columns(const GridGeometry& geometry, Index i) {
  const Point p = geometry.point(i);
  std::string out = io::format_double(p.x) + "," + io::format_double(p.y);
  if (geometry.has_z()) out += "," + io::format_double(p.z.value_or(0.0));
  return out;
}

std::string field_csv(const Vector& values, std::string_view column) {
  std::string out = "state_index," + std::string(column) + "\n";
  for (Eigen::Index i = 0; i < values.size(); ++i) out += std::to_string(i) + "," + io::format_double(values(i)) + "\n";
  return out;
}

// Stages files and reports them once they are in place.
class Outputs {
 public:
  Outputs(std::filesystem::path dir, const Reporter& report) : dir_(dir), staged_(std::move(dir)), report_(report) {}

  void add(const std::string& name, std::string_view content) {
    staged_.add(name, content);
    names_.push_back(name);
  }

  // <stem>.csv always, <stem>.pgm only on an image grid.
  void add_field(const Context& ctx, const Vector& values, const std::string& stem, std::string_view column) {
    add(stem + ".csv", field_csv(values, column));
    if (const ImageGrid* g = ctx.geometry.image()) {
      add(stem + ".pgm", io::to_pgm16(values, g->height, g->width));
    } else {
      report_.info("grid is a point cloud; " + stem + ".pgm not written");
    }
  }

  void commit() {
    staged_.commit();
    for (const auto& name : names_) report_.info("wrote " + (dir_ / name).string());
  }

 private:
  std::filesystem::path dir_;
  io::StagedOutput staged_;
  const Reporter& report_;
  std::vector<std::string> names_;
};

}  // namespace

void cmd_fit(const GlobalOptions& global, const Reporter& report) {
  const Context ctx = load_context(global);
  SsporModel model = build_model(ctx, report);
  model.fit(ctx.train);
  const SensorSelection sel = model.get_selected_sensors();

  std::vector<char> in_region(ctx.train.n_states(), 0);
  if (ctx.cfg.constraint) {
    for (const Index i : constrained_indices(ctx)) in_region[i] = 1;
  }
  // A sensor is "moved" when the constraint pushed it off the unconstrained
  // QR choice for the same count.
  std::set<Index> unconstrained;
  if (ctx.cfg.optimizer == OptimizerKind::Gqr) {
    const auto plain = qr_select(model.basis(), sel.size());
    unconstrained.insert(plain.gamma.begin(), plain.gamma.end());
  }

  std::string sensors = "rank,state_index,x,y";
  if (ctx.geometry.has_z()) sensors += ",z";
  sensors += ",in_constraint_region,moved\n";
  for (Index k = 0; k < sel.size(); ++k) {
    const Index i = sel.gamma[k];
    const bool moved = !unconstrained.empty() && !unconstrained.contains(i);
    sensors += std::to_string(k + 1) + "," + std::to_string(i) + "," + point_columns(ctx.geometry, i) + "," +
               (in_region[i] ? "1" : "0") + "," + (moved ? "1" : "0") + "\n";
  }
  std::string pivots = ctx.cfg.optimizer == OptimizerKind::Tpgr ? "rank,step_energy\n" : "rank,step_norm\n";
  for (std::size_t k = 0; k < sel.scores.size(); ++k) {
    pivots += std::to_string(k + 1) + "," + io::format_double(sel.scores[k]) + "\n";
  }

  Outputs out(output_dir(global, &ctx.cfg), report);
  out.add("sensors.csv", sensors);
  out.add("pivots.csv", pivots);
  out.commit();
}

void cmd_reconstruct(const GlobalOptions& global, const ReconstructOptions& opts, const Reporter& report) {
  if (opts.test && opts.measurements) throw ConfigError("give --test or --measurements, not both");
  const Context ctx = load_context(global);
  bool regularized = ctx.cfg.regularized;
  if (opts.method) {
    if (*opts.method != "rls" && *opts.method != "unregularized") throw ConfigError("--method must be rls or unregularized");
    regularized = *opts.method == "rls";
  }
  std::optional<SnapshotMatrix> test;
  std::optional<Matrix> measurements;
  if (opts.measurements) {
    measurements = io::read_matrix_csv(*opts.measurements);
  } else {
    const auto path = opts.test ? opts.test : ctx.cfg.test_path;
    if (!path) throw ConfigError("reconstruct needs --test, --measurements or data.test in the config");
    test = SnapshotMatrix(io::read_matrix_csv(*path, ctx.cfg.header));
    if (test->n_states() != ctx.train.n_states()) throw ConfigError("test data has the wrong number of states");
  }

  SsporModel model = build_model(ctx, report);
  model.fit(ctx.train);
  const ReconstructionMatrix rm =
      regularized ? model.reconstruction_matrix(true, prior_or_warn(ctx, report)) : model.reconstruction_matrix(false);
  const Matrix y = test ? model.measure(*test) : *measurements;
  if (static_cast<Index>(y.cols()) != model.get_selected_sensors().size()) {
    throw Error(ErrorCode::InvalidMeasurement, "measurements have " + std::to_string(y.cols()) + " columns but " +
                                                   std::to_string(model.get_selected_sensors().size()) +
                                                   " sensors are placed");
  }
  const Matrix estimate = model.predict(y, rm);

  Outputs out(output_dir(global, &ctx.cfg), report);
  out.add("reconstruction.csv", io::matrix_to_csv(estimate));
  if (test) {
    const double rmse = std::sqrt((estimate - test->data()).squaredNorm() / static_cast<double>(estimate.size()));
    out.add("rmse.txt", io::format_double(rmse) + "\n");
  }
  out.commit();
}

void cmd_heatmap(const GlobalOptions& global, const Reporter& report) {
  const Context ctx = load_context(global);
  SsporModel model = build_model(ctx, report);
  model.fit(ctx.train);
  const auto prior = prior_or_warn(ctx, report);
  const ReconstructionMatrix rm =
      ctx.cfg.regularized ? model.reconstruction_matrix(true, prior) : model.reconstruction_matrix(false);
  const double noise = prior ? prior->noise : 1.0;
  const UncertaintyMap map = model.uncertainty(rm, noise);

  Outputs out(output_dir(global, &ctx.cfg), report);
  out.add_field(ctx, map.sigma, "sigma", "sigma");
  out.commit();
}

void cmd_landscape(const GlobalOptions& global, const LandscapeOptions& opts, const Reporter& report) {
  if (opts.kind != "one" && opts.kind != "two") throw ConfigError("--kind must be one or two");
  const Context ctx = load_context(global);
  SsporModel model = build_model(ctx, report);
  model.fit(ctx.train);
  const PriorSpec prior = prior_or_flat(ctx, report);

  EnergyLandscape landscape;
  if (opts.kind == "one") {
    landscape = model.one_pt_energy_landscape(prior);
  } else {
    const std::vector<Index> ref = opts.ref ? parse_index_list(*opts.ref) : model.get_selected_sensors().gamma;
    landscape = model.two_pt_energy_landscape(prior, ref);
  }

  Outputs out(output_dir(global, &ctx.cfg), report);
  out.add_field(ctx, landscape.values, "landscape", "energy");
  out.commit();
}

void cmd_rmse_curve(const GlobalOptions& global, const RmseCurveOptions& opts, const Reporter& report) {
  const Context ctx = load_context(global);
  const std::vector<Index> p_values = opts.p_range ? parse_p_range(*opts.p_range) : ctx.cfg.rmse_curve.p_values;
  if (p_values.empty()) throw ConfigError("rmse-curve needs --p-range or rmse_curve.p_range in the config");
  if (!ctx.cfg.test_path) throw ConfigError("rmse-curve needs data.test in the config");
  const SnapshotMatrix test(io::read_matrix_csv(*ctx.cfg.test_path, ctx.cfg.header));
  if (test.n_states() != ctx.train.n_states()) throw ConfigError("test data has the wrong number of states");

  const SsporModel model = build_model(ctx, report);
  const PriorSpec prior = prior_or_flat(ctx, report);
  const RmseCurve curve = rmse_curve(model, ctx.train, test, p_values, prior,
                                     NoiseInjection{ctx.cfg.rmse_curve.measurement_noise, ctx.cfg.rmse_curve.noise_seed});

  std::string csv = "p,rmse_ls,rmse_rls\n";
  for (const auto& pt : curve.points) {
    csv += std::to_string(pt.p) + "," + io::format_double(pt.rmse_ls) + "," + io::format_double(pt.rmse_rls) + "\n";
  }
  Outputs out(output_dir(global, &ctx.cfg), report);
  out.add("rmse_curve.csv", csv);
  out.commit();
}

void cmd_generate_synthetic(const GlobalOptions& global, const SyntheticOptions& opts, const Reporter& report) {
  SyntheticFieldOptions fields = opts.fields;
  if (opts.fields.snapshots == 0 || opts.test_snapshots == 0) {
    throw ConfigError("--snapshots and --test-snapshots must be positive");
  }
  fields.snapshots += opts.test_snapshots;
  if (global.seed) fields.seed = *global.seed;
  // One draw so train and test share the same spatial patterns.
  const Matrix all = generate_smooth_fields(fields);
  const auto n_train = static_cast<Eigen::Index>(opts.fields.snapshots);

  Outputs out(output_dir(global, nullptr), report);
  out.add("train.csv", io::matrix_to_csv(all.topRows(n_train)));
  out.add("test.csv", io::matrix_to_csv(all.bottomRows(all.rows() - n_train)));
  out.commit();
}

}  // namespace sensorplace::cli
