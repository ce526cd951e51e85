#include "cli/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace sensorplace::cli {
namespace {

// Reads typed keys out of one TOML table and remembers which keys were
// consumed so that leftovers can be reported.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool present() const { return table_ != nullptr; }

  bool has(std::string_view key) const { return table_ && table_->contains(key); }

  template <typename T>
  std::optional<T> get(std::string_view key) {
    if (!table_) return std::nullopt;
    const toml::node* node = table_->get(key);
    if (!node) return std::nullopt;
    used_.insert(std::string(key));
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = node->value<double>()) return *v;
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = node->value<std::string>()) return *v;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = node->value<bool>()) return *v;
    } else if constexpr (std::is_same_v<T, std::int64_t>) {
      if (auto v = node->value<std::int64_t>()) return *v;
    }
    throw ConfigError(where(key) + " has the wrong type");
  }

  template <typename T>
  T require(std::string_view key) {
    auto v = get<T>(key);
    if (!v) throw ConfigError(where(key) + " is required");
    return *v;
  }

  Index count(std::string_view key, Index fallback) {
    const auto v = get<std::int64_t>(key);
    if (!v) return fallback;
    if (*v < 0) throw ConfigError(where(key) + " must be nonnegative");
    return static_cast<Index>(*v);
  }

  std::vector<double> numbers(std::string_view key) {
    std::vector<double> out;
    const toml::array* arr = array(key);
    if (!arr) return out;
    for (const auto& el : *arr) {
      const auto v = el.value<double>();
      if (!v) throw ConfigError(where(key) + " must contain only numbers");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<Index> indices(std::string_view key) {
    std::vector<Index> out;
    const toml::array* arr = array(key);
    if (!arr) return out;
    for (const auto& el : *arr) {
      const auto v = el.value<std::int64_t>();
      if (!v || *v < 0) throw ConfigError(where(key) + " must contain nonnegative integers");
      out.push_back(static_cast<Index>(*v));
    }
    return out;
  }

  std::vector<Point> points(std::string_view key) {
    std::vector<Point> out;
    const toml::array* arr = array(key);
    if (!arr) return out;
    for (const auto& el : *arr) {
      const toml::array* pair = el.as_array();
      if (!pair || pair->size() != 2) throw ConfigError(where(key) + " must be a list of [x, y] pairs");
      const auto x = (*pair)[0].value<double>(), y = (*pair)[1].value<double>();
      if (!x || !y) throw ConfigError(where(key) + " must be a list of [x, y] pairs");
      out.push_back({*x, *y, std::nullopt});
    }
    return out;
  }

  std::pair<double, double> pair(std::string_view key) {
    const auto v = numbers(key);
    if (v.size() != 2) throw ConfigError(where(key) + " must be a two-element list");
    return {v[0], v[1]};
  }

  void reject_unknown() const {
    if (!table_) return;
    for (const auto& [key, node] : *table_) {
      if (!used_.contains(std::string(key.str()))) throw ConfigError("unknown key " + where(key.str()));
    }
  }

  std::string where(std::string_view key) const {
    return name_.empty() ? "'" + std::string(key) + "'" : "'" + name_ + "." + std::string(key) + "'";
  }

 private:
  const toml::array* array(std::string_view key) {
    if (!table_) return nullptr;
    const toml::node* node = table_->get(key);
    if (!node) return nullptr;
    used_.insert(std::string(key));
    const toml::array* arr = node->as_array();
    if (!arr) throw ConfigError(where(key) + " must be an array");
    return arr;
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

const toml::table* sub_table(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (!node) return nullptr;
  if (!node->is_table()) throw ConfigError("'" + std::string(name) + "' must be a table");
  return node->as_table();
}

Location parse_location(const std::string& text) {
  if (text == "in") return Location::In;
  if (text == "out") return Location::Out;
  throw ConfigError("constraint.loc must be 'in' or 'out'");
}

ConstraintRegion parse_region(Section& sec, const std::string& shape) {
  const Location loc = parse_location(sec.get<std::string>("loc").value_or("in"));
  try {
    if (shape == "circle") {
      const auto [cx, cy] = sec.pair("center");
      return ConstraintRegion(Circle{cx, cy, sec.require<double>("radius")}, loc);
    }
    if (shape == "ellipse") {
      const auto [cx, cy] = sec.pair("center");
      const auto [a, b] = sec.pair("semi_axes");
      return ConstraintRegion(Ellipse{cx, cy, a, b, sec.get<double>("angle").value_or(0.0)}, loc);
    }
    if (shape == "polygon") return ConstraintRegion(Polygon{sec.points("vertices")}, loc);
    if (shape == "line") {
      const auto [x1, y1] = sec.pair("from");
      const auto [x2, y2] = sec.pair("to");
      const std::string side = sec.get<std::string>("side").value_or("left");
      if (side != "left" && side != "right") throw ConfigError("constraint.side must be 'left' or 'right'");
      return ConstraintRegion(Line{x1, y1, x2, y2, side == "left" ? Line::Side::Left : Line::Side::Right}, loc);
    }
    if (shape == "parabola") {
      const auto [vx, vy] = sec.pair("vertex");
      const std::string o = sec.get<std::string>("orientation").value_or("up");
      Parabola pb{vx, vy, sec.require<double>("focal")};
      if (o == "up") pb.orientation = Parabola::Orientation::Up;
      else if (o == "down") pb.orientation = Parabola::Orientation::Down;
      else if (o == "left") pb.orientation = Parabola::Orientation::Left;
      else if (o == "right") pb.orientation = Parabola::Orientation::Right;
      else throw ConfigError("constraint.orientation must be up, down, left or right");
      const std::string side = sec.get<std::string>("side").value_or("inside");
      if (side != "inside" && side != "outside") throw ConfigError("constraint.side must be 'inside' or 'outside'");
      pb.side = side == "inside" ? Parabola::Side::Inside : Parabola::Side::Outside;
      return ConstraintRegion(pb, loc);
    }
    if (shape == "cylinder") {
      const std::string axis = sec.get<std::string>("axis").value_or("z");
      Cylinder c{};
      if (axis == "x") c.axis = Cylinder::Axis::X;
      else if (axis == "y") c.axis = Cylinder::Axis::Y;
      else if (axis == "z") c.axis = Cylinder::Axis::Z;
      else throw ConfigError("constraint.axis must be x, y or z");
      std::tie(c.c1, c.c2) = sec.pair("center");
      c.radius = sec.require<double>("radius");
      std::tie(c.lo, c.hi) = sec.pair("range");
      return ConstraintRegion(c, loc);
    }
    if (shape == "expression") return parse_constraint_expression(sec.require<std::string>("expression"), loc);
  } catch (const sensorplace::Error& e) {
    throw ConfigError(std::string("constraint: ") + e.what());
  }
  throw ConfigError("unknown constraint shape '" + shape + "'");
}

ConstraintMode parse_mode(const std::string& text) {
  if (text == "max_n") return ConstraintMode::MaxN;
  if (text == "exact_n") return ConstraintMode::ExactN;
  if (text == "predetermined") return ConstraintMode::Predetermined;
  if (text == "distance") return ConstraintMode::Distance;
  throw ConfigError("constraint.mode must be max_n, exact_n, predetermined or distance");
}

}  // namespace

std::vector<Index> parse_p_range(std::string_view text) {
  auto number = [&](std::string_view s) -> Index {
    Index v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("bad sensor count '" + std::string(s) + "' in range '" + std::string(text) + "'");
    }
    return v;
  };
  std::vector<Index> out;
  if (text.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
      const auto pos = text.find(':', start);
      parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("range must be lo:hi or lo:hi:step");
    const Index lo = number(parts[0]), hi = number(parts[1]);
    const Index step = parts.size() == 3 ? number(parts[2]) : 1;
    if (step == 0 || lo > hi) throw ConfigError("empty sensor-count range '" + std::string(text) + "'");
    for (Index p = lo; p <= hi; p += step) out.push_back(p);
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto pos = text.find(',', start);
      out.push_back(number(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (out[k] == 0) throw ConfigError("sensor counts must be positive");
    if (k > 0 && out[k] <= out[k - 1]) throw ConfigError("sensor counts must be strictly increasing");
  }
  return out;
}

RunConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config syntax error: " << e.description() << " (line " << e.source().begin.line << ")";
    throw ConfigError(msg.str());
  }
  auto resolve = [&](const std::string& p) { return (base_dir / p).lexically_normal(); };

  static const std::set<std::string> kSections = {"data", "grid", "basis", "optimizer", "prior",
                                                  "constraint", "reconstruct", "rmse_curve"};
  Section top(&root, "");
  RunConfig cfg;

  Section data(sub_table(root, "data"), "data");
  if (!data.present()) throw ConfigError("missing [data] section");
  cfg.train_path = resolve(data.require<std::string>("train"));
  if (auto t = data.get<std::string>("test")) cfg.test_path = resolve(*t);
  cfg.header = data.get<bool>("header").value_or(false);
  data.reject_unknown();

  Section grid(sub_table(root, "grid"), "grid");
  if (!grid.present()) throw ConfigError("missing [grid] section");
  if (grid.has("image_shape")) {
    const auto shape = grid.indices("image_shape");
    if (shape.size() != 2 || shape[0] == 0 || shape[1] == 0) {
      throw ConfigError("'grid.image_shape' must be [height, width] with positive entries");
    }
    cfg.image = ImageGrid{shape[0], shape[1]};
    if (grid.has("coordinates")) throw ConfigError("[grid] takes image_shape or coordinates, not both");
  } else {
    cfg.coordinates_path = resolve(grid.require<std::string>("coordinates"));
    cfg.x_column = grid.get<std::string>("x_column").value_or("x");
    cfg.y_column = grid.get<std::string>("y_column").value_or("y");
    cfg.z_column = grid.get<std::string>("z_column");
  }
  grid.reject_unknown();

  cfg.n_sensors = top.count("n_sensors", 0);
  if (cfg.n_sensors == 0) throw ConfigError("'n_sensors' is required and must be positive");
  if (auto out = top.get<std::string>("output")) cfg.output_dir = resolve(*out);

  Section basis(sub_table(root, "basis"), "basis");
  const std::string kind = basis.get<std::string>("kind").value_or("svd");
  if (kind == "identity") cfg.basis.kind = BasisKind::Identity;
  else if (kind == "svd") cfg.basis.kind = BasisKind::Svd;
  else if (kind == "random_projection") cfg.basis.kind = BasisKind::RandomProjection;
  else if (kind == "custom") cfg.basis.kind = BasisKind::Custom;
  else throw ConfigError("basis.kind must be identity, svd, random_projection or custom");
  cfg.basis.modes = basis.count("modes", 0);
  if ((cfg.basis.kind == BasisKind::Svd || cfg.basis.kind == BasisKind::RandomProjection) && cfg.basis.modes == 0) {
    throw ConfigError("'basis.modes' is required for svd and random_projection");
  }
  cfg.basis.seed = static_cast<std::uint64_t>(basis.count("seed", 0));
  cfg.basis.center = basis.get<bool>("center").value_or(false);
  if (auto custom = basis.get<std::string>("custom")) cfg.custom_basis_path = resolve(*custom);
  if (cfg.basis.kind == BasisKind::Custom && !cfg.custom_basis_path) throw ConfigError("'basis.custom' path is required");
  basis.reject_unknown();

  Section opt(sub_table(root, "optimizer"), "optimizer");
  const std::string okind = opt.get<std::string>("kind").value_or("qr");
  if (okind == "qr") cfg.optimizer = OptimizerKind::Qr;
  else if (okind == "ccqr") cfg.optimizer = OptimizerKind::Ccqr;
  else if (okind == "gqr") cfg.optimizer = OptimizerKind::Gqr;
  else if (okind == "tpgr") cfg.optimizer = OptimizerKind::Tpgr;
  else throw ConfigError("optimizer.kind must be qr, ccqr, gqr or tpgr");
  if (auto costs = opt.get<std::string>("costs")) cfg.costs_path = resolve(*costs);
  if (cfg.optimizer == OptimizerKind::Ccqr && !cfg.costs_path) throw ConfigError("'optimizer.costs' is required for ccqr");
  opt.reject_unknown();

  Section prior(sub_table(root, "prior"), "prior");
  if (prior.present()) {
    PriorSpec spec;
    const std::string pkind = prior.get<std::string>("kind").value_or("flat");
    if (pkind == "flat") {
      spec.kind = FlatPrior{prior.get<double>("scale").value_or(1.0)};
      if (!(std::get<FlatPrior>(spec.kind).scale > 0)) throw ConfigError("'prior.scale' must be positive");
    } else if (pkind == "decreasing") {
      spec.kind = DecreasingPrior{};
    } else if (pkind == "explicit") {
      const auto values = prior.numbers("values");
      if (values.empty()) throw ConfigError("'prior.values' is required for an explicit prior");
      spec.kind = ExplicitPrior{Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()))};
    } else {
      throw ConfigError("prior.kind must be flat, decreasing or explicit");
    }
    spec.noise = prior.get<double>("noise").value_or(1.0);
    if (!(spec.noise > 0)) throw ConfigError("'prior.noise' must be positive");
    cfg.prior = spec;
  }
  prior.reject_unknown();
  if (cfg.optimizer == OptimizerKind::Tpgr && !cfg.prior) throw ConfigError("tpgr needs a [prior] section");

  Section con(sub_table(root, "constraint"), "constraint");
  if (con.present()) {
    ConstraintConfig cc;
    cc.mode = parse_mode(con.require<std::string>("mode"));
    if (auto shape = con.get<std::string>("shape")) cc.region = parse_region(con, *shape);
    switch (cc.mode) {
      case ConstraintMode::MaxN:
      case ConstraintMode::ExactN:
        if (!cc.region) throw ConfigError("max_n / exact_n constraints need a shape");
        if (!con.has("s")) throw ConfigError("'constraint.s' is required");
        cc.s = con.count("s", 0);
        break;
      case ConstraintMode::Predetermined:
        cc.predetermined = con.indices("sensors");
        if (cc.predetermined.empty()) throw ConfigError("'constraint.sensors' is required for predetermined");
        cc.s = cc.predetermined.size();
        break;
      case ConstraintMode::Distance:
        cc.d = con.require<double>("d");
        if (!(cc.d >= 0)) throw ConfigError("'constraint.d' must be nonnegative");
        break;
    }
    cfg.constraint = std::move(cc);
  }
  con.reject_unknown();
  if (cfg.optimizer == OptimizerKind::Gqr && !cfg.constraint) throw ConfigError("gqr needs a [constraint] section");

  Section rec(sub_table(root, "reconstruct"), "reconstruct");
  const std::string method = rec.get<std::string>("method").value_or("rls");
  if (method != "rls" && method != "unregularized") throw ConfigError("reconstruct.method must be rls or unregularized");
  cfg.regularized = method == "rls";
  rec.reject_unknown();

  Section curve(sub_table(root, "rmse_curve"), "rmse_curve");
  if (auto range = curve.get<std::string>("p_range")) cfg.rmse_curve.p_values = parse_p_range(*range);
  cfg.rmse_curve.measurement_noise = curve.get<double>("measurement_noise").value_or(0.0);
  if (!(cfg.rmse_curve.measurement_noise >= 0)) throw ConfigError("'rmse_curve.measurement_noise' must be nonnegative");
  cfg.rmse_curve.noise_seed = static_cast<std::uint64_t>(curve.count("noise_seed", 0));
  curve.reject_unknown();

  for (const auto& [key, node] : root) {
    const std::string k(key.str());
    if (kSections.contains(k)) continue;
    if (k == "n_sensors" || k == "output") continue;
    throw ConfigError("unknown key '" + k + "'");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::FileError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.parent_path());
}

}  // namespace sensorplace::cli
