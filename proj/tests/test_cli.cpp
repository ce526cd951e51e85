#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sys/wait.h>
#include <sstream>

#include "cli/config.hpp"

namespace fs = std::filesystem;
using namespace sensorplace;
using sensorplace::cli::ConfigError;
using sensorplace::cli::parse_config;
using sensorplace::cli::parse_p_range;

namespace {

const std::string kMinimal = R"(
n_sensors = 4
[data]
train = "train.csv"
[grid]
image_shape = [4, 4]
[basis]
kind = "svd"
modes = 4
)";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

struct RunResult {
  int code;
  std::string out, err;
};

// Runs the CLI binary with the given arguments inside dir.
RunResult run(const fs::path& dir, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" SENSORPLACE_BIN "' " + args + " >stdout.txt 2>stderr.txt";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(dir / "stdout.txt"), slurp(dir / "stderr.txt")};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sensorplace_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  void generate() {
    const auto r = run(dir_, "generate-synthetic --height 12 --width 12 --snapshots 60 --test-snapshots 20 --components 15 --seed 3 --output data --quiet");
    ASSERT_EQ(r.code, 0) << r.err;
  }

  fs::path dir_;
};

}  // namespace

// ---- config parsing ----

TEST(Config, MinimalDefaults) {
  const auto cfg = parse_config(kMinimal, "/base");
  EXPECT_EQ(cfg.train_path, fs::path("/base/train.csv"));
  EXPECT_EQ(cfg.n_sensors, 4u);
  ASSERT_TRUE(cfg.image);
  EXPECT_EQ(cfg.image->height, 4u);
  EXPECT_EQ(cfg.optimizer, cli::OptimizerKind::Qr);
  EXPECT_TRUE(cfg.regularized);
  EXPECT_FALSE(cfg.basis.center);
  EXPECT_FALSE(cfg.prior);
}

TEST(Config, ConstraintShapes) {
  const std::string base = kMinimal + "[optimizer]\nkind = \"gqr\"\n";
  const auto circle = parse_config(base + "[constraint]\nshape = \"circle\"\ncenter = [20, 5]\nradius = 5\nmode = \"exact_n\"\ns = 4\n", ".");
  ASSERT_TRUE(circle.constraint && circle.constraint->region);
  EXPECT_TRUE(circle.constraint->region->contains({20, 9, std::nullopt}));
  EXPECT_EQ(circle.constraint->s, 4u);
  const auto poly = parse_config(base + "[constraint]\nshape = \"polygon\"\nvertices = [[0,0],[2,0],[2,2]]\nloc = \"out\"\nmode = \"max_n\"\ns = 0\n", ".");
  EXPECT_FALSE(poly.constraint->region->contains({1.5, 0.5, std::nullopt}));
  const auto expr = parse_config(base + "[constraint]\nshape = \"expression\"\nexpression = \"y >= 0\"\nmode = \"distance\"\nd = 2.5\n", ".");
  EXPECT_EQ(expr.constraint->d, 2.5);
  const auto pre = parse_config(base + "[constraint]\nmode = \"predetermined\"\nsensors = [3, 1]\n", ".");
  EXPECT_EQ(pre.constraint->predetermined, (std::vector<Index>{3, 1}));
  EXPECT_EQ(pre.constraint->s, 2u);
}

TEST(Config, Rejections) {
  const auto rejects = [](const std::string& text) {
    EXPECT_THROW(parse_config(text, "."), ConfigError) << text;
  };
  rejects(kMinimal + "bogus = 1\n");
  rejects(kMinimal + "[basis2]\n");
  rejects(kMinimal + "[prior]\nkind = \"flat\"\nscale = -1\n");
  rejects(kMinimal + "[prior]\nkind = \"weird\"\n");
  rejects(kMinimal + "[optimizer]\nkind = \"gqr\"\n");   // needs a constraint
  rejects(kMinimal + "[optimizer]\nkind = \"tpgr\"\n");  // needs a prior
  rejects(kMinimal + "[optimizer]\nkind = \"ccqr\"\n");  // needs costs
  rejects(kMinimal + "[constraint]\nshape = \"circle\"\ncenter = [0, 0]\nradius = 0\nmode = \"max_n\"\ns = 1\n");
  rejects(kMinimal + "[constraint]\nshape = \"expression\"\nexpression = \"x^2 + <= 3\"\nmode = \"max_n\"\ns = 1\n");
  rejects(kMinimal + "[constraint]\nshape = \"circle\"\ncenter = [0, 0]\nradius = 1\nmode = \"max_n\"\ns = 1\nextra = 2\n");
  rejects("n_sensors = 2\n[grid]\nimage_shape = [2, 2]\n");
  rejects("n_sensors = = 2\n");
  rejects(kMinimal + "[reconstruct]\nmethod = \"lasso\"\n");
}

TEST(Config, PRange) {
  EXPECT_EQ(parse_p_range("5:40:5"), (std::vector<Index>{5, 10, 15, 20, 25, 30, 35, 40}));
  EXPECT_EQ(parse_p_range("3:5"), (std::vector<Index>{3, 4, 5}));
  EXPECT_EQ(parse_p_range("5,10,20"), (std::vector<Index>{5, 10, 20}));
  EXPECT_THROW(parse_p_range("10,5"), ConfigError);
  EXPECT_THROW(parse_p_range("0:3"), ConfigError);
  EXPECT_THROW(parse_p_range("a:b"), ConfigError);
}

// ---- end to end ----

TEST_F(CliTest, FullWorkflowIsByteIdentical) {
  generate();
  spit(dir_ / "run.toml", R"(
n_sensors = 8
output = "out"
[data]
train = "data/train.csv"
test = "data/test.csv"
[grid]
image_shape = [12, 12]
[basis]
kind = "svd"
modes = 8
[prior]
kind = "decreasing"
noise = 0.05
[rmse_curve]
p_range = "2:8:2"
measurement_noise = 0.05
noise_seed = 1
)");
  const std::vector<std::string> steps = {"fit", "reconstruct", "heatmap", "landscape --kind two", "rmse-curve"};
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& s : steps) {
      const auto r = run(dir_, s + " --config run.toml --quiet");
      ASSERT_EQ(r.code, 0) << s << ": " << r.err;
    }
    for (const auto& entry : fs::directory_iterator(dir_ / "out")) {
      const auto name = entry.path().filename().string();
      EXPECT_NE(entry.path().extension(), ".tmp");
      if (pass == 0) first[name] = slurp(entry.path());
      else EXPECT_EQ(first.at(name), slurp(entry.path())) << name;
    }
  }
  const auto sensors = lines(first.at("sensors.csv"));
  ASSERT_EQ(sensors.size(), 9u);
  EXPECT_EQ(sensors[0], "rank,state_index,x,y,in_constraint_region,moved");
  EXPECT_EQ(lines(first.at("pivots.csv"))[0], "rank,step_norm");
  EXPECT_EQ(lines(first.at("sigma.csv")).size(), 145u);
  EXPECT_EQ(first.at("sigma.pgm").substr(0, 3), "P5\n");
  const auto curve = lines(first.at("rmse_curve.csv"));
  ASSERT_EQ(curve.size(), 5u);
  EXPECT_EQ(curve[0], "p,rmse_ls,rmse_rls");
  EXPECT_TRUE(curve[1].starts_with("2,"));
  EXPECT_EQ(lines(first.at("reconstruction.csv")).size(), 20u);
  EXPECT_EQ(lines(first.at("landscape.csv"))[0], "state_index,energy");
}

TEST_F(CliTest, GeneratedCsvRoundTripsBitIdentically) {
  generate();
  const Matrix m = io::read_matrix_csv(dir_ / "data/train.csv");
  EXPECT_EQ(m.rows(), 60);
  EXPECT_EQ(m.cols(), 144);
  EXPECT_EQ(io::matrix_to_csv(m), slurp(dir_ / "data/train.csv"));
  SyntheticFieldOptions opt;
  opt.height = 12;
  opt.width = 12;
  opt.snapshots = 80;
  opt.components = 15;
  opt.seed = 3;
  EXPECT_EQ(m, Matrix(generate_smooth_fields(opt).topRows(60)));
}

TEST_F(CliTest, ListingCircleExactFlagsFour) {
  const auto r0 = run(dir_, "generate-synthetic --snapshots 100 --test-snapshots 10 --seed 5 --output data --quiet");
  ASSERT_EQ(r0.code, 0) << r0.err;
  spit(dir_ / "circle.toml", R"(
n_sensors = 10
[data]
train = "data/train.csv"
[grid]
image_shape = [32, 32]
[basis]
kind = "svd"
modes = 10
[optimizer]
kind = "gqr"
[constraint]
shape = "circle"
center = [20, 5]
radius = 5
mode = "exact_n"
s = 4
)");
  const auto r = run(dir_, "fit --config circle.toml --output out");
  ASSERT_EQ(r.code, 0) << r.err;
  int flagged = 0;
  const auto rows = lines(slurp(dir_ / "out/sensors.csv"));
  ASSERT_EQ(rows.size(), 11u);
  for (std::size_t k = 1; k < rows.size(); ++k) flagged += rows[k].substr(rows[k].size() - 3, 1) == "1";
  EXPECT_EQ(flagged, 4);
  EXPECT_NE(r.out.find("wrote"), std::string::npos);

  // Keep-out box with s = 0: nothing flagged.
  spit(dir_ / "box.toml", R"(
n_sensors = 10
[data]
train = "data/train.csv"
[grid]
image_shape = [32, 32]
[basis]
kind = "svd"
modes = 10
[optimizer]
kind = "gqr"
[constraint]
shape = "polygon"
vertices = [[8, 8], [24, 8], [24, 24], [8, 24]]
mode = "max_n"
s = 0
)");
  ASSERT_EQ(run(dir_, "fit --config box.toml --output box --quiet").code, 0);
  for (const auto& row : lines(slurp(dir_ / "box/sensors.csv"))) {
    if (row.starts_with("rank")) continue;
    EXPECT_EQ(row.substr(row.size() - 3, 1), "0") << row;
  }
}

TEST_F(CliTest, PointCloudWithZAndNoPgm) {
  std::string coords = "X (m),Y (m),Z (m)\n", data;
  for (int i = 0; i < 30; ++i) coords += std::to_string(i % 6) + "," + std::to_string(i / 6) + "," + std::to_string(i % 3) + "\n";
  for (int s = 0; s < 12; ++s) {
    for (int i = 0; i < 30; ++i) data += (i ? "," : "") + std::to_string(std::sin(0.3 * i * (s + 1)) + 0.1 * s);
    data += "\n";
  }
  spit(dir_ / "coords.csv", coords);
  spit(dir_ / "train.csv", data);
  spit(dir_ / "cloud.toml", R"toml(
n_sensors = 4
[data]
train = "train.csv"
[grid]
coordinates = "coords.csv"
x_column = "X (m)"
y_column = "Y (m)"
z_column = "Z (m)"
[basis]
kind = "svd"
modes = 4
)toml");
  const auto fit = run(dir_, "fit --config cloud.toml --output out");
  ASSERT_EQ(fit.code, 0) << fit.err;
  EXPECT_EQ(lines(slurp(dir_ / "out/sensors.csv"))[0], "rank,state_index,x,y,z,in_constraint_region,moved");
  const auto heat = run(dir_, "heatmap --config cloud.toml --output out");
  ASSERT_EQ(heat.code, 0) << heat.err;
  EXPECT_TRUE(fs::exists(dir_ / "out/sigma.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "out/sigma.pgm"));
  EXPECT_NE(heat.out.find("point cloud"), std::string::npos);
  EXPECT_NE(heat.err.find("flat prior"), std::string::npos);
}

TEST_F(CliTest, ReconstructModes) {
  generate();
  spit(dir_ / "run.toml", R"(
n_sensors = 6
[data]
train = "data/train.csv"
test = "data/test.csv"
[grid]
image_shape = [12, 12]
[basis]
kind = "svd"
modes = 6
[prior]
kind = "decreasing"
noise = 0.5
)");
  ASSERT_EQ(run(dir_, "reconstruct --config run.toml --output rls --quiet").code, 0);
  ASSERT_EQ(run(dir_, "reconstruct --config run.toml --output ls --method unregularized --quiet").code, 0);
  EXPECT_NE(slurp(dir_ / "rls/reconstruction.csv"), slurp(dir_ / "ls/reconstruction.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "rls/rmse.txt"));

  // Raw measurements: width must match the sensor count.
  spit(dir_ / "meas.csv", "1,2,3,4,5,6\n0,0,0,0,0,0\n");
  ASSERT_EQ(run(dir_, "reconstruct --config run.toml --measurements meas.csv --output m --quiet").code, 0);
  EXPECT_EQ(lines(slurp(dir_ / "m/reconstruction.csv")).size(), 2u);
  EXPECT_FALSE(fs::exists(dir_ / "m/rmse.txt"));
  spit(dir_ / "bad.csv", "1,2,3\n");
  const auto bad = run(dir_, "reconstruct --config run.toml --measurements bad.csv --output b");
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.err.find("InvalidMeasurement"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "b/reconstruction.csv"));
}

TEST_F(CliTest, IdentityBasisReconstructsExactly) {
  spit(dir_ / "train.csv", "1,2,3,4\n2,0,1,5\n");
  spit(dir_ / "run.toml", R"(
n_sensors = 4
[data]
train = "train.csv"
test = "train.csv"
[grid]
image_shape = [2, 2]
[basis]
kind = "identity"
[reconstruct]
method = "unregularized"
)");
  ASSERT_EQ(run(dir_, "reconstruct --config run.toml --output out --quiet").code, 0);
  EXPECT_EQ(slurp(dir_ / "out/rmse.txt"), "0\n");
}

TEST_F(CliTest, HeatmapHandCase) {
  spit(dir_ / "train.csv", "1,2\n");
  spit(dir_ / "basis.csv", "1\n2\n");
  spit(dir_ / "run.toml", R"(
n_sensors = 1
[data]
train = "train.csv"
[grid]
image_shape = [1, 2]
[basis]
kind = "custom"
custom = "basis.csv"
[prior]
noise = 0.1
[reconstruct]
method = "unregularized"
)");
  // QR picks state 1 (row norm 2), so A = 1/2 and sigma = eta * |psi| / 2.
  ASSERT_EQ(run(dir_, "heatmap --config run.toml --output out --quiet").code, 0);
  EXPECT_EQ(slurp(dir_ / "out/sigma.csv"), "state_index,sigma\n0,0.050000000000000003\n1,0.10000000000000001\n");
  const std::string pgm = slurp(dir_ / "out/sigma.pgm");
  const std::string pixels = pgm.substr(pgm.size() - 4);
  EXPECT_EQ(pixels, std::string("\x00\x00\xff\xff", 4));
  EXPECT_NE(pgm.find("# scale min=0.050000000000000003 max=0.10000000000000001"), std::string::npos);
}

TEST_F(CliTest, ErrorsAndExitCodes) {
  spit(dir_ / "missing.toml", kMinimal);
  const auto missing = run(dir_, "fit --config missing.toml --output out");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out"));

  EXPECT_EQ(run(dir_, "fit --config nope.toml").code, 2);
  EXPECT_EQ(run(dir_, "fit").code, 2);
  EXPECT_EQ(run(dir_, "").code, 2);
  EXPECT_EQ(run(dir_, "frobnicate").code, 2);
  EXPECT_EQ(run(dir_, "--help").code, 0);

  spit(dir_ / "train.csv", "1,2,3,4\n2,0,1,5\n");
  spit(dir_ / "unknown.toml", kMinimal + "colour = \"red\"\n");
  const auto unknown = run(dir_, "fit --config unknown.toml --output out");
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("colour"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out"));

  spit(dir_ / "twomodes.toml", "n_sensors = 2\n[data]\ntrain = \"train.csv\"\n[grid]\nimage_shape = [2, 2]\n[basis]\nmodes = 2\n");
  const auto land = run(dir_, "landscape --config twomodes.toml --kind two --ref '' --output out");
  EXPECT_EQ(land.code, 1);
  EXPECT_NE(land.err.find("InvalidInput"), std::string::npos);
  const auto curve = run(dir_, "rmse-curve --config twomodes.toml --output out");
  EXPECT_EQ(curve.code, 2);  // no test data configured
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(CliTest, OverwritesExistingOutputs) {
  spit(dir_ / "train.csv", "1,2,3,4\n2,0,1,5\n3,1,0,2\n");
  spit(dir_ / "run.toml", "n_sensors = 2\n[data]\ntrain = \"train.csv\"\n[grid]\nimage_shape = [2, 2]\n[basis]\nmodes = 2\n");
  spit(dir_ / "out/sensors.csv", "stale\n");
  ASSERT_EQ(run(dir_, "fit --config run.toml --output out --quiet").code, 0);
  EXPECT_TRUE(slurp(dir_ / "out/sensors.csv").starts_with("rank,"));
  for (const auto& entry : fs::directory_iterator(dir_ / "out")) EXPECT_NE(entry.path().extension(), ".tmp");
}
