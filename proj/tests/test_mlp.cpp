#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "lsden/mlp.hpp"
#include "lsden/rng.hpp"
#include "oracles.hpp"

using namespace lsden;
namespace fs = std::filesystem;

namespace {

Eigen::MatrixXd random_rows(int rows, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(rows, 13);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < 13; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
  return x;
}

double oracle_forward(const MlpModel& m, std::span<const double> x) {
  return oracle::mlp_forward(m.layer_sizes, m.weights, m.biases, x);
}

}  // namespace

TEST(Structures, TableEntries) {
  EXPECT_EQ(ann_structure(1), (std::vector<int>{13, 35, 1}));
  EXPECT_EQ(ann_structure(5), (std::vector<int>{13, 25, 20, 1}));
  EXPECT_EQ(ann_structure(9), (std::vector<int>{13, 45, 10, 1}));
  EXPECT_EQ(build_mlp(5, 1).parameter_count(), 13u * 25 + 25 + 25 * 20 + 20 + 20 + 1);
  EXPECT_THROW(ann_structure(0), Error);
  EXPECT_THROW(ann_structure(10), Error);
}

TEST(Structures, ParseIds) {
  EXPECT_EQ(parse_ann_id("ann5"), 5);
  EXPECT_EQ(parse_ann_id("ANN9"), 9);
  EXPECT_THROW(parse_ann_id("ann10"), Error);
  EXPECT_THROW(parse_ann_id("mlp1"), Error);
}

TEST(Build, DeterministicPerSeed) {
  EXPECT_EQ(build_mlp(5, 42), build_mlp(5, 42));
  EXPECT_NE(build_mlp(5, 42).weights, build_mlp(5, 43).weights);
}

TEST(Build, GlorotBoundsAndZeroBias) {
  const auto m = build_mlp(4, 7);
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const double s = std::sqrt(6.0 / (m.layer_sizes[l] + m.layer_sizes[l + 1]));
    for (double w : m.weights[l]) EXPECT_LE(std::abs(w), s);
    for (double b : m.biases[l]) EXPECT_EQ(b, 0.0);
  }
}

TEST(Build, MalformedSizes) {
  EXPECT_THROW(build_mlp(std::vector<int>{13}, 1), Error);
  EXPECT_THROW(build_mlp(std::vector<int>{12, 5, 1}, 1), Error);
  EXPECT_THROW(build_mlp(std::vector<int>{13, 0, 1}, 1), Error);
  EXPECT_THROW(build_mlp(std::vector<int>{13, 5, 2}, 1), Error);
}

TEST(Forward, ZeroModelOutputsZero) {
  auto m = build_mlp(5, 1);
  m.set_parameters(std::vector<double>(m.parameter_count(), 0.0));
  const auto x = random_rows(10, 3);
  for (int r = 0; r < 10; ++r) {
    const Eigen::VectorXd row = x.row(r).transpose();
    EXPECT_EQ(forward(m, std::span<const double>(row.data(), 13)), 0.0);
  }
}

TEST(Forward, ZeroPreactivationGivesOutputBias) {
  auto m = build_mlp(1, 1);
  std::fill(m.weights[0].begin(), m.weights[0].end(), 0.0);
  m.biases[1][0] = 0.375;
  const auto x = random_rows(5, 4);
  const auto y = forward_batch(m, x);
  for (int r = 0; r < 5; ++r) EXPECT_EQ(y(r), 0.375);
}

TEST(Forward, MatchesOracle) {
  for (int id : {1, 5, 9}) {
    auto m = build_mlp(id, 100 + id);
    Rng rng(id);
    for (auto& b : m.biases)
      for (double& v : b) v = rng.uniform(-0.5, 0.5);
    const auto x = random_rows(50, 5);
    const auto batch = forward_batch(m, x);
    for (int r = 0; r < 50; ++r) {
      const Eigen::VectorXd row = x.row(r).transpose();
      const double expect = oracle_forward(m, std::span<const double>(row.data(), 13));
      EXPECT_NEAR(forward(m, std::span<const double>(row.data(), 13)), expect, 1e-12);
      EXPECT_NEAR(batch(r), expect, 1e-12);
    }
  }
}

TEST(Gradient, MatchesCentralDifferences) {
  for (auto sizes : {std::vector<int>{13, 5, 1}, ann_structure(5)}) {
    auto m = build_mlp(sizes, 11);
    Rng rng(12);
    for (auto& b : m.biases)
      for (double& v : b) v = rng.uniform(-0.3, 0.3);
    const auto x = random_rows(20, 13);
    Eigen::VectorXd t(20);
    for (int r = 0; r < 20; ++r) t(r) = rng.uniform(-1.0, 1.0);

    const auto grad = mse_gradient(m, x, t);
    auto p = m.parameters();
    double worst = 0.0;
    const double h = 1e-6;
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p[k];
      p[k] = saved + h;
      m.set_parameters(p);
      const double up = mse(m, x, t);
      p[k] = saved - h;
      m.set_parameters(p);
      const double down = mse(m, x, t);
      p[k] = saved;
      const double fd = (up - down) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - grad(k)) / std::max(1e-6, std::abs(fd) + std::abs(grad(k))));
    }
    m.set_parameters(p);
    EXPECT_LT(worst, 1e-4) << "sizes " << sizes.size();
  }
}

TEST(Parameters, RoundTripOrder) {
  auto m = build_mlp(4, 3);
  auto p = m.parameters();
  // The first bias follows the first weight matrix.
  EXPECT_EQ(p[m.weights[0].size()], m.biases[0][0]);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = static_cast<double>(k);
  m.set_parameters(p);
  EXPECT_EQ(m.parameters(), p);
  EXPECT_THROW(m.set_parameters(std::vector<double>(3)), Error);
}

class ModelFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lsden_mlp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(ModelFile, RoundTripBitIdentical) {
  auto m = build_mlp(5, 77);
  m.epochs_trained = 123;
  Rng rng(1);
  for (auto& b : m.biases)
    for (double& v : b) v = rng.gaussian();
  save_model(m, dir_ / "m.bin");
  const auto back = load_model(dir_ / "m.bin");
  EXPECT_EQ(back, m);
  const auto x = random_rows(100, 2);
  const auto a = forward_batch(m, x), b = forward_batch(back, x);
  for (int r = 0; r < 100; ++r) EXPECT_EQ(std::bit_cast<std::uint64_t>(a(r)), std::bit_cast<std::uint64_t>(b(r)));
}

TEST_F(ModelFile, RejectsCorruption) {
  const auto bytes = serialize_model(build_mlp(1, 1));
  auto code_of = [](std::string_view b) {
    try {
      deserialize_model(b);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(code_of(bad_magic), Errc::schema_error);

  std::string bad_version = bytes;
  bad_version[8] = 2;
  EXPECT_EQ(code_of(bad_version), Errc::version_mismatch);

  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_EQ(code_of(flipped), Errc::schema_error);

  EXPECT_EQ(code_of(bytes.substr(0, bytes.size() - 9)), Errc::schema_error);
  EXPECT_THROW(load_model(dir_ / "absent.bin"), Error);
}
