#include "pls/dataset.hpp"
#include "pls/error.hpp"
#include "pls/rng.hpp"
#include "pls/simulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

class DatasetIoTest : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pls_dataset_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_F(DatasetIoTest, MinimalTextFileWithoutLabels) {
  const auto path = write("min.csv", "id,f0,f1\na,0,1\nb,2,3\nc,4.5,-1e-3\n");
  const auto data = pls::load_dataset(path, pls::DatasetFormat::DelimitedText);
  EXPECT_EQ(data.size(), 3u);
  EXPECT_EQ(data.dim(), 2u);
  EXPECT_FALSE(data.has_truth());
  EXPECT_EQ(data.ids()[2], "c");
  EXPECT_DOUBLE_EQ(data.features()(2, 1), -1e-3);
}

TEST_F(DatasetIoTest, SoftLabelRowNotSummingToOneNamesRow) {
  const auto path = write("bad.csv", "id,f0,p0,p1\na,0,0.5,0.5\nb,1,0.3,0.5\n");
  try {
    pls::load_dataset(path, pls::DatasetFormat::DelimitedText);
    FAIL() << "expected a validation error";
  } catch (const pls::ValidationError& e) {
    ASSERT_TRUE(e.row().has_value());
    EXPECT_EQ(*e.row(), 1u);
  }
}

TEST_F(DatasetIoTest, NearlyNormalizedRowsAreRenormalized) {
  const auto path = write("near.csv", "id,f0,p0,p1\na,0,0.5,0.5000005\n");
  const auto data = pls::load_dataset(path, pls::DatasetFormat::DelimitedText);
  EXPECT_NEAR(data.truth().row(0).sum(), 1.0, 1e-15);
}

TEST_F(DatasetIoTest, ParseErrorsCarryRowIndex) {
  const auto wrong_width = write("w.csv", "id,f0,f1\na,0,1\nb,2\n");
  try {
    pls::load_dataset(wrong_width, pls::DatasetFormat::DelimitedText);
    FAIL();
  } catch (const pls::ParseError& e) {
    EXPECT_EQ(e.row().value(), 1u);
  }
  const auto bad_number = write("n.csv", "id,f0\na,zero\n");
  EXPECT_THROW(pls::load_dataset(bad_number, pls::DatasetFormat::DelimitedText), pls::ParseError);
  const auto bad_header = write("h.csv", "id,x,y\na,0,1\n");
  EXPECT_THROW(pls::load_dataset(bad_header, pls::DatasetFormat::DelimitedText), pls::ParseError);
}

TEST_F(DatasetIoTest, ValidationRejectsNonFiniteAndDuplicates) {
  const auto nan = write("nan.csv", "id,f0\na,0\nb,nan\n");
  try {
    pls::load_dataset(nan, pls::DatasetFormat::DelimitedText);
    FAIL();
  } catch (const pls::ValidationError& e) {
    EXPECT_EQ(e.row().value(), 1u);
  }
  const auto dup = write("dup.csv", "id,f0\na,0\na,1\n");
  EXPECT_THROW(pls::load_dataset(dup, pls::DatasetFormat::DelimitedText), pls::ValidationError);
  const auto single_class = write("c1.csv", "id,f0,p0\na,0,1\n");
  EXPECT_THROW(pls::load_dataset(single_class, pls::DatasetFormat::DelimitedText), pls::ParseError);
}

TEST_F(DatasetIoTest, EmptyTruthDatasetWritesNoLabelColumns) {
  pls::Matrix x(1, 2);
  x << 1.5, -2.0;
  const pls::EmbeddedDataset data({"only"}, x);
  const auto path = dir_ / "one.csv";
  pls::save_dataset(data, path, pls::DatasetFormat::DelimitedText);
  EXPECT_EQ(slurp(path), "id,f0,f1\nonly,1.5,-2\n");
  EXPECT_EQ(pls::load_dataset(path, pls::DatasetFormat::DelimitedText), data);
}

TEST_F(DatasetIoTest, TwoMoonsRoundTripsInBothFormats) {
  const auto data = pls::make_two_moons(1000, 0.1, pls::kDefaultMoonSharpness, 3);
  const auto bin = dir_ / "moons.plsb";
  pls::save_dataset(data, bin, pls::DatasetFormat::PackedBinary);
  const auto back = pls::load_dataset(bin, pls::DatasetFormat::PackedBinary);
  EXPECT_EQ(back, data);  // bit-exact

  // Byte-level oracle: re-saving the loaded dataset reproduces the same file.
  const auto bin2 = dir_ / "moons2.plsb";
  pls::save_dataset(back, bin2, pls::DatasetFormat::PackedBinary);
  EXPECT_EQ(slurp(bin), slurp(bin2));

  const auto txt = dir_ / "moons.csv";
  pls::save_dataset(data, txt, pls::DatasetFormat::DelimitedText);
  const auto text_back = pls::load_dataset(txt, pls::DatasetFormat::DelimitedText);
  ASSERT_EQ(text_back.size(), data.size());
  EXPECT_LE((text_back.features() - data.features()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((text_back.truth() - data.truth()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(text_back.ids(), data.ids());
}

TEST_F(DatasetIoTest, RoundTripPropertyOverRandomDatasets) {
  pls::Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const auto n = static_cast<pls::Index>(1 + rng.below(40));
    const auto d = static_cast<pls::Index>(1 + rng.below(6));
    const auto c = static_cast<pls::Index>(rng.below(2) ? 2 + rng.below(4) : 0);
    pls::Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < x.size(); ++i)
      x.data()[i] = std::ldexp(rng.normal(), static_cast<int>(rng.below(80)) - 40);
    std::optional<pls::Matrix> truth;
    std::vector<std::string> names;
    if (c > 0) {
      truth = pls::Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
      for (Eigen::Index i = 0; i < truth->rows(); ++i) {
        for (Eigen::Index j = 0; j < truth->cols(); ++j) (*truth)(i, j) = rng.uniform();
        truth->row(i) /= truth->row(i).sum();
      }
      if (trial % 3 == 0)
        for (pls::Index k = 0; k < c; ++k) names.push_back("class" + std::to_string(k));
    }
    std::vector<std::string> ids;
    for (pls::Index i = 0; i < n; ++i) ids.push_back("pt-" + std::to_string(i * 7 + trial));
    const pls::EmbeddedDataset data(ids, x, truth, names);

    std::stringstream bin;
    pls::write_packed_dataset(data, bin);
    EXPECT_EQ(pls::read_packed_dataset(bin), data);

    std::stringstream txt;
    pls::write_delimited_dataset(data, txt);
    const auto back = pls::read_delimited_dataset(txt);
    EXPECT_EQ(back.ids(), data.ids());
    EXPECT_EQ(back.class_names(), data.class_names());
    EXPECT_EQ(back.features(), data.features());  // shortest round-trip printing is exact
    if (c > 0) EXPECT_LE((back.truth() - data.truth()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(DatasetBinary, TruncatedAndForeignFilesAreParseErrors) {
  const auto data = pls::make_sine_1d(5, 0, 1, 1);
  std::stringstream bin;
  pls::write_packed_dataset(data, bin);
  const std::string bytes = bin.str();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  EXPECT_THROW(pls::read_packed_dataset(truncated), pls::ParseError);
  std::stringstream foreign("GIF89a....");
  EXPECT_THROW(pls::read_packed_dataset(foreign), pls::ParseError);
}

TEST(DatasetBinary, HeaderIsLittleEndian) {
  pls::Matrix x(1, 1);
  x << 1.0;
  const pls::EmbeddedDataset data({"a"}, x);
  std::stringstream bin;
  pls::write_packed_dataset(data, bin);
  const std::string b = bin.str();
  ASSERT_GE(b.size(), 36u);
  EXPECT_EQ(b.substr(0, 4), "PLSD");
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u);   // n = 1, low byte first
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 1u);  // d = 1
  // 1.0 = 0x3FF0000000000000 stored low byte first after the id block.
  EXPECT_EQ(static_cast<unsigned char>(b.back()), 0x3Fu);
}

TEST(Dataset, LoadingPreservesRowOrder) {
  std::stringstream txt("id,f0\nz,3\ny,2\nx,1\n");
  const auto data = pls::read_delimited_dataset(txt);
  EXPECT_EQ(data.ids(), (std::vector<std::string>{"z", "y", "x"}));
  EXPECT_EQ(data.find("x"), std::optional<pls::Index>(2));
  EXPECT_DOUBLE_EQ(data.features()(0, 0), 3.0);
}
