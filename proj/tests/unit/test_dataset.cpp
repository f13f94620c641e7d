#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ctp/dataset.hpp"
#include "support.hpp"

using namespace ctp;

namespace {

Sample sample(double taken_at, std::uint64_t cpu, std::uint64_t mem, std::uint64_t disk, double t) {
  return Sample{ContentionVector{cpu, mem, disk, 3.0, taken_at}, t};
}

Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  double t = 1.7e9 + u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    t += 10.0 * u(rng);
    d.append(Sample{ContentionVector{rng(), rng() >> 20, rng() >> 40, 0.1 + u(rng) * 3.0, t}, 1e-3 + 1e3 * u(rng)});
  }
  return d;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST(Dataset, SaveLoadRoundTripIsExact) {
  test::TempDir dir;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Dataset d = random_dataset(200, seed);
    save(d, dir / "d.csv");
    EXPECT_EQ(load(dir / "d.csv"), d);
  }
}

TEST(Dataset, AwkwardDoublesRoundTrip) {
  Dataset d;
  d.append(sample(0.1, 0, 0, 0, 1e-300));
  d.append(sample(1.0 / 3.0, std::numeric_limits<std::uint64_t>::max(), 1, 2, 123456789.123456789));
  d.append(sample(1.7e9 + 0.1234567, 5, 6, 7, 5e-7));
  std::stringstream ss;
  write_csv(d, ss);
  EXPECT_EQ(read_csv(ss), d);
}

TEST(Dataset, EmptyDatasetIsHeaderOnly) {
  test::TempDir dir;
  save(Dataset{}, dir / "e.csv");
  std::ifstream in(dir / "e.csv");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), std::string(kDatasetHeader) + "\n");
  EXPECT_TRUE(load(dir / "e.csv").empty());
}

TEST(Dataset, RowFormat) {
  std::stringstream ss;
  Dataset d;
  d.append(sample(1700000000.5, 10, 20, 30, 2.25));
  write_csv(d, ss);
  EXPECT_EQ(ss.str(), std::string(kDatasetHeader) + "\n1700000000.500000,3.000000,10,20,30,2.250000\n");
}

TEST(Dataset, SecondsKeepAtLeastSixDecimals) {
  for (double v : {0.0, 1.0, 2.5, 1e-7, 123.456789012345, 1.7e9}) {
    const std::string s = format_seconds(v);
    const auto dot = s.find('.');
    ASSERT_NE(dot, std::string::npos) << s;
    EXPECT_GE(s.size() - dot - 1, 6u) << s;
    EXPECT_EQ(std::stod(s), v) << s;
  }
}

TEST(Dataset, NonPositiveTargetIsAParseFailure) {
  test::TempDir dir;
  write_file(dir / "bad.csv", std::string(kDatasetHeader) + "\n1.0,3.0,1,2,3,4.0\n2.0,3.0,1,2,3,0.0\n");
  try {
    load(dir / "bad.csv");
    FAIL() << "expected ParseFailure";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ParseFailure);
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << "message should name the row: " << e.what();
  }
  write_file(dir / "neg.csv", std::string(kDatasetHeader) + "\n1.0,3.0,1,2,3,-1.0\n");
  EXPECT_CTP_ERROR(load(dir / "neg.csv"), Errc::ParseFailure);
}

TEST(Dataset, MalformedFilesAreParseFailures) {
  test::TempDir dir;
  const std::string h(kDatasetHeader);
  for (const std::string& body : {std::string("a,b,c\n"), h + "\n1.0,3.0,1,2\n", h + "\n1.0,3.0,x,2,3,4\n",
                                   h + "\n1.0,3.0,-1,2,3,4\n", h + "\n1.0,3.0,1,2,3,4,5\n"}) {
    write_file(dir / "m.csv", body);
    EXPECT_CTP_ERROR(load(dir / "m.csv"), Errc::ParseFailure);
  }
  EXPECT_CTP_ERROR(load(dir / "missing.csv"), Errc::IoFailure);
}

TEST(Dataset, AppendRejectsInvalidSamples) {
  Dataset d;
  EXPECT_ANY_THROW(d.append(sample(1.0, 1, 2, 3, 0.0)));
  EXPECT_ANY_THROW(d.append(sample(1.0, 1, 2, 3, std::nan(""))));
  EXPECT_TRUE(d.empty());
}

TEST(DatasetWriter, AppendsAndWritesHeaderOnce) {
  test::TempDir dir;
  {
    DatasetWriter w(dir / "w.csv");
    w.append(sample(1.0, 1, 2, 3, 4.0));
  }
  {
    DatasetWriter w(dir / "w.csv");
    w.append(sample(2.0, 5, 6, 7, 8.0));
    EXPECT_EQ(load(dir / "w.csv").size(), 2u);  // flushed before returning
  }
  const Dataset d = load(dir / "w.csv");
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[1], sample(2.0, 5, 6, 7, 8.0));
}

TEST(Split, SpecExamples) {
  const auto s10 = split_4of5(10);
  EXPECT_EQ(s10.test_indices, (std::vector<std::size_t>{4, 9}));
  EXPECT_EQ(s10.train_indices, (std::vector<std::size_t>{0, 1, 2, 3, 5, 6, 7, 8}));
  const auto s5 = split_4of5(5);
  EXPECT_EQ(s5.train_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(s5.test_indices, (std::vector<std::size_t>{4}));
  const auto s3 = split_4of5(3);
  EXPECT_EQ(s3.train_indices, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_TRUE(s3.test_indices.empty());
}

TEST(Split, PartitionProperties) {
  for (std::size_t n = 0; n <= 1003; ++n) {
    const auto s = split_4of5(n);
    ASSERT_EQ(s.test_indices.size(), n / 5);
    std::set<std::size_t> all(s.train_indices.begin(), s.train_indices.end());
    for (auto i : s.test_indices) {
      EXPECT_EQ(i % 5, 4u);
      all.insert(i);
    }
    ASSERT_EQ(all.size(), n);
    ASSERT_EQ(s.train_indices.size() + s.test_indices.size(), n);
    if (n > 0) EXPECT_EQ(*all.rbegin(), n - 1);
  }
}

TEST(Split, SubsetPreservesOrder) {
  const Dataset d = random_dataset(12, 9);
  const auto s = split_4of5(d);
  const Dataset test = d.subset(s.test_indices);
  ASSERT_EQ(test.size(), 2u);
  EXPECT_EQ(test[0], d[4]);
  EXPECT_EQ(test[1], d[9]);
}
