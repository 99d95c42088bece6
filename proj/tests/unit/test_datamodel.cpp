#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "subot/datamodel.hpp"
#include "subot/error.hpp"

namespace fs = std::filesystem;
using namespace subot;

namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("subot_dm_" + std::to_string(std::random_device{}()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path write(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream(p) << content;
        return p;
    }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(LoadCsv, ParsesLabeledRows) {
    TempDir dir;
    const auto p = dir.write("a.csv", "1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,0");
    const auto ds = load_dataset_csv(p, true);
    EXPECT_EQ(ds.rows(), 3u);
    EXPECT_EQ(ds.dims(), 2u);
    EXPECT_EQ(ds.class_count(), 2);
    EXPECT_EQ(ds.labels(), (std::vector<int>{0, 1, 0}));
    EXPECT_DOUBLE_EQ(ds.features()(2, 1), 6.0);
}

TEST(LoadCsv, UnlabeledKeepsEveryColumn) {
    TempDir dir;
    const auto p = dir.write("a.csv", "1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,0");
    const auto ds = load_dataset_csv(p, false);
    EXPECT_EQ(ds.rows(), 3u);
    EXPECT_EQ(ds.dims(), 3u);
    EXPECT_FALSE(ds.has_labels());
}

TEST(LoadCsv, RemapsSparseLabelsDensely) {
    TempDir dir;
    const auto p = dir.write("a.csv", "0,7\n1,3\n2,7\n3,-2\n");
    const auto ds = load_dataset_csv(p, true);
    EXPECT_EQ(ds.class_count(), 3);
    EXPECT_EQ(ds.label_values(), (std::vector<std::int64_t>{-2, 3, 7}));
    EXPECT_EQ(ds.labels(), (std::vector<int>{2, 1, 2, 0}));
}

TEST(LoadCsv, ErrorCases) {
    TempDir dir;
    EXPECT_EQ(kind_of([&] { load_dataset_csv(dir.path() / "missing.csv", true); }), ErrorKind::MissingFile);

    const auto nan = dir.write("nan.csv", "1.0,2.0,0\n1.0,NaN,0\n");
    try {
        load_dataset_csv(nan, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonFiniteValue);
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.column(), 2u);
    }

    const auto ragged = dir.write("ragged.csv", "1,2,0\n1,2\n");
    try {
        load_dataset_csv(ragged, true);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::RaggedRows);
        EXPECT_EQ(e.line(), 2u);
    }

    const auto text = dir.write("text.csv", "1,abc,0\n");
    EXPECT_EQ(kind_of([&] { load_dataset_csv(text, true); }), ErrorKind::NonNumericCell);
    const auto badlabel = dir.write("badlabel.csv", "1,2,0.5\n");
    EXPECT_EQ(kind_of([&] { load_dataset_csv(badlabel, true); }), ErrorKind::NonNumericCell);
}

TEST(LoadCsv, HeaderModes) {
    TempDir dir;
    const auto p = dir.write("h.csv", "f0,f1,label\n1,2,0\n3,4,1\n");
    EXPECT_EQ(kind_of([&] { load_dataset_csv(p, true); }), ErrorKind::NonNumericCell);
    EXPECT_EQ(load_dataset_csv(p, {true, HeaderMode::Present}).rows(), 2u);
    EXPECT_EQ(load_dataset_csv(p, {true, HeaderMode::Auto}).rows(), 2u);
    const auto plain = dir.write("p.csv", "1,2,0\n3,4,1\n");
    EXPECT_EQ(load_dataset_csv(plain, {true, HeaderMode::Auto}).rows(), 2u);
}

TEST(LoadCsv, WriteThenLoadPreservesValuesAndLabels) {
    TempDir dir;
    Matrix x(3, 2);
    x << 0.1, -2.5, 1e-7, 3.0, 4.25, 1.0 / 3.0;
    const LabeledDataset ds(x, {1, 0, 1}, 2, {10, 20});
    write_dataset_csv(dir.path() / "out.csv", ds);
    const auto back = load_dataset_csv(dir.path() / "out.csv", {true, HeaderMode::Present});
    EXPECT_EQ(back.features(), x);
    EXPECT_EQ(back.label_values(), ds.label_values());
    EXPECT_EQ(back.labels(), ds.labels());
}

TEST(LabeledDatasetInvariants, RejectsInvalidLabels) {
    Matrix x = Matrix::Zero(3, 1);
    EXPECT_THROW(LabeledDataset(x, {0, 2, 0}, 2), Error);   // out of range
    EXPECT_THROW(LabeledDataset(x, {0, 0, 0}, 2), Error);   // class 1 missing
    EXPECT_THROW(LabeledDataset(x, {0, 1}, 2), Error);      // length
    Matrix bad = x;
    bad(1, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(LabeledDataset{bad}, Error);
    EXPECT_THROW(LabeledDataset{Matrix(0, 2)}, Error);
}

TEST(AlignLabels, MapsIntoReferenceSpace) {
    Matrix x = Matrix::Zero(3, 1);
    const LabeledDataset t(x, {0, 1, 1}, 2, {5, 9});
    const auto aligned = align_labels(t, {9, 5});
    EXPECT_EQ(aligned.labels(), (std::vector<int>{1, 0, 0}));
    EXPECT_EQ(kind_of([&] { align_labels(t, {5, 8}); }), ErrorKind::LabelSetMismatch);
    EXPECT_EQ(kind_of([&] { align_labels(t, {5, 9, 11}); }), ErrorKind::LabelSetMismatch);
}

TEST(CombineAxes, Examples) {
    Matrix s(3, 3);
    s << 3, 4, 0, 0, 0, 0, 1, 1, 1;
    const Vector m = combine_axes(RawSignalWindow(s, SensorKind::Accelerometer));
    EXPECT_DOUBLE_EQ(m[0], 5.0);
    EXPECT_DOUBLE_EQ(m[1], 0.0);
    EXPECT_NEAR(m[2], 1.7320508, 1e-7);
}

TEST(CombineAxes, RejectsShortOrWideWindows) {
    EXPECT_EQ(kind_of([] { RawSignalWindow(Matrix::Zero(1, 3), SensorKind::Gyroscope); }), ErrorKind::WindowTooShort);
    EXPECT_EQ(kind_of([] { RawSignalWindow(Matrix::Zero(4, 2), SensorKind::Gyroscope); }),
              ErrorKind::DimensionMismatch);
}

TEST(CombineAxes, RotationInvariantProperty) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 200; ++trial) {
        Eigen::Matrix3d g;
        for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = normal(rng);
        const Eigen::Matrix3d q = Eigen::HouseholderQR<Eigen::Matrix3d>(g).householderQ();
        Matrix s(16, 3);
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = 10.0 * normal(rng);
        const Matrix rotated = s * q.transpose();
        const Vector a = combine_axes(RawSignalWindow(s, SensorKind::Accelerometer));
        const Vector b = combine_axes(RawSignalWindow(rotated, SensorKind::Accelerometer));
        ASSERT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
        ASSERT_TRUE((a.array() >= 0.0).all());
    }
}

TEST(SlidingWindows, DefaultHalfOverlap) {
    const auto starts = sliding_window_starts(512, 128, 0.5);
    EXPECT_EQ(starts, (std::vector<std::size_t>{0, 64, 128, 192, 256, 320, 384}));
    EXPECT_TRUE(sliding_window_starts(100, 128, 0.5).empty());
    EXPECT_THROW(sliding_window_starts(100, 10, 1.0), Error);
}

TEST(Toy, CountsFollowConfig) {
    auto config = ToyConfig::default_config(3);
    const auto pair = generate_toy(config);
    EXPECT_EQ(pair.source.rows(), 150u);  // [50, 50, 50]
    EXPECT_EQ(pair.source.class_count(), 2);
    EXPECT_EQ(pair.target.rows(), 150u);
    EXPECT_EQ(pair.target.class_count(), 2);
}

TEST(Toy, SameSeedIsBitIdentical) {
    const auto a = generate_toy(ToyConfig::default_config(11));
    const auto b = generate_toy(ToyConfig::default_config(11));
    const auto c = generate_toy(ToyConfig::default_config(12));
    EXPECT_EQ(a.source.features(), b.source.features());
    EXPECT_EQ(a.target.features(), b.target.features());
    EXPECT_EQ(a.source.labels(), b.source.labels());
    EXPECT_NE(a.source.features(), c.source.features());
}

TEST(Toy, EmpiricalMeanOfTightComponent) {
    // sd 0.1 with 100 draws: the sample mean has sd 0.01, so 0.05 is 5 sd.
    ToyConfig config;
    config.rng_seed = 5;
    config.source = {{{10.0, 10.0}, {0.01, 0.01}, 100, 0}};
    config.target = config.source;
    const auto pair = generate_toy(config);
    const Eigen::RowVectorXd mean = pair.source.features().colwise().mean();
    EXPECT_NEAR(mean[0], 10.0, 0.05);
    EXPECT_NEAR(mean[1], 10.0, 0.05);
}

TEST(Toy, ZeroVarianceComponentsRepeatTheirMean) {
    auto config = ToyConfig::default_config(3);
    for (auto& c : config.source) c.cov_diag = {0.0, 0.0};
    const auto pair = generate_toy(config);
    EXPECT_EQ(pair.source.features().row(0), pair.source.features().row(1));
    EXPECT_DOUBLE_EQ(pair.source.features()(0, 0), config.source[0].mean[0]);
}

TEST(Toy, ValidateRejectsBadConfigs) {
    auto config = ToyConfig::default_config();
    config.source[0].cov_diag[0] = -1.0;
    EXPECT_THROW(config.validate(), Error);
    config = ToyConfig::default_config();
    config.target[2].label = 0;  // target loses class 1
    EXPECT_THROW(config.validate(), Error);
    config = ToyConfig::default_config();
    config.source[1].count = 0;
    EXPECT_THROW(config.validate(), Error);
}

TEST(SplitTarget, HalfSplit) {
    Matrix x(100, 1);
    std::vector<int> y(100);
    for (int i = 0; i < 100; ++i) {
        x(i, 0) = i;
        y[static_cast<std::size_t>(i)] = i % 2;
    }
    const auto split = split_target(LabeledDataset(x, y, 2), 0.5, 1);
    EXPECT_EQ(split.validation.rows(), 50u);
    EXPECT_EQ(split.test.rows(), 50u);
}

TEST(SplitTarget, SingletonClassIsDegenerate) {
    Matrix x = Matrix::Zero(4, 1);
    EXPECT_EQ(kind_of([&] { split_target(LabeledDataset(x, {0, 0, 0, 1}, 2), 0.5, 0); }),
              ErrorKind::DegenerateSplit);
    EXPECT_EQ(kind_of([&] { split_target(LabeledDataset(x), 0.1, 0); }), ErrorKind::DegenerateSplit);
}

TEST(SplitTarget, DisjointCoveringAndStratifiedProperty) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const int classes = 1 + static_cast<int>(rng() % 4);
        std::vector<int> y;
        for (int c = 0; c < classes; ++c) {
            const int count = 2 + static_cast<int>(rng() % 30);
            y.insert(y.end(), static_cast<std::size_t>(count), c);
        }
        std::shuffle(y.begin(), y.end(), rng);
        const auto n = static_cast<Eigen::Index>(y.size());
        Matrix x(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i);
        const double fraction = 0.2 + 0.6 * static_cast<double>(rng() % 1000) / 1000.0;
        const LabeledDataset ds(x, y, classes);
        TargetSplit split;
        try {
            split = split_target(ds, fraction, rng());
        } catch (const Error& e) {
            ASSERT_EQ(e.kind(), ErrorKind::DegenerateSplit);
            continue;
        }
        ASSERT_EQ(split.validation_rows.size(),
                  static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
        std::set<std::size_t> all(split.validation_rows.begin(), split.validation_rows.end());
        for (auto r : split.test_rows) ASSERT_TRUE(all.insert(r).second) << "row on both sides";
        ASSERT_EQ(all.size(), y.size());
        // Exhaustive per-class count check against the proportional share.
        for (int c = 0; c < classes; ++c) {
            const auto total = std::count(y.begin(), y.end(), c);
            const auto in_val = std::count_if(split.validation_rows.begin(), split.validation_rows.end(),
                                              [&](std::size_t r) { return y[r] == c; });
            ASSERT_LE(std::abs(static_cast<double>(in_val) - fraction * static_cast<double>(total)), 1.0 + 1e-12);
        }
    }
}

TEST(SplitTarget, DeterministicPerSeed) {
    const auto pair = generate_toy(ToyConfig::default_config(4));
    const auto a = split_target(pair.target, 0.5, 17);
    const auto b = split_target(pair.target, 0.5, 17);
    EXPECT_EQ(a.validation_rows, b.validation_rows);
    EXPECT_EQ(a.test_rows, b.test_rows);
}
