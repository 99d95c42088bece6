#include "subot/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <string_view>

#include "subot/error.hpp"

namespace subot {

// LabeledDataset ------------------------------------------------------------

LabeledDataset::LabeledDataset(Matrix features) : features_(std::move(features)) { validate(); }

LabeledDataset::LabeledDataset(Matrix features, std::vector<int> labels, int class_count,
                               std::vector<std::int64_t> label_values)
    : features_(std::move(features)), labels_(std::move(labels)), class_count_(class_count),
      label_values_(std::move(label_values)) {
    if (label_values_.empty()) {
        label_values_.resize(static_cast<std::size_t>(std::max(class_count_, 0)));
        std::iota(label_values_.begin(), label_values_.end(), std::int64_t{0});
    }
    validate();
}

void LabeledDataset::validate() const {
    if (features_.rows() < 1 || features_.cols() < 1) {
        throw Error(ErrorKind::InvalidArgument, "dataset needs at least one row and one column");
    }
    if (!features_.allFinite()) {
        throw Error(ErrorKind::NonFiniteValue, "feature matrix contains non-finite entries");
    }
    if (!labels_) return;
    if (labels_->size() != rows()) {
        throw Error(ErrorKind::LengthMismatch, "label count differs from row count");
    }
    if (class_count_ < 1) throw Error(ErrorKind::InvalidArgument, "class_count must be >= 1 for labeled data");
    if (label_values_.size() != static_cast<std::size_t>(class_count_)) {
        throw Error(ErrorKind::InvalidArgument, "label_values must have class_count entries");
    }
    std::vector<char> seen(static_cast<std::size_t>(class_count_), 0);
    for (int label : *labels_) {
        if (label < 0 || label >= class_count_) {
            throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " outside [0, class_count)");
        }
        seen[static_cast<std::size_t>(label)] = 1;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw Error(ErrorKind::InvalidArgument, "every class id must occur at least once");
    }
}

const std::vector<int>& LabeledDataset::labels() const {
    if (!labels_) throw Error(ErrorKind::InvalidArgument, "dataset has no labels");
    return *labels_;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
    Matrix out(static_cast<Eigen::Index>(rows.size()), features_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= this->rows()) throw Error(ErrorKind::InvalidArgument, "subset row out of range");
        out.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(rows[i]));
    }
    if (!labels_) return LabeledDataset(std::move(out));
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = (*labels_)[rows[i]];
    return LabeledDataset(std::move(out), std::move(labels), class_count_, label_values_);
}

LabeledDataset LabeledDataset::without_labels() const { return LabeledDataset(features_); }

LabeledDataset LabeledDataset::with_features(Matrix features) const {
    if (features.rows() != features_.rows()) {
        throw Error(ErrorKind::LengthMismatch, "replacement features must keep the row count");
    }
    if (!labels_) return LabeledDataset(std::move(features));
    return LabeledDataset(std::move(features), *labels_, class_count_, label_values_);
}

std::vector<std::vector<std::size_t>> LabeledDataset::rows_by_class() const {
    const auto& y = labels();
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(class_count_));
    for (std::size_t i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(y[i])].push_back(i);
    return out;
}

// CSV -----------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_double(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

std::optional<std::int64_t> parse_int(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
    return value;
}

bool looks_like_header(const std::vector<std::string_view>& cells) {
    return std::any_of(cells.begin(), cells.end(), [](std::string_view c) { return !parse_double(c).has_value(); });
}

}  // namespace

LabeledDataset load_dataset_csv(const std::filesystem::path& path, bool has_labels) {
    return load_dataset_csv(path, CsvOptions{has_labels, HeaderMode::None});
}

LabeledDataset load_dataset_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::MissingFile, "cannot open '" + path.string() + "'");

    std::vector<double> values;
    std::vector<std::int64_t> raw_labels;
    std::size_t columns = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    bool first_content_line = true;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_cells(line);
        if (first_content_line) {
            first_content_line = false;
            columns = cells.size();
            if (options.header == HeaderMode::Present ||
                (options.header == HeaderMode::Auto && looks_like_header(cells))) {
                continue;
            }
        }
        if (cells.size() != columns) {
            throw Error(ErrorKind::RaggedRows,
                        "expected " + std::to_string(columns) + " columns, found " + std::to_string(cells.size()),
                        line_no);
        }
        const std::size_t feature_cols = options.has_labels ? columns - 1 : columns;
        for (std::size_t c = 0; c < feature_cols; ++c) {
            const auto value = parse_double(cells[c]);
            if (!value) {
                throw Error(ErrorKind::NonNumericCell, "'" + std::string(cells[c]) + "' is not a number", line_no,
                            c + 1);
            }
            if (!std::isfinite(*value)) {
                throw Error(ErrorKind::NonFiniteValue, "non-finite value '" + std::string(cells[c]) + "'", line_no,
                            c + 1);
            }
            values.push_back(*value);
        }
        if (options.has_labels) {
            const auto label = parse_int(cells.back());
            if (!label) {
                throw Error(ErrorKind::NonNumericCell,
                            "label '" + std::string(cells.back()) + "' is not an integer", line_no, columns);
            }
            raw_labels.push_back(*label);
        }
        ++rows;
    }
    if (rows == 0) throw Error(ErrorKind::InvalidArgument, "'" + path.string() + "' contains no data rows");
    const std::size_t feature_cols = options.has_labels ? columns - 1 : columns;
    if (feature_cols == 0) throw Error(ErrorKind::InvalidArgument, "no feature columns in '" + path.string() + "'");

    Matrix features = Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(rows),
                                         static_cast<Eigen::Index>(feature_cols));
    if (!options.has_labels) return LabeledDataset(std::move(features));

    const std::set<std::int64_t> distinct(raw_labels.begin(), raw_labels.end());
    std::vector<std::int64_t> label_values(distinct.begin(), distinct.end());
    std::map<std::int64_t, int> dense;
    for (std::size_t i = 0; i < label_values.size(); ++i) dense[label_values[i]] = static_cast<int>(i);
    std::vector<int> labels(rows);
    for (std::size_t i = 0; i < rows; ++i) labels[i] = dense.at(raw_labels[i]);
    const int class_count = static_cast<int>(label_values.size());
    return LabeledDataset(std::move(features), std::move(labels), class_count, std::move(label_values));
}

void write_dataset_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::MissingFile, "cannot write '" + path.string() + "'");
    out.precision(17);
    const auto& x = dataset.features();
    for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << 'f' << c;
    if (dataset.has_labels()) out << ",label";
    out << '\n';
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) out << (c ? "," : "") << x(r, c);
        if (dataset.has_labels()) {
            out << ',' << dataset.label_values()[static_cast<std::size_t>(dataset.labels()[static_cast<std::size_t>(r)])];
        }
        out << '\n';
    }
}

LabeledDataset align_labels(const LabeledDataset& dataset, const std::vector<std::int64_t>& reference_values) {
    if (!dataset.has_labels()) return dataset;
    if (dataset.label_values() == reference_values) return dataset;
    std::map<std::int64_t, int> dense;
    for (std::size_t i = 0; i < reference_values.size(); ++i) dense[reference_values[i]] = static_cast<int>(i);
    std::vector<int> labels(dataset.rows());
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
        const auto value = dataset.label_values()[static_cast<std::size_t>(dataset.labels()[i])];
        const auto it = dense.find(value);
        if (it == dense.end()) {
            throw Error(ErrorKind::LabelSetMismatch, "label " + std::to_string(value) + " is unknown to the reference");
        }
        labels[i] = it->second;
    }
    if (dataset.class_count() != static_cast<int>(reference_values.size())) {
        throw Error(ErrorKind::LabelSetMismatch, "datasets declare different class sets");
    }
    return LabeledDataset(dataset.features(), std::move(labels), static_cast<int>(reference_values.size()),
                          reference_values);
}

// Raw signals -----------------------------------------------------------------

RawSignalWindow::RawSignalWindow(Matrix samples, SensorKind kind) : samples_(std::move(samples)), kind_(kind) {
    if (samples_.cols() != 3) throw Error(ErrorKind::DimensionMismatch, "raw windows carry exactly 3 axes");
    if (samples_.rows() < 2) throw Error(ErrorKind::WindowTooShort, "raw windows need at least 2 samples");
    if (!samples_.allFinite()) throw Error(ErrorKind::NonFiniteValue, "raw window contains non-finite readings");
}

Vector combine_axes(const RawSignalWindow& window) { return window.samples().rowwise().norm(); }

std::vector<std::size_t> sliding_window_starts(std::size_t signal_length, std::size_t window_length, double overlap) {
    if (window_length < 2) throw Error(ErrorKind::WindowTooShort, "window length must be >= 2");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw Error(ErrorKind::InvalidArgument, "overlap must lie in [0, 1)");
    const auto step = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(window_length) * (1.0 - overlap))));
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + window_length <= signal_length; s += step) starts.push_back(s);
    return starts;
}

// Toy data ------------------------------------------------------------------

void ToyConfig::validate() const {
    if (source.empty() || target.empty()) throw Error(ErrorKind::InvalidConfig, "toy domains need components");
    const std::size_t d = source.front().mean.size();
    if (d == 0) throw Error(ErrorKind::InvalidConfig, "toy components need a non-empty mean");
    auto check = [d](const std::vector<ToyComponent>& comps, std::set<int>& classes) {
        for (const auto& c : comps) {
            if (c.mean.size() != d || c.cov_diag.size() != d) {
                throw Error(ErrorKind::DimensionMismatch, "toy component dimension mismatch");
            }
            if (std::any_of(c.cov_diag.begin(), c.cov_diag.end(), [](double v) { return !(v >= 0.0); })) {
                throw Error(ErrorKind::InvalidConfig, "toy covariance entries must be >= 0");
            }
            if (c.count < 1) throw Error(ErrorKind::InvalidConfig, "toy sample counts must be >= 1");
            if (c.label < 0) throw Error(ErrorKind::InvalidConfig, "toy labels must be >= 0");
            classes.insert(c.label);
        }
    };
    std::set<int> source_classes;
    std::set<int> target_classes;
    check(source, source_classes);
    check(target, target_classes);
    if (source_classes != target_classes) throw Error(ErrorKind::InvalidConfig, "toy domains declare different classes");
    if (*source_classes.rbegin() != static_cast<int>(source_classes.size()) - 1) {
        throw Error(ErrorKind::InvalidConfig, "toy class ids must be dense from 0");
    }
}

ToyConfig ToyConfig::default_config(std::uint64_t seed) {
    ToyConfig config;
    config.rng_seed = seed;
    config.source = {
        {{0.0, 0.0}, {1.0, 1.0}, 50, 0},
        {{0.0, 8.0}, {1.0, 1.0}, 50, 0},
        {{8.0, 4.0}, {1.0, 1.0}, 50, 1},
    };
    const std::vector<double> offset = {2.0, -1.0};
    const std::vector<int> target_counts = {30, 30, 90};
    for (std::size_t i = 0; i < config.source.size(); ++i) {
        ToyComponent comp = config.source[i];
        for (std::size_t f = 0; f < comp.mean.size(); ++f) {
            comp.mean[f] += offset[f];
            comp.cov_diag[f] *= 1.5;
        }
        comp.count = target_counts[i];
        config.target.push_back(std::move(comp));
    }
    return config;
}

namespace {

LabeledDataset sample_domain(const std::vector<ToyComponent>& comps, std::mt19937_64& rng) {
    std::size_t n = 0;
    for (const auto& c : comps) n += static_cast<std::size_t>(c.count);
    const auto d = static_cast<Eigen::Index>(comps.front().mean.size());
    Matrix x(static_cast<Eigen::Index>(n), d);
    std::vector<int> labels;
    labels.reserve(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Index row = 0;
    int class_count = 0;
    for (const auto& c : comps) {
        class_count = std::max(class_count, c.label + 1);
        for (int s = 0; s < c.count; ++s, ++row) {
            for (Eigen::Index f = 0; f < d; ++f) {
                const auto fi = static_cast<std::size_t>(f);
                x(row, f) = c.mean[fi] + std::sqrt(c.cov_diag[fi]) * normal(rng);
            }
            labels.push_back(c.label);
        }
    }
    return LabeledDataset(std::move(x), std::move(labels), class_count);
}

}  // namespace

DomainPair generate_toy(const ToyConfig& config) {
    config.validate();
    std::mt19937_64 source_rng(derive_seed(config.rng_seed, 1));
    std::mt19937_64 target_rng(derive_seed(config.rng_seed, 2));
    return {sample_domain(config.source, source_rng), sample_domain(config.target, target_rng)};
}

// Splitting -----------------------------------------------------------------

TargetSplit split_target(const LabeledDataset& target, double fraction, std::uint64_t rng_seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw Error(ErrorKind::InvalidArgument, "fraction must lie in (0, 1)");
    const std::size_t n = target.rows();
    const auto validation_size = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (validation_size == 0 || validation_size >= n) {
        throw Error(ErrorKind::DegenerateSplit, "one side of the split would be empty");
    }
    std::mt19937_64 rng(rng_seed);
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;

    if (!target.has_labels()) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        validation.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(validation_size));
        test.assign(order.begin() + static_cast<std::ptrdiff_t>(validation_size), order.end());
    } else {
        auto groups = target.rows_by_class();
        // Largest-remainder allocation keeps every class within one sample of
        // its proportional share.
        std::vector<std::size_t> quota(groups.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t allocated = 0;
        for (std::size_t c = 0; c < groups.size(); ++c) {
            const double exact = fraction * static_cast<double>(groups[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(exact));
            allocated += quota[c];
            remainders.emplace_back(exact - static_cast<double>(quota[c]), c);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; allocated < validation_size && i < remainders.size(); ++i, ++allocated) {
            ++quota[remainders[i].second];
        }
        for (std::size_t c = 0; c < groups.size(); ++c) {
            if (quota[c] == 0 || quota[c] >= groups[c].size()) {
                throw Error(ErrorKind::DegenerateSplit,
                            "class " + std::to_string(c) + " cannot appear on both sides of the split");
            }
            std::shuffle(groups[c].begin(), groups[c].end(), rng);
            validation.insert(validation.end(), groups[c].begin(),
                              groups[c].begin() + static_cast<std::ptrdiff_t>(quota[c]));
            test.insert(test.end(), groups[c].begin() + static_cast<std::ptrdiff_t>(quota[c]), groups[c].end());
        }
    }
    std::sort(validation.begin(), validation.end());
    std::sort(test.begin(), test.end());
    TargetSplit split{target.subset(validation), target.subset(test), std::move(validation), std::move(test)};
    return split;
}

}  // namespace subot
