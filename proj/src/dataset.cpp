#include "repdt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace repdt {

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

LabeledDataset::LabeledDataset(std::vector<double> points, std::size_t dims,
                               std::vector<Label> labels, int num_classes,
                               std::vector<std::string> feature_names)
    : points_(std::move(points)),
      dims_(dims),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      feature_names_(std::move(feature_names)) {
    if (dims_ == 0) throw ValidationError("dataset needs at least one feature");
    if (labels_.empty()) throw ValidationError("dataset needs at least one point");
    if (points_.size() != labels_.size() * dims_) {
        throw ValidationError("point matrix has " + std::to_string(points_.size()) +
                              " values, expected " + std::to_string(labels_.size()) + " x " +
                              std::to_string(dims_));
    }
    if (num_classes_ < 1) throw ValidationError("num_classes must be positive");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || labels_[i] >= num_classes_) {
            throw ValidationError("label " + std::to_string(labels_[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " +
                                  std::to_string(num_classes_) + ")");
        }
    }
    for (std::size_t k = 0; k < points_.size(); ++k) {
        if (!std::isfinite(points_[k])) {
            throw ValidationError("non-finite value at row " + std::to_string(k / dims_) +
                                  ", feature " + std::to_string(k % dims_));
        }
    }
    if (feature_names_.empty()) {
        feature_names_.reserve(dims_);
        for (std::size_t j = 0; j < dims_; ++j) feature_names_.push_back("f" + std::to_string(j));
    } else if (feature_names_.size() != dims_) {
        throw ValidationError("expected " + std::to_string(dims_) + " feature names, got " +
                              std::to_string(feature_names_.size()));
    }
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes_), 0);
    for (Label y : labels_) ++counts[static_cast<std::size_t>(y)];
    return counts;
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> indices) const {
    std::vector<double> pts;
    pts.reserve(indices.size() * dims_);
    std::vector<Label> lbl;
    lbl.reserve(indices.size());
    for (std::size_t i : indices) {
        auto r = row(i);
        pts.insert(pts.end(), r.begin(), r.end());
        lbl.push_back(labels_[i]);
    }
    return LabeledDataset(std::move(pts), dims_, std::move(lbl), num_classes_, feature_names_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Splits a document into records of fields. Handles quoted fields with
// embedded commas, doubled quotes and line breaks.
std::vector<std::vector<std::string>> read_records(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        bool blank = record.size() == 1 && trim(record[0]).empty();
        if (!blank) records.push_back(std::move(record));
        record.clear();
        any = false;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        any = true;
        if (in_quotes) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (ch == '\n') {
            end_record();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    if (in_quotes) throw ValidationError("unterminated quoted field at end of CSV");
    if (any) end_record();
    return records;
}

bool parse_real(std::string_view cell, double& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

bool parse_integer(std::string_view cell, long long& out) {
    cell = trim(cell);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

LabeledDataset parse_csv(std::string_view text, const CsvOptions& options,
                         std::vector<std::string>* warnings) {
    auto records = read_records(text);
    if (records.empty()) throw ValidationError("CSV is empty");

    const std::size_t width = records.front().size();
    if (width < 2) throw ValidationError("CSV needs a label column and at least one feature");

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (options.has_header) {
        for (const auto& h : records.front()) header.emplace_back(trim(h));
        first_data = 1;
    }
    if (records.size() <= first_data) throw ValidationError("CSV has a header but no data rows");

    std::size_t label_col = 0;
    if (const auto* name = std::get_if<std::string>(&options.label_column)) {
        if (!options.has_header) {
            // a bare number is still usable as an index without a header
            long long idx = 0;
            if (!parse_integer(*name, idx) || idx < 0)
                throw ValidationError("label column '" + *name + "' requires a header row");
            label_col = static_cast<std::size_t>(idx);
        } else {
            auto it = std::find(header.begin(), header.end(), *name);
            if (it == header.end()) {
                long long idx = 0;
                if (!parse_integer(*name, idx) || idx < 0)
                    throw ValidationError("label column '" + *name + "' not found in header");
                label_col = static_cast<std::size_t>(idx);
            } else {
                label_col = static_cast<std::size_t>(it - header.begin());
            }
        }
    } else {
        label_col = std::get<std::size_t>(options.label_column);
        if (label_col == CsvOptions::kLastColumn) label_col = width - 1;
    }
    if (label_col >= width)
        throw ValidationError("label column index " + std::to_string(label_col) +
                              " out of range for " + std::to_string(width) + " columns");

    const std::size_t dims = width - 1;
    const std::size_t n = records.size() - first_data;
    std::vector<double> points;
    points.reserve(n * dims);
    std::vector<std::string> raw_labels;
    raw_labels.reserve(n);

    for (std::size_t r = first_data; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::size_t file_row = r + 1;
        if (rec.size() != width)
            throw ValidationError("row " + std::to_string(file_row) + " has " +
                                  std::to_string(rec.size()) + " columns, expected " +
                                  std::to_string(width));
        for (std::size_t c = 0; c < width; ++c) {
            if (c == label_col) {
                raw_labels.emplace_back(trim(rec[c]));
                continue;
            }
            double v = 0;
            if (!parse_real(rec[c], v))
                throw ValidationError("non-numeric value '" + rec[c] + "' at row " +
                                      std::to_string(file_row) + ", column " +
                                      std::to_string(c + 1));
            points.push_back(v);
        }
    }

    // Integer labels are keyed by value so "1" and "01" coincide.
    bool all_integer = std::all_of(raw_labels.begin(), raw_labels.end(), [](const auto& s) {
        long long v;
        return parse_integer(s, v);
    });
    std::vector<Label> labels;
    labels.reserve(n);
    std::map<std::string, Label> code_of;
    for (const auto& s : raw_labels) {
        std::string key = s;
        if (all_integer) {
            long long v = 0;
            parse_integer(s, v);
            key = std::to_string(v);
        }
        auto [it, inserted] = code_of.try_emplace(key, static_cast<Label>(code_of.size()));
        labels.push_back(it->second);
    }
    const int num_classes = static_cast<int>(code_of.size());
    if (num_classes == 1 && warnings)
        warnings->push_back("only one distinct label ('" + raw_labels.front() +
                            "') present; num_classes set to 1");

    std::vector<std::string> names;
    if (options.has_header) {
        for (std::size_t c = 0; c < width; ++c)
            if (c != label_col) names.push_back(header[c]);
    }
    return LabeledDataset(std::move(points), dims, std::move(labels), num_classes,
                          std::move(names));
}

LabeledDataset load_csv(const std::filesystem::path& path, const CsvOptions& options,
                        std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure on " + path.string());
    return parse_csv(buf.str(), options, warnings);
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& ds,
               const std::string& label_name) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& name : ds.feature_names()) out << name << ',';
    out << label_name << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.row(i)) out << format_double(v) << ',';
        out << ds.label(i) << '\n';
    }
    if (!out) throw IoError("write failure on " + path.string());
}

// ---------------------------------------------------------------------------
// Generation and sampling

LabeledDataset generate_circles(const CirclesSpec& spec) {
    if (spec.n < 4) throw ValidationError("generate_circles needs n >= 4");
    if (!(spec.noise_sd >= 0)) throw ValidationError("noise_sd must be non-negative");
    if (!(spec.inner_factor > 0 && spec.inner_factor < 1))
        throw ValidationError("inner_factor must lie in (0, 1)");

    Rng rng(spec.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);

    const std::size_t n_outer = (spec.n + 1) / 2;
    std::vector<double> pts;
    pts.reserve(spec.n * 2);
    std::vector<Label> labels;
    labels.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const bool outer = i < n_outer;
        const double radius = outer ? 1.0 : spec.inner_factor;
        const double theta = angle(rng);
        double x = radius * std::cos(theta);
        double y = radius * std::sin(theta);
        if (spec.noise_sd > 0) {
            x += spec.noise_sd * noise(rng);
            y += spec.noise_sd * noise(rng);
        }
        pts.push_back(x);
        pts.push_back(y);
        labels.push_back(outer ? 0 : 1);
    }
    return LabeledDataset(std::move(pts), 2, std::move(labels), 2, {"x1", "x2"});
}

TrainTestSplit split(const LabeledDataset& ds, const SplitSpec& spec) {
    if (!(spec.train_fraction > 0 && spec.train_fraction < 1))
        throw ValidationError("train_fraction must lie in (0, 1)");
    const std::size_t n = ds.size();
    const auto n_train =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) * spec.train_fraction));
    if (n_train == 0 || n_train >= n)
        throw ValidationError("train_fraction " + format_double(spec.train_fraction) + " on " +
                              std::to_string(n) + " points leaves an empty train or test set");

    Rng rng(spec.seed);
    std::vector<char> in_train(n, 0);

    if (!spec.stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = 1;
    } else {
        const auto c = static_cast<std::size_t>(ds.num_classes());
        std::vector<std::vector<std::size_t>> by_class(c);
        for (std::size_t i = 0; i < n; ++i)
            by_class[static_cast<std::size_t>(ds.label(i))].push_back(i);

        // largest-remainder allocation of n_train across classes
        std::vector<std::size_t> quota(c);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t allocated = 0;
        for (std::size_t k = 0; k < c; ++k) {
            const double exact = static_cast<double>(by_class[k].size()) *
                                 static_cast<double>(n_train) / static_cast<double>(n);
            quota[k] = static_cast<std::size_t>(std::floor(exact));
            allocated += quota[k];
            remainders.emplace_back(exact - std::floor(exact), k);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t r = 0; allocated < n_train; ++r) {
            const std::size_t k = remainders[r % c].second;
            if (quota[k] < by_class[k].size()) {
                ++quota[k];
                ++allocated;
            }
        }
        for (std::size_t k = 0; k < c; ++k) {
            auto& members = by_class[k];
            std::shuffle(members.begin(), members.end(), rng);
            for (std::size_t m = 0; m < quota[k]; ++m) in_train[members[m]] = 1;
        }
    }

    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train_idx : test_idx).push_back(i);
    return {ds.select(train_idx), ds.select(test_idx)};
}

LabeledDataset sample_subset(const LabeledDataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0 && fraction <= 1)) throw ValidationError("subset fraction must lie in (0, 1]");
    const auto m =
        static_cast<std::size_t>(std::llround(static_cast<double>(ds.size()) * fraction));
    if (m == 0) throw ValidationError("subset fraction yields an empty sample");

    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    if (m < ds.size()) {
        Rng rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(m);
        std::sort(idx.begin(), idx.end());
    }
    return ds.select(idx);
}

ScaleTable fit_minmax(const LabeledDataset& ds) {
    ScaleTable t;
    t.mins.assign(ds.dims(), kInfinity);
    t.maxs.assign(ds.dims(), -kInfinity);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dims(); ++j) {
            t.mins[j] = std::min(t.mins[j], ds.at(i, j));
            t.maxs[j] = std::max(t.maxs[j], ds.at(i, j));
        }
    }
    return t;
}

LabeledDataset apply_minmax(const LabeledDataset& ds, const ScaleTable& table) {
    if (table.mins.size() != ds.dims() || table.maxs.size() != ds.dims())
        throw ValidationError("scale table has wrong dimension");
    std::vector<double> pts(ds.points());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (std::size_t j = 0; j < ds.dims(); ++j) {
            const double range = table.maxs[j] - table.mins[j];
            double& v = pts[i * ds.dims() + j];
            v = range > 0 ? (v - table.mins[j]) / range : 0.0;
        }
    }
    return LabeledDataset(std::move(pts), ds.dims(), ds.labels(), ds.num_classes(),
                          ds.feature_names());
}

}  // namespace repdt
