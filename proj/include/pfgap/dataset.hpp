#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "pfgap/random.hpp"

namespace pfgap {

/// A labeled univariate series. Values are unitless; `label` is a dense
/// class id in [0, num_classes) and `id` the position in the owning dataset.
struct TimeSeries {
    Eigen::VectorXd values;
    int label = 0;
    int id = -1;

    int length() const { return static_cast<int>(values.size()); }
};

struct TimeSeriesDataset {
    std::vector<TimeSeries> series;
    std::vector<int> class_labels;         // distinct dense ids, ascending
    std::vector<std::string> label_names;  // dense id -> original label token
    std::string name;
    bool znormalized = false;

    int size() const { return static_cast<int>(series.size()); }
    int num_classes() const { return static_cast<int>(class_labels.size()); }
    std::vector<int> labels() const;
};

/// Summary statistics of the training split; drive distance parameter ranges.
struct DatasetStats {
    double value_stddev = 1.0;  // pooled over every value of every series
    int max_length = 0;
    int min_length = 0;
    bool equal_lengths = true;
};

DatasetStats compute_stats(const TimeSeriesDataset& d);

/// Validates a single series: length >= 2, all values finite. Throws
/// std::invalid_argument with `context` in the message.
void validate_series(const Eigen::VectorXd& values, const std::string& context);

/// Requirements for model fitting: >= 2 series and >= 2 classes.
void validate_for_training(const TimeSeriesDataset& d);

/// Loads a UCR-style file: one series per row, class label first, then the
/// values. Tabs, commas and spaces all work as separators, so UCR TSV and
/// header-less CSV are both accepted. Row lengths may differ. Labels are
/// mapped to dense integers; the mapping is kept in `label_names`.
TimeSeriesDataset load_tsv(const std::string& path);

/// Writes the dataset back in tab-separated form with shortest round-trip
/// number formatting (save -> load -> save is byte-stable).
void write_tsv(const TimeSeriesDataset& d, std::ostream& out);
void save_tsv(const TimeSeriesDataset& d, const std::string& path);

struct SynthSpec {
    int classes = 2;
    int per_class = 25;
    int length = 150;
    double noise = 0.1;
    std::uint64_t seed = 7;
};

/// Synthetic dataset generator: each class gets a distinct base waveform
/// (sine / square / sawtooth with class-specific frequency and phase) plus
/// i.i.d. Gaussian noise. Deterministic for a fixed seed.
TimeSeriesDataset synth_dataset(const SynthSpec& spec);

/// In-place per-series z-normalization (constant series are left at zero).
void znormalize(TimeSeriesDataset& d);

}  // namespace pfgap
