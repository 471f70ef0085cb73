#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fseg3d/geometry.hpp"
#include "fseg3d/image.hpp"

namespace fseg3d {

/// Segmentation scores. Ground-truth-missing pixels are never scored.
struct EvalReport {
  int num_classes = 0;
  /// nullopt for classes absent from both maps.
  std::vector<std::optional<double>> per_class_iou;
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
  /// confusion[gt * K + pred]; prediction-missing pixels are tallied in
  /// missing_per_class instead.
  std::vector<std::uint64_t> confusion;
  std::vector<std::uint64_t> missing_per_class;
  std::uint64_t considered_pixels = 0;
  std::uint64_t correct_pixels = 0;

  std::uint64_t confusion_at(int gt, int pred) const {
    return confusion[static_cast<std::size_t>(gt) * num_classes + pred];
  }
};

/// Accumulates confusion counts over any number of map pairs.
class EvalAccumulator {
 public:
  EvalAccumulator(int num_classes, bool ignore_missing);

  /// Throws InvalidArgument on size or class-count mismatch.
  void add(const SegmentationMap& pred, const SegmentationMap& gt);
  EvalReport report() const;

 private:
  int num_classes_;
  bool ignore_missing_;
  std::vector<std::uint64_t> confusion_;
  std::vector<std::uint64_t> missing_;
};

/// Per-class IOU = |pred=c and gt=c| / |pred=c or gt=c|, averaged over
/// classes with a non-empty union. Prediction-missing pixels count as wrong
/// unless ignore_missing is set.
EvalReport evaluate(const SegmentationMap& pred, const SegmentationMap& gt, bool ignore_missing);

enum class ErrorCell : std::uint8_t { kCorrect = 0, kWrong = 1, kNotConsidered = 2 };

/// kNotConsidered where gt is missing, kWrong where the labels differ.
Image<ErrorCell> error_map(const SegmentationMap& pred, const SegmentationMap& gt);

/// Key/value text: one `key = value` per line, per-class lines as
/// `iou.<k> = <value|undefined>`.
std::string format_report(const EvalReport& report);

struct EvalCsvRow {
  std::string method;
  int transforms = 0;
  double mean_iou = 0.0;
  double pixel_accuracy = 0.0;
};

/// Header line for format_csv_row output.
std::string eval_csv_header();
std::string format_csv_row(const EvalCsvRow& row);

}  // namespace fseg3d
