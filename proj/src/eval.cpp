#include "fseg3d/eval.hpp"

#include <charconv>
#include <sstream>

#include "fseg3d/errors.hpp"
#include "fseg3d/format.hpp"

namespace fseg3d {

EvalAccumulator::EvalAccumulator(int num_classes, bool ignore_missing)
    : num_classes_(num_classes),
      ignore_missing_(ignore_missing),
      confusion_(static_cast<std::size_t>(num_classes) * num_classes, 0),
      missing_(num_classes, 0) {
  if (num_classes < 1 || num_classes >= SegmentationMap::kMissing) {
    throw InvalidArgument("evaluate: num_classes out of range");
  }
}

void EvalAccumulator::add(const SegmentationMap& pred, const SegmentationMap& gt) {
  if (!pred.classes.same_shape(gt.classes)) {
    throw InvalidArgument("evaluate: prediction and ground truth differ in size");
  }
  if (pred.num_classes != num_classes_ || gt.num_classes != num_classes_) {
    throw InvalidArgument("evaluate: class count mismatch");
  }
  pred.validate();
  gt.validate();

  const int k = num_classes_;
  const auto n = static_cast<std::ptrdiff_t>(gt.size());
  const std::size_t n_bins = confusion_.size() + missing_.size();
  std::vector<std::uint64_t> counts(n_bins, 0);

#pragma omp parallel
  {
    std::vector<std::uint64_t> local(n_bins, 0);
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const std::uint8_t g = gt.classes[i];
      if (g == SegmentationMap::kMissing) continue;
      const std::uint8_t p = pred.classes[i];
      if (p == SegmentationMap::kMissing) {
        ++local[confusion_.size() + g];
      } else {
        ++local[static_cast<std::size_t>(g) * k + p];
      }
    }
    // Integer sums are exact, so the merge order does not matter.
#pragma omp critical
    for (std::size_t b = 0; b < n_bins; ++b) counts[b] += local[b];
  }

  for (std::size_t b = 0; b < confusion_.size(); ++b) confusion_[b] += counts[b];
  for (int c = 0; c < k; ++c) missing_[c] += counts[confusion_.size() + c];
}

EvalReport EvalAccumulator::report() const {
  const int k = num_classes_;
  EvalReport r;
  r.num_classes = k;
  r.confusion = confusion_;
  r.missing_per_class = missing_;
  r.per_class_iou.assign(k, std::nullopt);

  std::vector<std::uint64_t> gt_total(k, 0), pred_total(k, 0);
  for (int g = 0; g < k; ++g) {
    for (int p = 0; p < k; ++p) {
      const std::uint64_t c = confusion_[static_cast<std::size_t>(g) * k + p];
      gt_total[g] += c;
      pred_total[p] += c;
      if (g == p) r.correct_pixels += c;
    }
    if (!ignore_missing_) gt_total[g] += missing_[g];
  }
  for (int g = 0; g < k; ++g) r.considered_pixels += gt_total[g];

  double iou_sum = 0.0;
  int present = 0;
  for (int c = 0; c < k; ++c) {
    const std::uint64_t tp = confusion_[static_cast<std::size_t>(c) * k + c];
    const std::uint64_t uni = gt_total[c] + pred_total[c] - tp;
    if (uni == 0) continue;
    const double iou = static_cast<double>(tp) / static_cast<double>(uni);
    r.per_class_iou[c] = iou;
    iou_sum += iou;
    ++present;
  }
  r.mean_iou = present > 0 ? iou_sum / present : 0.0;
  r.pixel_accuracy = r.considered_pixels > 0
                         ? static_cast<double>(r.correct_pixels) / static_cast<double>(r.considered_pixels)
                         : 0.0;
  return r;
}

EvalReport evaluate(const SegmentationMap& pred, const SegmentationMap& gt, bool ignore_missing) {
  if (pred.num_classes != gt.num_classes) throw InvalidArgument("evaluate: class count mismatch");
  EvalAccumulator acc(gt.num_classes, ignore_missing);
  acc.add(pred, gt);
  return acc.report();
}

Image<ErrorCell> error_map(const SegmentationMap& pred, const SegmentationMap& gt) {
  if (!pred.classes.same_shape(gt.classes)) {
    throw InvalidArgument("error_map: prediction and ground truth differ in size");
  }
  Image<ErrorCell> out(gt.width(), gt.height(), ErrorCell::kCorrect);
  const auto n = static_cast<std::ptrdiff_t>(gt.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (gt.classes[i] == SegmentationMap::kMissing) {
      out[i] = ErrorCell::kNotConsidered;
    } else if (pred.classes[i] != gt.classes[i]) {
      out[i] = ErrorCell::kWrong;
    }
  }
  return out;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream out;
  out << "format = fseg3d-eval\n";
  out << "version = 1\n";
  out << "num_classes = " << r.num_classes << "\n";
  out << "mean_iou = " << format_double(r.mean_iou) << "\n";
  out << "pixel_accuracy = " << format_double(r.pixel_accuracy) << "\n";
  out << "considered_pixels = " << r.considered_pixels << "\n";
  out << "correct_pixels = " << r.correct_pixels << "\n";
  for (int c = 0; c < r.num_classes; ++c) {
    out << "iou." << c << " = "
        << (r.per_class_iou[c] ? format_double(*r.per_class_iou[c]) : std::string("undefined")) << "\n";
  }
  for (int g = 0; g < r.num_classes; ++g) {
    out << "confusion." << g << " =";
    for (int p = 0; p < r.num_classes; ++p) out << " " << r.confusion_at(g, p);
    out << "\n";
  }
  for (int g = 0; g < r.num_classes; ++g) {
    out << "missing." << g << " = " << r.missing_per_class[g] << "\n";
  }
  return out.str();
}

std::string eval_csv_header() { return "method,transforms,mean_iou,pixel_accuracy"; }

std::string format_csv_row(const EvalCsvRow& row) {
  if (row.method.find_first_of(",\"\n\r") != std::string::npos) {
    throw InvalidArgument("eval csv: method name must not contain commas, quotes or newlines");
  }
  return row.method + "," + std::to_string(row.transforms) + "," + format_double(row.mean_iou) + "," +
         format_double(row.pixel_accuracy);
}

}  // namespace fseg3d
