// Chord recognition scoring: weighted chord symbol recall under seven
// matching criteria, directional-Hamming segmentation quality, and the
// quality confusion matrix. All time integration is interval-exact.
#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "acr/timeline.hpp"

namespace acr {

enum class Criterion {
  kRoot = 0,
  kMajMin,
  kThirds,
  kTriads,
  kSevenths,
  kTetrads,
  kMirex,
};

inline constexpr std::array<Criterion, 7> kAllCriteria = {
    Criterion::kRoot,    Criterion::kMajMin,  Criterion::kThirds,
    Criterion::kTriads,  Criterion::kSevenths, Criterion::kTetrads,
    Criterion::kMirex,
};

std::string_view criterion_name(Criterion c);
std::optional<Criterion> criterion_from_name(std::string_view name);

enum class MatchResult { kMatch, kNoMatch, kExcluded };

// Frame-level match relation. Excluded means the reference chord lies
// outside the criterion's support and the frame leaves both numerator and
// denominator. Unknown references are excluded everywhere; unknown estimates
// never match; no-chord matches only no-chord.
MatchResult chord_match(Criterion criterion, const Chord& ref,
                        const Chord& est);

struct WcsrResult {
  double matched = 0;  // seconds
  double support = 0;  // seconds of in-support reference time

  bool defined() const { return support > 0; }
  double score() const { return matched / support; }
};

// Interval-exact recall over one song. Durations must agree.
WcsrResult wcsr(Criterion criterion, const Timeline& ref, const Timeline& est);

// Duration-weighted corpus score: sum(matched) / sum(support). Songs with
// zero support are skipped.
double wcsr_corpus(Criterion criterion,
                   std::span<const std::pair<Timeline, Timeline>> songs);

struct SegScores {
  double under = 1;
  double over = 1;
  double mean = 1;
};

// Directional-Hamming segmentation quality. Boundaries come from chord
// changes only; labels are ignored. over = 1 - DHD(ref=>est)/T penalizes
// fragmented estimates, under = 1 - DHD(est=>ref)/T merged ones.
SegScores seg_scores(const Timeline& ref, const Timeline& est);

SegScores seg_scores_corpus(
    std::span<const std::pair<Timeline, Timeline>> songs);

// 16x16 row-normalized quality confusion (14 qualities + no-chord + unknown),
// restricted to time where predicted and reference roots agree. Rows without
// any mass are flagged unpopulated.
struct QualityConfusion {
  std::array<std::array<double, 16>, 16> ratio{};
  std::array<double, 16> row_seconds{};

  bool populated(int row) const { return row_seconds[row] > 0; }
};

QualityConfusion quality_confusion(
    std::span<const std::pair<Timeline, Timeline>> songs);

std::string_view confusion_row_name(int index);

}  // namespace acr
