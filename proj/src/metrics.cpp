#include "acr/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace acr {

namespace {

constexpr std::array<std::string_view, 7> kCriterionNames = {
    "root", "maj-min", "thirds", "triads", "sevenths", "tetrads", "mirex"};

constexpr double kDurationTol = 1e-6;

// Third interval of a quality: 3 (minor), 4 (major) or 0 (sus, no third).
int third_interval(Quality q) {
  uint16_t m = quality_template(q).mask;
  if (m & (1u << 3)) return 3;
  if (m & (1u << 4)) return 4;
  return 0;
}

bool in_support(Criterion c, const Chord& ref) {
  if (ref.is_unknown()) return false;
  if (ref.is_no_chord()) return true;
  Quality q = ref.quality();
  switch (c) {
    case Criterion::kMajMin:
      return q == Quality::kMaj || q == Quality::kMin;
    case Criterion::kSevenths:
      return q == Quality::kMaj || q == Quality::kMin ||
             q == Quality::kDom7 || q == Quality::kMaj7 ||
             q == Quality::kMin7;
    default:
      return true;
  }
}

int quality_row_index(const Chord& c) {
  switch (c.kind()) {
    case Chord::Kind::kPitched: return static_cast<int>(c.quality());
    case Chord::Kind::kNoChord: return 14;
    case Chord::Kind::kUnknown: return 15;
  }
  return 15;
}

// Root agreement for the confusion matrix. No-chord and unknown carry a
// pseudo-root that equals only itself.
bool roots_agree(const Chord& ref, const Chord& est) {
  if (ref.is_pitched() && est.is_pitched()) return ref.root() == est.root();
  return ref.kind() == est.kind();
}

void check_durations(const Timeline& ref, const Timeline& est) {
  if (std::abs(ref.duration() - est.duration()) > kDurationTol) {
    throw std::invalid_argument("reference and estimate durations differ");
  }
}

// Calls fn(ref_chord, est_chord, seconds) for every intersection piece.
template <typename Fn>
void sweep_intersections(const Timeline& ref, const Timeline& est, Fn&& fn) {
  const auto& a = ref.spans();
  const auto& b = est.spans();
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double lo = std::max(a[i].onset, b[j].onset);
    double hi = std::min(a[i].offset, b[j].offset);
    if (hi > lo) fn(a[i].chord, b[j].chord, hi - lo);
    if (a[i].offset <= b[j].offset) {
      ++i;
    } else {
      ++j;
    }
  }
}

}  // namespace

std::string_view criterion_name(Criterion c) {
  return kCriterionNames[static_cast<int>(c)];
}

std::optional<Criterion> criterion_from_name(std::string_view name) {
  for (size_t i = 0; i < kCriterionNames.size(); ++i) {
    if (kCriterionNames[i] == name) return static_cast<Criterion>(i);
  }
  return std::nullopt;
}

MatchResult chord_match(Criterion criterion, const Chord& ref,
                        const Chord& est) {
  if (!in_support(criterion, ref)) return MatchResult::kExcluded;
  if (ref.is_no_chord()) {
    return est.is_no_chord() ? MatchResult::kMatch : MatchResult::kNoMatch;
  }
  // ref is pitched and in support from here on.
  if (!est.is_pitched()) return MatchResult::kNoMatch;

  bool same_root = ref.root() == est.root();
  bool match = false;
  switch (criterion) {
    case Criterion::kRoot:
      match = same_root;
      break;
    case Criterion::kMajMin:
    case Criterion::kSevenths:
      match = same_root && ref.quality() == est.quality();
      break;
    case Criterion::kThirds:
      match = same_root &&
              third_interval(ref.quality()) == third_interval(est.quality());
      break;
    case Criterion::kTriads:
      match = same_root && (quality_template(ref.quality()).mask & 0xFFu) ==
                               (quality_template(est.quality()).mask & 0xFFu);
      break;
    case Criterion::kTetrads:
      match = same_root &&
              quality_template(ref.quality()).mask ==
                  quality_template(est.quality()).mask;
      break;
    case Criterion::kMirex:
      match = std::popcount(static_cast<unsigned>(ref.pitch_class_mask() &
                                                  est.pitch_class_mask())) >= 3;
      break;
  }
  return match ? MatchResult::kMatch : MatchResult::kNoMatch;
}

WcsrResult wcsr(Criterion criterion, const Timeline& ref, const Timeline& est) {
  check_durations(ref, est);
  WcsrResult r;
  sweep_intersections(ref, est,
                      [&](const Chord& rc, const Chord& ec, double seconds) {
                        switch (chord_match(criterion, rc, ec)) {
                          case MatchResult::kMatch:
                            r.matched += seconds;
                            r.support += seconds;
                            break;
                          case MatchResult::kNoMatch:
                            r.support += seconds;
                            break;
                          case MatchResult::kExcluded:
                            break;
                        }
                      });
  return r;
}

double wcsr_corpus(Criterion criterion,
                   std::span<const std::pair<Timeline, Timeline>> songs) {
  double matched = 0, support = 0;
  for (const auto& [ref, est] : songs) {
    WcsrResult r = wcsr(criterion, ref, est);
    matched += r.matched;
    support += r.support;
  }
  if (support <= 0) return std::numeric_limits<double>::quiet_NaN();
  return matched / support;
}

namespace {

// Directional Hamming distance A => B: per segment of A, the duration not
// covered by the best-overlapping segment of B.
double directional_hamming(const Timeline& a, const Timeline& b) {
  const auto& sa = a.spans();
  const auto& sb = b.spans();
  if (sb.empty()) return a.duration();
  double total = 0;
  size_t j = 0;
  for (const auto& seg : sa) {
    while (j + 1 < sb.size() && sb[j].offset <= seg.onset) ++j;
    double best = 0;
    for (size_t k = j; k < sb.size() && sb[k].onset < seg.offset; ++k) {
      double lo = std::max(seg.onset, sb[k].onset);
      double hi = std::min(seg.offset, sb[k].offset);
      best = std::max(best, hi - lo);
    }
    total += seg.length() - best;
  }
  return total;
}

}  // namespace

SegScores seg_scores(const Timeline& ref, const Timeline& est) {
  check_durations(ref, est);
  double t = ref.duration();
  SegScores s;
  if (t <= 0) return s;
  s.over = 1.0 - directional_hamming(ref, est) / t;
  s.under = 1.0 - directional_hamming(est, ref) / t;
  s.mean = 0.5 * (s.over + s.under);
  return s;
}

SegScores seg_scores_corpus(
    std::span<const std::pair<Timeline, Timeline>> songs) {
  double dh_ref_est = 0, dh_est_ref = 0, total = 0;
  for (const auto& [ref, est] : songs) {
    check_durations(ref, est);
    dh_ref_est += directional_hamming(ref, est);
    dh_est_ref += directional_hamming(est, ref);
    total += ref.duration();
  }
  SegScores s;
  if (total <= 0) return s;
  s.over = 1.0 - dh_ref_est / total;
  s.under = 1.0 - dh_est_ref / total;
  s.mean = 0.5 * (s.over + s.under);
  return s;
}

QualityConfusion quality_confusion(
    std::span<const std::pair<Timeline, Timeline>> songs) {
  std::array<std::array<double, 16>, 16> seconds{};
  for (const auto& [ref, est] : songs) {
    check_durations(ref, est);
    sweep_intersections(ref, est,
                        [&](const Chord& rc, const Chord& ec, double dur) {
                          if (!roots_agree(rc, ec)) return;
                          seconds[quality_row_index(rc)]
                                 [quality_row_index(ec)] += dur;
                        });
  }
  QualityConfusion out;
  for (int r = 0; r < 16; ++r) {
    double row = 0;
    for (int c = 0; c < 16; ++c) row += seconds[r][c];
    out.row_seconds[r] = row;
    if (row > 0) {
      for (int c = 0; c < 16; ++c) out.ratio[r][c] = seconds[r][c] / row;
    }
  }
  return out;
}

std::string_view confusion_row_name(int index) {
  if (index < kNumQualities) {
    return quality_name(static_cast<Quality>(index));
  }
  return index == 14 ? "N" : "X";
}

}  // namespace acr
