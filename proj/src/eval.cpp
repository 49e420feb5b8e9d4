#include "beltpick/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "beltpick/bvh.hpp"
#include "beltpick/error.hpp"

namespace beltpick {

std::vector<std::uint8_t> sign_change_mask(const TsdfVolume& gt) {
  const GridSpec& g = gt.spec;
  static constexpr int kN[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  std::vector<std::uint8_t> mask(g.count(), 0);
  for (std::size_t idx = 0; idx < g.count(); ++idx) {
    if (!gt.observed(idx)) continue;
    const bool neg = gt.values[idx] < 0.0;
    const auto c = g.coords(idx);
    for (const auto& n : kN) {
      const int i = c[0] + n[0], j = c[1] + n[1], k = c[2] + n[2];
      if (!g.inside(i, j, k)) continue;
      const std::size_t nidx = g.index(i, j, k);
      if (gt.observed(nidx) && (gt.values[nidx] < 0.0) != neg) {
        mask[idx] = 1;
        break;
      }
    }
  }
  return mask;
}

TsdfErrors tsdf_errors(const TsdfVolume& pred, const TsdfVolume& gt) {
  if (!(pred.spec == gt.spec)) throw Error(Errc::kSpecMismatch, "prediction and ground truth grids differ");
  const auto surface = sign_change_mask(gt);
  TsdfErrors out;
  double sum = 0.0;
  double surface_sum = 0.0;
  for (std::size_t idx = 0; idx < gt.spec.count(); ++idx) {
    if (!pred.observed(idx) || !gt.observed(idx)) continue;
    const double err = std::abs(pred.values[idx] - gt.values[idx]);
    sum += err;
    ++out.count;
    if (surface[idx]) {
      surface_sum += err;
      ++out.surface_count;
    }
  }
  const double mu = gt.spec.truncation;
  if (out.count > 0) out.mae = sum / static_cast<double>(out.count) * mu;
  if (out.surface_count > 0) out.surface_mae = surface_sum / static_cast<double>(out.surface_count) * mu;
  return out;
}

double tsdf_mae(const TsdfVolume& pred, const TsdfVolume& gt) { return tsdf_errors(pred, gt).mae; }
double surface_tsdf_mae(const TsdfVolume& pred, const TsdfVolume& gt) { return tsdf_errors(pred, gt).surface_mae; }

double seal_mae(const SealMap& pred, const SealMap& gt) {
  if (!pred.value.same_shape(gt.value)) throw Error(Errc::kDimensionMismatch, "seal maps differ in size");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.value.size(); ++i) {
    if (!pred.valid[i] || !gt.valid[i]) continue;
    sum += std::abs(pred.value[i] - gt.value[i]);
    ++n;
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

double collision_accuracy(const ScoreVolume& pred, const ScoreVolume& gt) {
  if (!(pred.spec == gt.spec)) throw Error(Errc::kSpecMismatch, "score volumes differ in grid");
  std::size_t total = 0;
  std::size_t agree = 0;
  for (std::size_t idx = 0; idx < gt.spec.count(); ++idx) {
    if (!gt.surface[idx]) continue;
    ++total;
    if (pred.collision[idx] == gt.collision[idx]) ++agree;
  }
  return total > 0 ? static_cast<double>(agree) / static_cast<double>(total) : 1.0;
}

std::optional<SurfaceSnap> snap_to_surface(const Scene& scene, const Vec3& p, double epsilon) {
  std::optional<SurfaceSnap> best;
  double best_d2 = epsilon * epsilon;
  for (const auto& obj : scene.objects()) {
    if (obj.bounds.distance_sq(p) > best_d2) continue;
    const auto cp = obj.bvh->closest_point(p, best_d2);
    if (cp && (!best || cp->distance_sq < best_d2)) {
      best_d2 = cp->distance_sq;
      best = SurfaceSnap{cp->point, obj.instance.instance_id, std::sqrt(cp->distance_sq)};
    }
  }
  return best;
}

SuctionLabel gt_reevaluate(const Scene& scene, const Vec3& p, const Vec3& d, const SuctionCupSpec& cup,
                           double epsilon, std::uint32_t* instance_out) {
  if (instance_out != nullptr) *instance_out = 0;
  const auto snap = snap_to_surface(scene, p, epsilon);
  if (!snap) return {};
  if (instance_out != nullptr) *instance_out = snap->instance_id;
  return label_candidate(scene, SuctionCandidate{snap->point, d.normalized(), snap->instance_id}, cup);
}

double ap_from_scores(const std::vector<double>& gt_scores, int k) {
  if (k < 1) throw Error(Errc::kInvalidArgument, "k must be >= 1");
  if (gt_scores.empty()) return 0.0;
  const std::size_t n = std::min(gt_scores.size(), static_cast<std::size_t>(k));
  // Count hits over all thresholds first so the result is a single division.
  std::size_t hits = 0;
  for (double s : kApThresholds)
    for (std::size_t i = 0; i < n; ++i)
      if (gt_scores[i] > s) ++hits;
  return static_cast<double>(hits) / (static_cast<double>(k) * std::size(kApThresholds));
}

double ap_topk(const std::vector<SuctionPoseResult>& ranked, const Scene& scene, const SuctionCupSpec& cup, int k,
               double epsilon) {
  std::vector<double> scores;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(std::max(k, 0)); ++i)
    scores.push_back(gt_reevaluate(scene, ranked[i].point, ranked[i].direction, cup, epsilon).overall);
  return ap_from_scores(scores, k);
}

}  // namespace beltpick
