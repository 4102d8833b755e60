#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace fcrx {

// Axis-aligned box in normalized image coordinates.  The zero box
// (0,0,0,0) is the distinguished "absent" location.
struct BBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return w * h; }
  bool is_zero() const { return x == 0.0 && y == 0.0 && w == 0.0 && h == 0.0; }

  bool operator==(const BBox& o) const {
    return x == o.x && y == o.y && w == o.w && h == o.h;
  }
};

inline constexpr double kBoxEps = 1e-6;

inline bool bbox_valid(const BBox& b) {
  return b.x >= 0.0 && b.y >= 0.0 && b.w >= 0.0 && b.h >= 0.0 &&
         b.x <= 1.0 && b.y <= 1.0 && b.w <= 1.0 && b.h <= 1.0 &&
         b.x + b.w <= 1.0 + kBoxEps && b.y + b.h <= 1.0 + kBoxEps;
}

inline double intersection_area(const BBox& a, const BBox& b) {
  double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

// IoU with the convention that two zero-area boxes have IoU 1.
inline double iou(const BBox& a, const BBox& b) {
  double inter = intersection_area(a, b);
  double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 1.0;
  return inter / uni;
}

// Smallest axis-aligned box enclosing both.
inline BBox union_box(const BBox& a, const BBox& b) {
  double x1 = std::min(a.x, b.x);
  double y1 = std::min(a.y, b.y);
  double x2 = std::max(a.x + a.w, b.x + b.w);
  double y2 = std::max(a.y + a.h, b.y + b.h);
  return BBox{x1, y1, x2 - x1, y2 - y1};
}

// Generalized IoU: IoU minus the fraction of the enclosing hull not
// covered by the union.  In [-1, 1]; equals IoU when hull == union.
// Both boxes degenerate -> 1 (so the 1-GIoU loss vanishes there).
inline double giou(const BBox& a, const BBox& b) {
  double inter = intersection_area(a, b);
  double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 1.0;
  BBox hull = union_box(a, b);
  double hull_area = hull.area();
  double value = inter / uni;
  if (hull_area > 0.0) value -= (hull_area - uni) / hull_area;
  return value;
}

// d(giou)/d(a.x, a.y, a.w, a.h) holding b fixed.  Piecewise smooth;
// returns a subgradient at corner-tie points.
inline std::array<double, 4> giou_grad(const BBox& a, const BBox& b) {
  std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
  double uni0 = a.area() + b.area() - intersection_area(a, b);
  if (uni0 <= 0.0) return g;

  double a2x = a.x + a.w, a2y = a.y + a.h;
  double b2x = b.x + b.w, b2y = b.y + b.h;

  double iw = std::min(a2x, b2x) - std::max(a.x, b.x);
  double ih = std::min(a2y, b2y) - std::max(a.y, b.y);
  bool overlap = iw > 0.0 && ih > 0.0;
  double inter = overlap ? iw * ih : 0.0;

  // Intersection corner sensitivities.
  double diw_dx1 = (overlap && a.x >= b.x) ? -1.0 : 0.0;
  double diw_dx2 = (overlap && a2x <= b2x) ? 1.0 : 0.0;
  double dih_dy1 = (overlap && a.y >= b.y) ? -1.0 : 0.0;
  double dih_dy2 = (overlap && a2y <= b2y) ? 1.0 : 0.0;

  // dI w.r.t. (x, y, w, h); x moves both x1 and x2.
  double dI_dx = overlap ? ih * (diw_dx1 + diw_dx2) : 0.0;
  double dI_dy = overlap ? iw * (dih_dy1 + dih_dy2) : 0.0;
  double dI_dw = overlap ? ih * diw_dx2 : 0.0;
  double dI_dh = overlap ? iw * dih_dy2 : 0.0;

  double dA_dw = a.h, dA_dh = a.w;
  double dU_dx = -dI_dx, dU_dy = -dI_dy;
  double dU_dw = dA_dw - dI_dw, dU_dh = dA_dh - dI_dh;

  double U = uni0;
  double dIoU_dx = (dI_dx * U - inter * dU_dx) / (U * U);
  double dIoU_dy = (dI_dy * U - inter * dU_dy) / (U * U);
  double dIoU_dw = (dI_dw * U - inter * dU_dw) / (U * U);
  double dIoU_dh = (dI_dh * U - inter * dU_dh) / (U * U);

  // Hull corner sensitivities.
  double hx1 = std::min(a.x, b.x), hy1 = std::min(a.y, b.y);
  double hx2 = std::max(a2x, b2x), hy2 = std::max(a2y, b2y);
  double hw = hx2 - hx1, hh = hy2 - hy1;
  double H = hw * hh;

  double dhw_dx1 = (a.x <= b.x) ? -1.0 : 0.0;
  double dhw_dx2 = (a2x >= b2x) ? 1.0 : 0.0;
  double dhh_dy1 = (a.y <= b.y) ? -1.0 : 0.0;
  double dhh_dy2 = (a2y >= b2y) ? 1.0 : 0.0;

  double dH_dx = hh * (dhw_dx1 + dhw_dx2);
  double dH_dy = hw * (dhh_dy1 + dhh_dy2);
  double dH_dw = hh * dhw_dx2;
  double dH_dh = hw * dhh_dy2;

  // GIoU = IoU - 1 + U/H.
  double dP_dx = 0.0, dP_dy = 0.0, dP_dw = 0.0, dP_dh = 0.0;
  if (H > 0.0) {
    dP_dx = (dU_dx * H - U * dH_dx) / (H * H);
    dP_dy = (dU_dy * H - U * dH_dy) / (H * H);
    dP_dw = (dU_dw * H - U * dH_dw) / (H * H);
    dP_dh = (dU_dh * H - U * dH_dh) / (H * H);
  }

  g[0] = dIoU_dx + dP_dx;
  g[1] = dIoU_dy + dP_dy;
  g[2] = dIoU_dw + dP_dw;
  g[3] = dIoU_dh + dP_dh;
  return g;
}

}  // namespace fcrx
