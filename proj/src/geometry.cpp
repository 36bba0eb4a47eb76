#include "lfd/geometry.hpp"

namespace lfd {

std::optional<double> segment_triangle_hit(const Vec3& p, const Vec3& q, const Triangle& tri,
                                           double eps) {
  const Vec3 dir = q - p;
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 h = cross(dir, e2);
  const double det = dot(e1, h);
  if (std::abs(det) < 1e-14) return std::nullopt;  // parallel or degenerate
  const double inv = 1.0 / det;
  const Vec3 s = p - tri.a;
  const double u = inv * dot(s, h);
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = cross(s, e1);
  const double v = inv * dot(dir, qv);
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = inv * dot(e2, qv);
  if (t <= eps || t >= 1.0 - eps) return std::nullopt;
  return t;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Triangle& tri) {
  const Vec3& a = tri.a;
  const Vec3& b = tri.b;
  const Vec3& c = tri.c;
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = dot(ab, ap);
  const double d2 = dot(ac, ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = dot(ab, bp);
  const double d4 = dot(ac, bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Vec3 cp = p - c;
  const double d5 = dot(ab, cp);
  const double d6 = dot(ac, cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace lfd
