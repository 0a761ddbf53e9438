use std::f64::consts::PI;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Wrap an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid can return exactly 2π for tiny negative inputs.
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Express a world-frame point in the frame of a pose at `origin` with `heading`.
pub fn to_robot_frame(point: Vec2, origin: Vec2, heading: f64) -> Vec2 {
    let d = point - origin;
    let (s, c) = heading.sin_cos();
    Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
}

/// Euclidean length of the segment `a`–`b` closest point to `p`.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}
