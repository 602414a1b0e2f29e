//! Closed-form domains: membership, distance to the boundary, projection onto
//! the boundary and inward normals.
//!
//! Every point falls in exactly one [`Location`]. Interior membership is the
//! strict inequality on squared norms (no epsilon band). A non-interior point
//! within `T::boundary_tolerance()` (scaled by the shape's length scale) of the
//! boundary is classified as [`Location::Boundary`]; anything farther out is
//! [`Location::Exterior`]. The closure `Ḡ` is `Interior ∪ Boundary`.

use thiserror::Error;

use crate::real::{axpy, dot, norm, sub, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("projection requires an exterior point (distance to boundary {distance})")]
    NotExterior { distance: f64 },
    #[error("projection is not unique: distance {distance} exceeds the band {band}")]
    NonUniqueProjection { distance: f64, band: f64 },
    #[error("point is {distance} away from the boundary")]
    NotOnBoundary { distance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape<T, const D: usize> {
    /// Open ball `|x - center| < radius`.
    Ball { center: [T; D], radius: T },
    /// Half-space `normal · x > offset`; `normal` is the unit inward normal.
    HalfSpace { normal: [T; D], offset: T },
    /// Open interval `(lo, hi)`, one-dimensional only.
    Interval { lo: T, hi: T },
}

/// Boundary projection of an exterior point `x`: `x + distance * inward_normal == foot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T, const D: usize> {
    pub foot: [T; D],
    pub distance: T,
    pub inward_normal: [T; D],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T, const D: usize> {
    shape: Shape<T, D>,
}

impl<T: Real, const D: usize> Domain<T, D> {
    pub fn ball(center: [T; D], radius: T) -> Result<Self, GeometryError> {
        if D == 0 {
            return Err(GeometryError::InvalidDomain("dimension must be positive".into()));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(GeometryError::InvalidDomain(format!("ball radius {radius} must be positive")));
        }
        Ok(Self { shape: Shape::Ball { center, radius } })
    }

    pub fn half_space(normal: [T; D], offset: T) -> Result<Self, GeometryError> {
        if D == 0 {
            return Err(GeometryError::InvalidDomain("dimension must be positive".into()));
        }
        let len = norm(&normal);
        if (len - T::one()).abs() > T::lit(1e-12).max(T::boundary_tolerance()) {
            return Err(GeometryError::InvalidDomain(format!(
                "half-space normal has length {len}, expected 1"
            )));
        }
        Ok(Self { shape: Shape::HalfSpace { normal, offset } })
    }

    pub fn interval(lo: T, hi: T) -> Result<Self, GeometryError> {
        if D != 1 {
            return Err(GeometryError::InvalidDomain(format!("interval in dimension {D}")));
        }
        if !(lo < hi) {
            return Err(GeometryError::InvalidDomain(format!("interval bounds {lo} >= {hi}")));
        }
        Ok(Self { shape: Shape::Interval { lo, hi } })
    }

    pub fn shape(&self) -> &Shape<T, D> {
        &self.shape
    }

    pub const fn dimension(&self) -> usize {
        D
    }

    fn length_scale(&self) -> T {
        match self.shape {
            Shape::Ball { radius, .. } => radius.max(T::one()),
            Shape::HalfSpace { offset, .. } => offset.abs().max(T::one()),
            Shape::Interval { lo, hi } => lo.abs().max(hi.abs()).max(T::one()),
        }
    }

    /// Signed distance, positive inside.
    fn signed_distance(&self, x: &[T; D]) -> T {
        match &self.shape {
            Shape::Ball { center, radius } => *radius - norm(&sub(x, center)),
            Shape::HalfSpace { normal, offset } => dot(normal, x) - *offset,
            Shape::Interval { lo, hi } => (x[0] - *lo).min(*hi - x[0]),
        }
    }

    #[inline]
    fn band(&self) -> T {
        T::boundary_tolerance() * self.length_scale()
    }

    /// Strict interior membership, with no tolerance band.
    #[inline]
    pub fn contains(&self, x: &[T; D]) -> bool {
        match &self.shape {
            Shape::Ball { center, radius } => {
                let d = sub(x, center);
                dot(&d, &d) < *radius * *radius
            }
            Shape::HalfSpace { normal, offset } => dot(normal, x) > *offset,
            Shape::Interval { lo, hi } => *lo < x[0] && x[0] < *hi,
        }
    }

    /// Non-interior points within the tolerance band of `∂G` are boundary points.
    #[inline]
    pub fn classify(&self, x: &[T; D]) -> Location {
        if self.contains(x) {
            Location::Interior
        } else if -self.signed_distance(x) <= self.band() {
            Location::Boundary
        } else {
            Location::Exterior
        }
    }

    pub fn on_boundary(&self, x: &[T; D]) -> bool {
        self.classify(x) == Location::Boundary
    }

    pub fn is_exterior(&self, x: &[T; D]) -> bool {
        self.classify(x) == Location::Exterior
    }

    /// Membership in the closure `Ḡ`.
    #[inline]
    pub fn in_closure(&self, x: &[T; D]) -> bool {
        self.classify(x) != Location::Exterior
    }

    pub fn distance_to_boundary(&self, x: &[T; D]) -> T {
        self.signed_distance(x).abs()
    }

    /// Projects an exterior point onto the boundary.
    pub fn project_to_boundary(&self, x: &[T; D]) -> Result<Projection<T, D>, GeometryError> {
        if self.classify(x) != Location::Exterior {
            return Err(GeometryError::NotExterior { distance: self.distance_to_boundary(x).as_f64() });
        }
        match &self.shape {
            Shape::Ball { center, radius } => {
                let offset = sub(x, center);
                let len = norm(&offset);
                let distance = len - *radius;
                if distance > *radius {
                    return Err(GeometryError::NonUniqueProjection {
                        distance: distance.as_f64(),
                        band: radius.as_f64(),
                    });
                }
                let inward_normal: [T; D] = std::array::from_fn(|i| -offset[i] / len);
                let foot = axpy(center, -*radius, &inward_normal);
                Ok(Projection { foot, distance, inward_normal })
            }
            Shape::HalfSpace { normal, offset } => {
                let distance = *offset - dot(normal, x);
                Ok(Projection { foot: axpy(x, distance, normal), distance, inward_normal: *normal })
            }
            Shape::Interval { lo, hi } => {
                let (foot, distance, dir) = if x[0] < *lo {
                    (*lo, *lo - x[0], T::one())
                } else {
                    (*hi, x[0] - *hi, -T::one())
                };
                Ok(Projection {
                    foot: std::array::from_fn(|_| foot),
                    distance,
                    inward_normal: std::array::from_fn(|_| dir),
                })
            }
        }
    }

    /// Unit inward normal at a boundary point (tolerance `1e-9` relative to the
    /// shape's length scale).
    pub fn inward_normal(&self, z: &[T; D]) -> Result<[T; D], GeometryError> {
        let tol = T::lit(1e-9).max(T::epsilon().sqrt()) * self.length_scale();
        let distance = self.distance_to_boundary(z);
        if distance > tol {
            return Err(GeometryError::NotOnBoundary { distance: distance.as_f64() });
        }
        Ok(match &self.shape {
            Shape::Ball { center, .. } => {
                let inward = sub(center, z);
                let len = norm(&inward);
                std::array::from_fn(|i| inward[i] / len)
            }
            Shape::HalfSpace { normal, .. } => *normal,
            Shape::Interval { lo, hi } => {
                let dir = if (z[0] - *lo).abs() <= (*hi - z[0]).abs() { T::one() } else { -T::one() };
                std::array::from_fn(|_| dir)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;

    fn disk() -> Domain<f64, 2> {
        Domain::ball([0.0, 0.0], 1.25).unwrap()
    }

    #[test]
    fn ball_membership() {
        let g = disk();
        assert!(g.contains(&[0.0, 1.0]));
        assert!(!g.contains(&[0.0, 1.25]));
        assert!(!g.contains(&[0.0, 1.5]));
        assert_eq!(g.classify(&[0.0, 1.25]), Location::Boundary);
        assert_eq!(g.classify(&[0.0, 1.5]), Location::Exterior);
    }

    #[test]
    fn distances() {
        let g = disk();
        assert_eq!(g.distance_to_boundary(&[0.0, 0.0]), 1.25);
        assert_eq!(g.distance_to_boundary(&[0.0, 1.5]), 0.25);
        let i = Domain::<f64, 1>::interval(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(i.distance_to_boundary(&[0.3]), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn ball_projection() {
        let g = disk();
        let p = g.project_to_boundary(&[0.0, 1.5]).unwrap();
        assert_eq!(p.foot, [0.0, 1.25]);
        assert_eq!(p.distance, 0.25);
        assert_eq!(p.inward_normal, [0.0, -1.0]);

        let p = g.project_to_boundary(&[2.5, 0.0]).unwrap();
        assert_eq!(p.foot, [1.25, 0.0]);
        assert_eq!(p.distance, 1.25);
        assert_eq!(p.inward_normal, [-1.0, 0.0]);
    }

    #[test]
    fn half_space_projection() {
        let g = Domain::half_space([0.0, 1.0], 0.0).unwrap();
        let p = g.project_to_boundary(&[3.0, -0.1]).unwrap();
        assert_eq!(p.foot, [3.0, 0.0]);
        assert_abs_diff_eq!(p.distance, 0.1);
        assert_eq!(p.inward_normal, [0.0, 1.0]);
    }

    #[test]
    fn interval_projection_and_normals() {
        let g = Domain::<f64, 1>::interval(0.0, 1.0).unwrap();
        let p = g.project_to_boundary(&[1.2]).unwrap();
        assert_eq!(p.foot, [1.0]);
        assert_eq!(p.inward_normal, [-1.0]);
        assert_eq!(g.inward_normal(&[0.0]).unwrap(), [1.0]);
        assert_eq!(g.inward_normal(&[1.0]).unwrap(), [-1.0]);
    }

    #[test]
    fn projection_preconditions() {
        let g = disk();
        assert!(matches!(g.project_to_boundary(&[0.0, 1.0]), Err(GeometryError::NotExterior { .. })));
        assert!(matches!(g.project_to_boundary(&[0.0, 1.25]), Err(GeometryError::NotExterior { .. })));
        assert!(matches!(
            g.project_to_boundary(&[0.0, 2.6]),
            Err(GeometryError::NonUniqueProjection { .. })
        ));
    }

    #[test]
    fn ball_inward_normals() {
        let g = disk();
        assert_eq!(g.inward_normal(&[0.0, 1.25]).unwrap(), [0.0, -1.0]);
        assert_eq!(g.inward_normal(&[1.25, 0.0]).unwrap(), [-1.0, 0.0]);
        assert!(matches!(g.inward_normal(&[0.0, 1.0]), Err(GeometryError::NotOnBoundary { .. })));
    }

    #[test]
    fn invalid_domains() {
        assert!(Domain::<f64, 2>::ball([0.0, 0.0], 0.0).is_err());
        assert!(Domain::<f64, 2>::half_space([1.0, 1.0], 0.0).is_err());
        assert!(Domain::<f64, 1>::interval(1.0, 1.0).is_err());
        assert!(Domain::<f64, 2>::interval(0.0, 1.0).is_err());
    }

    #[test]
    fn single_precision_ball() {
        let g = Domain::<f32, 2>::ball([0.0, 0.0], 1.25).unwrap();
        let p = g.project_to_boundary(&[0.0, 1.5]).unwrap();
        assert_eq!(p.foot, [0.0, 1.25]);
        assert!(g.on_boundary(&p.foot));
    }

    fn exterior_point() -> impl Strategy<Value = [f64; 2]> {
        (0.0..std::f64::consts::TAU, 1e-9..0.625f64)
            .prop_map(|(theta, d)| [(1.25 + d) * theta.cos(), (1.25 + d) * theta.sin()])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn projection_round_trip(x in exterior_point()) {
            let g = disk();
            prop_assume!(g.is_exterior(&x));
            let p = g.project_to_boundary(&x).unwrap();
            let back = axpy(&x, p.distance, &p.inward_normal);
            let scale = 1e-12 * (1.0 + norm(&x));
            prop_assert!(norm(&sub(&back, &p.foot)) <= scale);
            prop_assert!((p.distance - g.distance_to_boundary(&x)).abs() <= 1e-12);
            prop_assert!((norm(&p.inward_normal) - 1.0).abs() <= 1e-12);
            prop_assert!(g.contains(&axpy(&p.foot, 1e-6, &p.inward_normal)));
            prop_assert!(g.in_closure(&p.foot));
            prop_assert!(g.distance_to_boundary(&p.foot) <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100_000))]

        #[test]
        fn classification_is_a_partition(x in prop::array::uniform2(-2.0..2.0f64)) {
            let g = disk();
            let hits = [g.contains(&x), g.on_boundary(&x), g.is_exterior(&x)];
            prop_assert_eq!(hits.iter().filter(|&&b| b).count(), 1);
        }
    }
}
