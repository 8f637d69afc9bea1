use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::region::unit_vector;
use super::Region;

/// Lower time edge of cylindrical domains `Q = (−1, T) × D`.
pub const CYLINDER_FLOOR: f64 = -1.0;

/// Step and direction count of the backward-in-time curve probe used to
/// classify boundary points of general domains.
const CURVE_STEP: f64 = 1e-3;
const CURVE_DIRECTIONS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Interior,
    ParabolicBoundary,
    OtherBoundary,
    Exterior,
}

/// Closed space-time bounding box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBox {
    pub t0: f64,
    pub t1: f64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SpaceTimeBox {
    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        t >= self.t0
            && t <= self.t1
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| v >= a && v <= b)
    }

    pub fn spatial_diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Diameter of the whole space-time box.
    pub fn diameter(&self) -> f64 {
        let dt = self.t1 - self.t0;
        (self.spatial_diameter().powi(2) + dt * dt).sqrt()
    }
}

pub type MembershipFn = Arc<dyn Fn(f64, &[f64]) -> bool + Send + Sync>;

/// Bounded space-time region given by a membership predicate.
#[derive(Clone)]
pub struct GeneralDomain {
    pub label: String,
    pub bbox: SpaceTimeBox,
    membership: MembershipFn,
    /// Present when the region is the product `(t0, t1) × region`.
    product: Option<(f64, f64, Region)>,
}

impl GeneralDomain {
    pub fn new(
        label: impl Into<String>,
        bbox: SpaceTimeBox,
        membership: impl Fn(f64, &[f64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            bbox,
            membership: Arc::new(membership),
            product: None,
        }
    }

    /// `(t0, t1) × region`.
    pub fn product(t0: f64, t1: f64, region: Region) -> Self {
        let (lo, hi) = region.bounds();
        let r = region.clone();
        let mut out = Self::new("product", SpaceTimeBox { t0, t1, lo, hi }, move |t, x| {
            t > t0 && t < t1 && r.contains(x)
        });
        out.product = Some((t0, t1, region));
        out
    }

    pub fn product_form(&self) -> Option<&(f64, f64, Region)> {
        self.product.as_ref()
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        (self.membership)(t, x)
    }
}

impl fmt::Debug for GeneralDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralDomain")
            .field("label", &self.label)
            .field("bbox", &self.bbox)
            .field("product", &self.product)
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum DomainSpec {
    /// `Q = (−1, T) × D`.
    Cylinder {
        terminal_time: f64,
        region: Region,
    },
    General(GeneralDomain),
}

impl DomainSpec {
    pub fn cylinder(terminal_time: f64, region: Region) -> Self {
        DomainSpec::Cylinder {
            terminal_time,
            region,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Cylinder { region, .. } => region.dim(),
            DomainSpec::General(g) => g.bbox.lo.len(),
        }
    }

    #[inline]
    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        match self {
            DomainSpec::Cylinder {
                terminal_time,
                region,
            } => t > CYLINDER_FLOOR && t < *terminal_time && region.contains(x),
            DomainSpec::General(g) => g.contains(t, x),
        }
    }

    pub fn bbox(&self) -> SpaceTimeBox {
        match self {
            DomainSpec::Cylinder {
                terminal_time,
                region,
            } => {
                let (lo, hi) = region.bounds();
                SpaceTimeBox {
                    t0: CYLINDER_FLOOR,
                    t1: *terminal_time,
                    lo,
                    hi,
                }
            }
            DomainSpec::General(g) => g.bbox.clone(),
        }
    }

    pub fn terminal_time(&self) -> Option<f64> {
        match self {
            DomainSpec::Cylinder { terminal_time, .. } => Some(*terminal_time),
            DomainSpec::General(_) => None,
        }
    }

    /// Spatial region of a cylinder, or of a product-form general domain.
    pub fn region(&self) -> Option<&Region> {
        match self {
            DomainSpec::Cylinder { region, .. } => Some(region),
            DomainSpec::General(g) => g.product.as_ref().map(|(_, _, r)| r),
        }
    }

    pub fn is_cylinder(&self) -> bool {
        matches!(self, DomainSpec::Cylinder { .. })
    }

    /// The cylinder rewritten as a general membership predicate.
    pub fn to_general(&self) -> GeneralDomain {
        match self {
            DomainSpec::Cylinder {
                terminal_time,
                region,
            } => GeneralDomain::product(CYLINDER_FLOOR, *terminal_time, region.clone()),
            DomainSpec::General(g) => g.clone(),
        }
    }

    pub fn classify(&self, t: f64, x: &[f64]) -> PointClass {
        match self {
            DomainSpec::Cylinder {
                terminal_time,
                region,
            } => classify_cylinder(*terminal_time, region, t, x),
            DomainSpec::General(g) => classify_general(g, t, x),
        }
    }

    /// Uniform sample of a point in `Q` (rejection from the bounding box).
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Vec<f64>) {
        let b = self.bbox();
        loop {
            let t = rng.random_range(b.t0..b.t1);
            let x: Vec<f64> =
                b.lo.iter()
                    .zip(&b.hi)
                    .map(|(&a, &c)| rng.random_range(a..c))
                    .collect();
            if self.contains(t, &x) {
                return (t, x);
            }
        }
    }
}

fn classify_cylinder(terminal_time: f64, region: &Region, t: f64, x: &[f64]) -> PointClass {
    let tol = 1e-12 * terminal_time.abs().max(1.0);
    let in_open_time = t > CYLINDER_FLOOR && t < terminal_time;
    if in_open_time && region.contains(x) {
        return PointClass::Interior;
    }
    let in_closure =
        t >= CYLINDER_FLOOR - tol && t <= terminal_time + tol && region.contains_closure(x);
    if !in_closure {
        return PointClass::Exterior;
    }
    if (t - terminal_time).abs() <= tol {
        return PointClass::ParabolicBoundary;
    }
    if (t - CYLINDER_FLOOR).abs() <= tol {
        return PointClass::OtherBoundary;
    }
    // lateral boundary (−1, T) × ∂D
    PointClass::ParabolicBoundary
}

/// Fixed probe directions: the constant curve plus `CURVE_DIRECTIONS` unit
/// vectors (equally spaced angles in 2D, a seeded sphere sample otherwise).
fn probe_directions(d: usize) -> Vec<Vec<f64>> {
    let mut dirs = vec![vec![0.0; d]];
    match d {
        1 => {
            dirs.push(vec![1.0]);
            dirs.push(vec![-1.0]);
        }
        2 => {
            for k in 0..CURVE_DIRECTIONS {
                let a = std::f64::consts::TAU * k as f64 / CURVE_DIRECTIONS as f64;
                dirs.push(vec![a.cos(), a.sin()]);
            }
        }
        _ => {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
            for _ in 0..CURVE_DIRECTIONS {
                dirs.push(unit_vector(&mut rng, d));
            }
        }
    }
    dirs
}

fn classify_general(g: &GeneralDomain, t: f64, x: &[f64]) -> PointClass {
    if g.contains(t, x) {
        return PointClass::Interior;
    }
    let d = x.len();
    let dirs = probe_directions(d);
    let mut y = vec![0.0; d];
    let mut shifted = |dt: f64, dir: &[f64], scale: f64| -> bool {
        for k in 0..d {
            y[k] = x[k] + scale * dir[k];
        }
        g.contains(t + dt, &y)
    };
    // on the boundary iff some nearby space-time probe lies in Q
    let near = dirs.iter().any(|dir| {
        [-1.0, 0.0, 1.0]
            .iter()
            .any(|&s| shifted(s * CURVE_STEP, dir, CURVE_STEP))
    });
    if !near {
        return PointClass::Exterior;
    }
    // parabolic iff a straight curve (t − s, x + s·w) stays in Q for small s > 0
    let parabolic = dirs.iter().any(|dir| {
        [1.0, 0.5, 0.25].iter().all(|&m| {
            let s = m * CURVE_STEP;
            shifted(-s, dir, s)
        })
    });
    if parabolic {
        PointClass::ParabolicBoundary
    } else {
        PointClass::OtherBoundary
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annulus_cylinder() -> DomainSpec {
        DomainSpec::cylinder(4.0, Region::annulus(2, 1.0, 2.0))
    }

    #[test]
    fn cylinder_classification_matches_parabolic_boundary_formula() {
        let q = annulus_cylinder();
        assert_eq!(q.classify(0.0, &[1.5, 0.0]), PointClass::Interior);
        assert_eq!(q.classify(4.0, &[1.5, 0.0]), PointClass::ParabolicBoundary);
        assert_eq!(q.classify(-1.0, &[1.5, 0.0]), PointClass::OtherBoundary);
        assert_eq!(q.classify(0.0, &[2.0, 0.0]), PointClass::ParabolicBoundary);
        assert_eq!(q.classify(4.0, &[2.0, 0.0]), PointClass::ParabolicBoundary);
        assert_eq!(q.classify(-1.0, &[1.0, 0.0]), PointClass::OtherBoundary);
        assert_eq!(q.classify(0.0, &[0.5, 0.0]), PointClass::Exterior);
        assert_eq!(q.classify(5.0, &[1.5, 0.0]), PointClass::Exterior);
    }

    #[test]
    fn general_probe_agrees_with_cylinder_formula() {
        let cyl = annulus_cylinder();
        let gen = DomainSpec::General(cyl.to_general());
        let pts: [(f64, [f64; 2]); 8] = [
            (0.0, [1.5, 0.0]),
            (4.0, [1.5, 0.0]),
            (-1.0, [1.5, 0.0]),
            (0.0, [2.0, 0.0]),
            (2.0, [0.0, -1.0]),
            (4.0, [0.0, 2.0]),
            (0.0, [0.3, 0.0]),
            (-1.0, [0.0, 1.0]),
        ];
        for (t, x) in pts {
            assert_eq!(cyl.classify(t, &x), gen.classify(t, &x), "at ({t}, {x:?})");
        }
    }
}
