use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Bounded open spatial region with a signed distance gauge.
///
/// `gauge(x)` is positive inside, zero on the boundary and negative outside;
/// inside it equals the distance to the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Region {
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
}

impl Region {
    pub fn unit_ball(d: usize) -> Self {
        Region::Ball {
            center: vec![0.0; d],
            radius: 1.0,
        }
    }

    pub fn cube(d: usize, half: f64) -> Self {
        Region::Box {
            lo: vec![-half; d],
            hi: vec![half; d],
        }
    }

    pub fn annulus(d: usize, inner: f64, outer: f64) -> Self {
        Region::Annulus {
            center: vec![0.0; d],
            inner,
            outer,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Box { lo, .. } => lo.len(),
            Region::Ball { center, .. } | Region::Annulus { center, .. } => center.len(),
        }
    }

    fn radius_of(center: &[f64], x: &[f64]) -> f64 {
        center
            .iter()
            .zip(x)
            .map(|(c, v)| (v - c) * (v - c))
            .sum::<f64>()
            .sqrt()
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            Region::Box { lo, hi } => {
                let mut inside = f64::INFINITY;
                let mut outside = 0.0;
                for k in 0..lo.len() {
                    let a = x[k] - lo[k];
                    let b = hi[k] - x[k];
                    inside = inside.min(a.min(b));
                    let excess = (-a).max(-b).max(0.0);
                    outside += excess * excess;
                }
                if outside > 0.0 {
                    -outside.sqrt()
                } else {
                    inside
                }
            }
            Region::Ball { center, radius } => radius - Self::radius_of(center, x),
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = Self::radius_of(center, x);
                (r - inner).min(outer - r)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) > 0.0
    }

    pub fn contains_closure(&self, x: &[f64]) -> bool {
        self.gauge(x) >= -1e-12
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Ball { center, radius: r }
            | Region::Annulus {
                center, outer: r, ..
            } => (
                center.iter().map(|c| c - r).collect(),
                center.iter().map(|c| c + r).collect(),
            ),
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }

    /// Uniform interior sample by rejection from the bounding box.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        loop {
            let x: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(&a, &b)| rng.random_range(a..b))
                .collect();
            if self.contains(&x) {
                return x;
            }
        }
    }

    /// A point on the boundary.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        match self {
            Region::Box { lo, hi } => {
                let mut x: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(&a, &b)| rng.random_range(a..=b))
                    .collect();
                let axis = rng.random_range(0..d);
                x[axis] = if rng.random_bool(0.5) {
                    lo[axis]
                } else {
                    hi[axis]
                };
                x
            }
            Region::Ball { center, radius } => {
                let u = unit_vector(rng, d);
                center.iter().zip(&u).map(|(c, v)| c + radius * v).collect()
            }
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let u = unit_vector(rng, d);
                let r = if rng.random_bool(0.5) { *inner } else { *outer };
                center.iter().zip(&u).map(|(c, v)| c + r * v).collect()
            }
        }
    }
}

pub(crate) fn unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut buf = vec![0.0; d];
    loop {
        let mut n: f64 = 0.0;
        for v in buf.iter_mut() {
            *v = rng.sample(StandardNormal);
            n += *v * *v;
        }
        if n > 1e-12 {
            let n = n.sqrt();
            buf.iter_mut().for_each(|v| *v /= n);
            return buf;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn annulus_gauge_is_distance_to_nearest_circle() {
        let a = Region::annulus(2, 1.0, 2.0);
        assert!((a.gauge(&[1.5, 0.0]) - 0.5).abs() < 1e-15);
        assert!((a.gauge(&[0.0, 1.2]) - 0.2).abs() < 1e-15);
        assert!(a.gauge(&[0.5, 0.0]) < 0.0);
        assert!(!a.contains(&[1.0, 0.0]));
        assert!(a.contains_closure(&[1.0, 0.0]));
    }

    #[test]
    fn box_gauge_outside_is_negative_distance() {
        let b = Region::cube(2, 1.0);
        assert!((b.gauge(&[0.5, 0.0]) - 0.5).abs() < 1e-15);
        assert!((b.gauge(&[2.0, 2.0]) + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn boundary_samples_have_zero_gauge() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for region in [
            Region::cube(3, 0.7),
            Region::unit_ball(2),
            Region::annulus(2, 1.0, 2.0),
        ] {
            for _ in 0..50 {
                let x = region.sample_boundary(&mut rng);
                assert!(region.gauge(&x).abs() < 1e-12);
                let y = region.sample_interior(&mut rng);
                assert!(region.contains(&y));
            }
        }
    }
}
