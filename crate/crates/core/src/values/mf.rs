//! Piecewise-linear membership functions, alpha-cuts and multimodal
//! centroid defuzzification.

use serde::{Deserialize, Serialize};

use super::ValueError;

/// A membership function given by breakpoints `(x, μ)` with strictly
/// ascending `x`. Membership is linear between breakpoints and zero outside
/// `[x_first, x_last]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct MembershipFunction {
    points: Vec<(f64, f64)>,
}

/// One mode of a (possibly multimodal) membership function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub centroid: f64,
    pub peak: f64,
}

/// Result of defuzzification: every mode centroid in ascending order plus the
/// designated primary value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defuzzified {
    pub values: Vec<f64>,
    pub primary: f64,
}

impl MembershipFunction {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ValueError> {
        if points.is_empty() {
            return Err(ValueError::InvalidMf("no breakpoints".into()));
        }
        for &(x, mu) in &points {
            if !x.is_finite() {
                return Err(ValueError::InvalidMf(format!("non-finite abscissa {x}")));
            }
            if !(0.0..=1.0).contains(&mu) {
                return Err(ValueError::InvalidMf(format!("membership {mu} outside [0;1]")));
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(ValueError::InvalidMf("abscissae must be strictly ascending".into()));
        }
        if points.iter().all(|&(_, mu)| mu <= 0.0) {
            return Err(ValueError::InvalidMf("membership is zero everywhere".into()));
        }
        Ok(Self { points })
    }

    /// Triangle with feet `a`, `c` and peak `b`. Coincident feet collapse, so
    /// `triangle(0, 0, 6)` is the right triangle `(0,1) (6,0)`.
    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self, ValueError> {
        Self::trapezoid(a, b, b, c)
    }

    pub fn trapezoid(a: f64, b: f64, c: f64, d: f64) -> Result<Self, ValueError> {
        if !(a <= b && b <= c && c <= d) {
            return Err(ValueError::InvalidMf(format!("trapezoid parameters out of order: {a}, {b}, {c}, {d}")));
        }
        let mut pts = Vec::with_capacity(4);
        if a < b {
            pts.push((a, 0.0));
        }
        pts.push((b, 1.0));
        if c > b {
            pts.push((c, 1.0));
        }
        if d > c {
            pts.push((d, 0.0));
        }
        Self::new(pts)
    }

    /// Assembles a function from possibly-duplicated abscissae, keeping the
    /// highest membership among equal `x`. Used when rebuilding from cuts.
    pub(crate) fn from_unsorted_merge(mut pts: Vec<(f64, f64)>) -> Result<Self, ValueError> {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (x, mu) in pts {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1.max(mu),
                _ => out.push((x, mu)),
            }
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn height(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    pub fn membership(&self, x: f64) -> f64 {
        let pts = &self.points;
        let first = pts[0];
        let last = pts[pts.len() - 1];
        if x < first.0 || x > last.0 {
            return 0.0;
        }
        match pts.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(i) => pts[i].1,
            Err(i) => {
                let (x0, m0) = pts[i - 1];
                let (x1, m1) = pts[i];
                m0 + (x - x0) / (x1 - x0) * (m1 - m0)
            }
        }
    }

    /// Closure of `{x : μ(x) > 0}` as a hull.
    pub fn support(&self) -> (f64, f64) {
        let pts = &self.points;
        let lo = pts.iter().position(|p| p.1 > 0.0).expect("validated non-zero");
        let hi = pts.iter().rposition(|p| p.1 > 0.0).expect("validated non-zero");
        let left = if lo > 0 { pts[lo - 1].0 } else { pts[lo].0 };
        let right = if hi + 1 < pts.len() { pts[hi + 1].0 } else { pts[hi].0 };
        (left, right)
    }

    /// Hull of the alpha-cut `{x : μ(x) ≥ α}`; `α = 0` yields the support.
    /// Returns `None` when `α` exceeds the height.
    pub fn alpha_cut(&self, alpha: f64) -> Option<(f64, f64)> {
        if alpha <= 0.0 {
            return Some(self.support());
        }
        let pts = &self.points;
        let n = pts.len();
        let left = if pts[0].1 >= alpha {
            pts[0].0
        } else {
            let i = (0..n - 1).find(|&i| pts[i + 1].1 >= alpha)?;
            let (x0, m0) = pts[i];
            let (x1, m1) = pts[i + 1];
            x0 + (alpha - m0) / (m1 - m0) * (x1 - x0)
        };
        let right = if pts[n - 1].1 >= alpha {
            pts[n - 1].0
        } else {
            let i = (1..n).rev().find(|&i| pts[i - 1].1 >= alpha)?;
            let (x0, m0) = pts[i - 1];
            let (x1, m1) = pts[i];
            x1 - (alpha - m1) / (m0 - m1) * (x1 - x0)
        };
        Some((left, right))
    }

    /// Splits the function at interior zero-membership breakpoints. Each
    /// returned mode carries its centroid and peak membership.
    pub fn modes(&self) -> Vec<Mode> {
        let pts = &self.points;
        if pts.len() == 1 {
            return vec![Mode { centroid: pts[0].0, peak: pts[0].1 }];
        }
        let mut modes = Vec::new();
        let mut start = 0;
        for i in 1..pts.len() {
            if pts[i].1 == 0.0 || i == pts.len() - 1 {
                if let Some(m) = mode_of(&pts[start..=i]) {
                    modes.push(m);
                }
                start = i;
            }
        }
        modes
    }
}

fn mode_of(run: &[(f64, f64)]) -> Option<Mode> {
    let origin = run[0].0;
    let mut area = 0.0;
    let mut moment = 0.0;
    for w in run.windows(2) {
        let (x0, m0) = w[0];
        let (x1, m1) = w[1];
        let width = x1 - x0;
        let u0 = x0 - origin;
        let u1 = x1 - origin;
        area += width * (m0 + m1) / 2.0;
        moment += width * (u0 * (2.0 * m0 + m1) + u1 * (m0 + 2.0 * m1)) / 6.0;
    }
    if area <= 0.0 {
        return None;
    }
    let peak = run.iter().map(|p| p.1).fold(0.0, f64::max);
    Some(Mode { centroid: origin + moment / area, peak })
}

/// Collapses a membership function into its mode centroids. The primary
/// value is the centroid of the highest mode; ties go to the smallest centroid.
pub fn defuzzify(mf: &MembershipFunction) -> Defuzzified {
    let modes = mf.modes();
    let primary = modes
        .iter()
        .copied()
        .reduce(
            |best, m| {
                if m.peak > best.peak || (m.peak == best.peak && m.centroid < best.centroid) {
                    m
                } else {
                    best
                }
            },
        )
        .map(|m| m.centroid)
        .expect("validated functions have at least one mode");
    let mut values: Vec<f64> = modes.iter().map(|m| m.centroid).collect();
    values.sort_by(f64::total_cmp);
    Defuzzified { values, primary }
}

impl<'de> Deserialize<'de> for MembershipFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pts: Vec<(f64, f64)> = Vec::deserialize(d)?;
        MembershipFunction::new(pts).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_triangle_centroid() {
        let mf = MembershipFunction::triangle(8.0, 10.0, 12.0).unwrap();
        let d = defuzzify(&mf);
        assert_eq!(d.values, vec![10.0]);
        assert_eq!(d.primary, 10.0);
    }

    #[test]
    fn right_triangle_centroid_is_a_third_of_base() {
        // oracle: midpoint-rule quadrature of x·μ(x) / μ(x)
        let mf = MembershipFunction::triangle(0.0, 0.0, 6.0).unwrap();
        let n = 200_000;
        let h = 6.0 / n as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            num += x * mf.membership(x) * h;
            den += mf.membership(x) * h;
        }
        let quad = num / den;
        assert!((quad - 2.0).abs() < 1e-6);
        let d = defuzzify(&mf);
        assert!((d.primary - 2.0).abs() < 1e-12);
        assert!((d.primary - quad).abs() < 1e-6);
    }

    #[test]
    fn bimodal_returns_both_centroids() {
        let mf = MembershipFunction::new(vec![(1.0, 0.0), (2.0, 1.0), (3.0, 0.0), (7.0, 0.0), (8.0, 1.0), (9.0, 0.0)])
            .unwrap();
        let d = defuzzify(&mf);
        assert_eq!(d.values, vec![2.0, 8.0]);
        assert_eq!(d.primary, 2.0);
    }

    #[test]
    fn primary_prefers_taller_mode() {
        let mf = MembershipFunction::new(vec![(1.0, 0.0), (2.0, 0.5), (3.0, 0.0), (7.0, 0.0), (8.0, 1.0), (9.0, 0.0)])
            .unwrap();
        assert_eq!(defuzzify(&mf).primary, 8.0);
    }

    #[test]
    fn touching_modes_split_at_interior_zero() {
        let mf = MembershipFunction::new(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 1.0), (4.0, 0.0)]).unwrap();
        assert_eq!(defuzzify(&mf).values, vec![1.0, 3.0]);
    }

    #[test]
    fn validation() {
        assert!(MembershipFunction::new(vec![]).is_err());
        assert!(MembershipFunction::new(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(MembershipFunction::new(vec![(1.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(MembershipFunction::new(vec![(0.0, 1.2)]).is_err());
        assert!(MembershipFunction::triangle(3.0, 2.0, 1.0).is_err());
        let p = MembershipFunction::triangle(5.0, 5.0, 5.0).unwrap();
        assert_eq!(p.points(), &[(5.0, 1.0)]);
        assert_eq!(defuzzify(&p).primary, 5.0);
    }

    #[test]
    fn cuts_and_membership() {
        let mf = MembershipFunction::triangle(10.0, 20.0, 30.0).unwrap();
        assert_eq!(mf.alpha_cut(0.0), Some((10.0, 30.0)));
        assert_eq!(mf.alpha_cut(1.0), Some((20.0, 20.0)));
        assert_eq!(mf.alpha_cut(0.5), Some((15.0, 25.0)));
        assert_eq!(mf.membership(15.0), 0.5);
        assert_eq!(mf.membership(31.0), 0.0);
        let low = MembershipFunction::new(vec![(0.0, 0.0), (1.0, 0.4), (2.0, 0.0)]).unwrap();
        assert_eq!(low.alpha_cut(0.5), None);
    }
}
