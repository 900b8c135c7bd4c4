//! Sub-linear expectations realized as the upper envelope of finitely many
//! discrete probability models.
//!
//! A [`ScenarioSet`] holds the representing family. `E[f] = max_m E_m[f]`,
//! the conjugate `ε[f] = -E[-f] = min_m E_m[f]`, and the capacity pair
//! `V(A) = E[I_A]`, `v(A) = 1 - V(Aᶜ)` are all evaluated exactly on atoms.
//!
//! Independence follows the sequential definition `E[φ(X,Y)] =
//! E[E[φ(x,Y)]|_{x=X}]`: in [`independent_product`] the member used for `Y`
//! may be chosen separately for every realized atom of `X`.
//!
//! JSON layout of a one-dimensional set:
//!
//! ```text
//! {"members": [{"atoms": [[value, weight], ...]}, ...]}
//! ```
//!
//! Joint (two-dimensional) sets use `[[x, y], weight]` atoms.

use std::fmt::Debug;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// Tolerance on the total mass of a distribution.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Slack used by the derived inequality checks (ND, Hölder).
pub const INEQUALITY_SLACK: f64 = 1e-10;
/// Upper limit on the number of members an independence product may enumerate.
pub const MAX_PRODUCT_MEMBERS: usize = 1 << 20;

/// Outcome space of a scenario set: scalars or pairs.
pub trait Point: Copy + Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned {
    fn is_finite(&self) -> bool;
}

impl Point for f64 {
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl Point for [f64; 2] {
    fn is_finite(&self) -> bool {
        self[0].is_finite() && self[1].is_finite()
    }
}

/// Finitely supported probability distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution<P>", bound = "P: Point")]
pub struct DiscreteDistribution<P: Point = f64> {
    atoms: Vec<(P, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound = "P: Point")]
struct RawDistribution<P: Point> {
    atoms: Vec<(P, f64)>,
}

impl<P: Point> TryFrom<RawDistribution<P>> for DiscreteDistribution<P> {
    type Error = Error;
    fn try_from(raw: RawDistribution<P>) -> Result<Self> {
        Self::new(raw.atoms)
    }
}

impl<P: Point> DiscreteDistribution<P> {
    pub fn new(atoms: Vec<(P, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return config("distribution needs at least one atom");
        }
        let mut total = 0.0;
        for (v, w) in &atoms {
            if !v.is_finite() {
                return config(format!("non-finite atom value {v:?}"));
            }
            if !(0.0..=1.0).contains(w) {
                return config(format!("atom weight {w} outside [0, 1]"));
            }
            total += w;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return config(format!("weights sum to {total}, expected 1"));
        }
        Ok(Self { atoms })
    }

    pub fn point_mass(value: P) -> Self {
        Self {
            atoms: vec![(value, 1.0)],
        }
    }

    /// Equal weights on the given values.
    pub fn uniform(values: &[P]) -> Result<Self> {
        if values.is_empty() {
            return config("distribution needs at least one atom");
        }
        let w = 1.0 / values.len() as f64;
        let mut atoms: Vec<_> = values.iter().map(|&v| (v, w)).collect();
        // put the rounding residue on the last atom
        let residue = 1.0 - w * values.len() as f64;
        atoms.last_mut().unwrap().1 += residue;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(P, f64)] {
        &self.atoms
    }

    /// Linear expectation of `f`.
    pub fn expect<F: Fn(&P) -> f64>(&self, f: F) -> f64 {
        self.atoms.iter().map(|(v, w)| w * f(v)).sum()
    }

    pub fn probability<A: Fn(&P) -> bool>(&self, event: A) -> f64 {
        self.atoms
            .iter()
            .filter(|(v, _)| event(v))
            .map(|(_, w)| w)
            .sum()
    }

    /// Drops atoms of zero weight.
    pub fn compact(&self) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .copied()
                .filter(|(_, w)| *w > 0.0)
                .collect(),
        }
    }
}

/// Nonempty family of distributions whose upper envelope is the sub-linear expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSet<P>", bound = "P: Point")]
pub struct ScenarioSet<P: Point = f64> {
    members: Vec<DiscreteDistribution<P>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, bound = "P: Point")]
struct RawSet<P: Point> {
    members: Vec<DiscreteDistribution<P>>,
}

impl<P: Point> TryFrom<RawSet<P>> for ScenarioSet<P> {
    type Error = Error;
    fn try_from(raw: RawSet<P>) -> Result<Self> {
        Self::new(raw.members)
    }
}

/// Which capacity of the pair `(V, v)` an operation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapacityKind {
    Upper,
    Lower,
}

impl<P: Point> ScenarioSet<P> {
    pub fn new(members: Vec<DiscreteDistribution<P>>) -> Result<Self> {
        if members.is_empty() {
            return config("scenario set must have at least one member");
        }
        Ok(Self { members })
    }

    pub fn singleton(member: DiscreteDistribution<P>) -> Self {
        Self {
            members: vec![member],
        }
    }

    pub fn members(&self) -> &[DiscreteDistribution<P>] {
        &self.members
    }

    fn member_means<F: Fn(&P) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.members.len());
        for m in &self.members {
            let mut acc = 0.0;
            for (v, w) in &m.atoms {
                let y = f(v);
                if !y.is_finite() {
                    return Err(Error::Numeric(format!(
                        "test function is {y} at atom {v:?}"
                    )));
                }
                acc += w * y;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `E[f]`: the largest member mean.
    pub fn sublinear_expect<F: Fn(&P) -> f64>(&self, f: F) -> Result<f64> {
        Ok(self
            .member_means(f)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `ε[f] = -E[-f]`: the smallest member mean.
    pub fn conjugate_expect<F: Fn(&P) -> f64>(&self, f: F) -> Result<f64> {
        Ok(self
            .member_means(f)?
            .into_iter()
            .fold(f64::INFINITY, f64::min))
    }

    /// Index of a member attaining `E[f]`; ties resolve to the lowest index.
    pub fn argmax_member<F: Fn(&P) -> f64>(&self, f: F) -> Result<usize> {
        let means = self.member_means(f)?;
        let mut best = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// `V(A) = max_m P_m(A)`.
    pub fn upper_capacity<A: Fn(&P) -> bool>(&self, event: A) -> f64 {
        self.members
            .iter()
            .map(|m| m.probability(&event))
            .fold(0.0, f64::max)
            .min(1.0)
    }

    /// `v(A) = 1 - V(Aᶜ)`.
    pub fn lower_capacity<A: Fn(&P) -> bool>(&self, event: A) -> f64 {
        (1.0 - self.upper_capacity(|p| !event(p))).max(0.0)
    }

    pub fn capacities(&self) -> CapacityPair<'_, P> {
        CapacityPair { set: self }
    }

    pub fn capacity<A: Fn(&P) -> bool>(&self, kind: CapacityKind, event: A) -> f64 {
        match kind {
            CapacityKind::Upper => self.upper_capacity(event),
            CapacityKind::Lower => self.lower_capacity(event),
        }
    }

    /// Distinct images of `f` over the union of all atoms, ascending.
    fn levels<F: Fn(&P) -> f64>(&self, f: &F) -> Result<Vec<f64>> {
        let mut levels = Vec::new();
        for m in &self.members {
            for (v, _) in &m.atoms {
                let y = f(v);
                if !y.is_finite() {
                    return Err(Error::Numeric(format!(
                        "test function is {y} at atom {v:?}"
                    )));
                }
                levels.push(y);
            }
        }
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Ok(levels)
    }

    /// Choquet integral `∫₀^∞ V(f ≥ t) dt + ∫_{-∞}^0 [V(f ≥ t) - 1] dt` with
    /// respect to the chosen capacity.
    ///
    /// `t ↦ V(f ≥ t)` is a step function with jumps at the images of the atoms,
    /// so with ascending levels `l_1 < … < l_k` the integral is exactly
    /// `l_1 + Σ_{j≥2} (l_j - l_{j-1}) V(f ≥ l_j)`.
    pub fn choquet_integral<F: Fn(&P) -> f64>(&self, kind: CapacityKind, f: F) -> Result<f64> {
        let levels = self.levels(&f)?;
        let mut total = levels[0];
        for pair in levels.windows(2) {
            let cap = self.capacity(kind, |p| f(p) >= pair[1]);
            total += (pair[1] - pair[0]) * cap;
        }
        Ok(total)
    }

    /// `∫_lo^hi V(f > x) dx` for `lo ≤ hi`, evaluated exactly.
    pub fn capacity_tail_integral<F: Fn(&P) -> f64>(&self, f: F, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) {
            return Err(Error::Domain(format!(
                "empty integration range [{lo}, {hi}]"
            )));
        }
        let mut cuts = vec![lo];
        cuts.extend(self.levels(&f)?.into_iter().filter(|&l| l > lo && l < hi));
        cuts.push(hi);
        let mut total = 0.0;
        for pair in cuts.windows(2) {
            // V(f > x) is constant on (pair[0], pair[1]); probe the left end.
            let cap = self.upper_capacity(|p| f(p) > pair[0]);
            total += (pair[1] - pair[0]) * cap;
        }
        Ok(total)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("scenario sets always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Borrowed view of the capacity pair `(V, v)` of a scenario set.
#[derive(Debug, Clone, Copy)]
pub struct CapacityPair<'a, P: Point> {
    set: &'a ScenarioSet<P>,
}

impl<P: Point> CapacityPair<'_, P> {
    pub fn upper<A: Fn(&P) -> bool>(&self, event: A) -> f64 {
        self.set.upper_capacity(event)
    }

    pub fn lower<A: Fn(&P) -> bool>(&self, event: A) -> f64 {
        self.set.lower_capacity(event)
    }
}

/// Joint set of `(X, Y)` in which `Y` is independent to `X`.
///
/// Each joint member pairs one member `P` of `x` with a selection, per atom of
/// `P`, of a member of `y`. The number of joint members is
/// `Σ_P |y|^{#atoms(P)}`; zero-weight atoms are dropped first.
pub fn independent_product(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
) -> Result<ScenarioSet<[f64; 2]>> {
    let ny = y.members.len();
    let mut count = 0usize;
    for p in &x.members {
        let k = p.compact().atoms.len() as u32;
        let branch = ny.checked_pow(k).unwrap_or(usize::MAX);
        count = count.saturating_add(branch);
    }
    if count > MAX_PRODUCT_MEMBERS {
        return config(format!(
            "independence product would enumerate {count} members (limit {MAX_PRODUCT_MEMBERS})"
        ));
    }
    let ys: Vec<_> = y
        .members
        .iter()
        .map(DiscreteDistribution::compact)
        .collect();
    let mut members = Vec::with_capacity(count);
    for p in &x.members {
        let p = p.compact();
        let k = p.atoms.len();
        // mixed-radix counter over selections atom -> y member
        let mut sel = vec![0usize; k];
        loop {
            let mut atoms = Vec::new();
            for (i, &(xv, xw)) in p.atoms.iter().enumerate() {
                for &(yv, yw) in &ys[sel[i]].atoms {
                    atoms.push(([xv, yv], xw * yw));
                }
            }
            members.push(DiscreteDistribution { atoms });
            let mut i = 0;
            while i < k {
                sel[i] += 1;
                if sel[i] < ny {
                    break;
                }
                sel[i] = 0;
                i += 1;
            }
            if i == k {
                break;
            }
        }
    }
    ScenarioSet::new(members)
}

/// `E[ E[φ(x, Y)] |_{x = X} ]` computed directly from the two marginal sets.
pub fn nested_expect<F: Fn(f64, f64) -> f64>(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
    phi: F,
) -> Result<f64> {
    x.sublinear_expect(|&xv| y.sublinear_expect(|&yv| phi(xv, yv)).unwrap_or(f64::NAN))
}

/// Conjugate counterpart of [`nested_expect`]: `ε[ ε[φ(x, Y)] |_{x = X} ]`.
pub fn nested_conjugate_expect<F: Fn(f64, f64) -> f64>(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
    phi: F,
) -> Result<f64> {
    x.conjugate_expect(|&xv| y.conjugate_expect(|&yv| phi(xv, yv)).unwrap_or(f64::NAN))
}

/// `E[φ(X,Y)]` with `Y` independent to `X` minus the same with `X`
/// independent to `Y`. Nonzero values witness that independence is not symmetric.
pub fn independence_asymmetry<F: Fn(f64, f64) -> f64>(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
    phi: F,
) -> Result<f64> {
    let y_after_x = nested_expect(x, y, &phi)?;
    let x_after_y = nested_expect(y, x, |yv, xv| phi(xv, yv))?;
    Ok(y_after_x - x_after_y)
}

/// A test function of two variables used in searches.
pub struct BivariateProbe {
    pub name: &'static str,
    pub phi: fn(f64, f64) -> f64,
}

/// Probes tried by [`find_asymmetry_witness`].
pub const ASYMMETRY_PROBES: &[BivariateProbe] = &[
    BivariateProbe {
        name: "x*y",
        phi: |x, y| x * y,
    },
    BivariateProbe {
        name: "x*y^2",
        phi: |x, y| x * y * y,
    },
    BivariateProbe {
        name: "x^2*y",
        phi: |x, y| x * x * y,
    },
    BivariateProbe {
        name: "(x+y)^+",
        phi: |x, y| (x + y).max(0.0),
    },
    BivariateProbe {
        name: "x^+*y^2",
        phi: |x, y| x.max(0.0) * y * y,
    },
];

/// Witness that `Y` independent to `X` does not imply the converse.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymmetryWitness {
    pub probe: &'static str,
    pub y_after_x: f64,
    pub x_after_y: f64,
}

/// Searches [`ASYMMETRY_PROBES`] for a function whose two nestings disagree by more
/// than `tolerance`.
pub fn find_asymmetry_witness(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
    tolerance: f64,
) -> Result<Option<AsymmetryWitness>> {
    for probe in ASYMMETRY_PROBES {
        let a = nested_expect(x, y, probe.phi)?;
        let b = nested_expect(y, x, |yv, xv| (probe.phi)(xv, yv))?;
        if (a - b).abs() > tolerance {
            return Ok(Some(AsymmetryWitness {
                probe: probe.name,
                y_after_x: a,
                x_after_y: b,
            }));
        }
    }
    Ok(None)
}

/// Capacity-level independence probe on the expectation-level product:
/// `V(X ∈ A, Y ∈ B) - V(X ∈ A)·V(Y ∈ B)`. Reported only; no sign is asserted.
pub fn capacity_independence_gap<A, B>(
    x: &ScenarioSet<f64>,
    y: &ScenarioSet<f64>,
    a: A,
    b: B,
) -> Result<f64>
where
    A: Fn(f64) -> bool,
    B: Fn(f64) -> bool,
{
    let joint = independent_product(x, y)?;
    let both = joint.upper_capacity(|p| a(p[0]) && b(p[1]));
    Ok(both - x.upper_capacity(|&v| a(v)) * y.upper_capacity(|&v| b(v)))
}

/// Monotone direction of a test pair in the ND check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Monotone {
    Nondecreasing,
    Nonincreasing,
}

/// Worst violation found by [`nd_product_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdViolation {
    pub direction: Monotone,
    pub x_threshold: f64,
    pub y_threshold: f64,
    /// `E[φ₁(X)φ₂(Y)] - E[φ₁(X)]·E[φ₂(Y)]`
    pub gap: f64,
}

/// Result of checking that `Y` (second coordinate) is negatively dependent to
/// `X` (first coordinate).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdReport {
    pub holds: bool,
    pub pairs_checked: usize,
    pub worst: Option<NdViolation>,
}

/// Distinct values plus one point beyond them (`below` selects the side).
fn thresholds(values: impl Iterator<Item = f64>, below: bool) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let extra = if below {
        v[0] - 1.0
    } else {
        v[v.len() - 1] + 1.0
    };
    v.push(extra);
    v
}

/// Checks `E[φ₁(X)φ₂(Y)] ≤ E[φ₁(X)]·E[φ₂(Y)] + 1e-10` over a registry of
/// nonnegative monotone pairs: hinge functions `(x - c)⁺` (both nondecreasing)
/// and `(c - x)⁺` (both nonincreasing) with `c` ranging over the atom values
/// of each coordinate and one point beyond them.
pub fn nd_product_check(joint: &ScenarioSet<[f64; 2]>) -> Result<NdReport> {
    let all = || {
        joint
            .members
            .iter()
            .flat_map(|m| m.atoms.iter().map(|(p, _)| *p))
    };
    let mut worst: Option<NdViolation> = None;
    let mut checked = 0;
    for direction in [Monotone::Nondecreasing, Monotone::Nonincreasing] {
        let below = direction == Monotone::Nondecreasing;
        let xs = thresholds(all().map(|p| p[0]), below);
        let ys = thresholds(all().map(|p| p[1]), below);
        let hinge = |v: f64, c: f64| match direction {
            Monotone::Nondecreasing => (v - c).max(0.0),
            Monotone::Nonincreasing => (c - v).max(0.0),
        };
        for &cx in &xs {
            for &cy in &ys {
                let lhs = joint.sublinear_expect(|p| hinge(p[0], cx) * hinge(p[1], cy))?;
                let e1 = joint.sublinear_expect(|p| hinge(p[0], cx))?;
                let e2 = joint.sublinear_expect(|p| hinge(p[1], cy))?;
                let gap = lhs - e1 * e2;
                checked += 1;
                if worst.as_ref().map_or(true, |w| gap > w.gap) {
                    worst = Some(NdViolation {
                        direction,
                        x_threshold: cx,
                        y_threshold: cy,
                        gap,
                    });
                }
            }
        }
    }
    let holds = worst.as_ref().map_or(true, |w| w.gap <= INEQUALITY_SLACK);
    Ok(NdReport {
        holds,
        pairs_checked: checked,
        worst,
    })
}

/// Hölder's inequality `E[|fg|] ≤ E[|f|^p]^{1/p} E[|g|^q]^{1/q}` with 1e-10 slack.
pub fn holder_check<P, F, G>(set: &ScenarioSet<P>, f: F, g: G, p: f64, q: f64) -> Result<bool>
where
    P: Point,
    F: Fn(&P) -> f64,
    G: Fn(&P) -> f64,
{
    if !(p > 1.0 && q > 1.0) || (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "Hölder exponents p={p}, q={q} are not conjugate"
        )));
    }
    let lhs = set.sublinear_expect(|x| (f(x) * g(x)).abs())?;
    let a = set.sublinear_expect(|x| f(x).abs().powf(p))?.powf(1.0 / p);
    let b = set.sublinear_expect(|x| g(x).abs().powf(q))?.powf(1.0 / q);
    Ok(lhs <= a * b + INEQUALITY_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point(a: f64) -> DiscreteDistribution {
        DiscreteDistribution::new(vec![(-a, 0.5), (a, 0.5)]).unwrap()
    }

    fn pm12() -> ScenarioSet {
        ScenarioSet::new(vec![two_point(1.0), two_point(2.0)]).unwrap()
    }

    #[test]
    fn point_mass_is_constant_preserving() {
        let s = ScenarioSet::singleton(DiscreteDistribution::point_mass(3.0));
        assert_eq!(s.sublinear_expect(|&x| x).unwrap(), 3.0);
    }

    #[test]
    fn sup_and_inf_of_member_means() {
        let s = pm12();
        assert_eq!(s.sublinear_expect(|&x| x * x).unwrap(), 4.0);
        assert_eq!(s.conjugate_expect(|&x| x * x).unwrap(), 1.0);
        assert_eq!(s.sublinear_expect(|_| 7.5).unwrap(), 7.5);
        assert_eq!(s.conjugate_expect(|_| 7.5).unwrap(), 7.5);
        assert_eq!(s.argmax_member(|&x| x * x).unwrap(), 1);
        // both members attain E[x] = 0; lowest index wins
        assert_eq!(s.argmax_member(|&x| x).unwrap(), 0);
    }

    #[test]
    fn capacities_of_tail_event() {
        let s = pm12();
        assert_eq!(s.upper_capacity(|_| true), 1.0);
        assert_eq!(s.upper_capacity(|_| false), 0.0);
        assert_eq!(s.upper_capacity(|x| x.abs() >= 2.0), 1.0);
        assert_eq!(s.lower_capacity(|x| x.abs() >= 2.0), 0.0);
        let pair = s.capacities();
        assert_eq!(pair.upper(|x| *x > 0.0), 0.5);
        assert_eq!(pair.lower(|x| *x > 0.0), 0.5);
    }

    #[test]
    fn choquet_layer_cake() {
        let s = pm12();
        assert_eq!(
            s.choquet_integral(CapacityKind::Upper, |x| x.abs())
                .unwrap(),
            2.0
        );
        assert_eq!(
            s.choquet_integral(CapacityKind::Lower, |x| x.abs())
                .unwrap(),
            1.0
        );
        let single = ScenarioSet::singleton(
            DiscreteDistribution::new(vec![(0.5, 0.25), (1.5, 0.25), (4.0, 0.5)]).unwrap(),
        );
        let lin = single.sublinear_expect(|&x| x).unwrap();
        let ch = single
            .choquet_integral(CapacityKind::Upper, |&x| x)
            .unwrap();
        assert!((lin - ch).abs() < 1e-14);
        // negative values go through the second integral
        let neg = ScenarioSet::singleton(
            DiscreteDistribution::new(vec![(-3.0, 0.5), (-1.0, 0.5)]).unwrap(),
        );
        assert!((neg.choquet_integral(CapacityKind::Upper, |&x| x).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn tail_integral_matches_hand_computation() {
        let s = pm12();
        // V(|X| > x) = 1 on [0,2)
        assert_eq!(
            s.capacity_tail_integral(|x| x.abs(), 0.0, 3.0).unwrap(),
            2.0
        );
        assert_eq!(
            s.capacity_tail_integral(|x| x.abs(), 0.5, 1.5).unwrap(),
            1.0
        );
        assert!(s.capacity_tail_integral(|x| x.abs(), 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(DiscreteDistribution::<f64>::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.0, 0.7)]).is_err());
        assert!(DiscreteDistribution::new(vec![(f64::NAN, 1.0)]).is_err());
        assert!(DiscreteDistribution::new(vec![(1.0, 1.5), (0.0, -0.5)]).is_err());
        assert!(ScenarioSet::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn non_finite_image_is_numeric_error() {
        let s = pm12();
        let err = s.sublinear_expect(|&x| 1.0 / (x - 1.0)).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let s = pm12();
        let text = s.to_json();
        assert_eq!(
            text,
            r#"{"members":[{"atoms":[[-1.0,0.5],[1.0,0.5]]},{"atoms":[[-2.0,0.5],[2.0,0.5]]}]}"#
        );
        assert_eq!(ScenarioSet::from_json(&text).unwrap(), s);
        assert!(ScenarioSet::<f64>::from_json(r#"{"members":[]}"#).is_err());
        assert!(ScenarioSet::<f64>::from_json(r#"{"members":[{"atoms":[[1,0.4]]}]}"#).is_err());
        assert!(ScenarioSet::<f64>::from_json(r#"{"members":[{"atoms":[[1,1]]}],"x":1}"#).is_err());
        let joint: ScenarioSet<[f64; 2]> =
            ScenarioSet::from_json(r#"{"members":[{"atoms":[[[1,2],1]]}]}"#).unwrap();
        assert_eq!(joint.members()[0].atoms()[0].0, [1.0, 2.0]);
    }

    #[test]
    fn product_of_singletons_is_classical() {
        let x = ScenarioSet::singleton(two_point(1.0));
        let y = ScenarioSet::singleton(
            DiscreteDistribution::new(vec![(0.0, 0.25), (3.0, 0.75)]).unwrap(),
        );
        let j = independent_product(&x, &y).unwrap();
        assert_eq!(j.members().len(), 1);
        assert_eq!(j.members()[0].atoms().len(), 4);
        let e = j.sublinear_expect(|p| p[0] + p[1]).unwrap();
        assert!((e - 2.25).abs() < 1e-15);
    }

    #[test]
    fn product_member_count() {
        let x = pm12();
        let y = ScenarioSet::new(vec![two_point(1.0), two_point(3.0), two_point(5.0)]).unwrap();
        // two members with two atoms each: 2 * 3^2
        assert_eq!(independent_product(&x, &y).unwrap().members().len(), 18);
    }

    #[test]
    fn asymmetry_witness_exists_under_variance_uncertainty() {
        let x = pm12();
        let y = pm12();
        let w = find_asymmetry_witness(&x, &y, 1e-9)
            .unwrap()
            .expect("witness");
        assert_ne!(w.y_after_x, w.x_after_y);
        // x*y^2: E over Y first gives x^+ σ̄² - x^- σ̲², then (4-1)·E[X^±] = 3
        let a = independence_asymmetry(&x, &y, |x, y| x * y * y).unwrap();
        assert!((a - 3.0).abs() < 1e-12);
        // a single classical member on both sides is symmetric
        let c = ScenarioSet::singleton(two_point(1.0));
        assert!(find_asymmetry_witness(&c, &c, 1e-12).unwrap().is_none());
    }

    #[test]
    fn nd_check_cases() {
        let x = pm12();
        let y = ScenarioSet::new(vec![
            DiscreteDistribution::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap(),
            DiscreteDistribution::new(vec![(0.0, 0.25), (2.0, 0.75)]).unwrap(),
        ])
        .unwrap();
        assert!(
            nd_product_check(&independent_product(&x, &y).unwrap())
                .unwrap()
                .holds
        );

        let base = [(-1.0, 0.2), (0.0, 0.5), (2.0, 0.3)];
        let anti = ScenarioSet::singleton(
            DiscreteDistribution::new(base.iter().map(|&(v, w)| ([v, -v], w)).collect()).unwrap(),
        );
        assert!(nd_product_check(&anti).unwrap().holds);

        let como = ScenarioSet::singleton(
            DiscreteDistribution::new(base.iter().map(|&(v, w)| ([v, v], w)).collect()).unwrap(),
        );
        let r = nd_product_check(&como).unwrap();
        assert!(!r.holds);
        assert!(r.worst.unwrap().gap > 0.0);
    }

    #[test]
    fn holder_cases() {
        let s = pm12();
        assert!(holder_check(&s, |&x| x, |&x| x, 2.0, 2.0).unwrap());
        assert!(holder_check(&s, |&x| x, |&x| x * x + 1.0, 3.0, 1.5).unwrap());
        assert!(holder_check(&s, |&x| x, |&x| x, 2.0, 3.0).is_err());
        // X = Y, p = q = 2 on a singleton is the equality case
        let single = ScenarioSet::singleton(two_point(2.0));
        let lhs = single.sublinear_expect(|&x| x * x).unwrap();
        let rhs = single.sublinear_expect(|&x| x * x).unwrap();
        assert_eq!(lhs, rhs);
        assert!(holder_check(&single, |&x| x, |&x| x, 2.0, 2.0).unwrap());
    }

    #[test]
    fn capacity_probe_runs() {
        let x = pm12();
        let gap = capacity_independence_gap(&x, &x, |v| v > 0.0, |v| v > 0.0).unwrap();
        assert!(gap.is_finite());
    }
}
