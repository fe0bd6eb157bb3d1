//! Canonical nonsingular multiplicative flows and special-flow
//! representations.
//!
//! Three normal forms are implemented, each on a concrete product space
//! with finitely many fibers:
//!
//! * identity: `psi_c(x) = x` on a finite label set `X`,
//! * dissipative: `psi_c(y, u) = (y, u + ln c)` on `Y x R`,
//! * cyclic: `psi_c(z, v) = (z, {v + ln c}_{q(z)})` on `Z x [0, q(.))`,
//!   the seesaw flow with per-fiber period `q(z) > 0`.
//!
//! Everything is driven by the floor/fractional decomposition
//! `[v]_a = max{n : n a <= v}`, `{v}_a = v - a [v]_a`. All operations
//! also accept time in log scale (`s = ln c`), which is what the law
//! verifiers use internally so that `ln(c1 c2)` never has to be
//! recomputed from a product.

use crate::defaults;
use crate::error::{Error, Result};
use crate::exec::{self, RunMode};
use crate::report::{Outcome, VerificationReport};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// A point of a flow space: a fiber index plus a real coordinate.
/// Identity-space points carry coordinate 0.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub fiber: usize,
    pub coord: f64,
}

impl Point {
    pub fn new(fiber: usize, coord: f64) -> Self {
        Point { fiber, coord }
    }

    /// Bare-label point for the identity flow.
    pub fn label_only(fiber: usize) -> Self {
        Point { fiber, coord: 0.0 }
    }
}

/// A fiber of the identity or dissipative space: an opaque label plus a
/// measure weight (the discrete part of `mu`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fiber {
    pub label: String,
    pub weight: f64,
}

/// A fiber of the cyclic space; `period` is `q(z)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclicFiber {
    pub label: String,
    pub weight: f64,
    pub period: f64,
}

/// One of the three canonical flow normal forms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum FlowSpace {
    Identity { fibers: Vec<Fiber> },
    Dissipative { fibers: Vec<Fiber> },
    Cyclic { fibers: Vec<CyclicFiber> },
}

/// `[v]_a` and `{v}_a`: the unique integer `n` and remainder
/// `rem in [0, a)` with `v = n a + rem`.
///
/// Computed as `floor(v / a)` with a one-step correction so that the
/// invariant `0 <= rem < a` holds even when `v / a` rounds to an
/// integer; that invariant is load-bearing for the cyclic flow.
pub fn floor_mod(v: f64, a: f64) -> Result<(i64, f64)> {
    if !v.is_finite() || !a.is_finite() || a <= 0.0 {
        return Err(Error::invalid(format!(
            "floor_mod requires finite v and a > 0, got v={v}, a={a}"
        )));
    }
    let q = (v / a).floor();
    if q.abs() >= 9.0e15 {
        return Err(Error::invalid(format!(
            "floor_mod ratio |v/a| = {} exceeds exact integer range",
            q.abs()
        )));
    }
    let mut n = q as i64;
    let mut rem = v - q * a;
    if rem < 0.0 {
        n -= 1;
        rem += a;
    } else if rem >= a {
        n += 1;
        rem -= a;
    }
    debug_assert!((0.0..a).contains(&rem), "rem={rem} a={a}");
    Ok((n, rem + 0.0)) // normalize -0.0
}

impl FlowSpace {
    pub fn identity(fibers: Vec<Fiber>) -> Result<Self> {
        validate_weights(fibers.iter().map(|f| f.weight))?;
        Ok(FlowSpace::Identity { fibers })
    }

    pub fn dissipative(fibers: Vec<Fiber>) -> Result<Self> {
        validate_weights(fibers.iter().map(|f| f.weight))?;
        Ok(FlowSpace::Dissipative { fibers })
    }

    pub fn cyclic(fibers: Vec<CyclicFiber>) -> Result<Self> {
        validate_weights(fibers.iter().map(|f| f.weight))?;
        for f in &fibers {
            if !(f.period.is_finite() && f.period > 0.0) {
                return Err(Error::invalid(format!(
                    "cyclic fiber {:?} needs period q > 0, got {}",
                    f.label, f.period
                )));
            }
        }
        Ok(FlowSpace::Cyclic { fibers })
    }

    /// Convenience: a single unweighted identity fiber (the usual carrier
    /// for homogeneous kernels).
    pub fn single_identity() -> Self {
        FlowSpace::Identity {
            fibers: vec![Fiber {
                label: "x0".into(),
                weight: 1.0,
            }],
        }
    }

    pub fn fiber_count(&self) -> usize {
        match self {
            FlowSpace::Identity { fibers } | FlowSpace::Dissipative { fibers } => fibers.len(),
            FlowSpace::Cyclic { fibers } => fibers.len(),
        }
    }

    pub fn fiber_label(&self, i: usize) -> &str {
        match self {
            FlowSpace::Identity { fibers } | FlowSpace::Dissipative { fibers } => &fibers[i].label,
            FlowSpace::Cyclic { fibers } => &fibers[i].label,
        }
    }

    pub fn fiber_weight(&self, i: usize) -> f64 {
        match self {
            FlowSpace::Identity { fibers } | FlowSpace::Dissipative { fibers } => fibers[i].weight,
            FlowSpace::Cyclic { fibers } => fibers[i].weight,
        }
    }

    /// `q(z)` for cyclic spaces, `None` otherwise.
    pub fn period(&self, i: usize) -> Option<f64> {
        match self {
            FlowSpace::Cyclic { fibers } => Some(fibers[i].period),
            _ => None,
        }
    }

    pub fn is_cyclic(&self) -> bool {
        matches!(self, FlowSpace::Cyclic { .. })
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.fiber >= self.fiber_count() {
            return Err(Error::invalid(format!(
                "fiber index {} out of range (space has {})",
                p.fiber,
                self.fiber_count()
            )));
        }
        if !p.coord.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate {}", p.coord)));
        }
        match self {
            FlowSpace::Identity { .. } => {
                if p.coord != 0.0 {
                    return Err(Error::invalid(
                        "identity points are bare labels (coordinate must be 0)",
                    ));
                }
            }
            FlowSpace::Dissipative { .. } => {}
            FlowSpace::Cyclic { fibers } => {
                let q = fibers[p.fiber].period;
                if !(0.0..q).contains(&p.coord) {
                    return Err(Error::invalid(format!(
                        "cyclic coordinate {} outside [0, {q})",
                        p.coord
                    )));
                }
            }
        }
        Ok(())
    }

    /// `psi_c(p)` with `s = ln c`.
    pub fn apply_log(&self, s: f64, p: &Point) -> Result<Point> {
        if !s.is_finite() {
            return Err(Error::invalid(format!("non-finite log scale {s}")));
        }
        self.validate_point(p)?;
        Ok(match self {
            FlowSpace::Identity { .. } => *p,
            FlowSpace::Dissipative { .. } => Point::new(p.fiber, p.coord + s),
            FlowSpace::Cyclic { fibers } => {
                let q = fibers[p.fiber].period;
                let (_, rem) = floor_mod(p.coord + s, q)?;
                Point::new(p.fiber, rem)
            }
        })
    }

    /// `psi_c(p)` for `c > 0`.
    pub fn apply(&self, c: f64, p: &Point) -> Result<Point> {
        self.apply_log(log_scale(c)?, p)
    }

    /// Winding index `[v + ln c]_{q(z)}` of the cyclic seesaw with
    /// `s = ln c`; unsupported on the other variants.
    pub fn winding_log(&self, s: f64, p: &Point) -> Result<i64> {
        match self {
            FlowSpace::Cyclic { fibers } => {
                self.validate_point(p)?;
                let q = fibers[p.fiber].period;
                Ok(floor_mod(p.coord + s, q)?.0)
            }
            _ => Err(Error::Unsupported(
                "winding index is defined for cyclic flows only".into(),
            )),
        }
    }

    pub fn winding(&self, c: f64, p: &Point) -> Result<i64> {
        self.winding_log(log_scale(c)?, p)
    }
}

pub(crate) fn log_scale(c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::invalid(format!("scale c must be positive, got {c}")));
    }
    Ok(c.ln())
}

fn validate_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut n = 0usize;
    for w in weights {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid(format!("fiber weight must be > 0, got {w}")));
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::invalid("a flow space needs at least one fiber"));
    }
    Ok(())
}

/// Special-flow representation: base map `V`, roof `r > 0`, and the
/// partial sums `r_n(y)` with `r_0 = 0` and
/// `r_{n+m}(y) = r_n(y) + r_m(V^n y)`.
///
/// For negative `n` the additivity relation forces
/// `r_n(y) = -sum_{k=n}^{-1} r(V^k y)`; with that convention
/// `r_n(z) = n q(z)` on cyclic flows for every integer `n`.
///
/// No uniform lower bound on the roof is required, so the winding walk
/// is capped rather than bounded a priori.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpecialRep {
    labels: Vec<String>,
    v_fwd: Vec<usize>,
    v_inv: Vec<usize>,
    roof: Vec<f64>,
}

const WINDING_CAP: i64 = 1_000_000;

impl SpecialRep {
    pub fn new(labels: Vec<String>, v_fwd: Vec<usize>, roof: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || v_fwd.len() != n || roof.len() != n {
            return Err(Error::invalid(
                "special representation needs matching nonempty labels, map and roof",
            ));
        }
        for r in &roof {
            if !(r.is_finite() && *r > 0.0) {
                return Err(Error::invalid(format!("roof value must be > 0, got {r}")));
            }
        }
        let mut v_inv = vec![usize::MAX; n];
        for (y, &vy) in v_fwd.iter().enumerate() {
            if vy >= n || v_inv[vy] != usize::MAX {
                return Err(Error::invalid("base map V must be a permutation"));
            }
            v_inv[vy] = y;
        }
        Ok(SpecialRep {
            labels,
            v_fwd,
            v_inv,
            roof,
        })
    }

    /// The cyclic flow as a special flow: `V(z) = z`, `r_n(z) = n q(z)`.
    pub fn from_cyclic(space: &FlowSpace) -> Result<Self> {
        match space {
            FlowSpace::Cyclic { fibers } => {
                let n = fibers.len();
                SpecialRep::new(
                    fibers.iter().map(|f| f.label.clone()).collect(),
                    (0..n).collect(),
                    fibers.iter().map(|f| f.period).collect(),
                )
            }
            _ => Err(Error::Unsupported(
                "special representation from a flow space requires the cyclic variant".into(),
            )),
        }
    }

    pub fn base_len(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, y: usize) -> &str {
        &self.labels[y]
    }

    pub fn roof(&self, y: usize) -> f64 {
        self.roof[y]
    }

    /// `V^n y` for any integer `n`.
    pub fn v_pow(&self, y: usize, n: i64) -> usize {
        let mut cur = y;
        if n >= 0 {
            for _ in 0..n {
                cur = self.v_fwd[cur];
            }
        } else {
            for _ in 0..(-n) {
                cur = self.v_inv[cur];
            }
        }
        cur
    }

    /// `r_n(y)`.
    pub fn roof_sum(&self, y: usize, n: i64) -> f64 {
        let mut acc = 0.0;
        let mut cur = y;
        if n >= 0 {
            for _ in 0..n {
                acc += self.roof[cur];
                cur = self.v_fwd[cur];
            }
            acc
        } else {
            for _ in 0..(-n) {
                cur = self.v_inv[cur];
                acc += self.roof[cur];
            }
            -acc
        }
    }

    /// Locate `time` in the roof partition over `y`: returns
    /// `(n, V^n y, r_n(y))` with `r_n(y) <= time < r_{n+1}(y)`.
    fn locate(&self, y: usize, time: f64) -> Result<(i64, usize, f64)> {
        if !time.is_finite() {
            return Err(Error::invalid(format!("non-finite flow time {time}")));
        }
        let mut n: i64 = 0;
        let mut acc = 0.0;
        let mut cur = y;
        if time >= 0.0 {
            while time >= acc + self.roof[cur] {
                acc += self.roof[cur];
                cur = self.v_fwd[cur];
                n += 1;
                if n > WINDING_CAP {
                    return Err(Error::invalid(
                        "winding cap exceeded (roof values too small for this time range)",
                    ));
                }
            }
        } else {
            while time < acc {
                cur = self.v_inv[cur];
                acc -= self.roof[cur];
                n -= 1;
                if n < -WINDING_CAP {
                    return Err(Error::invalid(
                        "winding cap exceeded (roof values too small for this time range)",
                    ));
                }
            }
        }
        Ok((n, cur, acc))
    }

    /// Winding index: `n` with `r_n(y) <= s + u < r_{n+1}(y)`.
    pub fn winding_log(&self, s: f64, p: &Point) -> Result<i64> {
        self.validate_point(p)?;
        Ok(self.locate(p.fiber, s + p.coord)?.0)
    }

    /// The special flow in log time: `(y, u) -> (V^n y, s + u - r_n(y))`.
    pub fn apply_log(&self, s: f64, p: &Point) -> Result<Point> {
        self.validate_point(p)?;
        let time = s + p.coord;
        let (_, cur, acc) = self.locate(p.fiber, time)?;
        Ok(Point::new(cur, time - acc))
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        if p.fiber >= self.base_len() {
            return Err(Error::invalid(format!(
                "base index {} out of range ({} base points)",
                p.fiber,
                self.base_len()
            )));
        }
        if !(0.0..self.roof[p.fiber]).contains(&p.coord) {
            return Err(Error::invalid(format!(
                "coordinate {} outside [0, {})",
                p.coord, self.roof[p.fiber]
            )));
        }
        Ok(())
    }
}

/// The point action a cocycle or functional lives over: one of the three
/// canonical flow spaces, or an explicit special-flow representation.
#[derive(Clone, Debug)]
pub enum Action {
    Space(Arc<FlowSpace>),
    Special(Arc<SpecialRep>),
}

impl Action {
    pub fn apply_log(&self, s: f64, p: &Point) -> Result<Point> {
        match self {
            Action::Space(sp) => sp.apply_log(s, p),
            Action::Special(rep) => rep.apply_log(s, p),
        }
    }

    pub fn winding_log(&self, s: f64, p: &Point) -> Result<i64> {
        match self {
            Action::Space(sp) => sp.winding_log(s, p),
            Action::Special(rep) => rep.winding_log(s, p),
        }
    }

    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match self {
            Action::Space(sp) => sp.validate_point(p),
            Action::Special(rep) => rep.validate_point(p),
        }
    }

    pub fn fiber_count(&self) -> usize {
        match self {
            Action::Space(sp) => sp.fiber_count(),
            Action::Special(rep) => rep.base_len(),
        }
    }

    /// Draw a valid random point: uniform fiber, coordinate uniform in
    /// the fiber's admissible range (`[0, q)`, `[-R, R]`, or {0}).
    pub fn sample_point<R: Rng>(&self, rng: &mut R, coord_range: f64) -> Point {
        let fiber = rng.random_range(0..self.fiber_count());
        let coord = match self {
            Action::Space(sp) => match sp.as_ref() {
                FlowSpace::Identity { .. } => 0.0,
                FlowSpace::Dissipative { .. } => (rng.random::<f64>() - 0.5) * 2.0 * coord_range,
                FlowSpace::Cyclic { fibers } => rng.random::<f64>() * fibers[fiber].period,
            },
            Action::Special(rep) => rng.random::<f64>() * rep.roof(fiber),
        };
        Point { fiber, coord }
    }

    pub fn describe_point(&self, p: &Point) -> String {
        let label = match self {
            Action::Space(sp) => sp.fiber_label(p.fiber).to_string(),
            Action::Special(rep) => rep.label(p.fiber).to_string(),
        };
        format!("({label}, {:.6e})", p.coord)
    }

    /// Two actions are "the same" when they share the underlying object.
    pub fn same_as(&self, other: &Action) -> bool {
        match (self, other) {
            (Action::Space(a), Action::Space(b)) => Arc::ptr_eq(a, b),
            (Action::Special(a), Action::Special(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Check the group law `psi_{c1 c2}(p) = psi_{c1}(psi_{c2}(p))` on random
/// `(c1, c2, p)` with `ln c` uniform in the default log range.
pub fn group_law_check(space: &Arc<FlowSpace>, samples: usize, seed: u64) -> VerificationReport {
    group_law_check_mode(space, samples, seed, RunMode::default())
}

pub fn group_law_check_mode(
    space: &Arc<FlowSpace>,
    samples: usize,
    seed: u64,
    mode: RunMode,
) -> VerificationReport {
    let action = Action::Space(space.clone());
    let l = defaults::LOG_RANGE;
    let outcomes = exec::map_indexed(samples.max(1), mode, |i| {
        let mut rng = exec::substream(seed, i as u64);
        let s1 = (rng.random::<f64>() - 0.5) * 2.0 * l;
        let s2 = (rng.random::<f64>() - 0.5) * 2.0 * l;
        let p = action.sample_point(&mut rng, defaults::COORD_RANGE);
        let lhs = action.apply_log(s1 + s2, &p);
        let rhs = action
            .apply_log(s2, &p)
            .and_then(|mid| action.apply_log(s1, &mid));
        let (lhs_c, rhs_c, residual) = match (lhs, rhs) {
            (Ok(a), Ok(b)) => {
                let res = if a.fiber == b.fiber {
                    (a.coord - b.coord).abs()
                } else {
                    f64::INFINITY
                };
                (a.coord, b.coord, res)
            }
            _ => (f64::NAN, f64::NAN, f64::INFINITY),
        };
        Outcome {
            c1: s1.exp(),
            c2: s2.exp(),
            point: action.describe_point(&p),
            lhs: lhs_c,
            rhs: rhs_c,
            residual,
        }
    });
    VerificationReport::from_outcomes(
        "flow group law",
        format!(
            "psi_(c1 c2) vs psi_c1 . psi_c2, log c uniform in [-{l}, {l}], {} fibers",
            space.fiber_count()
        ),
        defaults::TOL_FLOW_LAW,
        outcomes,
    )
}
