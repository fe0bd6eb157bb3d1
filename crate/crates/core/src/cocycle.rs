//! Cocycles for multiplicative flows: `b_{c1 c2}(p) = b_{c1}(p) b_{c2}(psi_{c1} p)`.
//!
//! Constructors cover the forms that occur for the canonical flows:
//! coboundaries `b(psi_c p)/b(p)`, the cyclic-flow form
//! `b1(z)^{[v + ln c]_q} b(psi_c p)/b(p)`, the Radon-Nikodym cocycle
//! (the canonical version is identically 1 for all three normal forms,
//! with an opt-in nontrivial dissipative version), and the transform
//! cocycle `B_c = c^{H - 1/alpha} b_c (dRN)^{1/alpha}` that turns
//! 2-semi-additive functionals into related ones.
//!
//! Sign data is kept as integers so that sign-cocycle checks are exact.
//! A sign-valued user function that strays outside {-1, 1}, or a
//! positive one that hits 0, makes the evaluator return NaN; the
//! verifier reports that as a law violation rather than panicking.

use crate::defaults;
use crate::error::{Error, Result};
use crate::exec::{self, RunMode};
use crate::flowspace::{log_scale, Action, FlowSpace, Point};
use crate::report::{Outcome, VerificationReport};
use std::fmt;
use std::sync::Arc;

/// User function over points of a flow space.
pub type PointFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
/// User function of a single real coordinate.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Raw log-scale cocycle evaluator `(s, p) -> value`, for custom forms.
pub type CustomFn = Arc<dyn Fn(f64, &Point) -> f64 + Send + Sync>;

/// Declared codomain of a cocycle.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Codomain {
    /// {-1, 1}
    Signs,
    /// (0, inf)
    Positive,
    /// R \ {0}
    NonzeroReal,
}

/// Self-similarity exponent `H` together with `alpha`.
///
/// The solution formulas change structurally at `H = 1/alpha`, so that
/// branch is an explicit flag declared by the caller rather than a
/// floating-point comparison. On the log branch `beta = H - 1/alpha` is
/// treated as exactly zero.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct Hurst {
    h: f64,
    alpha: f64,
    log_branch: bool,
}

impl Hurst {
    pub fn new(h: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::invalid(format!("H must be > 0, got {h}")));
        }
        Ok(Hurst {
            h,
            alpha,
            log_branch: false,
        })
    }

    /// The `H = 1/alpha` branch.
    pub fn log_branch(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Hurst {
            h: 1.0 / alpha,
            alpha,
            log_branch: true,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_log_branch(&self) -> bool {
        self.log_branch
    }

    /// `H - 1/alpha`, exactly 0 on the log branch.
    pub fn beta(&self) -> f64 {
        if self.log_branch {
            0.0
        } else {
            self.h - 1.0 / self.alpha
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha < 2.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in the open interval (0, 2), got {alpha}"
        )));
    }
    Ok(())
}

#[derive(Clone)]
enum CocycleForm {
    One,
    /// `c^rate`
    Scale { rate: f64 },
    Coboundary { b: PointFn },
    CyclicSigns { b1: Arc<[i8]>, b: PointFn },
    /// Nontrivial Radon-Nikodym version: `b(u + ln c)/b(u)` on one
    /// dissipative fiber, 1 elsewhere.
    NontrivialRn { b: ScalarFn, fiber: usize },
    TransformB {
        beta: f64,
        inv_alpha: f64,
        sign: Arc<Cocycle>,
        rn: Arc<Cocycle>,
    },
    Custom { name: String, f: CustomFn },
    /// Negative control: the cyclic form with the winding exponent taken
    /// at `v = 0`, which breaks the law across winding boundaries.
    WrongWinding { b1: Arc<[i8]>, b: PointFn },
}

/// A cocycle for a flow (or special-flow) action.
#[derive(Clone)]
pub struct Cocycle {
    action: Action,
    codomain: Codomain,
    form: CocycleForm,
}

impl fmt::Debug for Cocycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cocycle({}, {:?})", self.name(), self.codomain)
    }
}

fn sign_of(x: f64) -> f64 {
    if x == 1.0 || x == -1.0 {
        x
    } else {
        f64::NAN
    }
}

fn parity_pow(b1: i8, n: i64) -> f64 {
    if b1 == 1 || n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Cocycle {
    /// The constant-1 cocycle.
    pub fn constant_one(action: Action) -> Cocycle {
        Cocycle {
            action,
            codomain: Codomain::Positive,
            form: CocycleForm::One,
        }
    }

    /// `B_c = c^rate` (`rate = 1` is the cocycle attached to
    /// 1-semi-additive functionals).
    pub fn scale(action: Action, rate: f64) -> Cocycle {
        Cocycle {
            action,
            codomain: Codomain::Positive,
            form: CocycleForm::Scale { rate },
        }
    }

    /// Coboundary `b_c(p) = b(psi_c p)/b(p)` of a sign-valued `b`.
    pub fn coboundary(
        space: &Arc<FlowSpace>,
        b: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Cocycle> {
        let action = Action::Space(space.clone());
        let b: PointFn = Arc::new(b);
        probe_signs(&action, &b)?;
        Ok(Cocycle {
            action,
            codomain: Codomain::Signs,
            form: CocycleForm::Coboundary { b },
        })
    }

    /// Cyclic-flow cocycle `b1(z)^{[v + ln c]_{q(z)}} b(psi_c p)/b(p)`.
    pub fn cyclic(
        space: &Arc<FlowSpace>,
        b1: &[i8],
        b: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Cocycle> {
        let b: PointFn = Arc::new(b);
        let b1 = validate_cyclic_signs(space, b1, &b)?;
        Ok(Cocycle {
            action: Action::Space(space.clone()),
            codomain: Codomain::Signs,
            form: CocycleForm::CyclicSigns { b1, b },
        })
    }

    /// Negative control: cyclic form with the winding exponent computed
    /// at the fiber origin instead of at `v`. Breaks the cocycle law as
    /// soon as some `b1(z) = -1`; exists to prove the verifier has power.
    pub fn cyclic_wrong_winding(
        space: &Arc<FlowSpace>,
        b1: &[i8],
        b: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Cocycle> {
        let b: PointFn = Arc::new(b);
        let b1 = validate_cyclic_signs(space, b1, &b)?;
        Ok(Cocycle {
            action: Action::Space(space.clone()),
            codomain: Codomain::Signs,
            form: CocycleForm::WrongWinding { b1, b },
        })
    }

    /// The canonical Radon-Nikodym cocycle of the three normal forms:
    /// identically 1, since identity, translation and seesaw all
    /// preserve their product measures.
    pub fn radon_nikodym(space: &Arc<FlowSpace>) -> Cocycle {
        Cocycle {
            action: Action::Space(space.clone()),
            codomain: Codomain::Positive,
            form: CocycleForm::One,
        }
    }

    /// A nontrivial version of the dissipative Radon-Nikodym derivatives:
    /// `b(u + ln c)/b(u)` on the fiber `special_fiber`, 1 elsewhere.
    /// Still a genuine cocycle because fibers are flow-invariant.
    pub fn nontrivial_rn(
        space: &Arc<FlowSpace>,
        b: impl Fn(f64) -> f64 + Send + Sync + 'static,
        special_fiber: usize,
    ) -> Result<Cocycle> {
        if !matches!(space.as_ref(), FlowSpace::Dissipative { .. }) {
            return Err(Error::Unsupported(
                "nontrivial Radon-Nikodym versions are built on the dissipative flow".into(),
            ));
        }
        if special_fiber >= space.fiber_count() {
            return Err(Error::invalid("special fiber index out of range"));
        }
        let b: ScalarFn = Arc::new(b);
        for k in 0..33 {
            let u = -defaults::COORD_RANGE + k as f64 * defaults::COORD_RANGE / 16.0;
            let val = b(u);
            if !(val.is_finite() && val > 0.0) {
                return Err(Error::invalid(format!(
                    "b must be strictly positive; b({u}) = {val}"
                )));
            }
        }
        Ok(Cocycle {
            action: Action::Space(space.clone()),
            codomain: Codomain::Positive,
            form: CocycleForm::NontrivialRn {
                b,
                fiber: special_fiber,
            },
        })
    }

    /// `B_c = c^{H - 1/alpha} b_c (dRN_c)^{1/alpha}`: the cocycle to
    /// which 2-semi-additive functionals are related.
    pub fn transform_b(hurst: &Hurst, sign: Cocycle, rn: Cocycle) -> Result<Cocycle> {
        if sign.codomain != Codomain::Signs && !matches!(sign.form, CocycleForm::One) {
            return Err(Error::invalid(
                "transform cocycle needs a sign-valued b component",
            ));
        }
        if rn.codomain != Codomain::Positive {
            return Err(Error::invalid(
                "transform cocycle needs a positive Radon-Nikodym component",
            ));
        }
        if !sign.action.same_as(&rn.action) {
            return Err(Error::invalid(
                "b and Radon-Nikodym components live over different actions",
            ));
        }
        Ok(Cocycle {
            action: sign.action.clone(),
            codomain: Codomain::NonzeroReal,
            form: CocycleForm::TransformB {
                beta: hurst.beta(),
                inv_alpha: 1.0 / hurst.alpha(),
                sign: Arc::new(sign),
                rn: Arc::new(rn),
            },
        })
    }

    /// Arbitrary log-scale evaluator; used for test oracles and for
    /// special-flow coboundaries.
    pub fn custom(
        action: Action,
        codomain: Codomain,
        name: impl Into<String>,
        f: impl Fn(f64, &Point) -> f64 + Send + Sync + 'static,
    ) -> Cocycle {
        Cocycle {
            action,
            codomain,
            form: CocycleForm::Custom {
                name: name.into(),
                f: Arc::new(f),
            },
        }
    }

    /// Coboundary of a positive function over a special-flow action:
    /// `A_s(p) = h(phi_s p)/h(p)`. With dyadic roofs and power-of-two `h`
    /// this evaluates exactly, which the recursion tests rely on.
    pub fn special_coboundary(
        rep: &Arc<crate::flowspace::SpecialRep>,
        h: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Cocycle {
        let action = Action::Special(rep.clone());
        let h = Arc::new(h);
        let act = action.clone();
        Cocycle::custom(
            action,
            Codomain::NonzeroReal,
            "special coboundary",
            move |s, p| match act.apply_log(s, p) {
                Ok(moved) => h(&moved) / h(p),
                Err(_) => f64::NAN,
            },
        )
    }

    pub(crate) fn coboundary_unchecked(action: Action, b: PointFn) -> Cocycle {
        Cocycle {
            action,
            codomain: Codomain::Signs,
            form: CocycleForm::Coboundary { b },
        }
    }

    pub(crate) fn cyclic_unchecked(action: Action, b1: Arc<[i8]>, b: PointFn) -> Cocycle {
        Cocycle {
            action,
            codomain: Codomain::Signs,
            form: CocycleForm::CyclicSigns { b1, b },
        }
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn codomain(&self) -> Codomain {
        self.codomain
    }

    pub fn name(&self) -> String {
        match &self.form {
            CocycleForm::One => "constant 1".into(),
            CocycleForm::Scale { rate } => format!("c^{rate}"),
            CocycleForm::Coboundary { .. } => "sign coboundary".into(),
            CocycleForm::CyclicSigns { .. } => "cyclic signs".into(),
            CocycleForm::NontrivialRn { fiber, .. } => {
                format!("nontrivial RN version on fiber {fiber}")
            }
            CocycleForm::TransformB { beta, .. } => format!("transform B (beta = {beta})"),
            CocycleForm::Custom { name, .. } => name.clone(),
            CocycleForm::WrongWinding { .. } => "cyclic signs, wrong winding (control)".into(),
        }
    }

    /// Evaluate at `s = ln c`. Returns NaN where a user function leaves
    /// its declared codomain or the point is invalid.
    pub fn eval_log(&self, s: f64, p: &Point) -> f64 {
        match &self.form {
            CocycleForm::One => 1.0,
            CocycleForm::Scale { rate } => (rate * s).exp(),
            CocycleForm::Coboundary { b } => match self.action.apply_log(s, p) {
                Ok(moved) => sign_of(b(&moved)) * sign_of(b(p)),
                Err(_) => f64::NAN,
            },
            CocycleForm::CyclicSigns { b1, b } => {
                let (moved, n) = match (
                    self.action.apply_log(s, p),
                    self.action.winding_log(s, p),
                ) {
                    (Ok(m), Ok(n)) => (m, n),
                    _ => return f64::NAN,
                };
                parity_pow(b1[p.fiber], n) * sign_of(b(&moved)) * sign_of(b(p))
            }
            CocycleForm::WrongWinding { b1, b } => {
                let origin = Point::new(p.fiber, 0.0);
                let (moved, n) = match (
                    self.action.apply_log(s, p),
                    self.action.winding_log(s, &origin),
                ) {
                    (Ok(m), Ok(n)) => (m, n),
                    _ => return f64::NAN,
                };
                parity_pow(b1[p.fiber], n) * sign_of(b(&moved)) * sign_of(b(p))
            }
            CocycleForm::NontrivialRn { b, fiber } => {
                if p.fiber != *fiber {
                    return 1.0;
                }
                let num = b(p.coord + s);
                let den = b(p.coord);
                if num > 0.0 && den > 0.0 && num.is_finite() && den.is_finite() {
                    num / den
                } else {
                    f64::NAN
                }
            }
            CocycleForm::TransformB {
                beta,
                inv_alpha,
                sign,
                rn,
            } => {
                let sv = sign.eval_log(s, p);
                let rv = rn.eval_log(s, p);
                if rv <= 0.0 {
                    return f64::NAN;
                }
                (beta * s).exp() * sv * rv.powf(*inv_alpha)
            }
            CocycleForm::Custom { f, .. } => f(s, p),
        }
    }

    /// Evaluate at scale `c > 0`.
    pub fn eval(&self, c: f64, p: &Point) -> Result<f64> {
        Ok(self.eval_log(log_scale(c)?, p))
    }

    /// Sampled semantic comparison (used to match cocycles when checking
    /// decompositions).
    pub(crate) fn agrees_with(&self, other: &Cocycle, seed: u64) -> bool {
        if !self.action.same_as(&other.action) {
            return false;
        }
        let mut rng = exec::substream(seed, 0);
        use rand::Rng;
        for _ in 0..64 {
            let s = (rng.random::<f64>() - 0.5) * 2.0 * defaults::LOG_RANGE;
            let p = self.action.sample_point(&mut rng, defaults::COORD_RANGE);
            let a = self.eval_log(s, &p);
            let b = other.eval_log(s, &p);
            if !(a.is_finite() && b.is_finite()) || (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return false;
            }
        }
        true
    }
}

fn validate_cyclic_signs(space: &Arc<FlowSpace>, b1: &[i8], b: &PointFn) -> Result<Arc<[i8]>> {
    if !space.is_cyclic() {
        return Err(Error::Unsupported(
            "the cyclic cocycle form requires a cyclic flow space".into(),
        ));
    }
    if b1.len() != space.fiber_count() {
        return Err(Error::invalid(format!(
            "b1 must be tabulated per fiber: got {} values for {} fibers",
            b1.len(),
            space.fiber_count()
        )));
    }
    if b1.iter().any(|v| *v != 1 && *v != -1) {
        return Err(Error::invalid("b1 values must be +1 or -1"));
    }
    probe_signs(&Action::Space(space.clone()), b)?;
    Ok(b1.into())
}

/// Probe a claimed sign function on a deterministic sweep per fiber.
fn probe_signs(action: &Action, b: &PointFn) -> Result<()> {
    for fiber in 0..action.fiber_count() {
        for k in 0..9 {
            let frac = (k as f64 + 0.5) / 9.0;
            let coord = match action {
                Action::Space(sp) => match sp.as_ref() {
                    FlowSpace::Identity { .. } => 0.0,
                    FlowSpace::Dissipative { .. } => (frac - 0.5) * 2.0 * defaults::COORD_RANGE,
                    FlowSpace::Cyclic { .. } => frac * sp.period(fiber).unwrap(),
                },
                Action::Special(rep) => frac * rep.roof(fiber),
            };
            let val = b(&Point::new(fiber, coord));
            if val != 1.0 && val != -1.0 {
                return Err(Error::invalid(format!(
                    "sign function returned {val} at fiber {fiber}, coord {coord}; values must be exactly +1 or -1"
                )));
            }
        }
    }
    Ok(())
}

/// Sampling configuration for the law verifiers.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// `ln c` is drawn uniformly from `[-log_range, log_range]`.
    pub log_range: f64,
    /// Dissipative coordinates are drawn from `[-coord_range, coord_range]`.
    pub coord_range: f64,
    pub mode: RunMode,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: defaults::SAMPLES,
            seed: defaults::SEED,
            tol: defaults::TOL_COCYCLE_LAW,
            log_range: defaults::LOG_RANGE,
            coord_range: defaults::COORD_RANGE,
            mode: RunMode::default(),
        }
    }
}

impl VerifyConfig {
    pub fn with_tol(tol: f64) -> Self {
        VerifyConfig {
            tol,
            ..Default::default()
        }
    }
}

/// Check the cocycle law on random `(c1, c2, p)` plus the `c = 1`
/// identity. Residuals are `|lhs - rhs| / (1 + |lhs|)`; a zero value
/// from a nonzero-codomain evaluator counts as a violation.
pub fn verify_cocycle(coc: &Cocycle, cfg: &VerifyConfig) -> VerificationReport {
    let action = coc.action();
    let outcomes = exec::map_indexed(cfg.samples.max(1), cfg.mode, |i| {
        let mut rng = exec::substream(cfg.seed, i as u64);
        use rand::Rng;
        let s1 = (rng.random::<f64>() - 0.5) * 2.0 * cfg.log_range;
        let s2 = (rng.random::<f64>() - 0.5) * 2.0 * cfg.log_range;
        let p = action.sample_point(&mut rng, cfg.coord_range);
        law_outcome(coc, s1, s2, &p)
    });

    let identity_max = exec::map_indexed(256, cfg.mode, |i| {
        let mut rng = exec::substream(cfg.seed ^ 0x9e3779b97f4a7c15, i as u64);
        let p = action.sample_point(&mut rng, cfg.coord_range);
        (coc.eval_log(0.0, &p) - 1.0).abs()
    })
    .into_iter()
    .fold(0.0f64, f64::max);

    VerificationReport::from_outcomes(
        format!("cocycle law: {}", coc.name()),
        format!(
            "b_(c1 c2)(p) vs b_c1(p) b_c2(psi_c1 p); log c uniform in [-{}, {}]",
            cfg.log_range, cfg.log_range
        ),
        cfg.tol,
        outcomes,
    )
    .gate("identity_max_abs", identity_max, cfg.tol)
}

fn law_outcome(coc: &Cocycle, s1: f64, s2: f64, p: &Point) -> Outcome {
    let lhs = coc.eval_log(s1 + s2, p);
    let rhs = match coc.action().apply_log(s1, p) {
        Ok(moved) => coc.eval_log(s1, p) * coc.eval_log(s2, &moved),
        Err(_) => f64::NAN,
    };
    let zero_forbidden = lhs == 0.0 || rhs == 0.0;
    let residual = if !lhs.is_finite() || !rhs.is_finite() || zero_forbidden {
        f64::INFINITY
    } else {
        (lhs - rhs).abs() / (1.0 + lhs.abs())
    };
    Outcome {
        c1: s1.exp(),
        c2: s2.exp(),
        point: coc.action().describe_point(p),
        lhs,
        rhs,
        residual,
    }
}
