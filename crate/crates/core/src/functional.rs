//! Semi-additive functionals.
//!
//! Three kinds, distinguished by the law the verifier applies:
//!
//! * related to a cocycle `B`:
//!   `J_{c1 c2}(p) = J_{c1}(p) + B_{c1}(p) J_{c2}(psi_{c1} p)`,
//! * 1-semi-additive: `g_{c1 c2}(p) = g_{c1}(p)/c2 + g_{c2}(psi_{c1} p)`,
//! * 2-semi-additive:
//!   `j_{c1 c2}(p) = c2^{-(H - 1/alpha)} j_{c1}(p)
//!    + b_{c1}(p) rn_{c1}(p)^{1/alpha} j_{c2}(psi_{c1} p)`,
//!   with the canonical Radon-Nikodym version `rn = 1`.
//!
//! Related functionals come from coboundaries `B_c(p) J(psi_c p) - J(p)`
//! and from the special-flow second component
//! `(B_{e^u}(y,0))^{-1} sum_{k in [0,n)} B_{e^{r_k(y)}}(y,0) J_1(V^k y)`.
//! 1- and 2-semi-additive functionals are built from their closed-form
//! solutions per flow family and become related ones after multiplying
//! by `c` (respectively `c^{H - 1/alpha}`).
//!
//! For negative winding the sum convention is the one forced by the
//! recursion `G~_{n+m}(y) = G~_n(y) + A_{r_n(y)}(y,0) G~_m(V^n y)` with
//! `G~_0 = 0`, i.e. `G~_n(y) = -sum_{k=n}^{-1} A_{r_k(y)}(y,0) G_1(V^k y)`
//! for `n < 0`; the recursion itself is the testable ground truth.

use crate::cocycle::{Cocycle, Hurst, PointFn, VerifyConfig};
use crate::defaults;
use crate::error::{Error, Result};
use crate::exec;
use crate::flowspace::{log_scale, Action, FlowSpace, Point, SpecialRep};
use crate::report::{Outcome, VerificationReport};
use std::fmt;
use std::sync::Arc;

/// Which functional equation an object satisfies.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FunctionalKind {
    Related,
    OneSemi,
    TwoSemi,
}

/// Sign data entering the 2-semi-additive law, per flow family.
#[derive(Clone)]
pub enum SignSpec {
    /// Identity flow: the only sign cocycle is 1.
    Trivial,
    /// Dissipative flow: coboundary of a sign-valued `b`.
    Coboundary(PointFn),
    /// Cyclic flow: per-fiber `b1` plus a sign-valued `b`.
    Cyclic { b1: Vec<i8>, b: PointFn },
}

impl SignSpec {
    pub fn coboundary(b: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        SignSpec::Coboundary(Arc::new(b))
    }

    pub fn cyclic(b1: Vec<i8>, b: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        SignSpec::Cyclic {
            b1,
            b: Arc::new(b),
        }
    }
}

#[derive(Clone)]
enum Signs {
    Trivial,
    Coboundary { b: PointFn },
    Cyclic { b1: Arc<[i8]>, b: PointFn },
}

impl Signs {
    /// The sign cocycle `b_c(p)` at `s = ln c`; NaN when `b` leaves {-1, 1}.
    fn eval_log(&self, action: &Action, s: f64, p: &Point) -> f64 {
        match self {
            Signs::Trivial => 1.0,
            Signs::Coboundary { b } => match action.apply_log(s, p) {
                Ok(moved) => sign_val(b(&moved)) * sign_val(b(p)),
                Err(_) => f64::NAN,
            },
            Signs::Cyclic { b1, b } => {
                match (action.apply_log(s, p), action.winding_log(s, p)) {
                    (Ok(moved), Ok(n)) => {
                        let flip = if b1[p.fiber] == 1 || n % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        };
                        flip * sign_val(b(&moved)) * sign_val(b(p))
                    }
                    _ => f64::NAN,
                }
            }
        }
    }

    fn to_cocycle(&self, action: &Action) -> Cocycle {
        match self {
            Signs::Trivial => Cocycle::constant_one(action.clone()),
            Signs::Coboundary { b } => Cocycle::coboundary_unchecked(action.clone(), b.clone()),
            Signs::Cyclic { b1, b } => {
                Cocycle::cyclic_unchecked(action.clone(), b1.clone(), b.clone())
            }
        }
    }
}

fn sign_val(x: f64) -> f64 {
    if x == 1.0 || x == -1.0 {
        x
    } else {
        f64::NAN
    }
}

#[derive(Clone)]
enum Form {
    /// `J_c(p) = A_c(p) F(psi_c p) - F(p)`
    Coboundary { a: Arc<Cocycle>, f: PointFn },
    /// Special-flow second component with per-base-point table `f1`.
    SpecialSecond {
        a: Arc<Cocycle>,
        f1: Arc<[f64]>,
        rep: Arc<SpecialRep>,
    },
    /// Pointwise sum of related functionals sharing one cocycle.
    Sum {
        parts: Vec<SemiAdditiveFunctional>,
        a: Arc<Cocycle>,
    },
    /// `J_c = c^rate * inner_c`, related to `cocycle`.
    Scaled {
        inner: Box<SemiAdditiveFunctional>,
        cocycle: Arc<Cocycle>,
        rate: f64,
    },
    /// Closed-form 1-semi-additive solution from a generator `g`.
    OneSemi { g: PointFn },
    /// Closed-form 2-semi-additive solution from `j`, sign data and the
    /// optional cyclic log-branch table `j1`. `drop_indicator` disables
    /// the `b1 = 1` gate on the `j1` term (negative control only).
    TwoSemi {
        hurst: Hurst,
        j: PointFn,
        signs: Signs,
        j1: Option<Arc<[f64]>>,
        drop_indicator: bool,
    },
}

/// A semi-additive functional with an evaluator `(c, p) -> R`.
#[derive(Clone)]
pub struct SemiAdditiveFunctional {
    action: Action,
    form: Form,
}

impl fmt::Debug for SemiAdditiveFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SemiAdditiveFunctional({}, {:?})", self.name(), self.kind())
    }
}

/// `G~_n(y) = sum_{k in [0,n)} A_{r_k(y)}(y, 0) G_1(V^k y)`, with the
/// recursion-forced negative branch
/// `G~_n(y) = -sum_{k=n}^{-1} A_{r_k(y)}(y, 0) G_1(V^k y)` for `n < 0`.
///
/// The prefix values `A_{r_k(y)}(y, 0)` are telescoped from one-roof
/// steps `A_{r(V^i y)}(V^i y, 0)`. A single step sits exactly on its own
/// roof boundary (`floor_mod(q, q) = (1, 0)` without rounding), whereas
/// evaluating `A` directly at an accumulated `r_k(y)` can land a hair
/// below the winding boundary and flip a sign.
pub fn g_tilde_n(a: &Cocycle, g1: &[f64], rep: &SpecialRep, y: usize, n: i64) -> f64 {
    let one_step = |fiber: usize| a.eval_log(rep.roof(fiber), &Point::new(fiber, 0.0));
    let mut acc = 0.0;
    let mut prefix = 1.0;
    let mut cur = y;
    if n >= 0 {
        for _ in 0..n {
            acc += prefix * g1[cur];
            prefix *= one_step(cur);
            cur = rep.v_pow(cur, 1);
        }
        acc
    } else {
        for _ in 0..(-n) {
            cur = rep.v_pow(cur, -1);
            prefix /= one_step(cur);
            acc += prefix * g1[cur];
        }
        -acc
    }
}

impl SemiAdditiveFunctional {
    /// `J_c(p) = A_c(p) F(psi_c p) - F(p)`: a related functional for any
    /// cocycle `A` (telescoping).
    pub fn coboundary(a: Cocycle, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        SemiAdditiveFunctional {
            action: a.action().clone(),
            form: Form::Coboundary {
                a: Arc::new(a),
                f: Arc::new(f),
            },
        }
    }

    /// Special-flow second component
    /// `J_c(y,u) = (A_{e^u}(y,0))^{-1} G~_n(y)` for
    /// `r_n(y) <= ln c + u < r_{n+1}(y)`, with `G~` built from `f1`.
    pub fn special_second(a: Cocycle, f1: Vec<f64>, rep: Arc<SpecialRep>) -> Result<Self> {
        if f1.len() != rep.base_len() {
            return Err(Error::invalid(format!(
                "f1 must be tabulated per base point: got {} values for {}",
                f1.len(),
                rep.base_len()
            )));
        }
        if a.action().fiber_count() != rep.base_len() {
            return Err(Error::invalid(
                "cocycle action and special representation disagree on the base",
            ));
        }
        // the construction divides by A_{e^u}(y, 0); probe that it stays
        // away from zero
        for y in 0..rep.base_len() {
            for k in 0..9 {
                let u = (k as f64 + 0.5) / 9.0 * rep.roof(y);
                let v = a.eval_log(u, &Point::new(y, 0.0));
                if !v.is_finite() || v == 0.0 {
                    return Err(Error::DegenerateCocycle(format!(
                        "A_(e^u)(y, 0) = {v} at base {y}, u = {u}"
                    )));
                }
            }
        }
        Ok(SemiAdditiveFunctional {
            action: a.action().clone(),
            form: Form::SpecialSecond {
                a: Arc::new(a),
                f1: f1.into(),
                rep,
            },
        })
    }

    /// Closed-form 1-semi-additive solution:
    /// identity `(c^{-1} - 1) g(x)`; dissipative and cyclic
    /// `g(psi_c p) - c^{-1} g(p)`.
    pub fn solve_one_semi(
        space: &Arc<FlowSpace>,
        g: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SemiAdditiveFunctional {
            action: Action::Space(space.clone()),
            form: Form::OneSemi { g: Arc::new(g) },
        }
    }

    /// Closed-form 2-semi-additive solution per flow family (with the
    /// canonical Radon-Nikodym version, identically 1):
    ///
    /// * identity: `j(x) (1 - c^{-(H-1/alpha)})`, or `j(x) ln c` on the
    ///   `H = 1/alpha` branch;
    /// * dissipative: `b_c(p) j(psi_c p) - c^{-(H-1/alpha)} j(p)` with the
    ///   coboundary sign cocycle;
    /// * cyclic: the same two terms with the cyclic sign cocycle, plus
    ///   `j1(z)/b(z,v) [v + ln c]_{q(z)}` on fibers with `b1(z) = 1` when
    ///   `H = 1/alpha`.
    pub fn solve_two_semi(
        space: &Arc<FlowSpace>,
        hurst: &Hurst,
        j: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        signs: SignSpec,
        j1: Option<Vec<f64>>,
    ) -> Result<Self> {
        let signs = match (space.as_ref(), signs) {
            (FlowSpace::Identity { .. }, SignSpec::Trivial) => Signs::Trivial,
            (FlowSpace::Dissipative { .. }, SignSpec::Coboundary(b)) => Signs::Coboundary { b },
            (FlowSpace::Cyclic { .. }, SignSpec::Cyclic { b1, b }) => {
                if b1.len() != space.fiber_count() {
                    return Err(Error::invalid("b1 must be tabulated per fiber"));
                }
                if b1.iter().any(|v| *v != 1 && *v != -1) {
                    return Err(Error::invalid("b1 values must be +1 or -1"));
                }
                Signs::Cyclic { b1: b1.into(), b }
            }
            _ => {
                return Err(Error::invalid(
                    "sign data does not match the flow family (identity: trivial, \
                     dissipative: coboundary b, cyclic: (b1, b))",
                ))
            }
        };
        if j1.is_some() && !space.is_cyclic() {
            return Err(Error::invalid(
                "the j1 table is meaningful for cyclic flows only",
            ));
        }
        if let Some(t) = &j1 {
            if t.len() != space.fiber_count() {
                return Err(Error::invalid("j1 must be tabulated per fiber"));
            }
        }
        Ok(SemiAdditiveFunctional {
            action: Action::Space(space.clone()),
            form: Form::TwoSemi {
                hurst: *hurst,
                j: Arc::new(j),
                signs,
                j1: j1.map(Into::into),
                drop_indicator: false,
            },
        })
    }

    /// Negative control: like [`solve_two_semi`](Self::solve_two_semi)
    /// but with the `b1(z) = 1` indicator dropped from the log-branch
    /// `j1` term, which breaks the 2-semi-additive law on flipping
    /// fibers. Exists to demonstrate that the verifier catches it.
    pub fn solve_two_semi_dropping_b1_indicator(
        space: &Arc<FlowSpace>,
        hurst: &Hurst,
        j: impl Fn(&Point) -> f64 + Send + Sync + 'static,
        signs: SignSpec,
        j1: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mut built = Self::solve_two_semi(space, hurst, j, signs, j1)?;
        if let Form::TwoSemi { drop_indicator, .. } = &mut built.form {
            *drop_indicator = true;
        }
        Ok(built)
    }

    pub fn kind(&self) -> FunctionalKind {
        match self.form {
            Form::OneSemi { .. } => FunctionalKind::OneSemi,
            Form::TwoSemi { .. } => FunctionalKind::TwoSemi,
            _ => FunctionalKind::Related,
        }
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn name(&self) -> String {
        match &self.form {
            Form::Coboundary { a, .. } => format!("coboundary over {}", a.name()),
            Form::SpecialSecond { a, .. } => format!("special second component over {}", a.name()),
            Form::Sum { parts, .. } => format!("sum of {} related functionals", parts.len()),
            Form::Scaled { inner, rate, .. } => {
                format!("c^{rate} * ({})", inner.name())
            }
            Form::OneSemi { .. } => "1-semi-additive closed form".into(),
            Form::TwoSemi { hurst, .. } => {
                if hurst.is_log_branch() {
                    "2-semi-additive closed form (log branch)".into()
                } else {
                    format!("2-semi-additive closed form (beta = {})", hurst.beta())
                }
            }
        }
    }

    /// The cocycle a related-kind functional is paired with.
    pub fn related_cocycle(&self) -> Option<&Arc<Cocycle>> {
        match &self.form {
            Form::Coboundary { a, .. } | Form::SpecialSecond { a, .. } | Form::Sum { a, .. } => {
                Some(a)
            }
            Form::Scaled { cocycle, .. } => Some(cocycle),
            _ => None,
        }
    }

    /// Evaluate at `s = ln c`.
    pub fn eval_log(&self, s: f64, p: &Point) -> f64 {
        match &self.form {
            Form::Coboundary { a, f } => match self.action.apply_log(s, p) {
                Ok(moved) => a.eval_log(s, p) * f(&moved) - f(p),
                Err(_) => f64::NAN,
            },
            Form::SpecialSecond { a, f1, rep } => {
                let n = match rep.winding_log(s, p) {
                    Ok(n) => n,
                    Err(_) => return f64::NAN,
                };
                let a_u = a.eval_log(p.coord, &Point::new(p.fiber, 0.0));
                if !a_u.is_finite() || a_u == 0.0 {
                    return f64::NAN;
                }
                g_tilde_n(a, f1, rep, p.fiber, n) / a_u
            }
            Form::Sum { parts, .. } => parts.iter().map(|f| f.eval_log(s, p)).sum(),
            Form::Scaled { inner, rate, .. } => (rate * s).exp() * inner.eval_log(s, p),
            Form::OneSemi { g } => match self.action.apply_log(s, p) {
                Ok(moved) => {
                    if matches!(self.action, Action::Space(ref sp) if matches!(sp.as_ref(), FlowSpace::Identity { .. }))
                    {
                        ((-s).exp() - 1.0) * g(p)
                    } else {
                        g(&moved) - (-s).exp() * g(p)
                    }
                }
                Err(_) => f64::NAN,
            },
            Form::TwoSemi {
                hurst,
                j,
                signs,
                j1,
                drop_indicator,
            } => {
                let beta = hurst.beta();
                match self.action.apply_log(s, p) {
                    Ok(moved) => {
                        if matches!(signs, Signs::Trivial) {
                            return if hurst.is_log_branch() {
                                j(p) * s
                            } else {
                                j(p) * (1.0 - (-beta * s).exp())
                            };
                        }
                        let bc = signs.eval_log(&self.action, s, p);
                        let mut value = bc * j(&moved) - (-beta * s).exp() * j(p);
                        if hurst.is_log_branch() {
                            if let (Some(j1), Signs::Cyclic { b1, b }) = (j1, signs) {
                                if *drop_indicator || b1[p.fiber] == 1 {
                                    if let Ok(n) = self.action.winding_log(s, p) {
                                        // 1/b = b for sign values
                                        value += j1[p.fiber] * sign_val(b(p)) * n as f64;
                                    } else {
                                        return f64::NAN;
                                    }
                                }
                            }
                        }
                        value
                    }
                    Err(_) => f64::NAN,
                }
            }
        }
    }

    /// Evaluate at scale `c > 0`.
    pub fn eval(&self, c: f64, p: &Point) -> Result<f64> {
        Ok(self.eval_log(log_scale(c)?, p))
    }

    /// Multiply by the factor that turns this functional into one related
    /// to a cocycle: `J_c = c g_c` for the 1-semi kind (cocycle
    /// `B_c = c`), `J_c = c^{H-1/alpha} j_c` for the 2-semi kind
    /// (cocycle `c^{H-1/alpha} b_c rn_c^{1/alpha}`).
    pub fn to_related(&self) -> Result<SemiAdditiveFunctional> {
        match &self.form {
            Form::OneSemi { .. } => {
                let cocycle = Arc::new(Cocycle::scale(self.action.clone(), 1.0));
                Ok(SemiAdditiveFunctional {
                    action: self.action.clone(),
                    form: Form::Scaled {
                        inner: Box::new(self.clone()),
                        cocycle,
                        rate: 1.0,
                    },
                })
            }
            Form::TwoSemi { hurst, signs, .. } => {
                let sign_coc = signs.to_cocycle(&self.action);
                let rn = Cocycle::constant_one(self.action.clone());
                let cocycle = Arc::new(Cocycle::transform_b(hurst, sign_coc, rn)?);
                Ok(SemiAdditiveFunctional {
                    action: self.action.clone(),
                    form: Form::Scaled {
                        inner: Box::new(self.clone()),
                        cocycle,
                        rate: hurst.beta(),
                    },
                })
            }
            _ => Err(Error::AlreadyRelated),
        }
    }
}

/// Verify the kind-appropriate law on random `(c1, c2, p)`; residuals are
/// scaled by `1 + |lhs|`, and the report gates on the `c = 1` vanishing.
pub fn verify_functional(f: &SemiAdditiveFunctional, cfg: &VerifyConfig) -> VerificationReport {
    let action = f.action();
    let outcomes = exec::map_indexed(cfg.samples.max(1), cfg.mode, |i| {
        let mut rng = exec::substream(cfg.seed, i as u64);
        use rand::Rng;
        let s1 = (rng.random::<f64>() - 0.5) * 2.0 * cfg.log_range;
        let s2 = (rng.random::<f64>() - 0.5) * 2.0 * cfg.log_range;
        let p = action.sample_point(&mut rng, cfg.coord_range);
        law_outcome(f, s1, s2, &p)
    });

    let zero_at_one = exec::map_indexed(256, cfg.mode, |i| {
        let mut rng = exec::substream(cfg.seed ^ 0x517cc1b727220a95, i as u64);
        let p = action.sample_point(&mut rng, cfg.coord_range);
        f.eval_log(0.0, &p).abs()
    })
    .into_iter()
    .fold(0.0f64, f64::max);

    VerificationReport::from_outcomes(
        format!("{:?} law: {}", f.kind(), f.name()),
        format!(
            "residuals scaled by 1 + |lhs|; log c uniform in [-{}, {}]",
            cfg.log_range, cfg.log_range
        ),
        cfg.tol,
        outcomes,
    )
    .gate("zero_at_one_max_abs", zero_at_one, defaults::TOL_ZERO_AT_ONE)
}

fn law_outcome(f: &SemiAdditiveFunctional, s1: f64, s2: f64, p: &Point) -> Outcome {
    let lhs = f.eval_log(s1 + s2, p);
    let rhs = match f.action().apply_log(s1, p) {
        Ok(moved) => match &f.form {
            Form::OneSemi { .. } => (-s2).exp() * f.eval_log(s1, p) + f.eval_log(s2, &moved),
            Form::TwoSemi { hurst, signs, .. } => {
                // canonical Radon-Nikodym version: rn_c ≡ 1
                let bc = signs.eval_log(f.action(), s1, p);
                (-hurst.beta() * s2).exp() * f.eval_log(s1, p) + bc * f.eval_log(s2, &moved)
            }
            _ => {
                let b = f
                    .related_cocycle()
                    .expect("related kind carries its cocycle");
                f.eval_log(s1, p) + b.eval_log(s1, p) * f.eval_log(s2, &moved)
            }
        },
        Err(_) => f64::NAN,
    };
    let residual = if lhs.is_finite() && rhs.is_finite() {
        (lhs - rhs).abs() / (1.0 + lhs.abs())
    } else {
        f64::INFINITY
    };
    Outcome {
        c1: s1.exp(),
        c2: s2.exp(),
        point: f.action().describe_point(p),
        lhs,
        rhs,
        residual,
    }
}

/// Scaled residual of the kind-appropriate law at an explicit
/// `(c1, c2, p)`; the solve-table emitter reports this alongside each
/// closed-form value (with `c1 = c2 = sqrt(c)`).
pub fn law_residual(
    f: &SemiAdditiveFunctional,
    c1: f64,
    c2: f64,
    p: &Point,
) -> Result<f64> {
    let s1 = log_scale(c1)?;
    let s2 = log_scale(c2)?;
    f.action().validate_point(p)?;
    Ok(law_outcome(f, s1, s2, p).residual)
}

/// Closure under addition: the pointwise sum of two related functionals
/// sharing a cocycle is again related to it. Errors on mismatched
/// cocycles or actions.
pub fn decompose_check(
    f1: &SemiAdditiveFunctional,
    f2: &SemiAdditiveFunctional,
    cfg: &VerifyConfig,
) -> Result<VerificationReport> {
    let (a1, a2) = match (f1.related_cocycle(), f2.related_cocycle()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(Error::invalid(
                "decomposition check needs related-kind functionals",
            ))
        }
    };
    if !f1.action().same_as(f2.action()) {
        return Err(Error::invalid("functionals live over different actions"));
    }
    if !a1.agrees_with(a2, cfg.seed) {
        return Err(Error::invalid(
            "functionals are related to different cocycles",
        ));
    }
    let sum = SemiAdditiveFunctional {
        action: f1.action().clone(),
        form: Form::Sum {
            parts: vec![f1.clone(), f2.clone()],
            a: a1.clone(),
        },
    };
    let mut report = verify_functional(&sum, cfg);
    report.check = format!("decomposition sum closure: {} + {}", f1.name(), f2.name());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::verify_cocycle;
    use crate::flowspace::{CyclicFiber, Fiber};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn cyclic_space(periods: &[f64]) -> Arc<FlowSpace> {
        Arc::new(
            FlowSpace::cyclic(
                periods
                    .iter()
                    .enumerate()
                    .map(|(i, q)| CyclicFiber {
                        label: format!("z{i}"),
                        weight: 1.0,
                        period: *q,
                    })
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn dissipative_space(n: usize) -> Arc<FlowSpace> {
        Arc::new(
            FlowSpace::dissipative(
                (0..n)
                    .map(|i| Fiber {
                        label: format!("y{i}"),
                        weight: 1.0,
                    })
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn sgn(x: f64) -> f64 {
        if x >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    #[test]
    fn one_semi_worked_values() {
        // cyclic, q = 2, g(z, v) = v: g_(e^2)(z, 0.5) = 0.5 - 0.5 e^{-2}
        let space = cyclic_space(&[2.0]);
        let g = SemiAdditiveFunctional::solve_one_semi(&space, |p: &Point| p.coord);
        let c = (2.0f64).exp();
        let expected = 0.5 - 0.5 * (-2.0f64).exp();
        assert_abs_diff_eq!(
            g.eval(c, &Point::new(0, 0.5)).unwrap(),
            expected,
            epsilon = 1e-12
        );

        // identity, g = 3, c = 2: (1/2 - 1) * 3 = -1.5
        let id = Arc::new(FlowSpace::single_identity());
        let g = SemiAdditiveFunctional::solve_one_semi(&id, |_| 3.0);
        assert_abs_diff_eq!(
            g.eval(2.0, &Point::label_only(0)).unwrap(),
            -1.5,
            epsilon = 1e-12
        );

        // c = 1 vanishes exactly on every flow
        for space in [cyclic_space(&[1.5]), dissipative_space(1)] {
            let g = SemiAdditiveFunctional::solve_one_semi(&space, |p: &Point| p.coord.sin());
            assert_eq!(g.eval(1.0, &Point::new(0, 0.4)).unwrap(), 0.0);
        }
    }

    #[test]
    fn one_semi_law_on_all_flows() {
        let cfg = VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW);
        let id = Arc::new(FlowSpace::single_identity());
        let cases = vec![
            SemiAdditiveFunctional::solve_one_semi(&id, |_| 2.5),
            SemiAdditiveFunctional::solve_one_semi(&dissipative_space(2), |p: &Point| {
                (0.7 * p.coord).cos() + p.fiber as f64
            }),
            SemiAdditiveFunctional::solve_one_semi(&cyclic_space(&[2.0, 0.7]), |p: &Point| {
                p.coord.sin()
            }),
        ];
        for f in cases {
            let r = verify_functional(&f, &cfg);
            assert!(r.pass, "{r}");
        }
    }

    #[test]
    fn two_semi_identity_branches() {
        let id = Arc::new(FlowSpace::single_identity());
        let p = Point::label_only(0);

        // beta = 0.5: 1 - 4^{-1/2} = 0.5
        let hurst = Hurst::new(1.5, 1.0).unwrap();
        let j =
            SemiAdditiveFunctional::solve_two_semi(&id, &hurst, |_| 1.0, SignSpec::Trivial, None)
                .unwrap();
        assert_abs_diff_eq!(j.eval(4.0, &p).unwrap(), 0.5, epsilon = 1e-12);

        // log branch: j_c = ln c
        let hurst = Hurst::log_branch(1.0).unwrap();
        let j =
            SemiAdditiveFunctional::solve_two_semi(&id, &hurst, |_| 1.0, SignSpec::Trivial, None)
                .unwrap();
        assert_abs_diff_eq!(
            j.eval(std::f64::consts::E, &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_semi_cyclic_log_branch_counts_windings() {
        let space = cyclic_space(&[2.0]);
        let hurst = Hurst::log_branch(1.25).unwrap();
        let j = SemiAdditiveFunctional::solve_two_semi(
            &space,
            &hurst,
            |_| 0.0,
            SignSpec::cyclic(vec![1], |_| 1.0),
            Some(vec![1.0]),
        )
        .unwrap();
        // q = 2, v = 1.5, c = e: [2.5]_2 = 1
        assert_abs_diff_eq!(
            j.eval(std::f64::consts::E, &Point::new(0, 1.5)).unwrap(),
            1.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn two_semi_laws_across_flows_and_branches() {
        let cfg = VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW);

        let diss = dissipative_space(2);
        let hurst = Hurst::new(1.1, 1.25).unwrap(); // beta = 0.3
        let f = SemiAdditiveFunctional::solve_two_semi(
            &diss,
            &hurst,
            |p: &Point| (p.coord * 0.9).sin() + 0.2,
            SignSpec::coboundary(|p: &Point| sgn(p.coord.cos())),
            None,
        )
        .unwrap();
        let r = verify_functional(&f, &cfg);
        assert!(r.pass, "{r}");

        // cyclic, mixed b1, general branch
        let space = cyclic_space(&[0.9, 2.3]);
        let hurst = Hurst::new(0.7, 1.5).unwrap();
        let f = SemiAdditiveFunctional::solve_two_semi(
            &space,
            &hurst,
            |p: &Point| p.coord * p.coord + 0.1,
            SignSpec::cyclic(vec![-1, 1], |p: &Point| sgn((p.coord - 0.4).sin())),
            None,
        )
        .unwrap();
        let r = verify_functional(&f, &cfg);
        assert!(r.pass, "{r}");

        // cyclic log branch with j1 active on the b1 = 1 fiber
        let hurst = Hurst::log_branch(1.5).unwrap();
        let f = SemiAdditiveFunctional::solve_two_semi(
            &space,
            &hurst,
            |p: &Point| (1.3 * p.coord).cos(),
            SignSpec::cyclic(vec![1, -1], |p: &Point| sgn((p.coord - 0.4).sin())),
            Some(vec![0.8, -0.4]),
        )
        .unwrap();
        let r = verify_functional(&f, &cfg);
        assert!(r.pass, "{r}");
    }

    #[test]
    fn two_semi_rejects_mismatched_sign_data() {
        let id = Arc::new(FlowSpace::single_identity());
        let hurst = Hurst::new(0.7, 1.2).unwrap();
        assert!(SemiAdditiveFunctional::solve_two_semi(
            &id,
            &hurst,
            |_| 1.0,
            SignSpec::coboundary(|_| 1.0),
            None
        )
        .is_err());
        // j1 on a non-cyclic flow
        assert!(SemiAdditiveFunctional::solve_two_semi(
            &id,
            &hurst,
            |_| 1.0,
            SignSpec::Trivial,
            Some(vec![1.0])
        )
        .is_err());
    }

    #[test]
    fn coboundary_functional_examples() {
        let id = Arc::new(FlowSpace::single_identity());
        let one = Cocycle::constant_one(Action::Space(id.clone()));
        let f = SemiAdditiveFunctional::coboundary(one, |_| 42.0);
        assert_eq!(f.eval(3.0, &Point::label_only(0)).unwrap(), 0.0);

        let space = cyclic_space(&[2.0, 0.8]);
        let sign = Cocycle::cyclic(&space, &[-1, 1], |p: &Point| sgn((p.coord - 0.2).sin()))
            .unwrap();
        let rn = Cocycle::radon_nikodym(&space);
        let hurst = Hurst::new(1.0, 1.25).unwrap();
        let b = Cocycle::transform_b(&hurst, sign, rn).unwrap();
        let f = SemiAdditiveFunctional::coboundary(b, |p: &Point| p.coord * p.coord);
        let r = verify_functional(&f, &VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW));
        assert!(r.pass, "{r}");

        // F = 0 gives the zero functional
        let space2 = cyclic_space(&[1.0]);
        let one = Cocycle::constant_one(Action::Space(space2.clone()));
        let z = SemiAdditiveFunctional::coboundary(one, |_| 0.0);
        let r = verify_functional(&z, &VerifyConfig::default());
        assert_eq!(r.max_abs_residual, 0.0);
    }

    #[test]
    fn special_second_component_examples() {
        let space = cyclic_space(&[2.0]);
        let rep = Arc::new(SpecialRep::from_cyclic(&space).unwrap());
        let one = Cocycle::constant_one(Action::Space(space.clone()));
        let f = SemiAdditiveFunctional::special_second(one, vec![1.0], rep.clone()).unwrap();

        // winding 0: empty sum
        assert_eq!(f.eval((0.1f64).exp(), &Point::new(0, 0.3)).unwrap(), 0.0);
        // u = 1.5, c = e: winding 1, single unit term
        assert_abs_diff_eq!(
            f.eval(std::f64::consts::E, &Point::new(0, 1.5)).unwrap(),
            1.0,
            epsilon = 1e-14
        );

        // geometric terms rho^k against the closed form
        let space = cyclic_space(&[2.0]);
        let rep = Arc::new(SpecialRep::from_cyclic(&space).unwrap());
        let hurst = Hurst::new(1.05, 1.25).unwrap(); // beta = 0.25
        let sign = Cocycle::cyclic(&space, &[1], |_| 1.0).unwrap();
        let b = Cocycle::transform_b(&hurst, sign, Cocycle::radon_nikodym(&space)).unwrap();
        let f = SemiAdditiveFunctional::special_second(b, vec![1.0], rep).unwrap();
        let beta = 0.25;
        let rho = (beta * 2.0f64).exp();
        for (s, u) in [(3.0, 0.5), (7.3, 1.9), (-4.2, 0.1)] {
            let n = space.winding_log(s, &Point::new(0, u)).unwrap();
            // term-by-term oracle, negative branch carrying the
            // recursion-forced minus sign
            let mut acc = 0.0;
            if n >= 0 {
                for k in 0..n {
                    acc += rho.powi(k as i32);
                }
            } else {
                for k in n..0 {
                    acc -= rho.powi(k as i32);
                }
            }
            let expected = (-beta * u).exp() * acc;
            assert_relative_eq!(
                f.eval_log(s, &Point::new(0, u)),
                expected,
                max_relative = 1e-12
            );
            // closed geometric form for the forward branch
            if n > 0 {
                let closed = (-beta * u).exp() * (rho.powi(n as i32) - 1.0) / (rho - 1.0);
                assert_relative_eq!(f.eval_log(s, &Point::new(0, u)), closed, max_relative = 1e-11);
            }
        }
    }

    #[test]
    fn special_second_rejects_degenerate_cocycle() {
        let space = cyclic_space(&[2.0]);
        let rep = Arc::new(SpecialRep::from_cyclic(&space).unwrap());
        let zero = Cocycle::custom(
            Action::Space(space.clone()),
            crate::cocycle::Codomain::NonzeroReal,
            "vanishing",
            |_, _| 0.0,
        );
        assert!(matches!(
            SemiAdditiveFunctional::special_second(zero, vec![1.0], rep),
            Err(Error::DegenerateCocycle(_))
        ));
    }

    #[test]
    fn g_tilde_recursion_and_negative_branch() {
        // 3-point base, V a cyclic permutation, dyadic roofs, power-of-two
        // cocycle values: everything evaluates exactly.
        let rep = Arc::new(
            SpecialRep::new(
                vec!["a".into(), "b".into(), "c".into()],
                vec![1, 2, 0],
                vec![1.0, 0.5, 2.0],
            )
            .unwrap(),
        );
        let h = [1.0, 2.0, 8.0];
        let a = Cocycle::special_coboundary(&rep, move |p: &Point| h[p.fiber]);
        let g1 = [1.0, -2.0, 3.0];

        assert_eq!(g_tilde_n(&a, &g1, &rep, 1, 0), 0.0);

        // n = -1 is forced by the recursion with G~_0 = 0
        for y in 0..3 {
            let lhs = g_tilde_n(&a, &g1, &rep, y, -1);
            let y_prev = rep.v_pow(y, -1);
            let a_r = a.eval_log(rep.roof_sum(y, -1), &Point::new(y, 0.0));
            assert_eq!(lhs, -a_r * g1[y_prev]);
        }

        for y in 0..3 {
            for n in -5i64..=5 {
                for m in -5i64..=5 {
                    let lhs = g_tilde_n(&a, &g1, &rep, y, n + m);
                    let a_rn = a.eval_log(rep.roof_sum(y, n), &Point::new(y, 0.0));
                    let rhs = g_tilde_n(&a, &g1, &rep, y, n)
                        + a_rn * g_tilde_n(&a, &g1, &rep, rep.v_pow(y, n), m);
                    assert_eq!(lhs, rhs, "y={y} n={n} m={m}");
                }
            }
        }
    }

    #[test]
    fn g_tilde_unit_terms_count() {
        let space = cyclic_space(&[1.0]);
        let rep = Arc::new(SpecialRep::from_cyclic(&space).unwrap());
        let a = Cocycle::constant_one(Action::Space(space));
        for n in 0..6 {
            assert_eq!(g_tilde_n(&a, &[1.0], &rep, 0, n), n as f64);
        }
    }

    #[test]
    fn to_related_round_trip_and_law() {
        let space = cyclic_space(&[2.0]);
        let g = SemiAdditiveFunctional::solve_one_semi(&space, |p: &Point| p.coord.sin() + 0.3);
        let related = g.to_related().unwrap();
        assert_eq!(related.kind(), FunctionalKind::Related);
        assert!(matches!(related.to_related(), Err(Error::AlreadyRelated)));

        // round trip within 2 ulps
        let mut rng = exec::substream(5, 0);
        use rand::Rng;
        for _ in 0..500 {
            let s = (rng.random::<f64>() - 0.5) * 8.0;
            let p = Point::new(0, rng.random::<f64>() * 2.0);
            let back = related.eval_log(s, &p) / s.exp();
            let orig = g.eval_log(s, &p);
            assert_relative_eq!(back, orig, max_relative = 4.0 * f64::EPSILON);
        }

        let r = verify_functional(&related, &VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW));
        assert!(r.pass, "{r}");

        // identity algebra: c * (c^{-1} - 1) g = (1 - c) g
        let id = Arc::new(FlowSpace::single_identity());
        let g3 = SemiAdditiveFunctional::solve_one_semi(&id, |_| 1.0);
        let rel = g3.to_related().unwrap();
        assert_abs_diff_eq!(
            rel.eval(4.0, &Point::label_only(0)).unwrap(),
            -3.0,
            epsilon = 1e-12
        );

        // two-semi: related version passes the related law with the
        // transform cocycle, and that cocycle itself passes its law
        let hurst = Hurst::new(0.9, 1.25).unwrap();
        let f = SemiAdditiveFunctional::solve_two_semi(
            &space,
            &hurst,
            |p: &Point| p.coord + 0.2,
            SignSpec::cyclic(vec![-1], |_| 1.0),
            None,
        )
        .unwrap();
        let related = f.to_related().unwrap();
        let r = verify_functional(&related, &VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW));
        assert!(r.pass, "{r}");
        let rc = verify_cocycle(related.related_cocycle().unwrap(), &VerifyConfig::default());
        assert!(rc.pass, "{rc}");
    }

    #[test]
    fn decompose_check_closure_and_mismatch() {
        let cfg = VerifyConfig::with_tol(defaults::TOL_FUNCTIONAL_LAW);
        let space = cyclic_space(&[2.0, 1.3]);
        let rep = Arc::new(SpecialRep::from_cyclic(&space).unwrap());
        let hurst = Hurst::new(1.0, 1.25).unwrap();
        let sign = Cocycle::cyclic(&space, &[1, -1], |p: &Point| sgn((p.coord - 0.5).cos()))
            .unwrap();
        let b = Cocycle::transform_b(&hurst, sign, Cocycle::radon_nikodym(&space)).unwrap();

        let f1 = SemiAdditiveFunctional::coboundary(b.clone(), |p: &Point| p.coord * p.coord);
        let f2 =
            SemiAdditiveFunctional::special_second(b.clone(), vec![0.7, -0.3], rep).unwrap();
        let r = decompose_check(&f1, &f2, &cfg).unwrap();
        assert!(r.pass, "{r}");

        // adding the zero functional reproduces f1's residual profile
        let zero = SemiAdditiveFunctional::coboundary(b.clone(), |_| 0.0);
        let sum_r = decompose_check(&f1, &zero, &cfg).unwrap();
        let f1_r = verify_functional(&f1, &cfg);
        assert_eq!(sum_r.max_abs_residual, f1_r.max_abs_residual);

        // mismatched cocycles are rejected
        let other = Cocycle::scale(Action::Space(space.clone()), 1.0);
        let f3 = SemiAdditiveFunctional::coboundary(other, |_| 1.0);
        assert!(decompose_check(&f1, &f3, &cfg).is_err());

        // non-related inputs are rejected
        let g = SemiAdditiveFunctional::solve_one_semi(&space, |p: &Point| p.coord);
        assert!(decompose_check(&f1, &g, &cfg).is_err());
    }

    #[test]
    fn zero_functional_has_zero_residual() {
        let space = dissipative_space(1);
        let f = SemiAdditiveFunctional::solve_one_semi(&space, |_| 0.0);
        let r = verify_functional(&f, &VerifyConfig::default());
        assert_eq!(r.max_abs_residual, 0.0);
        assert_eq!(r.metrics["zero_at_one_max_abs"], 0.0);
    }
}
