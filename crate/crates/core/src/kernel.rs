//! Mixed-moving-average kernels and their certification.
//!
//! A kernel is `G(x, u)` on finitely many weighted fibers. The time
//! increment `G_t(x,u) = G(x, t+u) - G(x,u)` drives everything: the
//! characteristic exponent
//! `I(theta, ts) = sum_x w_x ∫ |Σ_k theta_k G_{t_k}(x,u)|^alpha du`
//! determines all finite-dimensional laws, self-similarity holds exactly
//! when `I(theta, c ts) = c^{alpha H} I(theta, ts)`, and stationarity of
//! increments is the shift invariance of the same integral.
//!
//! The generation relation ties the kernel to its flow data
//! (`b`, Radon-Nikodym cocycle, `g`, `j`):
//! `c^{-(H-1/alpha)} G(x, cu)
//!  = b_c(x) rn_c(x)^{1/alpha} G(psi_c x, u + g_c(x)) + j_c(x)`.
//! Kernels built here live on the identity flow; the linear fractional
//! stable motion family satisfies the relation exactly by homogeneity
//! with `g = j = 0` and `b = rn = 1`.

use crate::cocycle::{Cocycle, Hurst};
use crate::defaults;
use crate::error::{Error, Result};
use crate::exec::RunMode;
use crate::expr::Expr;
use crate::flowspace::{log_scale, Action, Fiber, FlowSpace, Point};
use crate::functional::{SemiAdditiveFunctional, SignSpec};
use crate::quadrature::{integrate_pieces, power_tail, Piece, QuadConfig, QuadOutcome, Sing};
use crate::report::{Outcome, VerificationReport};
use std::sync::Arc;

/// The base function `G(x, .)` on one fiber.
#[derive(Clone, Debug)]
pub enum KernelShape {
    /// `aplus u_+^d + aminus (-u)_+^d`; `d = 0` means the one-sided
    /// indicators (the stable Levy motion kernel).
    PowerLaw {
        aplus: f64,
        aminus: f64,
        exponent: f64,
    },
    /// Named expression in the coordinate `u`; assumed smooth.
    Expr(Arc<Expr>),
    Zero,
    /// Pointwise sum of shapes (used e.g. for perturbed controls).
    Sum(Vec<KernelShape>),
}

/// Local power behavior of a shape at one point of its domain.
#[derive(Copy, Clone, Debug)]
pub struct ShapeSing {
    pub loc: f64,
    pub exponent: f64,
    /// coefficient of `(u - loc)_+^exponent`
    pub right: f64,
    /// coefficient of `(loc - u)_+^exponent`
    pub left: f64,
}

impl KernelShape {
    pub fn expr(src: &str) -> Result<KernelShape> {
        Ok(KernelShape::Expr(Arc::new(Expr::parse(src, &["u"])?)))
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            KernelShape::PowerLaw {
                aplus,
                aminus,
                exponent,
            } => {
                if *exponent == 0.0 {
                    if u > 0.0 {
                        *aplus
                    } else if u < 0.0 {
                        *aminus
                    } else {
                        0.0
                    }
                } else if u > 0.0 {
                    aplus * u.powf(*exponent)
                } else if u < 0.0 {
                    aminus * (-u).powf(*exponent)
                } else {
                    // the (u_+)^d convention at the origin
                    0.0
                }
            }
            KernelShape::Expr(e) => e.eval(&[u]),
            KernelShape::Zero => 0.0,
            KernelShape::Sum(parts) => parts.iter().map(|s| s.eval(u)).sum(),
        }
    }

    pub(crate) fn singularities(&self, out: &mut Vec<ShapeSing>) {
        match self {
            KernelShape::PowerLaw {
                aplus,
                aminus,
                exponent,
            } => out.push(ShapeSing {
                loc: 0.0,
                exponent: *exponent,
                right: *aplus,
                left: *aminus,
            }),
            KernelShape::Sum(parts) => {
                for p in parts {
                    p.singularities(out);
                }
            }
            KernelShape::Expr(_) | KernelShape::Zero => {}
        }
    }
}

/// A kernel fiber: label, measure weight, shape.
#[derive(Clone, Debug)]
pub struct KernelFiber {
    pub label: String,
    pub weight: f64,
    pub shape: KernelShape,
}

/// A mixed-moving-average kernel with its flow data.
#[derive(Clone)]
pub struct Kernel {
    hurst: Hurst,
    fibers: Vec<KernelFiber>,
    space: Arc<FlowSpace>,
    b: Cocycle,
    rn: Cocycle,
    g: SemiAdditiveFunctional,
    j: SemiAdditiveFunctional,
    window: f64,
}

impl Kernel {
    /// Kernel on the identity flow with trivial flow data
    /// (`b = rn = 1`, `g = j = 0`).
    pub fn new(hurst: Hurst, fibers: Vec<KernelFiber>, window: f64) -> Result<Kernel> {
        if fibers.is_empty() {
            return Err(Error::invalid("a kernel needs at least one fiber"));
        }
        if !(window.is_finite() && window > 0.0) {
            return Err(Error::invalid("integrability window must be positive"));
        }
        let space = Arc::new(FlowSpace::identity(
            fibers
                .iter()
                .map(|f| {
                    if !(f.weight.is_finite() && f.weight > 0.0) {
                        return Err(Error::invalid(format!(
                            "fiber weight must be > 0, got {}",
                            f.weight
                        )));
                    }
                    Ok(Fiber {
                        label: f.label.clone(),
                        weight: f.weight,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        )?);
        let b = Cocycle::constant_one(Action::Space(space.clone()));
        let rn = Cocycle::radon_nikodym(&space);
        let g = SemiAdditiveFunctional::solve_one_semi(&space, |_| 0.0);
        let j = SemiAdditiveFunctional::solve_two_semi(
            &space,
            &hurst,
            |_| 0.0,
            SignSpec::Trivial,
            None,
        )?;
        Ok(Kernel {
            hurst,
            fibers,
            space,
            b,
            rn,
            g,
            j,
            window,
        })
    }

    /// The linear fractional stable motion kernel
    /// `G(u) = aplus u_+^{H-1/alpha} + aminus (-u)_+^{H-1/alpha}`
    /// on a single unit-weight fiber; on the `H = 1/alpha` branch the
    /// powers degenerate to one-sided indicators (stable Levy motion).
    pub fn lfsm(hurst: &Hurst, aplus: f64, aminus: f64) -> Result<Kernel> {
        if hurst.h() >= 1.0 {
            return Err(Error::invalid(format!(
                "H = {} >= 1: |G_t|^alpha loses integrability at infinity (requires H < 1)",
                hurst.h()
            )));
        }
        // H > 0 (local integrability near u = 0) is enforced by Hurst::new
        if !(aplus.is_finite() && aminus.is_finite()) {
            return Err(Error::invalid("kernel amplitudes must be finite"));
        }
        Kernel::new(
            *hurst,
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::PowerLaw {
                    aplus,
                    aminus,
                    exponent: hurst.beta(),
                },
            }],
            50.0,
        )
    }

    pub fn hurst(&self) -> &Hurst {
        &self.hurst
    }

    pub fn fibers(&self) -> &[KernelFiber] {
        &self.fibers
    }

    pub fn space(&self) -> &Arc<FlowSpace> {
        &self.space
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    /// `G(x, u)`.
    pub fn eval(&self, fiber: usize, u: f64) -> f64 {
        self.fibers[fiber].shape.eval(u)
    }

    /// Time increment `G_t(x, u) = G(x, t+u) - G(x, u)`.
    pub fn increment(&self, t: f64, fiber: usize, u: f64) -> f64 {
        self.eval(fiber, t + u) - self.eval(fiber, u)
    }

    /// Residual of the generation relation at scale `c` over a grid of
    /// `(fiber, u)` points.
    pub fn generated_residual(
        &self,
        c: f64,
        grid: &[(usize, f64)],
        tol: f64,
    ) -> Result<VerificationReport> {
        let s = log_scale(c)?;
        if grid.is_empty() {
            return Err(Error::invalid("generation-relation grid is empty"));
        }
        let beta = self.hurst.beta();
        let inv_alpha = 1.0 / self.hurst.alpha();
        let outcomes = grid
            .iter()
            .map(|&(fiber, u)| {
                let p = Point::label_only(fiber);
                let lhs = (-beta * s).exp() * self.eval(fiber, c * u);
                let gc = self.g.eval_log(s, &p);
                let jc = self.j.eval_log(s, &p);
                let bc = self.b.eval_log(s, &p);
                let rnc = self.rn.eval_log(s, &p);
                // identity flow: psi_c(x) = x
                let rhs = bc * rnc.powf(inv_alpha) * self.eval(fiber, u + gc) + jc;
                let residual = if lhs.is_finite() && rhs.is_finite() {
                    (lhs - rhs).abs()
                } else {
                    f64::INFINITY
                };
                Outcome {
                    c1: c,
                    c2: 1.0,
                    point: format!("({}, {u:.6e})", self.fibers[fiber].label),
                    lhs,
                    rhs,
                    residual,
                }
            })
            .collect();
        Ok(VerificationReport::from_outcomes(
            format!("generation relation at c = {c}"),
            format!("{} grid points", grid.len()),
            tol,
            outcomes,
        ))
    }

    /// Fraction of grid points where some increment `G_t` is nonzero;
    /// a heuristic stand-in for the full-support condition.
    pub fn support_coverage(&self, ts: &[f64], grid: &[(usize, f64)]) -> f64 {
        if grid.is_empty() {
            return 0.0;
        }
        let hit = grid
            .iter()
            .filter(|&&(fiber, u)| ts.iter().any(|&t| self.increment(t, fiber, u) != 0.0))
            .count();
        hit as f64 / grid.len() as f64
    }
}

/// Logarithmically spaced two-sided grid `(fiber, ±u)` over
/// `[u_min, u_max]`, for every fiber.
pub fn log_grid(k: &Kernel, u_min: f64, u_max: f64, per_side: usize) -> Vec<(usize, f64)> {
    let mut grid = Vec::new();
    let ratio = (u_max / u_min).ln();
    for fiber in 0..k.fibers().len() {
        for i in 0..per_side {
            let frac = i as f64 / (per_side - 1).max(1) as f64;
            let u = u_min * (ratio * frac).exp();
            grid.push((fiber, u));
            grid.push((fiber, -u));
        }
    }
    grid
}

/// Configuration of the characteristic-exponent quadrature.
#[derive(Clone, Debug)]
pub struct ExponentConfig {
    pub quad: QuadConfig,
    /// The numeric bulk extends to `far_cutoff * timescale`; beyond it a
    /// fitted power law supplies the tail. The default keeps the fit
    /// point where even second-order increment cancellations still
    /// dominate floating-point noise.
    pub far_cutoff: f64,
    /// Re-run at 8x tighter tolerance and report the relative change.
    pub refine_check: bool,
    pub mode: RunMode,
}

impl Default for ExponentConfig {
    fn default() -> Self {
        ExponentConfig {
            quad: QuadConfig::default(),
            far_cutoff: 1e6,
            refine_check: true,
            mode: RunMode::default(),
        }
    }
}

/// Characteristic exponent value plus quadrature diagnostics.
#[derive(Clone, Debug)]
pub struct ExponentOutcome {
    pub value: f64,
    pub bulk: f64,
    pub tail: f64,
    /// Relative change of the value under an 8x tighter tolerance
    /// (only populated when `refine_check` is on).
    pub refinement_delta: f64,
    pub evals: usize,
}

impl ExponentOutcome {
    /// Share of the value supplied by the fitted power-law tails.
    pub fn tail_fraction(&self) -> f64 {
        if self.value > 0.0 {
            self.tail / self.value
        } else {
            0.0
        }
    }
}

/// `I(theta, ts) = sum_x w_x ∫_R |Σ_k theta_k G_{t_k}(x, u)|^alpha du`.
pub fn charfun_exponent(
    k: &Kernel,
    thetas: &[f64],
    ts: &[f64],
    cfg: &ExponentConfig,
) -> Result<ExponentOutcome> {
    if thetas.len() != ts.len() || thetas.is_empty() {
        return Err(Error::invalid(
            "thetas and ts must have equal nonzero length",
        ));
    }
    let terms: Vec<(f64, f64)> = thetas.iter().copied().zip(ts.iter().copied()).collect();
    exponent_from_terms(k, &terms, cfg)
}

/// The same integral for an explicit increment combination
/// `Σ_i coef_i G_{time_i}(x, u)`; the stationarity check uses this with
/// the shifted contrast.
pub fn exponent_from_terms(
    k: &Kernel,
    terms: &[(f64, f64)],
    cfg: &ExponentConfig,
) -> Result<ExponentOutcome> {
    for (coef, time) in terms {
        if !(coef.is_finite() && time.is_finite()) {
            return Err(Error::invalid("non-finite theta or t"));
        }
    }
    let run = |quad: &QuadConfig| -> Result<(f64, f64, usize)> {
        let mut bulk = 0.0;
        let mut tail = 0.0;
        let mut evals = 0usize;
        for fiber in k.fibers() {
            let (b, t, e) = fiber_exponent(fiber, k.hurst().alpha(), terms, quad, cfg)?;
            bulk += fiber.weight * b;
            tail += fiber.weight * t;
            evals += e;
        }
        Ok((bulk, tail, evals))
    };

    let (bulk, tail, mut evals) = run(&cfg.quad)?;
    let mut value = (bulk + tail).max(0.0);
    let mut refinement_delta = 0.0;
    if cfg.refine_check {
        let tighter = QuadConfig {
            rel_tol: cfg.quad.rel_tol / 8.0,
            ..cfg.quad.clone()
        };
        let (b2, t2, e2) = run(&tighter)?;
        let refined = (b2 + t2).max(0.0);
        refinement_delta = (value - refined).abs() / refined.abs().max(f64::MIN_POSITIVE);
        value = refined;
        evals += e2;
    }
    if !value.is_finite() {
        return Err(Error::invalid(
            "characteristic exponent evaluated to a non-finite value",
        ));
    }
    Ok(ExponentOutcome {
        value,
        bulk,
        tail,
        refinement_delta,
        evals,
    })
}

/// Merged breakpoint of the combined integrand.
struct BreakPoint {
    loc: f64,
    exponent: f64,
    right: f64,
    left: f64,
}

fn fiber_exponent(
    fiber: &KernelFiber,
    alpha: f64,
    terms: &[(f64, f64)],
    quad: &QuadConfig,
    cfg: &ExponentConfig,
) -> Result<(f64, f64, usize)> {
    // shift list: coef * G(u + tau); the -Σ coef G(u) part is tau = 0
    let mut shifts: Vec<(f64, f64)> = Vec::new();
    let total: f64 = terms.iter().map(|(c, _)| c).sum();
    for &(coef, time) in terms {
        merge_shift(&mut shifts, coef, time);
    }
    merge_shift(&mut shifts, -total, 0.0);

    let shape = fiber.shape.clone();
    let shifts_arc = shifts.clone();
    let f = move |u: f64| {
        let mut s = 0.0;
        for &(coef, tau) in &shifts_arc {
            s += coef * shape.eval(u + tau);
        }
        s.abs().powf(alpha)
    };

    // induced breakpoints: every shape singularity, translated by each shift
    let mut sings = Vec::new();
    fiber.shape.singularities(&mut sings);
    let mut bps: Vec<BreakPoint> = Vec::new();
    for sing in &sings {
        for &(coef, tau) in &shifts {
            let loc = sing.loc - tau;
            merge_breakpoint(
                &mut bps,
                BreakPoint {
                    loc,
                    exponent: sing.exponent,
                    right: coef * sing.right,
                    left: coef * sing.left,
                },
            );
        }
    }
    bps.sort_by(|a, b| a.loc.total_cmp(&b.loc));

    let timescale = terms
        .iter()
        .map(|(_, t)| t.abs())
        .fold(1.0f64, f64::max);
    let pad = 4.0 * (timescale + 1.0);
    let (lo, hi) = if bps.is_empty() {
        (-pad, pad)
    } else {
        (bps[0].loc - pad, bps[bps.len() - 1].loc + pad)
    };
    let far = cfg.far_cutoff * timescale;

    let mut pieces = Vec::new();
    // far fields, graded toward the bulk where the integrand still moves
    pieces.push(Piece {
        a: -far,
        b: lo,
        left: None,
        right: Some(Sing {
            lambda: 0.0,
            strength: 0.0,
        }),
    });
    pieces.push(Piece {
        a: hi,
        b: far,
        left: Some(Sing {
            lambda: 0.0,
            strength: 0.0,
        }),
        right: None,
    });
    let mut cursor = lo;
    let mut carry: Option<Sing> = None;
    for bp in &bps {
        let left_of_bp = Sing {
            lambda: alpha * bp.exponent,
            strength: bp.left.abs().powf(alpha),
        };
        let right_of_bp = Sing {
            lambda: alpha * bp.exponent,
            strength: bp.right.abs().powf(alpha),
        };
        pieces.push(Piece {
            a: cursor,
            b: bp.loc,
            left: carry,
            right: Some(left_of_bp),
        });
        carry = Some(right_of_bp);
        cursor = bp.loc;
    }
    pieces.push(Piece {
        a: cursor,
        b: hi,
        left: carry,
        right: None,
    });

    let QuadOutcome { value: bulk, evals } = integrate_pieces(&f, &pieces, quad, cfg.mode)?;

    let describe = || {
        format!(
            "|Σ coef G_t|^alpha over times {:?}",
            terms.iter().map(|(_, t)| *t).collect::<Vec<_>>()
        )
    };
    let (tail_r, _) = power_tail(&|x: f64| f(x), far, bulk, &describe())?;
    let (tail_l, _) = power_tail(&|x: f64| f(-x), far, bulk, &describe())?;
    Ok((bulk, tail_r + tail_l, evals + 4))
}

fn merge_shift(shifts: &mut Vec<(f64, f64)>, coef: f64, tau: f64) {
    for entry in shifts.iter_mut() {
        if entry.1 == tau {
            entry.0 += coef;
            return;
        }
    }
    shifts.push((coef, tau));
}

fn merge_breakpoint(bps: &mut Vec<BreakPoint>, bp: BreakPoint) {
    for entry in bps.iter_mut() {
        if (entry.loc - bp.loc).abs() <= 1e-9 * (1.0 + bp.loc.abs()) {
            if (entry.exponent - bp.exponent).abs() <= 1e-12 {
                entry.right += bp.right;
                entry.left += bp.left;
            } else if bp.exponent < entry.exponent {
                // keep the most singular leading behavior
                *entry = bp;
            }
            return;
        }
    }
    bps.push(bp);
}

/// Self-similarity certificate row: `I(theta, c ts)` against
/// `c^{alpha H} I(theta, ts)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SelfSimRow {
    pub c: f64,
    pub i_scaled: f64,
    pub i_direct: f64,
    pub rel_discrepancy: f64,
}

/// Check `I(theta, c ts) = c^{alpha H} I(theta, ts)` for each `c`.
pub fn check_self_similarity(
    k: &Kernel,
    cs: &[f64],
    thetas: &[f64],
    ts: &[f64],
    cfg: &ExponentConfig,
    tol: f64,
) -> Result<(VerificationReport, Vec<SelfSimRow>)> {
    let base = charfun_exponent(k, thetas, ts, cfg)?;
    let ah = k.hurst().alpha() * k.hurst().h();
    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    let mut worst_refine = base.refinement_delta;
    let mut worst_tail = base.tail_fraction();
    for &c in cs {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("scale c must be positive, got {c}")));
        }
        let scaled_ts: Vec<f64> = ts.iter().map(|t| c * t).collect();
        let direct = charfun_exponent(k, thetas, &scaled_ts, cfg)?;
        worst_refine = worst_refine.max(direct.refinement_delta);
        worst_tail = worst_tail.max(direct.tail_fraction());
        let i_scaled = c.powf(ah) * base.value;
        let rel = if i_scaled == 0.0 {
            direct.value.abs()
        } else {
            (direct.value / i_scaled - 1.0).abs()
        };
        rows.push(SelfSimRow {
            c,
            i_scaled,
            i_direct: direct.value,
            rel_discrepancy: rel,
        });
        outcomes.push(Outcome {
            c1: c,
            c2: 1.0,
            point: format!("ts scaled by {c}"),
            lhs: direct.value,
            rhs: i_scaled,
            residual: rel,
        });
    }
    let report = VerificationReport::from_outcomes(
        "self-similarity via characteristic exponent",
        format!(
            "I(theta, c ts) vs c^(alpha H) I(theta, ts); alpha = {}, H = {}",
            k.hurst().alpha(),
            k.hurst().h()
        ),
        tol,
        outcomes,
    )
    .metric("i_base", base.value)
    .metric("tail_fraction_max", worst_tail)
    .gate("refinement_delta_max", worst_refine, defaults::QUAD_REFINE_TOL);
    Ok((report, rows))
}

/// Shift invariance of increments: the exponent of
/// `Σ theta_k (G_{t_k + s} - G_s)` equals `I(theta, ts)`.
pub fn check_stationary_increments(
    k: &Kernel,
    shift: f64,
    thetas: &[f64],
    ts: &[f64],
    cfg: &ExponentConfig,
    tol: f64,
) -> Result<VerificationReport> {
    if !shift.is_finite() {
        return Err(Error::invalid("shift must be finite"));
    }
    let base = charfun_exponent(k, thetas, ts, cfg)?;
    let mut terms: Vec<(f64, f64)> = thetas
        .iter()
        .zip(ts)
        .map(|(&th, &t)| (th, t + shift))
        .collect();
    let total: f64 = thetas.iter().sum();
    terms.push((-total, shift));
    let shifted = exponent_from_terms(k, &terms, cfg)?;
    let rel = if base.value == 0.0 {
        shifted.value.abs()
    } else {
        (shifted.value / base.value - 1.0).abs()
    };
    let outcome = Outcome {
        c1: shift,
        c2: 1.0,
        point: format!("shift {shift}"),
        lhs: shifted.value,
        rhs: base.value,
        residual: rel,
    };
    Ok(VerificationReport::from_outcomes(
        "stationary increments via characteristic exponent",
        format!("contrast over shifted times ts + {shift} vs ts"),
        tol,
        vec![outcome],
    )
    .metric("i_base", base.value)
    .metric(
        "tail_fraction_max",
        base.tail_fraction().max(shifted.tail_fraction()),
    )
    .gate(
        "refinement_delta_max",
        base.refinement_delta.max(shifted.refinement_delta),
        defaults::QUAD_REFINE_TOL,
    ))
}

/// Write self-similarity rows as delimited text with columns
/// `c, I_scaled, I_direct, rel_discrepancy`.
pub fn write_selfsim_table(rows: &[SelfSimRow], path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(crate::report::csv_err)?;
    w.write_record(["c", "I_scaled", "I_direct", "rel_discrepancy"])
        .map_err(crate::report::csv_err)?;
    for row in rows {
        w.write_record([
            format!("{:.17e}", row.c),
            format!("{:.17e}", row.i_scaled),
            format!("{:.17e}", row.i_direct),
            format!("{:.17e}", row.rel_discrepancy),
        ])
        .map_err(crate::report::csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn lfsm(h: f64, alpha: f64) -> Kernel {
        Kernel::lfsm(&Hurst::new(h, alpha).unwrap(), 1.0, 0.0).unwrap()
    }

    #[test]
    fn increment_examples() {
        let k = lfsm(0.7, 1.2);
        assert_eq!(k.increment(0.0, 0, 1.3), 0.0);

        // G(u) = u gives increments identically t
        let linear = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::expr("u").unwrap(),
            }],
            10.0,
        )
        .unwrap();
        assert_abs_diff_eq!(linear.increment(2.5, 0, -0.7), 2.5, epsilon = 1e-12);

        // exponent 0.5, t = 1, u = 0: 1^0.5 - 0 = 1 (on the raw shape;
        // H - 1/alpha = 0.5 needs alpha > 2 and so never comes from lfsm)
        let shape = KernelShape::PowerLaw {
            aplus: 1.0,
            aminus: 0.0,
            exponent: 0.5,
        };
        assert_eq!(shape.eval(1.0) - shape.eval(0.0), 1.0);
    }

    #[test]
    fn lfsm_rejects_out_of_range_parameters() {
        assert!(Kernel::lfsm(&Hurst::new(1.2, 1.5).unwrap(), 1.0, 0.0).is_err());
        assert!(Hurst::new(0.7, 2.0).is_err());
        assert!(Hurst::new(0.0, 1.5).is_err());
    }

    #[test]
    fn lfsm_one_sided_vanishes_on_the_other_side() {
        let k = lfsm(0.7, 1.2);
        assert_eq!(k.eval(0, -3.0), 0.0);
        assert_eq!(k.eval(0, 0.0), 0.0);
    }

    #[test]
    fn lfsm_homogeneity_pointwise() {
        let k = lfsm(0.4, 0.8); // beta = -0.85, singular at 0
        let beta = k.hurst().beta();
        for c in [0.5f64, 2.0, 4.0] {
            for i in 0..200 {
                let u = -10.0 + 0.1003 * i as f64;
                if u == 0.0 {
                    continue;
                }
                let lhs = c.powf(-beta) * k.eval(0, c * u);
                let rhs = k.eval(0, u);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn generated_residual_lfsm_and_controls() {
        let k = lfsm(0.7, 1.2);
        let grid = log_grid(&k, 1e-3, 10.0, 250);
        for c in [0.5f64, 2.0, 4.0] {
            let r = k.generated_residual(c, &grid, defaults::TOL_GENERATED).unwrap();
            assert!(r.pass, "{r}");
        }

        // zero kernel: identically satisfied
        let z = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::Zero,
            }],
            10.0,
        )
        .unwrap();
        let r = z.generated_residual(2.0, &grid, defaults::TOL_GENERATED).unwrap();
        assert_eq!(r.max_abs_residual, 0.0);

        // perturbed kernel: residual blows past 0.1 somewhere
        let perturbed = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::Sum(vec![
                    KernelShape::PowerLaw {
                        aplus: 1.0,
                        aminus: 0.0,
                        exponent: Hurst::new(0.7, 1.2).unwrap().beta(),
                    },
                    KernelShape::expr("u^2").unwrap(),
                ]),
            }],
            10.0,
        )
        .unwrap();
        let r = perturbed
            .generated_residual(2.0, &grid, defaults::TOL_GENERATED)
            .unwrap();
        assert!(!r.pass);
        assert!(r.max_abs_residual > 0.1, "{r}");
    }

    #[test]
    fn exponent_trivial_and_scaling_in_theta() {
        let k = lfsm(0.7, 1.2);
        let cfg = ExponentConfig {
            refine_check: false,
            ..Default::default()
        };
        let zero = charfun_exponent(&k, &[0.0], &[1.0], &cfg).unwrap();
        assert_eq!(zero.value, 0.0);

        // |2 theta|^alpha = 2^alpha |theta|^alpha pointwise, same mesh
        let alpha = 1.2f64;
        let one = charfun_exponent(&k, &[1.0], &[1.0], &cfg).unwrap();
        let two = charfun_exponent(&k, &[2.0], &[1.0], &cfg).unwrap();
        assert_relative_eq!(
            two.value,
            2.0f64.powf(alpha) * one.value,
            max_relative = 1e-10
        );

        // symmetry in the sign of theta is exact
        let neg = charfun_exponent(&k, &[-1.0], &[1.0], &cfg).unwrap();
        assert_eq!(neg.value, one.value);
    }

    #[test]
    fn exponent_self_similarity_single_time() {
        let k = lfsm(0.7, 1.2);
        let cfg = ExponentConfig::default();
        let one = charfun_exponent(&k, &[1.0], &[1.0], &cfg).unwrap();
        let double = charfun_exponent(&k, &[1.0], &[2.0], &cfg).unwrap();
        let ah = 1.2 * 0.7;
        assert_relative_eq!(
            double.value,
            2.0f64.powf(ah) * one.value,
            max_relative = 1e-3
        );
        assert!(one.refinement_delta < defaults::QUAD_REFINE_TOL);
    }

    #[test]
    fn self_similarity_report_and_negative_control() {
        let cfg = ExponentConfig::default();
        let k = lfsm(0.7, 1.2);
        let (report, rows) = check_self_similarity(
            &k,
            &[0.5, 2.0, 4.0],
            &[1.0, -0.5],
            &[1.0, 2.0],
            &cfg,
            defaults::TOL_QUAD_CHECK,
        )
        .unwrap();
        assert!(report.pass, "{report}");
        assert_eq!(rows.len(), 3);

        // a Gaussian bump is nowhere near self-similar
        let bump = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::expr("exp(-(u^2))").unwrap(),
            }],
            10.0,
        )
        .unwrap();
        let (report, rows) = check_self_similarity(
            &bump,
            &[4.0],
            &[1.0],
            &[1.0],
            &cfg,
            defaults::TOL_QUAD_CHECK,
        )
        .unwrap();
        assert!(!report.pass);
        assert!(rows[0].rel_discrepancy > 0.05, "{report}");
    }

    #[test]
    fn stationary_increments_hold_for_lfsm_and_two_fiber_kernels() {
        let cfg = ExponentConfig::default();
        let k = lfsm(0.7, 1.2);
        let r = check_stationary_increments(
            &k,
            0.7,
            &[1.0, -0.5],
            &[1.0, 2.0],
            &cfg,
            defaults::TOL_QUAD_CHECK,
        )
        .unwrap();
        assert!(r.pass, "{r}");

        let hurst = Hurst::new(0.6, 1.4).unwrap();
        let two_fiber = Kernel::new(
            hurst,
            vec![
                KernelFiber {
                    label: "x0".into(),
                    weight: 0.7,
                    shape: KernelShape::PowerLaw {
                        aplus: 1.0,
                        aminus: 0.3,
                        exponent: hurst.beta(),
                    },
                },
                KernelFiber {
                    label: "x1".into(),
                    weight: 1.8,
                    shape: KernelShape::PowerLaw {
                        aplus: 0.2,
                        aminus: 1.1,
                        exponent: hurst.beta(),
                    },
                },
            ],
            30.0,
        )
        .unwrap();
        let r = check_stationary_increments(
            &two_fiber,
            1.3,
            &[0.8, 0.4],
            &[0.5, 1.5],
            &cfg,
            defaults::TOL_QUAD_CHECK,
        )
        .unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn enlarging_the_window_never_shrinks_the_bulk() {
        // the integrand is |.|^alpha >= 0, so the numeric bulk is
        // monotone in the truncation window
        let k = lfsm(0.7, 0.8); // slow tails make the effect visible
        let mut prev = 0.0;
        for far in [1e2, 1e4, 1e6] {
            let cfg = ExponentConfig {
                far_cutoff: far,
                refine_check: false,
                ..Default::default()
            };
            let out = charfun_exponent(&k, &[1.0], &[1.0], &cfg).unwrap();
            assert!(
                out.bulk >= prev - 1e-12,
                "bulk shrank: {} -> {} at far = {far}",
                prev,
                out.bulk
            );
            prev = out.bulk;
        }
    }

    #[test]
    fn tail_is_fitted_not_truncated() {
        // slowest-decay case: the tail carries percent-level mass, so it
        // must be added from the power fit rather than dropped. Check
        // the fitted total against a much larger numeric window.
        let k = lfsm(0.7, 0.8);
        let cfg = ExponentConfig {
            refine_check: false,
            ..Default::default()
        };
        let out = charfun_exponent(&k, &[1.0], &[1.0], &cfg).unwrap();
        assert!(
            out.tail_fraction() > 1e-3,
            "expected a visible tail share, got {}",
            out.tail_fraction()
        );
        let wide = ExponentConfig {
            far_cutoff: 3e7,
            refine_check: false,
            ..Default::default()
        };
        let out_wide = charfun_exponent(&k, &[1.0], &[1.0], &wide).unwrap();
        assert_relative_eq!(out.value, out_wide.value, max_relative = 1e-5);
        assert!(out_wide.bulk > out.bulk); // mass moved from tail to bulk
    }

    #[test]
    fn non_integrable_combination_is_reported() {
        // G(u) = u: increments are constants, so |S|^alpha has a flat tail
        let linear = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::expr("u").unwrap(),
            }],
            10.0,
        )
        .unwrap();
        let cfg = ExponentConfig {
            refine_check: false,
            ..Default::default()
        };
        assert!(matches!(
            charfun_exponent(&linear, &[1.0], &[1.0], &cfg),
            Err(Error::NonIntegrable(_))
        ));
    }

    #[test]
    fn support_coverage_diagnostic() {
        let k = lfsm(0.7, 1.2);
        let grid = log_grid(&k, 1e-2, 5.0, 50);
        let cov = k.support_coverage(&[1.0], &grid);
        assert!(cov > 0.5, "coverage {cov}");
        let z = Kernel::new(
            Hurst::new(0.7, 1.2).unwrap(),
            vec![KernelFiber {
                label: "x0".into(),
                weight: 1.0,
                shape: KernelShape::Zero,
            }],
            10.0,
        )
        .unwrap();
        assert_eq!(z.support_coverage(&[1.0], &grid), 0.0);
    }
}
