//! Adaptive quadrature for integrands with power-law endpoint
//! singularities, built for the α-norm integrals `∫ |Σ θ_k G_{t_k}|^α`.
//!
//! The integration domain is split into pieces at the integrand's
//! breakpoints. Within a piece, composite midpoint cells are graded
//! dyadically toward both endpoints (midpoint never evaluates at a kink
//! or pole), each cell is refined adaptively by point doubling, and a
//! symmetric ε-neighborhood of a singular endpoint is excluded and
//! compensated by the analytic integral of the leading power
//! `strength * |x - b|^lambda`. Tails beyond the bulk window are
//! estimated by a fitted power law.

use crate::defaults;
use crate::error::{Error, Result};
use crate::exec::{self, RunMode};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Leading local behavior `f(x) ~ strength * |x - endpoint|^lambda`.
#[derive(Copy, Clone, Debug)]
pub struct Sing {
    pub lambda: f64,
    pub strength: f64,
}

/// One smooth piece `[a, b]` with optional singular endpoint data.
#[derive(Clone, Debug)]
pub struct Piece {
    pub a: f64,
    pub b: f64,
    pub left: Option<Sing>,
    pub right: Option<Sing>,
}

#[derive(Clone, Debug)]
pub struct QuadConfig {
    /// Target relative tolerance for the bulk integral.
    pub rel_tol: f64,
    /// Midpoints per cell on the first try (doubled for the error
    /// estimate).
    pub base_points: usize,
    /// Maximum bisection depth per cell.
    pub max_depth: u32,
    /// Excluded ε-neighborhood of a singular endpoint, relative to the
    /// piece width.
    pub epsilon_rel: f64,
    /// Hard budget on integrand evaluations per call.
    pub max_evals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: defaults::QUAD_REL_TOL,
            base_points: 8,
            max_depth: 20,
            epsilon_rel: 1e-9,
            max_evals: 4_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuadOutcome {
    pub value: f64,
    pub evals: usize,
}

/// Integrate `f` over the given pieces.
pub fn integrate_pieces<F>(
    f: &F,
    pieces: &[Piece],
    cfg: &QuadConfig,
    mode: RunMode,
) -> Result<QuadOutcome>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let mut compensation = 0.0;
    for piece in pieces {
        let w = piece.b - piece.a;
        if !(w.is_finite() && w > 0.0) {
            continue;
        }
        let eps_l = endpoint_exclusion(piece.left, w, cfg)?;
        let eps_r = endpoint_exclusion(piece.right, w, cfg)?;
        if let (Some(s), true) = (piece.left, eps_l > 0.0) {
            compensation += s.strength * eps_l.powf(1.0 + s.lambda) / (1.0 + s.lambda);
        }
        if let (Some(s), true) = (piece.right, eps_r > 0.0) {
            compensation += s.strength * eps_r.powf(1.0 + s.lambda) / (1.0 + s.lambda);
        }
        let mid = 0.5 * (piece.a + piece.b);
        side_cells(piece.a, mid, eps_l, piece.left.is_some(), false, &mut cells);
        side_cells(piece.b, mid, eps_r, piece.right.is_some(), true, &mut cells);
    }
    if cells.is_empty() {
        return Ok(QuadOutcome {
            value: compensation,
            evals: 0,
        });
    }

    let evals = AtomicUsize::new(0);
    let m = cfg.base_points.max(2);

    // coarse pass fixes the absolute tolerance apportioned to each cell
    let coarse = exec::map_indexed(cells.len(), mode, |i| {
        let (a, b) = cells[i];
        evals.fetch_add(m, Ordering::Relaxed);
        midpoint_sum(f, a, b, m)
    });
    let scale: f64 =
        exec::pairwise_sum(&coarse.iter().map(|x| x.abs()).collect::<Vec<_>>()) + compensation.abs();
    let scale = scale.max(f64::MIN_POSITIVE);
    let n_cells = cells.len() as f64;

    let refined = exec::map_indexed(cells.len(), mode, |i| {
        let (a, b) = cells[i];
        let tol = 0.5 * cfg.rel_tol * (coarse[i].abs() + scale / n_cells);
        adaptive_cell(f, a, b, tol, cfg.max_depth, m, &evals, cfg.max_evals)
    });
    let value = exec::pairwise_sum(&refined) + compensation;
    Ok(QuadOutcome {
        value,
        evals: evals.load(Ordering::Relaxed),
    })
}

fn endpoint_exclusion(sing: Option<Sing>, width: f64, cfg: &QuadConfig) -> Result<f64> {
    match sing {
        Some(s) if s.lambda < 0.0 => {
            if s.lambda <= -1.0 + 1e-9 {
                return Err(Error::NonIntegrable(format!(
                    "endpoint exponent {} is at or below -1",
                    s.lambda
                )));
            }
            Ok(width * cfg.epsilon_rel)
        }
        _ => Ok(0.0),
    }
}

/// Dyadic cells from `endpoint` toward `mid`, graded down to the
/// excluded ε (or a few levels when the endpoint is smooth).
fn side_cells(
    endpoint: f64,
    mid: f64,
    eps: f64,
    graded: bool,
    right_side: bool,
    out: &mut Vec<(f64, f64)>,
) {
    let half = (mid - endpoint).abs();
    if half <= 0.0 {
        return;
    }
    let max_levels = if graded { 48 } else { 3 };
    let place = |offset: f64| {
        if right_side {
            endpoint - offset
        } else {
            endpoint + offset
        }
    };
    let mut outer = half;
    let mut levels = 0;
    loop {
        let inner = outer / 2.0;
        if levels >= max_levels || inner <= (2.0 * eps).max(half * 1e-14) {
            let lo = place(eps.max(0.0));
            let hi = place(outer);
            push_cell(lo, hi, out);
            break;
        }
        push_cell(place(inner), place(outer), out);
        outer = inner;
        levels += 1;
    }
}

fn push_cell(x: f64, y: f64, out: &mut Vec<(f64, f64)>) {
    let (a, b) = if x <= y { (x, y) } else { (y, x) };
    if b > a {
        out.push((a, b));
    }
}

fn midpoint_sum<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(a + (i as f64 + 0.5) * h);
    }
    acc * h
}

#[allow(clippy::too_many_arguments)]
fn adaptive_cell<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    m: usize,
    evals: &AtomicUsize,
    max_evals: usize,
) -> f64 {
    let i1 = midpoint_sum(f, a, b, m);
    let i2 = midpoint_sum(f, a, b, 2 * m);
    let used = evals.fetch_add(3 * m, Ordering::Relaxed);
    let err = (i2 - i1).abs() / 3.0;
    if err <= tol || depth == 0 || used > max_evals || (b - a) < 1e-15 * (a.abs() + b.abs()) {
        // one Richardson step on the h^2 midpoint error model
        return i2 + (i2 - i1) / 3.0;
    }
    let mid = 0.5 * (a + b);
    adaptive_cell(f, a, mid, 0.5 * tol, depth - 1, m, evals, max_evals)
        + adaptive_cell(f, mid, b, 0.5 * tol, depth - 1, m, evals, max_evals)
}

/// Estimate `∫_r^inf f` by fitting a power `f(x) ~ f(r) (x/r)^p` from
/// samples at `r` and `3r`. Errors out when the fitted slope is not
/// safely integrable. `f` here is the integrand re-parameterized so that
/// increasing argument means farther into the tail (both tails of a
/// two-sided integral call this with `x -> f(±x)`).
///
/// `scale_hint` is the magnitude of the bulk integral: when even a
/// conservative slope bound (x^-1.01) makes the tail smaller than
/// `1e-6` of it, the tail is taken as zero without fitting. That guards
/// against far-field samples that are pure rounding noise (contrasts
/// whose leading tail order cancels decay so fast that the samples sit
/// below machine epsilon of the individual kernel terms); a genuinely
/// integrable tail this small is at most ~1e-8 of the bulk.
pub fn power_tail<F: Fn(f64) -> f64>(
    f: &F,
    r: f64,
    scale_hint: f64,
    what: &str,
) -> Result<(f64, f64)> {
    debug_assert!(r > 0.0);
    let f1 = f(r);
    let f2 = f(3.0 * r);
    if f1 < 1e-300 || f1 * r * 100.0 <= scale_hint.abs() * 1e-6 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let p = (f2 / f1).ln() / 3.0f64.ln();
    if p.is_nan() || p >= -1.01 {
        return Err(Error::NonIntegrable(format!(
            "tail of {what} decays like x^{p:.4} at x = {r:.3e}, too slowly to integrate"
        )));
    }
    Ok((f1 * r / (-1.0 - p), p))
}
