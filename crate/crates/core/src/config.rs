//! Key-value (TOML) configuration schema shared by the CLI and tests.
//!
//! A config file describes, in any combination: a flow space
//! (`[flow]` + `[[flow.fibers]]`), a cocycle (`[cocycle]`), a
//! semi-additive functional (`[functional]`), a kernel (`[kernel]` +
//! optional `[[kernel.fibers]]`), kernel-check and simulation parameters
//! (`[check]`, `[simulate]`), verification sampling (`[verify]`) and the
//! solve-table layout (`[solve]`).
//!
//! User functions are expressions over the fiber coordinate (`u` or `v`,
//! both names are bound to the same value) and the fiber index `fi`;
//! per-fiber tables (`b1`, `j1`, `f1`, periods, weights) are written
//! inline.

use crate::cocycle::{Cocycle, Hurst, VerifyConfig};
use crate::error::{Error, Result};
use crate::exec::RunMode;
use crate::expr::Expr;
use crate::flowspace::{Action, CyclicFiber, Fiber, FlowSpace, Point, SpecialRep};
use crate::functional::{SemiAdditiveFunctional, SignSpec};
use crate::kernel::{ExponentConfig, Kernel, KernelFiber, KernelShape};
use crate::simulate::GridConfig;
use crate::{defaults, quadrature};
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub flow: Option<FlowConfig>,
    pub cocycle: Option<CocycleConfig>,
    pub functional: Option<FunctionalConfig>,
    pub kernel: Option<KernelConfig>,
    pub check: Option<CheckConfig>,
    pub verify: Option<VerifySection>,
    pub simulate: Option<SimSection>,
    pub solve: Option<SolveSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub variant: String,
    pub fibers: Vec<FiberConfig>,
    /// Cyclic only: expression for `q` over the fiber index `fi`, used
    /// for fibers that do not carry an explicit `period`.
    pub period_expr: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberConfig {
    pub label: String,
    #[serde(default = "one")]
    pub weight: f64,
    /// `q(z)` for cyclic spaces.
    pub period: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleConfig {
    /// `constant | coboundary | cyclic | rn | rn-nontrivial | transform`
    pub kind: String,
    /// sign-valued expression for coboundary/cyclic kinds
    pub b: Option<String>,
    /// per-fiber signs for the cyclic kind
    pub b1: Option<Vec<i8>>,
    /// positive expression of the coordinate for rn-nontrivial
    pub rn_b: Option<String>,
    pub special_fiber: Option<usize>,
    /// transform parameters
    pub h: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub log_branch: bool,
    pub sign: Option<Box<CocycleConfig>>,
    pub rn: Option<Box<CocycleConfig>>,
    /// `wrong-winding`: deliberately misapply the cyclic winding
    /// exponent (negative control for the verifier)
    pub negative_control: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    /// `one-semi | two-semi | coboundary | special-second`
    pub kind: String,
    pub g: Option<String>,
    pub j: Option<String>,
    pub h: Option<f64>,
    pub alpha: Option<f64>,
    #[serde(default)]
    pub log_branch: bool,
    pub b: Option<String>,
    pub b1: Option<Vec<i8>>,
    pub j1: Option<Vec<f64>>,
    /// coboundary generator F
    pub f: Option<String>,
    /// special-second per-base table
    pub f1: Option<Vec<f64>>,
    /// `drop-b1-indicator`: apply the cyclic log-branch j1 term on all
    /// fibers (negative control for the verifier)
    pub negative_control: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `lfsm | shapes`
    pub kind: String,
    pub h: f64,
    pub alpha: f64,
    #[serde(default)]
    pub log_branch: bool,
    #[serde(default = "one")]
    pub aplus: f64,
    #[serde(default)]
    pub aminus: f64,
    pub window: Option<f64>,
    pub fibers: Option<Vec<KernelFiberConfig>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFiberConfig {
    pub label: String,
    #[serde(default = "one")]
    pub weight: f64,
    /// `powerlaw | expr | zero`
    pub shape: String,
    #[serde(default = "one")]
    pub aplus: f64,
    #[serde(default)]
    pub aminus: f64,
    /// power-law exponent; defaults to `H - 1/alpha`
    pub exponent: Option<f64>,
    pub expr: Option<String>,
    /// optional additive expression perturbation (negative controls)
    pub plus_expr: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_cs")]
    pub cs: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "default_ts")]
    pub ts: Vec<f64>,
    #[serde(default = "default_shift")]
    pub shift: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_grid_umin")]
    pub grid_umin: f64,
    #[serde(default = "default_grid_umax")]
    pub grid_umax: f64,
    pub quad_points: Option<usize>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub log_range: Option<f64>,
    pub coord_range: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub ts: Vec<f64>,
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    pub selfsim_c: Option<f64>,
    #[serde(default = "default_per_level")]
    pub per_level: usize,
    #[serde(default = "default_eps_rel")]
    pub eps_rel: f64,
    #[serde(default = "default_extent")]
    pub extent_factor: f64,
    #[serde(default)]
    pub write_paths: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    #[serde(default = "default_cs")]
    pub cs: Vec<f64>,
    pub points: Option<Vec<SolvePoint>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePoint {
    pub fiber: usize,
    #[serde(default)]
    pub coord: f64,
}

impl CheckConfig {
    pub fn default_values() -> Self {
        CheckConfig {
            cs: default_cs(),
            thetas: default_thetas(),
            ts: default_ts(),
            shift: default_shift(),
            grid_points: default_grid_points(),
            grid_umin: default_grid_umin(),
            grid_umax: default_grid_umax(),
            quad_points: None,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_cs() -> Vec<f64> {
    vec![0.5, 2.0, 4.0]
}
fn default_thetas() -> Vec<f64> {
    vec![1.0]
}
fn default_ts() -> Vec<f64> {
    vec![1.0]
}
fn default_shift() -> f64 {
    0.7
}
fn default_grid_points() -> usize {
    500
}
fn default_grid_umin() -> f64 {
    1e-3
}
fn default_grid_umax() -> f64 {
    10.0
}
fn default_seed() -> u64 {
    defaults::SEED
}
fn default_per_level() -> usize {
    8
}
fn default_eps_rel() -> f64 {
    1e-6
}
fn default_extent() -> f64 {
    1e6
}

/// Parse a config file.
pub fn load(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

/// Parse config text.
pub fn parse(text: &str) -> Result<Config> {
    toml::from_str(text).map_err(|e| Error::config(format!("config parse error: {e}")))
}

/// Expression over a point: `u`/`v` bind the coordinate, `fi` the fiber
/// index.
pub fn point_fn(src: &str) -> Result<impl Fn(&Point) -> f64 + Send + Sync + Clone + 'static> {
    let expr = Expr::parse(src, &["u", "v", "fi"])?;
    Ok(move |p: &Point| expr.eval(&[p.coord, p.coord, p.fiber as f64]))
}

fn scalar_fn(src: &str) -> Result<impl Fn(f64) -> f64 + Send + Sync + 'static> {
    let expr = Expr::parse(src, &["u", "v"])?;
    Ok(move |u: f64| expr.eval(&[u, u]))
}

fn hurst_of(h: Option<f64>, alpha: Option<f64>, log_branch: bool, what: &str) -> Result<Hurst> {
    let alpha = alpha.ok_or_else(|| Error::config(format!("{what}: alpha is required")))?;
    if log_branch {
        Hurst::log_branch(alpha)
    } else {
        let h = h.ok_or_else(|| Error::config(format!("{what}: h is required")))?;
        Hurst::new(h, alpha)
    }
}

impl Config {
    pub fn build_flow(&self) -> Result<Arc<FlowSpace>> {
        let flow = self
            .flow
            .as_ref()
            .ok_or_else(|| Error::config("missing [flow] section"))?;
        let space = match flow.variant.as_str() {
            "identity" => FlowSpace::identity(
                flow.fibers
                    .iter()
                    .map(|f| Fiber {
                        label: f.label.clone(),
                        weight: f.weight,
                    })
                    .collect(),
            )?,
            "dissipative" => FlowSpace::dissipative(
                flow.fibers
                    .iter()
                    .map(|f| Fiber {
                        label: f.label.clone(),
                        weight: f.weight,
                    })
                    .collect(),
            )?,
            "cyclic" => {
                let period_expr = flow
                    .period_expr
                    .as_deref()
                    .map(|src| Expr::parse(src, &["fi"]))
                    .transpose()?;
                FlowSpace::cyclic(
                    flow.fibers
                        .iter()
                        .enumerate()
                        .map(|(i, f)| {
                            let period = match (f.period, &period_expr) {
                                (Some(q), _) => q,
                                (None, Some(e)) => e.eval(&[i as f64]),
                                (None, None) => {
                                    return Err(Error::config(format!(
                                        "cyclic fiber {:?} needs a period (or set period_expr)",
                                        f.label
                                    )))
                                }
                            };
                            Ok(CyclicFiber {
                                label: f.label.clone(),
                                weight: f.weight,
                                period,
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                )?
            }
            other => {
                return Err(Error::config(format!(
                    "unknown flow variant {other:?} (identity | dissipative | cyclic)"
                )))
            }
        };
        Ok(Arc::new(space))
    }

    pub fn build_cocycle(&self, space: &Arc<FlowSpace>) -> Result<Cocycle> {
        let spec = self
            .cocycle
            .as_ref()
            .ok_or_else(|| Error::config("missing [cocycle] section"))?;
        build_cocycle_spec(spec, space)
    }

    pub fn build_functional(&self, space: &Arc<FlowSpace>) -> Result<SemiAdditiveFunctional> {
        let spec = self
            .functional
            .as_ref()
            .ok_or_else(|| Error::config("missing [functional] section"))?;
        match spec.kind.as_str() {
            "one-semi" => {
                let g = spec
                    .g
                    .as_deref()
                    .ok_or_else(|| Error::config("one-semi: g expression is required"))?;
                Ok(SemiAdditiveFunctional::solve_one_semi(space, point_fn(g)?))
            }
            "two-semi" => {
                let hurst = hurst_of(spec.h, spec.alpha, spec.log_branch, "two-semi")?;
                let j = spec
                    .j
                    .as_deref()
                    .ok_or_else(|| Error::config("two-semi: j expression is required"))?;
                let signs = match space.as_ref() {
                    FlowSpace::Identity { .. } => SignSpec::Trivial,
                    FlowSpace::Dissipative { .. } => {
                        let b = spec.b.as_deref().ok_or_else(|| {
                            Error::config("two-semi on the dissipative flow needs b")
                        })?;
                        SignSpec::coboundary(point_fn(b)?)
                    }
                    FlowSpace::Cyclic { .. } => {
                        let b = spec
                            .b
                            .as_deref()
                            .ok_or_else(|| Error::config("two-semi on the cyclic flow needs b"))?;
                        let b1 = spec.b1.clone().ok_or_else(|| {
                            Error::config("two-semi on the cyclic flow needs b1")
                        })?;
                        SignSpec::cyclic(b1, point_fn(b)?)
                    }
                };
                match spec.negative_control.as_deref() {
                    None => SemiAdditiveFunctional::solve_two_semi(
                        space,
                        &hurst,
                        point_fn(j)?,
                        signs,
                        spec.j1.clone(),
                    ),
                    Some("drop-b1-indicator") => {
                        SemiAdditiveFunctional::solve_two_semi_dropping_b1_indicator(
                            space,
                            &hurst,
                            point_fn(j)?,
                            signs,
                            spec.j1.clone(),
                        )
                    }
                    Some(other) => Err(Error::config(format!(
                        "unknown functional negative control {other:?}"
                    ))),
                }
            }
            "coboundary" => {
                let f = spec
                    .f
                    .as_deref()
                    .ok_or_else(|| Error::config("coboundary: f expression is required"))?;
                let a = self.build_cocycle(space)?;
                Ok(SemiAdditiveFunctional::coboundary(a, point_fn(f)?))
            }
            "special-second" => {
                let f1 = spec
                    .f1
                    .clone()
                    .ok_or_else(|| Error::config("special-second: f1 table is required"))?;
                let a = self.build_cocycle(space)?;
                let rep = Arc::new(SpecialRep::from_cyclic(space)?);
                SemiAdditiveFunctional::special_second(a, f1, rep)
            }
            other => Err(Error::config(format!(
                "unknown functional kind {other:?} (one-semi | two-semi | coboundary | special-second)"
            ))),
        }
    }

    pub fn build_kernel(&self) -> Result<Kernel> {
        let spec = self
            .kernel
            .as_ref()
            .ok_or_else(|| Error::config("missing [kernel] section"))?;
        let hurst = hurst_of(Some(spec.h), Some(spec.alpha), spec.log_branch, "kernel")?;
        match spec.kind.as_str() {
            "lfsm" => {
                let mut k = Kernel::lfsm(&hurst, spec.aplus, spec.aminus)?;
                if let Some(w) = spec.window {
                    k = Kernel::new(hurst, k.fibers().to_vec(), w)?;
                }
                Ok(k)
            }
            "shapes" => {
                let fibers = spec
                    .fibers
                    .as_ref()
                    .ok_or_else(|| Error::config("kernel kind=shapes needs [[kernel.fibers]]"))?;
                let built = fibers
                    .iter()
                    .map(|f| {
                        let base = match f.shape.as_str() {
                            "powerlaw" => KernelShape::PowerLaw {
                                aplus: f.aplus,
                                aminus: f.aminus,
                                exponent: f.exponent.unwrap_or_else(|| hurst.beta()),
                            },
                            "expr" => KernelShape::expr(f.expr.as_deref().ok_or_else(|| {
                                Error::config(format!("fiber {:?}: expr is required", f.label))
                            })?)?,
                            "zero" => KernelShape::Zero,
                            other => {
                                return Err(Error::config(format!(
                                    "unknown shape {other:?} (powerlaw | expr | zero)"
                                )))
                            }
                        };
                        let shape = match &f.plus_expr {
                            Some(src) => {
                                KernelShape::Sum(vec![base, KernelShape::expr(src)?])
                            }
                            None => base,
                        };
                        Ok(KernelFiber {
                            label: f.label.clone(),
                            weight: f.weight,
                            shape,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Kernel::new(hurst, built, spec.window.unwrap_or(50.0))
            }
            other => Err(Error::config(format!(
                "unknown kernel kind {other:?} (lfsm | shapes)"
            ))),
        }
    }

    /// Verification sampling parameters with the given default tolerance.
    pub fn verify_config(&self, default_tol: f64) -> VerifyConfig {
        let section = self.verify.as_ref();
        VerifyConfig {
            samples: section.and_then(|s| s.samples).unwrap_or(defaults::SAMPLES),
            seed: section.and_then(|s| s.seed).unwrap_or(defaults::SEED),
            tol: section.and_then(|s| s.tol).unwrap_or(default_tol),
            log_range: section
                .and_then(|s| s.log_range)
                .unwrap_or(defaults::LOG_RANGE),
            coord_range: section
                .and_then(|s| s.coord_range)
                .unwrap_or(defaults::COORD_RANGE),
            mode: RunMode::default(),
        }
    }

    pub fn exponent_config(&self) -> ExponentConfig {
        let mut cfg = ExponentConfig::default();
        if let Some(check) = &self.check {
            if let Some(n) = check.quad_points {
                cfg.quad = quadrature::QuadConfig {
                    base_points: n.max(2),
                    ..cfg.quad
                };
            }
        }
        cfg
    }

    pub fn grid_config(&self) -> GridConfig {
        match &self.simulate {
            Some(s) => GridConfig {
                per_level: s.per_level,
                eps_rel: s.eps_rel,
                extent_factor: s.extent_factor,
            },
            None => GridConfig::default(),
        }
    }
}

fn build_cocycle_spec(spec: &CocycleConfig, space: &Arc<FlowSpace>) -> Result<Cocycle> {
    match spec.kind.as_str() {
        "constant" => Ok(Cocycle::constant_one(Action::Space(space.clone()))),
        "rn" => Ok(Cocycle::radon_nikodym(space)),
        "coboundary" => {
            let b = spec
                .b
                .as_deref()
                .ok_or_else(|| Error::config("coboundary cocycle needs b"))?;
            Cocycle::coboundary(space, point_fn(b)?)
        }
        "cyclic" => {
            let b = spec
                .b
                .as_deref()
                .ok_or_else(|| Error::config("cyclic cocycle needs b"))?;
            let b1 = spec
                .b1
                .clone()
                .ok_or_else(|| Error::config("cyclic cocycle needs b1"))?;
            match spec.negative_control.as_deref() {
                None => Cocycle::cyclic(space, &b1, point_fn(b)?),
                Some("wrong-winding") => {
                    Cocycle::cyclic_wrong_winding(space, &b1, point_fn(b)?)
                }
                Some(other) => Err(Error::config(format!(
                    "unknown cocycle negative control {other:?}"
                ))),
            }
        }
        "rn-nontrivial" => {
            let b = spec
                .rn_b
                .as_deref()
                .ok_or_else(|| Error::config("rn-nontrivial needs rn_b"))?;
            let fiber = spec.special_fiber.unwrap_or(0);
            Cocycle::nontrivial_rn(space, scalar_fn(b)?, fiber)
        }
        "transform" => {
            let hurst = hurst_of(spec.h, spec.alpha, spec.log_branch, "transform cocycle")?;
            let sign = match &spec.sign {
                Some(sub) => build_cocycle_spec(sub, space)?,
                None => Cocycle::constant_one(Action::Space(space.clone())),
            };
            let rn = match &spec.rn {
                Some(sub) => build_cocycle_spec(sub, space)?,
                None => Cocycle::radon_nikodym(space),
            };
            Cocycle::transform_b(&hurst, sign, rn)
        }
        other => Err(Error::config(format!(
            "unknown cocycle kind {other:?} \
             (constant | coboundary | cyclic | rn | rn-nontrivial | transform)"
        ))),
    }
}
