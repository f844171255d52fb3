//! Composite Gauss–Legendre quadrature on `[-T_max, T_max]` and the averaging
//! density `p(t) = π / (1 + cosh 2πt)`.
//!
//! `p` has antiderivative `tanh(πt)/2`, so the mass outside `[-T, T]` is
//! `1 − tanh(πT) = 2/(e^{2πT} + 1)`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{max_abs_diff, CMatrix};

/// How many times the node count may be doubled while certifying.
pub const MAX_DOUBLINGS: usize = 4;
/// Bisection depth limit for the adaptive fallback.
pub const MAX_BISECTIONS: usize = 40;
/// Leaf panels allowed per initial panel in the adaptive fallback.
pub const MAX_LEAVES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub t_max: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            t_max: 8.0,
            panels: 16,
            nodes_per_panel: 16,
        }
    }
}

/// Outcome of a doubling test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Change between the last two node counts (max entry for matrices),
    /// summed over panels when the adaptive fallback ran.
    pub residual: f64,
    /// Node count per panel at which the returned value was computed.
    pub nodes_per_panel: usize,
    /// Number of panels in the final partition.
    pub panels: usize,
    pub tail_mass: f64,
}

/// `p(t) = π / (1 + cosh 2πt)`.
pub fn averaging_density(t: f64) -> f64 {
    // e^{-2π|t|} form avoids overflow of cosh.
    let e = (-2.0 * PI * t.abs()).exp();
    2.0 * PI * e / (1.0 + e).powi(2)
}

/// `∫_{-T}^{T} p = tanh(πT)`.
pub fn truncated_mass(t_max: f64) -> f64 {
    (PI * t_max).tanh()
}

/// `∫_{|t|>T} p = 2/(e^{2πT} + 1)`.
pub fn tail_mass(t_max: f64) -> f64 {
    2.0 / ((2.0 * PI * t_max).exp() + 1.0)
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        if self.panels == 0 || self.nodes_per_panel == 0 {
            return Err(Error::InvalidArgument(
                "panels and nodes_per_panel must be ≥ 1".into(),
            ));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self {
            nodes_per_panel: self.nodes_per_panel * 2,
            ..*self
        }
    }

    /// Nodes and plain Gauss–Legendre weights on `[-t_max, t_max]`, ascending in `t`.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let base = base_rule(self.nodes_per_panel);
        let h = 2.0 * self.t_max / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.nodes_per_panel);
        for k in 0..self.panels {
            let a = -self.t_max + k as f64 * h;
            let mid = a + 0.5 * h;
            for &(x, w) in &base {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    /// Nodes with weights multiplied by `p(t)`.
    pub fn p_weighted_nodes(&self) -> Vec<(f64, f64)> {
        self.nodes()
            .into_iter()
            .map(|(t, w)| (t, w * averaging_density(t)))
            .collect()
    }
}

/// Values at the nodes (in parallel) followed by an ordered sum.
fn sum_scalar(nodes: &[(f64, f64)], f: &(dyn Fn(f64) -> Result<f64> + Sync)) -> Result<f64> {
    let vals: Vec<f64> = nodes
        .par_iter()
        .map(|&(t, w)| f(t).map(|v| w * v))
        .collect::<Result<_>>()?;
    Ok(vals.iter().sum())
}

fn sum_matrix(
    nodes: &[(f64, f64)],
    f: &(dyn Fn(f64) -> Result<CMatrix> + Sync),
) -> Result<CMatrix> {
    let vals: Vec<CMatrix> = nodes
        .par_iter()
        .map(|&(t, w)| f(t).map(|v| v.scale(w)))
        .collect::<Result<_>>()?;
    let mut it = vals.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidArgument("empty quadrature grid".into()))?;
    Ok(it.fold(first, |acc, v| acc + v))
}

/// `∫ k(t) f(t) dt` over `[-t_max, t_max]` for a weight kernel `k`.
pub fn integrate_scalar(
    spec: &QuadratureSpec,
    kernel: impl Fn(f64) -> f64,
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<f64> {
    spec.validate()?;
    let nodes: Vec<(f64, f64)> = spec
        .nodes()
        .into_iter()
        .map(|(t, w)| (t, w * kernel(t)))
        .collect();
    sum_scalar(&nodes, f)
}

pub fn integrate_matrix(
    spec: &QuadratureSpec,
    kernel: impl Fn(f64) -> f64,
    f: &(dyn Fn(f64) -> Result<CMatrix> + Sync),
) -> Result<CMatrix> {
    spec.validate()?;
    let nodes: Vec<(f64, f64)> = spec
        .nodes()
        .into_iter()
        .map(|(t, w)| (t, w * kernel(t)))
        .collect();
    sum_matrix(&nodes, f)
}

/// Values that can be accumulated by a quadrature rule.
trait Accum: Sized + Send {
    fn scaled(self, w: f64) -> Self;
    fn plus(self, other: Self) -> Self;
    fn dist(&self, other: &Self) -> f64;
}

impl Accum for f64 {
    fn scaled(self, w: f64) -> Self {
        self * w
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn dist(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Accum for CMatrix {
    fn scaled(self, w: f64) -> Self {
        self.scale(w)
    }
    fn plus(self, other: Self) -> Self {
        self + other
    }
    fn dist(&self, other: &Self) -> f64 {
        max_abs_diff(self, other)
    }
}

fn base_rule(nodes: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("node count is positive"));
    let mut base: Vec<(f64, f64)> = rule.as_node_weight_pairs().to_vec();
    base.sort_by(|a, b| a.0.total_cmp(&b.0));
    base
}

fn panel_sum<T: Accum>(
    a: f64,
    b: f64,
    rule: &[(f64, f64)],
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    f: &(dyn Fn(f64) -> Result<T> + Sync),
) -> Result<T> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc: Option<T> = None;
    for &(x, w) in rule {
        let t = mid + half * x;
        let v = f(t)?.scaled(half * w * kernel(t));
        acc = Some(match acc {
            None => v,
            Some(s) => s.plus(v),
        });
    }
    acc.ok_or_else(|| Error::InvalidArgument("empty quadrature rule".into()))
}

struct Refined<T> {
    value: T,
    residual: f64,
    panels: usize,
}

/// Compares the `n`- and `2n`-node rules on `[a, b]` and bisects until the
/// difference is below the panel's share of `tol`.
#[allow(clippy::too_many_arguments)]
fn refine<T: Accum>(
    a: f64,
    b: f64,
    depth: usize,
    leaves: &mut usize,
    share: f64,
    coarse: &[(f64, f64)],
    fine: &[(f64, f64)],
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    f: &(dyn Fn(f64) -> Result<T> + Sync),
) -> Result<Refined<T>> {
    let lo = panel_sum(a, b, coarse, kernel, f)?;
    let hi = panel_sum(a, b, fine, kernel, f)?;
    let err = lo.dist(&hi);
    if err <= share || depth == MAX_BISECTIONS || *leaves >= MAX_LEAVES {
        *leaves += 1;
        return Ok(Refined {
            value: hi,
            residual: err,
            panels: 1,
        });
    }
    let m = 0.5 * (a + b);
    let left = refine(
        a,
        m,
        depth + 1,
        leaves,
        0.5 * share,
        coarse,
        fine,
        kernel,
        f,
    )?;
    let right = refine(
        m,
        b,
        depth + 1,
        leaves,
        0.5 * share,
        coarse,
        fine,
        kernel,
        f,
    )?;
    Ok(Refined {
        value: left.value.plus(right.value),
        residual: left.residual + right.residual,
        panels: left.panels + right.panels,
    })
}

/// Doubles `nodes_per_panel` until successive values differ by less than
/// `tol`; if that fails, bisects the panels whose doubling residual is too
/// large, keeping the original node pair.
fn certify<T: Accum>(
    spec: &QuadratureSpec,
    tol: f64,
    kernel: &(dyn Fn(f64) -> f64 + Sync),
    f: &(dyn Fn(f64) -> Result<T> + Sync),
) -> Result<(T, Certificate)> {
    spec.validate()?;
    let eval = |s: &QuadratureSpec| -> Result<T> {
        let nodes: Vec<(f64, f64)> = s
            .nodes()
            .into_iter()
            .map(|(t, w)| (t, w * kernel(t)))
            .collect();
        let vals: Vec<T> = nodes
            .par_iter()
            .map(|&(t, w)| f(t).map(|v| v.scaled(w)))
            .collect::<Result<_>>()?;
        vals.into_iter()
            .reduce(Accum::plus)
            .ok_or_else(|| Error::InvalidArgument("empty quadrature grid".into()))
    };
    let mut current = *spec;
    let mut prev = eval(&current)?;
    for _ in 0..MAX_DOUBLINGS {
        let next_spec = current.doubled();
        let next = eval(&next_spec)?;
        let residual = prev.dist(&next);
        prev = next;
        current = next_spec;
        if residual < tol {
            return Ok((
                prev,
                Certificate {
                    residual,
                    nodes_per_panel: current.nodes_per_panel,
                    panels: current.panels,
                    tail_mass: tail_mass(spec.t_max),
                },
            ));
        }
    }

    let coarse = base_rule(spec.nodes_per_panel);
    let fine = base_rule(2 * spec.nodes_per_panel);
    let h = 2.0 * spec.t_max / spec.panels as f64;
    // Half the budget, so the summed residual stays strictly below `tol`.
    let share = 0.5 * tol / spec.panels as f64;
    let parts: Vec<Refined<T>> = (0..spec.panels)
        .into_par_iter()
        .map(|k| {
            let a = -spec.t_max + k as f64 * h;
            refine(a, a + h, 0, &mut 0, share, &coarse, &fine, kernel, f)
        })
        .collect::<Result<_>>()?;
    let residual: f64 = parts.iter().map(|p| p.residual).sum();
    let panels: usize = parts.iter().map(|p| p.panels).sum();
    if residual >= tol {
        return Err(Error::QuadratureNotConverged {
            residual,
            nodes_per_panel: fine.len(),
        });
    }
    let value = parts
        .into_iter()
        .map(|p| p.value)
        .reduce(Accum::plus)
        .ok_or_else(|| Error::InvalidArgument("empty quadrature grid".into()))?;
    Ok((
        value,
        Certificate {
            residual,
            nodes_per_panel: fine.len(),
            panels,
            tail_mass: tail_mass(spec.t_max),
        },
    ))
}

pub fn integrate_scalar_certified(
    spec: &QuadratureSpec,
    tol: f64,
    kernel: impl Fn(f64) -> f64 + Sync,
    f: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<(f64, Certificate)> {
    certify(spec, tol, &kernel, f)
}

pub fn integrate_matrix_certified(
    spec: &QuadratureSpec,
    tol: f64,
    kernel: impl Fn(f64) -> f64 + Sync,
    f: &(dyn Fn(f64) -> Result<CMatrix> + Sync),
) -> Result<(CMatrix, Certificate)> {
    certify(spec, tol, &kernel, f)
}
