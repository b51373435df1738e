use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::experiment::{ExperimentConfig, Report};
use crate::adaptive::Scaling;

/// Column layout and sweep of one table family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableLayout {
    /// Relative L² error against ω.
    Error,
    Frequency,
    Subdomains,
    /// Mesh size with the Θ column.
    Mesh,
    Multilevel,
}

impl std::str::FromStr for TableLayout {
    type Err = crate::Error;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "error" => Ok(Self::Error),
            "frequency" => Ok(Self::Frequency),
            "subdomains" => Ok(Self::Subdomains),
            "mesh" => Ok(Self::Mesh),
            "multilevel" => Ok(Self::Multilevel),
            other => Err(crate::Error::InvalidInput(format!("unknown table '{other}'"))),
        }
    }
}

fn method(s: Scaling) -> &'static str {
    match s {
        Scaling::Multiplicity => "method1",
        Scaling::Deluxe => "method2",
    }
}

/// Two decimals, ties away from zero (`84.125` → `84.13`).
fn two_dp(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round() / 100.0)
}

/// `2019(84.13)`.
pub fn pnum_cell(pnum: usize, avg: f64) -> String {
    format!("{pnum}({})", two_dp(avg))
}

/// `81.75%`.
pub fn percent_cell(fraction: f64) -> String {
    format!("{}%", two_dp(100.0 * fraction))
}

fn side(n_total: usize) -> String {
    let r = (n_total as f64).sqrt().round() as usize;
    if r * r == n_total {
        format!("{r}^2")
    } else {
        n_total.to_string()
    }
}

pub fn emit_table(reports: &[Report], layout: TableLayout) -> String {
    let mut out = String::new();
    let head = match layout {
        TableLayout::Error => "omega,p,N_h,method,rel_l2_error",
        TableLayout::Frequency => "omega,p,N_h,method,lambda_min,lambda_max,pnum,ppnum,iter",
        TableLayout::Subdomains => "N_d,method,lambda_min,lambda_max,pnum,ppnum,iter",
        TableLayout::Mesh => "n,theta,method,lambda_min,lambda_max,pnum,ppnum,iter",
        TableLayout::Multilevel => "N_d,n,Tdofs,Fpnum,L,Cpnum,lambda_min,lambda_max,iter",
    };
    out.push_str(head);
    out.push('\n');
    for r in reports {
        let omega = format!("{}pi", fmt_num(r.omega / std::f64::consts::PI));
        let common = format!(
            "{},{:.4},{:.4},{},{},{}",
            method(r.scaling),
            r.lambda_min,
            r.lambda_max,
            pnum_cell(r.pnum, r.avg_per_interface),
            percent_cell(r.ppnum),
            r.iter
        );
        let _ = match layout {
            TableLayout::Error => writeln!(
                out,
                "{omega},{},{},{},{}",
                r.p,
                side(r.nh),
                method(r.scaling),
                r.rel_l2_error.map(|e| format!("{e:.3e}")).unwrap_or_default()
            ),
            TableLayout::Frequency => writeln!(out, "{omega},{},{},{common}", r.p, side(r.nh)),
            TableLayout::Subdomains => writeln!(out, "{},{common}", side(r.nd)),
            TableLayout::Mesh => writeln!(out, "{}^2,{},{common}", r.n_side, two_dp(r.theta)),
            TableLayout::Multilevel => writeln!(
                out,
                "{},{}^2,{},{},{},{},{:.4},{:.4},{}",
                side(r.nd),
                r.n_side,
                r.nh * r.p,
                r.coarse_dim,
                r.levels,
                r.coarsest_dofs.unwrap_or(r.coarse_dim),
                r.lambda_min,
                r.lambda_max,
                r.iter
            ),
        };
    }
    out
}

fn fmt_num(x: f64) -> String {
    if (x - x.round()).abs() < 1e-9 {
        format!("{}", x.round() as i64)
    } else {
        format!("{x}")
    }
}

/// Configurations of a table sweep at desk scale, derived from `base`
/// (example, seed and tolerances are kept).
pub fn sweep(layout: TableLayout, base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let with = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    let both = |c: ExperimentConfig| {
        [Scaling::Multiplicity, Scaling::Deluxe].map(|s| ExperimentConfig { scaling: s, ..c.clone() })
    };
    match layout {
        TableLayout::Error | TableLayout::Frequency => [(20.0, 13, 8), (40.0, 13, 15)]
            .into_iter()
            .flat_map(|(w, p, n)| {
                both(with(&|c| {
                    c.omega_over_pi = w;
                    c.p = p;
                    c.nd = 4;
                    c.n_side = n;
                    c.levels = 2;
                }))
            })
            .collect(),
        TableLayout::Subdomains => [3, 4, 5]
            .into_iter()
            .flat_map(|nd| {
                both(with(&|c| {
                    c.omega_over_pi = 20.0;
                    c.p = 10;
                    c.nd = nd;
                    c.n_side = 8;
                    c.levels = 2;
                }))
            })
            .collect(),
        TableLayout::Mesh => [6, 12, 18, 24]
            .into_iter()
            .flat_map(|n| {
                both(with(&|c| {
                    c.omega_over_pi = 20.0;
                    c.p = 9;
                    c.nd = 4;
                    c.n_side = n;
                    c.levels = 2;
                    c.theta = None;
                }))
            })
            .collect(),
        TableLayout::Multilevel => [2, 3]
            .into_iter()
            .map(|l| {
                with(&|c| {
                    c.omega_over_pi = 20.0;
                    c.p = 10;
                    c.nd = 4;
                    c.n_side = 8;
                    c.levels = l;
                    c.scaling = Scaling::Multiplicity;
                })
            })
            .collect(),
    }
}
