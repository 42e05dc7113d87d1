use rayon::prelude::*;

use crate::builder::HamiltonianSpec;
use crate::{Error, Result};

use super::{solve, BasisSpec, SolveOptions, SpectrumResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub result: SpectrumResult,
}

/// Worker count from QCIRC_THREADS, defaulting to the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("QCIRC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Solve `k` levels at every grid point. Points run concurrently but rows come
/// back in grid order and each point is computed independently, so the output
/// does not depend on the thread count.
pub fn sweep<F>(make: F, grid: &[f64], k: usize, opts: SolveOptions) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<(HamiltonianSpec, BasisSpec)> + Sync,
{
    if grid.is_empty() {
        return Err(Error::DimensionMismatch("empty sweep grid".into()));
    }
    let point = |(i, &p): (usize, &f64)| -> Result<SweepRow> {
        let wrap = |e: Error| Error::SweepPoint { index: i, source: Box::new(e) };
        let (spec, basis) = make(p).map_err(wrap)?;
        let result = solve(&spec, &basis, k, opts).map_err(wrap)?;
        Ok(SweepRow { param: p, result })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    pool.install(|| grid.par_iter().enumerate().map(point).collect())
}

/// `x` with 12 significant digits.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.11e}")
    }
}

/// CSV with header `param_unit,E0_GHz,...`.
pub fn sweep_csv(rows: &[SweepRow], param_header: &str) -> String {
    let k = rows.first().map_or(0, |r| r.result.eigenvalues.len());
    let mut out = String::from(param_header);
    for i in 0..k {
        out.push_str(&format!(",E{i}_GHz"));
    }
    out.push('\n');
    for r in rows {
        out.push_str(&format_sig(r.param));
        for e in &r.result.eigenvalues {
            out.push(',');
            out.push_str(&format_sig(*e));
        }
        out.push('\n');
    }
    out
}
