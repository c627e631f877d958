//! Height ledger: archimedean and finite contributions per `m = D j^2`, with
//! dyadic-window aggregates.

use crate::output::{real, Table};
use qlat_core::chains::{square_class, ChainModel};
use qlat_core::eisenstein;
use qlat_core::green::Archimedean;
use qlat_core::{arith, Result};
use rayon::prelude::*;

/// Settings shared by every ledger row.
#[derive(Clone, Copy, Debug)]
pub struct LedgerParams {
    pub d: u64,
    pub kappa: f64,
    pub h_omega: f64,
    pub cusp_bound_constant: f64,
    pub aut: u64,
    pub shellmax: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeightLedgerRow {
    pub m: i64,
    pub archimedean_sum: f64,
    pub finite_sum: f64,
    pub height_estimate: f64,
    pub residual: f64,
    /// Empty when complete, otherwise the error that cut the row short.
    pub flag: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LedgerAggregate {
    pub x: u64,
    pub count: usize,
    pub archimedean: f64,
    pub finite: f64,
    /// Both sums divided by `X^{(b+1)/2} log X`.
    pub archimedean_normalized: f64,
    pub finite_normalized: f64,
    pub partial: bool,
}

/// `sum_P (Y.Z(m))_P log p` over the chain places.
pub fn finite_sum(chains: &[ChainModel], m: i64) -> Result<f64> {
    let mut s = 0.0;
    for c in chains {
        s += arith::rat_to_f64(&c.local_intersection(m as i128)?) * (c.p as f64).ln();
    }
    Ok(s)
}

pub fn ledger_row(arch: &Archimedean, chains: &[ChainModel], prm: &LedgerParams, m: i64) -> HeightLedgerRow {
    let row = || -> Result<HeightLedgerRow> {
        let b = arch.lattice().b()? as f64;
        let rep = arch.report(prm.d as i64, m, prm.kappa, prm.shellmax)?;
        let archimedean_sum = rep.phi / prm.aut as f64;
        let finite_sum = finite_sum(chains, m)?;
        let c = eisenstein::a_of_m_cached(&arch.cache, m, arch.p_trunc)?.c_value;
        let height_estimate = -c / 2.0 * prm.h_omega + prm.cusp_bound_constant * (m as f64).powf((2.0 + b) / 4.0);
        Ok(HeightLedgerRow {
            m,
            archimedean_sum,
            finite_sum,
            height_estimate,
            residual: archimedean_sum + finite_sum - height_estimate,
            flag: String::new(),
        })
    };
    row().unwrap_or_else(|e| HeightLedgerRow {
        m,
        archimedean_sum: f64::NAN,
        finite_sum: f64::NAN,
        height_estimate: f64::NAN,
        residual: f64::NAN,
        flag: e.to_string(),
    })
}

/// Rows for `m = D j^2`, `j` in `js`, in ascending order.
pub fn run_ledger(
    arch: &Archimedean,
    chains: &[ChainModel],
    prm: &LedgerParams,
    js: std::ops::RangeInclusive<u64>,
) -> Vec<HeightLedgerRow> {
    let ms: Vec<i64> = js.map(|j| (prm.d * j * j) as i64).collect();
    ms.par_iter().map(|&m| ledger_row(arch, chains, prm, m)).collect()
}

/// Sums over `S_{D,X}` for each `X`; rows must cover those `m`.
pub fn aggregate(rows: &[HeightLedgerRow], d: u64, b: usize, xs: &[u64]) -> Vec<LedgerAggregate> {
    xs.iter()
        .map(|&x| {
            let s = square_class(d, x);
            let hit: Vec<&HeightLedgerRow> = rows.iter().filter(|r| s.contains(&(r.m as u64))).collect();
            let norm = (x as f64).powf((b as f64 + 1.0) / 2.0) * (x as f64).ln();
            let archimedean: f64 = hit.iter().map(|r| r.archimedean_sum).sum();
            let finite: f64 = hit.iter().map(|r| r.finite_sum).sum();
            LedgerAggregate {
                x,
                count: hit.len(),
                archimedean,
                finite,
                archimedean_normalized: archimedean / norm,
                finite_normalized: finite / norm,
                partial: hit.len() != s.len() || hit.iter().any(|r| !r.flag.is_empty()),
            }
        })
        .collect()
}

pub fn rows_table(rows: &[HeightLedgerRow]) -> Table {
    let mut t = Table::new(&["m", "archimedean_sum", "finite_sum", "height_estimate", "residual", "flag"]);
    for r in rows {
        t.push(vec![
            r.m.to_string(),
            real(r.archimedean_sum),
            real(r.finite_sum),
            real(r.height_estimate),
            real(r.residual),
            r.flag.clone(),
        ]);
    }
    t
}

pub fn aggregate_table(aggs: &[LedgerAggregate]) -> Table {
    let mut t = Table::new(&[
        "X",
        "count",
        "archimedean",
        "finite",
        "archimedean_normalized",
        "finite_normalized",
        "partial",
    ]);
    for a in aggs {
        t.push(vec![
            a.x.to_string(),
            a.count.to_string(),
            real(a.archimedean),
            real(a.finite),
            real(a.archimedean_normalized),
            real(a.finite_normalized),
            (a.partial as u8).to_string(),
        ]);
    }
    t
}
