use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use qlat::config::{load_chain, load_lattice, load_point};
use qlat::criteria::{self, SuiteInputs, CRITERIA};
use qlat::ledger::{aggregate, aggregate_table, rows_table, run_ledger, LedgerParams};
use qlat::output::{emit, rational, real, Table};
use qlat::{CliError, ExitCode, ExperimentConfig};
use qlat_core::chains::{square_class, ChainModel};
use qlat_core::density::{count_brute, LocalDensity, DEFAULT_BRUTE_BUDGET};
use qlat_core::green::Archimedean;
use qlat_core::{eisenstein, reduce, Enumerator, IntegralLattice};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "qlat", version, about = "Experiments on quadratic lattices of signature (b,2)")]
struct Cli {
    /// key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Local densities mu_p(m, n).
    Density(DensityArgs),
    /// Lattice vectors with Q = m in Omega_{<=T}.
    Count(CountArgs),
    /// Eisenstein coefficient estimates a(m), c(m).
    Eisenstein(EisensteinArgs),
    /// Archimedean contributions at the period point.
    Green(GreenArgs),
    /// Reduction chain levels.
    Chain(ChainArgs),
    /// Height ledger over m = D j^2.
    Ledger(LedgerArgs),
    /// Acceptance battery.
    Suite(SuiteArgs),
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct DensityArgs {
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, value_enum, default_value_t = Method::Recursion)]
    method: Method,
    /// Also print the good / bad / zero split.
    #[arg(long)]
    parts: bool,
    #[command(subcommand)]
    sub: Option<DensitySub>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Method {
    Brute,
    Recursion,
}

#[derive(Subcommand)]
enum DensitySub {
    /// Recursion against brute force for p <= pmax, m <= mmax, n <= 3.
    Verify {
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        pmax: u64,
        #[arg(long, default_value_t = 40)]
        mmax: i64,
        #[arg(long, default_value_t = 3)]
        nmax: u32,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long)]
    m: i64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// List the vectors with -Q(lambda_x).
    #[arg(long)]
    vectors: bool,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct EisensteinArgs {
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long = "D")]
    d: Option<u64>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    ptrunc: Option<u64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[command(subcommand)]
    sub: Option<EisensteinSub>,
}

#[derive(Subcommand)]
enum EisensteinSub {
    /// m = D j^2 for j = 1..jmax.
    Sweep {
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long = "D")]
        d: Option<u64>,
        #[arg(long)]
        jmax: Option<u64>,
        #[arg(long)]
        ptrunc: Option<u64>,
        #[arg(long)]
        kappa: Option<f64>,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct GreenArgs {
    #[arg(long)]
    lattice: Option<PathBuf>,
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long)]
    m: Option<i64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[command(subcommand)]
    sub: Option<GreenSub>,
}

#[derive(Subcommand)]
enum GreenSub {
    /// Rows for m in [mmin, mmax] with m / D a square.
    Sweep {
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long)]
        mmin: i64,
        #[arg(long)]
        mmax: i64,
        #[arg(long = "D")]
        d: Option<u64>,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// m in [X, 2X) with A_er(m) > m^{b/2}.
    Badset {
        #[arg(long)]
        lattice: Option<PathBuf>,
        #[arg(long)]
        point: Option<PathBuf>,
        #[arg(long = "X")]
        x: i64,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ChainArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    m: Option<i64>,
    #[command(subcommand)]
    sub: Option<ChainSub>,
}

#[derive(Subcommand)]
enum ChainSub {
    /// Per-level counts with Q in S_{D,X}.
    Sweep {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long = "D")]
        d: Option<u64>,
        #[arg(long = "X")]
        x: u64,
    },
    /// Successive minima of levels n0..=nmax.
    Profile {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        nmax: u32,
    },
}

#[derive(Args)]
struct LedgerArgs {
    /// Emit the per-X aggregates instead of the rows.
    #[arg(long)]
    aggregate: bool,
}

#[derive(Args)]
struct SuiteArgs {
    /// Comma-separated criterion numbers (default: all).
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
}

struct Ctx {
    cfg: ExperimentConfig,
    out: Option<PathBuf>,
}

impl Ctx {
    fn lattice(&self, p: &Option<PathBuf>) -> Result<IntegralLattice, CliError> {
        load_lattice(p.as_deref().unwrap_or(&self.cfg.lattice))
    }

    fn archimedean(&self, lat: &Option<PathBuf>, pt: &Option<PathBuf>) -> Result<Archimedean, CliError> {
        let l = self.lattice(lat)?;
        let point = load_point(&l, pt.as_deref().unwrap_or(&self.cfg.point))?;
        let mut ar = Archimedean::new(&l, &point)?;
        ar.p_trunc = self.cfg.p_trunc;
        Ok(ar)
    }

    fn chain(&self, p: &Option<PathBuf>) -> Result<ChainModel, CliError> {
        match p {
            Some(p) => load_chain(p),
            None => load_chain(
                self.cfg
                    .chains
                    .first()
                    .ok_or_else(|| CliError::Config("no chain model given".into()))?,
            ),
        }
    }

    fn emit(&self, t: &Table) -> Result<(), CliError> {
        emit(&t.render(&self.cfg.hash())?, self.out.as_deref())
    }
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

fn density(ctx: &Ctx, a: &DensityArgs) -> Result<(), CliError> {
    if let Some(DensitySub::Verify { lattice, pmax, mmax, nmax }) = &a.sub {
        let lat = ctx.lattice(lattice)?;
        let r = lat.rank();
        let mut t = Table::new(&["p", "m", "n", "mu_num", "mu_den", "brute_match", "deviation"]);
        for p in qlat_core::arith::primes_up_to(*pmax) {
            let ld = LocalDensity::new(&lat, p)?;
            let rows = (1..=*nmax)
                .flat_map(|n| (0..=*mmax).map(move |m| (n, m)))
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(n, m)| -> qlat_core::Result<Vec<String>> {
                    let mu = if ld.maximal { ld.mu_p(m, n)?.value } else { ld.mu_general(m, n)? };
                    let scale = num_traits::pow(BigInt::from(p), n as usize * (r - 1));
                    let brute = BigRational::new(count_brute(&lat, p, n, m, DEFAULT_BRUTE_BUDGET)?, scale);
                    Ok(vec![
                        p.to_string(),
                        m.to_string(),
                        n.to_string(),
                        mu.numer().to_string(),
                        mu.denom().to_string(),
                        ((mu == brute) as u8).to_string(),
                        rational(&(&mu - &brute)),
                    ])
                })
                .collect::<qlat_core::Result<Vec<_>>>()?;
            for row in rows {
                t.push(row);
            }
        }
        return ctx.emit(&t);
    }
    let lat = ctx.lattice(&a.lattice)?;
    let (p, m, n) = (need(a.p, "p")?, need(a.m, "m")?, need(a.n, "n")?);
    let mut t = Table::new(&["p", "m", "n", "mu"]);
    let mut row = vec![p.to_string(), m.to_string(), n.to_string()];
    match a.method {
        Method::Brute => {
            let scale = num_traits::pow(BigInt::from(p), n as usize * (lat.rank() - 1));
            let mu = |c: BigInt| rational(&BigRational::new(c, scale.clone()));
            row.push(mu(count_brute(&lat, p, n, m, DEFAULT_BRUTE_BUDGET)?));
            if a.parts {
                let (g, b, z) = qlat_core::density::classify_solutions(&lat, p, n, m, DEFAULT_BRUTE_BUDGET)?;
                t = Table::new(&["p", "m", "n", "mu", "good", "bad", "zero"]);
                row.extend([g, b, z].into_iter().map(mu));
            }
        }
        Method::Recursion => {
            let ld = LocalDensity::new(&lat, p)?;
            if !ld.maximal {
                return Err(CliError::Config(format!("lattice is not maximal at {p}; use --method brute")));
            }
            let v = ld.mu_p(m, n)?;
            row.push(rational(&v.value));
            if a.parts {
                let (g, b, z) = v
                    .parts
                    .ok_or_else(|| CliError::Config("no decomposition available at this level".into()))?;
                t = Table::new(&["p", "m", "n", "mu", "good", "bad", "zero"]);
                row.extend([g, b, z].iter().map(rational));
            }
        }
    }
    t.push(row);
    ctx.emit(&t)
}

fn count(ctx: &Ctx, a: &CountArgs) -> Result<(), CliError> {
    let lat = ctx.lattice(&a.lattice)?;
    let point = load_point(&lat, a.point.as_deref().unwrap_or(&ctx.cfg.point))?;
    let en = Enumerator::new(&lat, &point)?;
    if a.vectors {
        let mut t = Table::new(&["vector", "neg_q_x"]);
        for (v, qx) in en.representations_with_qx(a.m as i128, a.t)? {
            let s: Vec<String> = v.iter().map(i128::to_string).collect();
            t.push(vec![s.join(" "), real(qx)]);
        }
        return ctx.emit(&t);
    }
    let c = en.count_thresholds(a.m as i128, &[a.t])?[0];
    let mut t = Table::new(&["m", "T", "count"]);
    t.push(vec![a.m.to_string(), real(a.t), c.to_string()]);
    ctx.emit(&t)
}

const EIS_HEADER: [&str; 6] = ["m", "a", "c", "trunc_error", "sigma_k", "sigma_logderiv"];

fn eisenstein_row(cache: &qlat_core::DensityCache, d: u64, m: i64, ptrunc: u64, kappa: f64) -> qlat_core::Result<Vec<String>> {
    let est = eisenstein::a_of_m_cached(cache, m, ptrunc)?;
    let sig = eisenstein::sigma_m_cached(cache, d as i64, m)?;
    Ok(vec![
        m.to_string(),
        real(est.a_value),
        real(est.c_value),
        real(est.trunc_error),
        real(sig.value_at_k),
        real(sig.logderiv_at_k + kappa),
    ])
}

fn eisenstein_cmd(ctx: &Ctx, a: &EisensteinArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let mut t = Table::new(&EIS_HEADER);
    match &a.sub {
        Some(EisensteinSub::Sweep { lattice, d, jmax, ptrunc, kappa }) => {
            let lat = ctx.lattice(lattice)?;
            let cache = qlat_core::DensityCache::new(&lat);
            let d = d.unwrap_or(cfg.d);
            let rows = (1..=jmax.unwrap_or(cfg.jmax))
                .into_par_iter()
                .map(|j| {
                    let m = (d * j * j) as i64;
                    eisenstein_row(&cache, d, m, ptrunc.unwrap_or(cfg.p_trunc), kappa.unwrap_or(cfg.kappa))
                })
                .collect::<qlat_core::Result<Vec<_>>>()?;
            rows.into_iter().for_each(|r| t.push(r));
        }
        None => {
            let lat = ctx.lattice(&a.lattice)?;
            let cache = qlat_core::DensityCache::new(&lat);
            let d = a.d.unwrap_or(cfg.d);
            let row = eisenstein_row(
                &cache,
                d,
                need(a.m, "m")?,
                a.ptrunc.unwrap_or(cfg.p_trunc),
                a.kappa.unwrap_or(cfg.kappa),
            )?;
            t.push(row);
        }
    }
    ctx.emit(&t)
}

const GREEN_HEADER: [&str; 9] = ["m", "count", "A", "A_mt", "A_er", "phi_tilde", "R_x", "Phi", "uncertainty"];

fn green_row(ar: &Archimedean, cfg: &ExperimentConfig, d: u64, m: i64, kappa: f64) -> qlat_core::Result<Vec<String>> {
    let r = ar.report(d as i64, m, kappa, cfg.shellmax)?;
    Ok(vec![
        m.to_string(),
        r.vector_count.to_string(),
        real(r.a),
        real(r.a_mt),
        real(r.a_er),
        real(r.phi_tilde),
        real(r.r_x),
        real(r.phi),
        real(r.uncertainty),
    ])
}

fn green(ctx: &Ctx, a: &GreenArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    match &a.sub {
        Some(GreenSub::Badset { lattice, point, x }) => {
            let ar = ctx.archimedean(lattice, point)?;
            let mut t = Table::new(&["m", "A_er"]);
            let bad = ar.classify_bad(*x)?;
            let rows = bad.par_iter().map(|&m| Ok((m, ar.a_error(m)?))).collect::<qlat_core::Result<Vec<_>>>()?;
            for (m, er) in rows {
                t.push(vec![m.to_string(), real(er)]);
            }
            t.note(format!("X={x} bad={}", bad.len()));
            ctx.emit(&t)
        }
        Some(GreenSub::Sweep { lattice, point, mmin, mmax, d, kappa }) => {
            let ar = ctx.archimedean(lattice, point)?;
            let d = d.unwrap_or(cfg.d);
            let ms: Vec<i64> = (*mmin.max(&1)..=*mmax)
                .filter(|&m| m as u64 % d == 0 && qlat_core::arith::is_square(m as u64 / d))
                .collect();
            let kappa = kappa.unwrap_or(cfg.kappa);
            let rows = ms
                .par_iter()
                .map(|&m| green_row(&ar, cfg, d, m, kappa))
                .collect::<qlat_core::Result<Vec<_>>>()?;
            let mut t = Table::new(&GREEN_HEADER);
            rows.into_iter().for_each(|r| t.push(r));
            ctx.emit(&t)
        }
        None => {
            let ar = ctx.archimedean(&a.lattice, &a.point)?;
            let mut t = Table::new(&GREEN_HEADER);
            t.push(green_row(&ar, cfg, cfg.d, need(a.m, "m")?, a.kappa.unwrap_or(cfg.kappa))?);
            ctx.emit(&t)
        }
    }
}

fn chain_header(r: usize) -> Vec<String> {
    let mut h = vec!["n".to_string()];
    h.extend((1..=r).map(|j| format!("mu_{j}")));
    h.push(format!("a_{r}"));
    h.push("count".into());
    h
}

fn chain_row(model: &ChainModel, n: u32, count: u64) -> qlat_core::Result<(Vec<String>, i128)> {
    let level = model.level(n)?;
    let mins = reduce::minima_of(&level.short)?;
    let mut row = vec![n.to_string()];
    row.extend(mins.mu.iter().map(|&x| real(x)));
    row.push(real(*mins.a.last().unwrap_or(&f64::NAN)));
    row.push(count.to_string());
    Ok((row, mins.mu_sq[0]))
}

fn chain(ctx: &Ctx, a: &ChainArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    match &a.sub {
        Some(ChainSub::Profile { model, nmax }) => {
            let model = ctx.chain(model)?;
            let mut t = Table::new(&chain_header(model.rank()));
            for n in model.n0..=*nmax {
                t.push(chain_row(&model, n, 0)?.0);
            }
            ctx.emit(&t)
        }
        Some(ChainSub::Sweep { model, d, x }) => {
            let model = ctx.chain(model)?;
            let d = d.unwrap_or(cfg.d);
            let class = square_class(d, *x);
            let mut t = Table::new(&chain_header(model.rank()));
            let mut n = model.n0;
            loop {
                let h = model.level(n)?.short.value_histogram(2 * *x as i128 - 1)?;
                let c = class.iter().map(|&m| h[m as usize]).sum();
                let (row, min) = chain_row(&model, n, c)?;
                t.push(row);
                if min >= 2 * *x as i128 {
                    break;
                }
                n += 1;
            }
            ctx.emit(&t)
        }
        None => {
            let model = ctx.chain(&a.model)?;
            let m = need(a.m, "m")? as i128;
            let mut t = Table::new(&chain_header(model.rank()));
            let mut n = model.n0;
            let mut quiet = 0;
            while quiet < 3 {
                let c = model.level(n)?.short.count_eq(m)?;
                let (row, min) = chain_row(&model, n, c)?;
                t.push(row);
                quiet = if c == 0 && min > m { quiet + 1 } else { 0 };
                n += 1;
            }
            t.note(format!("local_intersection={}", rational(&model.local_intersection(m)?)));
            ctx.emit(&t)
        }
    }
}

fn ledger(ctx: &Ctx, a: &LedgerArgs) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let lat = load_lattice(&cfg.lattice)?;
    let point = load_point(&lat, &cfg.point)?;
    let mut ar = Archimedean::new(&lat, &point)?;
    ar.p_trunc = cfg.p_trunc;
    let chains = cfg.chains.iter().map(|p| load_chain(p)).collect::<Result<Vec<_>, _>>()?;
    let prm = LedgerParams {
        d: cfg.d,
        kappa: cfg.kappa,
        h_omega: cfg.h_omega,
        cusp_bound_constant: cfg.cusp_bound_constant,
        aut: cfg.aut,
        shellmax: cfg.shellmax,
    };
    let rows = run_ledger(&ar, &chains, &prm, cfg.jmin.max(1)..=cfg.jmax);
    if a.aggregate {
        ctx.emit(&aggregate_table(&aggregate(&rows, cfg.d, lat.b()?, &cfg.xs)))
    } else {
        ctx.emit(&rows_table(&rows))
    }
}

fn suite(ctx: &Ctx, a: &SuiteArgs) -> Result<ExitCode, CliError> {
    let inputs = SuiteInputs::load(&ctx.cfg)?;
    let mut outcomes = Vec::new();
    for &(id, _, _) in CRITERIA.iter() {
        if a.only.is_empty() || a.only.contains(&id) {
            let o = criteria::run(&inputs, id).expect("listed criterion");
            eprintln!("{}", o.line());
            outcomes.push(o);
        }
    }
    ctx.emit(&criteria::report_table(&outcomes))?;
    Ok(if outcomes.iter().all(|o| o.pass) {
        ExitCode::Pass
    } else {
        ExitCode::CriterionFailure
    })
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let default = Path::new("fixtures/default.cfg");
            if default.exists() {
                ExperimentConfig::load(default)?
            } else {
                ExperimentConfig::default()
            }
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let ctx = Ctx { cfg, out: cli.out };
    match &cli.cmd {
        Cmd::Density(a) => density(&ctx, a)?,
        Cmd::Count(a) => count(&ctx, a)?,
        Cmd::Eisenstein(a) => eisenstein_cmd(&ctx, a)?,
        Cmd::Green(a) => green(&ctx, a)?,
        Cmd::Chain(a) => chain(&ctx, a)?,
        Cmd::Ledger(a) => ledger(&ctx, a)?,
        Cmd::Suite(a) => return suite(&ctx, a),
    }
    Ok(ExitCode::Pass)
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qlat: {e}");
            e.exit_code()
        }
    };
    std::process::ExitCode::from(code as u8)
}
