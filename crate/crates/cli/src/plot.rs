use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use delta_spec::criteria::f_value;
use delta_spec::deficiency::{solve_recurrence, OracleMode};
use delta_spec::jacobi::{rho, JacobiOperator};
use delta_spec::numeric::log_spaced;
use num_complex::Complex;

use crate::case::CaseArgs;
use crate::config::usage;
use crate::write_output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    #[value(name = "F")]
    F,
    #[value(name = "F_over_d")]
    FOverD,
    #[value(name = "rho")]
    Rho,
    #[value(name = "block_norms")]
    BlockNorms,
    #[value(name = "residuals")]
    Residuals,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, value_enum)]
    pub quantity: Quantity,
    /// Number of log-spaced sample indices.
    #[arg(long, default_value_t = 256)]
    pub points: usize,
    /// Spectral parameter RE,IM for block_norms and residuals.
    #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
    pub lambda: String,
    /// CSV path; `-` or absent writes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn parse_lambda(s: &str) -> Result<Complex<f64>> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re, im] => Ok(Complex::new(re.trim().parse()?, im.trim().parse()?)),
        _ => Err(usage(format!("--lambda `{s}` must be RE,IM"))),
    }
}

/// `(n, value)` pairs of the requested quantity.
pub fn series(args: &PlotArgs) -> Result<Vec<(usize, f64)>> {
    let cfg = args.case.resolve(OracleMode::Off)?;
    let n = cfg.analysis.horizon();
    let grid = cfg.grid.build()?.with_max_index(n + 2);
    let samples = log_spaced(1, n, args.points.max(2));
    let rows = match args.quantity {
        Quantity::F => samples.iter().map(|&k| (k, f_value(&grid, k))).collect(),
        Quantity::FOverD => samples
            .iter()
            .map(|&k| (k, f_value(&grid, k) / grid.d(k)))
            .collect(),
        Quantity::Rho => {
            let mut idx: Vec<usize> = samples
                .iter()
                .flat_map(|&k| [k, k + 1])
                .filter(|&k| k <= n)
                .collect();
            idx.dedup();
            idx.into_iter().map(|k| (k, rho(&grid, k))).collect()
        }
        Quantity::BlockNorms | Quantity::Residuals => {
            let lambda = parse_lambda(&args.lambda)?;
            let alpha = cfg.alpha.build(&grid, n)?;
            let op = JacobiOperator::new(grid, alpha);
            let sol = solve_recurrence(&op, lambda, n)?;
            if args.quantity == Quantity::BlockNorms {
                sol.block_log_mass
                    .iter()
                    .enumerate()
                    .map(|(k, &m)| (1usize << k, m))
                    .collect()
            } else {
                samples
                    .iter()
                    .filter_map(|&k| sol.row_residual(&op, k).map(|r| (k, r)))
                    .collect()
            }
        }
    };
    Ok(rows)
}

pub fn run(args: PlotArgs) -> Result<()> {
    let rows = series(&args)?;
    write_output(args.out.as_deref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["n", "value"])?;
        for r in &rows {
            csv.serialize(r)?;
        }
        csv.flush()
    })
}
