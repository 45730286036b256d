use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use delta_spec::criteria::{check_condition_b, select_g, CriteriaConfig};
use delta_spec::grid::TailRule;
use delta_spec::jacobi::{PeriodPair, Perturbation};
use delta_spec::{Alpha64, Grid64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridDef {
    PowerLog {
        gamma: f64,
        eta: f64,
        #[serde(default = "one")]
        d1: f64,
    },
    Constant {
        d: f64,
    },
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        tail: TailRule,
    },
}

fn one() -> f64 {
    1.0
}

impl GridDef {
    pub fn build(&self) -> Result<Grid64> {
        Ok(match self {
            GridDef::PowerLog { gamma, eta, d1 } => Grid64::power_log(*gamma, *eta, *d1)?,
            GridDef::Constant { d } => Grid64::constant(*d)?,
            GridDef::Explicit { values, tail } => Grid64::explicit(values.clone(), *tail)?,
        })
    }

    /// `(γ, η)` for the sweep table; `NaN` for other families.
    pub fn gamma_eta(&self) -> (f64, f64) {
        match self {
            GridDef::PowerLog { gamma, eta, .. } => (*gamma, *eta),
            _ => (f64::NAN, f64::NAN),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationDef {
    #[default]
    Zero,
    /// `c·d_n`.
    GapMultiple(f64),
    /// `coef·n^exponent`.
    Power { coef: f64, exponent: f64 },
    /// The leading part of `F(n)` selected for the grid.
    G,
}

impl PerturbationDef {
    fn build(&self, grid: &Grid64, horizon: usize) -> Perturbation<f64> {
        match self {
            PerturbationDef::Zero => Perturbation::Zero,
            PerturbationDef::GapMultiple(c) => Perturbation::GapMultiple(*c),
            PerturbationDef::Power { coef, exponent } => Perturbation::Power {
                coef: *coef,
                exponent: *exponent,
            },
            PerturbationDef::G => {
                let g = select_g(grid, horizon, &CriteriaConfig::default());
                Perturbation::Custom {
                    label: "G".into(),
                    eval: Arc::new(move |n| g.value(n)),
                    order_of_gap: false,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaDef {
    Zero,
    /// `a·(1/d_n + 1/d_{n+1}) + p_n`.
    ScaledInverseGaps {
        a: f64,
        #[serde(default)]
        perturbation: PerturbationDef,
    },
    /// `Σ coef·n^exponent` over `[coef, exponent]` pairs.
    PowerSum {
        terms: Vec<(f64, f64)>,
    },
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        tail: TailRule,
    },
    /// Gauge family with period pair `u`; measured on the grid when absent.
    AlphaZero {
        a: f64,
        #[serde(default)]
        u: Option<(f64, f64)>,
    },
}

impl AlphaDef {
    pub fn build(&self, grid: &Grid64, horizon: usize) -> Result<Alpha64> {
        Ok(match self {
            AlphaDef::Zero => Alpha64::zero(),
            AlphaDef::ScaledInverseGaps { a, perturbation } => {
                Alpha64::scaled_inverse_gaps(*a, perturbation.build(grid, horizon))?
            }
            AlphaDef::PowerSum { terms } => Alpha64::power_sum(terms.clone())?,
            AlphaDef::Explicit { values, tail } => Alpha64::explicit(values.clone(), *tail)?,
            AlphaDef::AlphaZero { a, u } => {
                let u = match u {
                    Some((odd, even)) => PeriodPair::new(*odd, *even),
                    None => check_condition_b(grid, horizon, &CriteriaConfig::default())?.u,
                };
                Alpha64::alpha_zero(*a, u)?
            }
        })
    }

    pub fn a(&self) -> f64 {
        match self {
            AlphaDef::ScaledInverseGaps { a, .. } | AlphaDef::AlphaZero { a, .. } => *a,
            _ => f64::NAN,
        }
    }
}

fn number(s: &str) -> Result<f64> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    t.parse::<f64>()
        .with_context(|| format!("`{s}` is not a number"))
}

fn numbers(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(number).collect()
}

fn tail_rule(s: &str) -> Result<TailRule> {
    match s.trim() {
        "cycle" => Ok(TailRule::Cycle),
        "hold-last" | "hold_last" => Ok(TailRule::HoldLast),
        other => bail!("unknown tail rule `{other}` (expected cycle or hold-last)"),
    }
}

fn list_with_tail(body: &str) -> Result<(Vec<f64>, TailRule)> {
    let (values, tail) = match body.split_once(';') {
        Some((v, t)) => (v, tail_rule(t)?),
        None => (body, TailRule::default()),
    };
    Ok((numbers(values)?, tail))
}

/// `power-log:γ,η[,d1]`, `power:γ`, `constant:d` or `list:v1,v2,…[;cycle|hold-last]`.
pub fn parse_grid(s: &str) -> Result<GridDef> {
    let (kind, body) = s
        .split_once(':')
        .ok_or_else(|| anyhow!("grid `{s}` has no `kind:` prefix"))?;
    let def = match kind.trim() {
        "power-log" | "powerlog" => match numbers(body)?.as_slice() {
            [gamma, eta] => GridDef::PowerLog {
                gamma: *gamma,
                eta: *eta,
                d1: 1.0,
            },
            [gamma, eta, d1] => GridDef::PowerLog {
                gamma: *gamma,
                eta: *eta,
                d1: *d1,
            },
            _ => bail!("power-log takes gamma,eta[,d1]"),
        },
        "power" => GridDef::PowerLog {
            gamma: number(body)?,
            eta: 0.0,
            d1: 1.0,
        },
        "constant" => GridDef::Constant { d: number(body)? },
        "list" => {
            let (values, tail) = list_with_tail(body)?;
            GridDef::Explicit { values, tail }
        }
        other => bail!("unknown grid kind `{other}` (expected power-log, power, constant or list)"),
    };
    Ok(def)
}

/// Splits `"-4*n-2+1/n"` into signed terms, keeping exponent signs.
fn signed_terms(s: &str) -> Vec<String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in compact.chars() {
        let splits = (c == '+' || c == '-')
            && !cur.is_empty()
            && !matches!(prev, Some('^' | '*' | '/' | 'e' | 'E' | '('));
        if splits {
            out.push(std::mem::take(&mut cur));
        }
        cur.push(c);
        prev = Some(c);
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn power_term(term: &str) -> Result<(f64, f64)> {
    let (sign, body) = match term.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, term.strip_prefix('+').unwrap_or(term)),
    };
    let Some(i) = body.find('n') else {
        return Ok((sign * number(body)?, 0.0));
    };
    let (prefix, suffix) = (&body[..i], &body[i + 1..]);
    let exponent = match suffix.strip_prefix('^') {
        Some(e) => number(e)?,
        None if suffix.is_empty() => 1.0,
        None => bail!("cannot read `{term}`"),
    };
    let (coef, exponent) = if let Some(c) = prefix.strip_suffix('/') {
        (if c.is_empty() { 1.0 } else { number(c)? }, -exponent)
    } else {
        let c = prefix.strip_suffix('*').unwrap_or(prefix);
        (if c.is_empty() { 1.0 } else { number(c)? }, exponent)
    };
    Ok((sign * coef, exponent))
}

/// Sums of `c`, `c*n`, `c*n^p`, `c/n`, `c/n^p` terms.
pub fn parse_power_sum(s: &str) -> Result<Vec<(f64, f64)>> {
    let terms = signed_terms(s);
    if terms.is_empty() {
        bail!("empty expression");
    }
    terms
        .iter()
        .map(|t| power_term(t).with_context(|| format!("in `{s}`")))
        .collect()
}

/// `zero`, `a*(1/d_n+1/d_{n+1})` (or `scaled`), `alpha0` or
/// `alpha0(u_odd,u_even)`, `list:…`, or a power sum in `n`.
pub fn parse_alpha(s: &str, a: Option<f64>, perturbation: PerturbationDef) -> Result<AlphaDef> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let need_a = || a.ok_or_else(|| anyhow!("alpha `{s}` needs --a"));
    if compact == "zero" || compact == "0" {
        return Ok(AlphaDef::Zero);
    }
    if compact == "scaled" || compact == "a*(1/d_n+1/d_{n+1})" || compact == "a(1/d_n+1/d_{n+1})" {
        return Ok(AlphaDef::ScaledInverseGaps {
            a: need_a()?,
            perturbation,
        });
    }
    if let Some(rest) = compact.strip_prefix("alpha0") {
        let u = match rest {
            "" => None,
            _ => match numbers(rest.trim_start_matches('(').trim_end_matches(')'))?.as_slice() {
                [odd, even] => Some((*odd, *even)),
                _ => bail!("alpha0 takes (u_odd,u_even)"),
            },
        };
        return Ok(AlphaDef::AlphaZero { a: need_a()?, u });
    }
    if let Some(body) = compact.strip_prefix("list:") {
        let (values, tail) = list_with_tail(body)?;
        return Ok(AlphaDef::Explicit { values, tail });
    }
    if compact.contains("d_") {
        bail!("alpha `{s}` is not one of the supported forms");
    }
    Ok(AlphaDef::PowerSum {
        terms: parse_power_sum(&compact)?,
    })
}

/// `zero`, `g`, `c*d_n` or a single power `c*n^p`.
pub fn parse_perturbation(s: &str) -> Result<PerturbationDef> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    match compact.as_str() {
        "" | "0" | "zero" | "none" => return Ok(PerturbationDef::Zero),
        "g" | "G" => return Ok(PerturbationDef::G),
        _ => {}
    }
    if let Some(c) = compact.strip_suffix("d_n") {
        let c = c.strip_suffix('*').unwrap_or(c);
        let coef = match c {
            "" | "+" => 1.0,
            "-" => -1.0,
            _ => number(c)?,
        };
        return Ok(PerturbationDef::GapMultiple(coef));
    }
    match parse_power_sum(&compact)?.as_slice() {
        [(coef, exponent)] => Ok(PerturbationDef::Power {
            coef: *coef,
            exponent: *exponent,
        }),
        _ => bail!("perturbation `{s}` must be a single term"),
    }
}

/// Counts written as `1000`, `1_000`, `1e6` or `10^4`.
pub fn parse_count(s: &str) -> Result<usize> {
    let t = s.trim().replace('_', "");
    let value = if let Some((base, exp)) = t.split_once('^') {
        let base: f64 = base
            .parse()
            .with_context(|| format!("`{s}` is not a count"))?;
        let exp: i32 = exp
            .parse()
            .with_context(|| format!("`{s}` is not a count"))?;
        base.powi(exp)
    } else {
        t.parse::<f64>()
            .with_context(|| format!("`{s}` is not a count"))?
    };
    if !(value >= 1.0 && value.fract() == 0.0 && value <= 1e15) {
        bail!("`{s}` is not a positive integer count");
    }
    Ok(value as usize)
}

/// `x1,x2,…` or `start:stop:step` (inclusive, up to rounding).
pub fn parse_values(s: &str) -> Result<Vec<f64>> {
    let t = s.trim();
    if t.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = t.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
            if step.is_nan() || step <= 0.0 {
                bail!("range step must be positive");
            }
            let count = ((stop - start) / step + 1e-9).floor();
            if count < 0.0 {
                return Ok(Vec::new());
            }
            Ok((0..=count as usize)
                .map(|k| start + k as f64 * step)
                .collect())
        }
        [_] => numbers(t),
        _ => bail!("`{s}` is neither a list nor start:stop:step"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(
            parse_grid("power-log:1,0.5").unwrap(),
            GridDef::PowerLog {
                gamma: 1.0,
                eta: 0.5,
                d1: 1.0
            }
        );
        assert_eq!(
            parse_grid("constant:1").unwrap(),
            GridDef::Constant { d: 1.0 }
        );
        assert_eq!(
            parse_grid("list:1,2;hold-last").unwrap(),
            GridDef::Explicit {
                values: vec![1.0, 2.0],
                tail: TailRule::HoldLast
            }
        );
        assert!(parse_grid("power").is_err());
        assert!(parse_grid("blob:1").is_err());
    }

    #[test]
    fn power_sums() {
        assert_eq!(
            parse_power_sum("-2n-1").unwrap(),
            vec![(-2.0, 1.0), (-1.0, 0.0)]
        );
        assert_eq!(parse_power_sum("-1/n").unwrap(), vec![(-1.0, -1.0)]);
        assert_eq!(
            parse_power_sum("-4*n - 2 + 1/n").unwrap(),
            vec![(-4.0, 1.0), (-2.0, 0.0), (1.0, -1.0)]
        );
        assert_eq!(parse_power_sum("3*n^-0.5").unwrap(), vec![(3.0, -0.5)]);
        assert_eq!(
            parse_power_sum("2/n^2+1e-3").unwrap(),
            vec![(2.0, -2.0), (1e-3, 0.0)]
        );
        assert!(parse_power_sum("n^").is_err());
    }

    #[test]
    fn alphas() {
        let s = parse_alpha("a*(1/d_n+1/d_{n+1})", Some(-0.5), PerturbationDef::Zero).unwrap();
        assert_eq!(s.a(), -0.5);
        assert!(parse_alpha("scaled", None, PerturbationDef::Zero).is_err());
        assert_eq!(
            parse_alpha("zero", None, PerturbationDef::Zero).unwrap(),
            AlphaDef::Zero
        );
        assert_eq!(
            parse_alpha("alpha0(3.5,1.25)", Some(-0.5), PerturbationDef::Zero).unwrap(),
            AlphaDef::AlphaZero {
                a: -0.5,
                u: Some((3.5, 1.25))
            }
        );
        assert!(parse_alpha("sin(d_n)", None, PerturbationDef::Zero).is_err());
    }

    #[test]
    fn perturbations() {
        assert_eq!(
            parse_perturbation("1/n").unwrap(),
            PerturbationDef::Power {
                coef: 1.0,
                exponent: -1.0
            }
        );
        assert_eq!(
            parse_perturbation("0.5*d_n").unwrap(),
            PerturbationDef::GapMultiple(0.5)
        );
        assert_eq!(
            parse_perturbation("d_n").unwrap(),
            PerturbationDef::GapMultiple(1.0)
        );
        assert_eq!(parse_perturbation("g").unwrap(), PerturbationDef::G);
        assert!(parse_perturbation("1/n+n").is_err());
    }

    #[test]
    fn counts_and_values() {
        assert_eq!(parse_count("10^4").unwrap(), 10_000);
        assert_eq!(parse_count("1e6").unwrap(), 1_000_000);
        assert_eq!(parse_count("1_000").unwrap(), 1_000);
        assert!(parse_count("0").is_err() && parse_count("1.5").is_err());
        assert_eq!(
            parse_values("-1.5,-0.5,0.5").unwrap(),
            vec![-1.5, -0.5, 0.5]
        );
        assert_eq!(
            parse_values("0.25:1:0.25").unwrap(),
            vec![0.25, 0.5, 0.75, 1.0]
        );
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("1:0:0.1").unwrap().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let a = AlphaDef::ScaledInverseGaps {
            a: -0.5,
            perturbation: PerturbationDef::Power {
                coef: 1.0,
                exponent: -1.0,
            },
        };
        let text = serde_json::to_string(&a).unwrap();
        assert_eq!(serde_json::from_str::<AlphaDef>(&text).unwrap(), a);
        assert!(serde_json::from_str::<GridDef>(r#"{"family":"constant","d":1,"x":2}"#).is_err());
    }
}
