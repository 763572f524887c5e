use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polycycle::analysis::{analyze, polycycle_return, scan_quantities};
use polycycle::cyclicity::{assess, QUANTITY_NAMES};
use polycycle::expr::{evaluate_constant, parse_expression};
use polycycle::flow::{count_limit_cycles, default_grid, log_grid, ReturnMap, SectionReturn};
use polycycle::oracle::{compose_check, corner_check, return_check, Corruption};
use polycycle::{Error, ErrorClass, Model, Tolerances};
use serde_json::json;

use polycycle_cli::document::{input_for, Input, ResultDocument};

/// Largest number of points `scan` accepts.
const MAX_SCAN_POINTS: usize = 1_000_000;

#[derive(Parser)]
#[command(name = "polycycle", version, about = "Return-map asymptotics and cyclicity of hyperbolic polycycles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Model file.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Override a parameter default, e.g. `--set l1=8/27`.
    #[arg(long = "set", value_name = "NAME=VALUE", value_parser = assignment)]
    set: Vec<(String, f64)>,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override a tolerance, e.g. `--tol ode_rel=1e-12`.
    #[arg(long = "tol", value_name = "NAME=VALUE", value_parser = assignment)]
    tol: Vec<(String, f64)>,
}

#[derive(Subcommand)]
enum Command {
    /// Corner coefficients, return-map expansions and the cyclicity verdict.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Integrate the flow and compare with the closed forms.
    Oracle {
        #[command(subcommand)]
        what: OracleWhat,
    },
    /// Check the composition and inversion rules against a numeric oracle.
    ComposeCheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Random instances per case.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Scale the leading (`leading:F`) or second (`second:F`) formula
        /// coefficient by F before comparing.
        #[arg(long, hide = true, value_parser = corruption)]
        corrupt: Option<Corruption>,
        #[command(flatten)]
        common: Common,
    },
    /// Condition quantities over a parameter grid, as CSV.
    Scan {
        /// Grid axis `NAME=LO:HI:N`; repeat for a product grid.
        #[arg(long = "grid", value_name = "NAME=LO:HI:N", required = true, value_parser = axis)]
        grid: Vec<Axis>,
        /// Emit a JSON result document instead of CSV.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum OracleWhat {
    /// Fit integrated passages through one corner.
    Dulac {
        /// Corner number, 1-based in listed order.
        corner: usize,
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        common: Common,
    },
    /// Integrated return map against its two-term expansion.
    Return {
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        common: Common,
    },
    /// Fixed points of the return map.
    Cycles {
        #[command(flatten)]
        range: Range,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone, Copy)]
struct Range {
    /// Smallest section coordinate
    #[arg(long)]
    s_min: Option<f64>,
    /// Largest section coordinate
    #[arg(long)]
    s_max: Option<f64>,
    /// Grid points, spaced geometrically.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Clone)]
struct Axis {
    name: String,
    lo: f64,
    hi: f64,
    n: usize,
}

fn number(text: &str) -> Result<f64, String> {
    if let Ok(v) = text.trim().parse::<f64>() {
        return Ok(v);
    }
    let e = parse_expression(text.trim(), &[]).map_err(|e| e.to_string())?;
    evaluate_constant(&e, &Default::default()).map_err(|e| e.to_string())
}

fn assignment(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or("expected NAME=VALUE")?;
    Ok((name.trim().to_string(), number(value)?))
}

fn axis(text: &str) -> Result<Axis, String> {
    let (name, spec) = text.split_once('=').ok_or("expected NAME=LO:HI:N")?;
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected NAME=LO:HI:N".into());
    };
    let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a point count"))?;
    if n == 0 {
        return Err("a grid axis needs at least one point".into());
    }
    Ok(Axis {
        name: name.trim().to_string(),
        lo: number(lo)?,
        hi: number(hi)?,
        n,
    })
}

fn corruption(text: &str) -> Result<Corruption, String> {
    let (kind, factor) = text.split_once(':').ok_or("expected leading:F or second:F")?;
    let f = number(factor)?;
    match kind {
        "leading" => Ok(Corruption::Leading(f)),
        "second" => Ok(Corruption::Second(f)),
        _ => Err(format!("unknown corruption `{kind}`")),
    }
}

/// A loaded model with its parameter point and tolerances.
struct Setup {
    model: Model,
    mu: Vec<f64>,
    tol: Tolerances,
    input: Input,
}

fn setup(common: &Common) -> Result<Setup, Error> {
    let path = common
        .model
        .as_deref()
        .ok_or_else(|| Error::Usage("--model PATH is required".into()))?;
    let bytes = std::fs::read(path).map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Model(format!("{} is not UTF-8", path.display())))?;
    let model = Model::parse(&text).map_err(|e| e.in_stage(&format!("loading {}", path.display())))?;
    let mu = model.parameter_point(&common.set)?;
    let tol = tolerances(model.tolerances.clone(), common)?;
    let input = input_for(path, &bytes, &model.params, &mu);
    Ok(Setup { model, mu, tol, input })
}

fn tolerances(mut tol: Tolerances, common: &Common) -> Result<Tolerances, Error> {
    for (name, v) in &common.tol {
        tol.set(name, *v)?;
    }
    Ok(tol)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    let io = |e: std::io::Error| Error::Usage(format!("cannot write output: {e}"));
    match out {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(io),
    }
}

fn grid_for(range: Range, default: impl FnOnce() -> Vec<f64>) -> Result<Vec<f64>, Error> {
    if range.s_min.is_none() && range.s_max.is_none() && range.points.is_none() {
        return Ok(default());
    }
    let lo = range.s_min.unwrap_or(1e-6);
    let hi = range.s_max.unwrap_or(1e-1);
    let n = range.points.unwrap_or(40);
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || n == 0 {
        return Err(Error::Usage(format!("empty s-range [{lo}, {hi}] with {n} points")));
    }
    Ok(log_grid(lo, hi, n))
}

/// Runs a command; `Ok(false)` means the document was written but reports
/// a numeric failure.
fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Analyze { common } => {
            let s = setup(&common)?;
            let a = assess(&s.model, &s.mu, &s.tol)?;
            let doc = ResultDocument::new("analyze", Some(s.input), s.tol, a);
            emit(common.out.as_deref(), &doc.to_json())?;
            Ok(true)
        }
        Command::Oracle { what } => oracle(what),
        Command::ComposeCheck {
            seed,
            count,
            corrupt,
            common,
        } => {
            let tol = tolerances(Tolerances::default(), &common)?;
            let check = compose_check(seed, count, corrupt.unwrap_or(Corruption::None))?;
            let pass = check.pass();
            let doc = ResultDocument::new("compose-check", None, tol, check);
            emit(common.out.as_deref(), &doc.to_json())?;
            Ok(pass)
        }
        Command::Scan { grid, json, common } => scan(&grid, json, &common),
    }
}

fn oracle(what: OracleWhat) -> Result<bool, Error> {
    let (command, common, payload) = match what {
        OracleWhat::Dulac { corner, range, common } => {
            let s = setup(&common)?;
            let grid = grid_for(range, default_grid)?;
            let check = corner_check(&s.model, &s.mu, &s.tol, corner, &grid)?;
            ("oracle dulac", common, (s, serde_json::to_value(check)))
        }
        OracleWhat::Return { range, common } => {
            let s = setup(&common)?;
            let grid = grid_for(range, || log_grid(1e-4, 1e-2, 21))?;
            let check = return_check(&s.model, &s.mu, &s.tol, &grid)?;
            ("oracle return", common, (s, serde_json::to_value(check)))
        }
        OracleWhat::Cycles { range, common } => {
            let s = setup(&common)?;
            let grid = grid_for(range, || log_grid(1e-6, 1e-1, 200))?;
            let (section, map): (&str, Box<dyn ReturnMap>) = match (&s.model.polygon, &s.model.ray) {
                (Some(_), _) => ("polycycle", Box::new(polycycle_return(&s.model, &s.mu, &s.tol)?)),
                (None, Some(ray)) => {
                    let field = s.model.field.at(&s.mu)?;
                    (
                        "ray",
                        Box::new(SectionReturn::new(field, ray.origin, ray.direction, s.tol.ode.clone())?),
                    )
                }
                (None, None) => return Err(Error::Model("model has neither a polycycle nor a return section".into())),
            };
            let scan = count_limit_cycles(map.as_ref(), grid[0], grid[grid.len() - 1], grid.len(), s.tol.bisection)?;
            ("oracle cycles", common, (s, serde_json::to_value(json!({ "section": section, "scan": scan }))))
        }
    };
    let (s, value) = payload;
    let value = value.map_err(|e| Error::Invalid(e.to_string()))?;
    let doc = ResultDocument::new(command, Some(s.input), s.tol, value);
    emit(common.out.as_deref(), &doc.to_json())?;
    Ok(true)
}

fn linspace(a: &Axis) -> Vec<f64> {
    if a.n == 1 {
        return vec![a.lo];
    }
    (0..a.n)
        .map(|k| a.lo + (a.hi - a.lo) * k as f64 / (a.n - 1) as f64)
        .collect()
}

fn scan(grid: &[Axis], json: bool, common: &Common) -> Result<bool, Error> {
    let s = setup(common)?;
    let idx = grid
        .iter()
        .map(|a| s.model.param_index(&a.name))
        .collect::<Result<Vec<_>, _>>()?;
    let total = grid
        .iter()
        .try_fold(1usize, |acc, a| acc.checked_mul(a.n))
        .filter(|&t| t <= MAX_SCAN_POINTS)
        .ok_or_else(|| Error::Usage(format!("grid exceeds {MAX_SCAN_POINTS} points")))?;
    let axes: Vec<Vec<f64>> = grid.iter().map(linspace).collect();
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        let mut mu = s.mu.clone();
        let mut rest = flat;
        for (k, values) in axes.iter().enumerate().rev() {
            mu[idx[k]] = values[rest % values.len()];
            rest /= values.len();
        }
        points.push(mu);
    }
    // Keep the corner labelings of the base point so columns stay comparable.
    let rot = analyze(&s.model, &s.mu, &s.tol).ok().map(|a| a.rotations());
    let results = scan_quantities(&s.model, &points, &s.tol, rot);

    let mut header: Vec<String> = s.model.params.clone();
    header.extend(QUANTITY_NAMES.iter().map(|q| q.to_string()));
    header.push("error".into());
    let cell = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&results)
        .map(|(mu, r)| {
            let mut row: Vec<String> = mu.iter().map(|&v| cell(v)).collect();
            match r {
                Ok(q) => {
                    row.extend(q.to_vec().into_iter().map(cell));
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(std::iter::repeat(String::new()).take(QUANTITY_NAMES.len()));
                    row.push(e.to_string());
                }
            }
            row
        })
        .collect();

    let text = if json {
        let payload = json!({ "columns": header, "rows": rows });
        ResultDocument::new("scan", Some(s.input), s.tol, payload).to_json()
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Invalid(e.to_string());
        w.write_record(&header).map_err(csv_err)?;
        for row in &rows {
            w.write_record(row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
        String::from_utf8(bytes).expect("CSV cells are UTF-8")
    };
    emit(common.out.as_deref(), &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(e) => {
            eprintln!("polycycle: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 2,
                ErrorClass::Model => 3,
                ErrorClass::Numeric => 4,
            })
        }
    }
}
