//! Command-line front end. [`run`] is the whole program minus process exit.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::bell::{r_table, s_table};
use crate::boundary::{correlator, n_point_evaluate, n_point_lambda_exponent};
use crate::error::{Error, Result};
use crate::laplacian::{stable_partition, tau_lookup, translate, Convention, StablePartition, TauIndex};
use crate::recursion::{certify_multi, dse_residual_one_point, one_point_family};
use crate::ring::rational::{format_rational, parse_rational};
use crate::ring::{MomentPoly, Rational, VarNames, ZLaurent};
use crate::spectral::{evaluate_pipeline, solve_spectral, SpectralModel, DEFAULT_TOL};
use crate::virasoro::constraint_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

/// Environment variable naming the on-disk partition cache.
pub const CACHE_ENV: &str = "PSILAP_CACHE_DIR";
const CACHE_FORMAT: &str = "psilap-partition-v1";

#[derive(Parser, Debug)]
#[command(name = "psilap", version, about = "Intersection numbers and matrix-model correlators")]
struct Cli {
    /// Worker threads (default: all cores for `fg --gmax >= 8`, one otherwise).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Rho,
    T,
    Iz,
    Eynard,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Rho => Convention::Rho,
            ConventionArg::T => Convention::T,
            ConventionArg::Iz => Convention::Iz,
            ConventionArg::Eynard => Convention::Eynard,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    #[value(name = "S")]
    S,
    #[value(name = "R")]
    R,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Oracle,
    Dse1,
    #[value(name = "dseB")]
    DseB,
    Virasoro,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Free energies F_2 ... F_G.
    Fg {
        #[arg(long)]
        gmax: u32,
        #[arg(long, value_enum, default_value = "t")]
        convention: ConventionArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// A single intersection number <tau_d1 ... tau_dn>.
    Tau {
        #[arg(long, value_delimiter = ',', required = true)]
        indices: Vec<u32>,
    },
    /// The coefficient tables S_m or R_m.
    Coeffs {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        mmax: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// The symbolic correlator G_g(z1|...|zB).
    Correlator {
        #[arg(long)]
        genus: u32,
        #[arg(long)]
        boundaries: usize,
        #[arg(long, value_enum, default_value = "rho")]
        convention: ConventionArg,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// An N-point function at exact rational points, e.g. --groups '[["1","2/3"],["5"]]'.
    Npoint {
        #[arg(long)]
        genus: u32,
        #[arg(long)]
        groups: String,
        /// Optional moment values as a JSON list of rationals; otherwise moments stay symbolic.
        #[arg(long)]
        rho: Option<String>,
    },
    /// Solve a spectral model file and evaluate correlators, e.g. --eval 1:0 --eval 0:0|3.
    Model {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 6)]
        lmax: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        eval: Vec<String>,
    },
    /// Run a verification suite.
    Check {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        gmax: Option<u32>,
        #[arg(long)]
        nmax: Option<u32>,
    },
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let threads = cli.threads.unwrap_or(match cli.command {
        Command::Fg { gmax, .. } if gmax >= 8 => 0,
        _ => 1,
    });
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    let (result, buffer) = pool.install(|| {
        let mut buffer = Vec::new();
        (dispatch(&cli.command, &mut buffer), buffer)
    });
    if let Err(e) = out.write_all(&buffer) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_DOMAIN;
    }
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
        Err(CliError::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult = std::result::Result<i32, CliError>;

fn dispatch(cmd: &Command, out: &mut dyn Write) -> CliResult {
    match cmd {
        Command::Fg {
            gmax,
            convention,
            format,
        } => fg(*gmax, (*convention).into(), *format, out),
        Command::Tau { indices } => {
            let idx = TauIndex::new(indices.clone())?;
            let sp = partition(idx.genus(), Convention::T)?;
            writeln!(out, "{}", format_rational(&tau_lookup(&idx, &sp)?))?;
            Ok(EXIT_OK)
        }
        Command::Coeffs {
            family,
            mmax,
            format,
        } => coeffs(*family, *mmax, *format, out),
        Command::Correlator {
            genus,
            boundaries,
            convention,
            format,
        } => correlator_cmd(*genus, *boundaries, (*convention).into(), *format, out),
        Command::Npoint { genus, groups, rho } => npoint(*genus, groups, rho.as_deref(), out),
        Command::Model {
            file,
            lmax,
            tol,
            eval,
        } => model(file, *lmax, *tol, eval, out),
        Command::Check { suite, gmax, nmax } => check(*suite, *gmax, *nmax, out),
    }
}

fn monomial_key(m: &crate::ring::MomentMonomial, names: &VarNames) -> String {
    MomentPoly::term(m.clone(), Rational::from_integer(1.into())).render(names)
}

fn poly_json(p: &MomentPoly, conv: Convention) -> Value {
    let names = conv.names();
    let mut obj = Map::new();
    for (m, c) in p.terms() {
        obj.insert(
            monomial_key(m, &names),
            json!({
                "coefficient": format_rational(c),
                "normalized": format_rational(&(c * Convention::multiplicity(m))),
            }),
        );
    }
    Value::Object(obj)
}

fn fg(gmax: u32, conv: Convention, format: Format, out: &mut dyn Write) -> CliResult {
    let sp = partition(gmax, conv)?;
    match format {
        Format::Text => {
            for g in 2..=gmax {
                writeln!(out, "F{g} = {}", conv.render(sp.f(g)?))?;
            }
        }
        Format::Json => {
            let mut energies = Map::new();
            for g in 2..=gmax {
                energies.insert(g.to_string(), poly_json(sp.f(g)?, conv));
            }
            let doc = json!({ "convention": conv.to_string(), "gmax": gmax, "F": energies });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
        }
    }
    Ok(EXIT_OK)
}

fn coeffs(family: Family, mmax: usize, format: Format, out: &mut dyn Write) -> CliResult {
    let (name, table) = match family {
        Family::S => ("S", s_table(mmax)),
        Family::R => ("R", r_table(mmax)),
    };
    let names = VarNames::rho();
    match format {
        Format::Text => {
            for (m, p) in table.iter().enumerate().take(mmax + 1) {
                writeln!(out, "{name}{m} = {}", p.render(&names))?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .iter()
                .take(mmax + 1)
                .map(|p| Value::String(p.render(&names)))
                .collect();
            let doc = json!({ "family": name, "mmax": mmax, "table": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
        }
    }
    Ok(EXIT_OK)
}

fn correlator_cmd(
    g: u32,
    b: usize,
    conv: Convention,
    format: Format,
    out: &mut dyn Write,
) -> CliResult {
    let c = correlator(g, b)?;
    let terms = c
        .value
        .terms()
        .map(|(e, p)| Ok((e.clone(), translate(p, Convention::Rho, conv)?)))
        .collect::<Result<Vec<_>>>()?;
    let value = ZLaurent::from_exponents(c.value.vars(), terms);
    let text = value.render(&conv.names());
    match format {
        Format::Text => writeln!(out, "{text}")?,
        Format::Json => {
            let doc = json!({
                "genus": g,
                "boundaries": b,
                "convention": conv.to_string(),
                "lambda_exponent": c.lambda_exponent,
                "value": text,
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
        }
    }
    Ok(EXIT_OK)
}

fn parse_rational_list(v: &Value) -> std::result::Result<Vec<Rational>, CliError> {
    let items = v
        .as_array()
        .ok_or_else(|| CliError::Usage("expected a JSON list".into()))?;
    items
        .iter()
        .map(|x| match x {
            Value::String(s) => parse_rational(s).map_err(CliError::Domain),
            Value::Number(n) if n.is_i64() => Ok(Rational::from_integer(n.as_i64().expect("i64").into())),
            _ => Err(CliError::Usage(format!("`{x}` is not an exact rational"))),
        })
        .collect()
}

fn npoint(g: u32, groups: &str, rho: Option<&str>, out: &mut dyn Write) -> CliResult {
    let parse = |s: &str| serde_json::from_str::<Value>(s).map_err(|e| CliError::Usage(e.to_string()));
    let groups_v = parse(groups)?;
    let groups: Vec<Vec<Rational>> = groups_v
        .as_array()
        .ok_or_else(|| CliError::Usage("groups must be a JSON list of lists".into()))?
        .iter()
        .map(parse_rational_list)
        .collect::<std::result::Result<_, _>>()?;
    let c = correlator(g, groups.len())?;
    let symbolic = n_point_evaluate(&c, &groups)?;
    let value = match rho {
        Some(r) => format_rational(&symbolic.eval_rational(&parse_rational_list(&parse(r)?)?)?),
        None => symbolic.render(&VarNames::rho()),
    };
    let doc = json!({
        "genus": g,
        "boundaries": groups.len(),
        "lambda_exponent": n_point_lambda_exponent(&c, &groups),
        "value": value,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
    Ok(EXIT_OK)
}

/// `g:i,j|k` selects genus `g` and boundary index groups `[[i,j],[k]]`.
fn parse_eval(spec: &str) -> std::result::Result<(u32, Vec<Vec<usize>>), CliError> {
    let bad = || CliError::Usage(format!("cannot parse evaluation `{spec}`, expected g:i,j|k"));
    let (g, rest) = spec.split_once(':').ok_or_else(bad)?;
    let g = g.trim().parse().map_err(|_| bad())?;
    let groups = rest
        .split('|')
        .map(|grp| {
            grp.split(',')
                .map(|i| i.trim().parse::<usize>().map_err(|_| bad()))
                .collect()
        })
        .collect::<std::result::Result<_, _>>()?;
    Ok((g, groups))
}

fn model(file: &Path, lmax: usize, tol: f64, evals: &[String], out: &mut dyn Write) -> CliResult {
    let text = std::fs::read_to_string(file)?;
    let m = SpectralModel::from_json(&text)?;
    let data = solve_spectral(&m, lmax, tol)?;
    let mut values = Vec::new();
    for spec in evals {
        let (g, groups) = parse_eval(spec)?;
        let v = evaluate_pipeline(&m, &data, g, &groups)?;
        values.push(json!({ "genus": g, "indices": groups, "value": v }));
    }
    let doc = json!({
        "c": data.c,
        "nu": data.nu,
        "Z": data.z,
        "moments": data.moments,
        "correlators": values,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serialisable"))?;
    Ok(EXIT_OK)
}

/// Pairs `(g, B)` covered by the multi-boundary suite.
pub const MULTI_CASES: [(u32, usize); 5] = [(0, 3), (0, 4), (1, 2), (1, 3), (2, 2)];

fn check(suite: Suite, gmax: Option<u32>, nmax: Option<u32>, out: &mut dyn Write) -> CliResult {
    let mut failures = 0;
    let mut report = |out: &mut dyn Write, ok: bool, case: String, detail: String| {
        if ok {
            writeln!(out, "PASS {case}")
        } else {
            failures += 1;
            writeln!(out, "FAIL {case}: {detail}")
        }
    };
    match suite {
        Suite::Oracle => {
            let gmax = gmax.unwrap_or(5);
            let family = if gmax == 0 { Vec::new() } else { one_point_family(gmax)? };
            for (i, rec) in family.iter().enumerate() {
                let g = i as u32 + 1;
                let lap = &correlator(g, 1)?.value;
                let diff = lap.clone() - rec.clone();
                report(out, diff.is_zero(), format!("one-point g={g}"), format!("difference {diff}"))?;
            }
        }
        Suite::Dse1 => {
            for g in 1..=gmax.unwrap_or(4) {
                let r = dse_residual_one_point(g)?;
                report(out, r.is_zero(), format!("dse B=1 g={g}"), format!("residual {r}"))?;
            }
        }
        Suite::DseB => {
            let gmax = gmax.unwrap_or(2);
            for (g, b) in MULTI_CASES.into_iter().filter(|&(g, _)| g <= gmax) {
                let cert = certify_multi(g, b)?;
                report(
                    out,
                    cert.holds(),
                    format!("dse g={g} B={b} ({} points, degrees {:?})", cert.points, cert.degrees),
                    format!(
                        "symbolic zero {}, {} nonzero points",
                        cert.symbolic_zero, cert.nonzero_points
                    ),
                )?;
            }
        }
        Suite::Virasoro => {
            let gmax = gmax.unwrap_or(5);
            let nmax = nmax.unwrap_or(3 * gmax + 2);
            for (n, r) in constraint_suite(gmax, nmax)? {
                let detail = match r.first_nonzero() {
                    Some(k) => format!("order {k}: {}", r.coefficients[k]),
                    None => String::new(),
                };
                report(out, r.is_zero(), format!("L_{n} Z (gmax {gmax})"), detail)?;
            }
        }
    }
    Ok(if failures == 0 {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cache_path(dir: &Path, gmax: u32, conv: Convention) -> PathBuf {
    dir.join(format!("{CACHE_FORMAT}-{conv}-g{gmax}.json"))
}

fn load_cached(path: &Path, gmax: u32, conv: Convention) -> Option<StablePartition> {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()?;
    if doc["format"] != CACHE_FORMAT || doc["gmax"] != gmax || doc["convention"] != conv.to_string() {
        return None;
    }
    let read = |key: &str| -> Option<BTreeMap<u32, MomentPoly>> {
        (2..=gmax)
            .map(|g| {
                let text = doc[key][g.to_string()].as_str()?;
                Some((g, conv.parse_poly(text).ok()?))
            })
            .collect()
    };
    Some(StablePartition {
        gmax,
        z: read("Z")?,
        f: read("F")?,
        convention: conv,
    })
}

fn store_cached(path: &Path, sp: &StablePartition) -> std::io::Result<()> {
    let conv = sp.convention;
    let render = |m: &BTreeMap<u32, MomentPoly>| -> Map<String, Value> {
        m.iter()
            .map(|(g, p)| (g.to_string(), Value::String(conv.render(p))))
            .collect()
    };
    let doc = json!({
        "format": CACHE_FORMAT,
        "gmax": sp.gmax,
        "convention": conv.to_string(),
        "F": render(&sp.f),
        "Z": render(&sp.z),
    });
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    std::fs::write(&tmp, serde_json::to_string(&doc).expect("serialisable"))?;
    std::fs::rename(tmp, path)
}

/// [`stable_partition`] memoised on disk when the cache variable is set.
fn partition(gmax: u32, conv: Convention) -> Result<StablePartition> {
    let Some(dir) = std::env::var_os(CACHE_ENV).map(PathBuf::from) else {
        return stable_partition(gmax, conv);
    };
    let path = cache_path(&dir, gmax, conv);
    if let Some(sp) = load_cached(&path, gmax, conv) {
        return Ok(sp);
    }
    let sp = stable_partition(gmax, conv)?;
    // A cache that cannot be written only costs recomputation.
    let _ = std::fs::create_dir_all(&dir).and_then(|_| store_cached(&path, &sp));
    Ok(sp)
}
