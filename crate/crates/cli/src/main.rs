//! Command-line front end: parse algebra and simplicial-set files, dispatch
//! computations, emit TSV or JSON reports.
//!
//! Exit codes: 0 on success, 1 when a check command reports a failure, 2 on
//! validation errors (bad files, bad parameters).

use clap::{Parser, Subcommand, ValueEnum};
use hhmay::algebra::{self, associated_graded, FilteredAlgebra};
use hhmay::fp::PrimeField;
use hhmay::loday;
use hhmay::mayfilt;
use hhmay::poset;
use hhmay::series;
use hhmay::simplicial::{self, SimplicialFiniteSet};
use hhmay::specseq;
use std::fmt::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hhmay", version, about = "Hochschild homology of filtered graded algebras over F_p")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Tsv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Homology dimensions of the Loday complex, bigraded and by total degree.
    Hh {
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 16)]
        max_internal: u32,
        #[arg(long, default_value_t = 6)]
        max_level: usize,
        #[arg(long, value_enum, default_value = "tsv")]
        format: Format,
    },
    /// Dump the associated graded algebra in the algebra file format.
    Gr {
        #[arg(long)]
        algebra: String,
    },
    /// Spectral-sequence page dump: dims and differential ranks per page.
    Pages {
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 16)]
        max_internal: u32,
        #[arg(long, default_value_t = 6)]
        max_level: usize,
        #[arg(long, default_value_t = 16)]
        r_max: usize,
    },
    /// Verify the fundamental theorem of the May filtration exactly.
    CheckFundamental {
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 16)]
        max_internal: u32,
        #[arg(long, default_value_t = 5)]
        max_level: usize,
    },
    /// Compare homology dims against the associated graded upper bound.
    Bound {
        #[arg(long)]
        algebra: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 16)]
        max_internal: u32,
        #[arg(long, default_value_t = 6)]
        max_level: usize,
    },
    /// Coefficients of the polynomial-case Poincaré-series bound.
    Poincare {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
        #[arg(long = "N")]
        order: usize,
    },
    /// Vanishing degrees of the polynomial-case bound, with certificates.
    Vanishing {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        n: u32,
    },
    /// Exhaustive poset combinatorics suite (adjunction sweep, L1 norms).
    PosetCheck {
        #[arg(long, default_value_t = 3)]
        max_s: usize,
        #[arg(long, default_value_t = 3)]
        max_n: u32,
        #[arg(long, default_value_t = 2)]
        max_x: u32,
    },
    /// Randomized invariant corpus.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        instances: usize,
    },
}

/// Everything a computation run needs, validated up front.
struct RunConfig {
    algebra: FilteredAlgebra,
    space: SimplicialFiniteSet,
    max_internal: u32,
    max_level: usize,
}

#[derive(Debug)]
struct CliError(String);

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn load_algebra(path: &str) -> Result<FilteredAlgebra, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError(format!("cannot read algebra file {path}: {e}")))?;
    algebra::algebra_from_json(&text).map_err(|e| CliError(format!("{path}: {e}")))
}

fn load_space(spec: &str, max_level: usize) -> Result<SimplicialFiniteSet, CliError> {
    if max_level < 2 {
        return Err(CliError(format!("max_level must be >= 2, got {max_level}")));
    }
    if spec == "circle" {
        return Ok(simplicial::circle(max_level));
    }
    if let Some(d) = spec.strip_prefix("torus:") {
        let d: usize = d
            .parse()
            .map_err(|_| CliError(format!("bad torus dimension in '{spec}'")))?;
        if d == 0 {
            return Err(CliError("torus dimension must be >= 1".into()));
        }
        return Ok(simplicial::torus(d, max_level)?);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError(format!("cannot read simplicial file {spec}: {e}")))?;
    let x = simplicial::simplicial_from_json(&text).map_err(|e| CliError(format!("{spec}: {e}")))?;
    if x.max_level() < 2 {
        return Err(CliError(format!(
            "simplicial file {spec} has max_level {} < 2",
            x.max_level()
        )));
    }
    Ok(x)
}

fn config(
    algebra: &str,
    space: &str,
    max_internal: u32,
    max_level: usize,
) -> Result<RunConfig, CliError> {
    Ok(RunConfig {
        algebra: load_algebra(algebra)?,
        space: load_space(space, max_level)?,
        max_internal,
        max_level,
    })
}

/// Ok(true): success. Ok(false): a check reported failure (exit 1).
fn run(command: &Command) -> Result<bool, CliError> {
    let mut out = String::new();
    let pass = dispatch(command, &mut out)?;
    print!("{out}");
    Ok(pass)
}

fn dispatch(command: &Command, out: &mut String) -> Result<bool, CliError> {
    match command {
        Command::Hh {
            algebra,
            space,
            max_internal,
            max_level,
            format,
        } => {
            let cfg = config(algebra, space, *max_internal, *max_level)?;
            let c = loday::build(&cfg.space, &cfg.algebra, cfg.max_internal)?;
            let h = c.homology();
            match format {
                Format::Tsv => {
                    writeln!(
                        out,
                        "# hh\tp={}\tmax_level={}\tmax_internal={}",
                        cfg.algebra.algebra().field().p(),
                        cfg.max_level,
                        cfg.max_internal
                    )
                    .unwrap();
                    writeln!(
                        out,
                        "# valid\th<={}\tt<={}\tn<={}",
                        h.h_valid,
                        h.t_valid,
                        h.n_valid()
                    )
                    .unwrap();
                    writeln!(out, "h\tt\tdim").unwrap();
                    for (&(hh, t), &d) in &h.dims {
                        if d > 0 && hh <= h.h_valid && t <= h.t_valid {
                            writeln!(out, "{hh}\t{t}\t{d}").unwrap();
                        }
                    }
                    writeln!(out, "n\tdim").unwrap();
                    for (&n, &d) in &h.total_dims() {
                        if n <= h.n_valid() {
                            writeln!(out, "{n}\t{d}").unwrap();
                        }
                    }
                }
                Format::Json => {
                    let dims: Vec<_> = h
                        .dims
                        .iter()
                        .filter(|(&(hh, t), &d)| d > 0 && hh <= h.h_valid && t <= h.t_valid)
                        .map(|(&(hh, t), &d)| serde_json::json!([hh, t, d]))
                        .collect();
                    let totals: Vec<_> = h
                        .total_dims()
                        .iter()
                        .filter(|(&n, _)| n <= h.n_valid())
                        .map(|(&n, &d)| serde_json::json!([n, d]))
                        .collect();
                    let doc = serde_json::json!({
                        "p": cfg.algebra.algebra().field().p(),
                        "valid": {"h": h.h_valid, "t": h.t_valid, "n": h.n_valid()},
                        "dims": dims,
                        "totals": totals,
                    });
                    writeln!(out, "{}", serde_json::to_string_pretty(&doc).unwrap()).unwrap();
                }
            }
            Ok(true)
        }
        Command::Gr { algebra } => {
            let fa = load_algebra(algebra)?;
            writeln!(out, "{}", algebra::algebra_to_json(&associated_graded(&fa))).unwrap();
            Ok(true)
        }
        Command::Pages {
            algebra,
            space,
            max_internal,
            max_level,
            r_max,
        } => {
            let cfg = config(algebra, space, *max_internal, *max_level)?;
            let c = loday::build(&cfg.space, &cfg.algebra, cfg.max_internal)?;
            let fc = mayfilt::filter(&c)?;
            let ss = specseq::pages(&fc, *r_max)?;
            writeln!(
                out,
                "# pages\tn_max={}\tmax_weight={}\tr_stored={}\tn_valid={}",
                ss.n_max, ss.max_weight, ss.r_stored, ss.n_valid
            )
            .unwrap();
            writeln!(out, "kind\tr\tn\tw\tvalue").unwrap();
            let r_show = ss.r_stored.min(*r_max);
            for (&(r, n, w), &d) in &ss.dims {
                if r <= r_show {
                    writeln!(out, "dim\t{r}\t{n}\t{w}\t{d}").unwrap();
                }
            }
            for (&(r, n, w), m) in &ss.differentials {
                if r <= r_show {
                    writeln!(out, "rank\t{r}\t{n}\t{w}\t{}", m.rank()).unwrap();
                }
            }
            for (&(n, w), &d) in &ss.e_infinity {
                writeln!(out, "einf\t-\t{n}\t{w}\t{d}").unwrap();
            }
            for (&n, &d) in &ss.abutment {
                writeln!(out, "abut\t-\t{n}\t-\t{d}").unwrap();
            }
            Ok(true)
        }
        Command::CheckFundamental {
            algebra,
            space,
            max_internal,
            max_level,
        } => {
            let cfg = config(algebra, space, *max_internal, *max_level)?;
            let c = loday::build(&cfg.space, &cfg.algebra, cfg.max_internal)?;
            let fc = mayfilt::filter(&c)?;
            let report = mayfilt::check_fundamental(&fc)?;
            writeln!(out, "h\tt\tn\tok").unwrap();
            for e in &report.entries {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    e.h,
                    e.t,
                    e.weight,
                    e.dims_equal && e.matrices_equal
                )
                .unwrap();
            }
            match &report.first_failure {
                None => writeln!(out, "# fundamental theorem: PASS").unwrap(),
                Some(f) => writeln!(out, "# fundamental theorem: FAIL ({f})").unwrap(),
            }
            Ok(report.pass)
        }
        Command::Bound {
            algebra,
            space,
            max_internal,
            max_level,
        } => {
            let cfg = config(algebra, space, *max_internal, *max_level)?;
            let ub = specseq::upper_bound_check(&cfg.space, &cfg.algebra, cfg.max_internal)?;
            writeln!(out, "n\tdim\tgr_dim\tok\tslack").unwrap();
            for &(n, da, dg) in &ub.rows {
                writeln!(
                    out,
                    "{n}\t{da}\t{dg}\t{}\t{}",
                    da <= dg,
                    dg as i64 - da as i64
                )
                .unwrap();
            }
            writeln!(
                out,
                "# upper bound: {}\tstrict at: {:?}",
                if ub.all_ok { "PASS" } else { "FAIL" },
                ub.strict_degrees
            )
            .unwrap();
            Ok(ub.all_ok)
        }
        Command::Poincare { p, n, order } => {
            let field = PrimeField::new(*p)?;
            let s = series::poincare_bound(field, *n, *order)?;
            let text: Vec<String> = s.coeffs().iter().map(|c| c.to_string()).collect();
            writeln!(out, "{}", text.join(",")).unwrap();
            Ok(true)
        }
        Command::Vanishing { p, n } => {
            let field = PrimeField::new(*p)?;
            let report = series::vanishing_degrees(field, *n)?;
            match &report {
                series::VanishingReport::FrobeniusList {
                    p,
                    n,
                    frobenius_degree,
                    degrees,
                    certified,
                } => {
                    writeln!(out, "# p={p}\tn={n}\tfrobenius_degree={frobenius_degree}").unwrap();
                    for d in degrees {
                        writeln!(out, "vanishes\t{d}").unwrap();
                    }
                    writeln!(
                        out,
                        "# certificates: {}",
                        if *certified { "PASS" } else { "FAIL" }
                    )
                    .unwrap();
                }
                series::VanishingReport::ResidueClasses {
                    p,
                    n,
                    modulus,
                    allowed,
                    verified_up_to,
                    certified,
                } => {
                    writeln!(out, "# p={p}\tn={n}\tp divides n").unwrap();
                    writeln!(
                        out,
                        "allowed_residues\tmod {modulus}\t{:?}\tverified_up_to\t{verified_up_to}",
                        allowed
                    )
                    .unwrap();
                    writeln!(
                        out,
                        "# certificates: {}",
                        if *certified { "PASS" } else { "FAIL" }
                    )
                    .unwrap();
                }
            }
            Ok(report.certified())
        }
        Command::PosetCheck { max_s, max_n, max_x } => {
            let sweep = poset::adjunction_sweep(*max_s, *max_n, *max_x);
            writeln!(
                out,
                "adjunction\ts<={max_s}\tn<={max_n}\t|x|<={max_x}\tpairs={}\t{}",
                sweep.pairs_checked,
                if sweep.pass { "PASS" } else { "FAIL" }
            )
            .unwrap();
            if let Some(ce) = &sweep.counterexample {
                writeln!(out, "# counterexample: {ce}").unwrap();
            }
            let mut l1_ok = true;
            for s in 1..=*max_s {
                let f: Vec<usize> = (0..4).map(|t| t % s).collect();
                l1_ok &= poset::l1_functoriality(&f, s, &[3, 1, 4, 1]);
            }
            writeln!(out, "l1_functoriality\t{}", if l1_ok { "PASS" } else { "FAIL" }).unwrap();
            Ok(sweep.pass && l1_ok)
        }
        Command::Selftest { seed, instances } => {
            let failures = hhmay::corpus::run_corpus(*seed, *instances);
            writeln!(
                out,
                "selftest\tseed={seed}\tinstances={instances}\tfailures={}",
                failures.len()
            )
            .unwrap();
            for f in &failures {
                let first = f.checks.iter().find(|c| !c.ok);
                writeln!(
                    out,
                    "FAIL\t{}\t{}",
                    f.label,
                    first.map(|c| format!("{}: {}", c.name, c.detail)).unwrap_or_default()
                )
                .unwrap();
            }
            if failures.is_empty() {
                writeln!(out, "# selftest: PASS").unwrap();
            }
            Ok(failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
