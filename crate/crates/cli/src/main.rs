mod output;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use eiscong::arith::{big_pow, divisors, factorize, fraction_string, gcd};
use eiscong::bernoulli::{bernoulli_number, bk_over_k_numerator, generalized_bernoulli};
use eiscong::characters::DirichletCharacter;
use eiscong::criteria::{self, CriterionReport, CuspidalityReport, Verdict};
use eiscong::cusps::{constant_term_general, e_constant_terms, SL2Matrix};
use eiscong::goldfeld::{self, DegreeBound, DensityEstimate};
use eiscong::qseries::{self, Coefficients, EisensteinSpec, QExpansion, DEFAULT_PRECISION};
use eiscong::scan::{self, LRange, ScanConfig, ScanCriterion};
use eiscong::Error;

use output::{sig6, Format, Out};

/// Eisenstein congruences, Bernoulli numbers and level criteria for
/// reducible mod-l representations.
#[derive(Debug, Parser)]
#[command(name = "eiscong", version)]
struct Cli {
    /// Output format (default depends on the subcommand)
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for scan and goldfeld
    #[arg(long, global = true, env = "EISCONG_THREADS")]
    threads: Option<usize>,

    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bernoulli numbers B_k, B_{k,psi} and numerator(B_k/k)
    Bernoulli {
        #[arg(long)]
        k: u64,
        /// Primitive character "c.j" for the generalized number
        #[arg(long)]
        character: Option<String>,
        #[arg(long)]
        numerator_of_bk_over_k: bool,
        /// Table of B_0 .. B_k
        #[arg(long)]
        all: bool,
    },
    /// q-expansion of E_k^{1,eps0}, or of the level-N combination with --N
    Eis {
        #[arg(long)]
        k: u64,
        /// Primitive character "c.j" (default: trivial)
        #[arg(long)]
        character: Option<String>,
        #[arg(long = "N")]
        n: Option<u64>,
        /// Comma-separated p=value, value one of 1, full, or p^(k-1)
        #[arg(long)]
        delta: Option<String>,
        #[arg(long, default_value_t = DEFAULT_PRECISION)]
        precision: usize,
        /// Reduce the coefficients mod this prime
        #[arg(long)]
        mod_l: Option<u64>,
    },
    /// Constant terms at the cusps 1/v
    CuspTerms {
        #[arg(long)]
        k: u64,
        /// Level of the combination E; every delta assignment unless --delta
        #[arg(long = "N")]
        n: Option<u64>,
        #[arg(long)]
        delta: Option<String>,
        /// Primitive character "c.j" for alpha_M E_k^{1,eps0} instead
        #[arg(long)]
        character: Option<String>,
        #[arg(long = "M", default_value_t = 1)]
        m: u64,
    },
    /// One criterion for one target
    Criterion(CriterionArgs),
    /// Weight, level and character attached to 1 + eps chi_l^b
    TypeRecipe {
        #[arg(long)]
        b: u64,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        character: String,
        /// Also report the level of the twist by a character of conductor p^r
        #[arg(long, requires = "twist_r")]
        twist_p: Option<u64>,
        #[arg(long, requires = "twist_p")]
        twist_r: Option<u64>,
    },
    /// Primes p <= bound whose Hecke eigenvalue congruence quantity is divisible by l
    Admissible {
        #[arg(long)]
        character: Option<String>,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        l: u64,
        #[arg(long)]
        bound: u64,
    },
    /// Criterion verdicts over a range of levels
    Scan {
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum, default_value = "conjecture")]
        criterion: ScanKind,
        #[arg(long = "min-N", default_value_t = 1)]
        min_n: u64,
        #[arg(long = "max-N")]
        max_n: u64,
        /// A single prime l
        #[arg(long, conflicts_with = "l_max")]
        l: Option<u64>,
        /// Every prime l in the hypothesis range up to this bound
        #[arg(long)]
        l_max: Option<u64>,
        /// Add mod-l cuspidality of the parameter choice of E
        #[arg(long)]
        cuspidal: bool,
    },
    /// Primes N <= x with P+(N-1)^2 > N
    Goldfeld {
        #[arg(long)]
        x: u64,
        #[arg(long, default_value_t = goldfeld::DEFAULT_SCAN_BOUND)]
        bound: u64,
        /// Print only the density estimate
        #[arg(long)]
        summary: bool,
    },
    /// Squarefree N = p_1...p_r <= x with P+(gcd(p_i - 1))^(2r) > N
    NrSets {
        #[arg(long)]
        r: u32,
        #[arg(long)]
        x: u64,
    },
    /// Lower bound c_k ln N on the coefficient field degree
    Bound {
        #[arg(long = "N")]
        n: u64,
        #[arg(long)]
        k: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionKind {
    Mazur,
    Main,
    Conjecture,
    LevelRaising,
    LevelOne,
    Delta,
    CuspidalModL,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScanKind {
    Mazur,
    Main,
    Conjecture,
}

#[derive(Debug, Args)]
struct CriterionArgs {
    #[arg(value_enum)]
    kind: CriterionKind,
    #[arg(long = "N")]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    l: Option<u64>,
    #[arg(long)]
    p: Option<u64>,
    /// For cuspidal-mod-l; defaults to the delta criterion's choice
    #[arg(long)]
    delta: Option<String>,
}

enum Failure {
    /// Precondition or usage problem: exit 2.
    Guard(String),
    /// Exit 1.
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) => Failure::Internal(e.to_string()),
            e => Failure::Guard(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn need<T>(v: Option<T>, name: &str, kind: CriterionKind) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| {
        let kind = kind
            .to_possible_value()
            .map(|p| p.get_name().to_string())
            .unwrap_or_default();
        Failure::Guard(format!("criterion {kind} requires --{name}"))
    })
}

fn character(label: Option<&str>) -> std::result::Result<DirichletCharacter, Failure> {
    match label {
        None | Some("trivial") => Ok(DirichletCharacter::trivial(1)),
        Some(l) => Ok(DirichletCharacter::from_label(l)?),
    }
}

fn parse_delta(s: &str, k: u64, n: u64) -> std::result::Result<EisensteinSpec, Failure> {
    let mut values = BTreeMap::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || {
            Failure::Guard(format!(
                "bad delta entry {part:?}, expected p=1, p=full or p=p^(k-1)"
            ))
        };
        let (p, v) = part.split_once('=').ok_or_else(bad)?;
        let p: u64 = p.trim().parse().map_err(|_| bad())?;
        let v = match v.trim() {
            "full" => big_pow(p, k.saturating_sub(1) as u32),
            "one" => BigInt::from(1),
            v => v.parse::<BigInt>().map_err(|_| bad())?,
        };
        values.insert(p, v);
    }
    Ok(EisensteinSpec::from_values(k, n, &values)?)
}

fn delta_string(spec: &EisensteinSpec) -> String {
    spec.delta()
        .iter()
        .map(|(p, d)| {
            format!(
                "{p}={}",
                serde_json::to_value(d)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            )
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn report_plain(r: &CriterionReport) -> String {
    let mut lines = vec![format!("verdict: {}", r.verdict)];
    if let Some(b) = r.branch {
        lines.push(format!("branch: {b}"));
    }
    lines.extend(
        r.witnesses
            .iter()
            .map(|w| format!("witness: {}", w.congruence)),
    );
    lines.extend(r.violated_guards.iter().map(|g| format!("guard: {g}")));
    lines.extend(r.note.iter().map(|n| format!("note: {n}")));
    lines.join("\n")
}

fn emit_report(out: &mut Out, r: &CriterionReport) -> Outcome {
    out.record(r, || report_plain(r))?;
    if r.verdict == Verdict::NotApplicable {
        return Err(Failure::Guard(format!(
            "outside the hypotheses: {}",
            r.violated_guards.join("; ")
        )));
    }
    Ok(())
}

fn coefficient_strings(f: &QExpansion) -> Vec<String> {
    match f.coefficients() {
        Coefficients::Rational(v) => v.iter().map(fraction_string).collect(),
        Coefficients::Cyclotomic(_, v) => v.iter().map(ToString::to_string).collect(),
        Coefficients::ModL(_, v) => v.iter().map(u64::to_string).collect(),
    }
}

#[derive(Serialize)]
struct CoefficientRow {
    n: usize,
    coefficient: String,
}

fn bernoulli(out: &mut Out, k: u64, label: Option<&str>, numerator: bool, all: bool) -> Outcome {
    if numerator {
        let num = bk_over_k_numerator(k)?.to_string();
        return Ok(out.record(&json!({"k": k, "numerator": num}), || num.clone())?);
    }
    if let Some(label) = label {
        let psi = DirichletCharacter::from_label(label)?;
        let value = generalized_bernoulli(k, &psi)?;
        let shown = value.to_string();
        return Ok(out.record(
            &json!({"k": k, "character": label, "value": value, "display": shown}),
            || shown.clone(),
        )?);
    }
    if all {
        let rows: Vec<_> = (0..=k)
            .map(|m| json!({"k": m, "value": fraction_string(&bernoulli_number(m))}))
            .collect();
        return Ok(out.rows(&["k", "value"], &rows)?);
    }
    let value = fraction_string(&bernoulli_number(k));
    Ok(out.record(&json!({"k": k, "value": value}), || value.clone())?)
}

fn eis(
    out: &mut Out,
    k: u64,
    label: Option<&str>,
    n: Option<u64>,
    delta: Option<&str>,
    precision: usize,
    mod_l: Option<u64>,
) -> Outcome {
    let mut f = match (n, delta) {
        (Some(n), Some(d)) => qseries::build_e(&parse_delta(d, k, n)?, precision)?,
        (Some(1), None) => {
            qseries::build_e(&EisensteinSpec::new(k, 1, BTreeMap::new())?, precision)?
        }
        (Some(_), None) => return Err(Failure::Guard("--N requires --delta".into())),
        (None, Some(_)) => return Err(Failure::Guard("--delta requires --N".into())),
        (None, None) => qseries::eisenstein_qexp(k, &character(label)?, precision)?,
    };
    if let Some(l) = mod_l {
        f = qseries::reduce_mod_l(&f, l)?;
    }
    match out.format {
        Format::Csv => {
            let rows: Vec<CoefficientRow> = coefficient_strings(&f)
                .into_iter()
                .enumerate()
                .map(|(n, coefficient)| CoefficientRow { n, coefficient })
                .collect();
            Ok(out.rows(&["n", "coefficient"], &rows)?)
        }
        _ => Ok(out.record(&f, || f.to_string())?),
    }
}

fn cusp_terms(
    out: &mut Out,
    k: u64,
    n: Option<u64>,
    delta: Option<&str>,
    label: Option<&str>,
    m: u64,
) -> Outcome {
    if let Some(label) = label {
        let eps = DirichletCharacter::from_label(label)?;
        let level = m * eps.modulus();
        let mut rows = Vec::new();
        for v in divisors(level) {
            let gamma = SL2Matrix::completing(1, v as i64)?;
            let c = constant_term_general(m, k, &eps, &gamma)?;
            rows.push(json!({"v": v, "constant": c.to_string()}));
        }
        return Ok(out.rows(&["v", "constant"], &rows)?);
    }
    let n = n.ok_or_else(|| Failure::Guard("cusp-terms requires --N or --character".into()))?;
    let specs = match delta {
        Some(d) => vec![parse_delta(d, k, n)?],
        None => EisensteinSpec::all_assignments(k, n)?,
    };
    let mut rows = Vec::new();
    for spec in &specs {
        for (cusp, c) in e_constant_terms(spec)? {
            rows.push(
                json!({"delta": delta_string(spec), "v": cusp.v, "constant": fraction_string(&c)}),
            );
        }
    }
    Ok(out.rows(&["delta", "v", "constant"], &rows)?)
}

fn criterion(out: &mut Out, a: &CriterionArgs) -> Outcome {
    let kind = a.kind;
    match kind {
        CriterionKind::Mazur => emit_report(
            out,
            &criteria::mazur_criterion(need(a.n, "N", kind)?, need(a.l, "l", kind)?),
        ),
        CriterionKind::Main => emit_report(
            out,
            &criteria::thm_main_criterion(
                need(a.n, "N", kind)?,
                need(a.k, "k", kind)?,
                need(a.l, "l", kind)?,
            ),
        ),
        CriterionKind::Conjecture => emit_report(
            out,
            &criteria::conjecture_conditions(
                need(a.n, "N", kind)?,
                need(a.k, "k", kind)?,
                need(a.l, "l", kind)?,
            )?,
        ),
        CriterionKind::LevelOne => emit_report(
            out,
            &criteria::level_one_criterion(need(a.k, "k", kind)?, need(a.l, "l", kind)?),
        ),
        CriterionKind::LevelRaising => {
            let (p, k, l) = (
                need(a.p, "p", kind)?,
                need(a.k, "k", kind)?,
                need(a.l, "l", kind)?,
            );
            let holds = criteria::level_raising_condition(p, k, l)?;
            Ok(
                out.record(&json!({"p": p, "k": k, "l": l, "holds": holds}), || {
                    holds.to_string()
                })?,
            )
        }
        CriterionKind::Delta => {
            let spec = criteria::delta_choice(
                need(a.n, "N", kind)?,
                need(a.k, "k", kind)?,
                need(a.l, "l", kind)?,
            )?;
            Ok(out.record(&spec, || delta_string(&spec))?)
        }
        CriterionKind::CuspidalModL => {
            let (n, k, l) = (
                need(a.n, "N", kind)?,
                need(a.k, "k", kind)?,
                need(a.l, "l", kind)?,
            );
            let spec = match &a.delta {
                Some(d) => parse_delta(d, k, n)?,
                None => criteria::delta_choice(n, k, l)?,
            };
            let r: CuspidalityReport = criteria::is_cuspidal_mod_l(&spec, l)?;
            out.record(&r, || {
                let mut lines = vec![
                    format!("cuspidal: {}", r.cuspidal),
                    format!("delta: {}", delta_string(&spec)),
                ];
                lines.extend(
                    r.cusps
                        .iter()
                        .map(|c| format!("v = {}: {}", c.v, fraction_string(&c.constant))),
                );
                lines.extend(r.violated_guards.iter().map(|g| format!("guard: {g}")));
                lines.join("\n")
            })?;
            if r.violated_guards.is_empty() {
                Ok(())
            } else {
                Err(Failure::Guard(format!(
                    "outside the hypotheses: {}",
                    r.violated_guards.join("; ")
                )))
            }
        }
    }
}

fn type_recipe(out: &mut Out, b: u64, l: u64, label: &str, twist: Option<(u64, u64)>) -> Outcome {
    let eps = DirichletCharacter::from_label(label)?;
    let recipe = criteria::type_recipe(b, l, &eps)?;
    let mut v = serde_json::to_value(&recipe).map_err(|e| Failure::Internal(e.to_string()))?;
    let mut twisted = None;
    if let Some((p, r)) = twist {
        let t = criteria::twist_level(recipe.level, p, r)?;
        twisted = Some(t);
        v["twist_level"] = json!(t);
    }
    Ok(out.record(&v, || {
        let mut s = format!(
            "N = {}, k = {}, eps0 = {}",
            recipe.level, recipe.k, recipe.epsilon0.label
        );
        if let Some(t) = twisted {
            s.push_str(&format!("\ntwist level = {t}"));
        }
        s
    })?)
}

fn admissible(out: &mut Out, label: Option<&str>, k: u64, l: u64, bound: u64) -> Outcome {
    let eps = character(label)?;
    let primes = criteria::admissible_primes(&eps, k, l, bound)?;
    if out.format == Format::Csv {
        let rows: Vec<_> = primes.iter().map(|p| json!({"p": p})).collect();
        return Ok(out.rows(&["p"], &rows)?);
    }
    let v = json!({"character": eps.label(), "k": k, "l": l, "bound": bound, "primes": primes});
    Ok(out.record(&v, || {
        primes
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    })?)
}

fn rounded_density(d: &DensityEstimate) -> DensityEstimate {
    DensityEstimate {
        pi_like: sig6(d.pi_like),
        ratio: sig6(d.ratio),
        ..d.clone()
    }
}

fn goldfeld_cmd(out: &mut Out, x: u64, bound: u64, summary: bool) -> Outcome {
    if summary {
        let d = rounded_density(&goldfeld::goldfeld_scan_with(x, bound, |_| {})?);
        return Ok(out.record(&d, || {
            format!(
                "S({x}) = {}, x/ln x = {}, ratio = {}",
                d.s_x, d.pi_like, d.ratio
            )
        })?);
    }
    let header: Vec<String> = ["N", "p_plus", "member", "witness_l"]
        .map(String::from)
        .to_vec();
    let mut table = out.table(&header)?;
    let mut failed = None;
    goldfeld::goldfeld_scan_with(x, bound, |r| {
        if failed.is_none() {
            if let Err(e) = table.row(r) {
                failed = Some(e);
            }
        }
    })?;
    if let Some(e) = failed {
        return Err(e.into());
    }
    Ok(table.finish()?)
}

#[derive(Serialize)]
struct NrRow {
    #[serde(rename = "N")]
    n: u64,
    factors: String,
    g: u64,
    p_plus: u64,
}

fn nr_sets(out: &mut Out, r: u32, x: u64) -> Outcome {
    let mut rows = Vec::new();
    for n in goldfeld::enumerate_nr(r, x)? {
        let f = factorize(n)?;
        let g = f.primes().fold(0, |g, p| gcd(g, p - 1));
        rows.push(NrRow {
            n,
            factors: f
                .primes()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join("*"),
            g,
            p_plus: goldfeld::largest_prime_factor(g)?,
        });
    }
    Ok(out.rows(&["N", "factors", "g", "p_plus"], &rows)?)
}

fn bound(out: &mut Out, n: u64, k: u64) -> Outcome {
    let b = goldfeld::degree_lower_bound(n, k);
    let b = DegreeBound {
        c_k: sig6(b.c_k),
        bound: sig6(b.bound),
        ..b
    };
    Ok(out.record(&b, || {
        format!(
            "c_k = {}, bound = {}, applicable = {}{}",
            b.c_k,
            b.bound,
            b.applicable,
            b.witness_l
                .map(|l| format!(", witness l = {l}"))
                .unwrap_or_default()
        )
    })?)
}

fn scan_cmd(out: &mut Out, config: ScanConfig) -> Outcome {
    let rows = scan::scan(&config)?;
    Ok(out.rows(&["N", "k", "l", "verdict", "branch", "cuspidal"], &rows)?)
}

fn default_format(c: &Command) -> Format {
    match c {
        Command::Scan { .. } | Command::Goldfeld { .. } | Command::NrSets { .. } => Format::Csv,
        Command::Bound { .. } => Format::Json,
        _ => Format::Plain,
    }
}

fn run(cli: Cli) -> Outcome {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::Guard("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut out = Out::new(
        cli.format.unwrap_or_else(|| default_format(&cli.command)),
        sink,
    );
    let result = match &cli.command {
        Command::Bernoulli {
            k,
            character,
            numerator_of_bk_over_k,
            all,
        } => bernoulli(
            &mut out,
            *k,
            character.as_deref(),
            *numerator_of_bk_over_k,
            *all,
        ),
        Command::Eis {
            k,
            character,
            n,
            delta,
            precision,
            mod_l,
        } => eis(
            &mut out,
            *k,
            character.as_deref(),
            *n,
            delta.as_deref(),
            *precision,
            *mod_l,
        ),
        Command::CuspTerms {
            k,
            n,
            delta,
            character,
            m,
        } => cusp_terms(&mut out, *k, *n, delta.as_deref(), character.as_deref(), *m),
        Command::Criterion(a) => criterion(&mut out, a),
        Command::TypeRecipe {
            b,
            l,
            character,
            twist_p,
            twist_r,
        } => type_recipe(&mut out, *b, *l, character, twist_p.zip(*twist_r)),
        Command::Admissible {
            character,
            k,
            l,
            bound,
        } => admissible(&mut out, character.as_deref(), *k, *l, *bound),
        Command::Scan {
            k,
            criterion,
            min_n,
            max_n,
            l,
            l_max,
            cuspidal,
        } => {
            let l = match (l, l_max) {
                (Some(l), _) => LRange::Fixed(*l),
                (None, Some(m)) => LRange::UpTo(*m),
                (None, None) => LRange::Auto,
            };
            let criterion = match criterion {
                ScanKind::Mazur => ScanCriterion::Mazur,
                ScanKind::Main => ScanCriterion::Main,
                ScanKind::Conjecture => ScanCriterion::Conjecture,
            };
            scan_cmd(
                &mut out,
                ScanConfig {
                    criterion,
                    k: *k,
                    min_n: *min_n,
                    max_n: *max_n,
                    l,
                    cuspidal: *cuspidal,
                },
            )
        }
        Command::Goldfeld { x, bound, summary } => goldfeld_cmd(&mut out, *x, *bound, *summary),
        Command::NrSets { r, x } => nr_sets(&mut out, *r, *x),
        Command::Bound { n, k } => bound(&mut out, *n, *k),
    };
    out.flush()?;
    result
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Guard(msg)) => {
            eprintln!("eiscong: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("eiscong: internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
