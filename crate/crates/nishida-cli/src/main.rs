//! Batch front end: one subcommand per library layer, text or JSON output.
//!
//! Exit codes: 0 on success, 1 when a check fails (a red certificate step,
//! an unstable-module violation, a Nishida pairing mismatch), 2 on usage or
//! input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nishida::opcalc::{default_ambient, Ambient, Calculus, CohExpr, FormalClass, HomologyExpression, OpExpression};
use nishida::phi::make_phi_range;
use nishida::realize::{certify, recheck_certificate, CertifyMode, Fixture};
use nishida::ssq::{column_blocks, gap_check, SpectralScenario};
use nishida::steenrod::{basis_in_degree, gens_degree, parse_word, SteenrodAlgebra};
use nishida::unstable::GradedFpModule;
use nishida::{CoeffTables, Prime};

#[derive(Parser, Debug)]
#[command(name = "nishida", version, about = "Steenrod algebra, Dyer-Lashof calculus and nonrealization certificates")]
struct Cli {
    #[command(flatten)]
    config: CliConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CliConfig {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Largest degree for basis enumeration and Adem words.
    #[arg(long, env = "NISHIDA_WINDOW_CAP", default_value_t = 200, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    window_cap: u64,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Print diagnostics to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coefficient functions over F_p.
    Coeff(CoeffArgs),
    /// Reduce a Steenrod word to admissible form, e.g. --word "P1 P1".
    Adem {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        word: String,
    },
    /// Admissible basis in one degree.
    Basis {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        degree: u64,
    },
    /// Check a module given as JSON: instability, Adem relations, desuspension index.
    Module {
        #[arg(long)]
        input: PathBuf,
        /// Tensor with a second module first.
        #[arg(long)]
        tensor: Option<PathBuf>,
        /// Shift degrees by this amount after tensoring.
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        shift: i64,
    },
    /// Emit the module Φ(k, ℓ) as JSON.
    Phi {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: u32,
        /// Degree window "lo,hi"; defaults to the span of the basis.
        #[arg(long, value_parser = parse_two::<i64>, allow_hyphen_values = true)]
        window: Option<(i64, i64)>,
    },
    /// Expand P^s Q^r(x) by the Nishida relation.
    Nishida(NishidaArgs),
    /// Pair a cohomology expression with a homology expression.
    Pair {
        #[arg(long)]
        coh: PathBuf,
        #[arg(long)]
        hom: PathBuf,
    },
    /// E_1 blocks of the first columns with their degree intervals and gaps.
    SsqPage {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 3)]
        columns: u32,
    },
    /// Run the certificate engine at concrete parameters.
    Certify {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Evaluate every step instead of halting at the first failure.
        #[arg(long)]
        audit: bool,
        /// Module JSON (exact window) replacing the minimal two-class fixture.
        #[arg(long, requires = "class")]
        fixture: Option<PathBuf>,
        /// Name of the fixture class in degree 2i.
        #[arg(long)]
        class: Option<String>,
    },
}

#[derive(Args, Debug)]
#[group(skip)]
#[command(group(clap::ArgGroup::new("function").required(true).multiple(false)))]
struct CoeffArgs {
    #[arg(long)]
    p: u64,
    /// ν(q).
    #[arg(long, group = "function")]
    nu: Option<u64>,
    /// γ(q, r), given as "q,r".
    #[arg(long, group = "function", value_parser = parse_two::<u64>)]
    gamma: Option<(u64, u64)>,
    /// λ(q) for cube dimension n, given as "q,n".
    #[arg(long, group = "function", value_parser = parse_two::<u64>)]
    lambda: Option<(u64, u64)>,
    /// C(n, k) mod p, given as "n,k".
    #[arg(long, group = "function", value_parser = parse_two::<u64>)]
    binom: Option<(u64, u64)>,
    /// Isotropy order e_n for a comma-separated tuple.
    #[arg(long, group = "function", value_delimiter = ',')]
    isotropy: Option<Vec<u64>>,
}

#[derive(Args, Debug)]
struct NishidaArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    s: u32,
    /// Index of Q^r; taken from --input when that is given.
    #[arg(long, required_unless_present = "input")]
    r: Option<u32>,
    /// Degree of the class x; taken from --input when that is given.
    #[arg(long, required_unless_present = "input")]
    degree: Option<i64>,
    /// Cube dimension (an integer or "inf"); defaults to one that keeps every index below the top operation.
    #[arg(long, value_parser = parse_ambient)]
    n: Option<Ambient>,
    /// Expression JSON whose root is Q^r of a leaf.
    #[arg(long, conflicts_with_all = ["r", "degree"])]
    input: Option<PathBuf>,
    /// Also check the expansion by pairing against every homology shape.
    #[arg(long)]
    verify: bool,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, allow_negative_numbers = true)]
    l: i64,
    #[arg(long, allow_negative_numbers = true)]
    m: i64,
    #[arg(long, allow_negative_numbers = true)]
    i: i64,
    #[arg(long, allow_negative_numbers = true)]
    n: i64,
    #[arg(long)]
    k: u32,
}

/// Either a usage/input problem (exit 2) or a failed check (exit 1, with
/// the report still printed).
enum Failure {
    Input(String),
    Check(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure::Input(e.to_string())
    }
}

/// Rendered output and whether every check passed.
struct Report {
    text: String,
    json: Value,
    ok: bool,
}

impl Report {
    fn ok(text: impl Into<String>, json: Value) -> Report {
        Report { text: text.into(), json, ok: true }
    }
}

/// "a,b" with both halves parsed as `T`.
fn parse_two<T: std::str::FromStr>(s: &str) -> Result<(T, T), String>
where
    T::Err: std::fmt::Display,
{
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected \"a,b\", got {s:?}"))?;
    let one = |x: &str| x.trim().parse::<T>().map_err(|e| format!("{x:?}: {e}"));
    Ok((one(a)?, one(b)?))
}

fn parse_ambient(s: &str) -> Result<Ambient, String> {
    if s == "inf" {
        return Ok(Ambient::Infinite);
    }
    let n: u32 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    Ambient::new(n).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn coeff(a: &CoeffArgs) -> Result<Report, Failure> {
    let prime = Prime::new(a.p)?;
    let t = CoeffTables::new(prime);
    let (function, args, value) = if let Some(q) = a.nu {
        ("nu", json!([q]), t.nu(q).value())
    } else if let Some((q, r)) = a.gamma {
        ("gamma", json!([q, r]), t.gamma(q, r).value())
    } else if let Some((q, n)) = a.lambda {
        ("lambda", json!([q, n]), t.lambda(q, n)?.value())
    } else if let Some((n, k)) = a.binom {
        ("binom", json!([n, k]), t.binom(n, k))
    } else if let Some(n) = &a.isotropy {
        ("isotropy", json!(n), t.isotropy_order(n).value())
    } else {
        return Err(Failure::Input("no coefficient function given".into()));
    };
    Ok(Report::ok(value.to_string(), json!({"p": a.p, "function": function, "args": args, "value": value})))
}

fn adem(p: u64, word: &str, cap: u64) -> Result<Report, Failure> {
    let prime = Prime::new(p)?;
    let gens = parse_word(word)?;
    let degree = gens_degree(prime, &gens);
    if degree > cap {
        return Err(Failure::Input(format!("word degree {degree} exceeds the window cap {cap}")));
    }
    let red = SteenrodAlgebra::new(prime).adem_reduce(&gens);
    let terms: Vec<Value> =
        red.terms().iter().map(|(m, c)| json!({"monomial": m.to_string(), "coeff": c.value()})).collect();
    Ok(Report::ok(red.to_string(), json!({"p": p, "word": word, "degree": degree, "terms": terms})))
}

fn basis(p: u64, degree: u64, cap: u64) -> Result<Report, Failure> {
    let prime = Prime::new(p)?;
    let list: Vec<String> = basis_in_degree(degree, prime, cap)?.iter().map(|m| m.to_string()).collect();
    Ok(Report::ok(list.join("\n"), json!({"p": p, "degree": degree, "basis": list})))
}

fn module(input: &Path, tensor: Option<&Path>, shift: i64) -> Result<Report, Failure> {
    let mut m =
        GradedFpModule::from_json(&read(input)?).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    if let Some(path) = tensor {
        let other =
            GradedFpModule::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        m = m.tensor(&other)?;
    }
    if shift != 0 {
        m = m.shift(shift);
    }
    let unstable = m.check_unstable();
    let adem = m.check_adem(&SteenrodAlgebra::new(m.prime()));
    let desusp = m.desuspension_index().ok();
    let violation = unstable.as_ref().err().map(|v| format!("P^{} (beta^{}) nonzero on {}", v.i, v.eps, v.name));
    let adem_failure =
        adem.err().map(|(j, a, b, c)| format!("class {} fails the relation at ({a}, {b}, {c})", m.basis()[j].name));
    let mut text = vec![
        format!("dimension {}", m.dim()),
        format!("degrees {}", m.degree_range().map_or("empty".into(), |(lo, hi)| format!("{lo}..{hi}"))),
        format!("unstable: {}", violation.as_deref().unwrap_or("yes")),
        format!("adem relations: {}", adem_failure.as_deref().unwrap_or("hold")),
    ];
    if let Some(d) = desusp {
        text.push(format!("desuspension index {d}"));
    }
    let json = json!({
        "dimension": m.dim(),
        "degree_range": m.degree_range(),
        "unstable": violation.is_none(),
        "violation": violation,
        "adem": adem_failure.is_none(),
        "adem_failure": adem_failure,
        "desuspension_index": desusp,
        "module": m.to_json(),
    });
    Ok(Report { text: text.join("\n"), json, ok: violation.is_none() && adem_failure.is_none() })
}

fn phi(p: u64, k: u32, l: u32, window: Option<(i64, i64)>) -> Result<Report, Failure> {
    let prime = Prime::new(p)?;
    let mut m = make_phi_range(k, l, prime)?;
    if let Some(w) = window {
        m = GradedFpModule::new(
            prime,
            m.basis().to_vec(),
            m.beta_entries().to_vec(),
            m.power_entries().clone(),
            Some(w),
            true,
        )?;
    }
    let mut lines: Vec<String> = m.basis().iter().map(|b| format!("{} in degree {}", b.name, b.deg)).collect();
    for (i, entries) in m.power_entries() {
        for &(row, col, c) in entries {
            lines.push(format!("P^{i} {} = {c} {}", m.basis()[col].name, m.basis()[row].name));
        }
    }
    Ok(Report::ok(lines.join("\n"), m.to_json()))
}

fn nishida(a: &NishidaArgs) -> Result<Report, Failure> {
    let prime = Prime::new(a.p)?;
    let (r, x, n) = match &a.input {
        Some(path) => {
            let e: OpExpression = read_json(path)?;
            if e.p != prime {
                return Err(Failure::Input(format!("expression is over p = {}, not {}", e.p.get(), a.p)));
            }
            match e.root {
                CohExpr::DualQ { r, arg } => match *arg {
                    CohExpr::Leaf { class, ops } if ops.is_empty() => (r, class, e.n),
                    _ => return Err(Failure::Input("the argument of Q^r must be a bare leaf".into())),
                },
                _ => return Err(Failure::Input("the root must be Q^r of a leaf".into())),
            }
        }
        None => {
            let (r, d) = (a.r.expect("required by clap"), a.degree.expect("required by clap"));
            let n = a.n.unwrap_or_else(|| default_ambient(prime.get(), a.s, r));
            (r, FormalClass::cohomology("x", d, 1), n)
        }
    };
    let alg = SteenrodAlgebra::new(prime);
    let calc = Calculus::new(&alg, n);
    let exp = calc.nishida_expand_coh(a.s, r, &x, None)?;
    let out = OpExpression { p: prime, n, root: exp.expr.clone() };
    let mut text = vec![format!("P^{} Q^{r}({}) = {}", a.s, x.name, exp.expr)];
    text.extend(exp.notes.iter().map(|s| format!("note: {s}")));
    let mut json = json!({
        "s": a.s,
        "r": r,
        "class": x,
        "expansion": out,
        "coefficients": exp.coefficients,
        "notes": exp.notes,
    });
    let mut ok = true;
    if a.verify {
        let rep = calc.verify_nishida_by_pairing(a.s, r, x.degree)?;
        ok = rep.pass;
        text.push(format!(
            "pairing check: {} ({} shapes, {} nonzero)",
            if rep.pass { "pass" } else { "FAIL" },
            rep.shapes_checked,
            rep.nonzero_shapes
        ));
        if let Some(f) = &rep.failure {
            text.push(format!("  on {} (index {}): {} vs {}", f.shape, f.index, f.lhs, f.rhs));
        }
        json["verification"] = serde_json::to_value(&rep)?;
    }
    Ok(Report { text: text.join("\n"), json, ok })
}

fn pair(coh: &Path, hom: &Path) -> Result<Report, Failure> {
    let c: OpExpression = read_json(coh)?;
    let h: HomologyExpression = read_json(hom)?;
    if c.p != h.p || c.n != h.n {
        return Err(Failure::Input("the two expressions differ in prime or cube dimension".into()));
    }
    let alg = SteenrodAlgebra::new(c.p);
    let calc = Calculus::new(&alg, c.n);
    let out = calc.pair(&c.root, &h.root)?;
    let mut text = out.value.to_string();
    if let Some(why) = &out.mismatch {
        text.push_str(&format!("\nnote: {why}"));
    }
    Ok(Report::ok(text, json!({"value": out.value.to_string(), "mismatch": out.mismatch})))
}

fn scenario(s: &ScenarioArgs) -> Result<SpectralScenario, Failure> {
    Ok(SpectralScenario::unvalidated(Prime::new(s.p)?, s.l, s.m, s.i, s.k, s.n)?)
}

fn ssq_page(s: &ScenarioArgs, columns: u32) -> Result<Report, Failure> {
    let sc = scenario(s)?;
    let blocks = column_blocks(&sc, columns);
    let gaps = gap_check(&blocks.iter().map(|b| b.interval).collect::<Vec<_>>());
    let show = |iv: nishida::interval::DegreeInterval| {
        iv.bounds().map_or("empty".to_string(), |(lo, hi)| format!("[{lo}, {hi}]"))
    };
    let mut text: Vec<String> = blocks
        .iter()
        .map(|b| format!("column -{} N0^{} N1^{} N2^{} {}", b.column(), b.u, b.v, b.w, show(b.interval)))
        .collect();
    text.extend(gaps.iter().map(|g| format!("gap {} width {}", show(g.interval), g.width)));
    let violations = sc.chain_violations();
    text.extend(violations.iter().map(|v| format!("note: {v}")));
    let rows: Vec<Value> = blocks
        .iter()
        .map(|b| json!({"u": b.u, "v": b.v, "w": b.w, "column": b.column(), "interval": b.interval}))
        .collect();
    Ok(Report::ok(
        text.join("\n"),
        json!({"scenario": sc, "blocks": rows, "gaps": gaps, "chain_violations": violations}),
    ))
}

fn certify_cmd(s: &ScenarioArgs, audit: bool, fixture: Option<&Path>, class: Option<&str>) -> Result<Report, Failure> {
    let prime = Prime::new(s.p)?;
    let fx = match (fixture, class) {
        (Some(path), Some(name)) => Some(
            Fixture::from_json(&read(path)?, name).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
        ),
        _ => None,
    };
    let mode = if audit { CertifyMode::Audit } else { CertifyMode::Halt };
    let cert = certify(prime, s.k, s.l, s.m, s.i, s.n, fx.as_ref(), mode)?;
    let recheck = recheck_certificate(&cert);
    let mut text: Vec<String> = cert
        .steps
        .iter()
        .map(|st| {
            let margin = st.margin.map_or(String::new(), |m| format!(" (margin {m})"));
            format!("{} {}: {}{margin}", if st.pass { "PASS" } else { "FAIL" }, st.name, st.check)
        })
        .collect();
    text.push(format!("recheck: {} steps, {} disagreements", recheck.checked, recheck.disagreements.len()));
    text.push(format!("verdict: {}", cert.verdict));
    let ok = cert.is_green() && recheck.disagreements.is_empty();
    Ok(Report { text: text.join("\n"), json: cert.to_json(), ok })
}

fn dispatch(cli: &Cli) -> Result<Report, Failure> {
    let cap = cli.config.window_cap;
    match &cli.command {
        Command::Coeff(a) => coeff(a),
        Command::Adem { p, word } => adem(*p, word, cap),
        Command::Basis { p, degree } => basis(*p, *degree, cap),
        Command::Module { input, tensor, shift } => module(input, tensor.as_deref(), *shift),
        Command::Phi { p, k, l, window } => phi(*p, *k, *l, *window),
        Command::Nishida(a) => nishida(a),
        Command::Pair { coh, hom } => pair(coh, hom),
        Command::SsqPage { scenario, columns } => ssq_page(scenario, *columns),
        Command::Certify { scenario, audit, fixture, class } => {
            certify_cmd(scenario, *audit, fixture.as_deref(), class.as_deref())
        }
    }
}

fn emit(cfg: &CliConfig, report: &Report) -> Result<(), Failure> {
    let mut body = match cfg.format {
        Format::Text => report.text.clone(),
        Format::Json => serde_json::to_string_pretty(&report.json)?,
    };
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match &cfg.output {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = dispatch(&cli).and_then(|report| {
        emit(&cli.config, &report)?;
        match report.ok {
            true => Ok(()),
            false => Err(Failure::Check("a check failed".into())),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            if cli.config.verbose {
                eprintln!("nishida: {msg}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("nishida: {msg}");
            ExitCode::from(2)
        }
    }
}
