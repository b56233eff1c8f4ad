use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use asmlab::asm::{check_asm_with, write_sweep_csv, FamilySpec, HbarNet, SweepRow, Verdict};
use asmlab::linalg::{hermitian_eig_with, operator_norm, ComplexMatrix};
use asmlab::measures::{
    is_projective, naimark_dilate_with, projectivity_residual, support_with, validate_povm_with, PovmDocument,
};
use asmlab::riesz::{check_positive_asymptotic_morphism_with, norm_bound_margin, quantize as integrate, FunctionBank, FunctionSpec};
use asmlab::spin::{classify_spin_povm, is_pure, roy_kar_bell, sharpness, spin_povm_from_bloch, BlochVector, SpinPovm};
use asmlab::{PassRule, Povm, Tolerances};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::{Mode, SweepArgs};

/// Exit 2 for usage, parse and configuration problems; exit 1 for domain failures.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    pub fn report(&self) -> ExitCode {
        match self {
            Self::Usage(m) => {
                eprintln!("error: {m}");
                ExitCode::from(2)
            }
            Self::Domain(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn domain(e: impl std::fmt::Display) -> Failure {
    Failure::Domain(e.to_string())
}

fn exit(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| Failure::Usage(format!("{origin}:{}:{}: {e}", e.line(), e.column())))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn read_povm(path: &Path, tol: &Tolerances) -> Result<Povm, Failure> {
    let doc: PovmDocument = read_json(path)?;
    doc.into_povm(tol).map_err(|e| domain(format!("{}: {e}", path.display())))
}

fn to_pretty(value: &impl Serialize) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn emit(value: &impl Serialize, out: Option<&Path>) -> Result<(), Failure> {
    let text = to_pretty(value);
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(usage(format!("cannot write stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

/// Serializes `base` and appends `extra` keys to the resulting object.
fn merged(base: &impl Serialize, extra: Value) -> Value {
    let mut obj = match serde_json::to_value(base).expect("report serializes") {
        Value::Object(m) => m,
        other => Map::from_iter([("report".to_string(), other)]),
    };
    if let Value::Object(m) = extra {
        obj.extend(m);
    }
    Value::Object(obj)
}

pub fn validate(file: &Path, tol: &Tolerances) -> Outcome {
    let doc: PovmDocument = read_json(file)?;
    let povm = match doc.into_povm(tol) {
        Ok(p) => p,
        Err(e) => {
            emit(&json!({ "file": file, "valid": false, "error": e.to_string() }), None)?;
            return Ok(ExitCode::from(1));
        }
    };
    let report = validate_povm_with(&povm, tol).map_err(domain)?;
    let valid = report.is_valid();
    let out = merged(
        &report,
        json!({
            "file": file,
            "valid": valid,
            "projective": is_projective(&povm, tol.projectivity),
            "projectivity_residual": projectivity_residual(&povm),
            "support": support_with(&povm, tol),
        }),
    );
    emit(&out, None)?;
    Ok(exit(valid))
}

fn rule_from(args: &SweepArgs) -> Result<PassRule, Failure> {
    let rule = PassRule {
        tail: args.rule_tail,
        slack: args.rule_slack,
        floor: args.rule_floor,
        abs_floor: args.rule_abs_floor,
    };
    let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
    if rule.tail == 0 || !finite_nonneg(rule.slack) || !finite_nonneg(rule.abs_floor) || !(finite_nonneg(rule.floor) && rule.floor > 0.0) {
        return Err(usage(format!("invalid pass rule {rule:?}: need tail >= 1, slack >= 0, floor > 0, abs_floor >= 0")));
    }
    Ok(rule)
}

fn write_csv(rows: &[SweepRow], path: &Path) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_sweep_csv(rows, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

pub fn sweep(args: &SweepArgs, tol: &Tolerances) -> Outcome {
    let net = HbarNet::geometric(args.net_start, args.net_ratio, args.net_count).map_err(usage)?;
    let rule = rule_from(args)?;
    let spec: FamilySpec = read_json(&args.family)?;
    let family = spec.build(tol).map_err(|e| usage(format!("{}: {e}", args.family.display())))?;
    let context = json!({
        "family": args.family,
        "net": { "start": args.net_start, "ratio": args.net_ratio, "count": args.net_count },
        "seed": args.seed,
        "csv": args.out,
    });
    let (report, rows, verdict) = match args.mode {
        Mode::Asm => {
            let r = check_asm_with(&family, &net, &rule, tol).map_err(domain)?;
            let v = r.verdict;
            (merged(&r, json!({ "mode": "asm" })), r.rows, v)
        }
        Mode::Morphism => {
            let bank = FunctionBank::standard(&family.space(), args.smooth, args.seed);
            let r = check_positive_asymptotic_morphism_with(&family, &bank, &net, &rule, args.seed, tol).map_err(domain)?;
            let v = r.verdict;
            (merged(&r, json!({ "mode": "morphism" })), r.rows, v)
        }
    };
    if let Some(path) = &args.out {
        write_csv(&rows, path)?;
    }
    emit(&merged(&report, context), None)?;
    Ok(exit(verdict == Verdict::Pass))
}

fn spin_effects(p: &Povm) -> Result<(usize, usize), Failure> {
    if p.len() != 2 {
        return Err(domain(format!("a spin POVM has 2 outcomes, found {}", p.len())));
    }
    let space = p.space();
    match (space.index_of("+"), space.index_of("-")) {
        (Ok(i), Ok(j)) => Ok((i, j)),
        _ => Ok((0, 1)),
    }
}

pub fn spin_classify(file: &Path, tol: &Tolerances) -> Outcome {
    let p = read_povm(file, tol)?;
    let (i, j) = spin_effects(&p)?;
    let spin = SpinPovm::with_tol(p.effect(i).clone(), p.effect(j).clone(), tol).map_err(domain)?;
    let x = classify_spin_povm(&spin).map_err(domain)?;
    let s = sharpness(&x);
    emit(
        &json!({
            "bloch": x,
            "lambda": x.norm(),
            "reality": s.reality,
            "unsharpness": s.unsharpness,
            "sharp": is_pure(&x, tol.ball),
        }),
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}

/// Parses `x,y,z`.
fn parse_vector(text: &str, what: &str) -> Result<[f64; 3], Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("{what}: {e} in {text:?}")))?;
    parts.try_into().map_err(|_| usage(format!("{what}: expected three components x,y,z, got {text:?}")))
}

pub fn spin_build(bloch: &str, out: Option<&Path>, tol: &Tolerances) -> Outcome {
    let components = parse_vector(bloch, "bloch vector")?;
    let x = BlochVector::with_tol(components, tol).map_err(domain)?;
    let povm = spin_povm_from_bloch(&x).to_povm();
    emit(&povm, out)?;
    Ok(ExitCode::SUCCESS)
}

pub fn bell(hbar: f64, n: &str) -> Outcome {
    let direction = parse_vector(n, "--n")?;
    let report = roy_kar_bell(hbar, direction).map_err(usage)?;
    emit(&merged(&report, json!({ "n": direction })), None)?;
    Ok(ExitCode::SUCCESS)
}

pub fn dilate(file: &Path, out: Option<&Path>, tol: &Tolerances) -> Outcome {
    let p = read_povm(file, tol)?;
    let d = naimark_dilate_with(&p, tol).map_err(domain)?;
    let dim = p.dim();
    let isometry_residual = (&d.isometry.gram() - &ComplexMatrix::identity(dim)).max_abs();
    let compression_error = d
        .compressions()
        .iter()
        .zip(p.effects())
        .map(|(c, e)| (c - e.matrix()).max_abs())
        .fold(0.0, f64::max);
    emit(
        &json!({
            "dim": dim,
            "dilated_dim": d.isometry.rows(),
            "isometry": d.isometry.to_rows(),
            "projections": d.projections.povm(),
            "isometry_residual": isometry_residual,
            "max_compression_error": compression_error,
            "projective": is_projective(d.projections.povm(), tol.projectivity),
        }),
        out,
    )?;
    Ok(ExitCode::SUCCESS)
}

pub fn quantize(file: &Path, function: &str, tol: &Tolerances) -> Outcome {
    let p = read_povm(file, tol)?;
    let spec: FunctionSpec = match function.strip_prefix('@') {
        Some(path) => read_json(Path::new(path))?,
        None => parse_json(function, "--function")?,
    };
    let f = spec.sample(p.space()).map_err(|e| usage(format!("--function: {e}")))?;
    let q = integrate(&p, &f.values).map_err(domain)?;
    let min_eigenvalue = hermitian_eig_with(&q, tol).map_err(domain)?.values[0];
    emit(
        &json!({
            "function": f.name,
            "values": f.values,
            "operator": q.matrix(),
            "operator_norm": operator_norm(q.matrix()),
            "sup_norm": f.sup_norm(),
            "total_norm": operator_norm(p.total().matrix()),
            "norm_bound_margin": norm_bound_margin(&p, &f.values).map_err(domain)?,
            "min_eigenvalue": min_eigenvalue,
        }),
        None,
    )?;
    Ok(ExitCode::SUCCESS)
}
