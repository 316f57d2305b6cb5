use std::fmt::Display;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use lgmirror_core::catalog;
use lgmirror_core::correlator::{four_point_special, four_point_via_chiodo, special_key, three_point_key, CorrelatorKey};
use lgmirror_core::mirror::{SectorForm, StateElement};
use lgmirror_core::poly::parse_polynomial;
use lgmirror_core::rational::to_i64;
use lgmirror_core::reconstruction::{prepotential, solve_four_point_sector, MAX_POINTS};
use lgmirror_core::sparse::format_monomial;
use lgmirror_core::verify::{self, Check};
use lgmirror_core::{Error, Model, Q};

#[derive(Parser)]
#[command(name = "lgmirror", version, about = "Exact Landau-Ginzburg mirror computations for invertible polynomials")]
struct Cli {
    /// Render a human-readable listing instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Polynomial such as "x1^2*x2 + x2^2".
    polynomial: Option<String>,
    /// Read the polynomial from a file instead.
    #[arg(long, conflicts_with = "polynomial")]
    file: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Weights, group, Milnor number and block decomposition.
    Info(Input),
    /// The transposed polynomial.
    Dual(Input),
    /// Standard basis with sectors and narrow/broad forms.
    Basis(Input),
    /// Structure constants of the Frobenius algebra.
    Frobenius(Input),
    /// Gram matrices of the residue and sector pairings.
    Pairing(Input),
    /// One three-point correlator of monomial insertions.
    Threept {
        #[command(flatten)]
        input: Input,
        /// Three insertions, each a monomial in the dual variables or `1`.
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"], required = true)]
        insertions: Vec<String>,
    },
    /// The special four-point correlators through both evaluations.
    Fourpoint(Input),
    /// All nonzero primary genus-zero correlators up to a point count.
    Reconstruct {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 4)]
        max_k: usize,
    },
    /// Run every consistency check on one polynomial.
    Verify(Input),
    /// Run every consistency check on a catalog of polynomials.
    Selftest {
        /// Newline-separated polynomials; the built-in catalog otherwise.
        #[arg(long)]
        catalog: Option<String>,
    },
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Display) -> Self {
        Failure { code: 2, message: message.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Poly(_) | Error::Precondition(_) | Error::Unsupported(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

/// The JSON payload of a command and whether its checks passed.
struct Outcome {
    payload: Map<String, Value>,
    passed: bool,
}

impl Outcome {
    fn ok(payload: Value) -> Self {
        Outcome { payload: into_map(payload), passed: true }
    }
}

fn into_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        other => Map::from_iter([("result".to_string(), other)]),
    }
}

fn q(x: &Q) -> Value {
    Value::String(x.to_string())
}

fn mono(e: &[u32]) -> Value {
    Value::String(format_monomial(e))
}

fn read_input(input: &Input) -> Result<String, Failure> {
    match (&input.polynomial, &input.file) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("{path}: {e}")))?;
            catalog::parse_catalog(&text)
                .into_iter()
                .next()
                .ok_or_else(|| Failure::input(format!("{path} contains no polynomial")))
        }
        (None, None) => Err(Failure::input("a polynomial or --file is required")),
    }
}

fn load(input: &Input) -> Result<(String, Model), Failure> {
    let text = read_input(input)?;
    let model = Model::from_text(&text)?;
    Ok((text, model))
}

fn info(m: &Model) -> Value {
    let inv = m.invariants();
    let blocks: Vec<Value> = m
        .w()
        .blocks()
        .iter()
        .map(|b| {
            json!({
                "kind": b.kind.to_string(),
                "exponents": b.exponents,
                "variables": b.vars.iter().map(|v| format!("x{}", v + 1)).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "polynomial": m.w().to_string(),
        "weights": inv.weights.iter().map(q).collect::<Vec<_>>(),
        "central_charge": q(&inv.central_charge),
        "milnor": to_i64(&inv.milnor_number),
        "group_order": inv.group_order,
        "group_generators": m.group().generators.iter().map(|g| g.to_string()).collect::<Vec<_>>(),
        "exponential_grading": inv.j.to_string(),
        "blocks": blocks,
        "dual": m.dual().to_string(),
        "dual_milnor": m.dim(),
    })
}

fn basis(m: &Model) -> Value {
    let elements: Vec<Value> = m
        .state()
        .elements()
        .iter()
        .enumerate()
        .map(|(i, el)| {
            let form = match &el.form {
                SectorForm::Narrow => json!("narrow"),
                SectorForm::Broad(ch) => json!({
                    "broad": ch.coefficient.to_string(),
                    "fixed": ch.fixed.iter().map(|v| format!("x{}", v + 1)).collect::<Vec<_>>(),
                }),
            };
            json!({
                "index": i,
                "monomial": mono(&el.vector.exponent),
                "exponent": el.vector.exponent,
                "strata": el.vector.strata,
                "sector": el.gamma.to_string(),
                "degree": q(m.ring().degree(i)),
                "form": form,
            })
        })
        .collect();
    json!({ "basis": elements, "unit": m.unit(), "socle": m.socle() })
}

fn frobenius(m: &Model) -> Value {
    let ring = m.ring();
    let names: Vec<String> = ring.basis().iter().map(|e| format_monomial(e)).collect();
    let mut products = Map::new();
    for i in 0..m.dim() {
        for j in i..m.dim() {
            let terms: Map<String, Value> =
                ring.basis_product(i, j).support().map(|(k, c)| (names[k].clone(), q(c))).collect();
            if !terms.is_empty() {
                products.insert(format!("{} * {}", names[i], names[j]), Value::Object(terms));
            }
        }
    }
    json!({ "basis": names, "products": products })
}

fn pairing(m: &Model) -> Outcome {
    let d = m.dim();
    let matrix = |f: &dyn Fn(usize, usize) -> Q| -> Vec<Vec<Value>> {
        (0..d).map(|i| (0..d).map(|j| q(&f(i, j))).collect()).collect()
    };
    let residue = matrix(&|i, j| m.pairing_a(&StateElement::basis(d, i), &StateElement::basis(d, j)));
    let sector = matrix(&|i, j| m.pairing_a_direct(&StateElement::basis(d, i), &StateElement::basis(d, j)));
    let equal = residue == sector;
    let names: Vec<Value> = m.ring().basis().iter().map(|e| mono(e)).collect();
    Outcome { payload: into_map(json!({ "basis": names, "residue": residue, "sector": sector, "equal": equal })), passed: equal }
}

fn parse_insertion(text: &str, nvars: usize) -> Result<Vec<u32>, Failure> {
    if text.trim() == "1" {
        return Ok(vec![0; nvars]);
    }
    let raw = parse_polynomial(text).map_err(|e| Failure::input(format!("insertion {text:?}: {e}")))?;
    match raw.monomials.as_slice() {
        [row] if raw.nvars <= nvars => {
            let mut e = row.clone();
            e.resize(nvars, 0);
            Ok(e)
        }
        [_] => Err(Failure::input(format!("insertion {text:?} uses variables beyond x{nvars}"))),
        _ => Err(Failure::input(format!("insertion {text:?} must be a single monomial"))),
    }
}

fn threept(m: &Model, insertions: &[String]) -> Result<Value, Failure> {
    let exps = insertions.iter().map(|s| parse_insertion(s, m.nvars())).collect::<Result<Vec<_>, _>>()?;
    let key = CorrelatorKey::new(exps);
    let value = three_point_key(m, &key)?;
    Ok(json!({ "key": key.to_string(), "value": q(&value) }))
}

fn fourpoint(m: &Model) -> Outcome {
    let mut expected = Vec::new();
    let mut chiodo = Vec::new();
    let mut details = Vec::new();
    let mut all_match = true;
    for i in 0..m.nvars() {
        if special_key(m, i).is_none() {
            expected.push(Value::Null);
            chiodo.push(Value::Null);
            details.push(Value::Null);
            continue;
        }
        let target = four_point_special(m, i);
        expected.push(q(&target));
        match four_point_via_chiodo(m, i) {
            Ok(eval) => {
                all_match &= eval.value == target;
                chiodo.push(q(&eval.value));
                details.push(json!({
                    "key": eval.key.to_string(),
                    "class": eval.class.to_string(),
                    "line_bundle_degrees": eval.degrees,
                    "T": eval.t.iter().map(q).collect::<Vec<_>>(),
                }));
            }
            Err(e) => {
                all_match = false;
                chiodo.push(Value::String(format!("error: {e}")));
                details.push(Value::Null);
            }
        }
    }
    Outcome {
        payload: into_map(json!({ "F": expected, "chiodo": chiodo, "match": all_match, "details": details })),
        passed: all_match,
    }
}

fn reconstruct(m: &Model, max_k: usize) -> Result<Value, Failure> {
    if !(3..=MAX_POINTS).contains(&max_k) {
        return Err(Failure::input(format!("--max-k must lie in 3..={MAX_POINTS}")));
    }
    let four = solve_four_point_sector(m)?;
    let entries = prepotential(m, max_k)?;
    let names: Vec<String> = m.ring().basis().iter().map(|e| format_monomial(e)).collect();
    let correlators: Vec<Value> = entries
        .iter()
        .map(|e| {
            json!({
                "insertions": e.key.iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
                "value": q(&e.value),
                "coefficient": q(&e.coefficient),
            })
        })
        .collect();
    Ok(json!({
        "max_k": max_k,
        "coefficient_convention": "value divided by the product of factorials of insertion multiplicities",
        "four_point_system": { "equations": four.equations, "rank": four.rank, "nonzero_residuals": four.nonzero_residuals },
        "correlators": correlators,
    }))
}

fn check_json(c: &Check) -> Value {
    json!({ "criterion": c.criterion, "name": c.name, "passed": c.passed, "expected": c.expected, "got": c.got })
}

fn verify_one(m: &Model) -> Outcome {
    let checks = verify::verify(m);
    let passed = verify::all_passed(&checks);
    Outcome {
        payload: into_map(json!({
            "checks": checks.iter().map(check_json).collect::<Vec<_>>(),
            "passed": passed,
        })),
        passed,
    }
}

fn selftest(path: Option<&str>) -> Result<Outcome, Failure> {
    let polys: Vec<(String, String)> = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::input(format!("{p}: {e}")))?;
            catalog::parse_catalog(&text).into_iter().map(|t| (t.clone(), t)).collect()
        }
        None => catalog::standard().iter().map(|e| (e.label.to_string(), e.text.to_string())).collect(),
    };
    let mut results = Vec::new();
    let mut passed = true;
    for (label, text) in polys {
        let started = Instant::now();
        let model = Model::from_text(&text).map_err(|e| Failure::input(format!("{text}: {e}")))?;
        let outcome = verify_one(&model);
        eprintln!("{label}: {} in {:.2?}", if outcome.passed { "pass" } else { "FAIL" }, started.elapsed());
        passed &= outcome.passed;
        let mut entry = outcome.payload;
        entry.insert("label".into(), json!(label));
        entry.insert("input".into(), json!(text));
        entry.insert("description".into(), json!(catalog::describe(&model)));
        results.push(Value::Object(entry));
    }
    Ok(Outcome { payload: into_map(json!({ "results": results, "passed": passed })), passed })
}

fn run(cli: &Cli) -> Result<(String, Option<String>, Outcome), Failure> {
    let with_model = |input: &Input, name: &str, f: &dyn Fn(&Model) -> Result<Outcome, Failure>| {
        let (text, model) = load(input)?;
        Ok((name.to_string(), Some(text), f(&model)?))
    };
    match &cli.command {
        Command::Info(i) => with_model(i, "info", &|m| Ok(Outcome::ok(info(m)))),
        Command::Dual(i) => with_model(i, "dual", &|m| Ok(Outcome::ok(json!({ "dual": m.dual().to_string() })))),
        Command::Basis(i) => with_model(i, "basis", &|m| Ok(Outcome::ok(basis(m)))),
        Command::Frobenius(i) => with_model(i, "frobenius", &|m| Ok(Outcome::ok(frobenius(m)))),
        Command::Pairing(i) => with_model(i, "pairing", &|m| Ok(pairing(m))),
        Command::Threept { input, insertions } => {
            with_model(input, "threept", &|m| threept(m, insertions).map(Outcome::ok))
        }
        Command::Fourpoint(i) => with_model(i, "fourpoint", &|m| Ok(fourpoint(m))),
        Command::Reconstruct { input, max_k } => {
            with_model(input, "reconstruct", &|m| reconstruct(m, *max_k).map(Outcome::ok))
        }
        Command::Verify(i) => with_model(i, "verify", &|m| Ok(verify_one(m))),
        Command::Selftest { catalog } => Ok(("selftest".into(), None, selftest(catalog.as_deref())?)),
    }
}

/// Indented `key: value` listing of a JSON value.
fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if x.is_object() || (x.is_array() && x.as_array().is_some_and(|a| a.iter().any(|e| !e.is_string()))) {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render(x, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}{k}: {}\n", scalar(x)));
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                if x.is_object() || x.as_array().is_some_and(|a| a.iter().any(|e| e.is_object() || e.is_array())) {
                    out.push_str(&format!("{pad}-\n"));
                    render(x, indent + 1, out);
                } else {
                    out.push_str(&format!("{pad}- {}\n", scalar(x)));
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(items) => format!("[{}]", items.iter().map(scalar).collect::<Vec<_>>().join(", ")),
        other => other.to_string(),
    }
}

fn emit(value: &Value, pretty: bool) {
    if pretty {
        let mut out = String::new();
        render(value, 0, &mut out);
        print!("{out}");
    } else {
        println!("{value}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            println!("{}", json!({ "error": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    let started = Instant::now();
    let result = run(&cli);
    eprintln!("elapsed: {:.3?}", started.elapsed());
    match result {
        Ok((command, input, outcome)) => {
            let mut report = outcome.payload;
            report.insert("command".into(), json!(command));
            if let Some(text) = input {
                report.insert("input".into(), json!(text));
            }
            emit(&Value::Object(report), cli.pretty);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            println!("{}", json!({ "error": f.message }));
            ExitCode::from(f.code)
        }
    }
}
