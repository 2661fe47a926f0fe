//! Command-line front end: parse input files and element expressions,
//! dispatch to the engines, and emit deterministic JSON reports.
//!
//! Exit codes: 0 success/pass, 1 mathematical obstruction or failed check
//! (with a structured report), 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use frobkit_core::descent::{self, DetClass};
use frobkit_core::dieudonne::{self, LatticeMode};
use frobkit_core::error::Error;
use frobkit_core::frobdata;
use frobkit_core::isocrystal::{Isocrystal, IsocrystalJson};
use frobkit_core::padic::{make_field, Field};
use frobkit_core::slopes;
use frobkit_core::cocycle as ccy;

#[derive(Parser)]
#[command(name = "frobkit", version, about = "exact semilinear Frobenius computations")]
struct Cli {
    /// relative p-adic precision override (also FROBKIT_PRECISION)
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Newton slopes and slope bounds of an isocrystal file
    Slopes { input: PathBuf },
    /// characteristic polynomial of the linearized Frobenius
    Charpoly { input: PathBuf },
    /// isoclinic direct-sum decomposition
    Decompose { input: PathBuf },
    /// standard-form witness over an extension of the base field
    Dm {
        input: PathBuf,
        /// growth budget multiplier for the extension degree
        #[arg(long, default_value_t = 6)]
        budget: usize,
    },
    /// descend the coefficient field (rank 1 via the norm criterion,
    /// higher rank via the filtered engine)
    Descend {
        input: PathBuf,
        /// target field: u<m> with optional r<b>, e.g. u1, u2, u1r2
        #[arg(long)]
        to: String,
    },
    /// Tate twist by a rational a/b
    Twist {
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        by: String,
    },
    /// plan the twisted descent from antisymmetric point slopes
    TwistPlan {
        /// comma-separated pair, e.g. "-1/2,1/2"
        #[arg(long, allow_hyphen_values = true)]
        point_slopes: String,
        /// declared determinant class: tate | other
        #[arg(long, default_value = "tate")]
        det: String,
        /// target coefficient field: qp | other
        #[arg(long, default_value = "qp")]
        coeff: String,
        /// q = p^d
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// cocycle of the object for the cyclic step down to the target field
    Cocycle {
        input: PathBuf,
        #[arg(long)]
        to: String,
    },
    /// integral lattice with Frobenius (and Verschiebung in dieudonne mode)
    Lattice {
        input: PathBuf,
        /// dieudonne | fcrystal
        #[arg(long, default_value = "dieudonne")]
        mode: String,
    },
    /// ordinary / supersingular / invalid classification of a rank-2 object
    Classify { input: PathBuf },
    /// validate a Frobenius characteristic-polynomial dataset
    Lint { input: PathBuf },
    /// finite-monodromy detector on a dataset
    Finmon {
        input: PathBuf,
        /// degree of the trace field over the rationals
        #[arg(long, default_value_t = 1)]
        trace_field_degree: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let precision = cli.precision.or_else(|| {
        std::env::var("FROBKIT_PRECISION")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    match run(&cli.cmd, precision) {
        Ok((code, report)) => {
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            ExitCode::from(code)
        }
        Err(e) => {
            let code = classify_error(&e);
            let report = json!({ "error": e.to_string() });
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            ExitCode::from(code)
        }
    }
}

/// Obstruction-style outcomes exit 1; malformed input and engine failures
/// exit 2.
fn classify_error(e: &Error) -> u8 {
    match e {
        Error::Obstructed { .. }
        | Error::EigenvalueNotInK
        | Error::SlopeZeroNotSimple(_)
        | Error::EndTooBig(_)
        | Error::NotIsomorphicToTwist
        | Error::NotAntisymmetricSlopes(_)
        | Error::BoundViolation(_)
        | Error::NegativeSlope(_)
        | Error::SlopeAboveOne(_)
        | Error::BudgetExceeded(_)
        | Error::NormNotOne(_)
        | Error::NotADatum(_) => 1,
        _ => 2,
    }
}

fn load_isocrystal(path: &PathBuf, precision: Option<u32>) -> Result<Isocrystal, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::MalformedPolynomial(format!("cannot read {}: {}", path.display(), e)))?;
    let mut js: IsocrystalJson = serde_json::from_str(&text)
        .map_err(|e| Error::MalformedPolynomial(format!("bad isocrystal file: {}", e)))?;
    if let Some(p) = precision {
        js.precision = p;
        js.coefficient_field.precision = p;
    }
    Isocrystal::from_json(&js)
}

/// Target-field shorthand: u<m> optionally followed by r<b> for the
/// p-radical Eisenstein part x^b - p; "qp" is u1.
fn parse_field_shorthand(s: &str, p: u64, precision: u32) -> Result<Field, Error> {
    use num_bigint::BigInt;
    let lower = s.to_ascii_lowercase();
    if lower == "qp" {
        return make_field(p, 1, None, precision);
    }
    let bad = || Error::Syntax { offset: 0, message: format!("bad field shorthand {}", s) };
    let rest = lower.strip_prefix('u').ok_or_else(bad)?;
    let (m_str, b) = match rest.find('r') {
        Some(i) => (&rest[..i], rest[i + 1..].parse::<usize>().map_err(|_| bad())?),
        None => (rest, 1usize),
    };
    let m: usize = m_str.parse().map_err(|_| bad())?;
    let eis = if b > 1 {
        let mut v = vec![BigInt::from(0); b + 1];
        v[0] = BigInt::from(-(p as i64));
        v[b] = BigInt::from(1);
        Some(v)
    } else {
        None
    };
    make_field(p, m, eis, precision)
}

fn parse_ratio(s: &str) -> Result<num_rational::Ratio<i64>, Error> {
    let bad = || Error::Syntax { offset: 0, message: format!("bad rational {}", s) };
    let parts: Vec<&str> = s.split('/').collect();
    match parts.as_slice() {
        [a] => Ok(num_rational::Ratio::from_integer(a.trim().parse().map_err(|_| bad())?)),
        [a, b] => Ok(num_rational::Ratio::new(
            a.trim().parse().map_err(|_| bad())?,
            b.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

fn slope_entries(ms: &slopes::SlopeMultiset) -> Value {
    Value::Array(
        ms.entries
            .iter()
            .map(|(s, m)| json!([s.to_string(), m]))
            .collect(),
    )
}

fn matrix_strings(m: &frobkit_core::coeff::RingMat) -> Value {
    let mut rows = Vec::new();
    for i in 0..m.rows {
        let mut row = Vec::new();
        for j in 0..m.cols {
            row.push(json!(frobkit_core::expr::ring_element_strings(m.at(i, j))));
        }
        rows.push(Value::Array(row));
    }
    Value::Array(rows)
}

fn run(cmd: &Cmd, precision: Option<u32>) -> Result<(u8, Value), Error> {
    match cmd {
        Cmd::Slopes { input } => {
            let m = load_isocrystal(input, precision)?;
            let cp = m.char_poly()?;
            let ms = slopes::newton_slopes(&cp)?;
            let bounds = slopes::slope_bounds_check(&cp, m.rank())?;
            Ok((
                0,
                json!({
                    "slopes": slope_entries(&ms),
                    "checks": {
                        "slope-half-bound": bounds.half_bound_rank2,
                        "slope-general-bound": bounds.general_bound,
                        "consecutive-gap": bounds.consecutive_gap,
                        "pass": bounds.pass,
                    }
                }),
            ))
        }
        Cmd::Charpoly { input } => {
            let m = load_isocrystal(input, precision)?;
            let cp = m.char_poly()?;
            Ok((
                0,
                json!({
                    "d": cp.d,
                    "coefficients": cp.coeffs.iter().map(|c| c.to_expr_string()).collect::<Vec<_>>(),
                }),
            ))
        }
        Cmd::Decompose { input } => {
            let m = load_isocrystal(input, precision)?;
            let parts = slopes::isoclinic_decompose(&m)?;
            let summands: Vec<Value> = parts
                .iter()
                .map(|p| {
                    json!({
                        "slope": p.slope.to_string(),
                        "rank": p.object.rank(),
                        "matrix": matrix_strings(p.object.matrix()),
                        "inclusion": matrix_strings(&p.inclusion),
                    })
                })
                .collect();
            Ok((0, json!({ "summands": summands })))
        }
        Cmd::Dm { input, budget } => {
            let m = load_isocrystal(input, precision)?;
            let w = slopes::dm_witness(&m, *budget)?;
            Ok((
                0,
                json!({
                    "extension_degree": w.extension_degree,
                    "blocks": w.block_count,
                    "standard_form": matrix_strings(w.standard_form.matrix()),
                    "base_change": matrix_strings(&w.base_change),
                }),
            ))
        }
        Cmd::Descend { input, to } => {
            let m = load_isocrystal(input, precision)?;
            let prec = m.ring().precision();
            let target = parse_field_shorthand(to, m.ring().p(), prec)?;
            let result = if m.rank() == 1 {
                descent::rank1_descend(&m, &target)
            } else {
                descent::filtered_descend(&m, &target)
            };
            match result {
                Ok(desc) => Ok((
                    0,
                    json!({
                        "descended": serde_json::to_value(desc.object.to_json()).unwrap(),
                        "certificate": matrix_strings(&desc.certificate),
                    }),
                )),
                Err(Error::Obstructed { reason, valuation }) => Ok((
                    1,
                    json!({
                        "obstruction": { "reason": reason, "valuation": valuation }
                    }),
                )),
                Err(e) => Err(e),
            }
        }
        Cmd::Twist { input, by } => {
            let m = load_isocrystal(input, precision)?;
            let r = parse_ratio(by)?;
            let (tw, stable) = m.tate_twist(*r.numer(), *r.denom())?;
            Ok((
                0,
                json!({
                    "object": serde_json::to_value(tw.to_json()).unwrap(),
                    "galois_stable": stable,
                }),
            ))
        }
        Cmd::TwistPlan { point_slopes, det, coeff, d } => {
            let parts = point_slopes
                .split(',')
                .map(parse_ratio)
                .collect::<Result<Vec<_>, _>>()?;
            let det = match det.as_str() {
                "tate" => DetClass::Tate,
                _ => DetClass::Other,
            };
            let target_is_qp = coeff.eq_ignore_ascii_case("qp");
            let plan = descent::twisted_descent_plan(&parts, *d, det, target_is_qp)?;
            Ok((
                0,
                json!({
                    "s_over_r": plan.s_over_r.to_string(),
                    "q_prime": format!("q^{}", plan.q_prime_exponent),
                    "q_prime_p_exponent": plan.q_prime_p_exponent,
                    "twist": plan.twist.to_string(),
                    "predicted_slopes": plan.predicted_slopes.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
                    "forced_half": plan.forced_half,
                }),
            ))
        }
        Cmd::Cocycle { input, to } => {
            let m = load_isocrystal(input, precision)?;
            let prec = m.ring().precision();
            let target = parse_field_shorthand(to, m.ring().p(), prec)?;
            let step = ccy::GaloisStep::new(&target, m.ring().l_field())?;
            let xi = ccy::compute_cocycle(&m, &step)?;
            let verified = ccy::verify_cocycle(&xi, &step);
            let class = ccy::cyclic_class(&xi, &step)?;
            let mut table = serde_json::Map::new();
            for i in 0..xi.order {
                for j in 0..xi.order {
                    table.insert(format!("{},{}", i, j), json!(xi.table[i][j].to_expr_string()));
                }
            }
            let code = u8::from(!class.trivial);
            Ok((
                code,
                json!({
                    "order": xi.order,
                    "table": Value::Object(table),
                    "verified": verified,
                    "invariant": class.invariant.to_expr_string(),
                    "trivial": class.trivial,
                    "witness": class.witness.map(|w| w.iter().map(|x| x.to_expr_string()).collect::<Vec<_>>()),
                }),
            ))
        }
        Cmd::Lattice { input, mode } => {
            let m = load_isocrystal(input, precision)?;
            let mode = match mode.as_str() {
                "fcrystal" => LatticeMode::FCrystal,
                _ => LatticeMode::Dieudonne,
            };
            let d = dieudonne::katz_lattice(&m, mode)?;
            let rep = dieudonne::verify_dieudonne(&d);
            let field_mat = |mm: &frobkit_core::linalg::Mat| -> Value {
                let mut rows = Vec::new();
                for i in 0..mm.rows {
                    let mut row = Vec::new();
                    for j in 0..mm.cols {
                        row.push(json!(mm.at(i, j).to_expr_string()));
                    }
                    rows.push(Value::Array(row));
                }
                Value::Array(rows)
            };
            let pass = if mode == LatticeMode::Dieudonne { rep.pass } else { rep.f_integral };
            Ok((
                u8::from(!pass),
                json!({
                    "p": m.ring().p(),
                    "d": m.ring().d(),
                    "coefficient_field": serde_json::to_value(m.ring().l_field().to_spec()).unwrap(),
                    "precision": m.ring().precision(),
                    "lattice": field_mat(&d.lattice),
                    "matrix": field_mat(&d.f_int),
                    "V": d.v_int.as_ref().map(field_mat),
                    "checks": {
                        "frobenius-integral": rep.f_integral,
                        "verschiebung-integral": rep.v_integral,
                        "fv-equals-p": rep.fv_is_p,
                        "vf-equals-p": rep.vf_is_p,
                    }
                }),
            ))
        }
        Cmd::Classify { input } => {
            let m = load_isocrystal(input, precision)?;
            let class = dieudonne::classify_point(&m)?;
            let (code, label, reason) = match class {
                dieudonne::PointClass::Ordinary => (0, "ordinary", None),
                dieudonne::PointClass::Supersingular => (0, "supersingular", None),
                dieudonne::PointClass::Invalid { reason } => (1, "invalid", Some(reason)),
            };
            Ok((code, json!({ "class": label, "reason": reason })))
        }
        Cmd::Lint { input } => {
            let text = std::fs::read_to_string(input).map_err(|e| {
                Error::MalformedPolynomial(format!("cannot read {}: {}", input.display(), e))
            })?;
            let ds = frobdata::parse_dataset(&text)?;
            let rep = frobdata::lint(&ds)?;
            let pass = rep.all_bounds_ok && rep.all_det_ok && rep.invalid_count == 0;
            Ok((u8::from(!pass), serde_json::to_value(&rep).unwrap()))
        }
        Cmd::Finmon { input, trace_field_degree } => {
            let text = std::fs::read_to_string(input).map_err(|e| {
                Error::MalformedPolynomial(format!("cannot read {}: {}", input.display(), e))
            })?;
            let ds = frobdata::parse_dataset(&text)?;
            let rep = frobdata::finite_monodromy_detect(&ds, *trace_field_degree)?;
            let dichotomy = if ds.rank == 2 && ds.det.kind == frobdata::DetKind::Trivial {
                Some(serde_json::to_value(frobdata::theorem_f_check(&ds)?).unwrap())
            } else {
                None
            };
            let code = u8::from(rep.verdict != "finite");
            Ok((
                code,
                json!({
                    "verdict": rep.verdict,
                    "failing_point": rep.failing_point,
                    "certificates": rep.certificates,
                    "dichotomy": dichotomy,
                }),
            ))
        }
    }
}
