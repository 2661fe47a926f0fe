//! Validation of datasets of Frobenius characteristic polynomials at closed
//! points: slope bounds, determinant consistency, ordinary/supersingular
//! census, trace fingerprints, and the exact root-of-unity detector behind
//! the finite-monodromy verdict.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slopes::{Slope, SlopeMultiset};

pub type Rat = Ratio<BigInt>;

/// A coefficient in Q or Q(sqrt D): a + b sqrt(D).
#[derive(Debug, Clone, PartialEq)]
pub struct Coeff {
    pub a: Rat,
    pub b: Rat,
}

impl Coeff {
    pub fn rational(a: Rat) -> Self {
        Coeff { a, b: Rat::zero() }
    }
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyForm {
    /// monic characteristic polynomial of Frobenius
    Charpoly,
    /// det(1 - F t) normalization; converted by coefficient reversal
    Lfunction,
}

#[derive(Debug, Clone)]
pub struct FrobPoint {
    pub label: String,
    pub degree: usize,
    /// monic characteristic polynomial, ascending coefficients
    pub poly: Vec<Coeff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetSpec {
    #[serde(rename = "type")]
    pub kind: DetKind,
    #[serde(default)]
    pub weight: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetKind {
    Tate,
    Trivial,
}

#[derive(Debug, Clone)]
pub struct FrobeniusDataset {
    pub p: u64,
    pub d: usize,
    pub rank: usize,
    pub det: DetSpec,
    /// discriminant when coefficients live in Q(sqrt D)
    pub sqrt_disc: Option<i64>,
    pub points: Vec<FrobPoint>,
}

fn vp_rat(x: &Rat, p: u64) -> Option<Ratio<i64>> {
    if x.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0i64;
    let mut n = x.numer().abs();
    while (&n % &p).is_zero() {
        n /= &p;
        v += 1;
    }
    let mut d = x.denom().abs();
    while (&d % &p).is_zero() {
        d /= &p;
        v -= 1;
    }
    Some(Ratio::from_integer(v))
}

/// p-adic Newton slopes of a monic polynomial with rational coefficients,
/// normalized by the given denominator (d * point degree).
pub fn rational_newton_slopes(coeffs: &[Rat], p: u64, normalize: i64) -> Result<SlopeMultiset> {
    let n = coeffs.len() - 1;
    if coeffs[n] != Rat::one() {
        return Err(Error::MalformedPolynomial("polynomial must be monic".into()));
    }
    if coeffs[0].is_zero() {
        return Err(Error::MalformedPolynomial(
            "constant coefficient must be nonzero".into(),
        ));
    }
    let pts: Vec<(i64, Ratio<i64>)> = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| vp_rat(c, p).map(|v| (i as i64, v)))
        .collect();
    let mut hull: Vec<(i64, Ratio<i64>)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if (b.1 - a.1) * Ratio::from_integer(pt.0 - a.0)
                >= (pt.1 - a.1) * Ratio::from_integer(b.0 - a.0)
            {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut slopes = Vec::new();
    for w in hull.windows(2) {
        let (i1, v1) = w[0];
        let (i2, v2) = w[1];
        let mult = (i2 - i1) as usize;
        let s = -(v2 - v1) / Ratio::from_integer(i2 - i1) / Ratio::from_integer(normalize);
        slopes.extend(std::iter::repeat(s).take(mult));
    }
    Ok(SlopeMultiset::from_list(slopes))
}

/// Norm form of a Q(sqrt D) polynomial: multiply by the conjugate to land in
/// Q[t]; rational inputs pass through.
fn rationalize(poly: &[Coeff], disc: Option<i64>) -> Result<Vec<Rat>> {
    if poly.iter().all(|c| c.is_rational()) {
        return Ok(poly.iter().map(|c| c.a.clone()).collect());
    }
    let Some(disc) = disc else {
        return Err(Error::MalformedPolynomial(
            "quadratic coefficients without a declared discriminant".into(),
        ));
    };
    let d = BigInt::from(disc);
    // (sum (a_i + b_i s) t^i)(sum (a_i - b_i s) t^i) with s^2 = D
    let n = poly.len();
    let mut out = vec![Rat::zero(); 2 * n - 1];
    for i in 0..n {
        for j in 0..n {
            let prod = &poly[i].a * &poly[j].a - &poly[i].b * &poly[j].b * Rat::from_integer(d.clone());
            out[i + j] += prod;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub label: String,
    pub degree: usize,
    /// slopes as exact-rational strings
    pub slopes: Vec<String>,
    pub half_bound_ok: bool,
    pub gap_ok: bool,
    pub det_ok: Option<bool>,
    pub class: String,
    pub isoclinic: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LintReport {
    pub points: Vec<PointReport>,
    pub all_bounds_ok: bool,
    pub all_det_ok: bool,
    pub isoclinic_everywhere: bool,
    pub ordinary_count: usize,
    pub supersingular_count: usize,
    pub invalid_count: usize,
    /// multiset fingerprint of (degree, polynomial), stable under relabeling
    pub fingerprint: String,
}

/// Slopes of the point polynomial; for quadratic coefficients the norm form
/// is used, so the multiset collects the slopes over both places above p.
pub fn point_slopes(ds: &FrobeniusDataset, pt: &FrobPoint) -> Result<SlopeMultiset> {
    let rat = rationalize(&pt.poly, ds.sqrt_disc)?;
    rational_newton_slopes(&rat, ds.p, ds.d as i64 * pt.degree as i64)
}

pub fn lint(ds: &FrobeniusDataset) -> Result<LintReport> {
    let mut points = Vec::with_capacity(ds.points.len());
    let mut fingerprint_items: Vec<String> = Vec::new();
    let (mut ord, mut ss, mut inv) = (0usize, 0usize, 0usize);
    for pt in &ds.points {
        if pt.poly.len() != ds.rank + 1 {
            return Err(Error::MalformedPolynomial(format!(
                "point {} has degree {} polynomial, expected rank {}",
                pt.label,
                pt.poly.len() - 1,
                ds.rank
            )));
        }
        let ms = point_slopes(ds, pt)?;
        let slopes = ms.as_sorted_list();
        let mean: Slope =
            slopes.iter().sum::<Slope>() / Ratio::from_integer(slopes.len() as i64);
        let centered: Vec<Slope> = slopes.iter().map(|s| s - mean).collect();
        let half = Ratio::new(1, 2);
        let half_bound_ok = if ds.rank == 2 {
            centered.iter().all(|s| s.abs() <= half)
        } else {
            centered
                .iter()
                .all(|s| s.abs() <= Ratio::from_integer(ds.rank as i64) * half)
        };
        let gap_ok = slopes
            .windows(2)
            .all(|w| (w[1] - w[0]).abs() <= Ratio::from_integer(1));
        // determinant consistency: v_p(constant) = rank * w/2 * d * degree
        let det_ok = match ds.det.kind {
            DetKind::Tate => {
                let rat = rationalize(&pt.poly, ds.sqrt_disc)?;
                let scale = if pt.poly.iter().all(|c| c.is_rational()) { 1 } else { 2 };
                let v = vp_rat(&rat[0], ds.p);
                let expect = Ratio::new(
                    ds.rank as i64 * ds.det.weight * ds.d as i64 * pt.degree as i64 * scale,
                    2,
                );
                Some(v == Some(expect))
            }
            DetKind::Trivial => {
                let rat = rationalize(&pt.poly, ds.sqrt_disc)?;
                Some(vp_rat(&rat[0], ds.p) == Some(Ratio::new(0, 1)))
            }
        };
        let rational_point = pt.poly.iter().all(|c| c.is_rational());
        let class = if ds.rank == 2
            && rational_point
            && ds.det.kind == DetKind::Tate
            && ds.det.weight == 1
        {
            match crate::dieudonne::classify_slopes(&ms, true) {
                crate::dieudonne::PointClass::Ordinary => {
                    ord += 1;
                    "ordinary".to_string()
                }
                crate::dieudonne::PointClass::Supersingular => {
                    ss += 1;
                    "supersingular".to_string()
                }
                crate::dieudonne::PointClass::Invalid { reason } => {
                    inv += 1;
                    format!("invalid: {}", reason)
                }
            }
        } else {
            "unclassified".to_string()
        };
        let isoclinic = ms.entries.len() == 1;
        fingerprint_items.push(format!(
            "{}:[{}]",
            pt.degree,
            pt.poly
                .iter()
                .map(|c| if c.is_rational() {
                    c.a.to_string()
                } else {
                    format!("{}+{}w", c.a, c.b)
                })
                .collect::<Vec<_>>()
                .join(",")
        ));
        points.push(PointReport {
            label: pt.label.clone(),
            degree: pt.degree,
            slopes: slopes.iter().map(|s| s.to_string()).collect(),
            half_bound_ok,
            gap_ok,
            det_ok,
            class,
            isoclinic,
        });
    }
    fingerprint_items.sort();
    let fingerprint = fingerprint_items.join(";");
    let all_bounds_ok = points.iter().all(|p| p.half_bound_ok && p.gap_ok);
    let all_det_ok = points.iter().all(|p| p.det_ok != Some(false));
    let isoclinic_everywhere = points.iter().all(|p| p.isoclinic);
    Ok(LintReport {
        points,
        all_bounds_ok,
        all_det_ok,
        isoclinic_everywhere,
        ordinary_count: ord,
        supersingular_count: ss,
        invalid_count: inv,
        fingerprint,
    })
}

// -- exact root-of-unity detection ----------------------------------------

/// Integer polynomial utilities, dense ascending.
fn int_poly_divide_exact(num: &[BigInt], den: &[BigInt]) -> Option<Vec<BigInt>> {
    let dn = num.len() - 1;
    let dd = den.len() - 1;
    if dn < dd {
        return None;
    }
    let mut rem: Vec<BigInt> = num.to_vec();
    let mut quot = vec![BigInt::zero(); dn - dd + 1];
    for i in (0..=dn - dd).rev() {
        let lead = rem[i + dd].clone();
        if lead.is_zero() {
            continue;
        }
        // den is monic
        quot[i] = lead.clone();
        for j in 0..=dd {
            rem[i + j] -= &lead * &den[j];
        }
    }
    if rem.iter().all(|c| c.is_zero()) {
        Some(quot)
    } else {
        None
    }
}

/// Phi_k by the recursive quotient of x^k - 1 by the proper cyclotomics.
pub fn cyclotomic(k: usize, cache: &mut BTreeMap<usize, Vec<BigInt>>) -> Vec<BigInt> {
    if let Some(f) = cache.get(&k) {
        return f.clone();
    }
    let mut num = vec![BigInt::zero(); k + 1];
    num[0] = BigInt::from(-1);
    num[k] = BigInt::one();
    let mut acc = num;
    for div in 1..k {
        if k % div == 0 {
            let phi_d = cyclotomic(div, cache);
            acc = int_poly_divide_exact(&acc, &phi_d).expect("cyclotomic division is exact");
        }
    }
    cache.insert(k, acc.clone());
    acc
}

/// Exact Kronecker test: a monic integer polynomial has all roots on the
/// unit circle iff it is a product of cyclotomic polynomials; candidates are
/// bounded by Euler phi <= degree_bound. Returns the cyclotomic indices, or
/// None when some root is off the circle.
pub fn roots_of_unity_certificate(
    poly: &[BigInt],
    degree_bound: usize,
) -> Option<Vec<usize>> {
    assert!(poly.last().map(|c| c.is_one()) == Some(true), "input must be monic");
    let mut cache = BTreeMap::new();
    // phi(k) >= sqrt(k/2), so phi(k) <= B implies k <= 2 B^2 + 1
    let kmax = 2 * degree_bound * degree_bound + 2;
    let mut rest: Vec<BigInt> = poly.to_vec();
    let mut cert = Vec::new();
    let mut progress = true;
    while rest.len() > 1 && progress {
        progress = false;
        for k in 1..=kmax {
            let phi = euler_phi(k);
            if phi > degree_bound || phi > rest.len() - 1 {
                continue;
            }
            let ck = cyclotomic(k, &mut cache);
            while let Some(q) = int_poly_divide_exact(&rest, &ck) {
                cert.push(k);
                rest = q;
                progress = true;
                if rest.len() == 1 {
                    break;
                }
            }
            if rest.len() == 1 {
                break;
            }
        }
    }
    if rest.len() == 1 && rest[0].is_one() {
        cert.sort();
        Some(cert)
    } else {
        None
    }
}

fn euler_phi(mut n: usize) -> usize {
    let mut result = n;
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            while n % q == 0 {
                n /= q;
            }
            result -= result / q;
        }
        q += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

#[derive(Debug, Clone, Serialize)]
pub struct FiniteMonodromyReport {
    pub verdict: String,
    pub failing_point: Option<String>,
    /// per-point cyclotomic certificates (label -> indices)
    pub certificates: Vec<(String, Vec<usize>)>,
}

/// Dataset-level detector: every point isoclinic of slope 0 and every
/// eigenvalue a root of unity (decided exactly through cyclotomic
/// divisibility with Euler phi bounded by rank times the trace-field
/// degree).
pub fn finite_monodromy_detect(
    ds: &FrobeniusDataset,
    trace_field_degree: usize,
) -> Result<FiniteMonodromyReport> {
    let bound = ds.rank * trace_field_degree;
    let mut certificates = Vec::new();
    for pt in &ds.points {
        let rat = rationalize(&pt.poly, ds.sqrt_disc)?;
        // integrality
        let mut int_poly = Vec::with_capacity(rat.len());
        for c in &rat {
            if !c.denom().is_one() {
                return Err(Error::NonIntegralInput(format!(
                    "point {} has non-integral coefficient {}",
                    pt.label, c
                )));
            }
            int_poly.push(c.numer().clone());
        }
        let ms = point_slopes(ds, pt)?;
        let zero = Ratio::new(0, 1);
        if !(ms.entries.len() == 1 && ms.entries[0].0 == zero) {
            return Ok(FiniteMonodromyReport {
                verdict: "infinite/unknown".into(),
                failing_point: Some(format!("{} (not isoclinic of slope 0)", pt.label)),
                certificates,
            });
        }
        match roots_of_unity_certificate(&int_poly, bound.max(int_poly.len() - 1)) {
            Some(cert) => certificates.push((pt.label.clone(), cert)),
            None => {
                return Ok(FiniteMonodromyReport {
                    verdict: "infinite/unknown".into(),
                    failing_point: Some(format!("{} (root off the unit circle)", pt.label)),
                    certificates,
                })
            }
        }
    }
    Ok(FiniteMonodromyReport { verdict: "finite".into(), failing_point: None, certificates })
}

#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub all_isoclinic: bool,
    pub excluded_points: Vec<String>,
    pub monodromy: Option<FiniteMonodromyReport>,
}

/// The rank-2, Q_p-coefficient, trivial-determinant dichotomy: each point is
/// either isoclinic of slope 0 or exhibits an excluded slope configuration
/// ({-1/2, 1/2} barred by the coefficient multiplicity rule, {-a, a} by the
/// consecutive-gap bound). When every point is isoclinic the root-of-unity
/// chain runs.
pub fn theorem_f_check(ds: &FrobeniusDataset) -> Result<DichotomyReport> {
    if ds.rank != 2 {
        return Err(Error::MalformedPolynomial("the dichotomy applies to rank 2".into()));
    }
    let mut excluded = Vec::new();
    let mut all_iso = true;
    for pt in &ds.points {
        let ms = point_slopes(ds, pt)?;
        let slopes = ms.as_sorted_list();
        let zero = Ratio::new(0, 1);
        if slopes.iter().all(|s| *s == zero) {
            continue;
        }
        all_iso = false;
        let half = Ratio::new(1, 2);
        if slopes == vec![-half, half] {
            excluded.push(format!(
                "{}: slopes {{-1/2, 1/2}} need the half slope twice over Q_p",
                pt.label
            ));
        } else if slopes.len() == 2
            && slopes[0] == -slopes[1]
            && slopes[1].is_integer()
            && slopes[1] > zero
        {
            excluded.push(format!(
                "{}: slopes {{-a, a}} violate the consecutive-gap bound",
                pt.label
            ));
        } else {
            excluded.push(format!("{}: slopes {:?} break the dichotomy", pt.label, slopes));
        }
    }
    let monodromy = if all_iso {
        Some(finite_monodromy_detect(ds, 1)?)
    } else {
        None
    };
    Ok(DichotomyReport { all_isoclinic: all_iso, excluded_points: excluded, monodromy })
}

// -- dataset JSON ----------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PointJson {
    label: String,
    degree: usize,
    poly: Vec<serde_json::Value>,
    #[serde(default = "default_form")]
    form: PolyForm,
}

fn default_form() -> PolyForm {
    PolyForm::Charpoly
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    p: u64,
    d: usize,
    rank: usize,
    det: DetSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    sqrt_disc: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    orientation: Option<String>,
    points: Vec<PointJson>,
}

fn parse_rat(v: &serde_json::Value) -> Result<Rat> {
    match v {
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rat::from_integer(BigInt::from(i)))
            } else {
                Err(Error::MalformedPolynomial(format!("coefficient {} is not an integer", n)))
            }
        }
        serde_json::Value::String(s) => {
            let parts: Vec<&str> = s.split('/').collect();
            let parse_int = |t: &str| {
                t.trim()
                    .parse::<BigInt>()
                    .map_err(|_| Error::MalformedPolynomial(format!("bad integer {}", t)))
            };
            match parts.as_slice() {
                [a] => Ok(Rat::from_integer(parse_int(a)?)),
                [a, b] => Ok(Rat::new(parse_int(a)?, parse_int(b)?)),
                _ => Err(Error::MalformedPolynomial(format!("bad rational {}", s))),
            }
        }
        _ => Err(Error::MalformedPolynomial(format!("bad coefficient {}", v))),
    }
}

fn parse_coeff(v: &serde_json::Value) -> Result<Coeff> {
    match v {
        serde_json::Value::Object(map) => {
            let a = map
                .get("a")
                .map(parse_rat)
                .transpose()?
                .unwrap_or_else(Rat::zero);
            let b = map
                .get("b")
                .map(parse_rat)
                .transpose()?
                .unwrap_or_else(Rat::zero);
            Ok(Coeff { a, b })
        }
        other => Ok(Coeff::rational(parse_rat(other)?)),
    }
}

/// Parse a dataset, converting L-function-form polynomials to monic
/// characteristic polynomials by coefficient reversal.
pub fn parse_dataset(text: &str) -> Result<FrobeniusDataset> {
    let js: DatasetJson = serde_json::from_str(text)
        .map_err(|e| Error::MalformedPolynomial(e.to_string()))?;
    let mut points = Vec::with_capacity(js.points.len());
    for pj in js.points {
        if pj.degree == 0 {
            return Err(Error::MalformedPolynomial(format!(
                "point {} has degree 0",
                pj.label
            )));
        }
        let mut poly = pj
            .poly
            .iter()
            .map(parse_coeff)
            .collect::<Result<Vec<_>>>()?;
        match pj.form {
            PolyForm::Charpoly => {
                let lead = poly.last().ok_or_else(|| {
                    Error::MalformedPolynomial("empty polynomial".into())
                })?;
                if !(lead.is_rational() && lead.a == Rat::one()) {
                    return Err(Error::MalformedPolynomial(format!(
                        "point {} polynomial is not monic",
                        pj.label
                    )));
                }
            }
            PolyForm::Lfunction => {
                let first = &poly[0];
                if !(first.is_rational() && first.a == Rat::one()) {
                    return Err(Error::MalformedPolynomial(format!(
                        "point {} L-function form must start with 1",
                        pj.label
                    )));
                }
                poly.reverse();
            }
        }
        points.push(FrobPoint { label: pj.label, degree: pj.degree, poly });
    }
    Ok(FrobeniusDataset {
        p: js.p,
        d: js.d,
        rank: js.rank,
        det: js.det,
        sqrt_disc: js.sqrt_disc,
        points,
    })
}
