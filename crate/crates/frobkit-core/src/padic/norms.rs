//! Norm maps along supported tower steps, the exact norm-membership criterion
//! for unramified extensions with constructive witnesses, and a Hilbert 90
//! solver by Poincare series.

use super::{make_field, Field, FieldEmbedding, PadicElement};
use crate::error::{Error, Result};
use crate::fp;

/// Galois conjugates of the relative step sup/sub are sigma^(m_sub * k); the
/// step must be unramified (equal Eisenstein parts).
fn relative_conjugates(emb: &FieldEmbedding, x: &PadicElement) -> Result<Vec<PadicElement>> {
    if emb.relative_ram_degree() != 1 {
        return Err(Error::UnsupportedTower(
            "norms are computed along unramified relative steps".into(),
        ));
    }
    let m_sub = emb.sub().unram_degree();
    let f = emb.relative_unram_degree();
    Ok((0..f).map(|k| x.sigma(m_sub * k)).collect())
}

/// Norm of x down to `emb.sub()`, as an element of the subfield.
pub fn norm(x: &PadicElement, emb: &FieldEmbedding) -> Result<PadicElement> {
    let conj = relative_conjugates(emb, x)?;
    let mut acc = PadicElement::one(emb.sup());
    for c in &conj {
        acc = acc.mul(c);
    }
    emb.extract(&acc)
}

/// Relative trace of x along the step.
pub fn relative_trace(x: &PadicElement, emb: &FieldEmbedding) -> Result<PadicElement> {
    let conj = relative_conjugates(emb, x)?;
    let mut acc = PadicElement::zero(emb.sup());
    for c in &conj {
        acc = acc.add(c);
    }
    Ok(acc)
}

pub struct NormWitness {
    pub ext: Field,
    pub embedding: FieldEmbedding,
    pub witness: PadicElement,
}

/// Exact membership in the image of the norm map from the unramified degree-f
/// extension: true iff f divides the normalized valuation (uniformizer = 1).
pub fn is_norm(x: &PadicElement, f: usize) -> Result<bool> {
    let v = x.vnum_t().ok_or(Error::PrecisionZero)?;
    Ok(v.rem_euclid(f as i64) == 0)
}

/// Membership plus a verified witness in the degree-f unramified extension.
pub fn is_norm_with_witness(x: &PadicElement, f: usize) -> Result<(bool, Option<NormWitness>)> {
    if !is_norm(x, f)? {
        return Ok((false, None));
    }
    let field = x.field();
    let ext = make_field(
        field.p(),
        field.unram_degree() * f,
        field.eisenstein().map(|c| c.to_vec()),
        field.precision(),
    )?;
    let emb = FieldEmbedding::new(field, &ext)?;
    let v = x.vnum_t().unwrap();
    let t_ext = PadicElement::uniformizer(&ext);
    // Nm(t) = t^f, so t^(v/f) covers the valuation
    let t_part = t_ext.pow(v / f as i64)?;
    let unit_part = x.shift_t(-v);
    let w_u = solve_unit_norm(&unit_part, &emb)?;
    let w = t_part.mul(&w_u);
    // verify
    let nm = norm(&w, &emb)?;
    let tol = field.precision() as i64 - 3;
    if !nm.agrees_to(x, tol) {
        return Err(Error::NoWitness(field.precision()));
    }
    Ok((true, Some(NormWitness { ext: ext.clone(), embedding: emb, witness: w })))
}

/// Solve Nm_{ext/sub}(w) = u for a unit u of the subfield, by residue-level
/// search plus 1-unit refinement along the uniformizer filtration.
fn solve_unit_norm(u: &PadicElement, emb: &FieldEmbedding) -> Result<PadicElement> {
    let sub = emb.sub();
    let ext = emb.sup();
    let f = emb.relative_unram_degree();
    if f == 1 {
        return Ok(emb.embed(u));
    }
    let u_up = emb.embed(u);
    // residue solve: enumerate the residue field of ext
    let ctx = ext.residue_ctx();
    let m_ext = ext.unram_degree();
    let p = ext.p();
    let count = (p as u128).checked_pow(m_ext as u32).filter(|&c| c <= 2_000_000);
    let Some(count) = count else {
        return Err(Error::NoWitness(ext.precision()));
    };
    let target = u.residue()?;
    let m_sub = sub.unram_degree();
    let mut w0: Option<Vec<u64>> = None;
    'search: for code in 1..count {
        let mut cand = Vec::new();
        let mut c = code;
        while c > 0 {
            cand.push((c % p as u128) as u64);
            c /= p as u128;
        }
        let cand = fp::trim(cand);
        // residue norm: product of q_sub-power conjugates
        let mut acc = vec![1u64];
        let mut conj = cand.clone();
        for _ in 0..f {
            acc = ctx.mul(&acc, &conj);
            // conj <- conj^(p^m_sub)
            for _ in 0..m_sub {
                conj = ctx.pow(&conj, p as u128);
            }
        }
        if acc == target {
            w0 = Some(cand);
            break 'search;
        }
    }
    let Some(w0) = w0 else {
        return Err(Error::NoWitness(ext.precision()));
    };
    let g = PadicElement::generator(&ext);
    let mut w = PadicElement::zero(&ext);
    for (i, &c) in w0.iter().enumerate() {
        w = w.add(&PadicElement::from_i64(&ext, c as i64).mul(&g.pow(i as i64)?));
    }
    // find a relative-trace-one-ish element theta for the additive corrections
    let mut theta = None;
    for i in 0..ext.dim() {
        let cand = g.pow((i % m_ext) as i64)?.mul(
            &PadicElement::uniformizer(&ext).pow((i / m_ext) as i64)?,
        );
        let tr = relative_trace(&cand, emb)?;
        if let Some(0) = tr.vnum_t() {
            theta = Some((cand, tr));
            break;
        }
    }
    let Some((theta, tr_theta)) = theta else {
        return Err(Error::NoWitness(ext.precision()));
    };
    let t_ext = PadicElement::uniformizer(&ext);
    let cap = ext.cap_t();
    for _ in 0..cap {
        let nm = raw_norm(&w, emb);
        let defect = u_up.sub(&nm);
        let Some(dv) = defect.vnum_t() else {
            break; // matches at precision
        };
        // defect = nm * (delta) with v(delta) = dv; correct multiplicatively:
        // Nm(w (1 + t^j z)) = Nm(w) (1 + t^j Tr(z) + ...)
        let j = dv;
        if j >= cap {
            break;
        }
        let delta = defect.div(&nm)?; // valuation j
        let z = delta
            .shift_t(0)
            .mul(&theta)
            .div(&tr_theta)?;
        w = w.mul(&PadicElement::one(&ext).add(&z));
        let _ = t_ext;
    }
    Ok(w)
}

/// Norm without extraction (stays in the extension).
fn raw_norm(x: &PadicElement, emb: &FieldEmbedding) -> PadicElement {
    let m_sub = emb.sub().unram_degree();
    let f = emb.relative_unram_degree();
    let mut acc = PadicElement::one(emb.sup());
    for k in 0..f {
        acc = acc.mul(&x.sigma(m_sub * k));
    }
    acc
}

/// Hilbert 90 for the cyclic unramified step generated by sigma^m_sub: given
/// lambda with relative norm 1, produce a with a / sigma(a) = lambda.
///
/// Poincare series: b = sum lambda^(i) sigma^i(c) over deterministic
/// candidates c in the generator-monomial sequence 1, g, g^2, ..., 1+g, ...;
/// the first candidate making b a unit wins. Verified loss budget: at most 2
/// digits.
pub fn hilbert90_solve(lambda: &PadicElement, sub_unram_degree: usize) -> Result<PadicElement> {
    let field = lambda.field().clone();
    let m = field.unram_degree();
    assert!(
        m % sub_unram_degree == 0,
        "base degree must divide the extension degree"
    );
    let n = m / sub_unram_degree;
    let step = sub_unram_degree;
    // norm check
    match lambda.vnum_t() {
        None => return Err(Error::NormNotOne("zero at precision".into())),
        Some(v) if v != 0 => {
            return Err(Error::NormNotOne(format!("{}/{}", v, field.ram_degree())));
        }
        _ => {}
    }
    let mut nm = PadicElement::one(&field);
    for i in 0..n {
        nm = nm.mul(&lambda.sigma(step * i));
    }
    let one = PadicElement::one(&field);
    let tol = field.precision() as i64 - 2;
    if !nm.agrees_to(&one, tol) {
        let v = nm.sub(&one).vnum_t().map(|v| v.to_string()).unwrap_or_default();
        return Err(Error::NormNotOne(format!("norm differs from 1 at t-order {}", v)));
    }
    // lambda^(i) prefix products
    let mut prefix = Vec::with_capacity(n);
    let mut acc = one.clone();
    for i in 0..n {
        prefix.push(acc.clone());
        acc = acc.mul(&lambda.sigma(step * i));
    }
    let g = PadicElement::generator(&field);
    let mut candidates: Vec<PadicElement> = Vec::new();
    for i in 0..m.max(1) {
        candidates.push(g.pow(i as i64)?);
    }
    for i in 1..m.max(1) {
        candidates.push(one.add(&g.pow(i as i64)?));
    }
    for i in 1..m.max(1) {
        for j in (i + 1)..m.max(1) {
            candidates.push(g.pow(i as i64)?.add(&g.pow(j as i64)?));
        }
    }
    let mut best: Option<PadicElement> = None;
    for c in &candidates {
        let mut b = PadicElement::zero(&field);
        for i in 0..n {
            b = b.add(&prefix[i].mul(&c.sigma(step * i)));
        }
        match b.vnum_t() {
            Some(0) => {
                best = Some(b);
                break;
            }
            Some(_) if best.is_none() => best = Some(b),
            _ => {}
        }
    }
    let Some(a) = best else {
        return Err(Error::NoWitness(field.precision()));
    };
    // verify a = lambda * sigma(a)
    let rhs = lambda.mul(&a.sigma(step));
    if !a.agrees_to(&rhs, tol) {
        return Err(Error::NoWitness(field.precision()));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::make_field;

    #[test]
    fn norm_of_base_element_is_power() {
        let sub = make_field(5, 1, None, 32).unwrap();
        let sup = make_field(5, 2, None, 32).unwrap();
        let emb = FieldEmbedding::new(&sub, &sup).unwrap();
        let p = PadicElement::from_i64(&sup, 5);
        let nm = norm(&p, &emb).unwrap();
        assert!(nm.agrees_to(&PadicElement::from_i64(&sub, 25), 30));
    }

    #[test]
    fn norm_is_conjugate_product_and_valuation_doubles() {
        let sub = make_field(3, 1, None, 24).unwrap();
        let sup = make_field(3, 2, None, 24).unwrap();
        let emb = FieldEmbedding::new(&sub, &sup).unwrap();
        let g = PadicElement::generator(&sup);
        let x = g.add(&PadicElement::from_i64(&sup, 3));
        let nm = norm(&x, &emb).unwrap();
        let direct = x.mul(&x.sigma(1));
        assert!(emb.embed(&nm).agrees_to(&direct, 21));
        let y = x.shift_p(2);
        assert_eq!(
            norm(&y, &emb).unwrap().valuation().unwrap(),
            num_rational::Ratio::new(2, 1) * num_rational::Ratio::new(2, 1)
                + nm.valuation().unwrap()
        );
    }

    #[test]
    fn norm_membership_criterion() {
        let f = make_field(5, 1, None, 32).unwrap();
        let p = PadicElement::from_i64(&f, 5);
        assert!(!is_norm(&p, 2).unwrap());
        let p2 = PadicElement::from_i64(&f, 25);
        assert!(is_norm(&p2, 2).unwrap());
        let u = PadicElement::from_i64(&f, 7);
        assert!(is_norm(&u, 2).unwrap() && is_norm(&u, 3).unwrap());
        let z = PadicElement::zero(&f);
        assert_eq!(is_norm(&z, 2).unwrap_err(), Error::PrecisionZero);
    }

    #[test]
    fn norm_witness_verifies() {
        let f = make_field(5, 1, None, 20).unwrap();
        let x = PadicElement::from_i64(&f, 7 * 25);
        let (ok, w) = is_norm_with_witness(&x, 2).unwrap();
        assert!(ok);
        let w = w.unwrap();
        let nm = norm(&w.witness, &w.embedding).unwrap();
        assert!(nm.agrees_to(&x, 17));
    }

    #[test]
    fn norm_witness_unit_char2() {
        let f = make_field(2, 1, None, 20).unwrap();
        let x = PadicElement::from_i64(&f, 7);
        let (ok, w) = is_norm_with_witness(&x, 3).unwrap();
        assert!(ok);
        let w = w.unwrap();
        assert!(norm(&w.witness, &w.embedding).unwrap().agrees_to(&x, 17));
    }

    #[test]
    fn hilbert90_identity_and_constructed() {
        let f = make_field(5, 2, None, 32).unwrap();
        let one = PadicElement::one(&f);
        let a = hilbert90_solve(&one, 1).unwrap();
        assert!(a.div(&a.sigma(1)).unwrap().agrees_to(&one, 30));
        // lambda = u / sigma(u) has norm 1 by telescoping
        let g = PadicElement::generator(&f);
        let u = g.add(&PadicElement::from_i64(&f, 2));
        let lambda = u.div(&u.sigma(1)).unwrap();
        let a = hilbert90_solve(&lambda, 1).unwrap();
        assert!(a.div(&a.sigma(1)).unwrap().agrees_to(&lambda, 30));
    }

    #[test]
    fn hilbert90_rejects_valuation_obstruction() {
        let f = make_field(5, 2, None, 32).unwrap();
        let p = PadicElement::from_i64(&f, 5);
        assert!(matches!(hilbert90_solve(&p, 1), Err(Error::NormNotOne(_))));
    }
}
