//! Tower embeddings between supported fields, built by Hensel root finding,
//! with exact coordinate extraction back into the subfield.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::{make_field, Field, PadicElement};
use crate::error::{Error, Result};
use crate::fp;
use crate::linalg::{self, Mat};

pub struct FieldEmbedding {
    sub: Field,
    sup: Field,
    g_img: PadicElement,
    t_img: PadicElement,
    /// images of the subfield basis monomials g^i t^j, indexed j * m_sub + i
    basis_imgs: Vec<PadicElement>,
}

fn is_p_radical(eis: &[BigInt], p: u64) -> bool {
    // x^b - p shape
    let b = eis.len() - 1;
    eis[0] == BigInt::from(-(p as i64)) && eis[b].is_one() && eis[1..b].iter().all(|c| c.is_zero())
}

impl FieldEmbedding {
    pub fn identity(field: &Field) -> Result<Self> {
        Self::new(field, field)
    }

    pub fn new(sub: &Field, sup: &Field) -> Result<Self> {
        let fail = || {
            Error::NotSubfield(
                format!("(p={}, m={}, e={})", sub.p(), sub.unram_degree(), sub.ram_degree()),
                format!("(p={}, m={}, e={})", sup.p(), sup.unram_degree(), sup.ram_degree()),
            )
        };
        if sub.p() != sup.p() || sup.unram_degree() % sub.unram_degree() != 0 {
            return Err(fail());
        }
        let t_img = match (sub.eisenstein(), sup.eisenstein()) {
            // subfield uniformizer is p itself
            (None, _) => PadicElement::from_i64(sup, sub.p() as i64),
            (Some(es), Some(eu)) if es == eu => PadicElement::uniformizer(sup),
            (Some(es), Some(eu))
                if is_p_radical(es, sub.p())
                    && is_p_radical(eu, sup.p())
                    && (eu.len() - 1) % (es.len() - 1) == 0 =>
            {
                let k = (eu.len() - 1) / (es.len() - 1);
                PadicElement::uniformizer(sup).pow(k as i64)?
            }
            _ => {
                return Err(Error::UnsupportedTower(
                    "eisenstein parts are not nested p-radical polynomials".into(),
                ))
            }
        };
        let g_img = if sub.unram_degree() == 1 {
            PadicElement::zero(sup)
        } else {
            hensel_root(sup, sub.defining_poly())?
        };
        let m = sub.unram_degree();
        let e = sub.ram_degree();
        let one = PadicElement::one(sup);
        let mut g_pows = Vec::with_capacity(m);
        let mut acc = one.clone();
        for _ in 0..m {
            g_pows.push(acc.clone());
            acc = acc.mul(&g_img);
        }
        let mut t_pows = Vec::with_capacity(e);
        let mut acc = one;
        for _ in 0..e {
            t_pows.push(acc.clone());
            acc = acc.mul(&t_img);
        }
        let mut basis_imgs = Vec::with_capacity(m * e);
        for j in 0..e {
            for i in 0..m {
                basis_imgs.push(g_pows[i].mul(&t_pows[j]));
            }
        }
        Ok(FieldEmbedding { sub: sub.clone(), sup: sup.clone(), g_img, t_img, basis_imgs })
    }

    pub fn sub(&self) -> &Field {
        &self.sub
    }
    pub fn sup(&self) -> &Field {
        &self.sup
    }
    pub fn generator_image(&self) -> &PadicElement {
        &self.g_img
    }

    pub fn uniformizer_image(&self) -> &PadicElement {
        &self.t_img
    }

    /// Relative unramified degree of the step.
    pub fn relative_unram_degree(&self) -> usize {
        self.sup.unram_degree() / self.sub.unram_degree()
    }

    /// Relative ramification index of the step.
    pub fn relative_ram_degree(&self) -> usize {
        self.sup.ram_degree() / self.sub.ram_degree()
    }

    pub fn embed(&self, x: &PadicElement) -> PadicElement {
        assert!(x.field().same_field(&self.sub), "element not in the subfield");
        let scale = (self.sup.ram_degree() / self.sub.ram_degree()).max(1) as i64;
        let Some((a, coords)) = x.integral_coordinates() else {
            return match x.known_abs_t() {
                None => PadicElement::zero(&self.sup),
                Some(abs) => PadicElement::zero_at(&self.sup, abs * scale),
            };
        };
        let m = self.sub.unram_degree();
        let mut acc = PadicElement::zero(&self.sup);
        for (idx, c) in coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cc = PadicElement::from_bigint(&self.sup, c);
            acc = acc.add(&cc.mul(&self.basis_imgs[idx]));
        }
        let _ = m;
        let shifted = acc.shift_p(a);
        match x.rel_prec_digits() {
            Some(d) => shifted.cap_rel_digits(d),
            None => shifted,
        }
    }

    /// Express a sup element in Q_p coordinates on the monomial basis of sup,
    /// carrying the element's absolute knowledge onto each coordinate so that
    /// reconstruction noise is never promoted to full precision.
    fn qp_coords(x: &PadicElement, qp: &Field, dim: usize) -> Vec<PadicElement> {
        let e = x.field().ram_degree() as i64;
        match x.integral_coordinates() {
            None => vec![PadicElement::zero(qp); dim],
            Some((a, coords)) => {
                let cap = x.known_abs_t().map(|t| t.div_euclid(e));
                coords
                    .iter()
                    .map(|c| {
                        let v = PadicElement::from_bigint(qp, c).shift_p(a);
                        match cap {
                            Some(k) => v.truncated_to_abs(k),
                            None => v,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Coordinates of x in the subfield, or an error when x does not lie in
    /// the image at precision.
    pub fn extract(&self, x: &PadicElement) -> Result<PadicElement> {
        assert!(x.field().same_field(&self.sup));
        let qp = make_field(self.sup.p(), 1, None, self.sup.precision())?;
        let dim_sup = self.sup.dim();
        let dim_sub = self.sub.dim();
        let cols: Vec<Vec<PadicElement>> = self
            .basis_imgs
            .iter()
            .map(|b| Self::qp_coords(b, &qp, dim_sup))
            .collect();
        let mut data = Vec::with_capacity(dim_sup * dim_sub);
        for r in 0..dim_sup {
            for c in cols.iter() {
                data.push(c[r].clone());
            }
        }
        let a = Mat::new(dim_sup, dim_sub, data);
        let rhs = Self::qp_coords(x, &qp, dim_sup);
        let sol = linalg::solve(&a, &rhs)
            .map_err(|_| Error::NotSubfield("element".into(), "target subfield".into()))?;
        let m = self.sub.unram_degree();
        let g = PadicElement::generator(&self.sub);
        let t = PadicElement::uniformizer(&self.sub);
        let mut acc = PadicElement::zero(&self.sub);
        for (idx, q) in sol.particular.iter().enumerate() {
            let (j, i) = (idx / m, idx % m);
            if q.is_zero_at_precision() {
                continue;
            }
            let v = q.vnum_t().unwrap();
            let c = q.unit_coefficient(0, 0);
            let term = PadicElement::from_bigint(&self.sub, &c)
                .shift_p(v)
                .mul(&g.pow(i as i64)?)
                .mul(&t.pow(j as i64)?);
            acc = acc.add(&term);
        }
        // verify the round trip before vouching for membership
        let back = self.embed(&acc);
        let tol = self.sup.precision() as i64 - 3;
        if !back.agrees_to(x, tol) {
            return Err(Error::NotSubfield(
                "element (residual after extraction)".into(),
                "target subfield".into(),
            ));
        }
        Ok(acc)
    }

    pub fn contains(&self, x: &PadicElement) -> bool {
        self.extract(x).is_ok()
    }
}

/// Hensel-lift the deterministically-first residue root of a monic integer
/// polynomial inside `field`.
pub fn hensel_root(field: &Field, poly: &[BigInt]) -> Result<PadicElement> {
    let p = BigInt::from(field.p());
    let ctx = field.residue_ctx();
    let fbar: fp::FqPoly = poly
        .iter()
        .map(|c| {
            let r = c.mod_floor(&p).to_u64().unwrap();
            if r == 0 {
                vec![]
            } else {
                vec![r]
            }
        })
        .collect();
    let roots = fp::fq_roots(ctx, &fbar);
    let root = roots
        .first()
        .ok_or_else(|| Error::NotSubfield("polynomial has no residue root".into(), "field".into()))?;
    let g = PadicElement::generator(field);
    let mut x = PadicElement::zero(field);
    for (i, &c) in root.iter().enumerate() {
        let term = PadicElement::from_i64(field, c as i64).mul(&g.pow(i as i64)?);
        x = x.add(&term);
    }
    let eval = |x: &PadicElement, poly: &[BigInt]| -> PadicElement {
        let mut acc = PadicElement::zero(field);
        for c in poly.iter().rev() {
            acc = acc.mul(x).add(&PadicElement::from_bigint(field, c));
        }
        acc
    };
    let deriv: Vec<BigInt> = (1..poly.len()).map(|i| &poly[i] * BigInt::from(i)).collect();
    let iterations = 32 - (field.precision().max(2)).leading_zeros() + 3;
    for _ in 0..iterations {
        let fx = eval(&x, poly);
        if fx.is_zero_at_precision() {
            break;
        }
        let fpx = eval(&x, &deriv);
        let corr = fx.div(&fpx)?;
        x = x.sub(&corr);
    }
    let fx = eval(&x, poly);
    if !fx.is_zero_at_precision() && fx.vnum_t().unwrap_or(i64::MAX) < field.cap_t() - 4 {
        return Err(Error::PrecisionLoss("hensel lift did not converge".into()));
    }
    Ok(x)
}
