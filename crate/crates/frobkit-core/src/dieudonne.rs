//! Integral lattices for objects with Q_p coefficients: saturation into an
//! F-stable lattice when the slopes permit, Verschiebung with FV = VF = p in
//! the admissible slope window, and pointwise ordinary/supersingular
//! classification.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::Zero;

use crate::coeff::CoeffRing;
use crate::error::{Error, Result};
use crate::isocrystal::{CharPoly, Isocrystal};
use crate::linalg::{self, Mat};
use crate::padic::{Field, PadicElement};
use crate::slopes::{newton_slopes, Slope, SlopeMultiset};

/// An F-stable lattice with integral Frobenius, and a Verschiebung when the
/// slopes lie in [0, 1].
pub struct DieudonneModule {
    pub ring: CoeffRing,
    /// rows span the lattice over the integers of the factor field
    pub lattice: Mat,
    pub f_int: Mat,
    /// p F^(-1), present in Dieudonne mode
    pub v_int: Option<Mat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeMode {
    FCrystal,
    Dieudonne,
}

fn require_qp_coefficients(m: &Isocrystal) -> Result<()> {
    let l = m.ring().l_field();
    if l.unram_degree() != 1 || l.ram_degree() != 1 {
        return Err(Error::UnsupportedTower(
            "integral lattices are built for Q_p coefficients".into(),
        ));
    }
    Ok(())
}

/// Reduce a field element modulo p^k (coordinates into [0, p^k)).
fn reduce_mod_pk(x: &PadicElement, k: i64, field: &Field) -> PadicElement {
    if k <= 0 {
        return PadicElement::zero(field);
    }
    let Some((a, coords)) = x.integral_coordinates() else {
        return PadicElement::zero(field);
    };
    if a >= k {
        return PadicElement::zero(field);
    }
    let p = BigInt::from(field.p());
    let pk = p.pow((k - a) as u32);
    let m = field.unram_degree();
    let g = PadicElement::generator(field);
    let t = PadicElement::uniformizer(field);
    let mut acc = PadicElement::zero(field);
    for (idx, c) in coords.iter().enumerate() {
        use num_integer::Integer;
        let c = c.mod_floor(&pk);
        if c.is_zero() {
            continue;
        }
        let (j, i) = (idx / m, idx % m);
        acc = acc.add(
            &PadicElement::from_bigint(field, &c)
                .mul(&g.pow(i as i64).unwrap())
                .mul(&t.pow(j as i64).unwrap()),
        );
    }
    acc.shift_p(a)
}

/// Hermite-style reduction of generating rows into a canonical triangular
/// lattice basis over the integers of the (unramified) factor field.
fn lattice_reduce(rows: &Mat) -> Result<Mat> {
    let field = rows.data[0].field().clone();
    let n = rows.cols;
    let mut work = rows.clone();
    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..n {
        // min-valuation pivot among remaining rows
        let mut best: Option<(usize, i64)> = None;
        for r in row..work.rows {
            if let Some(v) = work.at(r, col).vnum_t() {
                if best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((r, v));
                }
            }
        }
        let Some((prow, pv)) = best else { continue };
        // swap
        for c in 0..n {
            let cols = work.cols;
            work.data.swap(row * cols + c, prow * cols + c);
        }
        // scale the pivot row by the unit to make the pivot exactly p^v
        let unit = work.at(row, col).shift_p(-pv);
        let unit_inv = unit.inverse()?;
        for c in 0..n {
            let t = work.at(row, c).mul(&unit_inv);
            *work.at_mut(row, c) = t;
        }
        // eliminate below; factors are integral because the pivot has the
        // minimal valuation in the column
        for r in row + 1..work.rows {
            if work.at(r, col).is_zero_at_precision() {
                continue;
            }
            let factor = work.at(r, col).div(work.at(row, col))?;
            for c in 0..n {
                let t = factor.mul(work.at(row, c));
                *work.at_mut(r, c) = work.at(r, c).sub(&t);
            }
        }
        pivot_rows.push(row);
        row += 1;
        if row == n {
            break;
        }
    }
    if row < n {
        return Err(Error::PrecisionLoss("generators do not span full rank".into()));
    }
    // canonical form: entries above each pivot reduced modulo the pivot
    let mut basis = Mat::zero(&field, n, n);
    for i in 0..n {
        for j in 0..n {
            *basis.at_mut(i, j) = work.at(i, j).clone();
        }
    }
    for i in (0..n).rev() {
        let pv = basis.at(i, i).vnum_t().ok_or(Error::PrecisionZero)?;
        for r in 0..i {
            // subtract the integral part of (entry / pivot) times the pivot row
            let entry = basis.at(r, i).clone();
            let Some(ev) = entry.vnum_t() else { continue };
            let _ = ev;
            let reduced = reduce_mod_pk(&entry, pv, &field);
            let delta = entry.sub(&reduced);
            if delta.is_zero_at_precision() {
                continue;
            }
            let q = delta.div(basis.at(i, i))?;
            for c in 0..n {
                let t = q.mul(basis.at(i, c));
                *basis.at_mut(r, c) = basis.at(r, c).sub(&t);
            }
        }
    }
    Ok(basis)
}

/// Saturate the standard lattice under F: Lambda <- Lambda + F Lambda until
/// stable, with the iteration bound certified from the slopes.
pub fn katz_lattice(m: &Isocrystal, mode: LatticeMode) -> Result<DieudonneModule> {
    require_qp_coefficients(m)?;
    let cp = m.char_poly()?;
    let slopes = newton_slopes(&cp)?;
    let zero: Slope = Ratio::new(0, 1);
    let one: Slope = Ratio::new(1, 1);
    for &(s, _) in &slopes.entries {
        if s < zero {
            return Err(Error::NegativeSlope(s.to_string()));
        }
        if mode == LatticeMode::Dieudonne && s > one {
            return Err(Error::SlopeAboveOne(s.to_string()));
        }
    }
    let ring = m.ring().clone();
    let field = ring.factor_field().clone();
    let n = m.rank();
    let s_mat = m.matrix().factor(0);
    // scale the standard lattice so that F maps it into itself eventually:
    // start integral; saturation only grows by bounded denominators
    let max_den = slopes
        .entries
        .iter()
        .map(|(s, _)| *s.denom())
        .max()
        .unwrap_or(1) as usize;
    let bound = n * ring.d() * max_den + 4;
    let apply_f = |b: &Mat| -> Mat {
        // rows v -> sigma(v) S  (sigma acts entrywise, d-th power bookkeeping
        // is irrelevant for the lattice: F itself is the crystal Frobenius)
        let mut out = Mat::zero(&field, b.rows, n);
        for i in 0..b.rows {
            for j in 0..n {
                let mut acc = PadicElement::zero(&field);
                for k in 0..n {
                    acc = acc.add(&b.at(i, k).sigma(1).mul(s_mat.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    };
    let mut lattice = Mat::identity(&field, n);
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        if iterations > bound {
            return Err(Error::PrecisionLoss(format!(
                "saturation did not stabilize within the certified bound {}",
                bound
            )));
        }
        let f_img = apply_f(&lattice);
        // scale F image into the integral range for stacking
        let mut stacked = Mat::zero(&field, 2 * n, n);
        for i in 0..n {
            for j in 0..n {
                *stacked.at_mut(i, j) = lattice.at(i, j).clone();
                *stacked.at_mut(n + i, j) = f_img.at(i, j).clone();
            }
        }
        let reduced = lattice_reduce(&stacked)?;
        if reduced.agrees_to(&lattice, (field.precision() as i64 - 4).max(2)) {
            break;
        }
        lattice = reduced;
    }
    // F matrix on the lattice: X with X B = sigma(B) S
    let fb = apply_f(&lattice);
    let bt = lattice.transpose();
    let mut f_int = Mat::zero(&field, n, n);
    for i in 0..n {
        let rhs: Vec<PadicElement> = (0..n).map(|j| fb.at(i, j).clone()).collect();
        let sol = linalg::solve(&bt, &rhs)?;
        for j in 0..n {
            *f_int.at_mut(i, j) = sol.particular[j].clone();
        }
    }
    for x in &f_int.data {
        if x.vnum_t().map_or(false, |v| v < 0) {
            return Err(Error::PrecisionLoss("frobenius not integral on the lattice".into()));
        }
    }
    let v_int = if mode == LatticeMode::Dieudonne {
        // V = p F^(-1) as a sigma^(-1)-linear map: matrix p sigma^(-1)(X^(-1))
        let x_inv = linalg::inverse(&f_int)?;
        let mback = field.unram_degree();
        let inv_pow = (mback - 1) % mback;
        let v = x_inv.map(|e| e.sigma(inv_pow).shift_p(1));
        for e in &v.data {
            if e.vnum_t().map_or(false, |w| w < 0) {
                return Err(Error::PrecisionLoss(
                    "verschiebung not integral on the lattice".into(),
                ));
            }
        }
        Some(v)
    } else {
        None
    };
    Ok(DieudonneModule { ring, lattice, f_int, v_int })
}

#[derive(Debug, Clone)]
pub struct DieudonneReport {
    pub f_integral: bool,
    pub v_integral: bool,
    pub fv_is_p: bool,
    pub vf_is_p: bool,
    pub pass: bool,
}

/// Check integrality and both composites FV = VF = p at precision.
pub fn verify_dieudonne(d: &DieudonneModule) -> DieudonneReport {
    let field = d.ring.factor_field().clone();
    let n = d.f_int.rows;
    let integral = |m: &Mat| m.data.iter().all(|x| x.vnum_t().map_or(true, |v| v >= 0));
    let f_integral = integral(&d.f_int);
    let (v_integral, fv_is_p, vf_is_p) = match &d.v_int {
        None => (false, false, false),
        Some(v) => {
            let tol = field.precision() as i64 - 4;
            let mut p_id = Mat::identity(&field, n);
            for i in 0..n {
                *p_id.at_mut(i, i) = p_id.at(i, i).shift_p(1);
            }
            // F o V: apply V then F: matrix sigma(M(V)) M(F)
            let fv = v.map(|e| e.sigma(1)).matmul(&d.f_int);
            // V o F: apply F then V: matrix sigma^(-1)(M(F)) M(V)
            let mm = field.unram_degree();
            let vf = d.f_int.map(|e| e.sigma((mm - 1) % mm)).matmul(v);
            (integral(v), fv.agrees_to(&p_id, tol), vf.agrees_to(&p_id, tol))
        }
    };
    let pass = f_integral && v_integral && fv_is_p && vf_is_p;
    DieudonneReport { f_integral, v_integral, fv_is_p, vf_is_p, pass }
}

/// Inclusion indices between two lattices spanned by row bases: the
/// valuations of the two change-of-basis determinants.
pub fn lattice_inclusion_indices(a: &Mat, b: &Mat) -> Result<(Ratio<i64>, Ratio<i64>)> {
    let binv = linalg::inverse(b)?;
    let ainv = linalg::inverse(a)?;
    let ab = a.matmul(&binv);
    let ba = b.matmul(&ainv);
    let va = linalg::det(&ab).valuation()?;
    let vb = linalg::det(&ba).valuation()?;
    Ok((va, vb))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PointClass {
    Ordinary,
    Supersingular,
    Invalid { reason: String },
}

/// Classify rank-2 slope data with Tate determinant: ordinary means slopes
/// {0, 1} and supersingular {1/2, 1/2}; anything else is invalid, with the
/// multiplicity rule for Q_p coefficients reported when it is the cause.
pub fn classify_slopes(ms: &SlopeMultiset, qp_coefficients: bool) -> PointClass {
    let list = ms.as_sorted_list();
    if list.len() != 2 {
        return PointClass::Invalid { reason: format!("expected rank 2, got {}", list.len()) };
    }
    let zero = Ratio::new(0, 1);
    let one = Ratio::new(1, 1);
    let half = Ratio::new(1, 2);
    if list[0] == zero && list[1] == one {
        return PointClass::Ordinary;
    }
    if list[0] == half && list[1] == half {
        return PointClass::Supersingular;
    }
    if qp_coefficients {
        for &(s, mult) in &ms.entries {
            let den = *s.denom() as usize;
            if mult % den != 0 {
                return PointClass::Invalid {
                    reason: format!(
                        "slope {} appears {} times, not a multiple of its denominator {}",
                        s, mult, den
                    ),
                };
            }
        }
    }
    PointClass::Invalid { reason: format!("slopes {:?} are neither ordinary nor supersingular", list) }
}

pub fn classify_point(m: &Isocrystal) -> Result<PointClass> {
    let cp = m.char_poly()?;
    classify_charpoly(&cp)
}

pub fn classify_charpoly(cp: &CharPoly) -> Result<PointClass> {
    let ms = newton_slopes(cp)?;
    let qp = cp.field.unram_degree() == 1 && cp.field.ram_degree() == 1;
    Ok(classify_slopes(&ms, qp))
}
