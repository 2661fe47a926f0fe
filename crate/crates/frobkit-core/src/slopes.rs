//! Newton polygons, slope multisets, slope-pure factorization by Hensel
//! lifting at polygon vertices, isoclinic decomposition, standard-form
//! witnesses over extensions of the base finite field, and slope bounds.

use num_rational::Ratio;
use num_traits::Signed;

use crate::coeff::{RingElt, RingMat};
use crate::error::{Error, Result};
use crate::isocrystal::{standard_object, CharPoly, Isocrystal};
use crate::linalg::{self, Mat};
use crate::padic::PadicElement;

pub type Slope = Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlopeMultiset {
    /// sorted (slope, multiplicity), multiplicities positive
    pub entries: Vec<(Slope, usize)>,
}

impl SlopeMultiset {
    pub fn rank(&self) -> usize {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn single(&self) -> Option<Slope> {
        if self.entries.len() == 1 {
            Some(self.entries[0].0)
        } else {
            None
        }
    }

    pub fn as_sorted_list(&self) -> Vec<Slope> {
        let mut out = Vec::new();
        for &(s, m) in &self.entries {
            out.extend(std::iter::repeat(s).take(m));
        }
        out
    }

    pub fn from_list(mut slopes: Vec<Slope>) -> Self {
        slopes.sort();
        let mut entries: Vec<(Slope, usize)> = Vec::new();
        for s in slopes {
            match entries.last_mut() {
                Some((t, m)) if *t == s => *m += 1,
                _ => entries.push((s, 1)),
            }
        }
        SlopeMultiset { entries }
    }

    pub fn shift(&self, by: Slope) -> Self {
        SlopeMultiset { entries: self.entries.iter().map(|&(s, m)| (s + by, m)).collect() }
    }

    pub fn negate(&self) -> Self {
        let mut entries: Vec<(Slope, usize)> =
            self.entries.iter().map(|&(s, m)| (-s, m)).collect();
        entries.reverse();
        SlopeMultiset { entries }
    }
}

/// Lower-convex-hull vertices of the points (i, v_t(c_i)); valuations in
/// t-digits of the coefficient field.
fn hull_vertices(coeffs: &[PadicElement]) -> Result<Vec<(i64, i64)>> {
    let n = coeffs.len() - 1;
    if coeffs[0].is_zero_at_precision() {
        return Err(Error::PrecisionZero);
    }
    let pts: Vec<(i64, i64)> = coeffs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.vnum_t().map(|v| (i as i64, v)))
        .collect();
    debug_assert_eq!(pts.last().map(|p| p.0), Some(n as i64), "polynomial must be monic");
    let mut hull: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // keep the hull lower-convex: drop b if it lies on or above ap
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(hull)
}

/// Slopes of the polynomial read as eigenvalue data for F^d: one slope per
/// root, v_p(root) / d.
pub fn newton_slopes(p: &CharPoly) -> Result<SlopeMultiset> {
    let hull = hull_vertices(&p.coeffs)?;
    let e = p.field.ram_degree() as i64;
    let d = p.d as i64;
    let mut slopes = Vec::new();
    for w in hull.windows(2) {
        let (i1, v1) = w[0];
        let (i2, v2) = w[1];
        let mult = (i2 - i1) as usize;
        // root valuation in p-units = -(segment slope)/e, divided by d
        let s = Ratio::new(-(v2 - v1), (i2 - i1) * e * d);
        slopes.extend(std::iter::repeat(s).take(mult));
    }
    Ok(SlopeMultiset::from_list(slopes))
}

// -- polynomial helpers over a single field -------------------------------

pub(crate) fn poly_mul(a: &[PadicElement], b: &[PadicElement]) -> Vec<PadicElement> {
    let field = a[0].field().clone();
    let mut out = vec![PadicElement::zero(&field); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero_at_precision() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&x.mul(y));
        }
    }
    out
}

pub(crate) fn poly_sub(a: &[PadicElement], b: &[PadicElement]) -> Vec<PadicElement> {
    let field = a[0].field().clone();
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| PadicElement::zero(&field));
            let y = b.get(i).cloned().unwrap_or_else(|| PadicElement::zero(&field));
            x.sub(&y)
        })
        .collect()
}

pub(crate) fn poly_eval_mat(coeffs: &[PadicElement], a: &Mat, embed: impl Fn(&PadicElement) -> PadicElement) -> Mat {
    let field = a.data[0].field().clone();
    let n = a.rows;
    let mut acc = Mat::zero(&field, n, n);
    for c in coeffs.iter().rev() {
        acc = acc.matmul(a);
        let ce = embed(c);
        for i in 0..n {
            *acc.at_mut(i, i) = acc.at(i, i).add(&ce);
        }
    }
    acc
}

/// Split a monic polynomial at a Newton-polygon vertex index k: returns
/// (lower factor of degree k carrying the steeper left segments, upper
/// factor of degree n-k), with product equal to the input at precision.
fn split_at_vertex(p: &[PadicElement], k: usize) -> Result<(Vec<PadicElement>, Vec<PadicElement>)> {
    let field = p[0].field().clone();
    let n = p.len() - 1;
    assert!(k > 0 && k < n);
    let ak_inv = p[k].inverse().map_err(|_| Error::PrecisionZero)?;
    let mut q: Vec<PadicElement> = (0..=k).map(|i| p[i].mul(&ak_inv)).collect();
    let mut r: Vec<PadicElement> = (k..=n).map(|i| p[i].clone()).collect();
    let cap = field.precision() as i64 * field.ram_degree() as i64;
    let mut last_defect = i64::MIN;
    let mut stall = 0;
    for _ in 0..(2 * cap + 16) {
        let e = poly_sub(p, &poly_mul(&q, &r));
        // defect size: min t-valuation of e
        let defect = e
            .iter()
            .filter_map(|c| c.vnum_t())
            .min();
        let Some(defect) = defect else {
            // zero at precision: done
            return Ok((q, r));
        };
        if defect <= last_defect {
            stall += 1;
            if stall > 3 {
                return Err(Error::InseparableSlopes(format!(
                    "hensel correction stalled at t-order {}",
                    defect
                )));
            }
        } else {
            stall = 0;
        }
        last_defect = defect;
        // solve dq * r + q * dr = e, deg dq < k, deg dr < n - k
        let rows = n; // coefficients 0 .. n-1 of the correction equation
        let cols = n;
        let mut a = Mat::zero(&field, rows, cols);
        for i in 0..k {
            // column i: coefficient i of dq, contributes r shifted by i
            for (j, rc) in r.iter().enumerate() {
                if i + j < rows {
                    *a.at_mut(i + j, i) = a.at(i + j, i).add(rc);
                }
            }
        }
        for i in 0..(n - k) {
            for (j, qc) in q.iter().enumerate() {
                if i + j < rows {
                    *a.at_mut(i + j, k + i) = a.at(i + j, k + i).add(qc);
                }
            }
        }
        let rhs: Vec<PadicElement> = (0..rows)
            .map(|i| e.get(i).cloned().unwrap_or_else(|| PadicElement::zero(&field)))
            .collect();
        let sol = linalg::solve(&a, &rhs).map_err(|_| {
            Error::InseparableSlopes("correction system is singular at precision".into())
        })?;
        for i in 0..k {
            q[i] = q[i].add(&sol.particular[i]);
        }
        for i in 0..(n - k) {
            r[i] = r[i].add(&sol.particular[k + i]);
        }
    }
    Err(Error::PrecisionLoss("vertex splitting did not converge".into()))
}

/// Factor a monic polynomial into slope-pure monic factors along its Newton
/// polygon. Slopes are reported in the same normalization as newton_slopes.
pub fn slope_factor(p: &CharPoly) -> Result<Vec<(Slope, Vec<PadicElement>)>> {
    let e = p.field.ram_degree() as i64;
    let d = p.d as i64;
    let tol_den = e * d * 4;
    let mut out = Vec::new();
    let mut rest: Vec<PadicElement> = p.coeffs.clone();
    loop {
        let hull = hull_vertices(&rest)?;
        if hull.len() < 2 {
            break;
        }
        if hull.len() == 2 {
            let (i1, v1) = hull[0];
            let (i2, v2) = hull[1];
            let s = Ratio::new(-(v2 - v1), (i2 - i1) * e * d);
            out.push((s, rest));
            break;
        }
        // separation guard between the first two segments, measured on the
        // normalized slopes
        let s0 = Ratio::new(-(hull[1].1 - hull[0].1), (hull[1].0 - hull[0].0) * e * d);
        let s1 = Ratio::new(-(hull[2].1 - hull[1].1), (hull[2].0 - hull[1].0) * e * d);
        if (s1 - s0).abs() <= Ratio::new(1, tol_den) {
            return Err(Error::InseparableSlopes(format!(
                "adjacent slopes {} and {} are closer than the guard",
                s0, s1
            )));
        }
        let k = hull[1].0 as usize;
        let (q, r) = split_at_vertex(&rest, k)?;
        let s = Ratio::new(-(hull[1].1 - hull[0].1), (hull[1].0 - hull[0].0) * e * d);
        out.push((s, q));
        rest = r;
    }
    // verify the product, then report
    let mut prod = vec![PadicElement::one(&p.field)];
    for (_, f) in &out {
        prod = poly_mul(&prod, f);
    }
    let tol = p.field.precision() as i64 - 3;
    for (a, b) in prod.iter().zip(p.coeffs.iter()) {
        if !a.agrees_to(b, tol) {
            return Err(Error::PrecisionLoss(
                "slope factorization product check failed".into(),
            ));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

pub struct IsoclinicSummand {
    pub slope: Slope,
    pub object: Isocrystal,
    /// rows are the coordinates of the summand basis inside the ambient object
    pub inclusion: RingMat,
}

/// Direct sum decomposition into isoclinic summands: the slope-lambda summand
/// is the kernel of the slope-pure factor evaluated at F^d, computed per ring
/// factor with a cross-factor dimension consistency check.
pub fn isoclinic_decompose(m: &Isocrystal) -> Result<Vec<IsoclinicSummand>> {
    let cp = m.char_poly()?;
    let slopes = newton_slopes(&cp)?;
    if slopes.entries.len() <= 1 {
        let slope = slopes.single().ok_or(Error::PrecisionZero)?;
        return Ok(vec![IsoclinicSummand {
            slope,
            object: m.clone(),
            inclusion: RingMat::identity(m.ring(), m.rank()),
        }]);
    }
    let factors = slope_factor(&cp)?;
    let ring = m.ring().clone();
    let a = m.linearize();
    let r = ring.factor_count();
    let n = m.rank();
    let emb = ring.l_embedding();
    let mut out = Vec::new();
    let mut total = 0usize;
    for (slope, fpoly) in &factors {
        let deg = fpoly.len() - 1;
        let mut per_factor_kernels = Vec::with_capacity(r);
        for fi in 0..r {
            let af = a.factor(fi);
            // F acts on rows, so the summand is the row null space
            let pa = poly_eval_mat(fpoly, &af, |c| emb.embed(c)).transpose();
            let ker = linalg::kernel(&pa)?;
            if ker.len() != deg {
                return Err(Error::FactorInconsistency(format!(
                    "slope {} kernel has dimension {} in factor {}, expected {}",
                    slope,
                    ker.len(),
                    fi,
                    deg
                )));
            }
            per_factor_kernels.push(ker);
        }
        // glue rows into ring vectors
        let mut rows: Vec<RingElt> = Vec::with_capacity(deg * n);
        for j in 0..deg {
            for col in 0..n {
                let comp: Vec<PadicElement> = (0..r)
                    .map(|fi| per_factor_kernels[fi][j][col].clone())
                    .collect();
                rows.push(RingElt::from_components(&ring, comp));
            }
        }
        let w = RingMat::new(&ring, deg, n, rows);
        let sub = restrict_to_stable_rows(m, &w)?;
        out.push(IsoclinicSummand { slope: *slope, object: sub, inclusion: w });
        total += deg;
    }
    if total != n {
        return Err(Error::FactorInconsistency(format!(
            "summand ranks sum to {}, expected {}",
            total, n
        )));
    }
    // the stacked inclusions must be invertible: reassembly is an isomorphism
    let mut stacked = RingMat::zero(&ring, n, n);
    let mut row = 0;
    for s in &out {
        for i in 0..s.inclusion.rows {
            for j in 0..n {
                *stacked.at_mut(row, j) = s.inclusion.at(i, j).clone();
            }
            row += 1;
        }
    }
    if !stacked.is_invertible() {
        return Err(Error::FactorInconsistency(
            "summand inclusions do not reassemble to an isomorphism".into(),
        ));
    }
    Ok(out)
}

/// The matrix of F on an F-stable row space W: solve X W = (rows of F applied
/// to W) per ring factor.
pub(crate) fn restrict_to_stable_rows(m: &Isocrystal, w: &RingMat) -> Result<Isocrystal> {
    let ring = m.ring().clone();
    let k = w.rows;
    let fw_rows: Vec<Vec<RingElt>> = (0..k)
        .map(|i| {
            let row: Vec<RingElt> = (0..w.cols).map(|j| w.at(i, j).clone()).collect();
            m.apply_semilinear(&row)
        })
        .collect();
    let r = ring.factor_count();
    let mut x_factors = Vec::with_capacity(r);
    for fi in 0..r {
        let wf = w.factor(fi); // k x n
        let wft = wf.transpose(); // n x k
        let mut xf = Mat::zero(ring.factor_field(), k, k);
        for i in 0..k {
            let rhs: Vec<PadicElement> = (0..w.cols)
                .map(|j| fw_rows[i][j].components()[fi].clone())
                .collect();
            let sol = linalg::solve(&wft, &rhs).map_err(|_| {
                Error::FactorInconsistency("row space is not F-stable at precision".into())
            })?;
            for j in 0..k {
                *xf.at_mut(i, j) = sol.particular[j].clone();
            }
        }
        x_factors.push(xf);
    }
    Isocrystal::new(&ring, RingMat::from_factors(&ring, &x_factors))
}

#[derive(Debug, Clone)]
pub struct SlopeBoundsReport {
    pub slopes: Vec<Slope>,
    pub centered: Vec<Slope>,
    pub half_bound_rank2: Option<bool>,
    pub general_bound: bool,
    pub consecutive_gap: bool,
    pub pass: bool,
}

/// Centered slope bounds: |centered slope| bounded by n/2 (by 1/2 for rank
/// 2) and consecutive slopes differing by at most 1.
pub fn slope_bounds_check(p: &CharPoly, rank: usize) -> Result<SlopeBoundsReport> {
    let ms = newton_slopes(p)?;
    let slopes = ms.as_sorted_list();
    let mean: Slope = slopes.iter().sum::<Slope>() / Ratio::from_integer(slopes.len() as i64);
    let centered: Vec<Slope> = slopes.iter().map(|s| s - mean).collect();
    let half = Ratio::new(1i64, 2);
    let general_bound = centered
        .iter()
        .all(|s| s.abs() <= Ratio::from_integer(rank as i64) * half);
    let half_bound_rank2 = if rank == 2 {
        Some(centered.iter().all(|s| s.abs() <= half))
    } else {
        None
    };
    let consecutive_gap = slopes
        .windows(2)
        .all(|w| (w[1] - w[0]).abs() <= Ratio::from_integer(1));
    let pass = general_bound && half_bound_rank2.unwrap_or(true) && consecutive_gap;
    Ok(SlopeBoundsReport { slopes, centered, half_bound_rank2, general_bound, consecutive_gap, pass })
}

pub struct DmWitness {
    /// absolute degree over F_p of the extension used
    pub extension_degree: usize,
    /// the pulled-back object over that extension
    pub extended: Isocrystal,
    /// base change whose conjugation brings the extended object to the
    /// standard block-diagonal form
    pub base_change: RingMat,
    /// the standard form itself, a direct sum of standard objects
    pub standard_form: Isocrystal,
    pub block_count: usize,
}

/// Decompose an isoclinic object into standard blocks over an extension of
/// the base field. Succeeds exactly when the linearized eigenvalues become
/// exact powers of p within the growth budget.
pub fn dm_witness(m: &Isocrystal, budget_multiplier: usize) -> Result<DmWitness> {
    let cp = m.char_poly()?;
    let slopes = newton_slopes(&cp)?;
    let Some(slope) = slopes.single() else {
        return Err(Error::PrecisionLoss(
            "standard-form witness requires an isoclinic input".into(),
        ));
    };
    let s = *slope.numer();
    let r = *slope.denom() as usize;
    let d = m.ring().d();
    let base = lcm(d, r);
    let budget = budget_multiplier.max(1);
    let tol = m.ring().precision() as i64 - 4;
    for j in 1..=budget {
        let big_r = base * j;
        let ext = m.base_extend(big_r)?;
        match dm_attempt(&ext, s, r, big_r, tol) {
            Ok(Some((p, std_form, blocks))) => {
                return Ok(DmWitness {
                    extension_degree: big_r,
                    extended: ext,
                    base_change: p,
                    standard_form: std_form,
                    block_count: blocks,
                });
            }
            Ok(None) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BudgetExceeded((base * budget) as u32))
}

fn lcm(a: usize, b: usize) -> usize {
    let mut x = a;
    let mut y = b;
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

fn dm_attempt(
    ext: &Isocrystal,
    s: i64,
    r: usize,
    big_r: usize,
    tol: i64,
) -> Result<Option<(RingMat, Isocrystal, usize)>> {
    let ring = ext.ring().clone();
    let n = ext.rank();
    if n % r != 0 {
        return Ok(None);
    }
    let mu = n / r;
    let a = ext.linearize();
    let eig_exp = s * (big_r as i64) / (r as i64);
    let nf = ring.factor_count();
    // eigenspace of A for the exact eigenvalue p^eig_exp, per factor
    let mut kernels = Vec::with_capacity(nf);
    for fi in 0..nf {
        let mut b = a.factor(fi);
        let lam = PadicElement::one(ring.factor_field()).shift_p(eig_exp);
        for i in 0..n {
            *b.at_mut(i, i) = b.at(i, i).sub(&lam);
        }
        // row eigenvectors: null space of the transpose
        let ker = linalg::kernel(&b.transpose())?;
        if ker.len() != n {
            // eigenvalue not exact over this extension yet
            return Ok(None);
        }
        kernels.push(ker);
    }
    // candidate rows from the glued eigenbasis, each swept through scalar
    // multiples by generator monomials: the averaging below can telescope to
    // zero on a bad scalar line (eigenvalue -1 with the constant seed, say)
    // while a twisted multiple survives
    let mut candidates: Vec<Vec<RingElt>> = Vec::new();
    let g = PadicElement::generator(ring.factor_field());
    let m_deg = ring.factor_field().unram_degree();
    for j in 0..n {
        let row: Vec<RingElt> = (0..n)
            .map(|col| {
                let comp: Vec<PadicElement> =
                    (0..nf).map(|fi| kernels[fi][j][col].clone()).collect();
                RingElt::from_components(&ring, comp)
            })
            .collect();
        for pow in 0..m_deg.max(1) {
            let gamma = g.pow(pow as i64).map_err(|_| Error::PrecisionZero)?;
            let scal = RingElt::from_components(
                &ring,
                (0..nf).map(|k| gamma.sigma(k)).collect(),
            );
            candidates.push(row.iter().map(|z| z.mul(&scal)).collect());
        }
    }
    // Phi = p^(-s) F^r; averaging over Phi-orbits produces fixed rows
    let phi = |x: &Vec<RingElt>| -> Vec<RingElt> {
        let mut y = x.clone();
        for _ in 0..r {
            y = ext.apply_semilinear(&y);
        }
        y.iter()
            .map(|z| {
                let scale = RingElt::from_l_scalar(
                    &ring,
                    &PadicElement::one(ring.l_field()).shift_p(-s),
                );
                z.mul(&scale)
            })
            .collect()
    };
    let orbit = big_r / r;
    let mut fixed_rows: Vec<Vec<RingElt>> = Vec::new();
    'cand: for c in &candidates {
        if fixed_rows.len() == mu {
            break;
        }
        let mut v = c.clone();
        let mut acc = c.clone();
        for _ in 1..orbit {
            v = phi(&v);
            for (ai, vi) in acc.iter_mut().zip(v.iter()) {
                *ai = ai.add(vi);
            }
        }
        if acc.iter().all(|z| z.is_zero()) {
            continue;
        }
        // verify F^r(acc) = p^s acc
        let mut fr = acc.clone();
        for _ in 0..r {
            fr = ext.apply_semilinear(&fr);
        }
        let ps = RingElt::from_l_scalar(&ring, &PadicElement::one(ring.l_field()).shift_p(s));
        for (x, y) in fr.iter().zip(acc.iter()) {
            if !x.agrees_to(&y.mul(&ps), tol.max(2)) {
                continue 'cand;
            }
        }
        // build the block rows: (F^(r-1) v, v, F v, ..., F^(r-2) v)
        let mut orbit_rows = vec![acc.clone()];
        let mut cur = acc.clone();
        for _ in 1..r {
            cur = ext.apply_semilinear(&cur);
            orbit_rows.push(cur.clone());
        }
        let mut block = Vec::with_capacity(r);
        if r > 1 {
            block.push(orbit_rows[r - 1].clone());
            for row in orbit_rows.iter().take(r - 1) {
                block.push(row.clone());
            }
        } else {
            block.push(orbit_rows[0].clone());
        }
        // tentatively accept if ranks stay full per factor
        let mut trial = fixed_rows.clone();
        trial.extend(block.iter().cloned());
        let flat: Vec<RingElt> = trial.iter().flatten().cloned().collect();
        let tm = RingMat::new(&ring, trial.len(), n, flat);
        let full = (0..nf).all(|fi| linalg::rank(&tm.factor(fi)) == trial.len());
        if full {
            fixed_rows = trial;
        }
    }
    if fixed_rows.len() != n {
        return Ok(None);
    }
    let flat: Vec<RingElt> = fixed_rows.iter().flatten().cloned().collect();
    let p = RingMat::new(&ring, n, n, flat);
    if !p.is_invertible() {
        return Ok(None);
    }
    let conj = ext.conjugate(&p)?;
    // expected standard form
    let mut expected = standard_object(s, r, &ring)?;
    for _ in 1..mu {
        expected = expected.direct_sum(&standard_object(s, r, &ring)?)?;
    }
    if !conj.matrix().agrees_to(expected.matrix(), tol.max(2)) {
        return Ok(None);
    }
    Ok(Some((p, conj, mu)))
}
