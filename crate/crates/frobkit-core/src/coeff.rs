//! The product ring Q_q tensor L: a tuple of factor-field components carrying
//! the sigma-tensor-one action, coefficient-field Galois actions, module and
//! matrix arithmetic, and conversion maps between rings.
//!
//! Factor ordering is pinned once: factor i is the L-algebra projection whose
//! restriction to Q_q sends the canonical generator to its sigma^i conjugate.
//! In that ordering sigma-tensor-one shifts components left by one and applies
//! a Galois correction sigma^(b*m_L) at the wraparound, where
//! gcd(d, m_L) = a*d + b*m_L; the correction is what keeps the fixed subring
//! exactly the diagonal copy of L.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::padic::{make_field, Field, FieldEmbedding, PadicElement};

pub struct CoeffRingData {
    p: u64,
    d: usize,
    l_field: Field,
    factor_field: Field,
    r: usize,
    /// embedding L -> L' (the marked iota)
    l_embedding: FieldEmbedding,
    /// embedding Q_q -> L' (the marked epsilon_0)
    qq_field: Field,
    qq_embedding: FieldEmbedding,
    /// relative basis g'^u (u < delta) of L' over iota(L)
    rel_basis: Vec<PadicElement>,
    /// inverse of the Q_p matrix expressing (iota(eta_v) * g'^u) coordinates;
    /// used for relative extraction
    rel_inv: Mat,
    qp: Field,
}

pub type CoeffRing = Arc<CoeffRingData>;

/// Build the ring Q_q tensor L for q = p^d.
pub fn build_ring(p: u64, d: usize, l_field: &Field) -> Result<CoeffRing> {
    assert!(d >= 1);
    assert_eq!(p, l_field.p());
    let m_l = l_field.unram_degree();
    let big_m = lcm(d, m_l);
    let r = gcd(d, m_l);
    let factor_field = make_field(
        p,
        big_m,
        l_field.eisenstein().map(|c| c.to_vec()),
        l_field.precision(),
    )?;
    let l_embedding = FieldEmbedding::new(l_field, &factor_field)?;
    let qq_field = make_field(p, d, None, l_field.precision())?;
    let qq_embedding = FieldEmbedding::new(&qq_field, &factor_field)?;
    // relative basis of L' over iota(L): powers of the L'-generator
    let delta = big_m / m_l;
    let g = PadicElement::generator(&factor_field);
    let mut rel_basis = Vec::with_capacity(delta);
    let mut acc = PadicElement::one(&factor_field);
    for _ in 0..delta {
        rel_basis.push(acc.clone());
        acc = acc.mul(&g);
    }
    // relative extraction matrix over Q_p: columns indexed by (u, v) =
    // (rel basis index, L monomial index), rows by L' monomial coordinates
    let qp = make_field(p, 1, None, l_field.precision())?;
    let dim_sup = factor_field.dim();
    let m_sub = l_field.unram_degree();
    let e_sub = l_field.ram_degree();
    let dim_l = l_field.dim();
    assert_eq!(delta * dim_l, dim_sup, "relative basis dimension mismatch");
    let g_l = PadicElement::generator(l_field);
    let t_l = PadicElement::uniformizer(l_field);
    let mut cols: Vec<Vec<PadicElement>> = Vec::with_capacity(dim_sup);
    for u in 0..delta {
        for j in 0..e_sub {
            for i in 0..m_sub {
                let eta = g_l.pow(i as i64)?.mul(&t_l.pow(j as i64)?);
                let elt = l_embedding.embed(&eta).mul(&rel_basis[u]);
                cols.push(qp_coords(&elt, &qp, dim_sup));
            }
        }
    }
    let mut data = Vec::with_capacity(dim_sup * dim_sup);
    for row in 0..dim_sup {
        for c in cols.iter() {
            data.push(c[row].clone());
        }
    }
    let basis_mat = Mat::new(dim_sup, dim_sup, data);
    let rel_inv = linalg::inverse(&basis_mat)
        .map_err(|_| Error::PrecisionLoss("relative basis is degenerate".into()))?;
    Ok(Arc::new(CoeffRingData {
        p,
        d,
        l_field: l_field.clone(),
        factor_field,
        r,
        l_embedding,
        qq_field,
        qq_embedding,
        rel_basis,
        rel_inv,
        qp,
    }))
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

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

impl CoeffRingData {
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn factor_count(&self) -> usize {
        self.r
    }
    pub fn l_field(&self) -> &Field {
        &self.l_field
    }
    pub fn factor_field(&self) -> &Field {
        &self.factor_field
    }
    pub fn l_embedding(&self) -> &FieldEmbedding {
        &self.l_embedding
    }
    pub fn qq_embedding(&self) -> &FieldEmbedding {
        &self.qq_embedding
    }
    pub fn qq_field(&self) -> &Field {
        &self.qq_field
    }
    pub fn precision(&self) -> u32 {
        self.l_field.precision()
    }
    /// rank of the ring as a free L-module
    pub fn rank_over_l(&self) -> usize {
        self.d
    }
    pub fn rel_degree(&self) -> usize {
        self.rel_basis.len()
    }

    pub fn same_ring(&self, other: &CoeffRingData) -> bool {
        self.p == other.p && self.d == other.d && self.l_field.same_field(&other.l_field)
    }

    /// Reduce an embedding index to (marked factor, galois power of sigma):
    /// epsilon_idx = sigma^gal . epsilon_j0 with j0 < r and gal a multiple of
    /// m_L taken mod the factor-field degree.
    pub fn reduce_index(&self, idx: i64) -> (usize, usize) {
        let d = self.d as i64;
        let r = self.r as i64;
        let m_l = self.l_field.unram_degree() as i64;
        let big_m = self.factor_field.unram_degree() as i64;
        let idx = idx.rem_euclid(d);
        let j0 = idx.rem_euclid(r);
        let delta = (idx - j0).rem_euclid(d);
        // solve m_L * k = delta (mod d); both sides divisible by r
        let (dr, mr, deltar) = (d / r, m_l / r, delta / r);
        let k = if dr == 1 {
            0
        } else {
            (deltar * mod_inv(mr.rem_euclid(dr), dr)).rem_euclid(dr)
        };
        let gal = (k * m_l).rem_euclid(big_m.max(1));
        (j0 as usize, gal as usize)
    }
}

fn mod_inv(a: i64, n: i64) -> i64 {
    // extended euclid; gcd(a, n) = 1 by construction
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (n, a.rem_euclid(n));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible");
    t.rem_euclid(n)
}

#[derive(Clone)]
pub struct RingElt {
    ring: CoeffRing,
    comp: Vec<PadicElement>,
}

impl std::fmt::Debug for RingElt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.comp.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c.to_expr_string())?;
        }
        write!(f, "]")
    }
}

impl RingElt {
    pub fn from_components(ring: &CoeffRing, comp: Vec<PadicElement>) -> Self {
        assert_eq!(comp.len(), ring.r);
        RingElt { ring: ring.clone(), comp }
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn components(&self) -> &[PadicElement] {
        &self.comp
    }

    pub fn zero(ring: &CoeffRing) -> Self {
        RingElt {
            ring: ring.clone(),
            comp: vec![PadicElement::zero(&ring.factor_field); ring.r],
        }
    }

    pub fn one(ring: &CoeffRing) -> Self {
        RingElt {
            ring: ring.clone(),
            comp: vec![PadicElement::one(&ring.factor_field); ring.r],
        }
    }

    pub fn from_i64(ring: &CoeffRing, n: i64) -> Self {
        RingElt {
            ring: ring.clone(),
            comp: vec![PadicElement::from_i64(&ring.factor_field, n); ring.r],
        }
    }

    /// Diagonal scalar from L.
    pub fn from_l_scalar(ring: &CoeffRing, y: &PadicElement) -> Self {
        let img = ring.l_embedding.embed(y);
        RingElt { ring: ring.clone(), comp: vec![img; ring.r] }
    }

    /// Image of x tensor 1 for x in Q_q: component i is sigma^i of the marked
    /// embedding image.
    pub fn from_qq(ring: &CoeffRing, x: &PadicElement) -> Self {
        let base = ring.qq_embedding.embed(x);
        let comp = (0..ring.r).map(|i| base.sigma(i)).collect();
        RingElt { ring: ring.clone(), comp }
    }

    /// Image of the pure tensor x tensor y.
    pub fn from_tensor(ring: &CoeffRing, x: &PadicElement, y: &PadicElement) -> Self {
        Self::from_qq(ring, x).mul(&Self::from_l_scalar(ring, y))
    }

    pub fn add(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.add(b))
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.sub(b))
    }
    pub fn mul(&self, o: &Self) -> Self {
        self.zip(o, |a, b| a.mul(b))
    }
    pub fn neg(&self) -> Self {
        RingElt { ring: self.ring.clone(), comp: self.comp.iter().map(|c| c.neg()).collect() }
    }

    fn zip<F: Fn(&PadicElement, &PadicElement) -> PadicElement>(&self, o: &Self, f: F) -> Self {
        assert!(self.ring.same_ring(&o.ring), "ring mismatch");
        RingElt {
            ring: self.ring.clone(),
            comp: self.comp.iter().zip(o.comp.iter()).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.comp.iter().all(|c| !c.is_zero_at_precision())
    }

    pub fn is_zero(&self) -> bool {
        self.comp.iter().all(|c| c.is_zero_at_precision())
    }

    pub fn inverse(&self) -> Result<Self> {
        let comp = self
            .comp
            .iter()
            .map(|c| c.inverse())
            .collect::<Result<Vec<_>>>()?;
        Ok(RingElt { ring: self.ring.clone(), comp })
    }

    /// The map (sigma^a on Q_q) tensor (sigma_L^b on L):
    /// component i of the image is sigma^(b + gal) of component j0, where
    /// (j0, gal) = reduce_index(i + a - b).
    pub fn galois_map(&self, a: i64, b: i64) -> Self {
        let ring = &self.ring;
        let comp = (0..ring.r as i64)
            .map(|i| {
                let (j0, gal) = ring.reduce_index(i + a - b);
                self.comp[j0].sigma((b.rem_euclid(ring.factor_field.unram_degree() as i64)
                    as usize
                    + gal)
                    % ring.factor_field.unram_degree().max(1))
            })
            .collect();
        RingElt { ring: ring.clone(), comp }
    }

    pub fn sigma_tensor_one(&self) -> Self {
        self.galois_map(1, 0)
    }

    /// Norm down the cyclic algebra map L -> Q_q tensor L: the product of the
    /// d translates under sigma-tensor-one; lands in the diagonal copy of L.
    pub fn algebra_norm(&self) -> Self {
        let mut acc = RingElt::one(&self.ring);
        let mut cur = self.clone();
        for _ in 0..self.ring.d {
            acc = acc.mul(&cur);
            cur = cur.sigma_tensor_one();
        }
        acc
    }

    /// Trace along the same map.
    pub fn algebra_trace(&self) -> Self {
        let mut acc = RingElt::zero(&self.ring);
        let mut cur = self.clone();
        for _ in 0..self.ring.d {
            acc = acc.add(&cur);
            cur = cur.sigma_tensor_one();
        }
        acc
    }

    /// If the element is a diagonal L-scalar at precision, return it in L.
    pub fn as_l_scalar(&self) -> Result<PadicElement> {
        let tol = self.ring.precision() as i64 - 3;
        for c in &self.comp[1..] {
            if !c.agrees_to(&self.comp[0], tol) {
                return Err(Error::InvarianceFailure(
                    "components differ across factors".into(),
                ));
            }
        }
        self.ring.l_embedding.extract(&self.comp[0])
    }

    pub fn agrees_to(&self, o: &Self, digits: i64) -> bool {
        self.comp.iter().zip(o.comp.iter()).all(|(a, b)| a.agrees_to(b, digits))
    }

    /// L-coordinates on the basis e_i * g'^u (factor-major ordering).
    pub fn l_coordinates(&self) -> Result<Vec<PadicElement>> {
        let ring = &self.ring;
        let delta = ring.rel_degree();
        let dim_l = ring.l_field.dim();
        let dim_sup = ring.factor_field.dim();
        let mut out = Vec::with_capacity(ring.r * delta);
        for c in &self.comp {
            // rel_inv * qp_coords gives (u, v)-indexed Q_p coordinates
            let rhs = qp_coords(c, &ring.qp, dim_sup);
            let mut coords = vec![PadicElement::zero(&ring.qp); dim_sup];
            for row in 0..dim_sup {
                let mut acc = PadicElement::zero(&ring.qp);
                for k in 0..dim_sup {
                    acc = acc.add(&ring.rel_inv.at(row, k).mul(&rhs[k]));
                }
                coords[row] = acc;
            }
            for u in 0..delta {
                // rebuild the L element from its monomial coordinates
                let g_l = PadicElement::generator(&ring.l_field);
                let t_l = PadicElement::uniformizer(&ring.l_field);
                let m_sub = ring.l_field.unram_degree();
                let mut acc = PadicElement::zero(&ring.l_field);
                for v in 0..dim_l {
                    let q = &coords[u * dim_l + v];
                    if q.is_zero_at_precision() {
                        continue;
                    }
                    let (j, i) = (v / m_sub, v % m_sub);
                    let val = q.vnum_t().unwrap();
                    let c0 = q.unit_coefficient(0, 0);
                    let term = PadicElement::from_bigint(&ring.l_field, &c0)
                        .shift_p(val)
                        .mul(&g_l.pow(i as i64)?)
                        .mul(&t_l.pow(j as i64)?);
                    acc = acc.add(&term);
                }
                out.push(acc);
            }
        }
        Ok(out)
    }

    /// Inverse of `l_coordinates`.
    pub fn from_l_coordinates(ring: &CoeffRing, coords: &[PadicElement]) -> Result<Self> {
        let delta = ring.rel_degree();
        assert_eq!(coords.len(), ring.r * delta);
        let mut comp = Vec::with_capacity(ring.r);
        for i in 0..ring.r {
            let mut acc = PadicElement::zero(&ring.factor_field);
            for u in 0..delta {
                let c = &coords[i * delta + u];
                acc = acc.add(&ring.l_embedding.embed(c).mul(&ring.rel_basis[u]));
            }
            comp.push(acc);
        }
        Ok(RingElt { ring: ring.clone(), comp })
    }
}


/// A structure-respecting map between coefficient rings along inclusions
/// Q_{q} -> Q_{q'} and L -> L1. Each new factor reads one old factor through
/// a fixed embedding of factor fields composed with a sigma power; the table
/// is found by matching generator images and is unique.
pub struct RingMap {
    from: CoeffRing,
    to: CoeffRing,
    incl_l: FieldEmbedding,
    phi0: FieldEmbedding,
    table: Vec<(usize, usize)>,
}

impl RingMap {
    pub fn new(from: &CoeffRing, to: &CoeffRing) -> Result<Self> {
        assert_eq!(from.p, to.p);
        if to.d % from.d != 0 {
            return Err(Error::NotSubfield(
                format!("Q_q (d={})", from.d),
                format!("Q_q' (d={})", to.d),
            ));
        }
        let incl_l = FieldEmbedding::new(&from.l_field, &to.l_field)?;
        let incl_qq = FieldEmbedding::new(&from.qq_field, &to.qq_field)?;
        let phi0 = FieldEmbedding::new(&from.factor_field, &to.factor_field)?;
        let m_old = from.factor_field.unram_degree();
        // targets in the new factor field
        let gen_qq_old = PadicElement::generator(&from.qq_field);
        let h_new = to.qq_embedding.embed(&incl_qq.embed(&gen_qq_old));
        let gen_l_old = PadicElement::generator(&from.l_field);
        let t_l_old = PadicElement::uniformizer(&from.l_field);
        let target_l_g = to.l_embedding.embed(&incl_l.embed(&gen_l_old));
        let target_l_t = to.l_embedding.embed(&incl_l.embed(&t_l_old));
        // old-side reference images
        let h_img_old = from.qq_embedding.embed(&gen_qq_old);
        let l_g_old = from.l_embedding.embed(&gen_l_old);
        let l_t_old = from.l_embedding.embed(&t_l_old);
        let mut table = Vec::with_capacity(to.r);
        let tol = 3i64;
        for j in 0..to.r {
            let target_h = h_new.sigma(j);
            let mut found = None;
            'search: for j0 in 0..from.r {
                let src_h = h_img_old.sigma(j0);
                for k in 0..m_old.max(1) {
                    let ok_h = phi0.embed(&src_h).sigma(k).agrees_to(&target_h, tol);
                    let ok_g = phi0.embed(&l_g_old).sigma(k).agrees_to(&target_l_g, tol);
                    let ok_t = phi0.embed(&l_t_old).sigma(k).agrees_to(&target_l_t, tol);
                    if ok_h && ok_g && ok_t {
                        found = Some((j0, k));
                        break 'search;
                    }
                }
            }
            let Some(pair) = found else {
                return Err(Error::UnsupportedTower(
                    "no compatible factor-field embedding found".into(),
                ));
            };
            table.push(pair);
        }
        Ok(RingMap { from: from.clone(), to: to.clone(), incl_l, phi0, table })
    }

    pub fn from_ring(&self) -> &CoeffRing {
        &self.from
    }
    pub fn to_ring(&self) -> &CoeffRing {
        &self.to
    }
    pub fn l_inclusion(&self) -> &FieldEmbedding {
        &self.incl_l
    }

    pub fn apply(&self, z: &RingElt) -> RingElt {
        assert!(z.ring.same_ring(&self.from));
        let comp = self
            .table
            .iter()
            .map(|&(j0, k)| self.phi0.embed(&z.comp[j0]).sigma(k))
            .collect();
        RingElt { ring: self.to.clone(), comp }
    }

    /// Pull an element back along the map: succeeds when z lies in the
    /// image at precision.
    pub fn extract(&self, z: &RingElt) -> Result<RingElt> {
        let qp = make_field(self.to.p(), 1, None, self.to.precision())?;
        let dim_to: usize = self.to.r * self.to.factor_field.dim();
        let dim_from: usize = self.from.r * self.from.factor_field.dim();
        // columns: images of the Q_p basis of the source ring
        let mut cols: Vec<Vec<PadicElement>> = Vec::with_capacity(dim_from);
        for i0 in 0..self.from.r {
            for mono in 0..self.from.factor_field.dim() {
                let b = ring_basis_elt(&self.from, i0, mono)?;
                cols.push(ring_coords_qp(&self.apply(&b), &qp));
            }
        }
        let mut data = Vec::with_capacity(dim_to * dim_from);
        for r0 in 0..dim_to {
            for c in cols.iter() {
                data.push(c[r0].clone());
            }
        }
        let a = Mat::new(dim_to, dim_from, data);
        let rhs = ring_coords_qp(z, &qp);
        let sol = linalg::solve(&a, &rhs).map_err(|_| {
            Error::NotSubfield("ring element".into(), "source ring image".into())
        })?;
        let mut out = RingElt::zero(&self.from);
        for (idx, q) in sol.particular.iter().enumerate() {
            if q.is_zero_at_precision() {
                continue;
            }
            let i0 = idx / self.from.factor_field.dim();
            let mono = idx % self.from.factor_field.dim();
            let b = ring_basis_elt(&self.from, i0, mono)?;
            let v = q.vnum_t().unwrap();
            let c = q.unit_coefficient(0, 0);
            let scal = PadicElement::from_bigint(&self.from.factor_field, &c).shift_p(v);
            let scal_elt = RingElt::from_components(
                &self.from,
                vec![scal; self.from.r],
            );
            out = out.add(&b.mul(&scal_elt));
        }
        // round trip check
        let back = self.apply(&out);
        let tol = self.to.precision() as i64 - 3;
        if !back.agrees_to(z, tol) {
            return Err(Error::NotSubfield(
                "ring element (residual)".into(),
                "source ring image".into(),
            ));
        }
        Ok(out)
    }

    pub fn extract_mat(&self, m: &RingMat) -> Result<RingMat> {
        let data = m
            .data
            .iter()
            .map(|z| self.extract(z))
            .collect::<Result<Vec<_>>>()?;
        Ok(RingMat { ring: self.from.clone(), rows: m.rows, cols: m.cols, data })
    }

    pub fn apply_mat(&self, m: &RingMat) -> RingMat {
        RingMat {
            ring: self.to.clone(),
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| self.apply(z)).collect(),
        }
    }
}

/// Q_p basis element of a ring: factor i0, monomial index into g^i t^j.
fn ring_basis_elt(ring: &CoeffRing, i0: usize, mono: usize) -> Result<RingElt> {
    let ff = ring.factor_field.clone();
    let m = ff.unram_degree();
    let (j, i) = (mono / m, mono % m);
    let g = PadicElement::generator(&ff);
    let t = PadicElement::uniformizer(&ff);
    let val = g.pow(i as i64)?.mul(&t.pow(j as i64)?);
    let mut comp = vec![PadicElement::zero(&ff); ring.r];
    comp[i0] = val;
    Ok(RingElt::from_components(ring, comp))
}

fn ring_coords_qp(z: &RingElt, qp: &Field) -> Vec<PadicElement> {
    let mut out = Vec::new();
    for c in z.components() {
        out.extend(qp_coords(c, qp, c.field().dim()));
    }
    out
}

/// Matrices over the coefficient ring.
#[derive(Clone)]
pub struct RingMat {
    ring: CoeffRing,
    pub rows: usize,
    pub cols: usize,
    data: Vec<RingElt>,
}

impl RingMat {
    pub fn new(ring: &CoeffRing, rows: usize, cols: usize, data: Vec<RingElt>) -> Self {
        assert_eq!(data.len(), rows * cols);
        RingMat { ring: ring.clone(), rows, cols, data }
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }

    pub fn zero(ring: &CoeffRing, rows: usize, cols: usize) -> Self {
        RingMat { ring: ring.clone(), rows, cols, data: vec![RingElt::zero(ring); rows * cols] }
    }

    pub fn identity(ring: &CoeffRing, n: usize) -> Self {
        let mut m = Self::zero(ring, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = RingElt::one(ring);
        }
        m
    }

    pub fn at(&self, i: usize, j: usize) -> &RingElt {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut RingElt {
        &mut self.data[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RingElt] {
        &self.data
    }

    /// The factor-i component matrix over the factor field.
    pub fn factor(&self, i: usize) -> Mat {
        Mat::new(
            self.rows,
            self.cols,
            self.data.iter().map(|z| z.comp[i].clone()).collect(),
        )
    }

    /// Rebuild from per-factor matrices.
    pub fn from_factors(ring: &CoeffRing, mats: &[Mat]) -> Self {
        assert_eq!(mats.len(), ring.r);
        let rows = mats[0].rows;
        let cols = mats[0].cols;
        let mut data = Vec::with_capacity(rows * cols);
        for idx in 0..rows * cols {
            let comp = mats.iter().map(|m| m.data[idx].clone()).collect();
            data.push(RingElt { ring: ring.clone(), comp });
        }
        RingMat { ring: ring.clone(), rows, cols, data }
    }

    pub fn matmul(&self, other: &RingMat) -> RingMat {
        assert_eq!(self.cols, other.rows);
        let mats: Vec<Mat> = (0..self.ring.r)
            .map(|i| self.factor(i).matmul(&other.factor(i)))
            .collect();
        RingMat::from_factors(&self.ring, &mats)
    }

    pub fn add(&self, other: &RingMat) -> RingMat {
        let mats: Vec<Mat> = (0..self.ring.r)
            .map(|i| self.factor(i).add(&other.factor(i)))
            .collect();
        RingMat::from_factors(&self.ring, &mats)
    }

    pub fn sub(&self, other: &RingMat) -> RingMat {
        let mats: Vec<Mat> = (0..self.ring.r)
            .map(|i| self.factor(i).sub(&other.factor(i)))
            .collect();
        RingMat::from_factors(&self.ring, &mats)
    }

    pub fn scale(&self, c: &RingElt) -> RingMat {
        let mats: Vec<Mat> = (0..self.ring.r)
            .map(|i| self.factor(i).scale(&c.comp[i]))
            .collect();
        RingMat::from_factors(&self.ring, &mats)
    }

    pub fn transpose(&self) -> RingMat {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.at(i, j).clone());
            }
        }
        RingMat { ring: self.ring.clone(), rows: self.cols, cols: self.rows, data }
    }

    pub fn galois_map(&self, a: i64, b: i64) -> RingMat {
        RingMat {
            ring: self.ring.clone(),
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.galois_map(a, b)).collect(),
        }
    }

    pub fn sigma_tensor_one(&self) -> RingMat {
        self.galois_map(1, 0)
    }

    pub fn inverse(&self) -> Result<RingMat> {
        let mats: Vec<Mat> = (0..self.ring.r)
            .map(|i| linalg::inverse(&self.factor(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(RingMat::from_factors(&self.ring, &mats))
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse().is_ok()
    }

    pub fn agrees_to(&self, other: &RingMat, digits: i64) -> bool {
        self.data
            .iter()
            .zip(other.data.iter())
            .all(|(a, b)| a.agrees_to(b, digits))
    }
}

/// Componentwise Gaussian elimination per factor with a cross-factor
/// consistency report, per the module contract.
pub struct RingSolve {
    pub particular: Vec<RingElt>,
    /// kernel dimension, equal across factors (else FactorInconsistency)
    pub kernel_dim: usize,
    /// per-factor kernel bases glued into ring vectors (componentwise)
    pub kernel: Vec<Vec<RingElt>>,
}

pub fn ring_linear_solve(a: &RingMat, b: &[RingElt]) -> Result<RingSolve> {
    let ring = a.ring.clone();
    let mut particular_factors: Vec<Vec<PadicElement>> = Vec::new();
    let mut kernel_factors: Vec<Vec<Vec<PadicElement>>> = Vec::new();
    let mut dims: Vec<usize> = Vec::new();
    for i in 0..ring.r {
        let fa = a.factor(i);
        let fb: Vec<PadicElement> = b.iter().map(|z| z.comp[i].clone()).collect();
        let sol = linalg::solve(&fa, &fb)?;
        dims.push(sol.kernel.len());
        particular_factors.push(sol.particular);
        kernel_factors.push(sol.kernel);
    }
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::FactorInconsistency(format!("kernel dims {:?}", dims)));
    }
    let kernel_dim = dims[0];
    let n = a.cols;
    let particular: Vec<RingElt> = (0..n)
        .map(|j| {
            let comp = (0..ring.r).map(|i| particular_factors[i][j].clone()).collect();
            RingElt { ring: ring.clone(), comp }
        })
        .collect();
    let kernel: Vec<Vec<RingElt>> = (0..kernel_dim)
        .map(|k| {
            (0..n)
                .map(|j| {
                    let comp = (0..ring.r).map(|i| kernel_factors[i][k][j].clone()).collect();
                    RingElt { ring: ring.clone(), comp }
                })
                .collect()
        })
        .collect();
    Ok(RingSolve { particular, kernel_dim, kernel })
}
