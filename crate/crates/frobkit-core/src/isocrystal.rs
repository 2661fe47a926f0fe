//! Free modules over Q_q tensor L with a sigma-tensor-one-semilinear
//! bijection F, presented by the matrix S in the row convention
//! F(v_i) = sum_j s_ij v_j. Linearization follows the twisted product
//! sigma^(d-1)(S) ... sigma(S) S, so F^d acts on coordinate rows by right
//! multiplication with that product.

use num_bigint::BigInt;
use num_integer::Integer;

use crate::coeff::{build_ring, CoeffRing, RingElt, RingMap, RingMat};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::padic::{make_field, Field, PadicElement};

#[derive(Clone)]
pub struct Isocrystal {
    ring: CoeffRing,
    rank: usize,
    s: RingMat,
}

/// Monic characteristic polynomial of F^d with coefficients certified to lie
/// in L.
#[derive(Clone)]
pub struct CharPoly {
    pub field: Field,
    /// c_0 .. c_n ascending, c_n = 1
    pub coeffs: Vec<PadicElement>,
    pub d: usize,
}

impl Isocrystal {
    pub fn new(ring: &CoeffRing, s: RingMat) -> Result<Self> {
        assert_eq!(s.rows, s.cols);
        let rank = s.rows;
        if !s.is_invertible() {
            return Err(Error::PrecisionLoss(
                "frobenius matrix is not invertible at precision".into(),
            ));
        }
        Ok(Isocrystal { ring: ring.clone(), rank, s })
    }

    pub fn ring(&self) -> &CoeffRing {
        &self.ring
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn matrix(&self) -> &RingMat {
        &self.s
    }

    /// The unit object: rank 1, F = 1.
    pub fn unit(ring: &CoeffRing) -> Self {
        Isocrystal { ring: ring.clone(), rank: 1, s: RingMat::identity(ring, 1) }
    }

    /// Apply F to a coordinate row vector once: x -> (sigma tensor 1)(x) S.
    pub fn apply_semilinear(&self, x: &[RingElt]) -> Vec<RingElt> {
        assert_eq!(x.len(), self.rank);
        let row = RingMat::new(&self.ring, 1, self.rank, x.to_vec());
        let out = row.sigma_tensor_one().matmul(&self.s);
        out.entries().to_vec()
    }

    /// Matrix of F^d: the twisted product, F^d acting linearly.
    pub fn linearize(&self) -> RingMat {
        let d = self.ring.d();
        let mut acc = self.s.clone();
        for k in 1..d {
            acc = self.s.galois_map(k as i64, 0).matmul(&acc);
        }
        acc
    }

    /// Characteristic polynomial of F^d, certified sigma-tensor-one-invariant
    /// and projected into L.
    pub fn char_poly(&self) -> Result<CharPoly> {
        let a = self.linearize();
        let r = self.ring.factor_count();
        let per_factor: Vec<Vec<PadicElement>> =
            (0..r).map(|i| linalg::charpoly(&a.factor(i))).collect();
        let tol = self.ring.precision() as i64 - 3;
        let mut coeffs = Vec::with_capacity(self.rank + 1);
        for k in 0..=self.rank {
            let comp: Vec<PadicElement> = (0..r).map(|i| per_factor[i][k].clone()).collect();
            let c = RingElt::from_components(&self.ring, comp);
            if !c.sigma_tensor_one().agrees_to(&c, tol) {
                return Err(Error::InvarianceFailure(format!(
                    "coefficient of t^{} moves under sigma tensor one",
                    k
                )));
            }
            let in_l = c
                .as_l_scalar()
                .map_err(|_| Error::InvarianceFailure(format!(
                    "coefficient of t^{} does not lie in L",
                    k
                )))?;
            coeffs.push(in_l);
        }
        Ok(CharPoly { field: self.ring.l_field().clone(), coeffs, d: self.ring.d() })
    }

    pub fn tensor(&self, other: &Isocrystal) -> Result<Isocrystal> {
        if !self.ring.same_ring(other.ring()) {
            return Err(Error::RingMismatch);
        }
        let n1 = self.rank;
        let n2 = other.rank;
        let mut s = RingMat::zero(&self.ring, n1 * n2, n1 * n2);
        for i in 0..n1 {
            for k in 0..n2 {
                for j in 0..n1 {
                    for l in 0..n2 {
                        *s.at_mut(i * n2 + k, j * n2 + l) =
                            self.s.at(i, j).mul(other.s.at(k, l));
                    }
                }
            }
        }
        Isocrystal::new(&self.ring, s)
    }

    pub fn direct_sum(&self, other: &Isocrystal) -> Result<Isocrystal> {
        if !self.ring.same_ring(other.ring()) {
            return Err(Error::RingMismatch);
        }
        let n = self.rank + other.rank;
        let mut s = RingMat::zero(&self.ring, n, n);
        for i in 0..self.rank {
            for j in 0..self.rank {
                *s.at_mut(i, j) = self.s.at(i, j).clone();
            }
        }
        for i in 0..other.rank {
            for j in 0..other.rank {
                *s.at_mut(self.rank + i, self.rank + j) = other.s.at(i, j).clone();
            }
        }
        Isocrystal::new(&self.ring, s)
    }

    /// Dual object: inverse transpose in the fixed row convention.
    pub fn dual(&self) -> Result<Isocrystal> {
        let s = self.s.inverse()?.transpose();
        Isocrystal::new(&self.ring, s)
    }

    /// k-th exterior power: compound matrix of k x k minors.
    pub fn exterior(&self, k: usize) -> Result<Isocrystal> {
        assert!(k >= 1 && k <= self.rank);
        let subsets = combinations(self.rank, k);
        let n = subsets.len();
        let mut s = RingMat::zero(&self.ring, n, n);
        for (a, rows) in subsets.iter().enumerate() {
            for (b, cols) in subsets.iter().enumerate() {
                *s.at_mut(a, b) = self.minor(rows, cols);
            }
        }
        Isocrystal::new(&self.ring, s)
    }

    pub fn det_object(&self) -> Result<Isocrystal> {
        self.exterior(self.rank)
    }

    fn minor(&self, rows: &[usize], cols: &[usize]) -> RingElt {
        let k = rows.len();
        let mats: Vec<Mat> = (0..self.ring.factor_count())
            .map(|f| {
                let full = self.s.factor(f);
                let mut data = Vec::with_capacity(k * k);
                for &i in rows {
                    for &j in cols {
                        data.push(full.at(i, j).clone());
                    }
                }
                Mat::new(k, k, data)
            })
            .collect();
        let comps: Vec<PadicElement> = mats.iter().map(linalg::det).collect();
        RingElt::from_components(&self.ring, comps)
    }

    /// Change basis by invertible P (new coordinates y with x = y P):
    /// S' = (sigma tensor 1)(P) S P^(-1).
    pub fn conjugate(&self, p: &RingMat) -> Result<Isocrystal> {
        let s = p.sigma_tensor_one().matmul(&self.s).matmul(&p.inverse()?);
        Isocrystal::new(&self.ring, s)
    }

    /// View the same matrix over a larger coefficient field L1.
    pub fn induce(&self, l1: &Field) -> Result<Isocrystal> {
        let ring1 = build_ring(self.ring.p(), self.ring.d(), l1)?;
        let map = RingMap::new(&self.ring, &ring1)?;
        Isocrystal::new(&ring1, map.apply_mat(&self.s))
    }

    /// Pull back along the base-field extension F_q -> F_q^s (d grows).
    pub fn base_extend(&self, d1: usize) -> Result<Isocrystal> {
        assert!(d1 % self.ring.d() == 0);
        let ring1 = build_ring(self.ring.p(), d1, self.ring.l_field())?;
        let map = RingMap::new(&self.ring, &ring1)?;
        Isocrystal::new(&ring1, map.apply_mat(&self.s))
    }

    /// Restrict coefficients to a subfield L0: rank multiplies by [L : L0].
    pub fn restrict(&self, l0: &Field) -> Result<Isocrystal> {
        let ring0 = build_ring(self.ring.p(), self.ring.d(), l0)?;
        let incl = RingMap::new(&ring0, &self.ring)?;
        let l = self.ring.l_field();
        // relative monomial basis of L over L0
        let mrel = l.unram_degree() / l0.unram_degree();
        let erel = l.ram_degree() / l0.ram_degree();
        let g = PadicElement::generator(l);
        let t = PadicElement::uniformizer(l);
        let mut rel_basis = Vec::with_capacity(mrel * erel);
        for bpow in 0..erel {
            for apow in 0..mrel {
                rel_basis.push(g.pow(apow as i64)?.mul(&t.pow(bpow as i64)?));
            }
        }
        let srel = rel_basis.len();
        let coords = RingRelCoords::new(&ring0, &self.ring, &incl, &rel_basis)?;
        let n = self.rank;
        let mut s0 = RingMat::zero(&ring0, n * srel, n * srel);
        for u in 0..srel {
            for k in 0..n {
                for ll in 0..n {
                    let beta_u = RingElt::from_l_scalar(&self.ring, &rel_basis[u]);
                    let prod = beta_u.mul(self.s.at(k, ll));
                    let cw = coords.extract(&prod)?;
                    for (w, c) in cw.iter().enumerate() {
                        *s0.at_mut(u * n + k, w * n + ll) = c.clone();
                    }
                }
            }
        }
        Isocrystal::new(&ring0, s0)
    }

    /// Tate twist by a/b (lowest terms): tensors with the rank-1 object whose
    /// F acts by p^(-a/b), enlarging the coefficient field by x^b - p when
    /// needed; slopes shift by -a/b. Returns the twisted object and whether
    /// the twist is stable under the coefficient Galois action (true exactly
    /// when b divides d).
    pub fn tate_twist(&self, a: i64, b: i64) -> Result<(Isocrystal, bool)> {
        assert!(b != 0);
        let (mut a, mut b) = (a, b);
        if b < 0 {
            a = -a;
            b = -b;
        }
        let g = a.gcd(&b);
        if g != 0 {
            a /= g;
            b /= g;
        }
        let galois_stable = self.ring.d() as i64 % b == 0;
        if a == 0 {
            return Ok((self.clone(), true));
        }
        let l = self.ring.l_field();
        let p = self.ring.p();
        // ramification needed: uniformizer with v = 1/b compatible with L
        let current = match l.eisenstein() {
            None => 1i64,
            Some(eis) if is_p_radical_poly(eis, p) => (eis.len() - 1) as i64,
            Some(_) => {
                if b == 1 {
                    0 // no enlargement needed; scale by integer power of p
                } else {
                    return Err(Error::UnsupportedTower(
                        "fractional twist over a non-radical eisenstein field".into(),
                    ));
                }
            }
        };
        if b == 1 {
            let scale = RingElt::from_l_scalar(
                &self.ring,
                &PadicElement::one(l).shift_p(-a),
            );
            let twisted = Isocrystal::new(&self.ring, self.s.scale(&scale))?;
            return Ok((twisted, galois_stable));
        }
        let need = lcm_i64(current, b);
        let (ring1, s1) = if need == current {
            (self.ring.clone(), self.s.clone())
        } else {
            let eis: Vec<BigInt> = {
                let mut v = vec![BigInt::from(0); need as usize + 1];
                v[0] = BigInt::from(-(p as i64));
                v[need as usize] = BigInt::from(1);
                v
            };
            let l1 = make_field(p, l.unram_degree(), Some(eis), l.precision())?;
            let ring1 = build_ring(p, self.ring.d(), &l1)?;
            let map = RingMap::new(&self.ring, &ring1)?;
            (ring1.clone(), map.apply_mat(&self.s))
        };
        let l1 = ring1.l_field().clone();
        let e1 = l1.ram_degree() as i64;
        let t_pow = PadicElement::uniformizer(&l1)
            .pow(-a * e1 / b)
            .expect("uniformizer power");
        let scale = RingElt::from_l_scalar(&ring1, &t_pow);
        let twisted = Isocrystal::new(&ring1, s1.scale(&scale))?;
        Ok((twisted, galois_stable))
    }

    /// Entrywise coefficient-field Galois action: the twist ^g M for
    /// g = sigma_L^c on L.
    pub fn galois_twist(&self, c: usize) -> Result<Isocrystal> {
        Isocrystal::new(&self.ring, self.s.galois_map(0, c as i64))
    }
}

fn is_p_radical_poly(eis: &[BigInt], p: u64) -> bool {
    use num_traits::{One, Zero};
    let b = eis.len() - 1;
    eis[0] == BigInt::from(-(p as i64)) && eis[b].is_one() && eis[1..b].iter().all(|c| c.is_zero())
}

fn lcm_i64(a: i64, b: i64) -> i64 {
    if a == 0 {
        return b;
    }
    a / a.gcd(&b) * b
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // next combination in lex order
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// The standard object of slope s/r (lowest terms): rank r, F cycling the
/// basis with a single p^s entry. For r = 2, s = 1 the matrix is
/// [[0, p], [1, 0]] in the row convention.
pub fn standard_object(s: i64, r: usize, ring: &CoeffRing) -> Result<Isocrystal> {
    assert!(r >= 1);
    let p_s = RingElt::from_l_scalar(
        ring,
        &PadicElement::one(ring.l_field()).shift_p(s),
    );
    if r == 1 {
        return Isocrystal::new(ring, RingMat::new(ring, 1, 1, vec![p_s]));
    }
    let mut m = RingMat::zero(ring, r, r);
    *m.at_mut(0, 1) = p_s;
    for i in 1..r - 1 {
        *m.at_mut(i, i + 1) = RingElt::one(ring);
    }
    *m.at_mut(r - 1, 0) = RingElt::one(ring);
    Isocrystal::new(ring, m)
}

pub struct HomSpace {
    /// dimension over L
    pub dim: usize,
    pub basis: Vec<RingMat>,
}

/// Morphisms M -> N: solutions A of S_M A = (sigma tensor 1)(A) S_N, solved
/// as an L-linear system on the L-coordinates of the entries.
pub fn hom_space(m: &Isocrystal, n: &Isocrystal) -> Result<HomSpace> {
    if !m.ring().same_ring(n.ring()) {
        return Err(Error::RingMismatch);
    }
    let ring = m.ring().clone();
    let l = ring.l_field().clone();
    let dd = ring.factor_count() * ring.rel_degree(); // = d
    let nm = m.rank();
    let nn = n.rank();
    // structure matrices over L
    let basis_elt = |idx: usize| -> Result<RingElt> {
        let mut coords = vec![PadicElement::zero(&l); dd];
        coords[idx] = PadicElement::one(&l);
        RingElt::from_l_coordinates(&ring, &coords)
    };
    let mut sig = Mat::zero(&l, dd, dd);
    for c in 0..dd {
        let img = basis_elt(c)?.sigma_tensor_one();
        let col = img.l_coordinates()?;
        for r0 in 0..dd {
            *sig.at_mut(r0, c) = col[r0].clone();
        }
    }
    let mult_mat = |s: &RingElt| -> Result<Mat> {
        let mut out = Mat::zero(&l, dd, dd);
        for c in 0..dd {
            let img = s.mul(&basis_elt(c)?);
            let col = img.l_coordinates()?;
            for r0 in 0..dd {
                *out.at_mut(r0, c) = col[r0].clone();
            }
        }
        Ok(out)
    };
    let unknowns = nm * nn * dd;
    let mut big = Mat::zero(&l, unknowns, unknowns);
    // rows: equation at (a, b), coordinate row r0
    for a in 0..nm {
        for b in 0..nn {
            // sum_k Mult(s^M_ak) X_kb - sum_k Mult(s^N_kb) Sig X_ak = 0
            for k in 0..nm {
                let mm = mult_mat(m.matrix().at(a, k))?;
                for r0 in 0..dd {
                    for c0 in 0..dd {
                        let row = (a * nn + b) * dd + r0;
                        let col = (k * nn + b) * dd + c0;
                        *big.at_mut(row, col) = big.at(row, col).add(mm.at(r0, c0));
                    }
                }
            }
            for k in 0..nn {
                let mn = mult_mat(n.matrix().at(k, b))?.matmul(&sig);
                for r0 in 0..dd {
                    for c0 in 0..dd {
                        let row = (a * nn + b) * dd + r0;
                        let col = (a * nn + k) * dd + c0;
                        *big.at_mut(row, col) = big.at(row, col).sub(mn.at(r0, c0));
                    }
                }
            }
        }
    }
    let ker = linalg::kernel(&big)?;
    let mut basis = Vec::with_capacity(ker.len());
    for v in &ker {
        let mut a = RingMat::zero(&ring, nm, nn);
        for k in 0..nm {
            for lcol in 0..nn {
                let coords: Vec<PadicElement> =
                    v[(k * nn + lcol) * dd..(k * nn + lcol + 1) * dd].to_vec();
                *a.at_mut(k, lcol) = RingElt::from_l_coordinates(&ring, &coords)?;
            }
        }
        basis.push(a);
    }
    Ok(HomSpace { dim: ker.len(), basis })
}

/// Verify that a matrix is a morphism M -> N at the given digit tolerance.
pub fn is_morphism(m: &Isocrystal, n: &Isocrystal, a: &RingMat, digits: i64) -> bool {
    let lhs = m.matrix().matmul(a);
    let rhs = a.sigma_tensor_one().matmul(n.matrix());
    lhs.agrees_to(&rhs, digits)
}

/// Coordinates of Q_q tensor L over the image of Q_q tensor L0, used by
/// restriction of coefficients.
struct RingRelCoords {
    ring0: CoeffRing,
    dim0: usize,
    srel: usize,
    inv: Mat,
    qp: Field,
}

impl RingRelCoords {
    fn new(
        ring0: &CoeffRing,
        ring: &CoeffRing,
        incl: &RingMap,
        rel_basis: &[PadicElement],
    ) -> Result<Self> {
        let qp = make_field(ring.p(), 1, None, ring.precision())?;
        let dim_l = ring.factor_count() * ring.factor_field().dim();
        let dim0 = ring0.factor_count() * ring0.factor_field().dim();
        let srel = rel_basis.len();
        assert_eq!(dim0 * srel, dim_l, "relative ring dimension mismatch");
        // columns indexed by (w, basis of R_L0 over Q_p)
        let mut cols: Vec<Vec<PadicElement>> = Vec::with_capacity(dim_l);
        for beta in rel_basis {
            let beta_ring = RingElt::from_l_scalar(ring, beta);
            for i0 in 0..ring0.factor_count() {
                for mono in 0..ring0.factor_field().dim() {
                    let b0 = ring_qp_basis_elt(ring0, i0, mono)?;
                    let img = incl.apply(&b0).mul(&beta_ring);
                    cols.push(ring_qp_coords(&img, &qp));
                }
            }
        }
        let mut data = Vec::with_capacity(dim_l * dim_l);
        for r0 in 0..dim_l {
            for c in cols.iter() {
                data.push(c[r0].clone());
            }
        }
        let mat = Mat::new(dim_l, dim_l, data);
        let inv = linalg::inverse(&mat)
            .map_err(|_| Error::PrecisionLoss("relative ring basis degenerate".into()))?;
        Ok(RingRelCoords { ring0: ring0.clone(), dim0, srel, inv, qp })
    }

    /// coordinates z = sum_w incl(out[w]) * (1 tensor beta_w)
    fn extract(&self, z: &RingElt) -> Result<Vec<RingElt>> {
        let rhs = ring_qp_coords(z, &self.qp);
        let dim = rhs.len();
        let mut sol = vec![PadicElement::zero(&self.qp); dim];
        for r0 in 0..dim {
            let mut acc = PadicElement::zero(&self.qp);
            for k in 0..dim {
                acc = acc.add(&self.inv.at(r0, k).mul(&rhs[k]));
            }
            sol[r0] = acc;
        }
        let mut out = Vec::with_capacity(self.srel);
        for w in 0..self.srel {
            let mut acc = RingElt::zero(&self.ring0);
            for idx in 0..self.dim0 {
                let q = &sol[w * self.dim0 + idx];
                if q.is_zero_at_precision() {
                    continue;
                }
                let i0 = idx / self.ring0.factor_field().dim();
                let mono = idx % self.ring0.factor_field().dim();
                let b0 = ring_qp_basis_elt(&self.ring0, i0, mono)?;
                let v = q.vnum_t().unwrap();
                let c = q.unit_coefficient(0, 0);
                let scal = RingElt::from_components(
                    &self.ring0,
                    vec![
                        PadicElement::from_bigint(self.ring0.factor_field(), &c).shift_p(v);
                        self.ring0.factor_count()
                    ],
                );
                acc = acc.add(&b0.mul(&scal));
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Q_p basis element of the ring: factor i0, monomial index into the factor
/// field's g^i t^j layout.
fn ring_qp_basis_elt(ring: &CoeffRing, i0: usize, mono: usize) -> Result<RingElt> {
    let ff = ring.factor_field().clone();
    let m = ff.unram_degree();
    let (j, i) = (mono / m, mono % m);
    let g = PadicElement::generator(&ff);
    let t = PadicElement::uniformizer(&ff);
    let val = g.pow(i as i64)?.mul(&t.pow(j as i64)?);
    let mut comp = vec![PadicElement::zero(&ff); ring.factor_count()];
    comp[i0] = val;
    Ok(RingElt::from_components(ring, comp))
}

fn ring_qp_coords(z: &RingElt, qp: &Field) -> Vec<PadicElement> {
    let mut out = Vec::new();
    for c in z.components() {
        let e = c.field().ram_degree() as i64;
        let dim = c.field().dim();
        match c.integral_coordinates() {
            None => out.extend(std::iter::repeat(PadicElement::zero(qp)).take(dim)),
            Some((a, coords)) => {
                let cap = c.known_abs_t().map(|t| t.div_euclid(e));
                out.extend(coords.iter().map(|x| {
                    let v = PadicElement::from_bigint(qp, x).shift_p(a);
                    match cap {
                        Some(k) => v.truncated_to_abs(k),
                        None => v,
                    }
                }))
            }
        }
    }
    out
}

use serde::{Deserialize, Serialize};

/// Serialized isocrystal: matrix entries are arrays of component expression
/// strings over the factor field.
#[derive(Serialize, Deserialize)]
pub struct IsocrystalJson {
    pub p: u64,
    pub d: usize,
    pub coefficient_field: crate::padic::FieldSpecJson,
    pub precision: u32,
    pub matrix: Vec<Vec<Vec<String>>>,
}

impl Isocrystal {
    pub fn to_json(&self) -> IsocrystalJson {
        let n = self.rank;
        let mut matrix = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(crate::expr::ring_element_strings(self.s.at(i, j)));
            }
            matrix.push(row);
        }
        IsocrystalJson {
            p: self.ring.p(),
            d: self.ring.d(),
            coefficient_field: self.ring.l_field().to_spec(),
            precision: self.ring.precision(),
            matrix,
        }
    }

    pub fn from_json(js: &IsocrystalJson) -> Result<Isocrystal> {
        let eis = js
            .coefficient_field
            .eisenstein
            .as_ref()
            .map(|v| v.iter().map(|&c| BigInt::from(c)).collect());
        let l = make_field(js.p, js.coefficient_field.unramified_degree, eis, js.precision)?;
        let ring = build_ring(js.p, js.d, &l)?;
        let n = js.matrix.len();
        let mut data = Vec::with_capacity(n * n);
        for row in &js.matrix {
            if row.len() != n {
                return Err(Error::MalformedPolynomial("matrix is not square".into()));
            }
            for entry in row {
                data.push(crate::expr::parse_ring_element(entry, &ring)?);
            }
        }
        Isocrystal::new(&ring, RingMat::new(&ring, n, n, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::FieldEmbedding;
    use crate::testutil::Rng;

    fn qp_ring(p: u64, d: usize) -> CoeffRing {
        let l = make_field(p, 1, None, 24).unwrap();
        build_ring(p, d, &l).unwrap()
    }

    /// random invertible isocrystal: unit diagonal plus small entries
    pub(crate) fn random_isocrystal(ring: &CoeffRing, n: usize, rng: &mut Rng) -> Isocrystal {
        loop {
            let mut s = RingMat::zero(ring, n, n);
            for i in 0..n {
                for j in 0..n {
                    let base = rng.int_in(-4, 4);
                    let mut entry = RingElt::from_i64(ring, base);
                    if rng.below(3) == 0 {
                        // sprinkle a generator component
                        let g = PadicElement::generator(ring.factor_field());
                        let scal = PadicElement::from_i64(ring.factor_field(), rng.int_in(-2, 2));
                        let comp: Vec<PadicElement> = (0..ring.factor_count())
                            .map(|k| g.sigma(k).mul(&scal))
                            .collect();
                        entry = entry.add(&RingElt::from_components(ring, comp));
                    }
                    if i == j {
                        entry = entry.add(&RingElt::from_i64(ring, 1 + rng.int_in(0, 2) * 2));
                    }
                    *s.at_mut(i, j) = entry;
                }
            }
            if let Ok(m) = Isocrystal::new(ring, s) {
                return m;
            }
        }
    }

    /// independent oracle: iterate the semilinear map d times on each basis row
    fn linearize_oracle(m: &Isocrystal) -> RingMat {
        let n = m.rank();
        let ring = m.ring().clone();
        let mut rows = Vec::new();
        for i in 0..n {
            let mut x: Vec<RingElt> = (0..n)
                .map(|j| if i == j { RingElt::one(&ring) } else { RingElt::zero(&ring) })
                .collect();
            for _ in 0..ring.d() {
                x = m.apply_semilinear(&x);
            }
            rows.extend(x);
        }
        RingMat::new(&ring, n, n, rows)
    }

    #[test]
    fn linearize_matches_semilinear_iteration() {
        let mut rng = Rng::new(42);
        for (p, d, ml) in [(2u64, 2usize, 1usize), (3, 3, 1), (5, 2, 2), (3, 4, 2)] {
            let l = make_field(p, ml, None, 24).unwrap();
            let ring = build_ring(p, d, &l).unwrap();
            for n in 1..=3usize {
                let m = random_isocrystal(&ring, n, &mut rng);
                let a = m.linearize();
                let b = linearize_oracle(&m);
                assert!(a.agrees_to(&b, 20), "p={} d={} n={}", p, d, n);
            }
        }
    }

    #[test]
    fn linearize_d1_is_s_and_rational_d2_is_square() {
        let ring = qp_ring(5, 1);
        let m = standard_object(1, 2, &ring).unwrap();
        assert!(m.linearize().agrees_to(m.matrix(), 20));
        let ring2 = qp_ring(5, 2);
        let m2 = standard_object(1, 2, &ring2).unwrap();
        // rational entries: twisted product is the plain square
        let sq = m2.matrix().matmul(m2.matrix());
        assert!(m2.linearize().agrees_to(&sq, 20));
    }

    #[test]
    fn char_poly_of_standard_objects() {
        // E^(1/2) over F_p: t^2 - p
        let ring = qp_ring(5, 1);
        let m = standard_object(1, 2, &ring).unwrap();
        let cp = m.char_poly().unwrap();
        let l = ring.l_field();
        assert!(cp.coeffs[0].agrees_to(&PadicElement::from_i64(l, -5), 20));
        assert!(cp.coeffs[1].is_zero_at_precision());
        assert!(cp.coeffs[2].agrees_to(&PadicElement::one(l), 20));
        // standard_object(1) over F_q, d = 3: t - p^3
        let ring3 = qp_ring(5, 3);
        let m1 = standard_object(1, 1, &ring3).unwrap();
        let cp1 = m1.char_poly().unwrap();
        assert!(cp1.coeffs[0].agrees_to(&PadicElement::from_i64(ring3.l_field(), -125), 20));
        // unit object: t - 1
        let u = Isocrystal::unit(&ring3);
        let cpu = u.char_poly().unwrap();
        assert!(cpu.coeffs[0].agrees_to(&PadicElement::from_i64(ring3.l_field(), -1), 20));
    }

    #[test]
    fn char_poly_rational_on_random_inputs() {
        let mut rng = Rng::new(7);
        let l = make_field(3, 2, None, 24).unwrap();
        let ring = build_ring(3, 2, &l).unwrap();
        for _ in 0..5 {
            let m = random_isocrystal(&ring, 3, &mut rng);
            let cp = m.char_poly().unwrap();
            assert_eq!(cp.coeffs.len(), 4);
            // monic
            assert!(cp.coeffs[3].agrees_to(&PadicElement::one(&l), 18));
        }
    }

    #[test]
    fn dual_and_tensor_shapes() {
        let ring = qp_ring(5, 1);
        let e = standard_object(1, 2, &ring).unwrap();
        let dual = e.dual().unwrap();
        // F^d eigenvalues of the dual are inverses: char poly constant v = -1
        let cp = dual.char_poly().unwrap();
        assert_eq!(
            cp.coeffs[0].valuation().unwrap(),
            num_rational::Ratio::new(-1, 1)
        );
        let t = e.tensor(&dual).unwrap();
        assert_eq!(t.rank(), 4);
        // det of E^(1/2): rank 1 with constant-coefficient valuation 1
        let det = e.det_object().unwrap();
        assert_eq!(det.rank(), 1);
        let cpd = det.char_poly().unwrap();
        assert_eq!(cpd.coeffs[0].valuation().unwrap(), num_rational::Ratio::new(1, 1));
    }

    #[test]
    fn hom_spaces_of_standard_objects() {
        let ring = qp_ring(5, 1);
        let e0 = standard_object(0, 1, &ring).unwrap();
        let e1 = standard_object(1, 1, &ring).unwrap();
        let eh = standard_object(1, 2, &ring).unwrap();
        assert_eq!(hom_space(&e0, &e1).unwrap().dim, 0);
        assert_eq!(hom_space(&e0, &eh).unwrap().dim, 0);
        assert_eq!(hom_space(&e0, &e0).unwrap().dim, 1);
        // End(E^(1/2)) over F_p^2 with Q_p coefficients: the quaternion algebra
        let ring2 = qp_ring(5, 2);
        let eh2 = standard_object(1, 2, &ring2).unwrap();
        let end = hom_space(&eh2, &eh2).unwrap();
        assert_eq!(end.dim, 4);
        for a in &end.basis {
            assert!(is_morphism(&eh2, &eh2, a, 18));
        }
    }

    #[test]
    fn induce_doubles_hom_dimension() {
        let mut rng = Rng::new(11);
        let ring = qp_ring(5, 2);
        let a = random_isocrystal(&ring, 2, &mut rng);
        let dim0 = hom_space(&a, &a).unwrap().dim;
        let l2 = make_field(5, 2, None, 24).unwrap();
        let a2 = a.induce(&l2).unwrap();
        let dim1 = hom_space(&a2, &a2).unwrap().dim;
        assert_eq!(dim1, dim0 * 1, "dim over L2 equals dim over Qp");
        // dimension over L' counts over the bigger field; the Qp-dimension
        // doubles, which is the same L'-dimension. Also check char polys map.
        let cp0 = a.char_poly().unwrap();
        let cp2 = a2.char_poly().unwrap();
        let emb = FieldEmbedding::new(ring.l_field(), &l2).unwrap();
        for (c0, c2) in cp0.coeffs.iter().zip(cp2.coeffs.iter()) {
            assert!(emb.embed(c0).agrees_to(c2, 18));
        }
    }

    #[test]
    fn restrict_char_poly_is_norm() {
        // rank 1 over L = Q_p^2 with eigenvalue g: restriction to Q_p has
        // char poly (t - g)(t - sigma g) = norm of (t - g)
        let p = 5u64;
        let l = make_field(p, 2, None, 24).unwrap();
        let qp = make_field(p, 1, None, 24).unwrap();
        let ring = build_ring(p, 1, &l).unwrap();
        let g = PadicElement::generator(&l).add(&PadicElement::from_i64(&l, 1));
        let s = RingMat::new(&ring, 1, 1, vec![RingElt::from_l_scalar(&ring, &g)]);
        let m = Isocrystal::new(&ring, s).unwrap();
        let restricted = m.restrict(&qp).unwrap();
        assert_eq!(restricted.rank(), 2);
        let cp = restricted.char_poly().unwrap();
        // norm and trace of g + 1
        let tr = g.add(&g.sigma(1));
        let nm = g.mul(&g.sigma(1));
        let emb = FieldEmbedding::new(&qp, &l).unwrap();
        assert!(emb.embed(&cp.coeffs[1]).agrees_to(&tr.neg(), 18));
        assert!(emb.embed(&cp.coeffs[0]).agrees_to(&nm, 18));
    }

    #[test]
    fn row_convention_worked_example() {
        // the fixed convention, spelled out on a 2x2 instance over Q_25
        // (d = 2, L = Q_p): S stores F(v_i) = sum_j s_ij v_j, so F acts on a
        // coordinate row x as sigma(x) S, F^2 as x sigma(S) S, and a map
        // with matrix A is a morphism M -> N exactly when S_M A = sigma(A) S_N.
        let ring = qp_ring(5, 2);
        let g = PadicElement::generator(ring.factor_field());
        let entry = |v: &PadicElement| {
            RingElt::from_components(&ring, vec![v.clone()])
        };
        let one = PadicElement::one(ring.factor_field());
        let p5 = PadicElement::from_i64(ring.factor_field(), 5);
        // S = [[0, p], [1, 0]]: F(v_1) = p v_2, F(v_2) = v_1
        let m = standard_object(1, 2, &ring).unwrap();
        // the basis row e_1 = (1, 0) maps to (0, p): coordinates of p v_2
        let image = m.apply_semilinear(&[entry(&one), entry(&PadicElement::zero(ring.factor_field()))]);
        assert!(image[0].is_zero());
        assert!(image[1].agrees_to(&entry(&p5), 20));
        // the row (g, 0) maps to (0, sigma(g) p): the twist happens before S
        let image = m.apply_semilinear(&[entry(&g), entry(&PadicElement::zero(ring.factor_field()))]);
        assert!(image[1].agrees_to(&entry(&g.sigma(1).mul(&p5)), 20));
        // F^2 matrix: sigma(S) S = [[p, 0], [0, p]] for this rational S
        let lin = m.linearize();
        assert!(lin.at(0, 0).agrees_to(&entry(&p5), 20));
        assert!(lin.at(0, 1).is_zero());
        // swapping the two basis vectors is an isomorphism onto the object
        // with the transposed cycle [[0, 1], [p, 0]]: A = [[0, 1], [1, 0]]
        // satisfies S_M A = sigma(A) S_N entry by entry
        let mut s_n = RingMat::zero(&ring, 2, 2);
        *s_n.at_mut(0, 1) = RingElt::one(&ring);
        *s_n.at_mut(1, 0) = RingElt::from_l_scalar(&ring, &PadicElement::from_i64(ring.l_field(), 5));
        let n = Isocrystal::new(&ring, s_n).unwrap();
        let mut a = RingMat::zero(&ring, 2, 2);
        *a.at_mut(0, 1) = RingElt::one(&ring);
        *a.at_mut(1, 0) = RingElt::one(&ring);
        assert!(is_morphism(&m, &n, &a, 20));
        assert_eq!(hom_space(&m, &n).unwrap().dim, hom_space(&m, &m).unwrap().dim);
    }

    #[test]
    fn restrict_through_a_ramified_step() {
        // the slope-1/2 rank-1 object over Q_p(sqrt p) restricted to Q_p:
        // rank doubles (divisible by the slope denominator) and the char
        // poly is the norm (t - p)^2
        let p = 5u64;
        let qp = make_field(p, 1, None, 24).unwrap();
        let ring = qp_ring(p, 2);
        let unit = Isocrystal::unit(&ring);
        let (m, _) = unit.tate_twist(-1, 2).unwrap();
        let restricted = m.restrict(&qp).unwrap();
        assert_eq!(restricted.rank(), 2);
        let cp = restricted.char_poly().unwrap();
        // (t - p)^2 = t^2 - 2p t + p^2
        assert!(cp.coeffs[0].agrees_to(&PadicElement::from_i64(&qp, 25), 18));
        assert!(cp.coeffs[1].agrees_to(&PadicElement::from_i64(&qp, -10), 18));
        let ms = crate::slopes::newton_slopes(&cp).unwrap();
        assert_eq!(
            ms.entries,
            vec![(num_rational::Ratio::new(1, 2), 2)],
            "slope 1/2 with multiplicity equal to its denominator"
        );
    }

    #[test]
    fn tate_twist_scales_and_reports_stability() {
        let ring = qp_ring(5, 2);
        let u = Isocrystal::unit(&ring);
        let (tw, stable) = u.tate_twist(-1, 2).unwrap();
        assert!(stable, "b = 2 divides d = 2");
        assert_eq!(tw.ring().l_field().ram_degree(), 2);
        let cp = tw.char_poly().unwrap();
        // F^2 eigenvalue is p; constant coefficient valuation 1
        assert_eq!(cp.coeffs[0].valuation().unwrap(), num_rational::Ratio::new(1, 1));
        let (tw0, _) = u.tate_twist(0, 1).unwrap();
        assert!(tw0.matrix().agrees_to(u.matrix(), 20));
        // integer twist stays in the same field
        let (tw1, st1) = u.tate_twist(2, 1).unwrap();
        assert!(st1);
        assert_eq!(tw1.ring().l_field().ram_degree(), 1);
    }

    #[test]
    fn galois_twist_transforms_char_poly() {
        let mut rng = Rng::new(5);
        let l = make_field(5, 2, None, 24).unwrap();
        let ring = build_ring(5, 2, &l).unwrap();
        let m = random_isocrystal(&ring, 2, &mut rng);
        let tw = m.galois_twist(1).unwrap();
        let cp = m.char_poly().unwrap();
        let cpt = tw.char_poly().unwrap();
        for (c, ct) in cp.coeffs.iter().zip(cpt.coeffs.iter()) {
            assert!(c.sigma(1).agrees_to(ct, 18), "char poly must transform by g");
        }
    }
}
