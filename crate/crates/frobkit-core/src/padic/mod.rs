//! Exact arithmetic in p-adic local fields built as unramified towers with an
//! optional Eisenstein step, with relative-precision tracking.
//!
//! A field is Q_p(g, t) where g generates the unramified part of degree m
//! (root of the deterministic least irreducible polynomial over F_p) and t is
//! a root of a monic Eisenstein polynomial of degree e over the integers
//! (absent for unramified fields, in which case t is identified with p).
//! Elements are stored as t^v * u with u a unit written on the monomial basis
//! g^i t^j, coefficients kept modulo p^k for k matching the element's known
//! relative precision. Every equality in this crate means "equal to the
//! tracked number of digits"; operations that can cancel digits (addition)
//! record the loss, everything else preserves precision.

mod embed;
mod norms;

pub use embed::FieldEmbedding;
pub use norms::{hilbert90_solve, is_norm, is_norm_with_witness, norm, relative_trace, NormWitness};

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{self, FqCtx};

/// Serialized form of a field spec.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldSpecJson {
    pub p: u64,
    pub unramified_degree: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eisenstein: Option<Vec<i64>>,
    pub precision: u32,
}

#[derive(Debug)]
pub struct FieldData {
    p: u64,
    m: usize,
    /// monic Eisenstein coefficients c_0..c_e (c_e = 1), length e+1; None when unramified
    eis: Option<Vec<BigInt>>,
    prec: u32,
    /// monic integer lift of the least irreducible polynomial of degree m
    f_unram: Vec<BigInt>,
    res_ctx: FqCtx,
    /// g^(m+u) = sum_i gred[u][i] g^i, exact integers
    gred: Vec<Vec<BigInt>>,
    /// t^(e+u) = sum_j tred[u][j] t^j, exact integers
    tred: Vec<Vec<BigInt>>,
    /// p/t = sum_j p_over_t[j] t^j, stored mod p^(prec+4)
    p_over_t: Vec<BigInt>,
    /// sigma^k(g) as unramified coordinate vectors (len m), k in 0..m, mod p^(prec+4)
    sigma_g: Vec<Vec<BigInt>>,
}

pub type Field = Arc<FieldData>;

/// Guard digits used for internal precomputed tables.
const TABLE_PAD: u32 = 4;

/// Build a field spec. Deterministic: equal (p, m, eisenstein, precision)
/// inputs give interchangeable fields.
pub fn make_field(p: u64, m: usize, eisenstein: Option<Vec<BigInt>>, prec: u32) -> Result<Field> {
    if !fp::is_prime(p) {
        return Err(Error::NonPrime(p));
    }
    assert!(m >= 1, "unramified degree must be positive");
    assert!(prec >= 1, "precision must be positive");
    let big_p = BigInt::from(p);
    if let Some(eis) = &eisenstein {
        if eis.len() < 3 {
            return Err(Error::NotEisenstein("degree must be at least 2".into()));
        }
        if !eis.last().unwrap().is_one() {
            return Err(Error::NotEisenstein("polynomial must be monic".into()));
        }
        let v0 = int_vp(&eis[0], &big_p);
        if v0 != Some(1) {
            return Err(Error::NotEisenstein(
                "constant term must have valuation exactly 1".into(),
            ));
        }
        for c in &eis[1..eis.len() - 1] {
            if !c.is_zero() && int_vp(c, &big_p) == Some(0) {
                return Err(Error::NotEisenstein(
                    "inner coefficients must have positive valuation".into(),
                ));
            }
        }
    }

    let fbar = fp::least_irreducible(p, m);
    let f_unram: Vec<BigInt> = fbar.iter().map(|&c| BigInt::from(c)).collect();
    let res_ctx = FqCtx { p, modulus: fbar };

    // g reduction rows: g^(m+u) for u in 0..m-1
    let mut gred: Vec<Vec<BigInt>> = Vec::new();
    if m > 1 {
        let mut cur: Vec<BigInt> = f_unram[..m].iter().map(|c| -c).collect(); // g^m
        gred.push(cur.clone());
        for _ in 1..m - 1 {
            // multiply by g: shift and reduce top coefficient
            let top = cur[m - 1].clone();
            let mut next = vec![BigInt::zero(); m];
            for i in (1..m).rev() {
                next[i] = cur[i - 1].clone();
            }
            for i in 0..m {
                next[i] += &top * &gred[0][i];
            }
            cur = next;
            gred.push(cur.clone());
        }
    }

    let e = eisenstein.as_ref().map(|c| c.len() - 1).unwrap_or(1);
    let mut tred: Vec<Vec<BigInt>> = Vec::new();
    if e > 1 {
        let eis = eisenstein.as_ref().unwrap();
        let mut cur: Vec<BigInt> = eis[..e].iter().map(|c| -c).collect(); // t^e
        tred.push(cur.clone());
        for _ in 1..e - 1 {
            let top = cur[e - 1].clone();
            let mut next = vec![BigInt::zero(); e];
            for j in (1..e).rev() {
                next[j] = cur[j - 1].clone();
            }
            for j in 0..e {
                next[j] += &top * &tred[0][j];
            }
            cur = next;
            tred.push(cur.clone());
        }
    }

    // p/t expansion: with c_0 = p*w, p = -(t^e + c_{e-1} t^{e-1} + ... + c_1 t)/w
    // so p/t = -w^{-1} (c_1 + c_2 t + ... + c_{e-1} t^{e-2} + t^{e-1}).
    let kmax = prec + TABLE_PAD;
    let pk_max = big_p.pow(kmax);
    let p_over_t = if let Some(eis) = &eisenstein {
        let w = (&eis[0] / &big_p).mod_floor(&pk_max);
        let w_inv = mod_inverse(&w, &big_p, kmax);
        let mut out = vec![BigInt::zero(); e];
        for j in 0..e - 1 {
            out[j] = (-(&w_inv) * &eis[j + 1]).mod_floor(&pk_max);
        }
        out[e - 1] = (-(&w_inv)).mod_floor(&pk_max);
        out
    } else {
        vec![BigInt::one()]
    };

    let mut data = FieldData {
        p,
        m,
        eis: eisenstein,
        prec,
        f_unram,
        res_ctx,
        gred,
        tred,
        p_over_t,
        sigma_g: Vec::new(),
    };

    // sigma^k(g): Hensel root of f_unram congruent to g^(p^k) mod p
    let mut sigma_g = Vec::with_capacity(m);
    // sigma^0 = identity
    let mut id = vec![BigInt::zero(); m];
    if m > 1 {
        id[1] = BigInt::one();
    } else {
        id[0] = BigInt::zero();
    }
    sigma_g.push(id);
    if m > 1 {
        let frob = data.hensel_frobenius_root(kmax);
        sigma_g.push(frob.clone());
        for k in 2..m {
            // sigma^k(g) = substitute sigma^(k-1) into sigma(g)'s coordinates
            let prev = &sigma_g[k - 1];
            let img = data.substitute_unram(&frob, prev, kmax);
            sigma_g.push(img);
        }
    }
    data.sigma_g = sigma_g;
    Ok(Arc::new(data))
}

fn int_vp(c: &BigInt, p: &BigInt) -> Option<u32> {
    if c.is_zero() {
        return None;
    }
    let mut v = 0;
    let mut c = c.clone();
    while (&c % p).is_zero() {
        c /= p;
        v += 1;
    }
    Some(v)
}

/// Inverse of a p-unit modulo p^k by Newton iteration.
fn mod_inverse(a: &BigInt, p: &BigInt, k: u32) -> BigInt {
    let pk = p.pow(k);
    let a = a.mod_floor(&pk);
    // inverse mod p by Fermat
    let p_u64 = p.to_u64().unwrap();
    let a0 = a.mod_floor(p).to_u64().unwrap();
    assert!(a0 != 0, "not a unit");
    let mut inv0 = 1u64;
    let mut b = a0 % p_u64;
    let mut e = p_u64 - 2;
    while e > 0 {
        if e & 1 == 1 {
            inv0 = (inv0 as u128 * b as u128 % p_u64 as u128) as u64;
        }
        b = (b as u128 * b as u128 % p_u64 as u128) as u64;
        e >>= 1;
    }
    let mut z = BigInt::from(inv0);
    let two = BigInt::from(2);
    let mut have = 1u32;
    while have < k {
        have = (have * 2).min(k);
        let pm = p.pow(have);
        z = (&z * (&two - (&a * &z).mod_floor(&pm))).mod_floor(&pm);
    }
    z
}

impl FieldData {
    pub fn p(&self) -> u64 {
        self.p
    }
    pub fn unram_degree(&self) -> usize {
        self.m
    }
    pub fn ram_degree(&self) -> usize {
        self.eis.as_ref().map(|c| c.len() - 1).unwrap_or(1)
    }
    pub fn eisenstein(&self) -> Option<&[BigInt]> {
        self.eis.as_deref()
    }
    pub fn precision(&self) -> u32 {
        self.prec
    }
    pub fn residue_ctx(&self) -> &FqCtx {
        &self.res_ctx
    }
    pub fn defining_poly(&self) -> &[BigInt] {
        &self.f_unram
    }
    /// cap on relative precision in t-digits
    pub fn cap_t(&self) -> i64 {
        self.prec as i64 * self.ram_degree() as i64
    }
    pub fn dim(&self) -> usize {
        self.m * self.ram_degree()
    }
    /// Same mathematical field (precision may differ).
    pub fn same_field(&self, other: &FieldData) -> bool {
        self.p == other.p && self.m == other.m && self.eis == other.eis
    }

    pub fn to_spec(&self) -> FieldSpecJson {
        FieldSpecJson {
            p: self.p,
            unramified_degree: self.m,
            eisenstein: self
                .eis
                .as_ref()
                .map(|v| v.iter().map(|c| c.to_i64().expect("eisenstein coefficient overflow")).collect()),
            precision: self.prec,
        }
    }

    fn big_p(&self) -> BigInt {
        BigInt::from(self.p)
    }

    /// Hensel-lift the root of f_unram congruent to g^p mod p.
    fn hensel_frobenius_root(&self, k: u32) -> Vec<BigInt> {
        let p = self.big_p();
        // start: g^p mod p (unramified coordinates)
        let gbar = vec![0u64, 1];
        let start = self.res_ctx.pow(&gbar, self.p as u128);
        let mut x: Vec<BigInt> = (0..self.m)
            .map(|i| BigInt::from(start.get(i).copied().unwrap_or(0)))
            .collect();
        let mut have = 1u32;
        while have < k {
            have = (have * 2).min(k);
            let pk = p.pow(have);
            // Newton: x -= f(x)/f'(x)
            let fx = self.eval_int_poly_unram(&self.f_unram, &x, have);
            let fprime: Vec<BigInt> = (1..self.f_unram.len())
                .map(|i| &self.f_unram[i] * BigInt::from(i))
                .collect();
            let fpx = self.eval_int_poly_unram(&fprime, &x, have);
            let fpx_inv = self.unram_inverse(&fpx, have);
            let corr = self.unram_mul(&fx, &fpx_inv, have);
            for i in 0..self.m {
                x[i] = (&x[i] - &corr[i]).mod_floor(&pk);
            }
        }
        x
    }

    /// Multiply two unramified coordinate vectors (length m) mod p^k.
    fn unram_mul(&self, a: &[BigInt], b: &[BigInt], k: u32) -> Vec<BigInt> {
        let pk = self.big_p().pow(k);
        let m = self.m;
        let mut wide = vec![BigInt::zero(); 2 * m - 1];
        for i in 0..m {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..m {
                if b[j].is_zero() {
                    continue;
                }
                wide[i + j] += &a[i] * &b[j];
            }
        }
        for u in (0..m.saturating_sub(1)).rev() {
            let top = std::mem::take(&mut wide[m + u]);
            if top.is_zero() {
                continue;
            }
            for i in 0..m {
                let add = &top * &self.gred[u][i];
                wide[i] += add;
            }
        }
        wide.truncate(m);
        wide.iter().map(|c| c.mod_floor(&pk)).collect()
    }

    fn eval_int_poly_unram(&self, poly: &[BigInt], x: &[BigInt], k: u32) -> Vec<BigInt> {
        let pk = self.big_p().pow(k);
        let mut acc = vec![BigInt::zero(); self.m];
        for c in poly.iter().rev() {
            acc = self.unram_mul(&acc, x, k);
            acc[0] += c;
            acc[0] = acc[0].mod_floor(&pk);
        }
        acc
    }

    /// Inverse of a unit unramified vector mod p^k.
    fn unram_inverse(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        // residue inverse then Newton
        let abar: Vec<u64> = a
            .iter()
            .map(|c| c.mod_floor(&self.big_p()).to_u64().unwrap())
            .collect();
        let abar = fp::trim(abar);
        let inv0 = self
            .res_ctx
            .inv(&abar)
            .expect("not a unit in unramified inverse");
        let mut z: Vec<BigInt> = (0..self.m)
            .map(|i| BigInt::from(inv0.get(i).copied().unwrap_or(0)))
            .collect();
        let mut have = 1u32;
        while have < k {
            have = (have * 2).min(k);
            let pk = self.big_p().pow(have);
            let az = self.unram_mul(a, &z, have);
            let mut two_minus = vec![BigInt::zero(); self.m];
            two_minus[0] = BigInt::from(2);
            for i in 0..self.m {
                two_minus[i] = (&two_minus[i] - &az[i]).mod_floor(&pk);
            }
            z = self.unram_mul(&z, &two_minus, have);
        }
        z
    }

    /// Substitute: evaluate coordinates `coords` (a poly in g) at the point
    /// whose coordinates are `x` (image of g), both unramified vectors.
    fn substitute_unram(&self, coords: &[BigInt], x: &[BigInt], k: u32) -> Vec<BigInt> {
        self.eval_int_poly_unram(coords, x, k)
    }

    /// Index into a flat unit vector: coefficient of g^i t^j.
    fn idx(&self, i: usize, j: usize) -> usize {
        j * self.m + i
    }

    /// Full ring multiplication of raw unit vectors (length m*e) mod p^k.
    fn raw_mul(&self, a: &[BigInt], b: &[BigInt], k: u32) -> Vec<BigInt> {
        let m = self.m;
        let e = self.ram_degree();
        let pk = self.big_p().pow(k);
        let wm = 2 * m - 1;
        let we = 2 * e - 1;
        let mut wide = vec![BigInt::zero(); wm * we];
        for j1 in 0..e {
            for i1 in 0..m {
                let av = &a[self.idx(i1, j1)];
                if av.is_zero() {
                    continue;
                }
                for j2 in 0..e {
                    for i2 in 0..m {
                        let bv = &b[self.idx(i2, j2)];
                        if bv.is_zero() {
                            continue;
                        }
                        wide[(j1 + j2) * wm + (i1 + i2)] += av * bv;
                    }
                }
            }
        }
        // reduce g degrees
        for jj in 0..we {
            for u in (0..m.saturating_sub(1)).rev() {
                let top = std::mem::take(&mut wide[jj * wm + m + u]);
                if top.is_zero() {
                    continue;
                }
                for i in 0..m {
                    let add = &top * &self.gred[u][i];
                    wide[jj * wm + i] += add;
                }
            }
        }
        // reduce t degrees
        for u in (0..e.saturating_sub(1)).rev() {
            for i in 0..m {
                let top = std::mem::take(&mut wide[(e + u) * wm + i]);
                if top.is_zero() {
                    continue;
                }
                for j in 0..e {
                    let add = &top * &self.tred[u][j];
                    wide[j * wm + i] += add;
                }
            }
        }
        let mut out = vec![BigInt::zero(); m * e];
        for j in 0..e {
            for i in 0..m {
                out[self.idx(i, j)] = wide[j * wm + i].mod_floor(&pk);
            }
        }
        out
    }

    /// t-adic valuation of a raw unit vector given coefficients known mod p^k.
    /// None when the vector is indistinguishable from 0.
    fn raw_vt(&self, a: &[BigInt], k: u32) -> Option<i64> {
        let e = self.ram_degree() as i64;
        let p = self.big_p();
        let mut best: Option<i64> = None;
        for j in 0..self.ram_degree() {
            for i in 0..self.m {
                let c = &a[self.idx(i, j)];
                if c.is_zero() {
                    continue;
                }
                if let Some(v) = int_vp(c, &p) {
                    if v < k {
                        let vt = e * v as i64 + j as i64;
                        best = Some(best.map_or(vt, |b: i64| b.min(vt)));
                    }
                }
            }
        }
        best
    }

    /// Multiply a raw vector by t (exact, inside the integral structure).
    fn raw_mul_t(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        let m = self.m;
        let e = self.ram_degree();
        let pk = self.big_p().pow(k);
        if e == 1 {
            // t = p
            return a.iter().map(|c| (c * self.big_p()).mod_floor(&pk)).collect();
        }
        let mut out = vec![BigInt::zero(); m * e];
        for i in 0..m {
            let top = &a[self.idx(i, e - 1)];
            for j in (1..e).rev() {
                out[self.idx(i, j)] = a[self.idx(i, j - 1)].clone();
            }
            if !top.is_zero() {
                for j in 0..e {
                    let add = top * &self.tred.first().map(|r| r[j].clone()).unwrap_or_default();
                    out[self.idx(i, j)] += add;
                }
            }
            for j in 0..e {
                out[self.idx(i, j)] = out[self.idx(i, j)].mod_floor(&pk);
            }
        }
        out
    }

    /// Divide a raw vector by t; requires t | a (valuation at least 1).
    fn raw_div_t(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        let m = self.m;
        let e = self.ram_degree();
        let pk = self.big_p().pow(k);
        let p = self.big_p();
        if e == 1 {
            return a
                .iter()
                .map(|c| {
                    let (q, r) = c.div_rem(&p);
                    // representative may not be divisible; lift the remainder
                    // into the quotient consistently mod p^(k-1)
                    debug_assert!(r.is_zero() || !c.mod_floor(&pk).is_zero());
                    if r.is_zero() {
                        q.mod_floor(&pk)
                    } else {
                        // the coefficient is only known mod p^k and its low
                        // digit is nonzero: valuation promised >= 1, so the
                        // true coefficient is c - rep + multiple; treat as 0
                        BigInt::zero()
                    }
                })
                .collect();
        }
        let mut out = vec![BigInt::zero(); m * e];
        for i in 0..m {
            // t^j -> t^(j-1) for j >= 1
            for j in 1..e {
                out[self.idx(i, j - 1)] = a[self.idx(i, j)].clone();
            }
            // constant-in-t term: a_i0 = p * b, a_i0/t = b * (p/t)
            let c = &a[self.idx(i, 0)];
            if !c.is_zero() {
                let (b, r) = c.div_rem(&p);
                let b = if r.is_zero() { b } else { BigInt::zero() };
                for j in 0..e {
                    let add = &b * &self.p_over_t[j];
                    out[self.idx(i, j)] += add;
                }
            }
            for j in 0..e {
                out[self.idx(i, j)] = out[self.idx(i, j)].mod_floor(&pk);
            }
        }
        out
    }

    /// Inverse of a raw unit vector mod p^k.
    fn raw_inv(&self, a: &[BigInt], k: u32) -> Vec<BigInt> {
        let m = self.m;
        let e = self.ram_degree();
        let p = self.big_p();
        // residue inverse in F_q[t]/(t^e): power series inversion
        let mut abar: Vec<Vec<u64>> = (0..e)
            .map(|j| {
                fp::trim(
                    (0..m)
                        .map(|i| a[self.idx(i, j)].mod_floor(&p).to_u64().unwrap())
                        .collect(),
                )
            })
            .collect();
        let u0_inv = self
            .res_ctx
            .inv(&abar[0])
            .expect("raw_inv called on a non-unit");
        let mut zbar: Vec<Vec<u64>> = vec![u0_inv.clone()];
        for j in 1..e {
            let mut s: Vec<u64> = vec![];
            for l in 1..=j {
                let t = self.res_ctx.mul(&abar[l], &zbar[j - l]);
                s = fp::add(&s, &t, self.p);
            }
            let t = self.res_ctx.mul(&u0_inv, &s);
            // negate
            let neg: Vec<u64> = t.iter().map(|&c| (self.p - c) % self.p).collect();
            zbar.push(fp::trim(neg));
        }
        abar.clear();
        let mut z = vec![BigInt::zero(); m * e];
        for j in 0..e {
            for i in 0..m {
                z[self.idx(i, j)] = BigInt::from(zbar[j].get(i).copied().unwrap_or(0));
            }
        }
        // Newton lifting in p-digits
        let mut have = 1u32;
        while have < k {
            have = (have * 2).min(k);
            let pk = p.pow(have);
            let az = self.raw_mul(a, &z, have);
            let mut two_minus = vec![BigInt::zero(); m * e];
            two_minus[0] = BigInt::from(2);
            for idx in 0..m * e {
                two_minus[idx] = (&two_minus[idx] - &az[idx]).mod_floor(&pk);
            }
            z = self.raw_mul(&z, &two_minus, have);
        }
        z
    }

    /// Apply sigma^pow to a raw unit vector (fixes t, acts on g).
    fn raw_sigma(&self, a: &[BigInt], k: u32, pow: usize) -> Vec<BigInt> {
        let m = self.m;
        let e = self.ram_degree();
        if m == 1 {
            return a.to_vec();
        }
        let pow = pow % m;
        if pow == 0 {
            return a.to_vec();
        }
        let img = &self.sigma_g[pow];
        let mut out = vec![BigInt::zero(); m * e];
        // evaluate per t-degree: coefficients in g substituted at img
        for j in 0..e {
            let coords: Vec<BigInt> = (0..m).map(|i| a[self.idx(i, j)].clone()).collect();
            let val = self.eval_int_poly_unram(&coords_to_poly(&coords), img, k);
            for i in 0..m {
                out[self.idx(i, j)] = val[i].clone();
            }
        }
        out
    }
}

fn coords_to_poly(coords: &[BigInt]) -> Vec<BigInt> {
    coords.to_vec()
}

impl FieldData {
    /// For unramified fields 1; for x^b - p Eisenstein parts b; None for a
    /// general Eisenstein polynomial.
    pub fn radical_ram_exponent(&self) -> Option<usize> {
        match &self.eis {
            None => Some(1),
            Some(eis) => {
                let b = eis.len() - 1;
                let ok = eis[0] == BigInt::from(-(self.p as i64))
                    && eis[b].is_one()
                    && eis[1..b].iter().all(|c| c.is_zero());
                if ok {
                    Some(b)
                } else {
                    None
                }
            }
        }
    }
}

fn radical_eis(p: u64, b: usize) -> Option<Vec<BigInt>> {
    if b == 1 {
        return None;
    }
    let mut v = vec![BigInt::zero(); b + 1];
    v[0] = BigInt::from(-(p as i64));
    v[b] = BigInt::one();
    Some(v)
}

/// Largest common subfield of two supported fields along the tower lattice.
pub fn common_subfield(a: &Field, b: &Field) -> Result<Field> {
    assert_eq!(a.p(), b.p());
    let m = num_integer::gcd(a.unram_degree(), b.unram_degree());
    let prec = a.precision().min(b.precision());
    if a.eisenstein() == b.eisenstein() {
        return make_field(a.p(), m, a.eisenstein().map(|c| c.to_vec()), prec);
    }
    match (a.radical_ram_exponent(), b.radical_ram_exponent()) {
        (Some(ba), Some(bb)) => {
            let g = num_integer::gcd(ba, bb);
            make_field(a.p(), m, radical_eis(a.p(), g), prec)
        }
        _ => Err(Error::UnsupportedTower(
            "no common subfield for distinct non-radical eisenstein parts".into(),
        )),
    }
}

/// Compositum of two supported fields along the tower lattice.
pub fn compositum(a: &Field, b: &Field) -> Result<Field> {
    assert_eq!(a.p(), b.p());
    let m = num_integer::lcm(a.unram_degree(), b.unram_degree());
    let prec = a.precision().min(b.precision());
    if a.eisenstein() == b.eisenstein() {
        return make_field(a.p(), m, a.eisenstein().map(|c| c.to_vec()), prec);
    }
    match (a.radical_ram_exponent(), b.radical_ram_exponent()) {
        (Some(ba), Some(bb)) => {
            let l = num_integer::lcm(ba, bb);
            make_field(a.p(), m, radical_eis(a.p(), l), prec)
        }
        _ => Err(Error::UnsupportedTower(
            "no compositum for distinct non-radical eisenstein parts".into(),
        )),
    }
}

#[derive(Clone, Debug)]
enum Repr {
    /// Indistinguishable from zero. `abs_t` is the t-adic order below which
    /// nothing is known; None means exactly zero.
    Zero { abs_t: Option<i64> },
    NonZero {
        /// valuation numerator in t-digits: v(x) = vnum / e in p-units
        vnum: i64,
        /// unit part on the g^i t^j basis, flat, coefficients mod p^ceil(prec_t/e)
        unit: Vec<BigInt>,
        /// relative precision in t-digits
        prec_t: i64,
    },
}

#[derive(Clone)]
pub struct PadicElement {
    field: Field,
    repr: Repr,
}

impl fmt::Debug for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr_string())
    }
}

fn kc(e: usize, prec_t: i64) -> u32 {
    if prec_t <= 0 {
        return 1;
    }
    ((prec_t + e as i64 - 1) / e as i64) as u32
}

impl PadicElement {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn zero(field: &Field) -> Self {
        PadicElement { field: field.clone(), repr: Repr::Zero { abs_t: None } }
    }

    pub fn zero_at(field: &Field, abs_t: i64) -> Self {
        PadicElement { field: field.clone(), repr: Repr::Zero { abs_t: Some(abs_t) } }
    }

    pub fn one(field: &Field) -> Self {
        Self::from_bigint(field, &BigInt::one())
    }

    pub fn from_i64(field: &Field, n: i64) -> Self {
        Self::from_bigint(field, &BigInt::from(n))
    }

    pub fn from_bigint(field: &Field, n: &BigInt) -> Self {
        if n.is_zero() {
            return Self::zero(field);
        }
        let p = field.big_p();
        let v = int_vp(n, &p).unwrap();
        let u = n / p.pow(v);
        let e = field.ram_degree();
        let cap = field.cap_t();
        let k = kc(e, cap);
        let mut unit = vec![BigInt::zero(); field.dim()];
        unit[0] = u.mod_floor(&p.pow(k));
        PadicElement {
            field: field.clone(),
            repr: Repr::NonZero { vnum: v as i64 * e as i64, unit, prec_t: cap },
        }
    }

    /// The unramified generator g (for m = 1 this is 0).
    pub fn generator(field: &Field) -> Self {
        if field.unram_degree() == 1 {
            return Self::zero(field);
        }
        let mut unit = vec![BigInt::zero(); field.dim()];
        unit[field.idx(1, 0)] = BigInt::one();
        PadicElement {
            field: field.clone(),
            repr: Repr::NonZero { vnum: 0, unit, prec_t: field.cap_t() },
        }
    }

    /// The uniformizer: t for ramified fields, p otherwise.
    pub fn uniformizer(field: &Field) -> Self {
        let mut unit = vec![BigInt::zero(); field.dim()];
        unit[0] = BigInt::one();
        PadicElement {
            field: field.clone(),
            repr: Repr::NonZero { vnum: 1, unit, prec_t: field.cap_t() },
        }
    }

    pub fn is_zero_at_precision(&self) -> bool {
        matches!(self.repr, Repr::Zero { .. })
    }

    /// Exact-rational valuation, normalized so v(p) = 1.
    pub fn valuation(&self) -> Result<Ratio<i64>> {
        match &self.repr {
            Repr::Zero { .. } => Err(Error::PrecisionZero),
            Repr::NonZero { vnum, .. } => {
                Ok(Ratio::new(*vnum, self.field.ram_degree() as i64))
            }
        }
    }

    /// Valuation in t-digits (v(t) = 1).
    pub fn vnum_t(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::NonZero { vnum, .. } => Some(*vnum),
        }
    }

    /// Known relative precision in p-digits (floor), None for zero-flag.
    pub fn rel_prec_digits(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::NonZero { prec_t, .. } => Some(prec_t / self.field.ram_degree() as i64),
        }
    }

    /// t-adic order below which the element is known: v + prec for nonzero,
    /// abs_t for zero-flag (None = exact zero, knowledge is infinite).
    pub fn known_abs_t(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero { abs_t } => *abs_t,
            Repr::NonZero { vnum, prec_t, .. } => Some(vnum + prec_t),
        }
    }

    fn normalize(field: &Field, raw: Vec<BigInt>, base_vnum: i64, known_prec_t: i64) -> Self {
        if known_prec_t <= 0 {
            return Self::zero_at(field, base_vnum + known_prec_t.max(0));
        }
        let e = field.ram_degree();
        let k = kc(e, known_prec_t);
        match field.raw_vt(&raw, k) {
            None => Self::zero_at(field, base_vnum + known_prec_t),
            Some(vt) if vt >= known_prec_t => Self::zero_at(field, base_vnum + known_prec_t),
            Some(vt) => {
                let mut unit = raw;
                for _ in 0..vt {
                    unit = field.raw_div_t(&unit, k);
                }
                let prec_t = (known_prec_t - vt).min(field.cap_t());
                let k2 = kc(e, prec_t);
                let pk = field.big_p().pow(k2);
                for c in unit.iter_mut() {
                    *c = c.mod_floor(&pk);
                }
                PadicElement {
                    field: field.clone(),
                    repr: Repr::NonZero { vnum: base_vnum + vt, unit, prec_t },
                }
            }
        }
    }

    fn assert_same_field(&self, other: &Self) {
        assert!(
            self.field.same_field(&other.field),
            "elements of different fields"
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let f = &self.field;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs_t: None }, _) => other.truncate_abs(None),
            (_, Repr::Zero { abs_t: None }) => self.truncate_abs(None),
            (Repr::Zero { abs_t: Some(a) }, _) => other.truncate_abs(Some(*a)),
            (_, Repr::Zero { abs_t: Some(a) }) => self.truncate_abs(Some(*a)),
            (
                Repr::NonZero { vnum: va, unit: ua, prec_t: pa },
                Repr::NonZero { vnum: vb, unit: ub, prec_t: pb },
            ) => {
                let base = (*va).min(*vb);
                let abs = (va + pa).min(vb + pb);
                let known = abs - base;
                let k = kc(f.ram_degree(), known);
                let pk = f.big_p().pow(k);
                let lift = |unit: &Vec<BigInt>, v: i64| -> Vec<BigInt> {
                    let mut r = unit.clone();
                    for _ in 0..(v - base) {
                        r = f.raw_mul_t(&r, k);
                    }
                    r
                };
                let ra = lift(ua, *va);
                let rb = lift(ub, *vb);
                let sum: Vec<BigInt> = ra
                    .iter()
                    .zip(rb.iter())
                    .map(|(x, y)| (x + y).mod_floor(&pk))
                    .collect();
                Self::normalize(f, sum, base, known)
            }
        }
    }

    /// Truncate knowledge to t-adic order `abs` (used when adding zero-flags).
    fn truncate_abs(&self, abs: Option<i64>) -> Self {
        match (&self.repr, abs) {
            (_, None) => self.clone(),
            (Repr::Zero { abs_t }, Some(a)) => {
                let new = match abs_t {
                    None => a,
                    Some(b) => (*b).min(a),
                };
                Self::zero_at(&self.field, new)
            }
            (Repr::NonZero { vnum, unit, prec_t }, Some(a)) => {
                let known = (vnum + prec_t).min(a) - vnum;
                Self::normalize(&self.field, unit.clone(), *vnum, known)
            }
        }
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::NonZero { vnum, unit, prec_t } => {
                let k = kc(self.field.ram_degree(), *prec_t);
                let pk = self.field.big_p().pow(k);
                let u = unit.iter().map(|c| (-c).mod_floor(&pk)).collect();
                PadicElement {
                    field: self.field.clone(),
                    repr: Repr::NonZero { vnum: *vnum, unit: u, prec_t: *prec_t },
                }
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_same_field(other);
        let f = &self.field;
        match (&self.repr, &other.repr) {
            (Repr::Zero { abs_t: None }, _) | (_, Repr::Zero { abs_t: None }) => Self::zero(f),
            (Repr::Zero { abs_t: Some(a) }, Repr::Zero { abs_t: Some(b) }) => {
                Self::zero_at(f, a + b)
            }
            (Repr::Zero { abs_t: Some(a) }, Repr::NonZero { vnum, .. }) => {
                Self::zero_at(f, a + vnum)
            }
            (Repr::NonZero { vnum, .. }, Repr::Zero { abs_t: Some(a) }) => {
                Self::zero_at(f, a + vnum)
            }
            (
                Repr::NonZero { vnum: va, unit: ua, prec_t: pa },
                Repr::NonZero { vnum: vb, unit: ub, prec_t: pb },
            ) => {
                let prec = (*pa).min(*pb);
                let k = kc(f.ram_degree(), prec);
                let prod = f.raw_mul(ua, ub, k);
                // product of units is a unit; still normalize defensively
                Self::normalize(f, prod, va + vb, prec)
            }
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero { .. } => Err(Error::PrecisionZero),
            Repr::NonZero { vnum, unit, prec_t } => {
                let k = kc(self.field.ram_degree(), *prec_t);
                let inv = self.field.raw_inv(unit, k);
                Ok(PadicElement {
                    field: self.field.clone(),
                    repr: Repr::NonZero { vnum: -vnum, unit: inv, prec_t: *prec_t },
                })
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inverse()?))
    }

    pub fn pow(&self, n: i64) -> Result<Self> {
        if n == 0 {
            return Ok(Self::one(&self.field));
        }
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut acc = Self::one(&self.field);
        let mut b = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b);
            e >>= 1;
        }
        Ok(acc)
    }

    /// Frobenius lift sigma^pow: acts on the unramified generator, fixes the
    /// Eisenstein uniformizer. Ring automorphism of order m.
    pub fn sigma(&self, pow: usize) -> Self {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::NonZero { vnum, unit, prec_t } => {
                let k = kc(self.field.ram_degree(), *prec_t);
                let img = self.field.raw_sigma(unit, k, pow);
                Self::normalize(&self.field, img, *vnum, *prec_t)
            }
        }
    }

    /// Multiply by t^s (s may be negative): exact valuation shift.
    pub fn shift_t(&self, s: i64) -> Self {
        match &self.repr {
            Repr::Zero { abs_t } => PadicElement {
                field: self.field.clone(),
                repr: Repr::Zero { abs_t: abs_t.map(|a| a + s) },
            },
            Repr::NonZero { vnum, unit, prec_t } => PadicElement {
                field: self.field.clone(),
                repr: Repr::NonZero { vnum: vnum + s, unit: unit.clone(), prec_t: *prec_t },
            },
        }
    }

    /// Multiply by p^s.
    pub fn shift_p(&self, s: i64) -> Self {
        self.shift_t(s * self.field.ram_degree() as i64)
    }

    /// Agreement with another element, in p-digits relative to the smaller
    /// valuation; None means "agree to full tracked precision".
    pub fn agreement_digits(&self, other: &Self) -> Option<i64> {
        let d = self.sub(other);
        match &d.repr {
            Repr::Zero { .. } => None,
            Repr::NonZero { vnum, .. } => {
                let base = match (self.vnum_t(), other.vnum_t()) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => 0,
                };
                Some((vnum - base) / self.field.ram_degree() as i64)
            }
        }
    }

    /// True when the two elements agree to at least `digits` relative p-digits.
    pub fn agrees_to(&self, other: &Self, digits: i64) -> bool {
        match self.agreement_digits(other) {
            None => true,
            Some(d) => d >= digits,
        }
    }

    /// Write x = p^a * (sum of c_ij g^i t^j) with integral c_ij; returns
    /// (a, flat coordinates indexed j*m + i). None for zero-flag elements.
    pub fn integral_coordinates(&self) -> Option<(i64, Vec<BigInt>)> {
        match &self.repr {
            Repr::Zero { .. } => None,
            Repr::NonZero { vnum, unit, prec_t } => {
                let e = self.field.ram_degree() as i64;
                let a = vnum.div_euclid(e);
                let b = vnum.rem_euclid(e);
                let k = kc(self.field.ram_degree(), prec_t + b);
                let mut raw = unit.clone();
                for _ in 0..b {
                    raw = self.field.raw_mul_t(&raw, k);
                }
                Some((a, raw))
            }
        }
    }

    /// Truncate absolute knowledge to t-adic order `abs_t` (used when values
    /// are reconstructed from raw coordinates that carried less precision).
    pub fn truncated_to_abs(&self, abs_t: i64) -> Self {
        self.truncate_abs(Some(abs_t))
    }

    /// Reduce the tracked relative precision to at most `digits` p-digits.
    pub fn cap_rel_digits(&self, digits: i64) -> Self {
        match &self.repr {
            Repr::Zero { .. } => self.clone(),
            Repr::NonZero { vnum, unit, prec_t } => {
                let cap = digits * self.field.ram_degree() as i64;
                if *prec_t <= cap {
                    return self.clone();
                }
                Self::normalize(&self.field, unit.clone(), *vnum, cap)
            }
        }
    }

    /// Unit-part coefficient of g^i t^j (for inspection and serialization).
    pub fn unit_coefficient(&self, i: usize, j: usize) -> BigInt {
        match &self.repr {
            Repr::Zero { .. } => BigInt::zero(),
            Repr::NonZero { unit, .. } => unit[self.field.idx(i, j)].clone(),
        }
    }

    /// Residue of a valuation-0 element in F_q (t-degree-0 part mod p).
    pub fn residue(&self) -> Result<Vec<u64>> {
        match &self.repr {
            Repr::Zero { .. } => Ok(vec![]),
            Repr::NonZero { vnum, unit, .. } => {
                if *vnum != 0 {
                    return Err(Error::PrecisionLoss(
                        "residue of an element with nonzero valuation".into(),
                    ));
                }
                let p = self.field.big_p();
                Ok(fp::trim(
                    (0..self.field.unram_degree())
                        .map(|i| unit[self.field.idx(i, 0)].mod_floor(&p).to_u64().unwrap())
                        .collect(),
                ))
            }
        }
    }

    /// Canonical expression string over generators g, t, p. Round-trips
    /// through the expression parser.
    pub fn to_expr_string(&self) -> String {
        let e = self.field.ram_degree() as i64;
        match &self.repr {
            Repr::Zero { .. } => "0".to_string(),
            Repr::NonZero { vnum, unit, .. } => {
                let a = vnum.div_euclid(e);
                let b = vnum.rem_euclid(e);
                let mut terms: Vec<String> = Vec::new();
                for j in 0..self.field.ram_degree() {
                    for i in 0..self.field.unram_degree() {
                        let c = &unit[self.field.idx(i, j)];
                        if c.is_zero() {
                            continue;
                        }
                        let mut parts: Vec<String> = Vec::new();
                        if !c.is_one() || (i == 0 && j == 0) {
                            parts.push(c.to_string());
                        }
                        if i == 1 {
                            parts.push("g".into());
                        } else if i > 1 {
                            parts.push(format!("g^{}", i));
                        }
                        if j == 1 {
                            parts.push("t".into());
                        } else if j > 1 {
                            parts.push(format!("t^{}", j));
                        }
                        terms.push(parts.join("*"));
                    }
                }
                let unit_str = terms.join(" + ");
                let mut factors: Vec<String> = Vec::new();
                if a == 1 {
                    factors.push("p".into());
                } else if a != 0 {
                    factors.push(format!("p^{}", a));
                }
                if b == 1 {
                    factors.push("t".into());
                } else if b != 0 {
                    factors.push(format!("t^{}", b));
                }
                if factors.is_empty() {
                    unit_str
                } else if terms.len() == 1 && unit_str == "1" {
                    factors.join("*")
                } else if terms.len() == 1 && !unit_str.contains('+') {
                    format!("{}*{}", factors.join("*"), unit_str)
                } else {
                    format!("{}*({})", factors.join("*"), unit_str)
                }
            }
        }
    }
}

impl fmt::Display for PadicElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(p: u64) -> Field {
        make_field(p, 1, None, 32).unwrap()
    }

    fn qp2(p: u64) -> Field {
        make_field(p, 2, None, 32).unwrap()
    }

    fn qp_sqrt(p: u64) -> Field {
        make_field(p, 1, Some(vec![BigInt::from(-(p as i64)), BigInt::zero(), BigInt::one()]), 32)
            .unwrap()
    }

    #[test]
    fn make_field_validates() {
        assert_eq!(make_field(4, 1, None, 32).unwrap_err(), Error::NonPrime(4));
        let bad = make_field(
            5,
            1,
            Some(vec![BigInt::from(3), BigInt::zero(), BigInt::one()]),
            32,
        );
        assert!(matches!(bad.unwrap_err(), Error::NotEisenstein(_)));
        // idempotent canonical specs
        let a = make_field(5, 2, None, 32).unwrap();
        let b = make_field(5, 2, None, 32).unwrap();
        assert!(a.same_field(&b));
        assert_eq!(a.defining_poly(), b.defining_poly());
    }

    #[test]
    fn valuations() {
        let f = qp(5);
        let p = PadicElement::from_i64(&f, 5);
        assert_eq!(p.valuation().unwrap(), Ratio::new(1, 1));
        assert_eq!(PadicElement::one(&f).valuation().unwrap(), Ratio::new(0, 1));
        let z = PadicElement::zero(&f);
        assert_eq!(z.valuation().unwrap_err(), Error::PrecisionZero);
        // v(sqrt p) = 1/2, checked by squaring
        let r = qp_sqrt(5);
        let t = PadicElement::uniformizer(&r);
        assert_eq!(t.valuation().unwrap(), Ratio::new(1, 2));
        let t2 = t.mul(&t);
        let p5 = PadicElement::from_i64(&r, 5);
        assert!(t2.agrees_to(&p5, 30));
        assert_eq!(t2.valuation().unwrap(), Ratio::new(1, 1));
    }

    #[test]
    fn valuation_additive_under_multiplication() {
        let f = qp2(3);
        let g = PadicElement::generator(&f);
        let x = g.add(&PadicElement::from_i64(&f, 12));
        let y = g.mul(&g).add(&PadicElement::from_i64(&f, 9));
        let v = |z: &PadicElement| z.valuation().unwrap();
        assert_eq!(v(&x.mul(&y)), v(&x) + v(&y));
    }

    #[test]
    fn inverse_and_geometric_series() {
        let f = qp(5);
        let one = PadicElement::one(&f);
        let p = PadicElement::from_i64(&f, 5);
        let x = one.sub(&p); // 1 - p
        let inv = x.inverse().unwrap();
        assert!(inv.mul(&x).agrees_to(&one, 31));
    }

    #[test]
    fn sigma_order_and_residue_frobenius() {
        let f = qp2(5);
        let g = PadicElement::generator(&f);
        let sg = g.sigma(1);
        // reduction mod p equals the p-power map
        let g5 = g.pow(5).unwrap();
        let diff = sg.sub(&g5);
        assert!(diff.vnum_t().map_or(true, |v| v >= 1), "sigma(g) != g^p mod p");
        // order 2
        assert!(sg.sigma(1).agrees_to(&g, 31));
        // sigma on Q_p is the identity
        let b = qp(5);
        let x = PadicElement::from_i64(&b, 7);
        assert!(x.sigma(1).agrees_to(&x, 31));
    }

    #[test]
    fn sigma_fixes_uniformizer() {
        let r = qp_sqrt(3);
        let t = PadicElement::uniformizer(&r);
        assert!(t.sigma(1).agrees_to(&t, 31));
    }

    #[test]
    fn cancellation_reports_loss() {
        let f = qp(5);
        let a = PadicElement::from_i64(&f, 1 + 125);
        let b = PadicElement::one(&f);
        let d = a.sub(&b); // = 5^3
        assert_eq!(d.valuation().unwrap(), Ratio::new(3, 1));
        assert!(d.rel_prec_digits().unwrap() <= 32 - 3);
    }

    #[test]
    fn t_squared_minus_p_is_zero_flag() {
        let r = qp_sqrt(5);
        let t = PadicElement::uniformizer(&r);
        let p = PadicElement::from_i64(&r, 5);
        let z = t.mul(&t).sub(&p);
        assert!(z.is_zero_at_precision());
    }

    #[test]
    fn expr_string_shapes() {
        let f = qp2(5);
        let g = PadicElement::generator(&f);
        let x = PadicElement::from_i64(&f, 3).add(&g.shift_p(2));
        let s = x.to_expr_string();
        assert!(s.contains('g'), "{}", s);
    }
}
