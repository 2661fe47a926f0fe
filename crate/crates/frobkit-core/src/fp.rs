//! Residue-level arithmetic: F_p, F_p[x], and extensions F_{p^m} = F_p[g]/(f),
//! with deterministic irreducible-polynomial selection and root finding.
//!
//! Everything here is mod-p bookkeeping feeding the Hensel lifts in `padic`;
//! coefficients fit in u64 (p is a machine-word prime).

/// Deterministic Miller-Rabin, exact for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    // These bases are exact for all n < 2^64.
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

/// Polynomials over F_p, dense, trailing zeros trimmed. `c[i]` multiplies x^i.
pub type FpPoly = Vec<u64>;

pub fn trim(mut f: Vec<u64>) -> FpPoly {
    while f.last() == Some(&0) {
        f.pop();
    }
    f
}

pub fn deg(f: &[u64]) -> Option<usize> {
    if f.is_empty() {
        None
    } else {
        Some(f.len() - 1)
    }
}

pub fn add(f: &[u64], g: &[u64], p: u64) -> FpPoly {
    let mut out = vec![0u64; f.len().max(g.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let a = f.get(i).copied().unwrap_or(0);
        let b = g.get(i).copied().unwrap_or(0);
        *o = (a + b) % p;
    }
    trim(out)
}

pub fn sub(f: &[u64], g: &[u64], p: u64) -> FpPoly {
    let mut out = vec![0u64; f.len().max(g.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let a = f.get(i).copied().unwrap_or(0);
        let b = g.get(i).copied().unwrap_or(0);
        *o = (a + p - b) % p;
    }
    trim(out)
}

pub fn mul(f: &[u64], g: &[u64], p: u64) -> FpPoly {
    if f.is_empty() || g.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; f.len() + g.len() - 1];
    for (i, &a) in f.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for (j, &b) in g.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(a, b, p)) % p;
        }
    }
    trim(out)
}

/// Division with remainder by a nonzero divisor.
pub fn div_rem(f: &[u64], g: &[u64], p: u64) -> (FpPoly, FpPoly) {
    let dg = deg(g).expect("division by zero polynomial");
    let lead_inv = inv_mod(g[dg], p);
    let mut r = f.to_vec();
    let mut q = vec![0u64; f.len().saturating_sub(dg)];
    while let Some(dr) = deg(&r) {
        if dr < dg {
            break;
        }
        let c = mul_mod(r[dr], lead_inv, p);
        q[dr - dg] = c;
        for i in 0..=dg {
            let t = mul_mod(c, g[i], p);
            r[i + dr - dg] = (r[i + dr - dg] + p - t) % p;
        }
        r = trim(r);
    }
    (trim(q), r)
}

pub fn rem(f: &[u64], g: &[u64], p: u64) -> FpPoly {
    div_rem(f, g, p).1
}

pub fn gcd(f: &[u64], g: &[u64], p: u64) -> FpPoly {
    let (mut a, mut b) = (trim(f.to_vec()), trim(g.to_vec()));
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    // monic normalization
    if let Some(d) = deg(&a) {
        let inv = inv_mod(a[d], p);
        for c in a.iter_mut() {
            *c = mul_mod(*c, inv, p);
        }
    }
    a
}

pub fn pow_mod_poly(base: &[u64], mut e: u128, modulus: &[u64], p: u64) -> FpPoly {
    let mut acc = vec![1u64];
    let mut b = rem(base, modulus, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(&mul(&acc, &b, p), modulus, p);
        }
        b = rem(&mul(&b, &b, p), modulus, p);
        e >>= 1;
    }
    acc
}

/// x^(p^k) mod f, by repeated p-power maps.
fn frob_power(modulus: &[u64], p: u64, k: usize) -> FpPoly {
    let mut x = vec![0u64, 1];
    for _ in 0..k {
        x = pow_mod_poly(&x, p as u128, modulus, p);
    }
    x
}

/// Irreducibility over F_p: x^(p^m) = x mod f and gcd(x^(p^(m/q)) - x, f) = 1
/// for every prime q | m.
pub fn is_irreducible(f: &[u64], p: u64) -> bool {
    let m = match deg(f) {
        Some(0) | None => return false,
        Some(1) => return true,
        Some(m) => m,
    };
    let x = vec![0u64, 1];
    let xpm = frob_power(f, p, m);
    if sub(&xpm, &x, p) != Vec::<u64>::new() {
        return false;
    }
    let mut m_rest = m;
    let mut q = 2;
    while q * q <= m_rest {
        if m_rest % q == 0 {
            let g = gcd(&sub(&frob_power(f, p, m / q), &x, p), f, p);
            if deg(&g) != Some(0) {
                return false;
            }
            while m_rest % q == 0 {
                m_rest /= q;
            }
        }
        q += 1;
    }
    if m_rest > 1 {
        let g = gcd(&sub(&frob_power(f, p, m / m_rest), &x, p), f, p);
        if deg(&g) != Some(0) {
            return false;
        }
    }
    true
}

/// The deterministic defining polynomial of F_{p^m}: the monic irreducible of
/// degree m whose coefficient tuple (c_0, ..., c_{m-1}) encodes the least
/// integer sum c_i p^i. Reproducible without external tables.
pub fn least_irreducible(p: u64, m: usize) -> FpPoly {
    assert!(m >= 1);
    if m == 1 {
        return vec![0, 1]; // x itself: Z_p needs no extension, generator is 0
    }
    let mut code = 0u128;
    loop {
        let mut f = Vec::with_capacity(m + 1);
        let mut c = code;
        for _ in 0..m {
            f.push((c % p as u128) as u64);
            c /= p as u128;
        }
        if c == 0 {
            f.push(1);
            if is_irreducible(&f, p) {
                return f;
            }
        }
        code += 1;
    }
}

/// Elements of F_q = F_p[g]/(ctx.modulus) as residue polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct FqCtx {
    pub p: u64,
    pub modulus: FpPoly,
}

impl FqCtx {
    pub fn degree(&self) -> usize {
        deg(&self.modulus).unwrap()
    }

    pub fn reduce(&self, f: &[u64]) -> FpPoly {
        rem(f, &self.modulus, self.p)
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> FpPoly {
        self.reduce(&mul(a, b, self.p))
    }

    pub fn inv(&self, a: &[u64]) -> Option<FpPoly> {
        // extended Euclid in F_p[x]
        let (mut r0, mut r1) = (self.modulus.clone(), trim(a.to_vec()));
        let (mut s0, mut s1): (FpPoly, FpPoly) = (vec![], vec![1]);
        if r1.is_empty() {
            return None;
        }
        while !r1.is_empty() {
            let (q, r) = div_rem(&r0, &r1, self.p);
            let s = sub(&s0, &mul(&q, &s1, self.p), self.p);
            r0 = r1;
            r1 = r;
            s0 = s1;
            s1 = s;
        }
        if deg(&r0) != Some(0) {
            return None;
        }
        let c = inv_mod(r0[0], self.p);
        Some(self.reduce(&s0.iter().map(|&x| mul_mod(x, c, self.p)).collect::<Vec<u64>>()))
    }

    pub fn pow(&self, a: &[u64], e: u128) -> FpPoly {
        pow_mod_poly(a, e, &self.modulus, self.p)
    }

    /// q = p^degree as u128 (panics on overflow; degrees here stay small).
    pub fn q(&self) -> u128 {
        let mut q: u128 = 1;
        for _ in 0..self.degree() {
            q = q.checked_mul(self.p as u128).expect("residue field too large");
        }
        q
    }
}

/// Polynomials over F_q, dense; entry i is the F_q coefficient of x^i.
pub type FqPoly = Vec<FpPoly>;

fn fq_trim(mut f: Vec<FpPoly>) -> FqPoly {
    while f.last().map(|c| c.is_empty()) == Some(true) {
        f.pop();
    }
    f
}

fn fq_deg(f: &[FpPoly]) -> Option<usize> {
    if f.is_empty() {
        None
    } else {
        Some(f.len() - 1)
    }
}

fn fq_mul(ctx: &FqCtx, f: &[FpPoly], g: &[FpPoly]) -> FqPoly {
    if f.is_empty() || g.is_empty() {
        return vec![];
    }
    let mut out = vec![FpPoly::new(); f.len() + g.len() - 1];
    for (i, a) in f.iter().enumerate() {
        if a.is_empty() {
            continue;
        }
        for (j, b) in g.iter().enumerate() {
            let t = ctx.mul(a, b);
            out[i + j] = add(&out[i + j], &t, ctx.p);
        }
    }
    fq_trim(out)
}

fn fq_sub(ctx: &FqCtx, f: &[FpPoly], g: &[FpPoly]) -> FqPoly {
    let mut out = vec![FpPoly::new(); f.len().max(g.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let a = f.get(i).cloned().unwrap_or_default();
        let b = g.get(i).cloned().unwrap_or_default();
        *o = sub(&a, &b, ctx.p);
    }
    fq_trim(out)
}

fn fq_div_rem(ctx: &FqCtx, f: &[FpPoly], g: &[FpPoly]) -> (FqPoly, FqPoly) {
    let dg = fq_deg(g).expect("division by zero polynomial");
    let lead_inv = ctx.inv(&g[dg]).expect("leading coefficient not invertible");
    let mut r = f.to_vec();
    let mut q = vec![FpPoly::new(); f.len().saturating_sub(dg)];
    while let Some(dr) = fq_deg(&r) {
        if dr < dg {
            break;
        }
        let c = ctx.mul(&r[dr], &lead_inv);
        q[dr - dg] = c.clone();
        for i in 0..=dg {
            let t = ctx.mul(&c, &g[i]);
            r[i + dr - dg] = sub(&r[i + dr - dg], &t, ctx.p);
        }
        r = fq_trim(r);
    }
    (fq_trim(q), r)
}

fn fq_gcd(ctx: &FqCtx, f: &[FpPoly], g: &[FpPoly]) -> FqPoly {
    let (mut a, mut b) = (fq_trim(f.to_vec()), fq_trim(g.to_vec()));
    while !b.is_empty() {
        let r = fq_div_rem(ctx, &a, &b).1;
        a = b;
        b = r;
    }
    if let Some(d) = fq_deg(&a) {
        let inv = ctx.inv(&a[d]).unwrap();
        for c in a.iter_mut() {
            *c = ctx.mul(c, &inv);
        }
    }
    a
}

fn fq_pow_mod(ctx: &FqCtx, base: &[FpPoly], mut e: u128, modulus: &[FpPoly]) -> FqPoly {
    let mut acc: FqPoly = vec![vec![1]];
    let mut b = fq_div_rem(ctx, base, modulus).1;
    while e > 0 {
        if e & 1 == 1 {
            acc = fq_div_rem(ctx, &fq_mul(ctx, &acc, &b), modulus).1;
        }
        b = fq_div_rem(ctx, &fq_mul(ctx, &b, &b), modulus).1;
        e >>= 1;
    }
    acc
}

#[cfg(test)]
fn fq_eval(ctx: &FqCtx, f: &[FpPoly], x: &[u64]) -> FpPoly {
    let mut acc = FpPoly::new();
    for c in f.iter().rev() {
        acc = add(&ctx.mul(&acc, x), c, ctx.p);
    }
    acc
}

/// All roots in F_q of a polynomial with F_q coefficients, deterministic order
/// (sorted by coefficient encoding). Splitting uses gcds with (x+c)^((q-1)/2)-1
/// for odd p and trace polynomials for p = 2, over a fixed candidate sweep.
pub fn fq_roots(ctx: &FqCtx, f: &[FpPoly]) -> Vec<FpPoly> {
    let mut f = fq_trim(f.to_vec());
    if fq_deg(&f).is_none() {
        return vec![];
    }
    // keep only the part that splits over F_q
    let q = ctx.q();
    let x: FqPoly = vec![vec![], vec![1]];
    let xq = fq_pow_mod(ctx, &x, q, &f);
    let lin = fq_gcd(ctx, &fq_sub(ctx, &xq, &x), &f);
    f = lin;
    let mut roots = Vec::new();
    let mut stack = vec![f];
    while let Some(cur) = stack.pop() {
        match fq_deg(&cur) {
            None | Some(0) => continue,
            Some(1) => {
                // monic: root = -c0
                let c0 = cur[0].clone();
                let neg = sub(&[], &c0, ctx.p);
                roots.push(ctx.reduce(&neg));
                continue;
            }
            Some(_) => {}
        }
        let mut split = None;
        'search: for code in 0u128..10_000 {
            // candidate c in F_q enumerated by base-p encoding
            let mut c = Vec::new();
            let mut v = code;
            while v > 0 {
                c.push((v % ctx.p as u128) as u64);
                v /= ctx.p as u128;
            }
            let c = trim(c);
            let h = if ctx.p == 2 {
                // trace map T(c x) = sum (c x)^(2^i); multiplicative scaling
                // separates conjugate roots, additive shifts do not
                if c.is_empty() {
                    continue;
                }
                let scaled: FqPoly = vec![vec![], c.clone()]; // c * x
                let mut t: FqPoly = vec![];
                let mut term = fq_div_rem(ctx, &scaled, &cur).1;
                let bits = 128 - q.leading_zeros() - 1; // log2 q
                for _ in 0..bits {
                    t = fq_sub(ctx, &t, &fq_mul(ctx, &term, &[vec![1]]));
                    term = fq_div_rem(ctx, &fq_mul(ctx, &term, &term), &cur).1;
                }
                t
            } else {
                let shifted: FqPoly = vec![c.clone(), vec![1]]; // x + c
                let e = (q - 1) / 2;
                let pw = fq_pow_mod(ctx, &shifted, e, &cur);
                fq_sub(ctx, &pw, &[vec![1]])
            };
            let g = fq_gcd(ctx, &h, &cur);
            if let Some(dg) = fq_deg(&g) {
                if dg > 0 && dg < fq_deg(&cur).unwrap() {
                    let other = fq_div_rem(ctx, &cur, &g).0;
                    split = Some((g, other));
                    break 'search;
                }
            }
        }
        let (g, h) = split.expect("splitting sweep exhausted");
        stack.push(g);
        stack.push(h);
    }
    roots.sort_by_key(|r| {
        let mut code = 0u128;
        for &c in r.iter().rev() {
            code = code * ctx.p as u128 + c as u128;
        }
        code
    });
    roots.dedup();
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_irreducibles_match_hand_checks() {
        assert_eq!(least_irreducible(2, 2), vec![1, 1, 1]); // x^2+x+1
        assert_eq!(least_irreducible(3, 2), vec![1, 0, 1]); // x^2+1
        assert_eq!(least_irreducible(5, 2), vec![2, 0, 1]); // x^2+2
        assert!(is_irreducible(&least_irreducible(5, 3), 5));
        assert!(is_irreducible(&least_irreducible(2, 6), 2));
    }

    #[test]
    fn primality() {
        assert!(is_prime(2) && is_prime(3) && is_prime(5) && is_prime(1_000_003));
        assert!(!is_prime(1) && !is_prime(4) && !is_prime(561));
    }

    #[test]
    fn roots_of_split_polynomial() {
        // over F_25 = F_5[g]/(g^2+2): x^2 + 2 has roots ±g
        let ctx = FqCtx { p: 5, modulus: least_irreducible(5, 2) };
        let f: FqPoly = vec![vec![2], vec![], vec![1]];
        let roots = fq_roots(&ctx, &f);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            let v = fq_eval(&ctx, &f, r);
            assert!(v.is_empty(), "not a root: {:?}", r);
        }
    }

    #[test]
    fn roots_in_extension_of_subfield_polynomial() {
        // roots of the degree-2 least irreducible inside F_5^4
        let ctx = FqCtx { p: 5, modulus: least_irreducible(5, 4) };
        let f2 = least_irreducible(5, 2);
        let f: FqPoly = f2.iter().map(|&c| if c == 0 { vec![] } else { vec![c] }).collect();
        let roots = fq_roots(&ctx, &f);
        assert_eq!(roots.len(), 2);
    }

    #[test]
    fn roots_char_two() {
        let ctx = FqCtx { p: 2, modulus: least_irreducible(2, 4) };
        // x^2 + x + 1 splits in F_16? deg 2 | 4, yes: two roots
        let f: FqPoly = vec![vec![1], vec![1], vec![1]];
        let roots = fq_roots(&ctx, &f);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert!(fq_eval(&ctx, &f, r).is_empty());
        }
    }
}
