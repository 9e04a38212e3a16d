//! Truncated bivariate power series in `z` and `conj(z)` with Wirtinger calculus.
//!
//! A [`BiJet`] stores the Taylor data of a function at the origin as a
//! triangular table `c[j][k]` for `j + k <= order`, representing
//! `sum c_jk z^j zbar^k`. All coefficient-level operations of the library
//! (orders, divisions, ratio extensions, composition) run on these tables;
//! nothing here ever touches a grid.

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Absolute tolerance deciding "this coefficient is zero" in order scans and
/// divisibility checks. Jets fitted from grid data carry FFT noise near this
/// level; exact integer inputs keep exact zeros.
pub const TAU_JET: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("cannot differentiate a jet of order 0")]
    ZeroOrderJet,
    #[error("membership check requires k <= order, got k = {k}, order = {order}")]
    OrderTooLow { k: usize, order: usize },
    #[error("jet is not divisible by z^{power}; offending slots {slots:?}")]
    NotDivisible {
        power: usize,
        slots: Vec<(usize, usize)>,
    },
    #[error("conjugate-ratio extension does not exist: derivative d^{j}+{k}/dzbar^{k}dz^{j} at 0 is nonzero ({value})")]
    NonExtendable {
        j: usize,
        k: usize,
        value: Complex64,
    },
    #[error("jet has (near-)zero constant term; reciprocal/root undefined")]
    NotUnit,
    #[error("composition argument must vanish at 0 (constant term {value})")]
    NonVanishingArgument { value: Complex64 },
    #[error("not a diffeomorphism germ: linear part at 0 vanishes")]
    NotDiffeoGerm,
}

/// z-order of a jet: the smallest pure-`z` Taylor degree with a nonzero
/// coefficient at the origin. On truncated data the value `TruncationLimited`
/// means every stored pure-`z` coefficient vanished; it is ordered above all
/// finite values it bounds and must never be silently treated as infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZOrder {
    Finite(usize),
    /// All pure-z derivatives vanish up to the truncation order; the payload
    /// is `order + 1`, a lower bound for the true z-order.
    TruncationLimited(usize),
}

impl ZOrder {
    pub fn is_finite(&self) -> bool {
        matches!(self, ZOrder::Finite(_))
    }

    /// Lower bound usable in inequalities (the finite value, or the bound).
    pub fn lower_bound(&self) -> usize {
        match *self {
            ZOrder::Finite(v) => v,
            ZOrder::TruncationLimited(b) => b,
        }
    }

    pub fn min(self, other: ZOrder) -> ZOrder {
        match (self, other) {
            (ZOrder::Finite(a), ZOrder::Finite(b)) => ZOrder::Finite(a.min(b)),
            (ZOrder::Finite(a), ZOrder::TruncationLimited(_)) => ZOrder::Finite(a),
            (ZOrder::TruncationLimited(_), ZOrder::Finite(b)) => ZOrder::Finite(b),
            (ZOrder::TruncationLimited(a), ZOrder::TruncationLimited(b)) => {
                ZOrder::TruncationLimited(a.min(b))
            }
        }
    }

    /// Sum with the convention `finite + limited = limited`.
    pub fn add(self, other: ZOrder) -> ZOrder {
        match (self, other) {
            (ZOrder::Finite(a), ZOrder::Finite(b)) => ZOrder::Finite(a + b),
            (ZOrder::Finite(a), ZOrder::TruncationLimited(b))
            | (ZOrder::TruncationLimited(b), ZOrder::Finite(a)) => {
                ZOrder::TruncationLimited(a + b)
            }
            (ZOrder::TruncationLimited(a), ZOrder::TruncationLimited(b)) => {
                ZOrder::TruncationLimited(a + b)
            }
        }
    }
}

impl std::fmt::Display for ZOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ZOrder::Finite(v) => write!(f, "{v}"),
            ZOrder::TruncationLimited(b) => write!(f, ">={b}"),
        }
    }
}

impl PartialOrd for ZOrder {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use ZOrder::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            // A truncation-limited order dominates every finite value below
            // its bound; against larger finite values it is incomparable.
            (TruncationLimited(b), Finite(a)) => {
                if a < b {
                    Some(std::cmp::Ordering::Greater)
                } else {
                    None
                }
            }
            (Finite(a), TruncationLimited(b)) => {
                if a < b {
                    Some(std::cmp::Ordering::Less)
                } else {
                    None
                }
            }
            (TruncationLimited(_), TruncationLimited(_)) => None,
        }
    }
}

fn tri_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

#[inline]
fn tri_idx(j: usize, k: usize) -> usize {
    let d = j + k;
    d * (d + 1) / 2 + j
}

/// Truncated power series `sum_{j+k<=order} c_jk z^j zbar^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiJet {
    order: usize,
    coeffs: Vec<Complex64>,
    real_flagged: bool,
}

impl BiJet {
    pub fn zero(order: usize) -> Self {
        BiJet {
            order,
            coeffs: vec![Complex64::new(0.0, 0.0); tri_len(order)],
            real_flagged: false,
        }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut jet = BiJet::zero(order);
        jet.coeffs[0] = c;
        jet.real_flagged = c.im == 0.0;
        jet
    }

    /// The monomial `c z^j zbar^k`.
    pub fn monomial(j: usize, k: usize, c: Complex64, order: usize) -> Self {
        assert!(j + k <= order, "monomial degree exceeds order");
        let mut jet = BiJet::zero(order);
        jet.coeffs[tri_idx(j, k)] = c;
        jet
    }

    /// `z` as a jet.
    pub fn var_z(order: usize) -> Self {
        Self::monomial(1, 0, Complex64::new(1.0, 0.0), order)
    }

    /// `zbar` as a jet.
    pub fn var_zbar(order: usize) -> Self {
        Self::monomial(0, 1, Complex64::new(1.0, 0.0), order)
    }

    pub fn from_entries(order: usize, entries: &[(usize, usize, Complex64)]) -> Self {
        let mut jet = BiJet::zero(order);
        for &(j, k, c) in entries {
            assert!(j + k <= order);
            jet.coeffs[tri_idx(j, k)] = c;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn coeff(&self, j: usize, k: usize) -> Complex64 {
        if j + k <= self.order {
            self.coeffs[tri_idx(j, k)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn set_coeff(&mut self, j: usize, k: usize, c: Complex64) {
        assert!(j + k <= self.order);
        self.coeffs[tri_idx(j, k)] = c;
    }

    pub fn is_real_flagged(&self) -> bool {
        self.real_flagged
    }

    pub fn set_real_flagged(&mut self, flag: bool) {
        self.real_flagged = flag;
    }

    /// Checks the Hermitian symmetry `c_jk = conj(c_kj)` that characterizes
    /// real-valued jets, to tolerance `tol`.
    pub fn is_real_symmetric(&self, tol: f64) -> bool {
        for j in 0..=self.order {
            for k in 0..=(self.order - j) {
                if (self.coeff(j, k) - self.coeff(k, j).conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Iterates stored entries `(j, k, c)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..=self.order).flat_map(move |d| {
            (0..=d).map(move |j| {
                let k = d - j;
                (j, k, self.coeffs[tri_idx(j, k)])
            })
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude among entries of total degree `d`.
    pub fn max_abs_degree(&self, d: usize) -> f64 {
        (0..=d)
            .map(|j| self.coeff(j, d - j).norm())
            .fold(0.0, f64::max)
    }

    /// Re-truncates (or zero-pads) to `order`. Padding is only meaningful for
    /// jets known to be exact polynomials.
    pub fn resized(&self, order: usize) -> Self {
        let mut out = BiJet::zero(order);
        out.real_flagged = self.real_flagged;
        for (j, k, c) in self.entries() {
            if j + k <= order {
                out.coeffs[tri_idx(j, k)] = c;
            }
        }
        out
    }

    pub fn add(&self, rhs: &BiJet) -> BiJet {
        let order = self.order.min(rhs.order);
        let mut out = BiJet::zero(order);
        out.real_flagged = self.real_flagged && rhs.real_flagged;
        for (j, k, _) in out.clone().entries() {
            out.coeffs[tri_idx(j, k)] = self.coeff(j, k) + rhs.coeff(j, k);
        }
        out
    }

    pub fn sub(&self, rhs: &BiJet) -> BiJet {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, a: Complex64) -> BiJet {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= a;
        }
        out.real_flagged = self.real_flagged && a.im == 0.0;
        out
    }

    /// Cauchy product truncated to the minimum operand order.
    pub fn mul(&self, rhs: &BiJet) -> BiJet {
        let order = self.order.min(rhs.order);
        let mut out = BiJet::zero(order);
        out.real_flagged = self.real_flagged && rhs.real_flagged;
        for (j1, k1, c1) in self.entries() {
            if c1.norm_sqr() == 0.0 || j1 + k1 > order {
                continue;
            }
            for (j2, k2, c2) in rhs.entries() {
                let (j, k) = (j1 + j2, k1 + k2);
                if j + k > order {
                    continue;
                }
                if c2.norm_sqr() == 0.0 {
                    continue;
                }
                out.coeffs[tri_idx(j, k)] += c1 * c2;
            }
        }
        out
    }

    /// Exact multiplication by the monomial `z^j zbar^k`; raises the order so
    /// no content is lost.
    pub fn mul_monomial(&self, j: usize, k: usize) -> BiJet {
        let order = self.order + j + k;
        let mut out = BiJet::zero(order);
        out.real_flagged = self.real_flagged && j == k;
        for (j1, k1, c) in self.entries() {
            out.coeffs[tri_idx(j1 + j, k1 + k)] = c;
        }
        out
    }

    /// Wirtinger derivative in `z`: `c_jk -> j c_jk` at slot `(j-1, k)`.
    pub fn dz(&self) -> Result<BiJet, JetError> {
        if self.order == 0 {
            return Err(JetError::ZeroOrderJet);
        }
        let mut out = BiJet::zero(self.order - 1);
        for (j, k, c) in self.entries() {
            if j >= 1 && j - 1 + k <= out.order {
                out.coeffs[tri_idx(j - 1, k)] = c * (j as f64);
            }
        }
        Ok(out)
    }

    /// Wirtinger derivative in `zbar`.
    pub fn dzbar(&self) -> Result<BiJet, JetError> {
        if self.order == 0 {
            return Err(JetError::ZeroOrderJet);
        }
        let mut out = BiJet::zero(self.order - 1);
        for (j, k, c) in self.entries() {
            if k >= 1 && j + k - 1 <= out.order {
                out.coeffs[tri_idx(j, k - 1)] = c * (k as f64);
            }
        }
        Ok(out)
    }

    /// Iterated mixed derivative `d^{a+b} / dzbar^b dz^a`.
    pub fn deriv(&self, a: usize, b: usize) -> Result<BiJet, JetError> {
        let mut out = self.clone();
        for _ in 0..a {
            out = out.dz()?;
        }
        for _ in 0..b {
            out = out.dzbar()?;
        }
        Ok(out)
    }

    /// Value of `d^{j+k} f / dzbar^k dz^j` at the origin (`= j! k! c_jk`).
    pub fn deriv_at_zero(&self, j: usize, k: usize) -> Complex64 {
        self.coeff(j, k) * factorial(j) * factorial(k)
    }

    /// Complex conjugate jet: `c_jk -> conj(c_kj)`.
    pub fn conj(&self) -> BiJet {
        let mut out = BiJet::zero(self.order);
        out.real_flagged = self.real_flagged;
        for (j, k, c) in self.entries() {
            out.coeffs[tri_idx(k, j)] = c.conj();
        }
        out
    }

    /// Real part `(f + conj f)/2`, flagged real.
    pub fn re(&self) -> BiJet {
        let mut out = self.add(&self.conj()).scale(Complex64::new(0.5, 0.0));
        out.real_flagged = true;
        out
    }

    /// Imaginary part `(f - conj f)/(2i)`, flagged real.
    pub fn im(&self) -> BiJet {
        let mut out = self
            .sub(&self.conj())
            .scale(Complex64::new(0.0, -0.5));
        out.real_flagged = true;
        out
    }

    /// Evaluates the polynomial at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let zb = z.conj();
        let mut zpow = vec![Complex64::new(1.0, 0.0); self.order + 1];
        let mut zbpow = zpow.clone();
        for i in 1..=self.order {
            zpow[i] = zpow[i - 1] * z;
            zbpow[i] = zbpow[i - 1] * zb;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, k, c) in self.entries() {
            if c.norm_sqr() != 0.0 {
                acc += c * zpow[j] * zbpow[k];
            }
        }
        acc
    }

    /// Smallest `j` with `c_j0` nonzero (tolerance [`TAU_JET`]).
    pub fn ord_z(&self) -> ZOrder {
        for j in 0..=self.order {
            if self.coeff(j, 0).norm() > TAU_JET {
                return ZOrder::Finite(j);
            }
        }
        ZOrder::TruncationLimited(self.order + 1)
    }

    /// Mirror of [`BiJet::ord_z`] in `zbar`: smallest `k` with `c_0k` nonzero.
    pub fn ord_zbar(&self) -> ZOrder {
        for k in 0..=self.order {
            if self.coeff(0, k).norm() > TAU_JET {
                return ZOrder::Finite(k);
            }
        }
        ZOrder::TruncationLimited(self.order + 1)
    }

    /// Membership in the vanishing class requiring, for each `h' <= s`,
    /// `d^{h+h'} f / dzbar^h dz^{h'} (0) = 0` for all `h <= k - h'`.
    pub fn in_class_c(&self, s: usize, k: usize) -> Result<bool, JetError> {
        if k > self.order {
            return Err(JetError::OrderTooLow {
                k,
                order: self.order,
            });
        }
        for hp in 0..=s.min(k) {
            for h in 0..=(k - hp) {
                if self.coeff(hp, h).norm() > TAU_JET {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    fn offending_slots(&self, p: usize) -> Vec<(usize, usize)> {
        let mut slots = Vec::new();
        for (j, k, c) in self.entries() {
            if j < p && c.norm() > TAU_JET {
                slots.push((j, k));
            }
        }
        slots.sort_by_key(|&(j, k)| (j + k, j));
        slots
    }

    /// Exact division by `z^p`. Requires every stored coefficient with
    /// z-power below `p` to vanish; the quotient has order `order - p` and
    /// satisfies `p! * q(0) = d^p f / dz^p (0)`.
    pub fn divide_z_pow(&self, p: usize) -> Result<BiJet, JetError> {
        if p == 0 {
            return Ok(self.clone());
        }
        if p > self.order {
            return Err(JetError::NotDivisible {
                power: p,
                slots: self.offending_slots(p),
            });
        }
        let slots = self.offending_slots(p);
        if !slots.is_empty() {
            return Err(JetError::NotDivisible { power: p, slots });
        }
        let mut out = BiJet::zero(self.order - p);
        for (j, k, c) in self.entries() {
            if j >= p {
                out.coeffs[tri_idx(j - p, k)] = c;
            }
        }
        Ok(out)
    }

    /// Division by `z^p` for jets that are only divisible up to an
    /// obstruction: returns the shifted divisible part truncated to the
    /// Taylor order through which it is valid, together with the first
    /// obstructing slot. A term `c_jk z^{j-p} zbar^k` with `j < p` is
    /// `o(|z|^m)` exactly for `m < j + k - p`, so the partial quotient is
    /// valid Taylor data through order `min_bad(j + k) - p - 1`.
    pub fn divide_z_pow_partial(&self, p: usize) -> PartialExtension {
        let slots = self.offending_slots(p);
        let full_order = self.order.saturating_sub(p);
        let (valid_order, obstruction) = match slots.first() {
            None => (full_order, None),
            Some(&(j, k)) => {
                let vo = (j + k).saturating_sub(p).saturating_sub(1).min(full_order);
                (
                    vo,
                    Some(Obstruction {
                        slot: (j, k),
                        flat_degree: (j + k).saturating_sub(p),
                        coeff: self.coeff(j, k),
                    }),
                )
            }
        };
        let mut jet = BiJet::zero(valid_order);
        for (j, k, c) in self.entries() {
            if j >= p && j - p + k <= valid_order {
                jet.coeffs[tri_idx(j - p, k)] = c;
            }
        }
        PartialExtension {
            jet,
            valid_order,
            obstruction,
        }
    }

    /// The unique jet equal to `(zbar^s / z^s) e(z)` away from the origin.
    /// Exists on truncated data exactly when every stored coefficient with
    /// z-power below `s` vanishes; then `c_jk` moves to `(j-s, k+s)` and no
    /// order is lost.
    pub fn conj_ratio_extend(&self, s: usize) -> Result<BiJet, JetError> {
        if s == 0 {
            return Ok(self.clone());
        }
        if let Some(&(j, k)) = self.offending_slots(s).first() {
            return Err(JetError::NonExtendable {
                j,
                k,
                value: self.deriv_at_zero(j, k),
            });
        }
        let mut out = BiJet::zero(self.order);
        for (j, k, c) in self.entries() {
            if j >= s {
                out.coeffs[tri_idx(j - s, k + s)] = c;
            }
        }
        Ok(out)
    }

    /// Partial variant of [`BiJet::conj_ratio_extend`]: keeps the extendable
    /// part truncated to its valid Taylor order and reports the first
    /// obstruction. A bad term `c_jk zbar^{k+s} / z^{s-j}` is flat of degree
    /// `j + k`, so the partial extension is valid through `min_bad(j+k) - 1`.
    pub fn conj_ratio_extend_partial(&self, s: usize) -> PartialExtension {
        let slots = self.offending_slots(s);
        let (valid_order, obstruction) = match slots.first() {
            None => (self.order, None),
            Some(&(j, k)) => (
                (j + k).saturating_sub(1).min(self.order),
                Some(Obstruction {
                    slot: (j, k),
                    flat_degree: j + k,
                    coeff: self.coeff(j, k),
                }),
            ),
        };
        let mut jet = BiJet::zero(valid_order);
        for (j, k, c) in self.entries() {
            if j >= s && j - s + k + s <= valid_order {
                jet.coeffs[tri_idx(j - s, k + s)] = c;
            }
        }
        PartialExtension {
            jet,
            valid_order,
            obstruction,
        }
    }

    /// Reciprocal of a unit jet (nonzero constant term), by Newton doubling.
    pub fn inv(&self) -> Result<BiJet, JetError> {
        let c0 = self.coeff(0, 0);
        if c0.norm() <= TAU_JET {
            return Err(JetError::NotUnit);
        }
        let mut v = BiJet::constant(c0.inv(), self.order);
        // v <- v (2 - f v); each step doubles the number of correct orders.
        let two = BiJet::constant(Complex64::new(2.0, 0.0), self.order);
        let mut correct = 1usize;
        while correct <= self.order {
            v = v.mul(&two.sub(&self.mul(&v)));
            correct *= 2;
        }
        Ok(v)
    }

    /// Principal `m`-th root of a unit jet, anchored at the principal root of
    /// the constant term.
    pub fn nth_root(&self, m: usize) -> Result<BiJet, JetError> {
        assert!(m >= 1);
        let c0 = self.coeff(0, 0);
        if c0.norm() <= TAU_JET {
            return Err(JetError::NotUnit);
        }
        let root0 = c0.powf(1.0 / m as f64);
        // f = c0 (1 + w) with w nilpotent; f^{1/m} = root0 exp(log(1+w)/m).
        let w = self
            .scale(c0.inv())
            .sub(&BiJet::constant(Complex64::new(1.0, 0.0), self.order));
        let logw = log_one_plus(&w);
        let exp_arg = logw.scale(Complex64::new(1.0 / m as f64, 0.0));
        Ok(exp_nilpotent(&exp_arg).scale(root0))
    }

    /// Substitutes `z -> g, zbar -> conj(g)`. Requires `g(0) = 0`; the result
    /// is valid through `min(self.order, g.order)`.
    pub fn compose(&self, g: &BiJet) -> Result<BiJet, JetError> {
        if g.coeff(0, 0).norm() > TAU_JET {
            return Err(JetError::NonVanishingArgument {
                value: g.coeff(0, 0),
            });
        }
        let order = self.order.min(g.order);
        let g = g.resized(order);
        let gb = g.conj();
        // Precompute powers g^j, conj(g)^k.
        let one = BiJet::constant(Complex64::new(1.0, 0.0), order);
        let mut gp = vec![one.clone()];
        let mut gbp = vec![one];
        for i in 1..=order {
            gp.push(gp[i - 1].mul(&g));
            gbp.push(gbp[i - 1].mul(&gb));
        }
        let mut acc = BiJet::zero(order);
        for (j, k, c) in self.entries() {
            if j + k > order || c.norm_sqr() == 0.0 {
                continue;
            }
            acc = acc.add(&gp[j].mul(&gbp[k]).scale(c));
        }
        Ok(acc)
    }

    /// Compositional inverse of a germ `e(z) = z*unit + higher order` with
    /// `de/dz(0) = 1` up to scaling: returns `c` with `e(c(w)) = w` through
    /// the jet order. The linear part may be any invertible `a z` (no `zbar`
    /// component).
    pub fn invert_germ(&self) -> Result<BiJet, JetError> {
        let order = self.order;
        if self.coeff(0, 0).norm() > TAU_JET {
            return Err(JetError::NotDiffeoGerm);
        }
        let a = self.coeff(1, 0);
        let ab = self.coeff(0, 1);
        if a.norm() <= TAU_JET || ab.norm() > TAU_JET {
            // Inversion with an antiholomorphic linear part is not needed
            // anywhere in the pipeline; treat it as a degenerate germ.
            return Err(JetError::NotDiffeoGerm);
        }
        // Normalize to linear part w, then iterate G <- id - p(G) where
        // p = e/a - id gains one valuation order per pass.
        let scaled = self.scale(a.inv());
        let id = BiJet::var_z(order);
        let p = scaled.sub(&id);
        let mut g = id.clone();
        for _ in 0..=order {
            g = id.sub(&p.compose(&g)?);
        }
        // e(c(w)) = w  with c(w) = g(w/a).
        let winv = BiJet::var_z(order).scale(a.inv());
        g.compose(&winv)
    }
}

/// Result of a division/extension that may hit an obstruction: the returned
/// jet is valid Taylor data only through `valid_order`.
#[derive(Debug, Clone)]
pub struct PartialExtension {
    pub jet: BiJet,
    pub valid_order: usize,
    pub obstruction: Option<Obstruction>,
}

/// First slot blocking a full extension; `flat_degree` is the vanishing
/// order of the obstructing non-smooth term at the origin.
#[derive(Debug, Clone, Copy)]
pub struct Obstruction {
    pub slot: (usize, usize),
    pub flat_degree: usize,
    pub coeff: Complex64,
}

fn log_one_plus(w: &BiJet) -> BiJet {
    // log(1 + w) for nilpotent w.
    let order = w.order();
    let mut acc = BiJet::zero(order);
    let mut wp = w.clone();
    for i in 1..=order {
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        acc = acc.add(&wp.scale(Complex64::new(sign / i as f64, 0.0)));
        if i < order {
            wp = wp.mul(w);
        }
    }
    acc
}

fn exp_nilpotent(x: &BiJet) -> BiJet {
    let order = x.order();
    let mut acc = BiJet::constant(Complex64::new(1.0, 0.0), order);
    let mut term = BiJet::constant(Complex64::new(1.0, 0.0), order);
    for i in 1..=order {
        term = term.mul(x).scale(Complex64::new(1.0 / i as f64, 0.0));
        acc = acc.add(&term);
    }
    acc
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Minimum z-order over the components of a vector of jets.
pub fn ord_z_vec(components: &[BiJet]) -> ZOrder {
    components
        .iter()
        .map(|c| c.ord_z())
        .reduce(|a, b| a.min(b))
        .expect("nonempty component list")
}

impl Serialize for BiJet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            order: usize,
            coeffs: Vec<(usize, usize, f64, f64)>,
        }
        let coeffs = self
            .entries()
            .filter(|(_, _, c)| c.norm_sqr() != 0.0)
            .map(|(j, k, c)| (j, k, c.re, c.im))
            .collect();
        Repr {
            order: self.order,
            coeffs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BiJet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            order: usize,
            coeffs: Vec<(usize, usize, f64, f64)>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let mut jet = BiJet::zero(repr.order);
        for (j, k, re, im) in repr.coeffs {
            if j + k > repr.order {
                return Err(D::Error::custom(format!(
                    "coefficient ({j},{k}) exceeds order {}",
                    repr.order
                )));
            }
            jet.set_coeff(j, k, Complex64::new(re, im));
        }
        jet.real_flagged = jet.is_real_symmetric(0.0);
        Ok(jet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mul_z_zbar_gives_z_zbar() {
        let z = BiJet::var_z(2);
        let zb = BiJet::var_zbar(2);
        let p = z.mul(&zb);
        assert_eq!(p.coeff(1, 1), c(1.0, 0.0));
        for (j, k, v) in p.entries() {
            if (j, k) != (1, 1) {
                assert_eq!(v, c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn mul_identity() {
        let f = BiJet::from_entries(3, &[(0, 0, c(2.0, 1.0)), (2, 1, c(-1.0, 0.5))]);
        let one = BiJet::constant(c(1.0, 0.0), 3);
        assert_eq!(f.mul(&one), f);
    }

    #[test]
    fn one_plus_z_times_one_minus_z_truncated() {
        let one = BiJet::constant(c(1.0, 0.0), 2);
        let z = BiJet::var_z(2);
        let p = one.add(&z).mul(&one.sub(&z));
        assert_eq!(p.coeff(0, 0), c(1.0, 0.0));
        assert_eq!(p.coeff(1, 0), c(0.0, 0.0));
        assert_eq!(p.coeff(2, 0), c(-1.0, 0.0));
    }

    #[test]
    fn dz_power_rule() {
        // d/dz z^{s+1} = (s+1) z^s for s = 2.
        let f = BiJet::monomial(3, 0, c(1.0, 0.0), 4);
        let g = f.dz().unwrap();
        assert_eq!(g.coeff(2, 0), c(3.0, 0.0));
    }

    #[test]
    fn dzbar_of_holomorphic_is_zero() {
        let f = BiJet::monomial(3, 0, c(1.0, 0.0), 4);
        assert_eq!(f.dzbar().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mixed_derivative_oracle() {
        // d^2/dzbar dz (z^2 zbar^2) = 4 z zbar, checked against an
        // independent symbolic evaluation of the factor j*k.
        let f = BiJet::monomial(2, 2, c(1.0, 0.0), 6);
        let g = f.dz().unwrap().dzbar().unwrap();
        assert_eq!(g.coeff(1, 1), c(4.0, 0.0));
        assert_eq!(g.max_abs(), 4.0);
    }

    #[test]
    fn zero_order_jet_errors() {
        let f = BiJet::constant(c(1.0, 0.0), 0);
        assert_eq!(f.dz().unwrap_err(), JetError::ZeroOrderJet);
    }

    #[test]
    fn ord_z_basic() {
        // f = z^2 + zbar z^3 -> 2.
        let f = BiJet::from_entries(4, &[(2, 0, c(1.0, 0.0)), (3, 1, c(1.0, 0.0))]);
        assert_eq!(f.ord_z(), ZOrder::Finite(2));
    }

    #[test]
    fn ord_z_of_zbar_multiple_is_truncation_limited() {
        let g = BiJet::from_entries(3, &[(0, 0, c(2.0, 0.0)), (1, 0, c(1.0, 1.0))]);
        let f = BiJet::var_zbar(3).mul(&g);
        assert_eq!(f.ord_z(), ZOrder::TruncationLimited(4));
    }

    #[test]
    fn in_class_c_examples() {
        // z^3 with s = 1, k = 2: all slots with z-power <= 1 and the scan
        // window vanish.
        let f = BiJet::monomial(3, 0, c(1.0, 0.0), 4);
        assert!(f.in_class_c(1, 2).unwrap());
        // zbar is in the (0,0) class (only c_00 = 0 is required).
        assert!(BiJet::var_zbar(2).in_class_c(0, 0).unwrap());
        // constant 1 is not.
        assert!(!BiJet::constant(c(1.0, 0.0), 2).in_class_c(0, 0).unwrap());
        // k beyond the truncation order is undecidable.
        assert!(matches!(
            BiJet::var_z(2).in_class_c(1, 3),
            Err(JetError::OrderTooLow { .. })
        ));
    }

    #[test]
    fn divide_z_pow_examples() {
        // (z^3 + z^2 zbar^2)/z^2 = z + zbar^2.
        let f = BiJet::from_entries(4, &[(3, 0, c(1.0, 0.0)), (2, 2, c(1.0, 0.0))]);
        let q = f.divide_z_pow(2).unwrap();
        assert_eq!(q.order(), 2);
        assert_eq!(q.coeff(1, 0), c(1.0, 0.0));
        assert_eq!(q.coeff(0, 2), c(1.0, 0.0));
        // c_01 != 0 blocks division by z.
        let bad = BiJet::from_entries(2, &[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        match bad.divide_z_pow(1).unwrap_err() {
            JetError::NotDivisible { slots, .. } => assert_eq!(slots, vec![(0, 1)]),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn divide_constant_relation() {
        // p! q(0) = d^p f/dz^p(0).
        let f = BiJet::from_entries(5, &[(3, 0, c(2.0, -1.0)), (4, 1, c(0.5, 0.0))]);
        let q = f.divide_z_pow(3).unwrap();
        let lhs = q.coeff(0, 0) * factorial(3);
        assert_eq!(lhs, f.deriv_at_zero(3, 0));
    }

    #[test]
    fn conj_ratio_extend_cancellation() {
        // e = z^s g -> zbar^s g.
        let g = BiJet::from_entries(2, &[(0, 0, c(1.0, 2.0)), (1, 1, c(0.0, -1.0))]);
        let e = g.mul_monomial(1, 0);
        let w = e.conj_ratio_extend(1).unwrap();
        let expect = g.mul_monomial(0, 1);
        for (j, k, v) in expect.entries() {
            assert_eq!(w.coeff(j, k), v);
        }
    }

    #[test]
    fn conj_ratio_extend_requires_vanishing_value() {
        // e = 1, s = 1: no continuous extension since e(0) != 0.
        let e = BiJet::constant(c(1.0, 0.0), 3);
        match e.conj_ratio_extend(1).unwrap_err() {
            JetError::NonExtendable { j, k, .. } => assert_eq!((j, k), (0, 0)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn conj_ratio_pointwise_agreement() {
        // Output agrees with the pointwise ratio on a circle.
        let g = BiJet::from_entries(3, &[(0, 0, c(0.3, 0.7)), (1, 2, c(-0.2, 0.1))]);
        let s = 2;
        let e = g.mul_monomial(s, 0);
        let w = e.conj_ratio_extend(s).unwrap();
        for i in 0..64 {
            let th = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
            let z = Complex64::from_polar(0.25, th);
            let ratio = (z.conj() / z).powu(s as u32) * e.eval(z);
            assert!((w.eval(z) - ratio).norm() < 1e-10);
        }
    }

    #[test]
    fn partial_extension_truncates_to_flat_order() {
        // e = zbar^4 with s = 1: obstruction of flat degree 4, so the
        // partial jet is valid (and zero) through order 3.
        let e = BiJet::monomial(0, 4, c(1.0, 0.0), 6);
        let p = e.conj_ratio_extend_partial(1);
        assert_eq!(p.valid_order, 3);
        assert_eq!(p.jet.max_abs(), 0.0);
        let ob = p.obstruction.unwrap();
        assert_eq!(ob.slot, (0, 4));
        assert_eq!(ob.flat_degree, 4);
    }

    #[test]
    fn inv_and_root() {
        let f = BiJet::from_entries(4, &[(0, 0, c(2.0, 0.0)), (1, 1, c(0.5, 0.3))]);
        let g = f.inv().unwrap();
        let p = f.mul(&g);
        assert!((p.coeff(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!(p.sub(&BiJet::constant(c(1.0, 0.0), 4)).max_abs() < 1e-14);

        let r = f.nth_root(3).unwrap();
        let r3 = r.mul(&r).mul(&r);
        assert!(r3.sub(&f).max_abs() < 1e-12);
    }

    #[test]
    fn compose_and_invert_germ() {
        let order = 6;
        let e = BiJet::from_entries(
            order,
            &[
                (1, 0, c(1.0, 0.0)),
                (2, 0, c(0.3, -0.1)),
                (1, 2, c(-0.05, 0.2)),
            ],
        );
        let cjet = e.invert_germ().unwrap();
        let idc = e.compose(&cjet).unwrap();
        assert!((idc.coeff(1, 0) - c(1.0, 0.0)).norm() < 1e-12);
        let diff = idc.sub(&BiJet::var_z(order));
        assert!(diff.max_abs() < 1e-11, "max {}", diff.max_abs());
    }

    #[test]
    fn reality_symmetry_of_wirtinger_pair() {
        // For real-valued jets, dzbar(f) = conj(dz(f)).
        let mut f = BiJet::zero(3);
        f.set_coeff(0, 0, c(1.0, 0.0));
        f.set_coeff(1, 0, c(0.5, 0.25));
        f.set_coeff(0, 1, c(0.5, -0.25));
        f.set_coeff(2, 1, c(0.1, -0.7));
        f.set_coeff(1, 2, c(0.1, 0.7));
        assert!(f.is_real_symmetric(0.0));
        let a = f.dzbar().unwrap();
        let b = f.dz().unwrap().conj();
        assert!(a.sub(&b).max_abs() == 0.0);
    }

    #[test]
    fn serde_roundtrip() {
        let f = BiJet::from_entries(3, &[(1, 2, c(0.25, -0.5)), (0, 0, c(1.0, 0.0))]);
        let text = serde_json::to_string(&f).unwrap();
        let back: BiJet = serde_json::from_str(&text).unwrap();
        assert_eq!(f.order(), back.order());
        for (j, k, v) in f.entries() {
            assert_eq!(back.coeff(j, k), v);
        }
    }

    #[test]
    fn zorder_ordering() {
        assert!(ZOrder::TruncationLimited(5) > ZOrder::Finite(4));
        assert!(ZOrder::Finite(3) < ZOrder::TruncationLimited(5));
        assert_eq!(
            ZOrder::TruncationLimited(5).partial_cmp(&ZOrder::Finite(7)),
            None
        );
    }
}
