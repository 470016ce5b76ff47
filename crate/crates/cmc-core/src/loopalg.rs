//! Laurent loops with matrix coefficients and certified degree windows.
//!
//! A [`LoopMat`] stores finitely many coefficients of a formal Laurent
//! series `A(λ) = Σ_d A_d λ^d` with `N×N` matrix coefficients over a
//! coefficient ring `R`.  Because the objects of interest (formal Killing
//! fields and their conjugates) are infinite series known only up to a
//! finite order, every loop carries a [`Window`] that records, per degree,
//! whether the coefficient is *certified*: either known to vanish (outside
//! the support bounds) or stored exactly (inside the known interval).
//!
//! Window bookkeeping is conservative.  For a sum, degree `d` is certified
//! when it is certified in both operands.  For a product, degree `d` is
//! certified unless it can receive a contribution `A_p B_q` (`p + q = d`)
//! with one factor uncertified and the other possibly nonzero; the
//! uncertified regions of each operand and the possibly-nonzero hull of the
//! other are combined by interval (Minkowski) sums into forbidden regions,
//! and the certified interval is what survives clipping.  For two series
//! supported in `[lo, ∞)` and known up to `hi` this reduces to the familiar
//! rule that the product is certified up to `lo + hi`.
//!
//! The `twisted` flag tracks the loop-group involution for `2×2` loops:
//! diagonal entries supported in even degree, off-diagonal in odd degree.
//! It is preserved by sums, products, and even shifts.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::diffring::DiffPoly;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Effective `−∞` for degree bounds.
pub const NEG_INF: i64 = i64::MIN / 4;
/// Effective `+∞` for degree bounds.
pub const POS_INF: i64 = i64::MAX / 4;

fn dadd(a: i64, b: i64) -> i64 {
    a.saturating_add(b).clamp(NEG_INF, POS_INF)
}

fn dneg(a: i64) -> i64 {
    a.saturating_neg().clamp(NEG_INF, POS_INF)
}

/// A nonempty degree interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Iv {
    lo: i64,
    hi: i64,
}

/// Certification window of a Laurent loop.
///
/// Degree `d` is certified iff `d < supp_lo`, `d > supp_hi` (known zero), or
/// `known_lo ≤ d ≤ known_hi` (stored exactly).  An empty known interval is
/// written `known_lo > known_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub supp_lo: i64,
    pub supp_hi: i64,
    pub known_lo: i64,
    pub known_hi: i64,
}

impl Window {
    /// Everything certified (for loops given exactly).
    pub fn all() -> Window {
        Window {
            supp_lo: NEG_INF,
            supp_hi: POS_INF,
            known_lo: NEG_INF,
            known_hi: POS_INF,
        }
    }

    /// Support contained in `[lo, hi]`, all coefficients certified.
    pub fn banded(lo: i64, hi: i64) -> Window {
        Window {
            supp_lo: lo,
            supp_hi: hi,
            known_lo: NEG_INF,
            known_hi: POS_INF,
        }
    }

    /// Support in `[supp_lo, supp_hi]`, certified on `[known_lo, known_hi]`
    /// plus everything outside the support bounds.
    pub fn partial(supp_lo: i64, supp_hi: i64, known_lo: i64, known_hi: i64) -> Window {
        Window {
            supp_lo,
            supp_hi,
            known_lo,
            known_hi,
        }
    }

    pub fn is_known(&self, d: i64) -> bool {
        d < self.supp_lo || d > self.supp_hi || (self.known_lo <= d && d <= self.known_hi)
    }

    /// Intervals of uncertified degrees.
    fn unknown_intervals(&self) -> Vec<Iv> {
        if self.supp_lo > self.supp_hi {
            return Vec::new();
        }
        let mut out = Vec::new();
        if self.known_lo > self.known_hi {
            out.push(Iv {
                lo: self.supp_lo,
                hi: self.supp_hi,
            });
            return out;
        }
        if self.known_lo > self.supp_lo {
            let hi = self.supp_hi.min(self.known_lo - 1);
            if self.supp_lo <= hi {
                out.push(Iv {
                    lo: self.supp_lo,
                    hi,
                });
            }
        }
        if self.known_hi < self.supp_hi {
            let lo = self.supp_lo.max(self.known_hi + 1);
            if lo <= self.supp_hi {
                out.push(Iv {
                    lo,
                    hi: self.supp_hi,
                });
            }
        }
        out
    }

    /// Largest representable known interval avoiding all forbidden regions;
    /// when clipping splits the interval, the longer piece survives (ties go
    /// to the lower piece).
    fn clip_known(mut forbidden: Vec<Iv>) -> (i64, i64) {
        forbidden.sort_by_key(|iv| (iv.lo, iv.hi));
        let (mut lo, mut hi) = (NEG_INF, POS_INF);
        for f in forbidden {
            if lo > hi {
                break;
            }
            if f.hi < lo || f.lo > hi {
                continue;
            }
            let left = if f.lo > lo { Some((lo, f.lo - 1)) } else { None };
            let right = if f.hi < hi { Some((f.hi + 1, hi)) } else { None };
            match (left, right) {
                (None, None) => {
                    return (POS_INF, NEG_INF);
                }
                (Some(l), None) => (lo, hi) = l,
                (None, Some(r)) => (lo, hi) = r,
                (Some(l), Some(r)) => {
                    let llen = l.1.saturating_sub(l.0);
                    let rlen = r.1.saturating_sub(r.0);
                    (lo, hi) = if llen >= rlen { l } else { r };
                }
            }
        }
        (lo, hi)
    }

    /// Window of a sum.
    pub fn add(&self, o: &Window) -> Window {
        let mut forbidden = self.unknown_intervals();
        forbidden.extend(o.unknown_intervals());
        let (known_lo, known_hi) = Window::clip_known(forbidden);
        Window {
            supp_lo: self.supp_lo.min(o.supp_lo),
            supp_hi: self.supp_hi.max(o.supp_hi),
            known_lo,
            known_hi,
        }
    }

    /// Window of a product, given each operand's stored-nonzero degree hull.
    pub fn mul(
        &self,
        o: &Window,
        self_nz: Option<(i64, i64)>,
        o_nz: Option<(i64, i64)>,
    ) -> Window {
        let ua = self.unknown_intervals();
        let ub = o.unknown_intervals();
        let hull = |stored: Option<(i64, i64)>, unknown: &[Iv]| -> Option<Iv> {
            let mut acc: Option<Iv> = stored.map(|(lo, hi)| Iv { lo, hi });
            for iv in unknown {
                acc = Some(match acc {
                    None => *iv,
                    Some(a) => Iv {
                        lo: a.lo.min(iv.lo),
                        hi: a.hi.max(iv.hi),
                    },
                });
            }
            acc
        };
        let nza = hull(self_nz, &ua);
        let nzb = hull(o_nz, &ub);
        let mut forbidden = Vec::new();
        if let Some(nzb) = nzb {
            for u in &ua {
                forbidden.push(Iv {
                    lo: dadd(u.lo, nzb.lo),
                    hi: dadd(u.hi, nzb.hi),
                });
            }
        }
        if let Some(nza) = nza {
            for u in &ub {
                forbidden.push(Iv {
                    lo: dadd(nza.lo, u.lo),
                    hi: dadd(nza.hi, u.hi),
                });
            }
        }
        let (known_lo, known_hi) = Window::clip_known(forbidden);
        Window {
            supp_lo: dadd(self.supp_lo, o.supp_lo),
            supp_hi: dadd(self.supp_hi, o.supp_hi),
            known_lo,
            known_hi,
        }
    }

    pub fn shift(&self, k: i64) -> Window {
        Window {
            supp_lo: dadd(self.supp_lo, k),
            supp_hi: dadd(self.supp_hi, k),
            known_lo: dadd(self.known_lo, k),
            known_hi: dadd(self.known_hi, k),
        }
    }

    /// Window under `λ ↦ λ^{−1}`.
    pub fn negate(&self) -> Window {
        let (known_lo, known_hi) = if self.known_lo > self.known_hi {
            (POS_INF, NEG_INF)
        } else {
            (dneg(self.known_hi), dneg(self.known_lo))
        };
        Window {
            supp_lo: dneg(self.supp_hi),
            supp_hi: dneg(self.supp_lo),
            known_lo,
            known_hi,
        }
    }

    /// Window after dropping all degrees `> k`.
    pub fn project_le(&self, k: i64) -> Window {
        let mut w = *self;
        w.supp_hi = w.supp_hi.min(k);
        if w.known_hi >= k && w.known_lo <= w.known_hi {
            w.known_hi = POS_INF;
        }
        w
    }

    /// Window after dropping all degrees `< k`.
    pub fn project_ge(&self, k: i64) -> Window {
        let mut w = *self;
        w.supp_lo = w.supp_lo.max(k);
        if w.known_lo <= k && w.known_lo <= w.known_hi {
            w.known_lo = NEG_INF;
        }
        w
    }
}

/// Coefficient ring interface shared by exact and floating-point loops.
pub trait Coeff: Clone + std::fmt::Debug + PartialEq {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    /// The constant `re.0/re.1 + (im.0/im.1)·i`.
    fn gauss_const(re: (i64, i64), im: (i64, i64)) -> Self;
}

impl Coeff for DiffPoly {
    fn zero() -> Self {
        DiffPoly::zero()
    }
    fn is_zero(&self) -> bool {
        DiffPoly::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        DiffPoly::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        DiffPoly::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        DiffPoly::mul(self, o)
    }
    fn neg(&self) -> Self {
        DiffPoly::neg(self)
    }
    fn gauss_const(re: (i64, i64), im: (i64, i64)) -> Self {
        DiffPoly::constant(Scalar::gauss(re.0, re.1, im.0, im.1))
    }
}

/// A dense `N×N` matrix over the coefficient ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<R, const N: usize> {
    pub e: [[R; N]; N],
}

impl<R: Coeff, const N: usize> Mat<R, N> {
    pub fn zero() -> Self {
        Mat {
            e: std::array::from_fn(|_| std::array::from_fn(|_| R::zero())),
        }
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> R) -> Self {
        Mat {
            e: std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|row| row.iter().all(|x| x.is_zero()))
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat::from_fn(|i, j| self.e[i][j].add(&o.e[i][j]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Mat::from_fn(|i, j| self.e[i][j].sub(&o.e[i][j]))
    }

    pub fn neg(&self) -> Self {
        Mat::from_fn(|i, j| self.e[i][j].neg())
    }

    pub fn scale(&self, c: &R) -> Self {
        Mat::from_fn(|i, j| self.e[i][j].mul(c))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Mat::from_fn(|i, j| {
            let mut acc = R::zero();
            for k in 0..N {
                acc = acc.add(&self.e[i][k].mul(&o.e[k][j]));
            }
            acc
        })
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(|i, j| self.e[j][i].clone())
    }

    pub fn trace(&self) -> R {
        let mut acc = R::zero();
        for i in 0..N {
            acc = acc.add(&self.e[i][i]);
        }
        acc
    }

    pub fn map(&self, f: impl Fn(&R) -> R) -> Self {
        Mat::from_fn(|i, j| f(&self.e[i][j]))
    }
}

/// Invariant pairing `⟨A, B⟩ = tr(AB)` on matrix coefficients.
pub fn inner<R: Coeff, const N: usize>(a: &Mat<R, N>, b: &Mat<R, N>) -> R {
    a.mul(b).trace()
}

/// A Laurent loop with certified window.
///
/// Invariants: stored coefficients are nonzero matrices, lie within the
/// support bounds, and sit at certified degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopMat<R, const N: usize> {
    coeffs: BTreeMap<i64, Mat<R, N>>,
    pub window: Window,
    pub twisted: bool,
}

/// The `2×2` case used for the `sl(2, C)` hierarchy.
pub type LoopMatrix<R> = LoopMat<R, 2>;

impl<R: Coeff, const N: usize> LoopMat<R, N> {
    pub fn zero(window: Window, twisted: bool) -> Self {
        LoopMat {
            coeffs: BTreeMap::new(),
            window,
            twisted,
        }
    }

    /// A loop concentrated at a single degree, certified everywhere.
    pub fn from_degree(d: i64, m: Mat<R, N>, twisted: bool) -> Self {
        let mut l = LoopMat::zero(Window::banded(d, d), twisted);
        l.set(d, m);
        l
    }

    /// Insert the coefficient at degree `d` (drops zero matrices).
    pub fn set(&mut self, d: i64, m: Mat<R, N>) {
        debug_assert!(
            self.window.is_known(d),
            "storing a coefficient at uncertified degree {d}"
        );
        if m.is_zero() {
            self.coeffs.remove(&d);
        } else {
            debug_assert!(
                d >= self.window.supp_lo && d <= self.window.supp_hi,
                "coefficient at degree {d} outside the support bounds"
            );
            self.coeffs.insert(d, m);
        }
    }

    pub fn stored(&self) -> impl Iterator<Item = (&i64, &Mat<R, N>)> {
        self.coeffs.iter()
    }

    /// All stored coefficients vanish (uncertified degrees may not).
    pub fn is_stored_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn nonzero_hull(&self) -> Option<(i64, i64)> {
        let lo = self.coeffs.keys().next()?;
        let hi = self.coeffs.keys().next_back()?;
        Some((*lo, *hi))
    }

    /// The coefficient of `λ^d`; errors when `d` is uncertified.
    pub fn component(&self, d: i64) -> Result<Mat<R, N>> {
        if !self.window.is_known(d) {
            return Err(CoreError::window(format!(
                "coefficient of λ^{d} is not certified by the window"
            )));
        }
        Ok(self.coeffs.get(&d).cloned().unwrap_or_else(Mat::zero))
    }

    /// `true` when every degree in `[lo, hi]` is certified and zero.
    pub fn zero_on(&self, lo: i64, hi: i64) -> Result<bool> {
        if lo > hi {
            return Ok(true);
        }
        for iv in self.window.unknown_intervals() {
            if iv.lo <= hi && iv.hi >= lo {
                return Err(CoreError::window(format!(
                    "degrees [{}, {}] in [{lo}, {hi}] are not certified",
                    iv.lo.max(lo),
                    iv.hi.min(hi)
                )));
            }
        }
        Ok(self.coeffs.range(lo..=hi).all(|(_, m)| m.is_zero()))
    }

    fn rebuild(
        window: Window,
        twisted: bool,
        raw: BTreeMap<i64, Mat<R, N>>,
    ) -> Self {
        let coeffs = raw
            .into_iter()
            .filter(|(d, m)| window.is_known(*d) && !m.is_zero())
            .collect();
        LoopMat {
            coeffs,
            window,
            twisted,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let window = self.window.add(&o.window);
        let mut raw = self.coeffs.clone();
        for (d, m) in &o.coeffs {
            let cur = raw.entry(*d).or_insert_with(Mat::zero);
            *cur = cur.add(m);
        }
        LoopMat::rebuild(window, self.twisted && o.twisted, raw)
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        LoopMat {
            coeffs: self.coeffs.iter().map(|(d, m)| (*d, m.neg())).collect(),
            window: self.window,
            twisted: self.twisted,
        }
    }

    pub fn scale(&self, c: &R) -> Self {
        let raw = self
            .coeffs
            .iter()
            .map(|(d, m)| (*d, m.scale(c)))
            .collect();
        LoopMat::rebuild(self.window, self.twisted, raw)
    }

    /// Scale by the constant `re.0/re.1 + (im.0/im.1)·i`.
    pub fn scale_gauss(&self, re: (i64, i64), im: (i64, i64)) -> Self {
        self.scale(&R::gauss_const(re, im))
    }

    pub fn mul(&self, o: &Self) -> Self {
        let window = self
            .window
            .mul(&o.window, self.nonzero_hull(), o.nonzero_hull());
        let mut raw: BTreeMap<i64, Mat<R, N>> = BTreeMap::new();
        for (p, a) in &self.coeffs {
            for (q, b) in &o.coeffs {
                let d = p + q;
                if !window.is_known(d) {
                    continue;
                }
                let cur = raw.entry(d).or_insert_with(Mat::zero);
                *cur = cur.add(&a.mul(b));
            }
        }
        LoopMat::rebuild(window, self.twisted && o.twisted, raw)
    }

    pub fn bracket(&self, o: &Self) -> Self {
        self.mul(o).sub(&o.mul(self))
    }

    /// Multiply by `λ^k`.
    pub fn shift(&self, k: i64) -> Self {
        LoopMat {
            coeffs: self.coeffs.iter().map(|(d, m)| (d + k, m.clone())).collect(),
            window: self.window.shift(k),
            twisted: self.twisted && k % 2 == 0,
        }
    }

    /// Apply the Euler operator `λ d/dλ`: multiply each coefficient by its
    /// degree.
    pub fn euler(&self) -> Self {
        let raw = self
            .coeffs
            .iter()
            .map(|(d, m)| (*d, m.scale(&R::gauss_const((*d, 1), (0, 1)))))
            .collect();
        LoopMat::rebuild(self.window, self.twisted, raw)
    }

    /// The contiguous certified interval inside the support hull, if any.
    pub fn certified_band(&self) -> Option<(i64, i64)> {
        let w = &self.window;
        if w.supp_lo > w.supp_hi || w.known_lo > w.known_hi {
            return None;
        }
        let lo = w.supp_lo.max(w.known_lo);
        let hi = w.supp_hi.min(w.known_hi);
        if lo > hi {
            None
        } else {
            Some((lo, hi))
        }
    }

    /// Substitute `λ ↦ λ^{−1}`.
    pub fn negate_degrees(&self) -> Self {
        LoopMat {
            coeffs: self.coeffs.iter().map(|(d, m)| (-d, m.clone())).collect(),
            window: self.window.negate(),
            twisted: self.twisted,
        }
    }

    /// Keep degrees `≤ k`.
    pub fn project_le(&self, k: i64) -> Self {
        let window = self.window.project_le(k);
        LoopMat {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(d, _)| **d <= k)
                .map(|(d, m)| (*d, m.clone()))
                .collect(),
            window,
            twisted: self.twisted,
        }
    }

    /// Keep degrees `≥ k`.
    pub fn project_ge(&self, k: i64) -> Self {
        let window = self.window.project_ge(k);
        LoopMat {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(d, _)| **d >= k)
                .map(|(d, m)| (*d, m.clone()))
                .collect(),
            window,
            twisted: self.twisted,
        }
    }

    pub fn transpose(&self) -> Self {
        LoopMat {
            coeffs: self
                .coeffs
                .iter()
                .map(|(d, m)| (*d, m.transpose()))
                .collect(),
            window: self.window,
            twisted: self.twisted,
        }
    }

    /// Apply `f` to every entry of every coefficient.  The caller must pick
    /// an `f` that does not interact with λ-degrees.
    pub fn map_entries(&self, f: impl Fn(&R) -> R) -> Self {
        let raw = self
            .coeffs
            .iter()
            .map(|(d, m)| (*d, m.map(&f)))
            .collect();
        LoopMat::rebuild(self.window, self.twisted, raw)
    }

    /// The entry `(i, j)` as a scalar (`1×1`) loop.
    pub fn entry_series(&self, i: usize, j: usize) -> LoopMat<R, 1> {
        let raw = self
            .coeffs
            .iter()
            .map(|(d, m)| (*d, Mat::<R, 1>::from_fn(|_, _| m.e[i][j].clone())))
            .collect();
        LoopMat::rebuild(self.window, false, raw)
    }

    /// The trace as a scalar loop.
    pub fn trace_series(&self) -> LoopMat<R, 1> {
        let raw = self
            .coeffs
            .iter()
            .map(|(d, m)| (*d, Mat::<R, 1>::from_fn(|_, _| m.trace())))
            .collect();
        LoopMat::rebuild(self.window, false, raw)
    }
}

impl<R: Coeff> LoopMat<R, 1> {
    /// The unique entry of a scalar loop coefficient.
    pub fn value(&self, d: i64) -> Result<R> {
        Ok(self.component(d)?.e[0][0].clone())
    }
}

impl<R: Coeff> LoopMat<R, 2> {
    /// `det A = a₁₁a₂₂ − a₁₂a₂₁` as a scalar loop with product-certified
    /// window.
    pub fn det_series(&self) -> LoopMat<R, 1> {
        let a = self.entry_series(0, 0);
        let b = self.entry_series(0, 1);
        let c = self.entry_series(1, 0);
        let d = self.entry_series(1, 1);
        a.mul(&d).sub(&b.mul(&c))
    }

    /// Verify the involution structure on the stored coefficients: diagonal
    /// entries live in even degree, off-diagonal entries in odd degree.
    pub fn check_twisted_form(&self) -> bool {
        self.coeffs.iter().all(|(d, m)| {
            if d.rem_euclid(2) == 0 {
                m.e[0][1].is_zero() && m.e[1][0].is_zero()
            } else {
                m.e[0][0].is_zero() && m.e[1][1].is_zero()
            }
        })
    }
}

fn bound_to_json(b: i64, sign: i64) -> Value {
    if sign > 0 && b >= POS_INF {
        Value::Null
    } else if sign < 0 && b <= NEG_INF {
        Value::Null
    } else {
        json!(b)
    }
}

impl<const N: usize> LoopMat<DiffPoly, N> {
    /// Canonical JSON form.
    ///
    /// The window is exported as the certified band `[lo, hi]` (with `null`
    /// for an unbounded side): coefficients outside it are zero, inside it
    /// exact.  Importing therefore treats the data as exact on the band,
    /// which is how externally supplied loops are consumed.
    pub fn to_json(&self) -> Value {
        let lo = self.window.supp_lo.max(self.window.known_lo.min(self.window.known_hi));
        let hi = self.window.supp_hi.min(self.window.known_hi.max(self.window.known_lo));
        let coeffs: BTreeMap<String, Value> = self
            .coeffs
            .iter()
            .map(|(d, m)| {
                let rows: Vec<Value> = (0..N)
                    .map(|i| Value::Array((0..N).map(|j| m.e[i][j].to_json()).collect()))
                    .collect();
                (d.to_string(), Value::Array(rows))
            })
            .collect();
        json!({
            "twisted": self.twisted,
            "window": [bound_to_json(lo, -1), bound_to_json(hi, 1)],
            "coeffs": coeffs,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| CoreError::invalid("loop matrix must be an object"))?;
        let twisted = obj
            .get("twisted")
            .and_then(Value::as_bool)
            .ok_or_else(|| CoreError::invalid("loop matrix missing boolean 'twisted'"))?;
        let win = obj
            .get("window")
            .and_then(Value::as_array)
            .filter(|a| a.len() == 2)
            .ok_or_else(|| CoreError::invalid("loop matrix missing 'window': [lo, hi]"))?;
        let bound = |v: &Value, def: i64| -> Result<i64> {
            if v.is_null() {
                Ok(def)
            } else {
                v.as_i64()
                    .ok_or_else(|| CoreError::invalid("window bound must be an integer or null"))
            }
        };
        let lo = bound(&win[0], NEG_INF)?;
        let hi = bound(&win[1], POS_INF)?;
        let mut out = LoopMat::zero(Window::banded(lo, hi), twisted);
        let coeffs = obj
            .get("coeffs")
            .and_then(Value::as_object)
            .ok_or_else(|| CoreError::invalid("loop matrix missing 'coeffs' object"))?;
        for (k, rows) in coeffs {
            let d: i64 = k
                .parse()
                .map_err(|_| CoreError::invalid(format!("bad degree key {k:?}")))?;
            if d < lo || d > hi {
                return Err(CoreError::invalid(format!(
                    "coefficient at degree {d} outside the declared window"
                )));
            }
            let rows = rows
                .as_array()
                .filter(|r| r.len() == N)
                .ok_or_else(|| CoreError::invalid("coefficient must be an N×N array"))?;
            let mut m = Mat::<DiffPoly, N>::zero();
            for (i, row) in rows.iter().enumerate() {
                let row = row
                    .as_array()
                    .filter(|r| r.len() == N)
                    .ok_or_else(|| CoreError::invalid("coefficient must be an N×N array"))?;
                for (j, entry) in row.iter().enumerate() {
                    m.e[i][j] = DiffPoly::from_json(entry)?;
                }
            }
            out.set(d, m);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cpoly(n: i64) -> DiffPoly {
        DiffPoly::constant(Scalar::from_int(n))
    }

    fn diag2(a: i64, d: i64) -> Mat<DiffPoly, 2> {
        Mat::from_fn(|i, j| match (i, j) {
            (0, 0) => cpoly(a),
            (1, 1) => cpoly(d),
            _ => DiffPoly::zero(),
        })
    }

    fn offdiag2(b: i64, c: i64) -> Mat<DiffPoly, 2> {
        Mat::from_fn(|i, j| match (i, j) {
            (0, 1) => cpoly(b),
            (1, 0) => cpoly(c),
            _ => DiffPoly::zero(),
        })
    }

    /// A loop shaped like a formal Killing field: support `≥ 1`, certified
    /// up to `hi`, twisted.
    fn tower_like(hi: i64) -> LoopMat<DiffPoly, 2> {
        let mut y = LoopMat::zero(Window::partial(1, POS_INF, NEG_INF, hi), true);
        for d in 1..=hi {
            if d.rem_euclid(2) == 0 {
                y.set(d, diag2(d, -d));
            } else {
                y.set(d, offdiag2(d, d + 1));
            }
        }
        y
    }

    #[test]
    fn product_window_matches_one_sided_rule() {
        let y = tower_like(5);
        let sq = y.mul(&y);
        // Certified exactly up to lo + hi = 1 + 5.
        assert!(sq.window.is_known(6));
        assert!(!sq.window.is_known(7));
        assert_eq!(sq.window.supp_lo, 2);
        // Sub-minimal degrees are certified zero.
        assert!(sq.zero_on(-3, 1).unwrap());
        assert!(sq.zero_on(2, 6).is_ok());
        assert!(sq.zero_on(2, 7).is_err());
    }

    #[test]
    fn fully_unknown_product_of_opposite_chiralities() {
        let y = tower_like(5);
        let yhat = y.negate_degrees();
        assert!(yhat.window.is_known(-5));
        assert!(!yhat.window.is_known(-6));
        // Y · Ŷ needs all-order data at every degree: nothing is certified
        // inside the support hull.
        let p = y.mul(&yhat);
        assert!(!p.window.is_known(0));
        assert!(!p.window.is_known(100));
    }

    #[test]
    fn banded_times_partial_keeps_one_side() {
        // A banded, fully known factor against a one-sided conjugate series:
        // certification survives on the high side.
        let u = {
            let mut u = LoopMat::zero(Window::banded(-3, -1), true);
            u.set(-1, offdiag2(1, 2));
            u.set(-3, offdiag2(3, 1));
            u
        };
        let yhat = tower_like(7).negate_degrees();
        let p = u.mul(&yhat);
        // Unknown region of Ŷ is (−∞, −8]; forbidden = (−∞, −8] ⊕ [−3, −1]
        // = (−∞, −9], so certification starts at −8.
        assert!(p.window.is_known(-8));
        assert!(!p.window.is_known(-9));
    }

    #[test]
    fn projections_absorb_known_zero_regions() {
        let y = tower_like(9);
        // λ^{−2}·Y certified to degree 7, then the negative part is banded
        // and fully certified.
        let u = y.shift(-2).project_le(-1);
        assert_eq!(u.window.supp_lo, -1);
        assert_eq!(u.window.supp_hi, -1);
        assert!(u.window.is_known(-1));
        assert!(u.window.is_known(1_000_000));
        assert!(u.component(-1).is_ok());
        // Twisted parity is destroyed by odd shifts and kept by even ones.
        assert!(y.shift(-2).twisted);
        assert!(!y.shift(-1).twisted);
    }

    #[test]
    fn component_errors_on_uncertified_degree() {
        let y = tower_like(3);
        assert!(y.component(3).is_ok());
        assert!(matches!(y.component(4), Err(CoreError::Window(_))));
        assert!(y.component(0).unwrap().is_zero());
    }

    #[test]
    fn twisted_flags_and_structure() {
        let y = tower_like(5);
        assert!(y.check_twisted_form());
        assert!(y.mul(&y).twisted);
        assert!(y.mul(&y).check_twisted_form());
        assert!(y.bracket(&y.shift(2)).twisted);
        let mut broken = LoopMat::zero(Window::banded(0, 0), true);
        broken.set(0, offdiag2(1, 1));
        assert!(!broken.check_twisted_form());
    }

    #[test]
    fn det_series_of_sample() {
        // A = diag(1, −1)λ² + offdiag(2, 3)λ: det = −λ⁴ − 6λ².
        let mut a = LoopMat::zero(Window::banded(1, 2), true);
        a.set(2, diag2(1, -1));
        a.set(1, offdiag2(2, 3));
        let det = a.det_series();
        assert_eq!(det.value(4).unwrap(), cpoly(-1));
        assert_eq!(det.value(2).unwrap(), cpoly(-6));
        assert_eq!(det.value(3).unwrap(), DiffPoly::zero());
        // trace of A² = 2·(sum of diag of square).
        let tr = a.mul(&a).trace_series();
        assert_eq!(tr.value(4).unwrap(), cpoly(2));
        assert_eq!(tr.value(2).unwrap(), cpoly(12));
    }

    #[test]
    fn inner_pairing_on_matrices() {
        let h = diag2(1, -1);
        assert_eq!(inner(&h, &h), cpoly(2));
    }

    #[test]
    fn json_roundtrip() {
        let mut a = LoopMat::zero(Window::banded(-1, 3), false);
        a.set(-1, offdiag2(2, 3));
        a.set(2, diag2(5, -5));
        let v = a.to_json();
        let b = LoopMat::<DiffPoly, 2>::from_json(&v).unwrap();
        assert_eq!(b.component(-1).unwrap(), a.component(-1).unwrap());
        assert_eq!(b.component(2).unwrap(), a.component(2).unwrap());
        assert_eq!(serde_json::to_string(&b.to_json()).unwrap(),
                   serde_json::to_string(&v).unwrap());
        // Out-of-window coefficients are rejected.
        let mut bad = v.clone();
        bad["coeffs"]["7"] = bad["coeffs"]["2"].clone();
        assert!(LoopMat::<DiffPoly, 2>::from_json(&bad).is_err());
    }

    #[test]
    fn one_sided_export_band() {
        let y = tower_like(5);
        let v = y.to_json();
        assert_eq!(v["window"][0], serde_json::json!(1));
        assert_eq!(v["window"][1], serde_json::json!(5));
    }
}
