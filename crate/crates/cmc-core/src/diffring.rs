//! The exact differential polynomial ring of a CMC moving frame.
//!
//! Variables are the frame derivatives `h_j` (`j ≥ 2`) and their formal
//! conjugates `h̄_j`, together with half-integer powers of `h₂` and `h̄₂`.
//! A monomial therefore records the half-step exponents of `h₂^{1/2}` and
//! `h̄₂^{1/2}` (which may be negative) and ordinary exponents of `h_j`,
//! `h̄_j` for `j ≥ 3`.  Coefficients live in the scalar field `Q(i)[γ, γ⁻¹]`
//! of [`crate::scalar`].
//!
//! The two covariant derivations act by
//!
//! ```text
//! ∂_ξ h_j = h_{j+1}           ∂_ξ̄ h_j = T_j
//! ∂_ξ h₂^{p/2} = (p/2) h₂^{(p−2)/2} h₃          ∂_ξ̄ h₂^{p/2} = 0
//! ```
//!
//! with barred rules the formal conjugates, where the torsion `T_j` is the
//! closed-form differential polynomial
//!
//! ```text
//! T₂ = 0,
//! T_{j+1} = Σ_{s=0}^{j−2} a_{js} · h_{j−s} · ∂_ξ^s R,
//! a_{js}  = ((j+s+2)/2) · (j−1)! / ((j−s−2)! (s+2)!),
//! ```
//!
//! and `R = γ² − h₂h̄₂` is the curvature with `∂_ξ^s R = δ_{0s} γ² − h_{2+s} h̄₂`.
//! `∂_ξ` raises the grading weight `w` (with `w(h_j) = j`, `w(h̄_j) = −j`)
//! by one and `∂_ξ̄` lowers it by one, and on any `f` the derivations obey
//! the curvature commutation rule
//!
//! ```text
//! ∂_ξ ∂_ξ̄ f − ∂_ξ̄ ∂_ξ f = −½ · R · W(f)
//! ```
//!
//! where `W` multiplies each monomial by its weight.  On weight-zero
//! elements the derivations commute and the Jacobi operator
//! `E(f) = ∂_ξ ∂_ξ̄ f + ½(γ² + h₂h̄₂) f` is defined.
//!
//! [`BalancedForm`] rewrites a weight-homogeneous element as
//! `h₂^{P₀/2} h̄₂^{Q₀/2} · Σ c · z^e z̄^ē · (h₂h̄₂)^{r/2}` in the normalised
//! variables `z_j = h₂^{−j/2} h_j`, which makes membership in the plain
//! polynomial ring `C[γ][z₃, z₄, …]` decidable by inspection.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::{LazyLock, Mutex};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use serde_json::{json, Value};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Direction of covariant differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Xi,
    XiBar,
}

/// A monomial: `h₂^{h2h/2} · h̄₂^{hb2h/2} · Π h_j^{e_j} · Π h̄_j^{ē_j}`.
///
/// The maps `h`, `hb` hold exponents for `j ≥ 3` only and never store zero
/// exponents; the half-step counts `h2h`, `hb2h` may be negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mono {
    pub h2h: i32,
    pub hb2h: i32,
    pub h: BTreeMap<u32, u32>,
    pub hb: BTreeMap<u32, u32>,
}

impl Mono {
    pub fn unit() -> Mono {
        Mono {
            h2h: 0,
            hb2h: 0,
            h: BTreeMap::new(),
            hb: BTreeMap::new(),
        }
    }

    /// Grading weight `w = h2h − hb2h + Σ j e_j − Σ j ē_j` (half-steps of
    /// `h₂^{1/2}` count one each).
    pub fn weight(&self) -> i64 {
        let mut w = self.h2h as i64 - self.hb2h as i64;
        for (j, e) in &self.h {
            w += *j as i64 * *e as i64;
        }
        for (j, e) in &self.hb {
            w -= *j as i64 * *e as i64;
        }
        w
    }

    /// Total degree used as the leading sort key.
    fn grade(&self) -> i64 {
        let mut g = self.h2h as i64 + self.hb2h as i64;
        for e in self.h.values() {
            g += *e as i64;
        }
        for e in self.hb.values() {
            g += *e as i64;
        }
        g
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut out = self.clone();
        out.h2h += o.h2h;
        out.hb2h += o.hb2h;
        for (j, e) in &o.h {
            *out.h.entry(*j).or_insert(0) += e;
        }
        for (j, e) in &o.hb {
            *out.hb.entry(*j).or_insert(0) += e;
        }
        out
    }

    fn is_unit(&self) -> bool {
        self.h2h == 0 && self.hb2h == 0 && self.h.is_empty() && self.hb.is_empty()
    }
}

fn adjust(map: &mut BTreeMap<u32, u32>, j: u32, delta: i32) {
    let e = map.get(&j).copied().unwrap_or(0) as i32 + delta;
    debug_assert!(e >= 0, "negative exponent for index {j}");
    if e == 0 {
        map.remove(&j);
    } else {
        map.insert(j, e as u32);
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.grade()
            .cmp(&other.grade())
            .then(self.h2h.cmp(&other.h2h))
            .then(self.hb2h.cmp(&other.hb2h))
            .then_with(|| {
                let hi = [
                    self.h.keys().next_back(),
                    self.hb.keys().next_back(),
                    other.h.keys().next_back(),
                    other.hb.keys().next_back(),
                ]
                .into_iter()
                .flatten()
                .max()
                .copied()
                .unwrap_or(2);
                for j in 3..=hi {
                    let a = (
                        self.h.get(&j).copied().unwrap_or(0),
                        self.hb.get(&j).copied().unwrap_or(0),
                    );
                    let b = (
                        other.h.get(&j).copied().unwrap_or(0),
                        other.hb.get(&j).copied().unwrap_or(0),
                    );
                    match a.cmp(&b) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
                Ordering::Equal
            })
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn half_pow(name: &str, p: i32, parts: &mut Vec<String>) {
    if p == 0 {
        return;
    }
    if p == 2 {
        parts.push(name.to_string());
    } else if p % 2 == 0 {
        parts.push(format!("{name}^{}", p / 2));
    } else {
        parts.push(format!("{name}^({p}/2)"));
    }
}

impl std::fmt::Display for Mono {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        half_pow("h2", self.h2h, &mut parts);
        half_pow("hb2", self.hb2h, &mut parts);
        for (j, e) in &self.h {
            parts.push(if *e == 1 {
                format!("h{j}")
            } else {
                format!("h{j}^{e}")
            });
        }
        for (j, e) in &self.hb {
            parts.push(if *e == 1 {
                format!("hb{j}")
            } else {
                format!("hb{j}^{e}")
            });
        }
        if parts.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", parts.join("·"))
        }
    }
}

/// A sparse differential polynomial with canonically ordered monomials.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffPoly {
    terms: BTreeMap<Mono, Scalar>,
}

impl DiffPoly {
    pub fn zero() -> DiffPoly {
        DiffPoly::default()
    }

    pub fn one() -> DiffPoly {
        DiffPoly::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> DiffPoly {
        DiffPoly::term(Mono::unit(), c)
    }

    /// The transcendental constant `γ`.
    pub fn gamma() -> DiffPoly {
        DiffPoly::constant(Scalar::gamma())
    }

    pub fn term(m: Mono, c: Scalar) -> DiffPoly {
        let mut p = DiffPoly::zero();
        p.add_term(m, c);
        p
    }

    /// The variable `h_j`, `j ≥ 2`.
    pub fn h(j: u32) -> DiffPoly {
        assert!(j >= 2, "h_j defined for j ≥ 2");
        let mut m = Mono::unit();
        if j == 2 {
            m.h2h = 2;
        } else {
            m.h.insert(j, 1);
        }
        DiffPoly::term(m, Scalar::one())
    }

    /// The variable `h̄_j`, `j ≥ 2`.
    pub fn hb(j: u32) -> DiffPoly {
        assert!(j >= 2, "h̄_j defined for j ≥ 2");
        let mut m = Mono::unit();
        if j == 2 {
            m.hb2h = 2;
        } else {
            m.hb.insert(j, 1);
        }
        DiffPoly::term(m, Scalar::one())
    }

    /// `h₂^{p/2}` for any integer `p` (so `p = 1` is the square root and
    /// `p = −3` is `h₂^{−3/2}`).
    pub fn h2_half(p: i32) -> DiffPoly {
        let mut m = Mono::unit();
        m.h2h = p;
        DiffPoly::term(m, Scalar::one())
    }

    /// `h̄₂^{p/2}` for any integer `p`.
    pub fn hb2_half(p: i32) -> DiffPoly {
        let mut m = Mono::unit();
        m.hb2h = p;
        DiffPoly::term(m, Scalar::one())
    }

    /// The normalised variable `z_j = h₂^{−j/2} h_j`, `j ≥ 3`.
    pub fn z(j: u32) -> DiffPoly {
        assert!(j >= 3, "z_j defined for j ≥ 3");
        let mut m = Mono::unit();
        m.h2h = -(j as i32);
        m.h.insert(j, 1);
        DiffPoly::term(m, Scalar::one())
    }

    /// The normalised variable `z̄_j = h̄₂^{−j/2} h̄_j`, `j ≥ 3`.
    pub fn zbar(j: u32) -> DiffPoly {
        assert!(j >= 3, "z̄_j defined for j ≥ 3");
        let mut m = Mono::unit();
        m.hb2h = -(j as i32);
        m.hb.insert(j, 1);
        DiffPoly::term(m, Scalar::one())
    }

    /// The curvature `R = γ² − h₂h̄₂`.
    pub fn curvature() -> DiffPoly {
        DiffPoly::constant(Scalar::gamma_pow(2)).sub(&DiffPoly::h(2).mul(&DiffPoly::hb(2)))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Scalar)> {
        self.terms.iter()
    }

    pub fn coeff_of(&self, m: &Mono) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_else(Scalar::zero)
    }

    /// Add `c·m` in place, dropping the monomial if it cancels.
    pub fn add_term(&mut self, m: Mono, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = s;
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_assign(&mut self, o: &DiffPoly) {
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn add(&self, o: &DiffPoly) -> DiffPoly {
        let mut out = self.clone();
        out.add_assign(o);
        out
    }

    pub fn sub(&self, o: &DiffPoly) -> DiffPoly {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> DiffPoly {
        DiffPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> DiffPoly {
        if c.is_zero() {
            return DiffPoly::zero();
        }
        let mut out = DiffPoly::zero();
        for (m, s) in &self.terms {
            out.add_term(m.clone(), s.mul(c));
        }
        out
    }

    pub fn scale_ratio(&self, num: i64, den: i64) -> DiffPoly {
        self.scale(&Scalar::from_ratio(num, den))
    }

    /// Accumulate `c·m·g` into `self`.
    fn add_scaled_product(&mut self, m: &Mono, c: &Scalar, g: &DiffPoly) {
        for (gm, gc) in &g.terms {
            self.add_term(m.mul(gm), c.mul(gc));
        }
    }

    pub fn mul(&self, o: &DiffPoly) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            out.add_scaled_product(m, c, o);
        }
        out
    }

    pub fn pow(&self, k: u32) -> DiffPoly {
        let mut out = DiffPoly::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    /// Grading weight, if the polynomial is weight-homogeneous.
    ///
    /// Returns `None` for zero or for a mixed-weight polynomial.
    pub fn weight(&self) -> Option<i64> {
        let mut it = self.terms.keys();
        let w = it.next()?.weight();
        for m in it {
            if m.weight() != w {
                return None;
            }
        }
        Some(w)
    }

    /// Multiply each monomial by its grading weight.
    pub fn weight_split(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            let w = m.weight();
            if w != 0 {
                out.add_term(m.clone(), c.mul(&Scalar::from_int(w)));
            }
        }
        out
    }

    /// Formal conjugation: swaps barred and unbarred variables and
    /// conjugates every coefficient (`i ↦ −i`, `γ` fixed).
    pub fn conjugate(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            let cm = Mono {
                h2h: m.hb2h,
                hb2h: m.h2h,
                h: m.hb.clone(),
                hb: m.h.clone(),
            };
            out.add_term(cm, c.conj());
        }
        out
    }

    /// Covariant derivative in the given direction, term by term.
    pub fn derive(&self, dir: Dir) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (m, c) in &self.terms {
            match dir {
                Dir::Xi => {
                    if m.h2h != 0 {
                        let mut m2 = m.clone();
                        m2.h2h -= 2;
                        adjust(&mut m2.h, 3, 1);
                        out.add_term(m2, c.scale_ratio(m.h2h as i64, 2));
                    }
                    for (j, e) in &m.h {
                        let mut m2 = m.clone();
                        adjust(&mut m2.h, *j, -1);
                        adjust(&mut m2.h, *j + 1, 1);
                        out.add_term(m2, c.scale_ratio(*e as i64, 1));
                    }
                    for (j, e) in &m.hb {
                        let mut m2 = m.clone();
                        adjust(&mut m2.hb, *j, -1);
                        out.add_scaled_product(
                            &m2,
                            &c.scale_ratio(*e as i64, 1),
                            &torsion_bar(*j),
                        );
                    }
                }
                Dir::XiBar => {
                    if m.hb2h != 0 {
                        let mut m2 = m.clone();
                        m2.hb2h -= 2;
                        adjust(&mut m2.hb, 3, 1);
                        out.add_term(m2, c.scale_ratio(m.hb2h as i64, 2));
                    }
                    for (j, e) in &m.hb {
                        let mut m2 = m.clone();
                        adjust(&mut m2.hb, *j, -1);
                        adjust(&mut m2.hb, *j + 1, 1);
                        out.add_term(m2, c.scale_ratio(*e as i64, 1));
                    }
                    for (j, e) in &m.h {
                        let mut m2 = m.clone();
                        adjust(&mut m2.h, *j, -1);
                        out.add_scaled_product(&m2, &c.scale_ratio(*e as i64, 1), &torsion(*j));
                    }
                }
            }
        }
        out
    }

    /// The Jacobi (stability) operator `E(f) = ∂_ξ ∂_ξ̄ f + ½(γ² + h₂h̄₂) f`,
    /// defined on weight-zero elements only.
    pub fn jacobi(&self) -> Result<DiffPoly> {
        if !self.is_zero() && self.weight() != Some(0) {
            return Err(CoreError::weight(format!(
                "Jacobi operator requires grading weight 0, got {:?}",
                self.weight()
            )));
        }
        let second = self.derive(Dir::XiBar).derive(Dir::Xi);
        let potential = DiffPoly::constant(Scalar::gamma_pow(2))
            .add(&DiffPoly::h(2).mul(&DiffPoly::hb(2)))
            .scale_ratio(1, 2);
        Ok(second.add(&potential.mul(self)))
    }

    /// Rewrite in the normalised variables; errors unless weight-homogeneous.
    pub fn balanced_form(&self) -> Result<BalancedForm> {
        if self.is_zero() {
            return Ok(BalancedForm {
                p0_half: 0,
                q0_half: 0,
                terms: BTreeMap::new(),
            });
        }
        if self.weight().is_none() {
            return Err(CoreError::weight(
                "balanced form requires a weight-homogeneous polynomial".to_string(),
            ));
        }
        let p_of = |m: &Mono| -> i64 {
            m.h2h as i64
                + m.h
                    .iter()
                    .map(|(j, e)| *j as i64 * *e as i64)
                    .sum::<i64>()
        };
        let q_of = |m: &Mono| -> i64 {
            m.hb2h as i64
                + m.hb
                    .iter()
                    .map(|(j, e)| *j as i64 * *e as i64)
                    .sum::<i64>()
        };
        let p0 = self.terms.keys().map(&p_of).min().unwrap();
        let q0 = self.terms.keys().map(&q_of).min().unwrap();
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let r = p_of(m) - p0;
            debug_assert_eq!(r, q_of(m) - q0, "weight homogeneity violated");
            let zm = ZMono {
                z: m.h.clone(),
                zbar: m.hb.clone(),
                r_half: r,
            };
            let prev = terms.insert(zm, c.clone());
            debug_assert!(prev.is_none(), "monomial collision in balanced form");
        }
        Ok(BalancedForm {
            p0_half: p0,
            q0_half: q0,
            terms,
        })
    }

    /// Evaluate numerically, with `h_j = z_j · (h₂^{1/2})^j` and likewise for
    /// the barred variables.  Every `z_j`, `z̄_j` that occurs must be
    /// assigned.
    pub fn eval(&self, a: &NumericAssignment) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut v = c.eval(a.gamma);
            v *= a.sqrt_h2.powi(m.h2h);
            v *= a.sqrt_hb2.powi(m.hb2h);
            for (j, e) in &m.h {
                let zj = a
                    .z
                    .get(j)
                    .ok_or_else(|| CoreError::invalid(format!("no value assigned for z_{j}")))?;
                v *= (zj * a.sqrt_h2.powi(*j as i32)).powi(*e as i32);
            }
            for (j, e) in &m.hb {
                let zj = a.zbar.get(j).ok_or_else(|| {
                    CoreError::invalid(format!("no value assigned for z̄_{j}"))
                })?;
                v *= (zj * a.sqrt_hb2.powi(*j as i32)).powi(*e as i32);
            }
            total += v;
        }
        Ok(total)
    }

    /// Canonical JSON form: an array of term objects in monomial order.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(m, c)| {
                json!({
                    "coeff": c.to_json(),
                    "h2h": m.h2h,
                    "hb2h": m.hb2h,
                    "h": m.h.iter().map(|(j, e)| (j.to_string(), *e)).collect::<BTreeMap<_, _>>(),
                    "hb": m.hb.iter().map(|(j, e)| (j.to_string(), *e)).collect::<BTreeMap<_, _>>(),
                })
            })
            .collect();
        Value::Array(terms)
    }

    pub fn from_json(v: &Value) -> Result<DiffPoly> {
        fn exp_map(v: Option<&Value>) -> Result<BTreeMap<u32, u32>> {
            let mut out = BTreeMap::new();
            let Some(v) = v else { return Ok(out) };
            let obj = v
                .as_object()
                .ok_or_else(|| CoreError::invalid("exponent map must be an object"))?;
            for (k, e) in obj {
                let j: u32 = k
                    .parse()
                    .map_err(|_| CoreError::invalid(format!("bad variable index {k:?}")))?;
                if j < 3 {
                    return Err(CoreError::invalid("exponent map indices start at 3"));
                }
                let e = e
                    .as_u64()
                    .ok_or_else(|| CoreError::invalid("exponent must be a non-negative integer"))?;
                if e > 0 {
                    out.insert(j, e as u32);
                }
            }
            Ok(out)
        }
        let arr = v
            .as_array()
            .ok_or_else(|| CoreError::invalid("polynomial must be an array of terms"))?;
        let mut out = DiffPoly::zero();
        for t in arr {
            let obj = t
                .as_object()
                .ok_or_else(|| CoreError::invalid("term must be an object"))?;
            let coeff = Scalar::from_json(
                obj.get("coeff")
                    .ok_or_else(|| CoreError::invalid("term missing coeff"))?,
            )?;
            let geti = |key: &str| -> Result<i32> {
                match obj.get(key) {
                    None => Ok(0),
                    Some(v) => v
                        .as_i64()
                        .and_then(|n| i32::try_from(n).ok())
                        .ok_or_else(|| CoreError::invalid(format!("{key} must be an integer"))),
                }
            };
            let m = Mono {
                h2h: geti("h2h")?,
                hb2h: geti("hb2h")?,
                h: exp_map(obj.get("h"))?,
                hb: exp_map(obj.get("hb"))?,
            };
            out.add_term(m, coeff);
        }
        Ok(out)
    }
}

impl std::fmt::Display for DiffPoly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.is_unit() {
                    format!("({c})")
                } else {
                    format!("({c})·{m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Free-function aliases for the core ring operations.
pub fn derive(f: &DiffPoly, dir: Dir) -> DiffPoly {
    f.derive(dir)
}

pub fn conjugate(f: &DiffPoly) -> DiffPoly {
    f.conjugate()
}

pub fn jacobi(f: &DiffPoly) -> Result<DiffPoly> {
    f.jacobi()
}

pub fn balanced_form(f: &DiffPoly) -> Result<BalancedForm> {
    f.balanced_form()
}

static TORSION_CACHE: LazyLock<Mutex<BTreeMap<u32, DiffPoly>>> =
    LazyLock::new(|| Mutex::new(BTreeMap::new()));

fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |acc, k| acc * k)
}

/// The torsion `T_j = ∂_ξ̄ h_j`, computed from its closed form and cached.
pub fn torsion(j: u32) -> DiffPoly {
    assert!(j >= 2, "torsion defined for j ≥ 2");
    if j == 2 {
        return DiffPoly::zero();
    }
    let mut cache = TORSION_CACHE.lock().expect("torsion cache poisoned");
    if let Some(t) = cache.get(&j) {
        return t.clone();
    }
    // T_{n+1} with n = j−1 ≥ 2.
    let n = j - 1;
    let mut t = DiffPoly::zero();
    for s in 0..=n - 2 {
        let a = BigRational::new(BigInt::from(n + s + 2), BigInt::from(2))
            * BigRational::new(factorial(n - 1), factorial(n - s - 2) * factorial(s + 2));
        let dxs_r = if s == 0 {
            DiffPoly::curvature()
        } else {
            DiffPoly::h(2 + s).mul(&DiffPoly::hb(2)).neg()
        };
        t.add_assign(
            &DiffPoly::h(n - s)
                .mul(&dxs_r)
                .scale(&Scalar::from_rational(a)),
        );
    }
    cache.insert(j, t.clone());
    t
}

/// The conjugate torsion `T̄_j = ∂_ξ h̄_j`.
pub fn torsion_bar(j: u32) -> DiffPoly {
    torsion(j).conjugate()
}

/// A numeric point of the ring: values for `γ`, the square roots of `h₂`
/// and `h̄₂`, and the normalised variables.
#[derive(Debug, Clone)]
pub struct NumericAssignment {
    pub gamma: Complex64,
    pub sqrt_h2: Complex64,
    pub sqrt_hb2: Complex64,
    pub z: BTreeMap<u32, Complex64>,
    pub zbar: BTreeMap<u32, Complex64>,
}

/// A monomial of the balanced form: `Π z_j^{e_j} · Π z̄_j^{ē_j} · (h₂h̄₂)^{r/2}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ZMono {
    pub z: BTreeMap<u32, u32>,
    pub zbar: BTreeMap<u32, u32>,
    pub r_half: i64,
}

/// A weight-homogeneous element rewritten as
/// `h₂^{p0/2} h̄₂^{q0/2} · Σ c · z^e z̄^ē (h₂h̄₂)^{r/2}` with `r ≥ 0` and the
/// residual exponents `p0`, `q0` minimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedForm {
    pub p0_half: i64,
    pub q0_half: i64,
    pub terms: BTreeMap<ZMono, Scalar>,
}

impl BalancedForm {
    /// `true` when the element lies in the plain polynomial ring
    /// `C[γ][z₃, z₄, …]`: no residual `h₂`/`h̄₂` powers, no barred variables,
    /// no mixed radical.
    pub fn is_z_polynomial(&self) -> bool {
        self.p0_half == 0
            && self.q0_half == 0
            && self
                .terms
                .keys()
                .all(|zm| zm.zbar.is_empty() && zm.r_half == 0)
    }

    /// Spectral weight `Σ (j−2) e_j − Σ (j−2) ē_j`, if shared by all terms.
    pub fn spectral_weight(&self) -> Option<i64> {
        let sw = |zm: &ZMono| -> i64 {
            zm.z
                .iter()
                .map(|(j, e)| (*j as i64 - 2) * *e as i64)
                .sum::<i64>()
                - zm.zbar
                    .iter()
                    .map(|(j, e)| (*j as i64 - 2) * *e as i64)
                    .sum::<i64>()
        };
        let mut it = self.terms.keys();
        let w = sw(it.next()?);
        for zm in it {
            if sw(zm) != w {
                return None;
            }
        }
        Some(w)
    }

    /// Expand back into the differential polynomial ring.
    pub fn to_diff_poly(&self) -> DiffPoly {
        let mut out = DiffPoly::zero();
        for (zm, c) in &self.terms {
            let pz: i64 = zm.z.iter().map(|(j, e)| *j as i64 * *e as i64).sum();
            let qz: i64 = zm.zbar.iter().map(|(j, e)| *j as i64 * *e as i64).sum();
            let m = Mono {
                h2h: (self.p0_half + zm.r_half - pz) as i32,
                hb2h: (self.q0_half + zm.r_half - qz) as i32,
                h: zm.z.clone(),
                hb: zm.zbar.clone(),
            };
            out.add_term(m, c.clone());
        }
        out
    }
}

impl std::fmt::Display for BalancedForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut prefix = Vec::new();
        half_pow("h2", self.p0_half as i32, &mut prefix);
        half_pow("hb2", self.q0_half as i32, &mut prefix);
        let mut body = Vec::new();
        for (zm, c) in &self.terms {
            let mut parts = vec![format!("({c})")];
            for (j, e) in &zm.z {
                parts.push(if *e == 1 {
                    format!("z{j}")
                } else {
                    format!("z{j}^{e}")
                });
            }
            for (j, e) in &zm.zbar {
                parts.push(if *e == 1 {
                    format!("zb{j}")
                } else {
                    format!("zb{j}^{e}")
                });
            }
            half_pow("(h2·hb2)", zm.r_half as i32, &mut parts);
            body.push(parts.join("·"));
        }
        let body = if body.is_empty() {
            "0".to_string()
        } else {
            body.join(" + ")
        };
        if prefix.is_empty() {
            write!(f, "{body}")
        } else {
            write!(f, "{}·[{body}]", prefix.join("·"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma2() -> DiffPoly {
        DiffPoly::constant(Scalar::gamma_pow(2))
    }

    #[test]
    fn torsion_low_orders() {
        assert!(torsion(2).is_zero());
        // T₃ = h₂(γ² − h₂h̄₂)
        let t3 = DiffPoly::h(2).mul(&DiffPoly::curvature());
        assert_eq!(torsion(3), t3);
        // T₄ = (5/2)h₃(γ² − h₂h̄₂) − h₂h₃h̄₂
        let t4 = DiffPoly::h(3)
            .mul(&DiffPoly::curvature())
            .scale_ratio(5, 2)
            .sub(&DiffPoly::h(2).mul(&DiffPoly::h(3)).mul(&DiffPoly::hb(2)));
        assert_eq!(torsion(4), t4);
    }

    #[test]
    fn derivations_on_generators() {
        assert_eq!(DiffPoly::h(2).derive(Dir::Xi), DiffPoly::h(3));
        assert_eq!(DiffPoly::h(3).derive(Dir::Xi), DiffPoly::h(4));
        assert!(DiffPoly::h(2).derive(Dir::XiBar).is_zero());
        assert_eq!(DiffPoly::h(3).derive(Dir::XiBar), torsion(3));
        assert_eq!(DiffPoly::hb(2).derive(Dir::XiBar), DiffPoly::hb(3));
        assert!(DiffPoly::hb(2).derive(Dir::Xi).is_zero());
        // ∂_ξ h₂^{−1/2} = −½ h₂^{−3/2} h₃
        let expect = DiffPoly::h2_half(-3)
            .mul(&DiffPoly::h(3))
            .scale_ratio(-1, 2);
        assert_eq!(DiffPoly::h2_half(-1).derive(Dir::Xi), expect);
    }

    #[test]
    fn xibar_of_z3_is_curvature_over_sqrt_h2() {
        let expect = DiffPoly::h2_half(-1).mul(&DiffPoly::curvature());
        assert_eq!(DiffPoly::z(3).derive(Dir::XiBar), expect);
    }

    #[test]
    fn torsion_matches_curvature_recurrence() {
        // ∂_ξ T_j − T_{j+1} = −(j/2) h_j R, the compatibility constraint the
        // torsion family must satisfy.
        for j in 2..=5 {
            let lhs = torsion(j).derive(Dir::Xi).sub(&torsion(j + 1));
            let rhs = DiffPoly::h(j)
                .mul(&DiffPoly::curvature())
                .scale_ratio(-(j as i64), 2);
            assert_eq!(lhs, rhs, "recurrence fails at j = {j}");
        }
    }

    #[test]
    fn commutator_is_weight_times_curvature() {
        // ∂_ξ∂_ξ̄ − ∂_ξ̄∂_ξ = −½ R W on arbitrary elements.
        let samples = [
            DiffPoly::h(2),
            DiffPoly::h(3).mul(&DiffPoly::hb(4)),
            DiffPoly::h2_half(-3).mul(&DiffPoly::h(3)).add(&DiffPoly::hb(3)),
            DiffPoly::z(3).pow(2).add(&DiffPoly::h(2).mul(&DiffPoly::hb(2))),
        ];
        for f in &samples {
            let lhs = f
                .derive(Dir::XiBar)
                .derive(Dir::Xi)
                .sub(&f.derive(Dir::Xi).derive(Dir::XiBar));
            let rhs = DiffPoly::curvature()
                .mul(&f.weight_split())
                .scale_ratio(-1, 2);
            assert_eq!(lhs, rhs, "commutator mismatch for {f}");
        }
    }

    #[test]
    fn leibniz_rule() {
        let f = DiffPoly::h2_half(-1).mul(&DiffPoly::h(3)).add(&DiffPoly::hb(3));
        let g = DiffPoly::h(4).add(&DiffPoly::hb(2).mul(&DiffPoly::h(2)));
        for dir in [Dir::Xi, Dir::XiBar] {
            let lhs = f.mul(&g).derive(dir);
            let rhs = f.derive(dir).mul(&g).add(&f.mul(&g.derive(dir)));
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn conjugation_involution_and_intertwining() {
        let f = DiffPoly::z(3)
            .scale(&Scalar::i())
            .add(&DiffPoly::h(2).mul(&DiffPoly::hb(4)));
        assert_eq!(f.conjugate().conjugate(), f);
        assert_eq!(
            f.derive(Dir::Xi).conjugate(),
            f.conjugate().derive(Dir::XiBar)
        );
        assert_eq!(torsion_bar(4), torsion(4).conjugate());
    }

    #[test]
    fn weights() {
        assert_eq!(DiffPoly::h(3).weight(), Some(3));
        assert_eq!(DiffPoly::hb(3).weight(), Some(-3));
        assert_eq!(DiffPoly::z(5).weight(), Some(0));
        assert_eq!(DiffPoly::curvature().weight(), Some(0));
        assert_eq!(DiffPoly::h(2).add(&DiffPoly::hb(2)).weight(), None);
        // Derivations shift weight by ±1.
        assert_eq!(DiffPoly::h(3).derive(Dir::Xi).weight(), Some(4));
        assert_eq!(DiffPoly::h(3).derive(Dir::XiBar).weight(), Some(2));
        // W(h₂ + h̄₂) = 2h₂ − 2h̄₂.
        let ws = DiffPoly::h(2).add(&DiffPoly::hb(2)).weight_split();
        let expect = DiffPoly::h(2).scale_ratio(2, 1).sub(&DiffPoly::hb(2).scale_ratio(2, 1));
        assert_eq!(ws, expect);
    }

    #[test]
    fn jacobi_annihilates_z3() {
        assert!(DiffPoly::z(3).jacobi().unwrap().is_zero());
        assert!(matches!(
            DiffPoly::h(3).jacobi(),
            Err(CoreError::Weight(_))
        ));
    }

    #[test]
    fn balanced_form_examples() {
        // z₃ is already balanced and lies in the z-ring.
        let bf = DiffPoly::z(3).balanced_form().unwrap();
        assert_eq!((bf.p0_half, bf.q0_half), (0, 0));
        assert!(bf.is_z_polynomial());
        assert_eq!(bf.spectral_weight(), Some(1));
        assert_eq!(bf.to_diff_poly(), DiffPoly::z(3));

        // h₃h̄₂ = h₂^{3/2} h̄₂ · z₃.
        let f = DiffPoly::h(3).mul(&DiffPoly::hb(2));
        let bf = f.balanced_form().unwrap();
        assert_eq!((bf.p0_half, bf.q0_half), (3, 2));
        assert!(!bf.is_z_polynomial());
        assert_eq!(bf.to_diff_poly(), f);

        // R = γ² − ((h₂h̄₂)^{1/2})², mixed radical present.
        let bf = DiffPoly::curvature().balanced_form().unwrap();
        assert_eq!((bf.p0_half, bf.q0_half), (0, 0));
        assert!(!bf.is_z_polynomial());
        assert_eq!(bf.spectral_weight(), Some(0));
        assert_eq!(bf.to_diff_poly(), DiffPoly::curvature());

        // Mixed weights are rejected.
        assert!(DiffPoly::h(2).add(&DiffPoly::hb(2)).balanced_form().is_err());
    }

    #[test]
    fn numeric_evaluation() {
        let mut a = NumericAssignment {
            gamma: Complex64::new(1.25, 0.0),
            sqrt_h2: Complex64::new(0.8, 0.3),
            sqrt_hb2: Complex64::new(0.4, -0.2),
            z: BTreeMap::new(),
            zbar: BTreeMap::new(),
        };
        a.z.insert(3, Complex64::new(2.0, 1.0));
        // z₃ evaluates to its assigned value.
        let v = DiffPoly::z(3).eval(&a).unwrap();
        assert!((v - Complex64::new(2.0, 1.0)).norm() < 1e-14);
        // h₃ = z₃ (h₂^{1/2})³.
        let v = DiffPoly::h(3).eval(&a).unwrap();
        let expect = Complex64::new(2.0, 1.0) * a.sqrt_h2.powi(3);
        assert!((v - expect).norm() < 1e-14);
        // Missing assignments are reported.
        assert!(DiffPoly::z(4).eval(&a).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let f = torsion(5)
            .add(&DiffPoly::z(3).scale(&Scalar::i()))
            .add(&DiffPoly::constant(Scalar::gamma_pow(-2)));
        let v = f.to_json();
        assert_eq!(DiffPoly::from_json(&v).unwrap(), f);
        let g = gamma2().sub(&DiffPoly::h(2).mul(&DiffPoly::hb(2)));
        assert_eq!(DiffPoly::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn canonical_term_order_is_stable() {
        let f = DiffPoly::h(3)
            .mul(&DiffPoly::hb(4))
            .add(&DiffPoly::h(4).mul(&DiffPoly::hb(3)))
            .add(&DiffPoly::h(2).pow(2))
            .add(&DiffPoly::z(3));
        let keys: Vec<Mono> = f.terms().map(|(m, _)| m.clone()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let s = serde_json::to_string(&f.to_json()).unwrap();
        let f2 = DiffPoly::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&f2.to_json()).unwrap(), s);
    }
}
