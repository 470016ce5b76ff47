//! Exact scalar arithmetic: Gaussian rationals extended by the transcendental
//! mean-curvature parameter `γ`.
//!
//! A [`Scalar`] is a fraction `p(γ) / γ^k` where `p` is a polynomial in `γ`
//! with Gaussian-rational coefficients.  Every division performed by this
//! crate divides by a unit whose numerator is a single Gaussian-rational
//! multiple of a power of `γ` (seeds like `2γ`, normalisations like `2i`),
//! so monomial denominators are closed under all arithmetic that occurs.
//! The fraction is kept reduced: either `k = 0` or the constant coefficient
//! of `p` is nonzero, and the denominator `γ^k` is monic by construction.
//!
//! Equality is structural on the reduced form, which makes it decidable and
//! cheap; `γ` is treated as transcendental (no relation `q(γ) = 0` is ever
//! used).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{CoreError, Result};

/// A Gaussian rational `re + im·i` with arbitrary-precision components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaussQ {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussQ {
    pub fn zero() -> Self {
        GaussQ {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussQ {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussQ {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GaussQ {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        GaussQ {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        GaussQ {
            re: r,
            im: BigRational::zero(),
        }
    }

    /// `(re_num/re_den) + (im_num/im_den)·i`.
    pub fn from_parts(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Self {
        assert!(re_den != 0 && im_den != 0, "zero denominator");
        GaussQ {
            re: BigRational::new(BigInt::from(re_num), BigInt::from(re_den)),
            im: BigRational::new(BigInt::from(im_num), BigInt::from(im_den)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, o: &GaussQ) -> GaussQ {
        GaussQ {
            re: &self.re + &o.re,
            im: &self.im + &o.im,
        }
    }

    pub fn sub(&self, o: &GaussQ) -> GaussQ {
        GaussQ {
            re: &self.re - &o.re,
            im: &self.im - &o.im,
        }
    }

    pub fn mul(&self, o: &GaussQ) -> GaussQ {
        GaussQ {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    pub fn neg(&self) -> GaussQ {
        GaussQ {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Complex conjugate `re − im·i`.
    pub fn conj(&self) -> GaussQ {
        GaussQ {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<GaussQ> {
        let norm = &self.re * &self.re + &self.im * &self.im;
        if norm.is_zero() {
            return Err(CoreError::NonUnitDivisor("division by zero".into()));
        }
        Ok(GaussQ {
            re: &self.re / &norm,
            im: -(&self.im / &norm),
        })
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl std::fmt::Display for GaussQ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}{}i)", self.re, self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

/// A reduced fraction `p(γ) / γ^k` over the Gaussian rationals.
///
/// `num` stores the coefficients of `p` in ascending γ-degree with no
/// trailing zero; the zero scalar is `num = []`, `den_pow = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scalar {
    num: Vec<GaussQ>,
    den_pow: u32,
}

impl Scalar {
    fn normalized(mut num: Vec<GaussQ>, mut den_pow: u32) -> Scalar {
        while num.last().is_some_and(|c| c.is_zero()) {
            num.pop();
        }
        if num.is_empty() {
            return Scalar {
                num,
                den_pow: 0,
            };
        }
        // Strip the common power of γ between numerator and denominator.
        let val = num.iter().take_while(|c| c.is_zero()).count() as u32;
        let strip = val.min(den_pow);
        if strip > 0 {
            num.drain(0..strip as usize);
            den_pow -= strip;
        }
        Scalar { num, den_pow }
    }

    pub fn zero() -> Scalar {
        Scalar {
            num: Vec::new(),
            den_pow: 0,
        }
    }

    pub fn one() -> Scalar {
        Scalar::from_gauss(GaussQ::one())
    }

    /// The imaginary unit.
    pub fn i() -> Scalar {
        Scalar::from_gauss(GaussQ::i())
    }

    pub fn from_gauss(g: GaussQ) -> Scalar {
        Scalar::normalized(vec![g], 0)
    }

    pub fn from_int(n: i64) -> Scalar {
        Scalar::from_gauss(GaussQ::from_int(n))
    }

    pub fn from_ratio(num: i64, den: i64) -> Scalar {
        Scalar::from_gauss(GaussQ::from_ratio(num, den))
    }

    pub fn from_rational(r: BigRational) -> Scalar {
        Scalar::from_gauss(GaussQ::from_rational(r))
    }

    /// `(re_num/re_den) + (im_num/im_den)·i` as a constant scalar.
    pub fn gauss(re_num: i64, re_den: i64, im_num: i64, im_den: i64) -> Scalar {
        Scalar::from_gauss(GaussQ::from_parts(re_num, re_den, im_num, im_den))
    }

    /// The transcendental `γ`.
    pub fn gamma() -> Scalar {
        Scalar {
            num: vec![GaussQ::zero(), GaussQ::one()],
            den_pow: 0,
        }
    }

    /// `γ^k` for any integer `k` (negative exponents produce denominators).
    pub fn gamma_pow(k: i64) -> Scalar {
        if k >= 0 {
            let mut num = vec![GaussQ::zero(); k as usize];
            num.push(GaussQ::one());
            Scalar { num, den_pow: 0 }
        } else {
            Scalar {
                num: vec![GaussQ::one()],
                den_pow: (-k) as u32,
            }
        }
    }

    /// `g·γ^k` in one step.
    pub fn gauss_gamma(g: GaussQ, k: i64) -> Scalar {
        Scalar::gamma_pow(k).mul(&Scalar::from_gauss(g))
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.den_pow == 0 && self.num.len() == 1 && self.num[0] == GaussQ::one()
    }

    pub fn add(&self, o: &Scalar) -> Scalar {
        let k = self.den_pow.max(o.den_pow);
        let mut num = vec![GaussQ::zero(); 0];
        let shift_a = (k - self.den_pow) as usize;
        let shift_b = (k - o.den_pow) as usize;
        let len = (self.num.len() + shift_a).max(o.num.len() + shift_b);
        num.resize(len, GaussQ::zero());
        for (i, c) in self.num.iter().enumerate() {
            num[i + shift_a] = num[i + shift_a].add(c);
        }
        for (i, c) in o.num.iter().enumerate() {
            num[i + shift_b] = num[i + shift_b].add(c);
        }
        Scalar::normalized(num, k)
    }

    pub fn sub(&self, o: &Scalar) -> Scalar {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Scalar {
        Scalar {
            num: self.num.iter().map(GaussQ::neg).collect(),
            den_pow: self.den_pow,
        }
    }

    pub fn mul(&self, o: &Scalar) -> Scalar {
        if self.is_zero() || o.is_zero() {
            return Scalar::zero();
        }
        let mut num = vec![GaussQ::zero(); self.num.len() + o.num.len() - 1];
        for (i, a) in self.num.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.num.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                num[i + j] = num[i + j].add(&a.mul(b));
            }
        }
        Scalar::normalized(num, self.den_pow + o.den_pow)
    }

    /// Formal conjugation: conjugates every coefficient, fixes `γ`.
    pub fn conj(&self) -> Scalar {
        Scalar {
            num: self.num.iter().map(GaussQ::conj).collect(),
            den_pow: self.den_pow,
        }
    }

    /// Inverse of a scalar whose numerator is a single γ-monomial.
    ///
    /// This is the only inversion the library needs; a non-monomial numerator
    /// is reported as a non-unit.
    pub fn try_inv(&self) -> Result<Scalar> {
        if self.is_zero() {
            return Err(CoreError::NonUnitDivisor("division by zero scalar".into()));
        }
        let nonzero: Vec<usize> = self
            .num
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect();
        if nonzero.len() != 1 {
            return Err(CoreError::NonUnitDivisor(format!(
                "scalar {self} is not a γ-monomial"
            )));
        }
        let j = nonzero[0];
        let c_inv = self.num[j].inv()?;
        // (c γ^j / γ^k)^{-1} = (1/c) γ^{k-j}.
        Ok(Scalar::gauss_gamma(c_inv, self.den_pow as i64 - j as i64))
    }

    pub fn div(&self, o: &Scalar) -> Result<Scalar> {
        Ok(self.mul(&o.try_inv()?))
    }

    /// Multiply by an integer ratio — a very common rescaling.
    pub fn scale_ratio(&self, num: i64, den: i64) -> Scalar {
        self.mul(&Scalar::from_ratio(num, den))
    }

    /// Evaluate at a numeric `γ`.
    pub fn eval(&self, gamma: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.num.iter().rev() {
            acc = acc * gamma + c.to_complex();
        }
        if self.den_pow > 0 {
            acc /= gamma.powi(self.den_pow as i32);
        }
        acc
    }

    /// Substitute a nonzero rational value for `γ`, producing a constant.
    pub fn substitute_gamma(&self, gamma: &BigRational) -> Result<Scalar> {
        if self.den_pow > 0 && gamma.is_zero() {
            return Err(CoreError::invalid("γ = 0 substituted into a γ-denominator"));
        }
        let mut acc = GaussQ::zero();
        for c in self.num.iter().rev() {
            acc = GaussQ {
                re: &acc.re * gamma,
                im: &acc.im * gamma,
            }
            .add(c);
        }
        let mut den = BigRational::one();
        for _ in 0..self.den_pow {
            den *= gamma;
        }
        Ok(Scalar::from_gauss(GaussQ {
            re: acc.re / &den,
            im: acc.im / &den,
        }))
    }

    /// `true` when the scalar does not involve `γ`.
    pub fn is_constant(&self) -> bool {
        self.den_pow == 0 && self.num.len() <= 1
    }

    /// Canonical JSON form.
    ///
    /// γ-free scalars serialize as `{"re": "p/q", "im": "p/q"}`; γ-dependent
    /// ones as `{"gamma": [[re, im], …], "gamma_den": [[re, im], …]}` with
    /// coefficient lists in ascending degree and a monic denominator.
    pub fn to_json(&self) -> Value {
        fn pair(c: &GaussQ) -> Value {
            json!([c.re.to_string(), c.im.to_string()])
        }
        if self.is_constant() {
            let c = self.num.first().cloned().unwrap_or_else(GaussQ::zero);
            json!({"re": c.re.to_string(), "im": c.im.to_string()})
        } else {
            let mut den = vec![GaussQ::zero(); self.den_pow as usize];
            den.push(GaussQ::one());
            json!({
                "gamma": self.num.iter().map(pair).collect::<Vec<_>>(),
                "gamma_den": den.iter().map(pair).collect::<Vec<_>>(),
            })
        }
    }

    pub fn from_json(v: &Value) -> Result<Scalar> {
        fn rat(s: &Value) -> Result<BigRational> {
            let s = s
                .as_str()
                .ok_or_else(|| CoreError::invalid("rational must be a string"))?;
            s.parse::<BigRational>()
                .map_err(|e| CoreError::invalid(format!("bad rational {s:?}: {e}")))
        }
        fn poly(v: &Value) -> Result<Vec<GaussQ>> {
            let arr = v
                .as_array()
                .ok_or_else(|| CoreError::invalid("γ-coefficients must be an array"))?;
            arr.iter()
                .map(|p| {
                    let pair = p
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| CoreError::invalid("γ-coefficient must be [re, im]"))?;
                    Ok(GaussQ {
                        re: rat(&pair[0])?,
                        im: rat(&pair[1])?,
                    })
                })
                .collect()
        }
        let obj = v
            .as_object()
            .ok_or_else(|| CoreError::invalid("scalar must be an object"))?;
        if let (Some(re), Some(im)) = (obj.get("re"), obj.get("im")) {
            return Ok(Scalar::from_gauss(GaussQ {
                re: rat(re)?,
                im: rat(im)?,
            }));
        }
        let num = poly(
            obj.get("gamma")
                .ok_or_else(|| CoreError::invalid("scalar missing re/im or gamma"))?,
        )?;
        let den = poly(
            obj.get("gamma_den")
                .ok_or_else(|| CoreError::invalid("scalar missing gamma_den"))?,
        )?;
        // The serialized denominator is always a monic γ-power.
        let den_pow = den.len().saturating_sub(1) as u32;
        let ok = den.last().is_some_and(|c| *c == GaussQ::one())
            && den[..den.len().saturating_sub(1)].iter().all(|c| c.is_zero());
        if !ok {
            return Err(CoreError::invalid("denominator must be a monic power of γ"));
        }
        Ok(Scalar::normalized(num, den_pow))
    }
}

impl std::fmt::Display for Scalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (k, c) in self.num.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let p = match k {
                0 => format!("{c}"),
                1 => format!("{c}·γ"),
                _ => format!("{c}·γ^{k}"),
            };
            parts.push(p);
        }
        let num = parts.join(" + ");
        match self.den_pow {
            0 => write!(f, "{num}"),
            1 => write!(f, "({num})/γ"),
            k => write!(f, "({num})/γ^{k}"),
        }
    }
}
