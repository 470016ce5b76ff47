//! The formal Killing field tower and its verification suites.
//!
//! A formal Killing field of the frame connection is a twisted `sl(2, C)`
//! loop
//!
//! ```text
//! Y(λ) = [ −i·a(λ)   2·c(λ) ]        a(λ) = Σ_{n≥0} λ^{2n}   a_n
//!        [  2·b(λ)   i·a(λ) ]        b(λ) = Σ_{n≥0} λ^{2n+1} b_n
//!                                    c(λ) = Σ_{n≥0} λ^{2n+1} c_n
//! ```
//!
//! whose coefficients satisfy the six first-order identities
//!
//! ```text
//! ∂_ξ a_n = iγ c_n + ih₂ b_n          ∂_ξ̄ a_n = iγ b_{n−1} + ih̄₂ c_{n−1}
//! ∂_ξ b_n = (iγ/2) a_{n+1}            ∂_ξ̄ b_n = (i/2) h̄₂ a_n
//! ∂_ξ c_n = (i/2) h₂ a_{n+1}          ∂_ξ̄ c_n = (iγ/2) a_n
//! ```
//!
//! Starting from the seeds `a₀ = 0`, `b₀ = −iγ h₂^{−1/2}`, `c₀ = i h₂^{1/2}`,
//! the tower is extended order by order: `a_{N+1}` comes from the `∂_ξ b_N`
//! identity, and `(b_{N+1}, c_{N+1})` solve the 2×2 linear system formed by
//! the `∂_ξ a_{N+1}` identity together with the determinant normalisation
//! `det Y = a² − 4bc = −4γλ²`.  The system's determinant is the unit
//! `2γ h₂^{1/2}`, so the recursion stays inside the exact ring.
//!
//! The same identities are equivalent to the matrix equation
//! `d Y + [α_λ, Y] = 0` for the connection form
//! `α_λ = Φ_ξ ξ + Φ_ξ̄ ξ̄ + Φ_ρ ρ`, which [`frame_residual`] checks
//! coefficient-wise, also for the conjugate tower
//! `Ŷ(λ) = −conj(Y)ᵗ(λ^{−1})` supported in negative degree.

use serde_json::{json, Value};

use crate::diffring::{DiffPoly, Dir};
use crate::error::{CoreError, Result};
use crate::loopalg::{LoopMatrix, Mat, Window, NEG_INF, POS_INF};
use crate::report::{truncate_poly, CheckReport};
use crate::scalar::{GaussQ, Scalar};

/// Constant `(re + im·i)·γ^k` with integer ratio components.
fn sc(re: (i64, i64), im: (i64, i64), k: i64) -> Scalar {
    Scalar::gauss_gamma(
        GaussQ::from_parts(re.0, re.1, im.0, im.1),
        k,
    )
}

/// The recursively constructed tower `(a_n, b_n, c_n)`, `n = 0, …, N`.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingTower {
    order: usize,
    a: Vec<DiffPoly>,
    b: Vec<DiffPoly>,
    c: Vec<DiffPoly>,
}

impl KillingTower {
    /// The order-0 tower holding only the seeds.
    pub fn seed() -> KillingTower {
        KillingTower {
            order: 0,
            a: vec![DiffPoly::zero()],
            b: vec![DiffPoly::h2_half(-1).scale(&sc((0, 1), (-1, 1), 1))],
            c: vec![DiffPoly::h2_half(1).scale(&Scalar::i())],
        }
    }

    /// Build the tower up to order `n`.
    pub fn new(n: usize) -> Result<KillingTower> {
        let mut t = KillingTower::seed();
        for _ in 0..n {
            t.extend()?;
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn a(&self, n: usize) -> Result<&DiffPoly> {
        self.a
            .get(n)
            .ok_or_else(|| CoreError::index(format!("a_{n} beyond tower order {}", self.order)))
    }

    pub fn b(&self, n: usize) -> Result<&DiffPoly> {
        self.b
            .get(n)
            .ok_or_else(|| CoreError::index(format!("b_{n} beyond tower order {}", self.order)))
    }

    pub fn c(&self, n: usize) -> Result<&DiffPoly> {
        self.c
            .get(n)
            .ok_or_else(|| CoreError::index(format!("c_{n} beyond tower order {}", self.order)))
    }

    /// All `a`-entries through the tower order.
    pub fn a_entries(&self) -> &[DiffPoly] {
        &self.a
    }

    /// All `b`-entries through the tower order.
    pub fn b_entries(&self) -> &[DiffPoly] {
        &self.b
    }

    /// All `c`-entries through the tower order.
    pub fn c_entries(&self) -> &[DiffPoly] {
        &self.c
    }

    /// Extend the tower by one order.
    pub fn extend(&mut self) -> Result<()> {
        let n = self.order;
        // a_{n+1} = (2/iγ) ∂_ξ b_n.
        let a_next = self.b[n].derive(Dir::Xi).scale(&sc((0, 1), (-2, 1), -1));
        // The ∂_ξ a_{n+1} identity: iγ c_{n+1} + ih₂ b_{n+1} = r₁.
        let r1 = a_next.derive(Dir::Xi);
        // The λ^{2n+4} coefficient of det Y = −4γλ²:
        // c₀ b_{n+1} + b₀ c_{n+1} = ¼ Σ_{p+q=n+2} a_p a_q − Σ_{p+q=n+1, 1≤p≤n} b_p c_q.
        let mut asum = DiffPoly::zero();
        for p in 1..=n + 1 {
            let q = n + 2 - p;
            let ap = if p == n + 1 { &a_next } else { &self.a[p] };
            let aq = if q == n + 1 { &a_next } else { &self.a[q] };
            asum.add_assign(&ap.mul(aq));
        }
        let mut r2 = asum.scale_ratio(1, 4);
        for p in 1..=n {
            let q = n + 1 - p;
            r2 = r2.sub(&self.b[p].mul(&self.c[q]));
        }
        // Cramer's rule with determinant 2γ h₂^{1/2}.
        let inv_det = DiffPoly::h2_half(-1).scale(&sc((1, 2), (0, 1), -1));
        let i_gamma = sc((0, 1), (1, 1), 1);
        let b_next = r1
            .mul(&self.b[0])
            .sub(&r2.scale(&i_gamma))
            .mul(&inv_det);
        let c_next = DiffPoly::h(2)
            .scale(&Scalar::i())
            .mul(&r2)
            .sub(&self.c[0].mul(&r1))
            .mul(&inv_det);
        debug_assert!(
            DiffPoly::h(2)
                .scale(&Scalar::i())
                .mul(&b_next)
                .add(&c_next.scale(&i_gamma))
                .sub(&r1)
                .is_zero(),
            "linear solve lost the derivative identity"
        );
        debug_assert!(matches!(a_next.weight(), None | Some(0)));
        debug_assert!(matches!(b_next.weight(), None | Some(-1)));
        debug_assert!(matches!(c_next.weight(), None | Some(1)));
        self.a.push(a_next);
        self.b.push(b_next);
        self.c.push(c_next);
        self.order += 1;
        Ok(())
    }

    /// Assemble `Y(λ)`; its window certifies degrees up to `2N+1`.
    pub fn assemble_y(&self) -> LoopMatrix<DiffPoly> {
        let hi = 2 * self.order as i64 + 1;
        let mut y = LoopMatrix::zero(Window::partial(1, POS_INF, NEG_INF, hi), true);
        for n in 0..=self.order {
            let d = 2 * n as i64;
            let diag = Mat::from_fn(|i, j| match (i, j) {
                (0, 0) => self.a[n].scale(&Scalar::i().neg()),
                (1, 1) => self.a[n].scale(&Scalar::i()),
                _ => DiffPoly::zero(),
            });
            if d >= 1 {
                y.set(d, diag);
            }
            let off = Mat::from_fn(|i, j| match (i, j) {
                (0, 1) => self.c[n].scale_ratio(2, 1),
                (1, 0) => self.b[n].scale_ratio(2, 1),
                _ => DiffPoly::zero(),
            });
            y.set(d + 1, off);
        }
        y
    }

    /// The conjugate Killing field `Ŷ(λ) = −conj(Y)ᵗ(λ^{−1})`, supported in
    /// negative degree and certified down to `−(2N+1)`.
    pub fn assemble_y_hat(&self) -> LoopMatrix<DiffPoly> {
        self.assemble_y()
            .map_entries(|p| p.conjugate())
            .transpose()
            .neg()
            .negate_degrees()
    }

    /// The scalar loop `tr Y²`, certified up to degree `2N+2`.
    pub fn trace_square(&self) -> crate::loopalg::LoopMat<DiffPoly, 1> {
        let y = self.assemble_y();
        y.mul(&y).trace_series()
    }

    /// Hamiltonian `H_m = −(1/4i) · tr Y² |_{λ^{2m+2}}`, defined for `m ≤ N`.
    pub fn hamiltonian(&self, m: usize) -> Result<DiffPoly> {
        Ok(self
            .trace_square()
            .value(2 * m as i64 + 2)?
            .scale(&sc((0, 1), (1, 4), 0)))
    }

    /// All Hamiltonians `H_0, …, H_N` from a single traced square.
    pub fn hamiltonians(&self) -> Result<Vec<DiffPoly>> {
        let tr2 = self.trace_square();
        (0..=self.order)
            .map(|m| {
                Ok(tr2
                    .value(2 * m as i64 + 2)?
                    .scale(&sc((0, 1), (1, 4), 0)))
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "order": self.order,
            "a": self.a.iter().map(DiffPoly::to_json).collect::<Vec<_>>(),
            "b": self.b.iter().map(DiffPoly::to_json).collect::<Vec<_>>(),
            "c": self.c.iter().map(DiffPoly::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<KillingTower> {
        let obj = v
            .as_object()
            .ok_or_else(|| CoreError::invalid("tower must be an object"))?;
        let order = obj
            .get("order")
            .and_then(Value::as_u64)
            .ok_or_else(|| CoreError::invalid("tower missing integer 'order'"))? as usize;
        let list = |key: &str| -> Result<Vec<DiffPoly>> {
            let arr = obj
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| CoreError::invalid(format!("tower missing array '{key}'")))?;
            if arr.len() != order + 1 {
                return Err(CoreError::invalid(format!(
                    "tower '{key}' must hold {} entries, found {}",
                    order + 1,
                    arr.len()
                )));
            }
            arr.iter().map(DiffPoly::from_json).collect()
        };
        Ok(KillingTower {
            order,
            a: list("a")?,
            b: list("b")?,
            c: list("c")?,
        })
    }
}

/// Connection coefficient `Φ_ξ = λ^{−1} [[0, −h₂/2], [γ/2, 0]]`.
pub fn phi_xi() -> LoopMatrix<DiffPoly> {
    let m = Mat::from_fn(|i, j| match (i, j) {
        (0, 1) => DiffPoly::h(2).scale_ratio(-1, 2),
        (1, 0) => DiffPoly::constant(sc((1, 2), (0, 1), 1)),
        _ => DiffPoly::zero(),
    });
    LoopMatrix::from_degree(-1, m, true)
}

/// Connection coefficient `Φ_ξ̄ = λ [[0, −γ/2], [h̄₂/2, 0]]`.
pub fn phi_xibar() -> LoopMatrix<DiffPoly> {
    let m = Mat::from_fn(|i, j| match (i, j) {
        (0, 1) => DiffPoly::constant(sc((-1, 2), (0, 1), 1)),
        (1, 0) => DiffPoly::hb(2).scale_ratio(1, 2),
        _ => DiffPoly::zero(),
    });
    LoopMatrix::from_degree(1, m, true)
}

/// Connection coefficient `Φ_ρ = (i/2) diag(1, −1)`.
pub fn phi_rho() -> LoopMatrix<DiffPoly> {
    let m = Mat::from_fn(|i, j| match (i, j) {
        (0, 0) => DiffPoly::constant(sc((0, 1), (1, 2), 0)),
        (1, 1) => DiffPoly::constant(sc((0, 1), (-1, 2), 0)),
        _ => DiffPoly::zero(),
    });
    LoopMatrix::from_degree(0, m, true)
}

/// Frame direction of the matrix Killing equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameDir {
    Xi,
    XiBar,
    Rho,
}

/// Residual of the Killing equation in one frame direction:
///
/// ```text
/// res_ξ  = ∂_ξ M  + [Φ_ξ,  M]
/// res_ξ̄  = ∂_ξ̄ M + [Φ_ξ̄, M]
/// res_ρ  = −i·W(M) + [Φ_ρ, M]
/// ```
///
/// where `W` multiplies every monomial by its grading weight.
pub fn frame_residual(m: &LoopMatrix<DiffPoly>, dir: FrameDir) -> LoopMatrix<DiffPoly> {
    match dir {
        FrameDir::Xi => m
            .map_entries(|p| p.derive(Dir::Xi))
            .add(&phi_xi().bracket(m)),
        FrameDir::XiBar => m
            .map_entries(|p| p.derive(Dir::XiBar))
            .add(&phi_xibar().bracket(m)),
        FrameDir::Rho => m
            .map_entries(|p| p.weight_split())
            .scale(&DiffPoly::constant(Scalar::i().neg()))
            .add(&phi_rho().bracket(m)),
    }
}

fn coeff_report(check: &str, n: i64, residual: &DiffPoly) -> CheckReport {
    CheckReport::from_residual(check, vec![n], residual)
}

/// Verify the six coefficient identities on the whole tower.
///
/// The `ξ`-identities for `b_n`, `c_n` need `a_{n+1}` and therefore run for
/// `n ≤ N−1`; all others run for `n ≤ N`.
pub fn verify_killing(t: &KillingTower) -> Vec<CheckReport> {
    let nn = t.order;
    let i_gamma = sc((0, 1), (1, 1), 1);
    let i_half = sc((0, 1), (1, 2), 0);
    let i_gamma_half = sc((0, 1), (1, 2), 1);
    let mut out = Vec::new();
    for n in 0..=nn {
        // ∂_ξ a_n − iγ c_n − i h₂ b_n
        let r = t.a[n]
            .derive(Dir::Xi)
            .sub(&t.c[n].scale(&i_gamma))
            .sub(&DiffPoly::h(2).scale(&Scalar::i()).mul(&t.b[n]));
        out.push(coeff_report("xi-a", n as i64, &r));
        // ∂_ξ̄ a_n − iγ b_{n−1} − i h̄₂ c_{n−1}
        let r = if n == 0 {
            t.a[0].derive(Dir::XiBar)
        } else {
            t.a[n]
                .derive(Dir::XiBar)
                .sub(&t.b[n - 1].scale(&i_gamma))
                .sub(&DiffPoly::hb(2).scale(&Scalar::i()).mul(&t.c[n - 1]))
        };
        out.push(coeff_report("xibar-a", n as i64, &r));
        // ∂_ξ̄ b_n − (i/2) h̄₂ a_n
        let r = t.b[n]
            .derive(Dir::XiBar)
            .sub(&DiffPoly::hb(2).scale(&i_half).mul(&t.a[n]));
        out.push(coeff_report("xibar-b", n as i64, &r));
        // ∂_ξ̄ c_n − (iγ/2) a_n
        let r = t.c[n]
            .derive(Dir::XiBar)
            .sub(&t.a[n].scale(&i_gamma_half));
        out.push(coeff_report("xibar-c", n as i64, &r));
        if n < nn {
            // ∂_ξ b_n − (iγ/2) a_{n+1}
            let r = t.b[n]
                .derive(Dir::Xi)
                .sub(&t.a[n + 1].scale(&i_gamma_half));
            out.push(coeff_report("xi-b", n as i64, &r));
            // ∂_ξ c_n − (i/2) h₂ a_{n+1}
            let r = t.c[n]
                .derive(Dir::Xi)
                .sub(&DiffPoly::h(2).scale(&i_half).mul(&t.a[n + 1]));
            out.push(coeff_report("xi-c", n as i64, &r));
        }
    }
    out
}

fn matrix_report<const N: usize>(
    check: &str,
    residual: &crate::loopalg::LoopMat<DiffPoly, N>,
    lo: i64,
    hi: i64,
) -> Result<CheckReport> {
    crate::report::matrix_report(check, vec![lo, hi], residual, lo, hi)
}

/// Verify the matrix Killing equation for `Y` and `Ŷ` in all three frame
/// directions, on every degree their windows certify.
pub fn verify_matrix_killing(t: &KillingTower) -> Result<Vec<CheckReport>> {
    let nn = t.order as i64;
    let y = t.assemble_y();
    let yh = t.assemble_y_hat();
    let mut out = Vec::new();
    let cases: [(&str, &LoopMatrix<DiffPoly>, FrameDir, i64, i64); 6] = [
        ("matrix-xi-y", &y, FrameDir::Xi, 0, 2 * nn),
        ("matrix-xibar-y", &y, FrameDir::XiBar, 1, 2 * nn + 1),
        ("matrix-rho-y", &y, FrameDir::Rho, 1, 2 * nn + 1),
        ("matrix-xi-yhat", &yh, FrameDir::Xi, -2 * nn - 1, -1),
        ("matrix-xibar-yhat", &yh, FrameDir::XiBar, -2 * nn, 0),
        ("matrix-rho-yhat", &yh, FrameDir::Rho, -2 * nn - 1, -1),
    ];
    for (name, m, dir, lo, hi) in cases {
        let res = frame_residual(m, dir);
        out.push(matrix_report(name, &res, lo, hi)?);
    }
    Ok(out)
}

/// Verify that every `a_n` is annihilated by the Jacobi operator.
pub fn verify_jacobi(t: &KillingTower) -> Result<Vec<CheckReport>> {
    (0..=t.order)
        .map(|n| {
            let e = t.a[n].jacobi()?;
            Ok(coeff_report("jacobi-a", n as i64, &e))
        })
        .collect()
}

/// The level-`n` conservation 1-form `φⁿ = P ξ + Q ξ̄` built from the tower:
/// `P = c_n` and `Q = b_{n−1}` (with `Q = 0` at the bottom level).  Closedness
/// of `φⁿ` is the scalar identity `∂_ξ Q = ∂_ξ̄ P`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationForm {
    pub n: usize,
    pub p: DiffPoly,
    pub q: DiffPoly,
}

impl ConservationForm {
    /// The closedness residual `∂_ξ Q − ∂_ξ̄ P`, the zero polynomial for a
    /// valid tower.
    pub fn closedness_residual(&self) -> DiffPoly {
        self.q.derive(Dir::Xi).sub(&self.p.derive(Dir::XiBar))
    }
}

/// Extract the level-`n` conservation form and check its closedness.
pub fn conservation(t: &KillingTower, n: usize) -> Result<(ConservationForm, CheckReport)> {
    let p = t.c(n)?.clone();
    let q = if n == 0 {
        DiffPoly::zero()
    } else {
        t.b(n - 1)?.clone()
    };
    let form = ConservationForm { n, p, q };
    let report = coeff_report("conservation-closed", n as i64, &form.closedness_residual());
    Ok((form, report))
}

/// Verify the spectral normalisations and conservation laws: `det Y = −4γλ²`
/// on the certified band, `H₀ = 2iγ`, `H_m = 0` for `m ≥ 1`, closedness of
/// every conservation form `φⁿ`, and ring membership — each `a_n` (`n ≥ 1`)
/// is a polynomial in the normalised variables `z_j` with strictly
/// increasing spectral weight, and the rescalings `h₂^{1/2} b_n`,
/// `h₂^{−1/2} c_n` are `z`-polynomials as well.
pub fn verify_conservation(t: &KillingTower) -> Result<Vec<CheckReport>> {
    let nn = t.order as i64;
    let mut out = Vec::new();

    let y = t.assemble_y();
    let det = y.det_series();
    let expected = crate::loopalg::LoopMat::<DiffPoly, 1>::from_degree(
        2,
        Mat::from_fn(|_, _| DiffPoly::constant(sc((-4, 1), (0, 1), 1))),
        false,
    );
    out.push(matrix_report("det-y", &det.sub(&expected), 2, 2 * nn + 2)?);

    for (m, h) in t.hamiltonians()?.into_iter().enumerate() {
        let expect = if m == 0 {
            DiffPoly::constant(sc((0, 1), (2, 1), 1))
        } else {
            DiffPoly::zero()
        };
        out.push(coeff_report("hamiltonian", m as i64, &h.sub(&expect)));
    }

    for n in 0..=t.order {
        let (_, report) = conservation(t, n)?;
        out.push(report);
    }

    let mut last_weight = None;
    for n in 1..=t.order {
        let bf = t.a[n].balanced_form()?;
        let member = bf.is_z_polynomial();
        let sw = bf.spectral_weight();
        let increasing = match (last_weight, sw) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(prev), Some(cur)) => cur > prev,
        };
        if member && increasing {
            out.push(CheckReport::pass("a-z-polynomial", vec![n as i64]));
        } else {
            out.push(CheckReport::fail(
                "a-z-polynomial",
                vec![n as i64],
                format!("z-member: {member}, spectral weight {sw:?} after {last_weight:?}"),
            ));
        }
        last_weight = sw;
    }

    for n in 0..=t.order {
        for (name, entry, half_steps) in [
            ("b-z-polynomial", &t.b[n], 1),
            ("c-z-polynomial", &t.c[n], -1),
        ] {
            let rescaled = entry.mul(&DiffPoly::h2_half(half_steps));
            if rescaled.balanced_form()?.is_z_polynomial() {
                out.push(CheckReport::pass(name, vec![n as i64]));
            } else {
                out.push(CheckReport::fail(
                    name,
                    vec![n as i64],
                    format!("rescaled entry left C[z]: {}", truncate_poly(&rescaled)),
                ));
            }
        }
    }
    Ok(out)
}
