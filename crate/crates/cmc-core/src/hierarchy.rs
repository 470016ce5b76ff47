//! Commuting flows generated by spectral projections of the Killing field.
//!
//! Shifting the formal Killing field `Y` down by an even power of the loop
//! parameter and keeping the strictly negative part yields the generator of
//! the `m`-th flow,
//!
//! ```text
//!     U_m = (1/2i) · (λ^{-2m-2} Y)_{≤ -1},
//! ```
//!
//! a fully banded twisted loop matrix supported on `[-2m-1, -1]`.  The
//! complementary projection `U_(m+1) = (1/2i) · (λ^{-2m-2} Y)_{≥ 0}` opens
//! with the diagonal coefficient `-½ a_{m+1} H` at `λ⁰` (`H = diag(1,-1)`),
//! and because `λ^{-2m-2} Y` commutes with `Y` the flow can be written with
//! either half:
//!
//! ```text
//!     ∂_{t_m} Y = -[U_m, Y] = [U_(m+1), Y].
//! ```
//!
//! The right-hand side therefore has no components in degrees `≤ 0` — the
//! "leak" `(-[U_m, Y])_{≤ 0}` vanishes identically — and differentiates the
//! tower entries level by level: `ȧ_n` sits at `λ^{2n}` and `ḃ_n`, `ċ_n` at
//! `λ^{2n+1}`.  For `m = 0` the flow reproduces the `ξ`-direction,
//! `∂_{t_0} = -2 h₂^{-1/2} ∂_ξ`, which is the tangency statement
//! `U_0 · (-½ h₂^{1/2}) = Φ_ξ` in disguise.
//!
//! The conjugate field `Ŷ` carries the barred half of the hierarchy through
//! `Ūᵗ_n = (1/2i) · (λ^{2n+2} Ŷ)_{≥ 1}`, with `∂_{t_m} Ŷ = -[U_m, Ŷ]` and
//! `∂_{t̄_n} Y = [Ūᵗ_n, Y]`.  The structural identities verified here are:
//!
//! * **commutation** — `∂_{t_m} U_ℓ - ∂_{t_ℓ} U_m + [U_m, U_ℓ] = 0` on the
//!   full band `[-2(m+ℓ+1), -1]`;
//! * **antisymmetry** — the scalar flows agree across the diagonal,
//!   `∂_{t_m} a_{ℓ+1} = ∂_{t_ℓ} a_{m+1}`;
//! * **split square** — expanding `[λ^{-2m-2} Y, λ^{-2ℓ-2} Y] = 0` into the
//!   four projection brackets;
//! * **mixed curvature** — `∂_{t_m} Ūᵗ_n + ∂_{t̄_n} U_m` cancels the
//!   off-level part of `[U_m, Ūᵗ_n]`; the `λ⁰` part survives and is a
//!   multiple `η_{mn} H` of the Cartan generator.  For `(m, n) = (0, 0)`,
//!   `η₀₀ = (h₂h̄₂)^{1/2} - γ² (h₂h̄₂)^{-1/2}` and `κ₀₀ = -2i η₀₀` satisfies
//!   `κ₀₀ · ¼ (h₂h̄₂)^{1/2} = (i/2)(γ² - h₂h̄₂)`, recovering the curvature of
//!   the underlying metric;
//! * **generating series** — pairing `Y` against the `λ`-Euler derivative of
//!   a frame component collapses the first-order structure identities into
//!   trace identities, e.g. `tr(Y · λ∂_λ Φ_ξ)|_{2n} + i ∂_ξ a_n + 2γ c_n = 0`.
//!   The `ρ`-component contributes identically zero since the Euler operator
//!   kills degree-zero forms.
//!
//! Finally, a numeric datum is *finite type at level `n₀`* when the
//! `(n₀)`-th flow fixes the metric coefficient, i.e. `∂_{t_{n₀}} h₂ =
//! -2 h₂ a_{n₀+1}` evaluates to zero.  The vacuum datum (all `z_j = 0`) is
//! finite type at every level; a generic datum with `z₃ ≠ 0` is not.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::diffring::{derive, DiffPoly, Dir, NumericAssignment};
use crate::error::{CoreError, Result};
use crate::killing::{phi_rho, phi_xi, phi_xibar, KillingTower};
use crate::loopalg::{Coeff, LoopMat, LoopMatrix, Mat};
use crate::report::{matrix_band_report, matrix_report, truncate_poly, CheckReport};
use crate::scalar::{GaussQ, Scalar};

/// Multiply by the shared projection normalisation `1/(2i) = -i/2`.
fn half_over_i<R: Coeff, const N: usize>(m: &LoopMat<R, N>) -> LoopMat<R, N> {
    m.scale_gauss((0, 1), (-1, 2))
}

fn check_level(t: &KillingTower, m: usize, what: &str) -> Result<()> {
    if m > t.order() {
        return Err(CoreError::index(format!(
            "{what} {m} exceeds tower order {}",
            t.order()
        )));
    }
    Ok(())
}

/// The flow generator `U_m = (1/2i) · (λ^{-2m-2} Y)_{≤ -1}`, a fully known
/// twisted band on `[-2m-1, -1]`.
pub fn u_coefficient(t: &KillingTower, m: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, m, "flow level")?;
    let y = t.assemble_y();
    Ok(half_over_i(&y.shift(-2 * m as i64 - 2).project_le(-1)))
}

/// The complementary projection `U_(m+1) = (1/2i) · (λ^{-2m-2} Y)_{≥ 0}`.
/// Its `λ⁰` coefficient is `-½ a_{m+1} · diag(1,-1)`; coefficients above the
/// tower truncation remain uncertified.
pub fn u_complement(t: &KillingTower, m: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, m, "flow level")?;
    let y = t.assemble_y();
    Ok(half_over_i(&y.shift(-2 * m as i64 - 2).project_ge(0)))
}

/// The conjugate flow generator `Ūᵗ_n = (1/2i) · (λ^{2n+2} Ŷ)_{≥ 1}`, a fully
/// known twisted band on `[1, 2n+1]`.
pub fn ubar_t(t: &KillingTower, n: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, n, "conjugate flow level")?;
    let yh = t.assemble_y_hat();
    Ok(half_over_i(&yh.shift(2 * n as i64 + 2).project_ge(1)))
}

/// Split the Lax right-hand side `-[u, y]` into the flow part (degrees
/// `≥ 1`) and the leak (degrees `≤ 0`).  The leak must vanish identically:
/// `-[U_m, Y]` equals `[U_(m+1), Y]`, which is supported in degrees `≥ 1`.
pub fn aks_rhs<R: Coeff>(
    u: &LoopMat<R, 2>,
    y: &LoopMat<R, 2>,
) -> (LoopMat<R, 2>, LoopMat<R, 2>) {
    let full = u.bracket(y).neg();
    (full.project_ge(1), full.project_le(0))
}

/// Tower derivatives along the `m`-th flow: `ȧ_n` for `n ≤ N-m` and `ḃ_n`,
/// `ċ_n` for `n ≤ N-m-1`, read off from `∂_{t_m} Y = -[U_m, Y]`.
#[derive(Debug, Clone)]
pub struct TDerivative {
    pub m: usize,
    pub a_dot: Vec<DiffPoly>,
    pub b_dot: Vec<DiffPoly>,
    pub c_dot: Vec<DiffPoly>,
}

/// Differentiate the tower along the `m`-th flow.  The assembled bracket is
/// certified through `λ^{2(N-m)}`, which is exactly enough for the listed
/// levels.
pub fn t_derivative(t: &KillingTower, m: usize) -> Result<TDerivative> {
    check_level(t, m, "flow level")?;
    let order = t.order();
    let (rhs, _) = aks_rhs(&u_coefficient(t, m)?, &t.assemble_y());
    let mut a_dot = Vec::with_capacity(order - m + 1);
    for n in 0..=(order - m) {
        let comp = rhs.component(2 * n as i64)?;
        debug_assert!(
            comp.e[1][1].add(&comp.e[0][0]).is_zero(),
            "flow bracket must be traceless"
        );
        a_dot.push(comp.e[0][0].scale(&Scalar::i()));
    }
    let mut b_dot = Vec::new();
    let mut c_dot = Vec::new();
    for n in 0..(order - m) {
        let comp = rhs.component(2 * n as i64 + 1)?;
        b_dot.push(comp.e[1][0].scale_ratio(1, 2));
        c_dot.push(comp.e[0][1].scale_ratio(1, 2));
    }
    Ok(TDerivative { m, a_dot, b_dot, c_dot })
}

/// `∂_{t_m} U_ℓ`, obtained by projecting the flow of `Y`:
/// `(1/2i) (λ^{-2ℓ-2} · (-[U_m, Y]))_{≤ -1}`.  Fully certified on its band
/// `[-2(m+ℓ+1), -1]` exactly when `N ≥ m+ℓ+1`.
pub fn t_derivative_u(t: &KillingTower, m: usize, ell: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, ell, "flow level")?;
    let full = u_coefficient(t, m)?.bracket(&t.assemble_y()).neg();
    Ok(half_over_i(&full.shift(-2 * ell as i64 - 2).project_le(-1)))
}

/// `∂_{t_m} Ūᵗ_n = (1/2i) (λ^{2n+2} · (-[U_m, Ŷ]))_{≥ 1}`, a fully certified
/// band on `[1, 2n]`.
pub fn t_derivative_ubar(t: &KillingTower, m: usize, n: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, n, "conjugate flow level")?;
    let full = u_coefficient(t, m)?.bracket(&t.assemble_y_hat()).neg();
    Ok(half_over_i(&full.shift(2 * n as i64 + 2).project_ge(1)))
}

/// `∂_{t̄_n} U_m = (1/2i) (λ^{-2m-2} · [Ūᵗ_n, Y])_{≤ -1}`, a fully certified
/// band on `[-2m, -1]`.  For `m = 0` the band is empty: `U_0` is static
/// along every conjugate flow.
pub fn tbar_derivative_u(t: &KillingTower, n: usize, m: usize) -> Result<LoopMatrix<DiffPoly>> {
    check_level(t, m, "flow level")?;
    let full = ubar_t(t, n)?.bracket(&t.assemble_y());
    Ok(half_over_i(&full.shift(-2 * m as i64 - 2).project_le(-1)))
}

fn bool_report(check: &str, indices: Vec<i64>, mismatch: Option<String>) -> CheckReport {
    match mismatch {
        None => CheckReport::pass(check, indices),
        Some(sample) => CheckReport::fail(check, indices, sample),
    }
}

/// Verify the Lax flow at level `m`: the leak vanishes, the pairing
/// `tr(Y Ẏ + Ẏ Y)` vanishes (so every Hamiltonian is conserved along the
/// flow), `ȧ_0 = 0`, and for `m = 0` the flow acts as `-2 h₂^{-1/2} ∂_ξ` on
/// every tower entry.
pub fn verify_aks_flow(t: &KillingTower, m: usize) -> Result<Vec<CheckReport>> {
    check_level(t, m, "flow level")?;
    let y = t.assemble_y();
    let (rhs, leak) = aks_rhs(&u_coefficient(t, m)?, &y);
    let idx = vec![m as i64];
    let mut reports = Vec::new();
    reports.push(matrix_band_report("aks-leak", idx.clone(), &leak)?);
    let sym = y.mul(&rhs).add(&rhs.mul(&y));
    reports.push(matrix_band_report(
        "aks-trace-flow",
        idx.clone(),
        &sym.trace_series(),
    )?);
    let dots = t_derivative(t, m)?;
    reports.push(CheckReport::from_residual(
        "aks-a0-static",
        idx.clone(),
        &dots.a_dot[0],
    ));
    if m == 0 {
        let fac = DiffPoly::h2_half(-1).scale_ratio(-2, 1);
        let mut mismatch = None;
        'outer: for (name, dotted) in [
            ("a", &dots.a_dot),
            ("b", &dots.b_dot),
            ("c", &dots.c_dot),
        ] {
            for (n, dot) in dotted.iter().enumerate() {
                let orig = match name {
                    "a" => t.a(n)?,
                    "b" => t.b(n)?,
                    _ => t.c(n)?,
                };
                let r = dot.sub(&fac.mul(&derive(orig, Dir::Xi)));
                if !r.is_zero() {
                    mismatch = Some(format!("{name}[{n}]: {}", truncate_poly(&r)));
                    break 'outer;
                }
            }
        }
        reports.push(bool_report(
            "t0-xi-direction",
            vec![t.order() as i64],
            mismatch,
        ));
    }
    Ok(reports)
}

/// Verify that the flows at levels `m` and `ℓ` commute:
/// `∂_{t_m} U_ℓ - ∂_{t_ℓ} U_m + [U_m, U_ℓ] = 0` on `[-2(m+ℓ+1), -1]`.
/// Requires `N ≥ m+ℓ+1` for the band to be certified.
pub fn verify_commuting(t: &KillingTower, m: usize, ell: usize) -> Result<CheckReport> {
    let residual = t_derivative_u(t, m, ell)?
        .sub(&t_derivative_u(t, ell, m)?)
        .add(&u_coefficient(t, m)?.bracket(&u_coefficient(t, ell)?));
    let lo = -2 * (m as i64 + ell as i64 + 1);
    matrix_report(
        "t-flows-commute",
        vec![m as i64, ell as i64],
        &residual,
        lo,
        -1,
    )
}

/// Verify the scalar antisymmetry `∂_{t_m} a_{ℓ+1} = ∂_{t_ℓ} a_{m+1}`.
/// Requires `m + ℓ + 1 ≤ N`.
pub fn verify_antisymmetry(t: &KillingTower, m: usize, ell: usize) -> Result<CheckReport> {
    if m + ell + 1 > t.order() {
        return Err(CoreError::index(format!(
            "flow antisymmetry at ({m}, {ell}) needs tower order at least {}",
            m + ell + 1
        )));
    }
    let dm = t_derivative(t, m)?;
    let dl = t_derivative(t, ell)?;
    let r = dm.a_dot[ell + 1].sub(&dl.a_dot[m + 1]);
    Ok(CheckReport::from_residual(
        "flow-antisymmetry",
        vec![m as i64, ell as i64],
        &r,
    ))
}

/// Verify the four-bracket expansion of `[λ^{-2m-2} Y, λ^{-2ℓ-2} Y] = 0`:
/// `[U_m, U_ℓ] + [U_m, U_(ℓ+1)] + [U_(m+1), U_ℓ] + [U_(m+1), U_(ℓ+1)] = 0`
/// over the certified band of the sum.
pub fn verify_y2(t: &KillingTower, m: usize, ell: usize) -> Result<CheckReport> {
    let um = u_coefficient(t, m)?;
    let ul = u_coefficient(t, ell)?;
    let vm = u_complement(t, m)?;
    let vl = u_complement(t, ell)?;
    let sum = um
        .bracket(&ul)
        .add(&um.bracket(&vl))
        .add(&vm.bracket(&ul))
        .add(&vm.bracket(&vl));
    matrix_band_report("y2-relation", vec![m as i64, ell as i64], &sum)
}

/// Verify the mixed curvature identity
/// `∂_{t_m} Ūᵗ_n + ∂_{t̄_n} U_m + ([U_m, Ūᵗ_n] - π₀[U_m, Ūᵗ_n]) = 0`.
pub fn verify_mixed(t: &KillingTower, m: usize, n: usize) -> Result<CheckReport> {
    let br = u_coefficient(t, m)?.bracket(&ubar_t(t, n)?);
    let off_level = br.project_ge(1).add(&br.project_le(-1));
    let residual = t_derivative_ubar(t, m, n)?
        .add(&tbar_derivative_u(t, n, m)?)
        .add(&off_level);
    matrix_band_report("mixed-flow", vec![m as i64, n as i64], &residual)
}

/// Verify that the lowest flow generators rescale to the frame directions
/// (`U_0 · (-½ h₂^{1/2}) = Φ_ξ`, `Ūᵗ_0 · (½ h̄₂^{1/2}) = Φ_ξ̄`) and that `U_0`
/// is static along every conjugate flow.
pub fn verify_tangency(t: &KillingTower) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let r_xi = u_coefficient(t, 0)?
        .scale(&DiffPoly::h2_half(1).scale_ratio(-1, 2))
        .sub(&phi_xi());
    reports.push(matrix_report("tangency-xi", vec![], &r_xi, -1, -1)?);
    let r_xibar = ubar_t(t, 0)?
        .scale(&DiffPoly::hb2_half(1).scale_ratio(1, 2))
        .sub(&phi_xibar());
    reports.push(matrix_report("tangency-xibar", vec![], &r_xibar, 1, 1)?);
    for n in 0..=t.order() {
        let stat = tbar_derivative_u(t, n, 0)?;
        reports.push(matrix_band_report("tbar-u0-static", vec![n as i64], &stat)?);
    }
    Ok(reports)
}

/// The induced flow of the metric coefficient, `∂_{t_m} h₂ = -2 h₂ a_{m+1}`,
/// together with its consistency checks: the `λ⁰` coefficient of the
/// complement is `-½ a_{m+1} H`, the Lax derivative of `U_0` matches the
/// closed form `λ^{-1} [[0, -a_{m+1} h₂^{1/2}], [-γ a_{m+1} h₂^{-1/2}, 0]]`,
/// the single-bracket route `[(U_(m+1))₀, U_0]` gives the same matrix, and
/// for `m = 0` the flow polynomial equals `-2 h₂^{-1/2} ∂_ξ h₂`.
pub fn h2_flow(t: &KillingTower, m: usize) -> Result<(DiffPoly, Vec<CheckReport>)> {
    if m + 1 > t.order() {
        return Err(CoreError::index(format!(
            "metric flow at level {m} needs tower order at least {}",
            m + 1
        )));
    }
    let idx = vec![m as i64];
    let a_next = t.a(m + 1)?.clone();
    let flow = DiffPoly::h(2).mul(&a_next).scale_ratio(-2, 1);
    let mut reports = Vec::new();

    let c0 = u_complement(t, m)?.component(0)?;
    let half = a_next.scale_ratio(-1, 2);
    let cartan = Mat {
        e: [
            [half.clone(), DiffPoly::zero()],
            [DiffPoly::zero(), half.neg()],
        ],
    };
    let d0 = c0.sub(&cartan);
    reports.push(bool_report(
        "u-complement-diag",
        idx.clone(),
        (!d0.is_zero()).then(|| {
            let entry = d0.e.iter().flatten().find(|p| !p.is_zero()).unwrap();
            truncate_poly(entry)
        }),
    ));

    let expect = LoopMat::from_degree(
        -1,
        Mat {
            e: [
                [
                    DiffPoly::zero(),
                    a_next.mul(&DiffPoly::h2_half(1)).neg(),
                ],
                [
                    a_next.mul(&DiffPoly::h2_half(-1)).mul(&DiffPoly::gamma()).neg(),
                    DiffPoly::zero(),
                ],
            ],
        },
        true,
    );
    let du0 = t_derivative_u(t, m, 0)?;
    reports.push(matrix_report(
        "h2-flow-u0",
        idx.clone(),
        &du0.sub(&expect),
        -2 * m as i64 - 2,
        -1,
    )?);

    let u0c = u_coefficient(t, 0)?.component(-1)?;
    let br = c0.mul(&u0c).sub(&u0c.mul(&c0));
    let r2 = LoopMat::from_degree(-1, br, true).sub(&expect);
    reports.push(matrix_report("h2-flow-bracket", idx.clone(), &r2, -1, -1)?);

    if m == 0 {
        let xi_route = DiffPoly::h2_half(-1)
            .scale_ratio(-2, 1)
            .mul(&derive(&DiffPoly::h(2), Dir::Xi));
        reports.push(CheckReport::from_residual(
            "h2-flow-xi",
            idx,
            &flow.sub(&xi_route),
        ));
    }
    Ok((flow, reports))
}

/// A direction label of the extended family: the surface frame directions
/// `ξ`, `ξ̄`, `ρ` and the flow directions `t_m`, `t̄_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Xi,
    XiBar,
    Rho,
    T(usize),
    TBar(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Xi => write!(f, "xi"),
            Label::XiBar => write!(f, "xibar"),
            Label::Rho => write!(f, "rho"),
            Label::T(m) => write!(f, "t{m}"),
            Label::TBar(n) => write!(f, "tbar{n}"),
        }
    }
}

/// The connection form of the extended family: one loop matrix per
/// direction, plus the `λ⁰` pairings `η_{mn}` that complete the `ρ`-part of
/// the curvature in the mixed flow directions.
#[derive(Debug, Clone)]
pub struct HierarchyForm {
    pub components: BTreeMap<Label, LoopMatrix<DiffPoly>>,
    pub rho_completion: BTreeMap<(usize, usize), DiffPoly>,
}

impl HierarchyForm {
    pub fn to_json(&self) -> Value {
        let mut comps = serde_json::Map::new();
        for (label, mat) in &self.components {
            comps.insert(label.to_string(), mat.to_json());
        }
        let completion: Vec<Value> = self
            .rho_completion
            .iter()
            .map(|((m, n), eta)| json!({ "m": m, "n": n, "eta": eta.to_json() }))
            .collect();
        json!({ "components": comps, "rho_completion": completion })
    }
}

/// The scalar `η_{mn}` with `π₀[U_m, Ūᵗ_n] = η_{mn} · diag(1,-1)`.  Errors
/// if the `λ⁰` coefficient is not a Cartan multiple.
pub fn eta_pairing(t: &KillingTower, m: usize, n: usize) -> Result<DiffPoly> {
    let c0 = u_coefficient(t, m)?.bracket(&ubar_t(t, n)?).component(0)?;
    if !c0.e[0][1].is_zero()
        || !c0.e[1][0].is_zero()
        || !c0.e[0][0].add(&c0.e[1][1]).is_zero()
    {
        return Err(CoreError::internal(format!(
            "level pairing at ({m}, {n}) is not a Cartan multiple"
        )));
    }
    Ok(c0.e[0][0].clone())
}

/// Assemble the extended connection form with flow directions `t_0..t_mmax`
/// and conjugate directions `t̄_0..t̄_nmax`.
pub fn assemble_mc(t: &KillingTower, mmax: usize, nmax: usize) -> Result<HierarchyForm> {
    let mut components = BTreeMap::new();
    components.insert(Label::Xi, phi_xi());
    components.insert(Label::XiBar, phi_xibar());
    components.insert(Label::Rho, phi_rho());
    for m in 0..=mmax {
        components.insert(Label::T(m), u_coefficient(t, m)?);
    }
    for n in 0..=nmax {
        components.insert(Label::TBar(n), ubar_t(t, n)?);
    }
    let mut rho_completion = BTreeMap::new();
    for m in 0..=mmax {
        for n in 0..=nmax {
            rho_completion.insert((m, n), eta_pairing(t, m, n)?);
        }
    }
    Ok(HierarchyForm { components, rho_completion })
}

/// Verify the `λ⁰` pairing at `(m, n)`: it is a Cartan multiple, the
/// windowed bracket agrees with the explicit degree-by-degree pairing, and
/// at `(0, 0)` the scalar matches its closed form and recovers the metric
/// curvature.
pub fn verify_b0(t: &KillingTower, m: usize, n: usize) -> Result<Vec<CheckReport>> {
    let um = u_coefficient(t, m)?;
    let ubn = ubar_t(t, n)?;
    let c0 = um.bracket(&ubn).component(0)?;
    let idx = vec![m as i64, n as i64];
    let mut reports = Vec::new();

    let cartan_ok = c0.e[0][1].is_zero()
        && c0.e[1][0].is_zero()
        && c0.e[0][0].add(&c0.e[1][1]).is_zero();
    reports.push(bool_report(
        "b0-cartan",
        idx.clone(),
        (!cartan_ok).then(|| {
            format!(
                "offdiag ({}, {})",
                truncate_poly(&c0.e[0][1]),
                truncate_poly(&c0.e[1][0])
            )
        }),
    ));

    let mut direct = Mat::<DiffPoly, 2>::zero();
    for d in -(2 * m as i64 + 1)..=-1 {
        let p = um.component(d)?;
        let q = ubn.component(-d)?;
        direct = direct.add(&p.mul(&q).sub(&q.mul(&p)));
    }
    let two_route = direct.sub(&c0);
    reports.push(bool_report(
        "b0-two-route",
        idx.clone(),
        (!two_route.is_zero()).then(|| {
            let entry = two_route.e.iter().flatten().find(|p| !p.is_zero()).unwrap();
            truncate_poly(entry)
        }),
    ));

    if (m, n) == (0, 0) {
        let eta = c0.e[0][0].clone();
        let expected = DiffPoly::h2_half(1).mul(&DiffPoly::hb2_half(1)).sub(
            &DiffPoly::h2_half(-1)
                .mul(&DiffPoly::hb2_half(-1))
                .mul(&DiffPoly::gamma())
                .mul(&DiffPoly::gamma()),
        );
        reports.push(CheckReport::from_residual(
            "b0-explicit",
            idx.clone(),
            &eta.sub(&expected),
        ));
        let kappa = eta.scale(&Scalar::gauss(0, 1, -2, 1));
        let lhs = kappa
            .mul(&DiffPoly::h2_half(1))
            .mul(&DiffPoly::hb2_half(1))
            .scale_ratio(1, 4);
        let rhs = DiffPoly::curvature().scale(&Scalar::gauss(0, 1, 1, 2));
        reports.push(CheckReport::from_residual("b0-gauss", idx, &lhs.sub(&rhs)));
    }
    Ok(reports)
}

/// Verify the generating-series identities.  With `φ̇ = λ ∂_λ φ` the Euler
/// derivative of a frame component,
///
/// ```text
///     tr(Y φ̇_ξ)|_{λ^{2n}} + i ∂_ξ a_n + 2γ c_n = 0,
///     tr(Y φ̇_ξ̄)|_{λ^{2n}} + i ∂_ξ̄ a_n + 2γ b_{n-1} = 0,
/// ```
///
/// for every level `n ≤ N`, while the `ρ`-component pairs to zero.
pub fn verify_generating_series(t: &KillingTower) -> Result<Vec<CheckReport>> {
    let order = t.order();
    let y = t.assemble_y();
    let two_gamma = Scalar::gauss_gamma(GaussQ::from_int(2), 1);
    let mut reports = Vec::new();

    let s_xi = y.mul(&phi_xi().euler()).trace_series();
    let mut mismatch = None;
    for n in 0..=order {
        let r = s_xi
            .value(2 * n as i64)?
            .add(&derive(t.a(n)?, Dir::Xi).scale(&Scalar::i()))
            .add(&t.c(n)?.scale(&two_gamma));
        if !r.is_zero() {
            mismatch = Some(format!("level {n}: {}", truncate_poly(&r)));
            break;
        }
    }
    reports.push(bool_report("series-xi", vec![order as i64], mismatch));

    let s_xibar = y.mul(&phi_xibar().euler()).trace_series();
    let mut mismatch = None;
    for n in 0..=order {
        let low = if n == 0 {
            DiffPoly::zero()
        } else {
            t.b(n - 1)?.scale(&two_gamma)
        };
        let r = s_xibar
            .value(2 * n as i64)?
            .add(&derive(t.a(n)?, Dir::XiBar).scale(&Scalar::i()))
            .add(&low);
        if !r.is_zero() {
            mismatch = Some(format!("level {n}: {}", truncate_poly(&r)));
            break;
        }
    }
    reports.push(bool_report("series-xibar", vec![order as i64], mismatch));

    let s_rho = y.mul(&phi_rho().euler()).trace_series();
    reports.push(matrix_band_report("series-rho", vec![], &s_rho)?);
    Ok(reports)
}

/// Outcome of the finite-type probe at a numeric datum.
#[derive(Debug, Clone)]
pub struct FiniteTypeOutcome {
    pub a_value: Complex64,
    pub h2_flow_value: Complex64,
    pub finite_type: bool,
}

/// Evaluate the level-`n₀` flow of the metric coefficient at a numeric
/// datum.  The datum is finite type at this level when `a_{n₀+1}` (and with
/// it `∂_{t_{n₀}} h₂ = -2 h₂ a_{n₀+1}`) vanishes to within `tol`.
pub fn finite_type_test(
    t: &KillingTower,
    n0: usize,
    assign: &NumericAssignment,
    tol: f64,
) -> Result<FiniteTypeOutcome> {
    if n0 + 1 > t.order() {
        return Err(CoreError::index(format!(
            "finite-type probe at level {n0} needs tower order at least {}",
            n0 + 1
        )));
    }
    let a_next = t.a(n0 + 1)?;
    let a_value = a_next.eval(assign)?;
    let flow = DiffPoly::h(2).mul(a_next).scale_ratio(-2, 1);
    let h2_flow_value = flow.eval(assign)?;
    let finite_type = a_value.norm() <= tol && h2_flow_value.norm() <= tol;
    Ok(FiniteTypeOutcome { a_value, h2_flow_value, finite_type })
}
