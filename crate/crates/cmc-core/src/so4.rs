//! Antisymmetric 4×4 realization of the Killing field and its flows.
//!
//! The twisted sl(2) data embeds into so(4,C) loop matrices through a
//! 4-periodic regrading of the tower.  Six scalar series
//!
//! ```text
//!     a₁ = Σ (-1)ⁿ λ^{4n}   a_{2n},      a₃ = Σ (-1)ⁿ λ^{4n+2} a_{2n+1},
//!     b₂ = Σ (-1)ⁿ λ^{4n+1} b_{2n},      b₄ = Σ (-1)ⁿ λ^{4n+3} b_{2n+1},
//!     c₂ = Σ (-1)ⁿ λ^{4n+1} c_{2n},      c₄ = Σ (-1)ⁿ λ^{4n+3} c_{2n+1},
//! ```
//!
//! populate the antisymmetric matrix
//!
//! ```text
//!         ⎛   ·        i(c₂+b₄)   -(c₂-b₄)   -a₃      ⎞
//!     X = ⎜ -i(c₂+b₄)     ·        -i a₁     -i(b₂+c₄) ⎟
//!         ⎜  (c₂-b₄)    i a₁         ·       -(b₂-c₄)  ⎟
//!         ⎝   a₃       i(b₂+c₄)   (b₂-c₄)      ·       ⎠ ,
//! ```
//!
//! which satisfies the Killing equation `dX + [ψ_λ, X] = 0` for the
//! so(4,C)-valued frame `ψ_λ = λ ψ₊ + ψ₀ + λ^{-1} ψ₋`.  The `(-1)ⁿ λ^{4n}`
//! regrading means `X` is *not* twisted in the diagonal-even sense, so these
//! matrices carry no twisted flag — only antisymmetry, which every
//! construction here preserves.
//!
//! The flow deformation coefficients `V_m` are finite Laurent polynomials
//! assembled from the same placement pattern with a parity-split index rule
//! and a mod-4 sign `ε(m)`; the lowest one rescales to the frame,
//! `V₀ · (-½ h₂^{1/2}) = λ^{-1} ψ₋`, mirroring the tangency of the 2×2
//! picture.  Differentiating the tower along the `m`-th flow and regrading
//! gives `∂_{t_m} X`, and the extended Killing equation
//! `∂_{t_m} X + [V_m, X] = 0` holds on the certified band.  As independent
//! invariant bookkeeping, the Pfaffian `x₀₁x₂₃ - x₀₂x₁₃ + x₀₃x₁₂` and the
//! trace pairing `tr(X Ẋ + Ẋ X)` are constant along every verified flow.
//!
//! Everything in this module is a cross-check: no identity is imported from
//! the 2×2 computation; the residuals are expanded from scratch against the
//! printed 4×4 frame matrices, so a transcription error in either picture
//! surfaces as a nonzero residual.

use std::collections::{BTreeMap, BTreeSet};

use crate::diffring::{derive, DiffPoly, Dir};
use crate::error::{CoreError, Result};
use crate::hierarchy::t_derivative;
use crate::killing::{FrameDir, KillingTower};
use crate::loopalg::{LoopMat, Mat, Window, NEG_INF, POS_INF};
use crate::report::{matrix_band_report, matrix_report, CheckReport};
use crate::scalar::Scalar;

/// The six scalar series of the antisymmetric placement pattern, keyed by
/// λ-degree.
#[derive(Debug, Clone, Default)]
struct Slots {
    a1: BTreeMap<i64, DiffPoly>,
    a3: BTreeMap<i64, DiffPoly>,
    b2: BTreeMap<i64, DiffPoly>,
    b4: BTreeMap<i64, DiffPoly>,
    c2: BTreeMap<i64, DiffPoly>,
    c4: BTreeMap<i64, DiffPoly>,
}

impl Slots {
    fn insert(map: &mut BTreeMap<i64, DiffPoly>, d: i64, p: DiffPoly) {
        if !p.is_zero() {
            map.entry(d)
                .and_modify(|q| *q = q.add(&p))
                .or_insert(p);
        }
    }

    /// Assemble the antisymmetric matrix degree by degree.
    fn place(&self, window: Window) -> LoopMat<DiffPoly, 4> {
        let mut degrees = BTreeSet::new();
        for map in [&self.a1, &self.a3, &self.b2, &self.b4, &self.c2, &self.c4] {
            degrees.extend(map.keys().copied());
        }
        let mut out = LoopMat::zero(window, false);
        let i = Scalar::i();
        for d in degrees {
            let get = |map: &BTreeMap<i64, DiffPoly>| {
                map.get(&d).cloned().unwrap_or_else(DiffPoly::zero)
            };
            let (a1, a3) = (get(&self.a1), get(&self.a3));
            let (b2, b4) = (get(&self.b2), get(&self.b4));
            let (c2, c4) = (get(&self.c2), get(&self.c4));
            let mut m = Mat::<DiffPoly, 4>::zero();
            m.e[0][1] = c2.add(&b4).scale(&i);
            m.e[0][2] = c2.sub(&b4).neg();
            m.e[0][3] = a3.neg();
            m.e[1][2] = a1.scale(&i).neg();
            m.e[1][3] = b2.add(&c4).scale(&i).neg();
            m.e[2][3] = b2.sub(&c4).neg();
            for r in 0..4 {
                for c in (r + 1)..4 {
                    m.e[c][r] = m.e[r][c].neg();
                }
            }
            if !m.is_zero() {
                out.set(d, m);
            }
        }
        out
    }
}

fn signed(p: &DiffPoly, positive: bool) -> DiffPoly {
    if positive {
        p.clone()
    } else {
        p.neg()
    }
}

/// Assemble the antisymmetric Killing field from a tower of order `N`.  The
/// entry `a_k` lands at `λ^{2k}` and `b_k`, `c_k` at `λ^{2k+1}`, each with
/// the 4-periodic sign `(-1)^{⌊k/2⌋}`; the window is certified on
/// `[1, 2N+1]` and unknown above.
pub fn build_x(t: &KillingTower) -> LoopMat<DiffPoly, 4> {
    let order = t.order();
    let mut slots = Slots::default();
    for k in 0..=order {
        let positive = (k / 2) % 2 == 0;
        let (a, b, c) = (
            t.a(k).expect("tower index within order"),
            t.b(k).expect("tower index within order"),
            t.c(k).expect("tower index within order"),
        );
        let da = 2 * k as i64;
        if k % 2 == 0 {
            Slots::insert(&mut slots.a1, da, signed(a, positive));
            Slots::insert(&mut slots.b2, da + 1, signed(b, positive));
            Slots::insert(&mut slots.c2, da + 1, signed(c, positive));
        } else {
            Slots::insert(&mut slots.a3, da, signed(a, positive));
            Slots::insert(&mut slots.b4, da + 1, signed(b, positive));
            Slots::insert(&mut slots.c4, da + 1, signed(c, positive));
        }
    }
    slots.place(Window::partial(1, POS_INF, NEG_INF, 2 * order as i64 + 1))
}

/// The `ξ`-coefficient of the so(4,C) frame:
/// `λ^{-1} · ½ [[0,-γ,iγ,0],[γ,0,0,-h₂],[-iγ,0,0,-ih₂],[0,h₂,ih₂,0]]`.
pub fn psi_xi() -> LoopMat<DiffPoly, 4> {
    let g = DiffPoly::gamma();
    let h2 = DiffPoly::h(2);
    let i_half = Scalar::gauss(0, 1, 1, 2);
    let z = DiffPoly::zero;
    let m = Mat {
        e: [
            [z(), g.scale_ratio(-1, 2), g.scale(&i_half), z()],
            [g.scale_ratio(1, 2), z(), z(), h2.scale_ratio(-1, 2)],
            [g.scale(&i_half).neg(), z(), z(), h2.scale(&i_half).neg()],
            [z(), h2.scale_ratio(1, 2), h2.scale(&i_half), z()],
        ],
    };
    LoopMat::from_degree(-1, m, false)
}

/// The `ξ̄`-coefficient of the so(4,C) frame:
/// `λ · ½ [[0,-γ,-iγ,0],[γ,0,0,-h̄₂],[iγ,0,0,ih̄₂],[0,h̄₂,-ih̄₂,0]]`,
/// the formal conjugate mirror of the `ξ`-coefficient.
pub fn psi_xibar() -> LoopMat<DiffPoly, 4> {
    let g = DiffPoly::gamma();
    let hb2 = DiffPoly::hb(2);
    let i_half = Scalar::gauss(0, 1, 1, 2);
    let z = DiffPoly::zero;
    let m = Mat {
        e: [
            [z(), g.scale_ratio(-1, 2), g.scale(&i_half).neg(), z()],
            [g.scale_ratio(1, 2), z(), z(), hb2.scale_ratio(-1, 2)],
            [g.scale(&i_half), z(), z(), hb2.scale(&i_half)],
            [z(), hb2.scale_ratio(1, 2), hb2.scale(&i_half).neg(), z()],
        ],
    };
    LoopMat::from_degree(1, m, false)
}

/// The `ρ`-coefficient of the so(4,C) frame: the rotation generator
/// `E₂₃ - E₃₂` at `λ⁰`.
pub fn psi_rho() -> LoopMat<DiffPoly, 4> {
    let mut m = Mat::<DiffPoly, 4>::zero();
    m.e[1][2] = DiffPoly::one();
    m.e[2][1] = DiffPoly::one().neg();
    LoopMat::from_degree(0, m, false)
}

/// The frame residual of an antisymmetric loop matrix in a surface
/// direction: `∂ X + [ψ, X]`, with the `ρ`-direction acting through the
/// weight grading, `∂_ρ = -i W` entrywise.
pub fn so4_residual(x: &LoopMat<DiffPoly, 4>, dir: FrameDir) -> LoopMat<DiffPoly, 4> {
    match dir {
        FrameDir::Xi => x
            .map_entries(|p| derive(p, Dir::Xi))
            .add(&psi_xi().bracket(x)),
        FrameDir::XiBar => x
            .map_entries(|p| derive(p, Dir::XiBar))
            .add(&psi_xibar().bracket(x)),
        FrameDir::Rho => x
            .map_entries(|p| p.weight_split())
            .scale_gauss((0, 1), (-1, 1))
            .add(&psi_rho().bracket(x)),
    }
}

/// The deformation coefficient `V_m`, a finite Laurent polynomial in the
/// same placement pattern.  Writing `base = 2m+2`, the even case sums
/// `j = 0..m/2` with sign `ε(m)(-1)ʲ` (`ε = +1` for `m ≡ 0`, `-1` for
/// `m ≡ 2` mod 4):
///
/// ```text
///     a₁-slot: λ^{4j-2-base} a_{2j-1},   a₃-slot: λ^{4j-base}   a_{2j},
///     b₂-slot: λ^{4j-1-base} b_{2j-1},   b₄-slot: λ^{4j+1-base} b_{2j},
/// ```
///
/// (`c` as `b`), while the odd case sums `j = 1..(m+1)/2` with
/// `ε = -1` for `m ≡ 1`, `+1` for `m ≡ 3` mod 4:
///
/// ```text
///     a₁-slot: λ^{4j-4-base} a_{2j-2},   a₃-slot: λ^{4j-2-base} a_{2j-1},
///     b₂-slot: λ^{4j-3-base} b_{2j-2},   b₄-slot: λ^{4j-1-base} b_{2j-1}.
/// ```
///
/// Tower entries with negative index are zero by convention.
pub fn build_v(t: &KillingTower, m: usize) -> Result<LoopMat<DiffPoly, 4>> {
    if m > t.order() {
        return Err(CoreError::index(format!(
            "deformation level {m} exceeds tower order {}",
            t.order()
        )));
    }
    let base = 2 * m as i64 + 2;
    let mut slots = Slots::default();
    if m % 2 == 0 {
        let eps = m % 4 == 0;
        for j in 0..=(m / 2) {
            let positive = eps == (j % 2 == 0);
            let dj = 4 * j as i64;
            if j >= 1 {
                Slots::insert(&mut slots.a1, dj - 2 - base, signed(t.a(2 * j - 1)?, positive));
                Slots::insert(&mut slots.b2, dj - 1 - base, signed(t.b(2 * j - 1)?, positive));
                Slots::insert(&mut slots.c2, dj - 1 - base, signed(t.c(2 * j - 1)?, positive));
            }
            Slots::insert(&mut slots.a3, dj - base, signed(t.a(2 * j)?, positive));
            Slots::insert(&mut slots.b4, dj + 1 - base, signed(t.b(2 * j)?, positive));
            Slots::insert(&mut slots.c4, dj + 1 - base, signed(t.c(2 * j)?, positive));
        }
    } else {
        let eps = m % 4 == 3;
        for j in 1..=((m + 1) / 2) {
            let positive = eps == (j % 2 == 0);
            let dj = 4 * j as i64;
            Slots::insert(&mut slots.a1, dj - 4 - base, signed(t.a(2 * j - 2)?, positive));
            Slots::insert(&mut slots.b2, dj - 3 - base, signed(t.b(2 * j - 2)?, positive));
            Slots::insert(&mut slots.c2, dj - 3 - base, signed(t.c(2 * j - 2)?, positive));
            Slots::insert(&mut slots.a3, dj - 2 - base, signed(t.a(2 * j - 1)?, positive));
            Slots::insert(&mut slots.b4, dj - 1 - base, signed(t.b(2 * j - 1)?, positive));
            Slots::insert(&mut slots.c4, dj - 1 - base, signed(t.c(2 * j - 1)?, positive));
        }
    }
    Ok(slots.place(Window::all()))
}

/// Regrade the tower derivatives along the `m`-th flow into the
/// antisymmetric pattern, producing `∂_{t_m} X` certified on
/// `[1, 2(N-m)]`.
pub fn build_x_dot(t: &KillingTower, m: usize) -> Result<LoopMat<DiffPoly, 4>> {
    let dots = t_derivative(t, m)?;
    let mut slots = Slots::default();
    for (k, a) in dots.a_dot.iter().enumerate() {
        let positive = (k / 2) % 2 == 0;
        let map = if k % 2 == 0 { &mut slots.a1 } else { &mut slots.a3 };
        Slots::insert(map, 2 * k as i64, signed(a, positive));
    }
    for k in 0..dots.b_dot.len() {
        let positive = (k / 2) % 2 == 0;
        let (mb, mc) = if k % 2 == 0 {
            (&mut slots.b2, &mut slots.c2)
        } else {
            (&mut slots.b4, &mut slots.c4)
        };
        Slots::insert(mb, 2 * k as i64 + 1, signed(&dots.b_dot[k], positive));
        Slots::insert(mc, 2 * k as i64 + 1, signed(&dots.c_dot[k], positive));
    }
    let top = 2 * (t.order() - m) as i64;
    Ok(slots.place(Window::partial(1, POS_INF, NEG_INF, top)))
}

/// The Pfaffian series `x₀₁x₂₃ - x₀₂x₁₃ + x₀₃x₁₂`.
pub fn pfaffian(x: &LoopMat<DiffPoly, 4>) -> LoopMat<DiffPoly, 1> {
    let p = |i: usize, j: usize| x.entry_series(i, j);
    p(0, 1)
        .mul(&p(2, 3))
        .sub(&p(0, 2).mul(&p(1, 3)))
        .add(&p(0, 3).mul(&p(1, 2)))
}

/// Directional derivative of the Pfaffian at `x` along `xd`.
fn pfaffian_directional(
    x: &LoopMat<DiffPoly, 4>,
    xd: &LoopMat<DiffPoly, 4>,
) -> LoopMat<DiffPoly, 1> {
    let term = |i1: usize, j1: usize, i2: usize, j2: usize| {
        xd.entry_series(i1, j1)
            .mul(&x.entry_series(i2, j2))
            .add(&x.entry_series(i1, j1).mul(&xd.entry_series(i2, j2)))
    };
    term(0, 1, 2, 3)
        .sub(&term(0, 2, 1, 3))
        .add(&term(0, 3, 1, 2))
}

fn antisymmetry_report(x: &LoopMat<DiffPoly, 4>) -> CheckReport {
    for (d, m) in x.stored() {
        for r in 0..4 {
            for c in 0..4 {
                if !m.e[r][c].add(&m.e[c][r]).is_zero() {
                    return CheckReport::fail(
                        "so4-antisymmetry",
                        vec![],
                        format!("λ^{d} entry ({r}, {c})"),
                    );
                }
            }
        }
    }
    CheckReport::pass("so4-antisymmetry", vec![])
}

/// Run the full 4×4 cross-check: antisymmetry of the assembled field, the
/// static Killing residuals in all three frame directions through
/// `λ^{max_order}`, the rescaling of `V₀` to the frame, and for each flow
/// level `m ≤ min(2, N)` the extended equation `∂_{t_m} X + [V_m, X] = 0`
/// plus constancy of the Pfaffian and trace invariants.
pub fn verify_so4(t: &KillingTower, max_order: i64) -> Result<Vec<CheckReport>> {
    let x = build_x(t);
    let mut reports = Vec::new();
    reports.push(antisymmetry_report(&x));

    for (name, dir) in [
        ("so4-xi", FrameDir::Xi),
        ("so4-xibar", FrameDir::XiBar),
        ("so4-rho", FrameDir::Rho),
    ] {
        let res = so4_residual(&x, dir);
        reports.push(matrix_report(name, vec![max_order], &res, 0, max_order)?);
    }

    let tangency = build_v(t, 0)?
        .scale(&DiffPoly::h2_half(1).scale_ratio(-1, 2))
        .sub(&psi_xi());
    reports.push(matrix_report("so4-v0-tangency", vec![], &tangency, -1, -1)?);

    for m in 0..=2usize.min(t.order()) {
        let xd = build_x_dot(t, m)?;
        let res = xd.add(&build_v(t, m)?.bracket(&x));
        reports.push(matrix_band_report("so4-flow", vec![m as i64], &res)?);
        reports.push(matrix_band_report(
            "so4-pfaffian-flow",
            vec![m as i64],
            &pfaffian_directional(&x, &xd),
        )?);
        let sym = x.mul(&xd).add(&xd.mul(&x)).trace_series();
        reports.push(matrix_band_report("so4-trace-flow", vec![m as i64], &sym)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffring::conjugate;
    use crate::report::all_zero;
    use std::sync::LazyLock;

    static TOWER3: LazyLock<KillingTower> =
        LazyLock::new(|| KillingTower::new(3).expect("tower of order 3"));

    #[test]
    fn x_assembly_matches_placement() {
        let t = &*TOWER3;
        let x = build_x(t);
        assert!(x.component(0).unwrap().is_zero());

        let m1 = x.component(1).unwrap();
        assert_eq!(m1.e[0][1], t.c(0).unwrap().scale(&Scalar::i()));
        assert_eq!(
            m1.e[1][3],
            t.b(0).unwrap().scale(&Scalar::i()).neg()
        );

        let m2 = x.component(2).unwrap();
        assert_eq!(m2.e[0][3], DiffPoly::z(3).neg());
        assert!(m2.e[0][1].is_zero());

        // the (-1)ⁿ regrading flips the sign of the λ⁴ diagonal-block entry
        let m4 = x.component(4).unwrap();
        assert_eq!(m4.e[1][2], t.a(2).unwrap().scale(&Scalar::i()));

        // antisymmetry of every stored coefficient
        assert!(antisymmetry_report(&x).residual_zero);
    }

    #[test]
    fn frame_conjugation_mirror() {
        let mirrored = psi_xi().map_entries(conjugate).negate_degrees();
        assert!(mirrored.sub(&psi_xibar()).is_stored_zero());
        assert_eq!(
            psi_xi().component(-1).unwrap().e[1][3],
            DiffPoly::h(2).scale_ratio(-1, 2)
        );
        assert_eq!(psi_rho().component(0).unwrap().e[1][2], DiffPoly::one());
    }

    #[test]
    fn static_killing_equation_holds() {
        let x = build_x(&TOWER3);
        for dir in [FrameDir::Xi, FrameDir::XiBar, FrameDir::Rho] {
            let res = so4_residual(&x, dir);
            assert!(res.zero_on(0, 4).unwrap(), "{dir:?}");
        }
    }

    #[test]
    fn sign_flip_in_frame_is_detected() {
        let x = build_x(&TOWER3);
        let bad = x
            .map_entries(|p| derive(p, Dir::XiBar))
            .add(&psi_xibar().neg().bracket(&x));
        assert!(!bad.zero_on(0, 4).unwrap());
    }

    #[test]
    fn deformation_coefficients_low_orders() {
        let t = &*TOWER3;
        let v1 = build_v(t, 1).unwrap();
        assert_eq!(
            v1.component(-2).unwrap().e[0][3],
            t.a(1).unwrap().neg()
        );
        assert_eq!(
            v1.component(-1).unwrap().e[0][1],
            t.b(1).unwrap().scale(&Scalar::i())
        );
        assert_eq!(
            v1.component(-3).unwrap().e[1][3],
            t.b(0).unwrap().scale(&Scalar::i()).neg()
        );
        // the a₁-slot at λ⁻⁴ carries a₀ = 0
        assert!(v1.component(-4).unwrap().is_zero());

        let v2 = build_v(t, 2).unwrap();
        assert_eq!(
            v2.component(-5).unwrap().e[0][1],
            t.b(0).unwrap().scale(&Scalar::i()).neg()
        );
        assert_eq!(
            v2.component(-1).unwrap().e[0][1],
            t.b(2).unwrap().scale(&Scalar::i())
        );
        assert_eq!(
            v2.component(-4).unwrap().e[1][2],
            t.a(1).unwrap().scale(&Scalar::i()).neg()
        );

        assert!(build_v(t, 4).is_err());
    }

    #[test]
    fn full_cross_check_passes() {
        let reports = verify_so4(&TOWER3, 4).unwrap();
        assert!(all_zero(&reports), "{reports:?}");
        // antisymmetry + 3 static + tangency + 3 levels × 3 flow checks
        assert_eq!(reports.len(), 1 + 3 + 1 + 9);
    }

    #[test]
    fn pfaffian_is_spectral_constant() {
        let x = build_x(&TOWER3);
        let pf = pfaffian(&x);
        let expected = DiffPoly::gamma().scale(&Scalar::gauss(0, 1, -2, 1));
        assert_eq!(pf.value(2).unwrap(), expected);
        assert!(pf.zero_on(3, 8).unwrap());
    }
}
