//! The fractional kernel `K^H`, its derivative, the second-order kernel `F`,
//! and cell integrals of the derivative.
//!
//! Writing `p = H - 1/2`, `q = 3/2 - H` (so `p + q = 1`), the derivative is
//! `dK(u, s) = c_H u^p s^-p (u - s)^-q` for `0 < s < u`.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::hurst::HurstParam;
use crate::quadrature::{GaussLegendre, GradedRule, QuadratureSpec};

/// The kernel of a given order together with the rules used to integrate it.
#[derive(Clone, Debug)]
pub struct Kernel {
    order: f64,
    c: f64,
    p: f64,
    q: f64,
    gl: GaussLegendre,
    /// Graded toward a `s^-p` endpoint.
    rule_p: GradedRule,
    /// Graded toward a `(w - s)^-q` endpoint.
    rule_q: GradedRule,
}

impl Kernel {
    /// Kernel of order `order` in `(1/2, 1)` with constant `c`.
    pub fn new(order: f64, c: f64, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        if !(order > 0.5 && order < 1.0) {
            return Err(Error::Domain(format!("kernel order {order} outside (1/2, 1)")));
        }
        let p = order - 0.5;
        let q = 1.5 - order;
        Ok(Kernel {
            order,
            c,
            p,
            q,
            gl: GaussLegendre::new(quad.nodes_per_panel),
            rule_p: GradedRule::for_exponent(quad, -p),
            rule_q: GradedRule::for_exponent(quad, -q),
        })
    }

    /// `K^H` itself, the fBm kernel.
    pub fn fbm(hp: &HurstParam, quad: &QuadratureSpec) -> Result<Self> {
        Kernel::new(hp.h(), hp.c_h()?, quad)
    }

    /// `K^{H'}`, the factor kernel inside `F`.
    pub fn rosenblatt_factor(hp: &HurstParam, quad: &QuadratureSpec) -> Result<Self> {
        Kernel::new(hp.h_prime(), hp.c_h_prime()?, quad)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    /// Exponent `p = order - 1/2`.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Exponent `q = 3/2 - order`.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// `dK(u, s)` in closed form.
    pub fn eval_dk(&self, u: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) || !(s < u) {
            return Err(Error::Domain(format!("dK(u={u}, s={s}) needs 0 < s < u")));
        }
        Ok(self.dk_unchecked(u, s))
    }

    #[inline]
    pub(crate) fn dk_unchecked(&self, u: f64, s: f64) -> f64 {
        self.c * (u / s).powf(self.p) * (u - s).powf(-self.q)
    }

    /// `K(t, s) = c s^-p \int_s^t (u - s)^-q u^p du`, zero when `s >= t`.
    pub fn eval_k(&self, t: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::Domain(format!("K(t={t}, s={s}) needs s > 0")));
        }
        if s >= t {
            return Ok(0.0);
        }
        let (p, q) = (self.p, self.q);
        let integral = self.rule_q.toward_left(s, t, |u, du| du.powf(-q) * u.powf(p));
        Ok(self.c * s.powf(-p) * integral)
    }

    /// `\int_a^{a+len} s^-p (a + len - s)^-q ds` for `a >= 0`, `len > 0`. The
    /// length is passed separately so that the distance to the pole stays exact.
    pub(crate) fn to_pole(&self, a: f64, len: f64) -> f64 {
        let (p, q) = (self.p, self.q);
        let g = |s: f64, t: f64| s.powf(-p) * t.powf(-q);
        if a == 0.0 {
            let mid = 0.5 * len;
            self.rule_p.toward_left(0.0, mid, |s, _| s.powf(-p) * (len - s).powf(-q))
                + self.rule_q.toward_right_len(len, mid, g)
        } else {
            self.rule_q.toward_right_len(a + len, len, g)
        }
    }

    /// `\int_a^b s^-p (w - s)^-q ds` for `0 <= a < b <= w`.
    pub(crate) fn base_integral(&self, a: f64, b: f64, w: f64) -> f64 {
        if b >= w {
            return self.to_pole(a, w - a);
        }
        if w - b < b - a {
            return self.to_pole(a, w - a) - self.to_pole(b, w - b);
        }
        let (p, q) = (self.p, self.q);
        let f = |s: f64| s.powf(-p) * (w - s).powf(-q);
        if a == 0.0 {
            self.rule_p.toward_left(0.0, b, |s, _| f(s))
        } else {
            self.gl.integrate(a, b, f)
        }
    }

    /// `\int_{lo}^{min(hi, w)} dK(w, s) ds`, the derivative integrated over a
    /// cell and truncated at the running time `w`.
    pub fn cell_integral(&self, lo: f64, hi: f64, w: f64) -> f64 {
        if lo >= w {
            return 0.0;
        }
        self.c * w.powf(self.p) * self.base_integral(lo, hi.min(w), w)
    }
}

/// `F(t, y1, y2)`: `d(H)` times the integral over `u in (y1 v y2, t)` of
/// `dK^{H'}(u, y1) dK^{H'}(u, y2)`.
///
/// The depth is increased in steps of four until two successive values agree
/// to `relTol`; failure after three refinements is reported as an error.
pub fn eval_f(hp: &HurstParam, t: f64, y1: f64, y2: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(y1 > 0.0 && y2 > 0.0) {
        return Err(Error::Domain(format!("F(t, y1={y1}, y2={y2}) needs y1, y2 > 0")));
    }
    let top = y1.max(y2);
    if top >= t {
        return Ok(0.0);
    }
    if y1 == y2 {
        return Err(Error::Quadrature(format!("F(t, y, y) is not integrable on the diagonal (y = {y1})")));
    }
    let d = hp.d_h()?;
    let kern = Kernel::rosenblatt_factor(hp, quad)?;
    let gl = GaussLegendre::new(quad.nodes_per_panel);
    let eval = |depth: usize| {
        let rule = GradedRule::new(&gl, depth, crate::quadrature::substitution_power(-kern.q));
        let low = y1.min(y2);
        let gap = top - low;
        let (c, p, q) = (kern.c, kern.p, kern.q);
        rule.toward_left(top, t, |u, du| c * c * (u * u / (top * low)).powf(p) * du.powf(-q) * (du + gap).powf(-q))
    };
    converge(quad, eval).map(|v| d * v)
}

fn converge<F: FnMut(usize) -> f64>(quad: &QuadratureSpec, mut eval: F) -> Result<f64> {
    let mut depth = quad.grading_depth;
    let mut prev = eval(depth);
    for _ in 0..3 {
        depth += 4;
        let next = eval(depth);
        if (next - prev).abs() <= quad.rel_tol * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature(format!("relative change above {} at grading depth {depth}", quad.rel_tol)))
}

/// `W_j(i, k)`: the double integral of `F(j/N, u, v)` over cell `i` times
/// cell `k` of the `1/N` grid, without any prefactor.
///
/// Evaluated through `d(H) \int_0^{j/N} psi_i(u) psi_k(u) du`, where `psi_i` is
/// the cell integral of `dK^{H'}` truncated at `u`, with every panel graded
/// toward its left end.
pub fn cell_weight(
    hp: &HurstParam,
    grid: &GridSpec,
    j: usize,
    i: usize,
    k: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if i == 0 || k == 0 || i > j || k > j {
        return Err(Error::Index(format!("cell_weight needs 1 <= i, k <= j, got j={j}, i={i}, k={k}")));
    }
    if j > grid.m() {
        return Err(Error::Index(format!("step {j} beyond M = {}", grid.m())));
    }
    let d = hp.d_h()?;
    let kern = Kernel::rosenblatt_factor(hp, quad)?;
    let h = grid.dt();
    let gl = GaussLegendre::new(quad.nodes_per_panel);
    let first = i.max(k) - 1;
    let eval = |depth: usize| {
        let rule = GradedRule::new(&gl, depth, crate::quadrature::substitution_power(kern.p));
        (first..j)
            .map(|l| {
                rule.toward_left(l as f64 * h, (l + 1) as f64 * h, |u, _| {
                    kern.cell_integral((i - 1) as f64 * h, i as f64 * h, u)
                        * kern.cell_integral((k - 1) as f64 * h, k as f64 * h, u)
                })
            })
            .sum::<f64>()
    };
    converge(quad, eval).map(|v| d * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hurst::{hurst_constants, Mode};

    fn hp(h: f64) -> HurstParam {
        hurst_constants(h, Mode::Rosenblatt).unwrap()
    }

    #[test]
    fn dk_closed_form() {
        let q = QuadratureSpec::default();
        let k = Kernel::rosenblatt_factor(&hp(0.75), &q).unwrap();
        let c = hp(0.75).c_h_prime().unwrap();
        assert!((k.eval_dk(1.0, 0.5).unwrap() - 2.0 * c).abs() < 1e-15);
        assert!(k.eval_dk(0.5, 0.5).is_err());
        assert!(k.eval_dk(1.0, 0.0).is_err());
    }

    #[test]
    fn k_vanishes_past_diagonal() {
        let k = Kernel::fbm(&hp(0.75), &QuadratureSpec::default()).unwrap();
        assert_eq!(k.eval_k(0.5, 0.7).unwrap(), 0.0);
        assert!(k.eval_k(0.5, 0.0).is_err());
    }

    #[test]
    fn f_indicator_and_symmetry() {
        let q = QuadratureSpec::default();
        let h = hp(0.75);
        assert_eq!(eval_f(&h, 0.5, 0.6, 0.3, &q).unwrap(), 0.0);
        let a = eval_f(&h, 1.0, 0.2, 0.7, &q).unwrap();
        let b = eval_f(&h, 1.0, 0.7, 0.2, &q).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
    }

    #[test]
    fn base_integral_branches_agree() {
        let k = Kernel::rosenblatt_factor(&hp(0.75), &QuadratureSpec::default()).unwrap();
        // Same cell through the direct and the subtracted branch.
        let w = 5.3;
        let direct = k.base_integral(2.0, 3.0, w);
        let split = k.to_pole(2.0, w - 2.0) - k.to_pole(3.0, w - 3.0);
        assert!((direct / split - 1.0).abs() < 1e-12);
    }
}
