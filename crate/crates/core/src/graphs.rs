//! Scalar maximal monotone graphs.
//!
//! A graph is stored as an ordered list of pieces tiling its effective
//! domain: monotone closed-form branches on intervals, and vertical segments
//! at single points. Every piece carries a positive `scale` and an `offset`
//! so that the graph algebra `b·γ` and `γ + a` is exact bookkeeping rather
//! than a new curve.
//!
//! Resolvents `(I + λβ)⁻¹`, Yosida approximations `β_λ = (I − J_λ)/λ`,
//! minimal sections and Moreau primitives are all evaluated piece by piece.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised when building or evaluating a graph.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph has no pieces")]
    Empty,
    #[error("piece {index}: {reason}")]
    InvalidPiece { index: usize, reason: String },
    #[error("pieces {left} and {right} do not tile the domain: {reason}")]
    Tiling {
        left: usize,
        right: usize,
        reason: String,
    },
    #[error("monotonicity violated between pieces {left} and {right}")]
    NotMonotone { left: usize, right: usize },
    #[error("graph is not maximal: {0}")]
    NotMaximal(String),
    #[error("{0} must be positive, got {1}")]
    NonPositive(&'static str, f64),
    #[error("r = {0} lies outside the effective domain")]
    OutsideDomain(f64),
    #[error("scalar root finder did not converge after {iterations} iterations (r = {r})")]
    NoConvergence { r: f64, iterations: usize },
}

/// Monotone closed-form shape of a branch before scaling and offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// φ(r) = 0
    Zero,
    /// φ(r) = r
    Identity,
    /// φ(r) = r³
    Cube,
    /// φ(r) = ln((1 + r)/(1 − r)), natural domain (−1, 1)
    LogRatio,
}

impl Shape {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Identity => r,
            Shape::Cube => r * r * r,
            Shape::LogRatio => {
                if r <= -1.0 {
                    f64::NEG_INFINITY
                } else if r >= 1.0 {
                    f64::INFINITY
                } else {
                    (r.ln_1p() - (-r).ln_1p()).clamp(f64::MIN, f64::MAX)
                }
            }
        }
    }

    pub fn slope(self, r: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Identity => 1.0,
            Shape::Cube => 3.0 * r * r,
            Shape::LogRatio => 2.0 / (1.0 - r * r),
        }
    }

    /// Antiderivative with value 0 at r = 0.
    pub fn primitive(self, r: f64) -> f64 {
        match self {
            Shape::Zero => 0.0,
            Shape::Identity => 0.5 * r * r,
            Shape::Cube => 0.25 * r * r * r * r,
            Shape::LogRatio => {
                let xlogx = |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() };
                xlogx(1.0 + r) + xlogx(1.0 - r)
            }
        }
    }

    fn natural_domain(self) -> (f64, f64) {
        match self {
            Shape::LogRatio => (-1.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Solve `y + mu·φ(y) = q` for `y` in `[lo, hi]`, knowing a root exists there.
    fn solve_shifted(self, mu: f64, q: f64, lo: f64, hi: f64) -> Result<f64, GraphError> {
        match self {
            Shape::Zero => Ok(q),
            Shape::Identity => Ok(q / (1.0 + mu)),
            Shape::Cube => Ok(solve_cubic(mu, q)),
            Shape::LogRatio => bisect_increasing(|y| y + mu * self.eval(y) - q, lo, hi, q),
        }
    }
}

/// Real root of `y + mu·y³ = q` by monotone Newton from the right of the root.
fn solve_cubic(mu: f64, q: f64) -> f64 {
    if q == 0.0 || mu == 0.0 {
        return q;
    }
    let sign = q.signum();
    let q = q.abs();
    // Both starting points lie to the right of the root, where g is convex and
    // increasing, so the Newton sequence decreases monotonically.
    let mut y = q.min((q / mu).cbrt());
    for _ in 0..200 {
        let g = y + mu * y * y * y - q;
        let dg = 1.0 + 3.0 * mu * y * y;
        let next = y - g / dg;
        if !(next < y) || next <= 0.0 {
            break;
        }
        y = next;
    }
    sign * y
}

/// Bisection on an increasing function, bracketed in `[lo, hi]` (finite or not).
fn bisect_increasing(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    r: f64,
) -> Result<f64, GraphError> {
    const CAP: usize = 200;
    let (mut a, mut b) = (lo, hi);
    if !a.is_finite() || !b.is_finite() {
        let m = r.abs().max(1.0);
        if !a.is_finite() {
            a = -m;
            let mut k = 0;
            while f(a) > 0.0 {
                a *= 2.0;
                k += 1;
                if k > 2000 {
                    return Err(GraphError::NoConvergence { r, iterations: k });
                }
            }
        }
        if !b.is_finite() {
            b = m;
            let mut k = 0;
            while f(b) < 0.0 {
                b *= 2.0;
                k += 1;
                if k > 2000 {
                    return Err(GraphError::NoConvergence { r, iterations: k });
                }
            }
        }
    }
    for _ in 0..CAP {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || (b - a) <= 1e-12 * (1.0 + m.abs()) * 1e-3 {
            return Ok(m);
        }
        let v = f(m);
        if v == 0.0 {
            return Ok(m);
        }
        if v < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    if b - a <= 1e-12 {
        Ok(0.5 * (a + b))
    } else {
        Err(GraphError::NoConvergence { r, iterations: CAP })
    }
}

/// One piece of a scalar graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    /// `{(r, scale·φ(r) + offset) : r ∈ interval}`.
    Branch {
        lo: f64,
        hi: f64,
        #[serde(default)]
        lo_closed: bool,
        #[serde(default)]
        hi_closed: bool,
        shape: Shape,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `{at} × (scale·[lo, hi] + offset)`, infinite ends allowed.
    Vertical {
        at: f64,
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Piece {
    /// Constant branch on an interval.
    pub fn constant(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool, value: f64) -> Self {
        Piece::Branch {
            lo,
            hi,
            lo_closed,
            hi_closed,
            shape: Shape::Zero,
            scale: 1.0,
            offset: value,
        }
    }

    pub fn branch(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool, shape: Shape) -> Self {
        Piece::Branch {
            lo,
            hi,
            lo_closed,
            hi_closed,
            shape,
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn vertical(at: f64, lo: f64, hi: f64) -> Self {
        Piece::Vertical {
            at,
            lo,
            hi,
            scale: 1.0,
            offset: 0.0,
        }
    }

    fn scale_offset(&self) -> (f64, f64) {
        match *self {
            Piece::Branch { scale, offset, .. } | Piece::Vertical { scale, offset, .. } => {
                (scale, offset)
            }
        }
    }

    /// Interval of r covered by the piece, with closedness flags.
    fn span(&self) -> (f64, bool, f64, bool) {
        match *self {
            Piece::Branch {
                lo,
                hi,
                lo_closed,
                hi_closed,
                ..
            } => (lo, lo_closed, hi, hi_closed),
            Piece::Vertical { at, .. } => (at, true, at, true),
        }
    }

    /// Value range of the piece at its left and right extremities.
    fn value_limits(&self) -> (f64, f64) {
        match *self {
            Piece::Branch {
                lo,
                hi,
                shape,
                scale,
                offset,
                ..
            } => (
                affine(scale, shape.eval(lo), offset),
                affine(scale, shape.eval(hi), offset),
            ),
            Piece::Vertical {
                lo,
                hi,
                scale,
                offset,
                ..
            } => (affine(scale, lo, offset), affine(scale, hi, offset)),
        }
    }
}

fn affine(scale: f64, phi: f64, offset: f64) -> f64 {
    if phi.is_infinite() {
        phi
    } else {
        scale * phi + offset
    }
}

/// Endpoint of an effective domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub value: f64,
    pub closed: bool,
}

/// Effective domain `D(β)` as an interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Bound,
    pub hi: Bound,
}

impl Domain {
    pub fn contains(&self, r: f64) -> bool {
        let above = r > self.lo.value || (r == self.lo.value && self.lo.closed);
        let below = r < self.hi.value || (r == self.hi.value && self.hi.closed);
        above && below
    }

    /// `Some(witness)` when `other ⊄ self`.
    pub fn inclusion_witness(&self, other: &Domain) -> Option<f64> {
        let lo_ok = self.lo.value < other.lo.value
            || (self.lo.value == other.lo.value && (self.lo.closed || !other.lo.closed));
        if !lo_ok {
            return Some(if other.lo.value.is_finite() {
                other.lo.value
            } else {
                self.lo.value - 1.0
            });
        }
        let hi_ok = self.hi.value > other.hi.value
            || (self.hi.value == other.hi.value && (self.hi.closed || !other.hi.closed));
        if !hi_ok {
            return Some(if other.hi.value.is_finite() {
                other.hi.value
            } else {
                self.hi.value + 1.0
            });
        }
        None
    }
}

/// A maximal monotone graph `β ⊂ ℝ × ℝ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Piece>", into = "Vec<Piece>")]
pub struct ScalarGraph {
    pieces: Vec<Piece>,
}

impl TryFrom<Vec<Piece>> for ScalarGraph {
    type Error = GraphError;
    fn try_from(pieces: Vec<Piece>) -> Result<Self, GraphError> {
        ScalarGraph::new(pieces)
    }
}

impl From<ScalarGraph> for Vec<Piece> {
    fn from(g: ScalarGraph) -> Self {
        g.pieces
    }
}

/// Result of locating `J_λ(r)` on a graph.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    /// `J_λ(r)`.
    pub point: f64,
    /// `β_λ(r)`, an element of `β(J_λ(r))`.
    pub yosida: f64,
    /// Derivative of `r ↦ β_λ(r)` (one-sided at kinks).
    pub slope: f64,
}

impl ScalarGraph {
    pub fn new(pieces: Vec<Piece>) -> Result<Self, GraphError> {
        let g = ScalarGraph { pieces };
        g.validate()?;
        Ok(g)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// `β(r) = r` on ℝ.
    pub fn linear() -> Self {
        ScalarGraph {
            pieces: vec![Piece::branch(
                f64::NEG_INFINITY,
                f64::INFINITY,
                false,
                false,
                Shape::Identity,
            )],
        }
    }

    /// `β(r) = r³` on ℝ.
    pub fn cubic() -> Self {
        ScalarGraph {
            pieces: vec![Piece::branch(
                f64::NEG_INFINITY,
                f64::INFINITY,
                false,
                false,
                Shape::Cube,
            )],
        }
    }

    /// Subdifferential of the indicator of `[lo, hi]`.
    pub fn indicator(lo: f64, hi: f64) -> Self {
        ScalarGraph {
            pieces: vec![
                Piece::vertical(lo, f64::NEG_INFINITY, 0.0),
                Piece::constant(lo, hi, false, false, 0.0),
                Piece::vertical(hi, 0.0, f64::INFINITY),
            ],
        }
    }

    /// `β(r) = ln((1 + r)/(1 − r))` on `(−1, 1)`.
    pub fn logarithmic() -> Self {
        ScalarGraph {
            pieces: vec![Piece::branch(-1.0, 1.0, false, false, Shape::LogRatio)],
        }
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.pieces.is_empty() {
            return Err(GraphError::Empty);
        }
        for (index, p) in self.pieces.iter().enumerate() {
            let (scale, offset) = p.scale_offset();
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(GraphError::InvalidPiece {
                    index,
                    reason: format!("scale must be positive and finite, got {scale}"),
                });
            }
            if !offset.is_finite() {
                return Err(GraphError::InvalidPiece {
                    index,
                    reason: "offset must be finite".into(),
                });
            }
            match *p {
                Piece::Branch {
                    lo,
                    hi,
                    lo_closed,
                    hi_closed,
                    shape,
                    ..
                } => {
                    if !(lo < hi) {
                        return Err(GraphError::InvalidPiece {
                            index,
                            reason: format!("empty interval ({lo}, {hi})"),
                        });
                    }
                    let (nlo, nhi) = shape.natural_domain();
                    let lo_bad = lo < nlo || (lo == nlo && lo_closed && nlo.is_finite());
                    let hi_bad = hi > nhi || (hi == nhi && hi_closed && nhi.is_finite());
                    if lo_bad || hi_bad {
                        return Err(GraphError::InvalidPiece {
                            index,
                            reason: format!("interval exceeds the natural domain of {shape:?}"),
                        });
                    }
                    if (lo_closed && !lo.is_finite()) || (hi_closed && !hi.is_finite()) {
                        return Err(GraphError::InvalidPiece {
                            index,
                            reason: "infinite endpoints cannot be closed".into(),
                        });
                    }
                }
                Piece::Vertical { at, lo, hi, .. } => {
                    if !at.is_finite() {
                        return Err(GraphError::InvalidPiece {
                            index,
                            reason: "vertical segment must sit at a finite point".into(),
                        });
                    }
                    if !(lo <= hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                        return Err(GraphError::InvalidPiece {
                            index,
                            reason: format!("invalid vertical range [{lo}, {hi}]"),
                        });
                    }
                }
            }
        }
        for k in 1..self.pieces.len() {
            let (_, _, lhi, lhi_closed) = self.pieces[k - 1].span();
            let (rlo, rlo_closed, _, _) = self.pieces[k].span();
            if lhi != rlo {
                return Err(GraphError::Tiling {
                    left: k - 1,
                    right: k,
                    reason: format!("gap or overlap between {lhi} and {rlo}"),
                });
            }
            let both_vertical = matches!(self.pieces[k - 1], Piece::Vertical { .. })
                && matches!(self.pieces[k], Piece::Vertical { .. });
            if both_vertical || (lhi_closed == rlo_closed) {
                return Err(GraphError::Tiling {
                    left: k - 1,
                    right: k,
                    reason: format!("point {rlo} must belong to exactly one piece"),
                });
            }
            let (_, left_sup) = self.pieces[k - 1].value_limits();
            let (right_inf, _) = self.pieces[k].value_limits();
            if left_sup > right_inf + 1e-12 * (1.0 + left_sup.abs()) {
                return Err(GraphError::NotMonotone {
                    left: k - 1,
                    right: k,
                });
            }
            if left_sup < right_inf - 1e-12 * (1.0 + right_inf.abs()) {
                return Err(GraphError::NotMaximal(format!(
                    "jump from {left_sup} to {right_inf} at r = {rlo} without a vertical segment"
                )));
            }
        }
        let first = &self.pieces[0];
        let (lo, _, _, _) = first.span();
        let (vlo, _) = first.value_limits();
        if lo.is_finite() && vlo != f64::NEG_INFINITY {
            return Err(GraphError::NotMaximal(format!(
                "left end r = {lo} is bounded but the graph does not reach -inf"
            )));
        }
        let last = &self.pieces[self.pieces.len() - 1];
        let (_, _, hi, _) = last.span();
        let (_, vhi) = last.value_limits();
        if hi.is_finite() && vhi != f64::INFINITY {
            return Err(GraphError::NotMaximal(format!(
                "right end r = {hi} is bounded but the graph does not reach +inf"
            )));
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        let (lo, lo_closed, _, _) = self.pieces[0].span();
        let (_, _, hi, hi_closed) = self.pieces[self.pieces.len() - 1].span();
        Domain {
            lo: Bound {
                value: lo,
                closed: lo_closed,
            },
            hi: Bound {
                value: hi,
                closed: hi_closed,
            },
        }
    }

    /// The set `β(r)` as a closed interval, `None` outside `D(β)`.
    pub fn values_at(&self, r: f64) -> Option<(f64, f64)> {
        for p in &self.pieces {
            let (lo, lo_closed, hi, hi_closed) = p.span();
            let inside = (r > lo || (r == lo && lo_closed)) && (r < hi || (r == hi && hi_closed));
            if !inside {
                continue;
            }
            return Some(match *p {
                Piece::Branch {
                    shape,
                    scale,
                    offset,
                    ..
                } => {
                    let v = affine(scale, shape.eval(r), offset);
                    (v, v)
                }
                Piece::Vertical { .. } => p.value_limits(),
            });
        }
        None
    }

    /// Minimal section `β°(r)`: the element of `β(r)` closest to zero.
    pub fn minimal_section(&self, r: f64) -> Result<f64, GraphError> {
        let (lo, hi) = self.values_at(r).ok_or(GraphError::OutsideDomain(r))?;
        Ok(0.0_f64.clamp(lo, hi))
    }

    /// Whether `0 ∈ β(0)`.
    pub fn contains_origin(&self) -> bool {
        matches!(self.values_at(0.0), Some((lo, hi)) if lo <= 0.0 && 0.0 <= hi)
    }

    /// Locate the resolvent point, Yosida value and its slope at once.
    pub fn resolve(&self, lambda: f64, r: f64) -> Result<Resolved, GraphError> {
        if !(lambda > 0.0) {
            return Err(GraphError::NonPositive("lambda", lambda));
        }
        for p in &self.pieces {
            let (scale, offset) = p.scale_offset();
            let mu = lambda * scale;
            let q = r - lambda * offset;
            match *p {
                Piece::Vertical { at, hi, .. } => {
                    let upper = if hi == f64::INFINITY {
                        f64::INFINITY
                    } else {
                        at + mu * hi
                    };
                    if q <= upper {
                        return Ok(Resolved {
                            point: at,
                            yosida: (q - at) / mu * scale + offset,
                            slope: 1.0 / lambda,
                        });
                    }
                }
                Piece::Branch {
                    lo, hi, shape, ..
                } => {
                    let upper = if hi == f64::INFINITY {
                        f64::INFINITY
                    } else {
                        hi + mu * shape.eval(hi)
                    };
                    if q <= upper {
                        let lower = if lo == f64::NEG_INFINITY {
                            f64::NEG_INFINITY
                        } else {
                            lo + mu * shape.eval(lo)
                        };
                        let y = if q <= lower {
                            lo
                        } else if q >= upper {
                            hi
                        } else {
                            shape.solve_shifted(mu, q, lo, hi)?.clamp(lo, hi)
                        };
                        let d = mu * shape.slope(y);
                        let slope = if d.is_finite() {
                            d / (lambda * (1.0 + d))
                        } else {
                            1.0 / lambda
                        };
                        return Ok(Resolved {
                            point: y,
                            yosida: match shape {
                                // φ saturates in floating point next to ±1, where
                                // the root is pinned; the defining relation does not.
                                Shape::LogRatio => (q - y) / mu * scale + offset,
                                _ => affine(scale, shape.eval(y), offset),
                            },
                            slope,
                        });
                    }
                }
            }
        }
        Err(GraphError::NotMaximal(format!(
            "no piece contains the resolvent of r = {r}"
        )))
    }

    /// Resolvent `(I + λβ)⁻¹(r)`, the proximal map of `λβ̂`.
    pub fn resolvent(&self, lambda: f64, r: f64) -> Result<f64, GraphError> {
        Ok(self.resolve(lambda, r)?.point)
    }

    /// Yosida approximation `β_ε(r) = (r − J_ε(r))/ε`.
    pub fn yosida(&self, eps: f64, r: f64) -> Result<f64, GraphError> {
        if !(eps > 0.0) {
            return Err(GraphError::NonPositive("eps", eps));
        }
        Ok(self.resolve(eps, r)?.yosida)
    }

    /// Boundary regularization `(β_Γ)^Y_{εη}`.
    pub fn boundary_yosida(&self, eps: f64, eta: f64, r: f64) -> Result<f64, GraphError> {
        if !(eta > 0.0) {
            return Err(GraphError::NonPositive("eta", eta));
        }
        self.yosida(eps * eta, r)
    }

    /// Convex primitive `β̂(r) = ∫₀^r β°(s) ds`; `+∞` outside the closure of `D(β)`.
    pub fn primitive(&self, r: f64) -> f64 {
        let dom = self.domain();
        if r < dom.lo.value || r > dom.hi.value {
            return f64::INFINITY;
        }
        let (a, b, sign) = if r >= 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
        let mut total = 0.0;
        for p in &self.pieces {
            if let Piece::Branch {
                lo,
                hi,
                shape,
                scale,
                offset,
                ..
            } = *p
            {
                let s = a.max(lo);
                let e = b.min(hi);
                if s < e {
                    total += scale * (shape.primitive(e) - shape.primitive(s)) + offset * (e - s);
                }
            }
        }
        sign * total
    }

    /// Moreau primitive `β̂_ε(r) = ∫₀^r β_ε(s) ds`, through the envelope identity
    /// `β̂_ε(r) = β̂(J_ε r) + ε|β_ε(r)|²/2` minus its value at 0.
    pub fn moreau_primitive(&self, eps: f64, r: f64) -> Result<f64, GraphError> {
        if !(eps > 0.0) {
            return Err(GraphError::NonPositive("eps", eps));
        }
        let envelope = |x: f64| -> Result<f64, GraphError> {
            let res = self.resolve(eps, x)?;
            Ok(self.primitive(res.point) + 0.5 * eps * res.yosida * res.yosida)
        };
        let base = if self.contains_origin() {
            0.0
        } else {
            envelope(0.0)?
        };
        Ok(envelope(r)? - base)
    }

    /// The graph `b·γ`.
    pub fn scaled(&self, b: f64) -> Result<Self, GraphError> {
        if !(b > 0.0) {
            return Err(GraphError::NonPositive("b", b));
        }
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut p = p.clone();
                match &mut p {
                    Piece::Branch { scale, offset, .. } | Piece::Vertical { scale, offset, .. } => {
                        *scale *= b;
                        *offset *= b;
                    }
                }
                p
            })
            .collect();
        Ok(ScalarGraph { pieces })
    }

    /// The graph `γ + a`.
    pub fn shifted(&self, a: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let mut p = p.clone();
                match &mut p {
                    Piece::Branch { offset, .. } | Piece::Vertical { offset, .. } => *offset += a,
                }
                p
            })
            .collect();
        ScalarGraph { pieces }
    }

    /// Graph distance surrogate for `(y, xi) ∈ β`: `|J_1(y + xi) − y|`, zero
    /// exactly on the graph.
    pub fn membership_violation(&self, y: f64, xi: f64) -> f64 {
        match self.resolvent(1.0, y + xi) {
            Ok(j) => (j - y).abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Candidate breakpoints: vertical segment locations and finite domain ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let (lo, _, hi, _) = p.span();
            for x in [lo, hi] {
                if x.is_finite() && out.last() != Some(&x) {
                    out.push(x);
                }
            }
        }
        out
    }
}

/// Interval-valued evaluation of `r ↦ c·r + p(r) + Σ wᵢ βᵢ(r)`, used by the
/// generic scalar inclusion solver below.
fn weighted_image(
    c: f64,
    p: &dyn Fn(f64) -> f64,
    terms: &[(f64, &ScalarGraph)],
    r: f64,
) -> Option<(f64, f64)> {
    let base = c * r + p(r);
    let (mut lo, mut hi) = (base, base);
    for (w, g) in terms {
        let (a, b) = g.values_at(r)?;
        lo += w * a;
        hi += w * b;
    }
    Some((lo, hi))
}

/// Solve the scalar inclusion `b ∈ c·u + p(u) + Σ wᵢ βᵢ(u)` where `u ↦ c·u + p(u)`
/// is strictly increasing and the weights are positive.
///
/// Breakpoints of the graphs are tested first so that solutions sitting on a
/// vertical segment are returned exactly.
pub fn solve_inclusion(
    b: f64,
    c: f64,
    p: &dyn Fn(f64) -> f64,
    terms: &[(f64, &ScalarGraph)],
) -> Result<f64, GraphError> {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut lo_closed = false;
    let mut hi_closed = false;
    let mut points = Vec::new();
    for (_, g) in terms {
        let d = g.domain();
        if d.lo.value > lo || (d.lo.value == lo && !d.lo.closed) {
            lo = d.lo.value;
            lo_closed = d.lo.closed;
        }
        if d.hi.value < hi || (d.hi.value == hi && !d.hi.closed) {
            hi = d.hi.value;
            hi_closed = d.hi.closed;
        }
        points.extend(g.breakpoints());
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    // Classify against the breakpoints to find the bracket.
    let mut left = lo;
    let mut right = hi;
    for &x in &points {
        if x < lo || x > hi || (x == lo && !lo_closed) || (x == hi && !hi_closed) {
            continue;
        }
        if let Some((a, bb)) = weighted_image(c, p, terms, x) {
            if a <= b && b <= bb {
                return Ok(x);
            }
            if bb < b {
                left = left.max(x);
            } else {
                right = right.min(x);
                break;
            }
        }
    }
    let f = |u: f64| -> f64 {
        match weighted_image(c, p, terms, u) {
            Some((a, _)) => a - b,
            None if u <= left => f64::NEG_INFINITY,
            None => f64::INFINITY,
        }
    };
    bisect_increasing(f, left, right, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent resolvent oracle: bisection on `y ↦ y + λβ(y)` using only
    /// the set-valued evaluation of the graph.
    fn oracle_resolvent(g: &ScalarGraph, lambda: f64, r: f64) -> f64 {
        let (mut a, mut b) = (-1e6, 1e6);
        for _ in 0..400 {
            let m = 0.5 * (a + b);
            match g.values_at(m) {
                Some((lo, hi)) => {
                    if m + lambda * hi < r {
                        a = m;
                    } else if m + lambda * lo > r {
                        b = m;
                    } else {
                        return m;
                    }
                }
                None => {
                    if m < g.domain().lo.value {
                        a = m;
                    } else {
                        b = m;
                    }
                }
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn resolvent_examples() {
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.resolvent(0.5, 2.0).unwrap(), 1.0);
        let lin = ScalarGraph::linear();
        assert_eq!(lin.resolvent(1.0, 2.0).unwrap(), oracle_resolvent(&lin, 1.0, 2.0));
        assert_eq!(lin.resolvent(1.0, 2.0).unwrap(), 1.0);
        for g in [ind, lin, ScalarGraph::cubic(), ScalarGraph::logarithmic()] {
            for lambda in [1e-3, 0.1, 1.0, 7.0] {
                assert_eq!(g.resolvent(lambda, 0.0).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn resolvent_rejects_nonpositive_lambda() {
        let g = ScalarGraph::linear();
        assert!(matches!(
            g.resolvent(0.0, 1.0),
            Err(GraphError::NonPositive("lambda", _))
        ));
    }

    #[test]
    fn resolvent_matches_oracle() {
        let graphs = [
            ScalarGraph::linear(),
            ScalarGraph::cubic(),
            ScalarGraph::indicator(-1.0, 1.0),
            ScalarGraph::logarithmic(),
        ];
        for g in &graphs {
            for lambda in [1e-3, 1e-1, 1.0] {
                for k in 0..=200 {
                    let r = -5.0 + 0.05 * k as f64;
                    let y = g.resolvent(lambda, r).unwrap();
                    let o = oracle_resolvent(g, lambda, r);
                    assert!((y - o).abs() < 1e-9, "{g:?} λ={lambda} r={r}: {y} vs {o}");
                }
            }
        }
    }

    #[test]
    fn yosida_examples() {
        let lin = ScalarGraph::linear();
        assert_eq!(lin.yosida(1.0, 2.0).unwrap(), 1.0);
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        // oracle: (1.5 − clamp(1.5))/0.5
        assert_eq!(ind.yosida(0.5, 1.5).unwrap(), (1.5 - 1.0) / 0.5);
        for eps in [1e-3, 0.1, 2.0] {
            assert_eq!(ind.yosida(eps, 0.3).unwrap(), 0.0);
        }
    }

    #[test]
    fn boundary_yosida_examples() {
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.boundary_yosida(0.5, 2.0, 2.0).unwrap(), (2.0 - 1.0) / (0.5 * 2.0));
        let lin = ScalarGraph::linear();
        assert_eq!(
            lin.boundary_yosida(1.0, 1.0, 2.0).unwrap(),
            lin.yosida(1.0, 2.0).unwrap()
        );
        for g in [ind, lin, ScalarGraph::cubic()] {
            assert_eq!(g.boundary_yosida(0.3, 1.7, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn minimal_section_examples() {
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.minimal_section(1.0).unwrap(), 0.0);
        assert_eq!(ScalarGraph::cubic().minimal_section(2.0).unwrap(), 8.0);
        let shifted_segment = ScalarGraph::new(vec![
            Piece::Branch {
                lo: f64::NEG_INFINITY,
                hi: 2.0,
                lo_closed: false,
                hi_closed: false,
                shape: Shape::Identity,
                scale: 1.0,
                offset: 1.0,
            },
            Piece::vertical(2.0, 3.0, 5.0),
            Piece::Branch {
                lo: 2.0,
                hi: f64::INFINITY,
                lo_closed: false,
                hi_closed: false,
                shape: Shape::Identity,
                scale: 1.0,
                offset: 3.0,
            },
        ])
        .unwrap();
        assert_eq!(shifted_segment.minimal_section(2.0).unwrap(), 3.0);
        assert_eq!(
            ind.minimal_section(1.5),
            Err(GraphError::OutsideDomain(1.5))
        );
    }

    #[test]
    fn moreau_primitive_examples() {
        // ∫₀² s/2 ds = 1 for the linear graph at ε = 1.
        let lin = ScalarGraph::linear();
        assert!((lin.moreau_primitive(1.0, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.moreau_primitive(0.1, 0.5).unwrap(), 0.0);
        for g in [lin, ind, ScalarGraph::cubic()] {
            assert_eq!(g.moreau_primitive(0.3, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn transform_examples() {
        let lin = ScalarGraph::linear();
        let two = lin.scaled(2.0).unwrap();
        assert_eq!(two.yosida(1.0, 3.0).unwrap(), 2.0);
        assert_eq!(lin.scaled(1.0).unwrap(), lin);
        assert_eq!(lin.shifted(0.0), lin);
        // (γ+1)^Y_1(2): solve 2 = y + (y + 1) → y = 0.5, value 1.5; the right
        // side γ^Y_1(1) + 1 = 0.5 + 1 agrees.
        let plus_one = lin.shifted(1.0);
        assert!((oracle_resolvent(&plus_one, 1.0, 2.0) - 0.5).abs() < 1e-12);
        assert_eq!(plus_one.yosida(1.0, 2.0).unwrap(), 1.5);
        assert_eq!(lin.yosida(1.0, 2.0 - 1.0).unwrap() + 1.0, 1.5);

        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.shifted(0.5).yosida(0.1, 0.2).unwrap(), 0.5);
        let five = ind.scaled(5.0).unwrap();
        assert_eq!(five.values_at(0.3), Some((0.0, 0.0)));
        assert_eq!(five.values_at(1.0), Some((0.0, f64::INFINITY)));
        assert_eq!(five.domain(), ind.domain());
    }

    #[test]
    fn single_point_domain_shift_identity() {
        // β = ∂I_{0}: D(β) = {0}, β(0) = ℝ.
        let g = ScalarGraph::new(vec![Piece::vertical(0.0, f64::NEG_INFINITY, f64::INFINITY)])
            .unwrap();
        for a in [-1.0, 0.5, 3.0] {
            for eps in [1e-2, 1.0] {
                for k in 0..=20 {
                    let r = -2.0 + 0.2 * k as f64;
                    let lhs = g.shifted(a).yosida(eps, r).unwrap();
                    let rhs = g.yosida(eps, r - eps * a).unwrap() + a;
                    assert!((lhs - rhs).abs() < 1e-12);
                    assert_eq!(oracle_resolvent(&g.shifted(a), eps, r), 0.0);
                }
            }
        }
    }

    #[test]
    fn validation_rejects_malformed_graphs() {
        assert_eq!(ScalarGraph::new(vec![]), Err(GraphError::Empty));
        // indicator without the right wall
        let r = ScalarGraph::new(vec![
            Piece::vertical(-1.0, f64::NEG_INFINITY, 0.0),
            Piece::constant(-1.0, 1.0, false, true, 0.0),
        ]);
        assert!(matches!(r, Err(GraphError::NotMaximal(_))));
        // decreasing jump
        let r = ScalarGraph::new(vec![
            Piece::constant(f64::NEG_INFINITY, 0.0, false, true, 1.0),
            Piece::constant(0.0, f64::INFINITY, false, false, 0.0),
        ]);
        assert!(matches!(r, Err(GraphError::NotMonotone { .. })));
        // gap
        let r = ScalarGraph::new(vec![
            Piece::branch(f64::NEG_INFINITY, 0.0, false, false, Shape::Identity),
            Piece::branch(0.5, f64::INFINITY, false, false, Shape::Identity),
        ]);
        assert!(matches!(r, Err(GraphError::Tiling { .. })));
    }

    #[test]
    fn domains_and_inclusion() {
        let ind = ScalarGraph::indicator(-1.0, 1.0).domain();
        let log = ScalarGraph::logarithmic().domain();
        let cub = ScalarGraph::cubic().domain();
        assert!(ind.contains(1.0) && !log.contains(1.0));
        assert_eq!(log.inclusion_witness(&ind), Some(-1.0));
        assert_eq!(cub.inclusion_witness(&ind), None);
        assert_eq!(ind.inclusion_witness(&ind), None);
        assert_eq!(ind.inclusion_witness(&cub), Some(-2.0));
    }

    #[test]
    fn primitives() {
        assert_eq!(ScalarGraph::cubic().primitive(2.0), 4.0);
        assert_eq!(ScalarGraph::cubic().primitive(-2.0), 4.0);
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        assert_eq!(ind.primitive(0.7), 0.0);
        assert_eq!(ind.primitive(1.0), 0.0);
        assert_eq!(ind.primitive(1.2), f64::INFINITY);
        let log = ScalarGraph::logarithmic();
        assert!((log.primitive(1.0) - 2.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn inclusion_solver_snaps_to_walls() {
        let ind = ScalarGraph::indicator(-1.0, 1.0);
        let zero = |_: f64| 0.0;
        assert_eq!(solve_inclusion(5.0, 2.0, &zero, &[(1.0, &ind)]).unwrap(), 1.0);
        assert_eq!(solve_inclusion(-5.0, 2.0, &zero, &[(1.0, &ind)]).unwrap(), -1.0);
        let u = solve_inclusion(1.0, 2.0, &zero, &[(1.0, &ind)]).unwrap();
        assert!((u - 0.5).abs() < 1e-14);
        let cub = ScalarGraph::cubic();
        let u = solve_inclusion(3.0, 1.0, &zero, &[(0.5, &cub), (1.0, &ind)]).unwrap();
        assert_eq!(u, 1.0);
        let u = solve_inclusion(1.0, 1.0, &zero, &[(1.0, &cub)]).unwrap();
        assert!((u + u * u * u - 1.0).abs() < 1e-12);
    }
}
