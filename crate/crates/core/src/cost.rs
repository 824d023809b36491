//! Weight penalties, directed edge costs and the analytic side of the model:
//! explosion thresholds, the phase classifier, the boxing-parameter solver and
//! the first-passage functional `I(L)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::randomness::EdgeLengthLaw;

/// Relative tolerance for calling a flatness exponent equal to a threshold.
pub const CRITICAL_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Outward,
    Inward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Outward => "outward",
            Direction::Inward => "inward",
        })
    }
}

impl FromStr for Direction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "outward" | "out" => Ok(Direction::Outward),
            "inward" | "in" => Ok(Direction::Inward),
            _ => Err(Error::param(format!("unknown direction '{s}'"))),
        }
    }
}

/// `coeff * w1^mu * w2^nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub mu: f64,
    pub nu: f64,
}

/// `sum_i a_i w1^{mu_i} w2^{nu_i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyPolynomial {
    terms: Vec<Monomial>,
}

impl PenaltyPolynomial {
    /// A zero degree is accepted: the constant penalty reduces the cost to
    /// plain first-passage percolation.
    pub fn new(terms: Vec<Monomial>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::param("penalty polynomial needs at least one term"));
        }
        for t in &terms {
            if !(t.coeff > 0.0) || !t.coeff.is_finite() || !(t.mu >= 0.0) || !(t.nu >= 0.0) || !t.mu.is_finite() || !t.nu.is_finite() {
                return Err(Error::param(format!(
                    "penalty terms need a > 0 and finite mu, nu >= 0; got {t:?}"
                )));
            }
        }
        Ok(Self { terms })
    }

    /// `(w1 w2)^mu`.
    pub fn product(mu: f64) -> Result<Self> {
        Self::monomial(mu, mu)
    }

    pub fn monomial(mu: f64, nu: f64) -> Result<Self> {
        Self::new(vec![Monomial { coeff: 1.0, mu, nu }])
    }

    /// `w1^mu + w2^mu`.
    pub fn power_sum(mu: f64) -> Result<Self> {
        Self::new(vec![
            Monomial { coeff: 1.0, mu, nu: 0.0 },
            Monomial { coeff: 1.0, mu: 0.0, nu: mu },
        ])
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn eval(&self, w1: f64, w2: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * w1.powf(t.mu) * w2.powf(t.nu))
            .sum()
    }

    pub fn deg(&self) -> f64 {
        self.terms.iter().map(|t| t.mu + t.nu).fold(0.0, f64::max)
    }

    /// `f_rev(w1, w2) = f(w2, w1)`.
    pub fn reversed(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: t.coeff,
                    mu: t.nu,
                    nu: t.mu,
                })
                .collect(),
        }
    }

    pub fn is_monomial(&self) -> bool {
        self.terms.len() == 1
    }

    /// Symmetric as a function: the multiset of terms is closed under swapping exponents.
    pub fn is_symmetric(&self) -> bool {
        let key = |t: &Monomial| (t.coeff.to_bits(), t.mu.to_bits(), t.nu.to_bits());
        let mut a: Vec<_> = self.terms.iter().map(key).collect();
        let mut b: Vec<_> = self.reversed().terms.iter().map(key).collect();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    }
}

/// A weight penalty `f(W_tail, W_head)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    Polynomial(PenaltyPolynomial),
    /// `(w1 + w2)^mu`.
    Sum { mu: f64 },
    /// `max(w1, w2)^mu`.
    Max { mu: f64 },
}

impl Penalty {
    pub fn product(mu: f64) -> Result<Self> {
        PenaltyPolynomial::product(mu).map(Penalty::Polynomial)
    }

    pub fn monomial(mu: f64, nu: f64) -> Result<Self> {
        PenaltyPolynomial::monomial(mu, nu).map(Penalty::Polynomial)
    }

    pub fn eval(&self, w1: f64, w2: f64) -> f64 {
        match self {
            Penalty::Polynomial(p) => p.eval(w1, w2),
            Penalty::Sum { mu } => (w1 + w2).powf(*mu),
            Penalty::Max { mu } => w1.max(w2).powf(*mu),
        }
    }

    pub fn deg(&self) -> f64 {
        match self {
            Penalty::Polynomial(p) => p.deg(),
            Penalty::Sum { mu } | Penalty::Max { mu } => *mu,
        }
    }

    pub fn reversed(&self) -> Self {
        match self {
            Penalty::Polynomial(p) => Penalty::Polynomial(p.reversed()),
            other => other.clone(),
        }
    }

    /// Polynomial with the same explosion behaviour: `w1^mu + w2^mu` stands in
    /// for the sum and max penalties, which are within constant factors of it.
    pub fn classification_proxy(&self) -> PenaltyPolynomial {
        match self {
            Penalty::Polynomial(p) => p.clone(),
            Penalty::Sum { mu } | Penalty::Max { mu } => {
                PenaltyPolynomial::power_sum(*mu).expect("validated exponent")
            }
        }
    }

    fn validate(self) -> Result<Self> {
        match self {
            Penalty::Sum { mu } | Penalty::Max { mu } if !(mu >= 0.0) || !mu.is_finite() => {
                Err(Error::param(format!("penalty exponent must be finite and >= 0, got {mu}")))
            }
            other => Ok(other),
        }
    }
}

fn parse_num(s: &str) -> Result<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| Error::param(format!("bad number '{s}'")))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::param(format!("bad number '{s}'")))?;
            a / b
        }
        None => s.parse().map_err(|_| Error::param(format!("bad number '{s}'")))?,
    };
    Ok(v)
}

fn parse_list(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s.split(',').map(parse_num).collect::<Result<_>>()?;
    if v.len() != n {
        return Err(Error::param(format!("expected {n} comma-separated numbers in '{s}'")));
    }
    Ok(v)
}

impl FromStr for Penalty {
    type Err = Error;

    /// `prod:mu`, `mono:mu,nu`, `sum:mu`, `max:mu`, `poly:a,mu,nu[;a,mu,nu]...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::param(format!("penalty '{s}' must look like kind:params")))?;
        match kind.trim() {
            "prod" => Penalty::product(parse_num(rest)?),
            "mono" => {
                let v = parse_list(rest, 2)?;
                Penalty::monomial(v[0], v[1])
            }
            "sum" => Penalty::Sum { mu: parse_num(rest)? }.validate(),
            "max" => Penalty::Max { mu: parse_num(rest)? }.validate(),
            "poly" => {
                let terms = rest
                    .split(';')
                    .map(|t| {
                        let v = parse_list(t, 3)?;
                        Ok(Monomial {
                            coeff: v[0],
                            mu: v[1],
                            nu: v[2],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                PenaltyPolynomial::new(terms).map(Penalty::Polynomial)
            }
            other => Err(Error::param(format!("unknown penalty kind '{other}'"))),
        }
    }
}

impl fmt::Display for Penalty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Penalty::Sum { mu } => write!(f, "sum:{mu}"),
            Penalty::Max { mu } => write!(f, "max:{mu}"),
            Penalty::Polynomial(p) => match p.terms() {
                [t] if t.coeff == 1.0 && t.mu == t.nu => write!(f, "prod:{}", t.mu),
                [t] if t.coeff == 1.0 => write!(f, "mono:{},{}", t.mu, t.nu),
                terms => {
                    f.write_str("poly:")?;
                    for (i, t) in terms.iter().enumerate() {
                        if i > 0 {
                            f.write_str(";")?;
                        }
                        write!(f, "{},{},{}", t.coeff, t.mu, t.nu)?;
                    }
                    Ok(())
                }
            },
        }
    }
}

pub fn eval_penalty(f: &Penalty, w1: f64, w2: f64) -> f64 {
    f.eval(w1, w2)
}

/// Cost of traversing an edge of length `l` from `tail` to `head`.
pub fn directed_edge_cost(f: &Penalty, w_tail: f64, w_head: f64, l: f64) -> f64 {
    l * f.eval(w_tail, w_head)
}

pub fn deg_f(f: &Penalty) -> f64 {
    f.deg()
}

/// Per-vertex powers of the weights so that a search evaluates `f` with a few
/// multiplications per edge. Values agree exactly with [`Penalty::eval`].
#[derive(Debug, Clone)]
pub struct PenaltyTable {
    kind: TableKind,
}

#[derive(Debug, Clone)]
enum TableKind {
    Poly {
        coeffs: Vec<f64>,
        /// `w_v^{mu_i}` and `w_v^{nu_i}`, row-major by vertex.
        tail: Vec<f64>,
        head: Vec<f64>,
    },
    Sum {
        weights: Vec<f64>,
        mu: f64,
    },
    Max {
        powered: Vec<f64>,
    },
}

impl PenaltyTable {
    pub fn new(f: &Penalty, weights: &[f64]) -> Self {
        let kind = match f {
            Penalty::Polynomial(p) => {
                let t = p.terms();
                TableKind::Poly {
                    coeffs: t.iter().map(|m| m.coeff).collect(),
                    tail: weights.iter().flat_map(|&w| t.iter().map(move |m| w.powf(m.mu))).collect(),
                    head: weights.iter().flat_map(|&w| t.iter().map(move |m| w.powf(m.nu))).collect(),
                }
            }
            Penalty::Sum { mu } => TableKind::Sum {
                weights: weights.to_vec(),
                mu: *mu,
            },
            Penalty::Max { mu } => TableKind::Max {
                powered: weights.iter().map(|&w| w.powf(*mu)).collect(),
            },
        };
        Self { kind }
    }

    /// `f(W_tail, W_head)`.
    #[inline]
    pub fn factor(&self, tail: usize, head: usize) -> f64 {
        match &self.kind {
            TableKind::Poly { coeffs, tail: a, head: b } => {
                let k = coeffs.len();
                let (ra, rb) = (&a[tail * k..tail * k + k], &b[head * k..head * k + k]);
                let mut s = 0.0;
                for i in 0..k {
                    s += coeffs[i] * ra[i] * rb[i];
                }
                s
            }
            TableKind::Sum { weights, mu } => (weights[tail] + weights[head]).powf(*mu),
            TableKind::Max { powered } => powered[tail].max(powered[head]),
        }
    }
}

/// Critical flatness exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalBeta {
    Single(f64),
    /// Explosive for `beta+ < explosive_below`, conservative for
    /// `beta- > conservative_above`; the gap in between is not decided.
    OneSided {
        explosive_below: f64,
        conservative_above: f64,
    },
}

impl fmt::Display for CriticalBeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CriticalBeta::Single(b) => write!(f, "beta_c={b}"),
            CriticalBeta::OneSided {
                explosive_below,
                conservative_above,
            } => write!(f, "explosive_below={explosive_below} conservative_above={conservative_above}"),
        }
    }
}

/// `(2 - tau) / nu`, with `nu = 0` read as `+inf` for `tau < 2` and as
/// no constraint (`-inf`) for `tau >= 2`.
fn side_threshold(tau: f64, nu: f64) -> f64 {
    if nu == 0.0 {
        if tau < 2.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (2.0 - tau) / nu
    }
}

fn thresholds(p: &PenaltyPolynomial, tau: f64) -> (f64, f64) {
    let deg = p.deg();
    let lengthwise = (3.0 - tau) / deg;
    let sideways = if tau < 2.0 {
        p.terms().iter().map(|t| side_threshold(tau, t.nu)).fold(f64::INFINITY, f64::min)
    } else {
        f64::NEG_INFINITY
    };
    let top = p
        .terms()
        .iter()
        .filter(|t| t.mu + t.nu == deg)
        .map(|t| side_threshold(tau, t.nu))
        .fold(f64::INFINITY, f64::min);
    (lengthwise.max(sideways), lengthwise.max(top))
}

/// Threshold in `beta` separating explosion from conservativeness (outward).
pub fn critical_beta(f: &Penalty, tau: f64) -> Result<CriticalBeta> {
    if !(tau > 1.0 && tau < 3.0) {
        return Err(Error::param(format!("critical beta needs tau in (1, 3), got {tau}")));
    }
    let (below, above) = thresholds(&f.classification_proxy(), tau);
    if below == above {
        Ok(CriticalBeta::Single(below))
    } else {
        Ok(CriticalBeta::OneSided {
            explosive_below: below,
            conservative_above: above,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseOutcome {
    ExplosiveSideways,
    ExplosiveLengthwise,
    Conservative,
    Critical,
    Inconclusive,
}

impl PhaseOutcome {
    pub fn is_explosive(self) -> bool {
        matches!(self, PhaseOutcome::ExplosiveSideways | PhaseOutcome::ExplosiveLengthwise)
    }
}

impl fmt::Display for PhaseOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseOutcome::ExplosiveSideways => "ExplosiveSideways",
            PhaseOutcome::ExplosiveLengthwise => "ExplosiveLengthwise",
            PhaseOutcome::Conservative => "Conservative",
            PhaseOutcome::Critical => "Critical",
            PhaseOutcome::Inconclusive => "Inconclusive",
        })
    }
}

impl FromStr for PhaseOutcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ExplosiveSideways" => PhaseOutcome::ExplosiveSideways,
            "ExplosiveLengthwise" => PhaseOutcome::ExplosiveLengthwise,
            "Conservative" => PhaseOutcome::Conservative,
            "Critical" => PhaseOutcome::Critical,
            "Inconclusive" => PhaseOutcome::Inconclusive,
            _ => return Err(Error::param(format!("unknown phase outcome '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVerdict {
    pub outcome: PhaseOutcome,
    pub direction: Direction,
    pub triggered_condition: String,
    pub critical: Option<CriticalBeta>,
}

impl fmt::Display for PhaseVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "outcome={} direction={}", self.outcome, self.direction)?;
        if let Some(c) = &self.critical {
            write!(f, " {c}")?;
        }
        write!(f, " condition=\"{}\"", self.triggered_condition)
    }
}

fn near(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= CRITICAL_RTOL * a.abs().max(b.abs())
}

/// Outward verdict for `f`, from the flatness exponents of the length law.
pub fn classify(f: &Penalty, tau: f64, alpha: f64, beta_minus: f64, beta_plus: f64) -> Result<PhaseVerdict> {
    classify_directed(f, Direction::Outward, tau, alpha, beta_minus, beta_plus)
}

/// Inward verdicts are the outward verdicts of the reversed penalty.
pub fn classify_directed(
    f: &Penalty,
    direction: Direction,
    tau: f64,
    alpha: f64,
    beta_minus: f64,
    beta_plus: f64,
) -> Result<PhaseVerdict> {
    if !(tau > 1.0) || tau.is_nan() {
        return Err(Error::param(format!("tau must exceed 1, got {tau}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::param(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta_minus >= 0.0) || !(beta_plus >= 0.0) {
        return Err(Error::param("flatness exponents must be >= 0"));
    }
    if beta_minus > beta_plus {
        return Err(Error::param(format!("beta- = {beta_minus} exceeds beta+ = {beta_plus}")));
    }
    let oriented = match direction {
        Direction::Outward => f.clone(),
        Direction::Inward => f.reversed(),
    };
    let verdict = |outcome, cond: &str, critical| PhaseVerdict {
        outcome,
        direction,
        triggered_condition: cond.to_string(),
        critical,
    };
    if tau >= 3.0 {
        return Ok(verdict(PhaseOutcome::Conservative, "tau >= 3: finite-variance weights", None));
    }
    let p = oriented.classification_proxy();
    let critical = critical_beta(&oriented, tau).ok();
    if alpha <= 1.0 {
        return Ok(verdict(PhaseOutcome::ExplosiveSideways, "clause (i), alpha <= 1", critical));
    }
    let deg = p.deg();
    if tau < 2.0 && p.terms().iter().all(|t| beta_plus < side_threshold(tau, t.nu)) {
        return Ok(verdict(
            PhaseOutcome::ExplosiveSideways,
            "clause (i), beta+ < (2-tau)/nu_i for all terms",
            critical,
        ));
    }
    if deg == 0.0 {
        return Ok(verdict(
            PhaseOutcome::Inconclusive,
            "deg(f) = 0: explosion is decided by the functional I(L)",
            critical,
        ));
    }
    let lengthwise = (3.0 - tau) / deg;
    if beta_plus < lengthwise && !near(beta_plus, lengthwise) {
        return Ok(verdict(
            PhaseOutcome::ExplosiveLengthwise,
            "clause (ii), beta+ < (3-tau)/deg(f)",
            critical,
        ));
    }
    if beta_minus > lengthwise && !near(beta_minus, lengthwise) {
        let top: Vec<usize> = p
            .terms()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.mu + t.nu == deg)
            .map(|(i, _)| i)
            .collect();
        let qualifying: Vec<usize> = top
            .iter()
            .copied()
            .filter(|&i| {
                let s = side_threshold(tau, p.terms()[i].nu);
                beta_minus > s && !near(beta_minus, s)
            })
            .collect();
        if !qualifying.is_empty() {
            let cond = if top.len() > 1 {
                format!(
                    "clause (iii), beta- > (3-tau)/deg(f); {} of {} top-degree terms satisfy beta- > (2-tau)/nu_i (first: term {})",
                    qualifying.len(),
                    top.len(),
                    qualifying[0]
                )
            } else {
                "clause (iii), beta- > (3-tau)/deg(f) and beta- > (2-tau)/nu_i".to_string()
            };
            return Ok(verdict(PhaseOutcome::Conservative, &cond, critical));
        }
    }
    if near(beta_minus, beta_plus) {
        let at_boundary = match critical {
            Some(CriticalBeta::Single(b)) => near(beta_plus, b),
            Some(CriticalBeta::OneSided {
                explosive_below,
                conservative_above,
            }) => near(beta_plus, explosive_below) || near(beta_plus, conservative_above),
            None => false,
        };
        if at_boundary {
            return Ok(verdict(PhaseOutcome::Critical, "beta- = beta+ = critical value", critical));
        }
    }
    Ok(verdict(PhaseOutcome::Inconclusive, "no clause applies", critical))
}

/// Classification with the exponents read off the length law; a zero-degree
/// penalty falls back on the convergence of `I(L)`.
pub fn classify_with_law(
    f: &Penalty,
    direction: Direction,
    tau: f64,
    alpha: f64,
    law: &EdgeLengthLaw,
) -> Result<PhaseVerdict> {
    law.validate()?;
    let mut v = classify_directed(f, direction, tau, alpha, law.beta_minus(), law.beta_plus())?;
    if f.deg() == 0.0 && v.outcome == PhaseOutcome::Inconclusive {
        let fpp = fpp_explosion_functional(law, 5);
        v.outcome = if fpp.convergent {
            PhaseOutcome::ExplosiveLengthwise
        } else {
            PhaseOutcome::Conservative
        };
        v.triggered_condition = format!(
            "deg(f) = 0: I(L) {} (partial sum {})",
            if fpp.convergent { "finite" } else { "infinite" },
            fpp.partial_sum
        );
    }
    Ok(v)
}

/// Open interval; empty when `lo >= hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

fn check_admissible(tau: f64, mu: f64, nu: f64, beta_plus: f64) -> Result<()> {
    if !(tau > 1.0 && tau < 3.0) {
        return Err(Error::param(format!("tau must lie in (1, 3), got {tau}")));
    }
    if !(mu >= 0.0 && nu >= 0.0 && beta_plus >= 0.0) || !beta_plus.is_finite() {
        return Err(Error::param("mu, nu, beta+ must be finite and >= 0"));
    }
    if !((mu + nu) * beta_plus < 3.0 - tau) {
        return Err(Error::param(format!(
            "(mu+nu) beta+ = {} is not below 3 - tau = {}",
            (mu + nu) * beta_plus,
            3.0 - tau
        )));
    }
    Ok(())
}

/// Admissible interval for `D` at a given `delta`.
pub fn idelta_interval(tau: f64, mu: f64, nu: f64, beta_plus: f64, delta: f64) -> Result<Interval> {
    check_admissible(tau, mu, nu, beta_plus)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(Interval {
        lo: 1.0 + (mu + nu) * beta_plus / (tau - 1.0) * (1.0 + delta) / ((1.0 - delta) * (1.0 - delta)),
        hi: 2.0 / (tau - 1.0) * (1.0 - delta) / (1.0 + delta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxingParams {
    pub delta: f64,
    pub c: f64,
    pub d: f64,
    pub xi: f64,
    pub rho: f64,
}

/// Points at which the `s`-dependent inequalities are checked.
pub const S_GRID: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// `2 (1-delta)/(tau-1) - C^s D`; must be positive.
pub fn cdx2_lhs(tau: f64, delta: f64, c: f64, d: f64, s: f64) -> f64 {
    (1.0 - delta) / (tau - 1.0) * 2.0 - c.powf(s) * d
}

/// `(mu + nu C^s)(1+delta)/(tau-1) - (D-1) C^s (1-delta)^2 / beta+`; must be negative.
#[allow(clippy::too_many_arguments)]
pub fn mubeta3_lhs(tau: f64, mu: f64, nu: f64, beta_plus: f64, delta: f64, c: f64, d: f64, s: f64) -> f64 {
    let cs = c.powf(s);
    let penalty = (mu + nu * cs) * (1.0 + delta) / (tau - 1.0);
    if beta_plus == 0.0 {
        return f64::NEG_INFINITY;
    }
    penalty - (d - 1.0) * cs * (1.0 - delta) * (1.0 - delta) / beta_plus
}

/// `(1-delta)(1+C)/(tau-1) - D C`; must be positive.
pub fn cd_lhs(tau: f64, delta: f64, c: f64, d: f64) -> f64 {
    (1.0 - delta) * (1.0 + c) / (tau - 1.0) - d * c
}

/// Find `(delta, C, D)` for the boxing construction: `delta` is halved from
/// 0.2 until the interval for `D` is non-empty and the midpoint passes every
/// check on the `s`-grid.
pub fn solve_boxing_params(tau: f64, mu: f64, nu: f64, beta_plus: f64) -> Result<BoxingParams> {
    check_admissible(tau, mu, nu, beta_plus)?;
    let mut delta = 0.2;
    let mut last_failure = String::new();
    while delta >= 2f64.powi(-20) {
        let iv = idelta_interval(tau, mu, nu, beta_plus, delta)?;
        if iv.is_empty() {
            last_failure = format!("I_delta empty at delta={delta}: ({}, {})", iv.lo, iv.hi);
            delta *= 0.5;
            continue;
        }
        let c = 1.0 + delta;
        let d = iv.midpoint();
        let mut failure = None;
        for &s in &S_GRID {
            if !(cdx2_lhs(tau, delta, c, d, s) > 0.0) {
                failure = Some(format!("2(1-delta)/(tau-1) - C^s D > 0 fails at s={s}, delta={delta}"));
                break;
            }
            if !(mubeta3_lhs(tau, mu, nu, beta_plus, delta, c, d, s) < 0.0) {
                failure = Some(format!("penalty/flatness inequality fails at s={s}, delta={delta}"));
                break;
            }
        }
        if failure.is_none() && !(cd_lhs(tau, delta, c, d) > 0.0) {
            failure = Some(format!("(1-delta)(1+C)/(tau-1) - DC > 0 fails at delta={delta}"));
        }
        match failure {
            None => {
                let (xi, rho) = xi_rho(tau, mu, nu, beta_plus, delta, c, d);
                if !(xi > 0.0 && rho > 0.0) {
                    last_failure = format!("xi={xi}, rho={rho} not positive at delta={delta}");
                    delta *= 0.5;
                    continue;
                }
                return Ok(BoxingParams { delta, c, d, xi, rho });
            }
            Some(msg) => {
                last_failure = msg;
                delta *= 0.5;
            }
        }
    }
    Err(Error::Solver(last_failure))
}

/// The constants `xi(delta)` and `rho(delta)`; both infinite when `beta+ = 0`.
pub fn xi_rho(tau: f64, mu: f64, nu: f64, beta_plus: f64, delta: f64, c: f64, d: f64) -> (f64, f64) {
    if beta_plus == 0.0 {
        return (f64::INFINITY, f64::INFINITY);
    }
    let om = 1.0 - delta;
    let xi = -(mu + nu * c) * (1.0 + delta) / (tau - 1.0) + om * om / beta_plus * c * (d - 1.0);
    let rho = -(tau - 1.0) / om * ((mu + c * nu) / (tau - 1.0) - om * om * (d - 1.0) / beta_plus);
    (xi, rho)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FppFunctional {
    pub partial_sum: f64,
    pub terms: usize,
    /// Whether the full series converges, from the law's behaviour at zero.
    pub convergent: bool,
}

/// Largest index usable in `sum_k F^{-1}(exp(-e^k))`: `exp(-e^6)` underflows.
pub const FPP_MAX_TERMS: usize = 5;

/// Partial sum `sum_{k=1}^{k_max} F^{-1}(exp(-e^k))`, with `k_max` clamped to
/// `1..=5`.
pub fn fpp_explosion_functional(law: &EdgeLengthLaw, k_max: usize) -> FppFunctional {
    let k_max = k_max.clamp(1, FPP_MAX_TERMS);
    let partial_sum = (1..=k_max)
        .map(|k| law.quantile((-(k as f64).exp()).exp()))
        .sum();
    let convergent = match *law {
        // Quantile near zero decays like y^{1/beta}, summable along exp(-e^k).
        EdgeLengthLaw::PolyAtZero { .. } | EdgeLengthLaw::Exponential { .. } => true,
        EdgeLengthLaw::PointMass { value } => value == 0.0,
        // Quantile at exp(-e^k) is of order k^{-1/eta}... but bounded below by
        // a constant times (c2/k)^{1/eta}, whose sum diverges for eta > 1.
        EdgeLengthLaw::DoubleExpFlat { .. } => false,
    };
    FppFunctional {
        partial_sum,
        terms: k_max,
        convergent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Penalty {
        s.parse().unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_penalty(&p("prod:1"), 2.0, 3.0), 6.0);
        assert_eq!(eval_penalty(&p("mono:3,0.25"), 1.0, 16.0), 2.0);
        assert_eq!(eval_penalty(&p("poly:1,2,0;1,0,2"), 2.0, 3.0), 13.0);
        assert_eq!(eval_penalty(&p("sum:2"), 2.0, 3.0), 25.0);
        assert_eq!(eval_penalty(&p("max:2"), 2.0, 3.0), 9.0);
    }

    #[test]
    fn cost_examples() {
        assert_eq!(directed_edge_cost(&p("prod:0"), 5.0, 7.0, 0.37), 0.37);
        assert_eq!(directed_edge_cost(&p("prod:1"), 2.0, 3.0, 0.5), 3.0);
        let f = p("mono:3,1/4");
        assert_ne!(directed_edge_cost(&f, 2.0, 5.0, 0.3), directed_edge_cost(&f, 5.0, 2.0, 0.3));
    }

    #[test]
    fn degree_examples() {
        assert_eq!(deg_f(&p("prod:0.7")), 1.4);
        assert_eq!(deg_f(&p("mono:3,0.25")), 3.25);
        assert_eq!(deg_f(&p("poly:3,2,1;1,1,1.5")), 3.0);
    }

    #[test]
    fn grammar_round_trip() {
        for s in ["prod:1", "mono:3,0.25", "sum:2", "max:0.5", "poly:2,1,0;1.5,0,3"] {
            let f = p(s);
            assert_eq!(f.to_string(), s);
            assert_eq!(p(&f.to_string()), f);
        }
        assert!("prod:-1".parse::<Penalty>().is_err());
        assert!("poly:1,2".parse::<Penalty>().is_err());
        assert!("foo:1".parse::<Penalty>().is_err());
    }

    #[test]
    fn critical_beta_examples() {
        assert_eq!(critical_beta(&p("prod:1"), 2.5).unwrap(), CriticalBeta::Single(0.25));
        assert_eq!(critical_beta(&p("max:1"), 2.5).unwrap(), CriticalBeta::Single(0.5));
        assert_eq!(critical_beta(&p("sum:1"), 2.5).unwrap(), CriticalBeta::Single(0.5));
        assert_eq!(critical_beta(&p("mono:3,0.25"), 1.5).unwrap(), CriticalBeta::Single(2.0));
        assert!(critical_beta(&p("prod:1"), 3.0).is_err());
        assert!(critical_beta(&p("prod:1"), 1.0).is_err());
    }

    #[test]
    fn classify_examples() {
        let f = p("prod:1");
        let v = classify(&f, 2.5, 0.5, 0.3, 0.3).unwrap();
        assert_eq!(v.outcome, PhaseOutcome::ExplosiveSideways);
        assert!(v.triggered_condition.contains("alpha <= 1"));
        assert_eq!(classify(&f, 2.5, 2.0, 0.1, 0.1).unwrap().outcome, PhaseOutcome::ExplosiveLengthwise);
        assert_eq!(classify(&f, 2.5, 2.0, 1.0, 1.0).unwrap().outcome, PhaseOutcome::Conservative);
        assert_eq!(classify(&f, 2.5, 2.0, 0.25, 0.25).unwrap().outcome, PhaseOutcome::Critical);
        assert_eq!(classify(&f, 3.5, 2.0, 0.01, 0.01).unwrap().outcome, PhaseOutcome::Conservative);
        assert!(classify(&f, 2.5, 2.0, 0.5, 0.2).is_err());
    }

    #[test]
    fn breakdown_example_is_inconclusive() {
        for beta in [0.5, 1.0, 2.0, 3.7] {
            let f = Penalty::Polynomial(
                PenaltyPolynomial::new(vec![
                    Monomial { coeff: 1.0, mu: 7.0 / (4.0 * beta), nu: 0.0 },
                    Monomial { coeff: 1.0, mu: 0.0, nu: 3.0 / (4.0 * beta) },
                ])
                .unwrap(),
            );
            let v = classify(&f, 1.5, 2.0, beta, beta).unwrap();
            assert_eq!(v.outcome, PhaseOutcome::Inconclusive, "beta={beta}: {v}");
        }
    }

    #[test]
    fn asymmetric_monomial() {
        let f = p("mono:3,0.25");
        let out = classify_directed(&f, Direction::Outward, 1.5, 2.0, 1.0, 1.0).unwrap();
        let inw = classify_directed(&f, Direction::Inward, 1.5, 2.0, 1.0, 1.0).unwrap();
        assert_eq!(out.outcome, PhaseOutcome::ExplosiveSideways);
        assert_eq!(inw.outcome, PhaseOutcome::Conservative);
    }

    #[test]
    fn fpp_zero_degree() {
        let f = p("prod:0");
        let exp = EdgeLengthLaw::Exponential { rate: 1.0 };
        let v = classify_with_law(&f, Direction::Outward, 2.5, 2.0, &exp).unwrap();
        assert_eq!(v.outcome, PhaseOutcome::ExplosiveLengthwise);
        let flat = EdgeLengthLaw::DoubleExpFlat { eta: 2.0, c1: 1.0, c2: 1.0 };
        let v = classify_with_law(&f, Direction::Outward, 2.5, 2.0, &flat).unwrap();
        assert_eq!(v.outcome, PhaseOutcome::Conservative);
    }

    #[test]
    fn idelta_examples() {
        let iv = idelta_interval(2.0, 0.25, 0.25, 1.0, 1e-12).unwrap();
        assert!((iv.lo - 1.5).abs() < 1e-9 && (iv.hi - 2.0).abs() < 1e-9);
        let iv = idelta_interval(2.0, 0.25, 0.25, 1.0, 0.9).unwrap();
        assert!(iv.is_empty());
        let iv = idelta_interval(2.5, 1.0, 1.0, 0.1, 0.01).unwrap();
        // 1 + 0.2/1.5 * 1.01/0.99^2 and 2/1.5 * 0.99/1.01.
        assert!((iv.lo - 1.137_400_945_481_753_5).abs() < 1e-12, "{}", iv.lo);
        assert!((iv.hi - 1.306_930_693_069_307).abs() < 1e-12, "{}", iv.hi);
    }

    #[test]
    fn solver_example() {
        let bp = solve_boxing_params(2.5, 1.0, 1.0, 0.1).unwrap();
        let iv = idelta_interval(2.5, 1.0, 1.0, 0.1, bp.delta).unwrap();
        assert!(iv.contains(bp.d));
        assert_eq!(bp.c, 1.0 + bp.delta);
        for s in S_GRID {
            assert!(cdx2_lhs(2.5, bp.delta, bp.c, bp.d, s) > 0.0);
            assert!(mubeta3_lhs(2.5, 1.0, 1.0, 0.1, bp.delta, bp.c, bp.d, s) < 0.0);
        }
        assert!(bp.xi > 0.0 && bp.rho > 0.0);
        assert!(solve_boxing_params(2.5, 1.0, 1.0, 0.25).is_err());
    }

    #[test]
    fn fpp_examples() {
        let r = fpp_explosion_functional(&EdgeLengthLaw::PointMass { value: 0.0 }, 4);
        assert_eq!(r.partial_sum, 0.0);
        assert!(r.convergent);
        let r = fpp_explosion_functional(&EdgeLengthLaw::Exponential { rate: 1.0 }, 3);
        assert!((r.partial_sum - 0.068_884_203_157_106_90).abs() < 1e-15, "{}", r.partial_sum);
        let r = fpp_explosion_functional(&EdgeLengthLaw::DoubleExpFlat { eta: 2.0, c1: 1.0, c2: 1.0 }, 5);
        assert!(!r.convergent);
        assert_eq!(fpp_explosion_functional(&EdgeLengthLaw::Exponential { rate: 1.0 }, 40).terms, 5);
    }

    #[test]
    fn table_matches_eval() {
        let w = [1.0, 2.5, 17.0, 1e3];
        for s in ["prod:1.3", "mono:3,0.25", "sum:0.7", "max:2", "poly:2,1,0;1.5,0,3;0.1,0.5,0.5"] {
            let f = p(s);
            let t = PenaltyTable::new(&f, &w);
            for i in 0..4 {
                for j in 0..4 {
                    let a = t.factor(i, j);
                    let b = f.eval(w[i], w[j]);
                    assert!((a - b).abs() <= 1e-15 * b.abs(), "{s} {i} {j}");
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn exponent() -> impl Strategy<Value = f64> {
            prop_oneof![Just(0.0), 0.01f64..4.0]
        }

        fn poly() -> impl Strategy<Value = Penalty> {
            prop::collection::vec((0.1f64..3.0, exponent(), exponent()), 1..4).prop_filter_map("degree", |ts| {
                let p = PenaltyPolynomial::new(ts.into_iter().map(|(coeff, mu, nu)| Monomial { coeff, mu, nu }).collect()).ok()?;
                (p.deg() > 0.0).then_some(Penalty::Polynomial(p))
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]
            #[test]
            fn inward_is_reversed_outward(f in poly(), tau in 1.05f64..2.95, alpha in 0.5f64..4.0, b in 0.0f64..3.0, gap in 0.0f64..1.0) {
                let inw = classify_directed(&f, Direction::Inward, tau, alpha, b, b + gap).unwrap();
                let out = classify_directed(&f.reversed(), Direction::Outward, tau, alpha, b, b + gap).unwrap();
                prop_assert_eq!(inw.outcome, out.outcome);
                prop_assert_eq!(inw.triggered_condition, out.triggered_condition);
            }

            #[test]
            fn symmetric_monomial_threshold(mu in 0.05f64..4.0, tau in 2.0001f64..2.9999) {
                let f = Penalty::product(mu).unwrap();
                prop_assert_eq!(critical_beta(&f, tau).unwrap(), CriticalBeta::Single((3.0 - tau) / (2.0 * mu)));
            }

            #[test]
            fn sum_max_chain(w1 in 1.0f64..1e3, w2 in 1.0f64..1e3, mu in 0.0f64..4.0) {
                let ps = w1.powf(mu) + w2.powf(mu);
                let mx = w1.max(w2).powf(mu);
                let sm = (w1 + w2).powf(mu);
                prop_assert!(ps / 2.0 <= mx * (1.0 + 1e-15));
                prop_assert!(mx <= sm);
                prop_assert!(sm <= 2f64.powf(mu) * ps * (1.0 + 1e-15));
            }

            #[test]
            fn evaluation_lower_bound(f in poly(), w1 in 1.0f64..1e4, w2 in 1.0f64..1e4) {
                let Penalty::Polynomial(p) = &f else { unreachable!() };
                let amin = p.terms().iter().map(|t| t.coeff).fold(f64::INFINITY, f64::min);
                prop_assert!(f.eval(w1, w2) >= amin);
            }

            #[test]
            fn solver_output_is_valid(tau in 1.05f64..2.95, mu in 0.0f64..3.0, nu in 0.0f64..3.0, frac in 0.0f64..0.98) {
                let deg = mu + nu;
                let beta = if deg > 0.0 { frac * (3.0 - tau) / deg } else { frac };
                let bp = solve_boxing_params(tau, mu, nu, beta).unwrap();
                prop_assert!(cd_lhs(tau, bp.delta, bp.c, bp.d) > 0.0);
                for s in S_GRID {
                    prop_assert!(cdx2_lhs(tau, bp.delta, bp.c, bp.d, s) > 0.0);
                    prop_assert!(mubeta3_lhs(tau, mu, nu, beta, bp.delta, bp.c, bp.d, s) < 0.0);
                }
                prop_assert!(bp.xi > 0.0 && bp.rho > 0.0);
            }
        }
    }
}
