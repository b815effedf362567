use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::OracleType;

/// Smallest tolerance a schedule will prescribe. Below this, finite differences
/// of `f` lose all precision.
pub const DELTA_FLOOR: f64 = 1.4901161193847656e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    OptConvex,
    OptSc,
    RegretConvex,
    RegretSc,
    Manual,
}

impl ScheduleMode {
    pub fn is_regret(self) -> bool {
        matches!(self, ScheduleMode::RegretConvex | ScheduleMode::RegretSc)
    }
}

/// Step-size rule `t ↦ η_t` for `t ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EtaRule {
    Constant {
        eta: f64,
    },
    /// `α/(a·t^r + l)`.
    Polynomial {
        alpha: f64,
        a: f64,
        r: f64,
        l: f64,
    },
    /// `2/(μt)`.
    InverseLinear {
        mu: f64,
    },
}

impl EtaRule {
    pub fn at(&self, t: usize) -> f64 {
        let t = t.max(1) as f64;
        match *self {
            EtaRule::Constant { eta } => eta,
            EtaRule::Polynomial { alpha, a, r, l } => alpha / (a * t.powf(r) + l),
            EtaRule::InverseLinear { mu } => 2.0 / (mu * t),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            EtaRule::Constant { eta } => eta.is_finite() && eta > 0.0,
            EtaRule::Polynomial { alpha, a, r, l } => {
                alpha > 0.0 && a >= 0.0 && (0.0..=1.0).contains(&r) && l >= 0.0 && a + l > 0.0
            }
            EtaRule::InverseLinear { mu } => mu.is_finite() && mu > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "step rule {self:?} is not positive and nonincreasing"
            )))
        }
    }
}

/// A constant tolerance and a step-size rule for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub delta: f64,
    pub eta: EtaRule,
    pub r: Option<f64>,
    pub a: Option<f64>,
    /// Clamps and warnings raised while building the schedule.
    pub notes: Vec<String>,
}

impl Schedule {
    pub fn manual(delta: f64, eta: EtaRule) -> Result<Self> {
        crate::oracle::validate_delta(delta)?;
        eta.validate()?;
        Ok(Self {
            mode: ScheduleMode::Manual,
            delta,
            eta,
            r: None,
            a: None,
            notes: Vec::new(),
        })
    }

    pub fn eta(&self, t: usize) -> f64 {
        self.eta.at(t)
    }
}

/// Problem constants shared by all tuned schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub p: f64,
    pub q: f64,
    pub c1: f64,
    pub c2: f64,
    /// Bregman diameter `D = sup D_R(x, y)`.
    pub d: f64,
    /// Strong-convexity modulus of the regularizer.
    pub alpha: f64,
    pub l: f64,
    pub mu: f64,
    pub oracle_type: OracleType,
    /// `sup_K ‖x‖`, used by the type-I regret coefficient.
    pub r_sup: f64,
}

impl ProblemConstants {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("p", self.p),
            ("q", self.q),
            ("c1", self.c1),
            ("c2", self.c2),
            ("d", self.d),
            ("alpha", self.alpha),
            ("l", self.l),
            ("mu", self.mu),
            ("r_sup", self.r_sup),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.p <= 0.0 {
            return Err(Error::domain("bias exponent p must be positive"));
        }
        if self.d <= 0.0 || self.alpha <= 0.0 {
            return Err(Error::domain("D and alpha must be positive"));
        }
        Ok(())
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("horizon n must be >= 1"));
    }
    Ok(n as f64)
}

/// Maps a raw tolerance into `(0, 1]`, noting any clamp.
fn finish_delta(raw: f64, c1: f64, c2: f64, notes: &mut Vec<String>) -> f64 {
    if c1 == 0.0 {
        return 1.0;
    }
    if c2 == 0.0 || raw.is_nan() || raw < DELTA_FLOOR {
        notes.push(format!("delta {raw:e} raised to the floor {DELTA_FLOOR:e}"));
        return DELTA_FLOOR;
    }
    if raw > 1.0 {
        notes.push(format!("delta {raw} clamped to 1"));
        return 1.0;
    }
    raw
}

fn polynomial_rule(alpha: f64, a: f64, r: f64, l: f64) -> Result<EtaRule> {
    if a == 0.0 && l == 0.0 {
        return Err(Error::Precondition(
            "step size alpha/(a t^r + L) is undefined with a = 0 and L = 0".into(),
        ));
    }
    Ok(EtaRule::Polynomial { alpha, a, r, l })
}

/// Convex optimization schedule: `η_t = α/(a t^r + L)` with the `(a, r, δ)`
/// that balance the bias, variance, and step terms of the error bound.
pub fn schedule_opt_convex(k: &ProblemConstants, n: usize) -> Result<Schedule> {
    k.validate()?;
    let nf = check_n(n)?;
    let (p, q) = (k.p, k.q);
    let s = 2.0 * p + q;
    let r = (p + q) / s;
    let (a, raw) = match k.oracle_type {
        OracleType::TypeI => {
            let a = 2f64.powf(q / (2.0 * s))
                * (s / (2.0 * p)).powf(p / s)
                * k.d.powf(-0.5)
                * k.c1.powf(q / s)
                * k.c2.powf(p / s);
            let delta = k.alpha.powf(1.0 / (2.0 * (p + q)))
                * (s / (4.0 * p)).powf(1.0 / s)
                * k.c1.powf(-2.0 / s)
                * k.c2.powf(1.0 / s)
                * nf.powf(-1.0 / s);
            (a, delta)
        }
        OracleType::TypeII => {
            let w = 2.0 + 2.0 / nf;
            let da = k.d / k.alpha;
            let a = w.powf(q / s)
                * (s / (2.0 * p)).powf(p / s)
                * da.powf(-(p + q) / s)
                * k.c1.powf(q / s)
                * k.c2.powf(p / s);
            let delta = w.powf(-2.0 / s)
                * (s / (2.0 * p)).powf(1.0 / s)
                * da.powf(1.0 / s)
                * k.c1.powf(-2.0 / s)
                * k.c2.powf(1.0 / s)
                * nf.powf(-1.0 / s);
            (a, delta)
        }
    };
    let mut notes = Vec::new();
    let delta = finish_delta(raw, k.c1, k.c2, &mut notes);
    Ok(Schedule {
        mode: ScheduleMode::OptConvex,
        delta,
        eta: polynomial_rule(k.alpha, a, r, k.l)?,
        r: Some(r),
        a: Some(a),
        notes,
    })
}

/// Strongly convex optimization schedule: `η_t = 2/(μt)`. Requires `αμ > 2L`.
pub fn schedule_opt_sc(k: &ProblemConstants, n: usize) -> Result<Schedule> {
    k.validate()?;
    let nf = check_n(n)?;
    let am = k.alpha * k.mu;
    if am <= 2.0 * k.l {
        return Err(Error::Precondition(format!(
            "strongly convex schedule needs alpha*mu > 2L (alpha*mu = {am}, 2L = {})",
            2.0 * k.l
        )));
    }
    let log_term = nf.ln() + 1.0 + am / (am - 2.0 * k.l);
    let denom = match k.oracle_type {
        OracleType::TypeI => (2.0 * k.d * k.alpha).sqrt() * k.mu * k.c1 * nf,
        OracleType::TypeII => 2.0 * am * k.c1 * (nf + 1.0),
    };
    let raw = (k.c2 * log_term / denom).powf(1.0 / (k.p + k.q));
    let mut notes = Vec::new();
    let delta = finish_delta(raw, k.c1, k.c2, &mut notes);
    Ok(Schedule {
        mode: ScheduleMode::OptSc,
        delta,
        eta: EtaRule::InverseLinear { mu: k.mu },
        r: None,
        a: None,
        notes,
    })
}

/// `(p̂, Ĉ1)`: the dominating bias exponent among `δ^p` and `δ²` and its coefficient.
pub fn regret_bias_terms(k: &ProblemConstants) -> (f64, f64) {
    let p_hat = k.p.min(2.0);
    let c1 = match k.oracle_type {
        OracleType::TypeI => k.r_sup * k.c1,
        OracleType::TypeII => k.c1,
    };
    let mut c_hat = 0.0;
    if k.p <= 2.0 {
        c_hat += c1;
    }
    if k.p >= 2.0 {
        c_hat += k.l / 4.0;
    }
    (p_hat, c_hat)
}

/// Regret schedule. Convex: constant `η` and `δ ∝ n^{-1/(2p̂+q)}`.
/// Strongly convex (`μ > 0` required): `η_t = 2/(tμ)`.
pub fn schedule_regret(k: &ProblemConstants, n: usize, strongly_convex: bool) -> Result<Schedule> {
    k.validate()?;
    let nf = check_n(n)?;
    let (ph, ch) = regret_bias_terms(k);
    let q = k.q;
    let mut notes = Vec::new();
    if strongly_convex {
        if k.mu <= 0.0 {
            return Err(Error::Precondition(
                "strongly convex regret schedule needs mu > 0".into(),
            ));
        }
        let raw = (k.c2 * q * (1.0 + nf.ln()) / (k.alpha * k.mu * ch * ph * nf)).powf(1.0 / (ph + q));
        let delta = finish_delta(raw, ch, k.c2, &mut notes);
        return Ok(Schedule {
            mode: ScheduleMode::RegretSc,
            delta,
            eta: EtaRule::InverseLinear { mu: k.mu },
            r: None,
            a: None,
            notes,
        });
    }
    let s = 2.0 * ph + q;
    let raw = (q / (2.0 * ph)).powf(2.0 / s) * (k.c2 * k.d / (k.alpha * ch * ch)).powf(1.0 / s) * nf.powf(-1.0 / s);
    let delta = finish_delta(raw, ch, k.c2, &mut notes);
    let eta = k.d.powf((ph + q) / s)
        * (q / (2.0 * ph)).powf(q / s)
        * (k.c2 / k.alpha).powf(-ph / s)
        * ch.powf(-q / s)
        * nf.powf(-(ph + q) / s);
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Precondition(format!(
            "regret step size is {eta}; it needs C2 > 0 and a positive bias coefficient"
        )));
    }
    Ok(Schedule {
        mode: ScheduleMode::RegretConvex,
        delta,
        eta: EtaRule::Constant { eta },
        r: None,
        a: None,
        notes,
    })
}
