use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::model::{sinr_interference_limited, ChannelRealization, GainMatrix, PowerAllocation};

/// Powers in the log domain, `t[k] = ln p[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogDomainPoint(pub Vec<f64>);

impl LogDomainPoint {
    pub fn from_powers(powers: &PowerAllocation) -> Self {
        LogDomainPoint(powers.as_slice().iter().map(|p| p.ln()).collect())
    }

    pub fn to_powers(&self) -> PowerAllocation {
        PowerAllocation::unchecked(self.0.iter().map(|t| t.exp()).collect())
    }

    fn project(&mut self, lo: f64, hi: f64) {
        for t in &mut self.0 {
            *t = t.clamp(lo, hi);
        }
    }
}

/// Constraint values of the slack-variable problem; every entry `<= 0` means
/// satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintValues {
    /// `ln eta + LSE_{j != k}(ln g_kj + t_j) - ln g_kk - t_k`.
    pub sinr: Vec<f64>,
    /// `ln(1 - p0) + sum_{j != k} ln(1 + gamma0 G_kj / G_kk e^{t_j - t_k})`.
    pub outage: Vec<f64>,
    /// `ln p_min - t_k`.
    pub lower: Vec<f64>,
    /// `t_k - ln p_max`.
    pub upper: Vec<f64>,
}

impl ConstraintValues {
    pub fn max_violation(&self) -> f64 {
        self.sinr
            .iter()
            .chain(&self.outage)
            .chain(&self.lower)
            .chain(&self.upper)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Gains that enter the two constraint families, in linear form; powers are
/// exponentiated once per evaluation.
struct Problem<'a> {
    users: usize,
    ln_eta: f64,
    /// Instantaneous gains `g_kj`, row-major.
    gain: Vec<f64>,
    /// `gamma0 G_kj / G_kk` from the mean gains, row-major.
    outage_coeff: Vec<f64>,
    ln_one_minus_p0: f64,
    config: &'a SystemConfig,
}

impl<'a> Problem<'a> {
    fn new(eta: f64, gains: &GainMatrix, config: &'a SystemConfig) -> Self {
        let k = config.users;
        let g = &config.mean_gains;
        let outage_coeff = (0..k * k)
            .map(|i| {
                let (r, c) = (i / k, i % k);
                config.gamma0 * g.get(r, c) / g.get(r, r)
            })
            .collect();
        Problem {
            users: k,
            ln_eta: eta.ln(),
            gain: gains.as_slice().to_vec(),
            outage_coeff,
            ln_one_minus_p0: (-config.p0).ln_1p(),
            config,
        }
    }

    fn interference(&self, p: &[f64], k: usize) -> f64 {
        let row = &self.gain[k * self.users..(k + 1) * self.users];
        (0..self.users)
            .filter(|&j| j != k)
            .map(|j| row[j] * p[j])
            .sum()
    }

    /// c1 in log-sum-exp form: `ln eta + ln(sum_j g_kj p_j) - ln(g_kk p_k)`.
    fn sinr_value(&self, p: &[f64], k: usize) -> f64 {
        let i = self.interference(p, k);
        if i <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_eta + (i / (self.gain[k * self.users + k] * p[k])).ln()
    }

    fn sinr_gradient(&self, p: &[f64], k: usize, grad: &mut [f64]) {
        grad.fill(0.0);
        let i = self.interference(p, k);
        if i <= 0.0 {
            return;
        }
        let row = &self.gain[k * self.users..(k + 1) * self.users];
        for j in (0..self.users).filter(|&j| j != k) {
            grad[j] = row[j] * p[j] / i;
        }
        grad[k] = -1.0;
    }

    fn outage_value(&self, p: &[f64], k: usize) -> f64 {
        let row = &self.outage_coeff[k * self.users..(k + 1) * self.users];
        self.ln_one_minus_p0
            + (0..self.users)
                .filter(|&j| j != k)
                .map(|j| (row[j] * p[j] / p[k]).ln_1p())
                .sum::<f64>()
    }

    fn outage_gradient(&self, p: &[f64], k: usize, grad: &mut [f64]) {
        let row = &self.outage_coeff[k * self.users..(k + 1) * self.users];
        grad.fill(0.0);
        let mut total = 0.0;
        for j in (0..self.users).filter(|&j| j != k) {
            let y = row[j] * p[j] / p[k];
            let s = y / (1.0 + y);
            grad[j] = s;
            total += s;
        }
        grad[k] = -total;
    }

    fn values(&self, t: &[f64]) -> ConstraintValues {
        let p: Vec<f64> = t.iter().map(|x| x.exp()).collect();
        let (lo, hi) = (self.config.p_min.ln(), self.config.p_max.ln());
        ConstraintValues {
            sinr: (0..self.users).map(|k| self.sinr_value(&p, k)).collect(),
            outage: (0..self.users).map(|k| self.outage_value(&p, k)).collect(),
            lower: t.iter().map(|x| lo - x).collect(),
            upper: t.iter().map(|x| x - hi).collect(),
        }
    }

    /// `max_k max(c1_k, c2_k + outage_margin)` at powers `p`, and the index of
    /// the active constraint (`k` for c1, `users + k` for c2).
    fn merit(&self, p: &[f64], outage_margin: f64) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for k in 0..self.users {
            let c1 = self.sinr_value(p, k);
            if c1 > best.0 {
                best = (c1, k);
            }
            let c2 = self.outage_value(p, k) + outage_margin;
            if c2 > best.0 {
                best = (c2, self.users + k);
            }
        }
        best
    }
}

/// Constraint values at `t` for slack `eta`. `gains` are the instantaneous
/// gains of the SINR constraints; the outage constraints use
/// `config.mean_gains`.
pub fn eval_constraints(
    t: &LogDomainPoint,
    eta: f64,
    gains: &GainMatrix,
    config: &SystemConfig,
) -> ConstraintValues {
    Problem::new(eta, gains, config).values(&t.0)
}

/// Tuning of the inner projected-subgradient solver and the outer bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpOptions {
    /// Relative width of the final bisection interval on `eta`.
    pub tol_bisect: f64,
    /// Feasibility tolerance on the max-violation merit.
    pub tol_feas: f64,
    /// Subgradient iterations per start.
    pub max_iter: usize,
}

impl Default for GpOptions {
    fn default() -> Self {
        GpOptions {
            tol_bisect: 1e-3,
            tol_feas: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    /// Best point found (lowest merit).
    pub witness: LogDomainPoint,
    /// Merit at the witness; the outage constraints carry a `tol_feas` margin
    /// so that a feasible witness satisfies them exactly.
    pub merit: f64,
}

/// The five fixed starts: box center, the two alternating corners, and the
/// two "one user against the rest" corners. Uniform shifts of `t` do not
/// change any constraint, so only corners that differ in ratios are useful.
fn fixed_starts(users: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let mid = 0.5 * (lo + hi);
    let alt = |first: f64, second: f64| {
        (0..users)
            .map(|k| if k % 2 == 0 { first } else { second })
            .collect::<Vec<_>>()
    };
    let lone = |first: f64, rest: f64| {
        (0..users)
            .map(|k| if k == 0 { first } else { rest })
            .collect::<Vec<_>>()
    };
    vec![
        vec![mid; users],
        alt(lo, hi),
        alt(hi, lo),
        lone(hi, lo),
        lone(lo, hi),
    ]
}

/// A start is abandoned once its best merit has not dropped by
/// `STALL_GAIN` for `STALL_WINDOW` iterations.
const STALL_WINDOW: usize = 1000;
const STALL_GAIN: f64 = 1e-9;

fn run_feasibility(
    problem: &Problem,
    warm: Option<&LogDomainPoint>,
    opts: &GpOptions,
) -> (Feasibility, usize) {
    let users = problem.users;
    let (lo, hi) = (problem.config.p_min.ln(), problem.config.p_max.ln());
    let width = hi - lo;
    let max_iter = opts.max_iter.max(1);
    // Step c/sqrt(i): small enough to resolve ~0.1% in eta, large enough
    // that the summed step length still crosses the box.
    let c = (width / 10.0)
        .min(0.2)
        .max(0.75 * width / (max_iter as f64).sqrt())
        .max(1e-3);

    let mut starts: Vec<Vec<f64>> = warm.map(|w| w.0.clone()).into_iter().collect();
    starts.extend(fixed_starts(users, lo, hi));

    let mut best = Feasibility {
        feasible: false,
        witness: LogDomainPoint(starts[0].clone()),
        merit: f64::INFINITY,
    };
    let mut grad = vec![0.0; users];
    let mut iterations = 0;
    let mut p = vec![0.0; users];
    for start in starts {
        let mut t = LogDomainPoint(start);
        t.project(lo, hi);
        let mut start_best = f64::INFINITY;
        let mut last_gain = 0;
        for i in 1..=max_iter {
            iterations += 1;
            p.iter_mut().zip(&t.0).for_each(|(p, t)| *p = t.exp());
            let (phi, active) = problem.merit(&p, opts.tol_feas);
            if phi < best.merit {
                best.merit = phi;
                best.witness = t.clone();
            }
            if phi <= opts.tol_feas {
                best.feasible = true;
                return (best, iterations);
            }
            if phi < start_best - STALL_GAIN {
                start_best = phi;
                last_gain = i;
            } else if i - last_gain > STALL_WINDOW {
                break;
            }
            if active < users {
                problem.sinr_gradient(&p, active, &mut grad);
            } else {
                problem.outage_gradient(&p, active - users, &mut grad);
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = c / (i as f64).sqrt() / norm;
            for (x, g) in t.0.iter_mut().zip(&grad) {
                *x -= step * g;
            }
            t.project(lo, hi);
        }
    }
    (best, iterations)
}

/// Is there a point in the power box where every user's interference-limited
/// SINR is at least `eta` and every outage constraint holds?
///
/// Each constraint is convex in the log domain, so minimizing the
/// max-violation merit by projected subgradient finds the global minimum up
/// to solver accuracy. Running out of iterations reports infeasible with the
/// best witness seen.
pub fn feasibility_check(
    eta: f64,
    gains: &GainMatrix,
    config: &SystemConfig,
    opts: &GpOptions,
) -> Feasibility {
    run_feasibility(&Problem::new(eta, gains, config), None, opts).0
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpSolution {
    /// Largest slack certified feasible by the bisection; NaN when infeasible.
    pub eta: f64,
    /// Minimum interference-limited SINR actually attained by `powers`.
    pub min_sinr: f64,
    pub powers: PowerAllocation,
    pub feasible: bool,
    /// Bisection steps taken.
    pub iterations: usize,
    /// Subgradient iterations summed over all feasibility checks.
    pub inner_iterations: usize,
    /// Max constraint violation at the returned point for slack `eta`.
    pub residual: f64,
}

/// Upper bound on the best achievable min interference-limited SINR over the
/// box. User `k` can do no better than `p_max` against interferers at
/// `p_min`, so the minimum over users of that bound caps the max-min value.
pub fn eta_upper_bound(gains: &GainMatrix, config: &SystemConfig) -> f64 {
    let k = config.users;
    (0..k)
        .map(|u| {
            let i: f64 = (0..k).filter(|&j| j != u).map(|j| gains.get(u, j)).sum();
            gains.get(u, u) * config.p_max / (i * config.p_min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Max-min interference-limited SINR under the outage and box constraints.
///
/// Geometric bisection on the slack `eta`, each midpoint decided by
/// [`feasibility_check`] warm-started from the last feasible witness. The
/// problem is invariant to scaling all powers, so the returned witness is
/// shifted until the strongest user sits at `p_max`; that choice maximizes
/// every noise-inclusive SINR among the equivalent optima.
pub fn solve_maxmin_gp(
    gains: &GainMatrix,
    config: &SystemConfig,
    opts: &GpOptions,
) -> Result<GpSolution> {
    let k = config.users;
    if k < 2 {
        return Err(Error::SingleUser);
    }
    if gains.users() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: gains.users(),
        });
    }
    let channel = ChannelRealization::new(gains.clone())?;
    let min_sinr_at = |w: &LogDomainPoint| -> f64 {
        sinr_interference_limited(&channel, &w.to_powers())
            .map(|s| s.into_iter().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::INFINITY)
    };

    // The outage constraints do not involve eta: a vanishing slack checks
    // them together with the box.
    let eta_floor = 1e-12;
    let (pre, mut inner) = run_feasibility(&Problem::new(eta_floor, gains, config), None, opts);
    if !pre.feasible {
        let residual = eval_constraints(&pre.witness, eta_floor, gains, config).max_violation();
        return Ok(GpSolution {
            eta: f64::NAN,
            min_sinr: f64::NAN,
            powers: pre.witness.to_powers(),
            feasible: false,
            iterations: 0,
            inner_iterations: inner,
            residual,
        });
    }

    let mut witness = pre.witness;
    let mut lo = min_sinr_at(&witness).clamp(eta_floor, f64::MAX);
    let mut hi = eta_upper_bound(gains, config).max(lo);
    let mut iterations = 0;
    while hi / lo - 1.0 > opts.tol_bisect {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        let (check, n) = run_feasibility(&Problem::new(mid, gains, config), Some(&witness), opts);
        inner += n;
        if check.feasible {
            // the witness may certify more than mid
            lo = min_sinr_at(&check.witness).max(mid);
            witness = check.witness;
        } else {
            hi = mid;
        }
    }

    let (t_lo, t_hi) = (config.p_min.ln(), config.p_max.ln());
    let shift = t_hi - witness.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for t in &mut witness.0 {
        *t = (*t + shift).clamp(t_lo, t_hi);
    }
    let residual = eval_constraints(&witness, lo, gains, config).max_violation();
    let powers = PowerAllocation::new(witness.to_powers().into_vec(), config)?;
    Ok(GpSolution {
        eta: lo,
        min_sinr: min_sinr_at(&witness),
        powers,
        feasible: true,
        iterations,
        inner_iterations: inner,
        residual,
    })
}
