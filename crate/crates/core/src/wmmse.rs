//! Scalar WMMSE sum-rate maximization.
//!
//! Block-coordinate descent over receive gains `u`, MSE weights `w` and
//! transmit amplitudes `v`. Every block update is an exact minimizer of the
//! weighted-MSE objective, so the sum-rate never decreases between outer
//! iterations. Reliability constraints are ignored and powers may go below
//! `p_min`, down to zero.

use crate::error::{Error, Result};
use crate::model::{sum_rate, ChannelRealization, PowerAllocation};

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    /// Transmit amplitudes, `v_k = sqrt(p_k)`.
    pub v: Vec<f64>,
    /// Receive gains.
    pub u: Vec<f64>,
    /// MSE weights, `w_k >= 1`.
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WmmseOptions {
    /// Stop once the sum-rate improves by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for WmmseOptions {
    fn default() -> Self {
        WmmseOptions {
            tol: 1e-6,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseRun {
    pub powers: PowerAllocation,
    pub state: WmmseState,
    /// Sum-rate before the first update and after every outer iteration.
    pub history: Vec<f64>,
}

impl WmmseRun {
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }
}

fn update_receivers(channel: &ChannelRealization, noise: &[f64], st: &mut WmmseState) {
    let k = st.v.len();
    for r in 0..k {
        let total: f64 = (0..k)
            .map(|j| channel.gain(r, j) * st.v[j] * st.v[j])
            .sum::<f64>()
            + noise[r];
        let h = channel.gain(r, r).sqrt();
        st.u[r] = h * st.v[r] / total;
        // 1 - u h v = noise-and-interference share of the received power
        let mmse = 1.0 - st.u[r] * h * st.v[r];
        st.w[r] = 1.0 / mmse.max(f64::MIN_POSITIVE);
    }
}

fn update_transmitters(channel: &ChannelRealization, amp_max: f64, st: &mut WmmseState) {
    let k = st.v.len();
    for t in 0..k {
        let denom: f64 = (0..k)
            .map(|r| st.w[r] * st.u[r] * st.u[r] * channel.gain(r, t))
            .sum();
        let num = st.w[t] * st.u[t] * channel.gain(t, t).sqrt();
        st.v[t] = if denom > 0.0 {
            (num / denom).clamp(0.0, amp_max)
        } else {
            amp_max
        };
    }
}

/// Run WMMSE from full power and return the full iteration record.
pub fn wmmse_run(
    channel: &ChannelRealization,
    noise: &[f64],
    p_max: f64,
    opts: &WmmseOptions,
) -> Result<WmmseRun> {
    let k = channel.users();
    if k == 0 {
        return Err(Error::InvalidConfig("WMMSE needs at least one user".into()));
    }
    if noise.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: noise.len(),
        });
    }
    let amp_max = p_max.sqrt();
    let mut st = WmmseState {
        v: vec![amp_max; k],
        u: vec![0.0; k],
        w: vec![1.0; k],
    };
    let rate = |v: &[f64]| -> Result<f64> {
        let p = PowerAllocation::unchecked(v.iter().map(|a| a * a).collect());
        Ok(sum_rate(channel, &p, noise)?.sum)
    };

    let mut history = vec![rate(&st.v)?];
    update_receivers(channel, noise, &mut st);
    for _ in 0..opts.max_iter {
        update_transmitters(channel, amp_max, &mut st);
        update_receivers(channel, noise, &mut st);
        let r = rate(&st.v)?;
        let prev = *history.last().expect("history starts non-empty");
        history.push(r);
        if (r - prev).abs() < opts.tol {
            break;
        }
    }
    Ok(WmmseRun {
        powers: PowerAllocation::unchecked(st.v.iter().map(|a| a * a).collect()),
        state: st,
        history,
    })
}

/// WMMSE power allocation.
pub fn wmmse_allocate(
    channel: &ChannelRealization,
    noise: &[f64],
    p_max: f64,
    opts: &WmmseOptions,
) -> Result<PowerAllocation> {
    Ok(wmmse_run(channel, noise, p_max, opts)?.powers)
}
