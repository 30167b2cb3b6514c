//! Downlink NOMA rates and the delay/energy model of both compute paths.

use ndarray::ArrayView2;

use super::EnvError;

/// Per-user downlink rates in bits/s for one slot.
///
/// Users on the same channel are decoded with successive interference
/// cancellation: they are sorted by descending received power `p * |h|^2`
/// (ties go to the lower user index first) and the user at sorted position
/// `k` sees interference from the powers of every user sorted after it,
/// scaled by its own gain. The last user in a channel is interference free.
/// Locally rendering users (`assignment[n] == 0`) get rate 0.
///
/// `gain` is `|h|^2` with shape `(n_users, n_channels)`; `noise_power` is
/// `W * sigma^2` in watts.
pub fn channel_rates(
    assignment: &[usize],
    tx_power: &[f64],
    gain: ArrayView2<'_, f64>,
    bandwidth: f64,
    noise_power: f64,
) -> Vec<f64> {
    let n_users = assignment.len();
    let n_channels = gain.ncols();
    let mut rates = vec![0.0; n_users];
    let mut members: Vec<usize> = Vec::with_capacity(n_users);
    for channel in 1..=n_channels {
        members.clear();
        members.extend((0..n_users).filter(|&n| assignment[n] == channel));
        if members.is_empty() {
            continue;
        }
        let col = channel - 1;
        let received = |n: usize| tx_power[n] * gain[(n, col)];
        members.sort_by(|&a, &b| received(b).total_cmp(&received(a)).then(a.cmp(&b)));

        // Suffix sums of the transmit powers of later-sorted users.
        let mut later_power = 0.0;
        for &user in members.iter().rev() {
            let own_gain = gain[(user, col)];
            let sinr = tx_power[user] * own_gain / (later_power * own_gain + noise_power);
            rates[user] = bandwidth * (1.0 + sinr).log2();
            later_power += tx_power[user];
        }
    }
    rates
}

/// Delay of a frame rendered at the server and sent over the downlink.
pub fn offload_delay(
    frame_bits: f64,
    cycles_per_bit: f64,
    rate: f64,
    vsp_cpu: f64,
) -> Result<f64, EnvError> {
    if rate.is_nan() || rate <= 0.0 {
        return Err(EnvError::ZeroRate);
    }
    Ok(frame_bits * cycles_per_bit / vsp_cpu + frame_bits / rate)
}

/// Delay of a frame rendered on the user's device.
pub fn local_delay(frame_bits: f64, cycles_per_bit: f64, user_cpu: f64) -> f64 {
    frame_bits * cycles_per_bit / user_cpu
}

/// Weighted device energy of local rendering, with energy per cycle
/// `energy_coeff * user_cpu^2`.
pub fn local_energy(
    frame_bits: f64,
    cycles_per_bit: f64,
    user_cpu: f64,
    battery_weight: f64,
    energy_coeff: f64,
) -> f64 {
    battery_weight * frame_bits * cycles_per_bit * energy_coeff * user_cpu * user_cpu
}
