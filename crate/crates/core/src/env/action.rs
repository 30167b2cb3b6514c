//! Joint channel assignment and its integer encoding.
//!
//! Each user takes a value in `0..=M` (0 = render locally, `m >= 1` = served
//! on downlink channel `m`). The tuple is read as a big-endian base-`(M+1)`
//! number with user 0 as the most significant digit.

use super::EnvError;

/// Per-user channel assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionAssignment(pub Vec<usize>);

impl ActionAssignment {
    pub fn all_local(n_users: usize) -> Self {
        Self(vec![0; n_users])
    }

    pub fn channels(&self) -> &[usize] {
        &self.0
    }

    pub fn is_offloaded(&self, user: usize) -> bool {
        self.0[user] != 0
    }

    pub fn encode(&self, n_channels: usize) -> Result<usize, EnvError> {
        encode_action(&self.0, n_channels)
    }
}

pub fn encode_action(assignment: &[usize], n_channels: usize) -> Result<usize, EnvError> {
    let base = n_channels + 1;
    let mut index: usize = 0;
    for (user, &channel) in assignment.iter().enumerate() {
        if channel > n_channels {
            return Err(EnvError::ChannelOutOfRange { user, channel, n_channels });
        }
        index = index
            .checked_mul(base)
            .and_then(|v| v.checked_add(channel))
            .ok_or(EnvError::ActionSpaceOverflow)?;
    }
    Ok(index)
}

pub fn decode_action(
    index: usize,
    n_users: usize,
    n_channels: usize,
) -> Result<ActionAssignment, EnvError> {
    let base = n_channels + 1;
    let size = base
        .checked_pow(u32::try_from(n_users).map_err(|_| EnvError::ActionSpaceOverflow)?)
        .ok_or(EnvError::ActionSpaceOverflow)?;
    if index >= size {
        return Err(EnvError::ActionOutOfRange { index, size });
    }
    let mut digits = vec![0; n_users];
    let mut rest = index;
    for slot in digits.iter_mut().rev() {
        *slot = rest % base;
        rest /= base;
    }
    Ok(ActionAssignment(digits))
}
