// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use rand::Rng;

use super::relay::Relay;
use super::TorError;

/// Draws one relay with probability proportional to its bandwidth.
pub fn weighted_select<'r, R, Q>(relays: &'r [R], rng: &mut Q) -> Result<&'r R, TorError>
where
    R: AsRef<Relay>,
    Q: Rng + ?Sized,
{
    let total: u128 = relays.iter().map(|r| u128::from(r.as_ref().bandwidth)).sum();
    if total == 0 {
        return Err(TorError::Selection(format!(
            "no positive bandwidth among {} relays",
            relays.len()
        )));
    }
    let mut point = rng.random_range(0..total);
    for r in relays {
        let bw = u128::from(r.as_ref().bandwidth);
        if point < bw {
            return Ok(r);
        }
        point -= bw;
    }
    unreachable!("draw is below the bandwidth total")
}

/// Path constraints on a three-relay circuit: distinct relays, no shared
/// declared family, no shared /16.
pub fn constraints_ok<R: AsRef<Relay>>(candidate: &[R]) -> Result<bool, TorError> {
    if candidate.len() != 3 {
        return Err(TorError::Argument(format!(
            "a circuit has 3 relays, got {}",
            candidate.len()
        )));
    }
    let mut fps = HashSet::new();
    let mut families = HashSet::new();
    let mut subnets = HashSet::new();
    for r in candidate.iter().map(AsRef::as_ref) {
        if !fps.insert(r.fingerprint.as_str()) || !subnets.insert(r.subnet16()) {
            return Ok(false);
        }
        if let Some(f) = &r.family {
            if !families.insert(f.as_str()) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
