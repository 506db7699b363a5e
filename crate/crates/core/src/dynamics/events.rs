use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ParticleState;
use crate::error::{Error, Result};

/// Particles meeting at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices in increasing (spatial) order.
    pub indices: Vec<usize>,
    pub y: f64,
    /// Extrapolated collision time.
    pub tau: f64,
}

/// One annihilation event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub tau: f64,
    pub y: f64,
    pub indices: Vec<usize>,
    pub b_before: Vec<i8>,
    pub b_after: Vec<i8>,
    /// Another cluster collided at the same time.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tie: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One JSON object per line.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut events = Vec::new();
        for line in r.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                events.push(serde_json::from_str(&line)?);
            }
        }
        Ok(EventLog { events })
    }

    /// Checks the event invariants: charges conserved per cluster, alternating
    /// pre-collision signs with `|Σ b| ≤ 1`, and every index annihilated at most once.
    pub fn check(&self) -> Result<()> {
        let mut dead = HashSet::new();
        for (k, e) in self.events.iter().enumerate() {
            let before: i64 = e.b_before.iter().map(|&b| b as i64).sum();
            let after: i64 = e.b_after.iter().map(|&b| b as i64).sum();
            if before != after {
                return Err(Error::InvariantViolation(format!("event {k}: charge {before} -> {after}")));
            }
            if before.abs() > 1 || !alternates(&e.b_before) {
                return Err(Error::InvariantViolation(format!("event {k}: charges {:?} do not alternate", e.b_before)));
            }
            for (&i, (&b0, &b1)) in e.indices.iter().zip(e.b_before.iter().zip(&e.b_after)) {
                if b1 == 0 && b0 != 0 && !dead.insert(i) {
                    return Err(Error::InvariantViolation(format!("event {k}: particle {i} annihilated twice")));
                }
                if b1 != 0 && b1 != b0 {
                    return Err(Error::InvariantViolation(format!("event {k}: particle {i} changed sign")));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn alternates(b: &[i8]) -> bool {
    b.iter().all(|&c| c != 0) && b.windows(2).all(|w| w[0] == -w[1])
}

/// Resolves a collision: adjacent opposite charges in the cluster are removed
/// leftmost-first until at most one charged particle remains. All members are
/// moved to `y`; removed ones become neutral.
pub fn annihilate(state: &ParticleState, cluster: &[usize], y: f64, radius: f64) -> Result<ParticleState> {
    if cluster.is_empty() {
        return Err(Error::InvariantViolation("empty collision cluster".into()));
    }
    if cluster.windows(2).any(|w| w[0] >= w[1]) || cluster.iter().any(|&i| i >= state.n()) {
        return Err(Error::InvariantViolation(format!("cluster indices {cluster:?} not increasing or out of range")));
    }
    let charges: Vec<i8> = cluster.iter().map(|&i| state.b[i]).collect();
    if !alternates(&charges) {
        return Err(Error::InvariantViolation(format!("cluster {cluster:?} has non-alternating charges {charges:?}")));
    }
    if let Some(&i) = cluster.iter().find(|&&i| (state.x[i] - y).abs() > radius) {
        return Err(Error::InvariantViolation(format!(
            "particle {i} at {} is farther than {radius:e} from the collision point {y}",
            state.x[i]
        )));
    }
    let mut next = state.clone();
    let mut alive: Vec<usize> = cluster.to_vec();
    while let Some(k) = alive.windows(2).position(|w| next.b[w[0]] == -next.b[w[1]]) {
        next.b[alive[k]] = 0;
        next.b[alive[k + 1]] = 0;
        alive.drain(k..k + 2);
    }
    for &i in cluster {
        next.x[i] = y;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(b: Vec<i8>) -> ParticleState {
        let x = (0..b.len()).map(|i| 1e-8 * i as f64).collect();
        ParticleState::new(x, b).unwrap()
    }

    #[test]
    fn pair_annihilates() {
        let s = state(vec![1, -1]);
        let a = annihilate(&s, &[0, 1], 5e-9, 1e-6).unwrap();
        assert_eq!(a.b, vec![0, 0]);
        assert_eq!(a.x, vec![5e-9, 5e-9]);
    }

    #[test]
    fn odd_cluster_keeps_one() {
        let a = annihilate(&state(vec![1, -1, 1]), &[0, 1, 2], 1e-8, 1e-6).unwrap();
        assert_eq!(a.b, vec![0, 0, 1]);
        assert_eq!(a.net_charge(), 1);
        let a = annihilate(&state(vec![1, -1, 1, -1]), &[0, 1, 2, 3], 1e-8, 1e-6).unwrap();
        assert_eq!(a.b, vec![0; 4]);
    }

    #[test]
    fn non_alternating_is_rejected() {
        let s = state(vec![1, 1, -1]);
        assert!(matches!(annihilate(&s, &[0, 1, 2], 0.0, 1e-6), Err(Error::InvariantViolation(_))));
        assert!(annihilate(&state(vec![1, -1]), &[0, 1], 1.0, 1e-6).is_err());
    }

    #[test]
    fn log_roundtrip_and_checks() {
        let log = EventLog {
            events: vec![Event {
                tau: 0.5,
                y: 0.0,
                indices: vec![0, 1],
                b_before: vec![1, -1],
                b_after: vec![0, 0],
                tie: false,
            }],
        };
        let mut buf = Vec::new();
        log.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("{\"tau\":0.5,\"y\":0.0,\"indices\":[0,1],\"b_before\":[1,-1],\"b_after\":[0,0]}"));
        assert_eq!(EventLog::read_jsonl(&buf[..]).unwrap(), log);
        log.check().unwrap();
        let mut twice = log.clone();
        twice.events.push(twice.events[0].clone());
        assert!(twice.check().is_err());
    }
}
