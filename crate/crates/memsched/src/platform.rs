//! Heterogeneous clusters: processors with individual speeds, memories and
//! communication buffers, connected by a single global bandwidth.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ProcId = u32;

const GB: u64 = 1_000_000_000;

/// Bandwidth assumed when a cluster file or reference cluster does not pin
/// one: 1 GB/s.
pub const DEFAULT_BANDWIDTH: u64 = 1_000_000_000;

/// One processing node: `speed` in operations per second, `memory` and
/// `buffer` in bytes. The buffer stages files evicted from memory until they
/// are communicated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Processor {
    pub id: ProcId,
    pub name: String,
    pub speed: f64,
    pub memory: u64,
    pub buffer: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    processors: Vec<Processor>,
    bandwidth: u64,
}

#[derive(Deserialize)]
struct ClusterJson {
    bandwidth: u64,
    processors: Vec<ProcessorJson>,
}

#[derive(Deserialize)]
struct ProcessorJson {
    name: String,
    speed: f64,
    memory: u64,
    buffer: Option<u64>,
}

impl Cluster {
    pub fn new(processors: Vec<Processor>, bandwidth: u64) -> Result<Self> {
        if processors.is_empty() {
            return Err(Error::InvalidValue {
                what: "cluster",
                detail: "at least one processor required".into(),
            });
        }
        if bandwidth == 0 {
            return Err(Error::InvalidValue {
                what: "bandwidth",
                detail: "must be positive".into(),
            });
        }
        for p in &processors {
            if p.speed <= 0.0 || !p.speed.is_finite() {
                return Err(Error::InvalidValue {
                    what: "processor speed",
                    detail: format!("{} has speed {}", p.name, p.speed),
                });
            }
            if p.memory == 0 {
                return Err(Error::InvalidValue {
                    what: "processor memory",
                    detail: format!("{} has no memory", p.name),
                });
            }
        }
        Ok(Cluster {
            processors,
            bandwidth,
        })
    }

    pub fn k(&self) -> usize {
        self.processors.len()
    }

    pub fn processors(&self) -> &[Processor] {
        &self.processors
    }

    pub fn proc(&self, id: ProcId) -> &Processor {
        &self.processors[id as usize]
    }

    pub fn bandwidth(&self) -> u64 {
        self.bandwidth
    }

    pub fn from_json_str(s: &str) -> Result<Cluster> {
        let raw: ClusterJson =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("cluster json: {e}")))?;
        let processors = raw
            .processors
            .into_iter()
            .enumerate()
            .map(|(i, p)| Processor {
                id: i as ProcId,
                name: p.name,
                speed: p.speed,
                memory: p.memory,
                // Ten times the memory unless the file pins a buffer size.
                buffer: p.buffer.unwrap_or_else(|| p.memory.saturating_mul(10)),
            })
            .collect();
        Cluster::new(processors, raw.bandwidth)
    }
}

/// Parses and validates a cluster description from JSON.
pub fn parse_cluster(path: impl AsRef<Path>) -> Result<Cluster> {
    Cluster::from_json_str(&std::fs::read_to_string(path)?)
}

/// The two reference cluster configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    /// Machine memories as measured (16-192 GB).
    Default,
    /// Same machines with a tenth of the memory.
    MemConstrained,
}

/// Six machine kinds: (name, speed in 1e9 ops/s, default memory in GB).
const MACHINE_KINDS: [(&str, f64, u64); 6] = [
    ("local", 4.0, 16),
    ("A1", 32.0, 32),
    ("A2", 6.0, 64),
    ("N1", 12.0, 16),
    ("N2", 8.0, 8),
    ("C2", 32.0, 192),
];

/// Builds a reference cluster with `replication` copies of each of the six
/// machine kinds. Buffers are ten times the memory; bandwidth is
/// [`DEFAULT_BANDWIDTH`].
pub fn reference_cluster(kind: ClusterKind, replication: u32) -> Cluster {
    assert!(replication >= 1, "replication must be at least 1");
    let mut processors = Vec::with_capacity(6 * replication as usize);
    for (name, speed, mem_gb) in MACHINE_KINDS {
        for copy in 0..replication {
            let memory = match kind {
                ClusterKind::Default => mem_gb * GB,
                ClusterKind::MemConstrained => mem_gb * GB / 10,
            };
            processors.push(Processor {
                id: processors.len() as ProcId,
                name: format!("{name}-{copy}"),
                speed: speed * 1e9,
                memory,
                buffer: memory * 10,
            });
        }
    }
    Cluster::new(processors, DEFAULT_BANDWIDTH).expect("reference cluster is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn buffer_defaults_to_ten_times_memory() {
        let c = Cluster::from_json_str(
            r#"{"bandwidth": 1000000000,
                "processors": [{"name":"n0","speed":4,"memory":16000000000}]}"#,
        )
        .unwrap();
        assert_eq!(c.proc(0).buffer, 160_000_000_000);
    }

    #[test]
    fn empty_processor_list_rejected() {
        let err = Cluster::from_json_str(r#"{"bandwidth": 1, "processors": []}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidValue { .. }));
    }

    #[test]
    fn two_processors() {
        let c = Cluster::from_json_str(
            r#"{"bandwidth": 1000000000, "processors": [
                {"name":"a","speed":1,"memory":1000},
                {"name":"b","speed":2,"memory":2000,"buffer":5000}]}"#,
        )
        .unwrap();
        assert_eq!(c.k(), 2);
        assert_eq!(c.proc(1).buffer, 5000);
    }

    #[test]
    fn nonpositive_speed_rejected() {
        let err = Cluster::from_json_str(
            r#"{"bandwidth": 1, "processors": [{"name":"a","speed":0,"memory":10}]}"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidValue { .. }));
    }

    #[test]
    fn reference_default() {
        let c = reference_cluster(ClusterKind::Default, 12);
        assert_eq!(c.k(), 72);
        // C2 is the luxury machine: fast with large memory.
        let c2 = c.processors().iter().find(|p| p.name == "C2-0").unwrap();
        assert_eq!(c2.memory, 192 * GB);
        assert_eq!(c2.speed, 32e9);
        assert_eq!(c2.buffer, 1920 * GB);
    }

    #[test]
    fn reference_mem_constrained() {
        let c = reference_cluster(ClusterKind::MemConstrained, 12);
        let c2 = c.processors().iter().find(|p| p.name == "C2-0").unwrap();
        assert_eq!(c2.memory, 19_200_000_000);
        assert_eq!(reference_cluster(ClusterKind::Default, 1).k(), 6);
    }

    #[test]
    fn constrained_memories_are_exactly_a_tenth() {
        let d = reference_cluster(ClusterKind::Default, 3);
        let m = reference_cluster(ClusterKind::MemConstrained, 3);
        for (a, b) in d.processors().iter().zip(m.processors()) {
            assert_eq!(a.speed, b.speed);
            assert_eq!(a.memory, b.memory * 10);
        }
    }
}
