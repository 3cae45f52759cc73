//! In-process fusion-center/worker topology.
//!
//! One [`FusionNet::run_round`] call executes every worker once (in any
//! schedule), collects the upstream messages, runs the fusion-center logic
//! once, and accounts every transmitted bit. Messages are consumed in fixed
//! node order after all have arrived, so results are independent of worker
//! scheduling. The message boundary is explicit so a socket transport could
//! replace the in-process queue without touching the algorithms.

use crate::error::Error;
use crate::rng::{self, Rng};
use crate::Result;
use rand::seq::SliceRandom;

/// Bits charged per raw (unquantized) vector entry.
pub const DEFAULT_RAW_BITS_PER_ENTRY: f64 = 32.0;

/// A message crossing the node/fusion-center boundary.
#[derive(Debug, Clone)]
pub enum Message {
    /// Row-MP pseudo-data `f_t^p`, raw or quantized, with the node's
    /// residual energy `||z^p||^2` for fusion-center noise calibration.
    PseudoData {
        node: usize,
        data: Vec<f64>,
        /// `Some(entropy)` when the payload was quantized; `None` for raw.
        rate_bits_per_symbol: Option<f64>,
        /// Measured per-entry quantization distortion (zero when raw).
        distortion: f64,
        residual_energy: f64,
    },
    /// Fusion-center broadcast of the new estimate and the Onsager scalar.
    Broadcast { x: Vec<f64>, g: f64 },
    /// Column-MP per-node measurement-space contribution `r^p`.
    ResidualContribution { node: usize, r: Vec<f64> },
    /// Column-MP fusion-center sum `g_s`.
    GlobalResidualSum { g: Vec<f64> },
}

impl Message {
    /// Accounted size in bits; quantized pseudo-data is charged at its
    /// measured entropy, everything else at `raw_bits_per_entry`.
    pub fn payload_bits(&self, raw_bits_per_entry: f64) -> f64 {
        match self {
            Message::PseudoData {
                data,
                rate_bits_per_symbol,
                ..
            } => match rate_bits_per_symbol {
                Some(rate) => rate * data.len() as f64,
                None => raw_bits_per_entry * data.len() as f64,
            },
            Message::Broadcast { x, .. } => raw_bits_per_entry * (x.len() + 1) as f64,
            Message::ResidualContribution { r, .. } => raw_bits_per_entry * r.len() as f64,
            Message::GlobalResidualSum { g } => raw_bits_per_entry * g.len() as f64,
        }
    }

    pub fn node(&self) -> Option<usize> {
        match self {
            Message::PseudoData { node, .. } | Message::ResidualContribution { node, .. } => {
                Some(*node)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NodeToCenter,
    CenterToNode,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::NodeToCenter => "node_to_center",
            Direction::CenterToNode => "center_to_node",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerRow {
    pub iteration: usize,
    pub direction: Direction,
    pub bits: f64,
}

/// Per-iteration, per-direction bit totals.
#[derive(Debug, Clone, Default)]
pub struct ByteLedger {
    rows: Vec<LedgerRow>,
}

impl ByteLedger {
    pub fn new() -> Self {
        ByteLedger::default()
    }

    pub fn record(&mut self, iteration: usize, direction: Direction, bits: f64) {
        debug_assert!(bits >= 0.0);
        self.rows.push(LedgerRow {
            iteration,
            direction,
            bits,
        });
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    pub fn total(&self, direction: Direction) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.direction == direction)
            .map(|r| r.bits)
            .sum()
    }

    pub fn iteration_total(&self, iteration: usize, direction: Direction) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.iteration == iteration && r.direction == direction)
            .map(|r| r.bits)
            .sum()
    }

    pub fn grand_total(&self) -> f64 {
        self.rows.iter().map(|r| r.bits).sum()
    }
}

/// Worker execution order inside a round. Every variant must produce
/// identical outputs and ledgers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduling {
    FixedOrder,
    ReverseOrder,
    /// Per-round pseudo-random permutation derived from the seed.
    Shuffled(u64),
    /// One OS thread per worker.
    Threaded,
}

/// Fusion-center harness: scheduling policy plus the bit ledger.
#[derive(Debug)]
pub struct FusionNet {
    pub scheduling: Scheduling,
    raw_bits_per_entry: f64,
    ledger: ByteLedger,
    round: usize,
}

impl FusionNet {
    pub fn new(scheduling: Scheduling) -> Self {
        FusionNet {
            scheduling,
            raw_bits_per_entry: DEFAULT_RAW_BITS_PER_ENTRY,
            ledger: ByteLedger::new(),
            round: 0,
        }
    }

    pub fn with_raw_bits(mut self, bits: f64) -> Self {
        self.raw_bits_per_entry = bits;
        self
    }

    pub fn ledger(&self) -> &ByteLedger {
        &self.ledger
    }

    pub fn raw_bits_per_entry(&self) -> f64 {
        self.raw_bits_per_entry
    }

    pub fn rounds_run(&self) -> usize {
        self.round
    }

    /// Execute one communication round: run `node_step` for every worker
    /// under the configured schedule, hand all upstream messages to `center`
    /// in node order, broadcast its downstream messages, and account bits
    /// under iteration index `iteration`.
    pub fn run_round<S, C, O>(
        &mut self,
        iteration: usize,
        nodes: &mut [S],
        node_step: impl Fn(usize, &mut S) -> Message + Sync,
        center: C,
    ) -> Result<O>
    where
        S: Send,
        C: FnOnce(&[Message]) -> (O, Vec<Message>),
    {
        self.round += 1;
        let p = nodes.len();
        let mut inbox: Vec<Option<Message>> = (0..p).map(|_| None).collect();

        match self.scheduling {
            Scheduling::FixedOrder => {
                for (i, node) in nodes.iter_mut().enumerate() {
                    inbox[i] = Some(node_step(i, node));
                }
            }
            Scheduling::ReverseOrder => {
                for (i, node) in nodes.iter_mut().enumerate().rev() {
                    inbox[i] = Some(node_step(i, node));
                }
            }
            Scheduling::Shuffled(seed) => {
                let mut order: Vec<usize> = (0..p).collect();
                let mut rng: Rng = rng::substream(seed ^ self.round as u64, rng::STREAM_SCHED);
                order.shuffle(&mut rng);
                let mut slots: Vec<(usize, &mut S)> = nodes.iter_mut().enumerate().collect();
                // Visit workers in the shuffled order; results land by index.
                slots.sort_by_key(|(i, _)| order[*i]);
                for (i, node) in slots {
                    inbox[i] = Some(node_step(i, node));
                }
            }
            Scheduling::Threaded => {
                std::thread::scope(|scope| {
                    for ((i, node), slot) in nodes.iter_mut().enumerate().zip(inbox.iter_mut()) {
                        let step = &node_step;
                        scope.spawn(move || {
                            *slot = Some(step(i, node));
                        });
                    }
                });
            }
        }

        let mut upstream = Vec::with_capacity(p);
        for (i, slot) in inbox.into_iter().enumerate() {
            let msg = slot.ok_or_else(|| Error::Diverged {
                iteration,
                detail: format!("missing message from node {i}"),
            })?;
            self.ledger
                .record(iteration, Direction::NodeToCenter, msg.payload_bits(self.raw_bits_per_entry));
            upstream.push(msg);
        }

        let (out, downstream) = center(&upstream);
        for msg in &downstream {
            self.ledger
                .record(iteration, Direction::CenterToNode, msg.payload_bits(self.raw_bits_per_entry));
        }
        Ok(out)
    }
}
