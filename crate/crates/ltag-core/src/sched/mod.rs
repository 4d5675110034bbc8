//! Simulated eNodeB scheduler plus the downlink-receiver role.
//!
//! Each connection walks the establishment state machine: PRACH preamble,
//! RAR (which retrospectively identifies the PRACH and grants the Msg3
//! PUSCH exactly 6 subframes later), the RRC setup on one or two PDSCH
//! transmissions, and a PUCCH ACK exactly 4 subframes after each PDSCH.
//! Monitoring stops before any PUSCH that could carry a Service/Attach
//! Request, so a connection contributes at most one PRACH, one PUSCH and
//! one or two PUCCH measurement opportunities.

use crate::channel::UePosition;
use crate::phy::{CellConfig, MsgType, PhyError, UplinkMessageSpec, PRACH_PRBS};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

/// Subframes between RAR reception and the granted Msg3 PUSCH.
pub const RAR_TO_MSG3: u64 = 6;
/// Subframes between a PDSCH transmission and its PUCCH ACK.
pub const PDSCH_TO_PUCCH: u64 = 4;
/// RAR decode lag behind the PRACH transmission, inclusive bounds.
pub const RAR_DELAY_RANGE: (u64, u64) = (3, 13);

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("unknown cell (earfcn={0}, pci={1})")]
    UnknownCell(u32, u16),
    #[error(transparent)]
    Phy(#[from] PhyError),
}

/// Receiver-independent identifier of one uplink message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MessageId {
    pub earfcn: u32,
    pub pci: u16,
    pub rnti: u16,
    pub msg_type: MsgType,
    /// Absolute subframe index of the uplink transmission.
    pub subframe: u64,
}

/// Where and when an uplink message will appear, as told to the uplink
/// receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UplinkAllocation {
    pub id: MessageId,
    pub spec: UplinkMessageSpec,
}

impl UplinkAllocation {
    pub fn new(cell: &CellConfig, spec: UplinkMessageSpec, subframe: u64) -> Self {
        Self {
            id: MessageId {
                earfcn: cell.earfcn,
                pci: cell.pci,
                rnti: spec.rnti,
                msg_type: spec.msg_type,
                subframe,
            },
            spec,
        }
    }
}

/// Connection establishment states in protocol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConnState {
    Idle,
    PrachSent,
    RarSent,
    Msg3Sent,
    SetupSent,
    Complete,
}

/// Per-connection state machine record.
#[derive(Debug, Clone)]
pub struct ConnectionFsm {
    pub rnti: u16,
    pub cell: (u32, u16),
    pub state: ConnState,
    pub timeline: Vec<(u64, ConnState)>,
}

impl ConnectionFsm {
    fn new(rnti: u16, cell: (u32, u16)) -> Self {
        Self { rnti, cell, state: ConnState::Idle, timeline: Vec::new() }
    }

    fn advance(&mut self, subframe: u64, to: ConnState) {
        assert!(to > self.state, "state machine must advance in order");
        self.state = to;
        self.timeline.push((subframe, to));
    }
}

/// Events the controller emits onto the shared subframe timeline.
#[derive(Debug, Clone, PartialEq)]
pub enum SchedEvent {
    /// The UE transmits an uplink message (world event in the simulation).
    UplinkTx { alloc: UplinkAllocation, payload_seed: u64, conn_id: u64 },
    /// The downlink receiver decoded a RAR: one publication carrying both
    /// the retrospective PRACH allocation and the future Msg3 grant.
    RarDecoded { prach: UplinkAllocation, msg3: UplinkAllocation },
    /// A PDSCH was sent to the UE; its PUCCH ACK follows 4 subframes later.
    PdschSent { pucch: UplinkAllocation },
    /// The connection reached the monitoring cutoff.
    ConnectionEnd { cell: (u32, u16), rnti: u16, conn_id: u64, n_pucch: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedEvent {
    pub subframe: u64,
    pub event: SchedEvent,
}

/// One fully scheduled connection.
#[derive(Debug, Clone)]
pub struct ConnectionPlan {
    pub conn_id: u64,
    pub ue: UePosition,
    pub fsm: ConnectionFsm,
    pub events: Vec<TimedEvent>,
}

impl ConnectionPlan {
    /// The uplink transmissions of this connection in time order.
    pub fn uplink_messages(&self) -> impl Iterator<Item = (&UplinkAllocation, u64)> {
        self.events.iter().filter_map(|e| match &e.event {
            SchedEvent::UplinkTx { alloc, payload_seed, .. } => Some((alloc, *payload_seed)),
            _ => None,
        })
    }
}

/// Knobs for randomized connection timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedParams {
    /// Probability that the RRC setup is split over two PDSCH transmissions
    /// (yielding a second PUCCH).
    pub second_pdsch_prob: f64,
    /// Candidate Msg3 PUSCH widths in PRBs.
    pub pusch_prb_choices: [usize; 3],
}

impl Default for SchedParams {
    fn default() -> Self {
        Self { second_pdsch_prob: 0.3, pusch_prb_choices: [1, 3, 6] }
    }
}

/// Per-cell scheduler: owns RNTI assignment, PRACH collision handling and
/// PRB occupancy for its cell.
#[derive(Debug)]
pub struct CellScheduler {
    pub cell: CellConfig,
    params: SchedParams,
    occupancy: BTreeMap<u64, Vec<(usize, usize)>>,
    prach_taken: HashSet<(u64, u8)>,
    next_rnti: u16,
}

impl CellScheduler {
    pub fn new(cell: CellConfig, params: SchedParams, rnti_start: u16) -> Self {
        Self {
            cell,
            params,
            occupancy: BTreeMap::new(),
            prach_taken: HashSet::new(),
            next_rnti: rnti_start.max(1),
        }
    }

    /// PRACH sits centered in the data region of the cell bandwidth.
    pub fn prach_prb_offset(&self) -> usize {
        (self.cell.n_prb_ul - PRACH_PRBS) / 2
    }

    fn next_prach_subframe(&self, from: u64) -> u64 {
        let mut sf = from;
        loop {
            if self.cell.prach_subframes.contains(&(sf % 10)) {
                return sf;
            }
            sf += 1;
        }
    }

    fn reserve(&mut self, subframe: u64, offset: usize, count: usize) {
        self.occupancy.entry(subframe).or_default().push((offset, count));
    }

    fn is_free(&self, subframe: u64, offset: usize, count: usize) -> bool {
        self.occupancy.get(&subframe).is_none_or(|taken| {
            taken.iter().all(|&(o, c)| offset + count <= o || o + c <= offset)
        })
    }

    /// First-fit PUSCH placement inside the data region (PRB 1 to n-2,
    /// keeping the edge PRBs for PUCCH).
    fn place_pusch(&mut self, subframe: u64, n_prb: usize) -> Option<usize> {
        let hi = self.cell.n_prb_ul - 1;
        for offset in 1..hi.saturating_sub(n_prb - 1) {
            if self.is_free(subframe, offset, n_prb) {
                self.reserve(subframe, offset, n_prb);
                return Some(offset);
            }
        }
        None
    }

    /// Schedule one full connection starting no earlier than
    /// `earliest_subframe`. Handles PRACH preamble collisions by backing the
    /// later arrival off 1-10 subframes.
    pub fn schedule_connection(
        &mut self,
        conn_id: u64,
        ue: UePosition,
        earliest_subframe: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<ConnectionPlan, SchedError> {
        let rnti = self.next_rnti;
        self.next_rnti = self.next_rnti.checked_add(1).unwrap_or(1);

        // PRACH with collision backoff: a colliding arrival reschedules
        // 1-10 subframes later and tries again.
        let mut attempt_from = earliest_subframe;
        let (prach_sf, preamble) = loop {
            let sf = self.next_prach_subframe(attempt_from);
            let preamble = rng.random_range(0..64u8);
            if self.prach_taken.insert((sf, preamble)) {
                break (sf, preamble);
            }
            attempt_from = sf + rng.random_range(1..=10u64);
        };
        self.reserve(prach_sf, self.prach_prb_offset(), PRACH_PRBS);

        let mut fsm = ConnectionFsm::new(rnti, (self.cell.earfcn, self.cell.pci));
        let mut events = Vec::new();
        let mut payload_seed = conn_id.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut next_seed = || {
            payload_seed = payload_seed.wrapping_add(0x517c_c1b7_2722_0a95);
            payload_seed
        };

        let prach_spec = UplinkMessageSpec::prach(self.prach_prb_offset(), preamble, rnti)?;
        let prach_alloc = UplinkAllocation::new(&self.cell, prach_spec, prach_sf);
        fsm.advance(prach_sf, ConnState::PrachSent);
        events.push(TimedEvent {
            subframe: prach_sf,
            event: SchedEvent::UplinkTx {
                alloc: prach_alloc.clone(),
                payload_seed: next_seed(),
                conn_id,
            },
        });

        // RAR decode lag: the RAR informs about a PRACH 3-13 subframes past.
        let rar_sf = prach_sf + rng.random_range(RAR_DELAY_RANGE.0..=RAR_DELAY_RANGE.1);
        let msg3_sf = rar_sf + RAR_TO_MSG3;
        let n_prb =
            self.params.pusch_prb_choices[rng.random_range(0..self.params.pusch_prb_choices.len())];
        let offset = self.place_pusch(msg3_sf, n_prb).unwrap_or(1);
        let msg3_spec = UplinkMessageSpec::pusch(offset, n_prb, rnti)?;
        let msg3_alloc = UplinkAllocation::new(&self.cell, msg3_spec, msg3_sf);
        fsm.advance(rar_sf, ConnState::RarSent);
        events.push(TimedEvent {
            subframe: rar_sf,
            event: SchedEvent::RarDecoded { prach: prach_alloc, msg3: msg3_alloc.clone() },
        });
        fsm.advance(msg3_sf, ConnState::Msg3Sent);
        events.push(TimedEvent {
            subframe: msg3_sf,
            event: SchedEvent::UplinkTx {
                alloc: msg3_alloc,
                payload_seed: next_seed(),
                conn_id,
            },
        });

        // RRC setup on one or two PDSCH transmissions, each ACKed on PUCCH.
        let n_pdsch = if rng.random::<f64>() < self.params.second_pdsch_prob { 2 } else { 1 };
        let mut pdsch_sf = msg3_sf + rng.random_range(3..=8u64);
        let mut last_pucch = 0;
        for i in 0..n_pdsch {
            let pucch_sf = pdsch_sf + PDSCH_TO_PUCCH;
            let pucch_spec = UplinkMessageSpec::pucch(true, rnti);
            let pucch_alloc = UplinkAllocation::new(&self.cell, pucch_spec, pucch_sf);
            if i == 0 {
                fsm.advance(pdsch_sf, ConnState::SetupSent);
            }
            events.push(TimedEvent {
                subframe: pdsch_sf,
                event: SchedEvent::PdschSent { pucch: pucch_alloc.clone() },
            });
            events.push(TimedEvent {
                subframe: pucch_sf,
                event: SchedEvent::UplinkTx {
                    alloc: pucch_alloc,
                    payload_seed: next_seed(),
                    conn_id,
                },
            });
            last_pucch = pucch_sf;
            pdsch_sf += rng.random_range(2..=5u64);
        }

        // Monitoring cutoff: nothing past this point is ever scheduled.
        let end_sf = last_pucch + 1;
        fsm.advance(end_sf, ConnState::Complete);
        events.push(TimedEvent {
            subframe: end_sf,
            event: SchedEvent::ConnectionEnd {
                cell: (self.cell.earfcn, self.cell.pci),
                rnti,
                conn_id,
                n_pucch: n_pdsch as u8,
            },
        });

        events.sort_by_key(|e| e.subframe);
        Ok(ConnectionPlan { conn_id, ue, fsm, events })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;
    use crate::phy::Band;
    use rand::SeedableRng;

    fn cell() -> CellConfig {
        CellConfig {
            earfcn: 19500,
            pci: 301,
            n_prb_ul: 50,
            prach_subframes: vec![1, 6],
            prach_root: 129,
            band: Band::Band3,
        }
    }

    fn ue() -> UePosition {
        UePosition { position: Point::new(1.0, 2.0), inside_label: true, tx_power_db: 0.0 }
    }

    fn plan(seed: u64) -> ConnectionPlan {
        let mut sched = CellScheduler::new(cell(), SchedParams::default(), 61);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sched.schedule_connection(0, ue(), 0, &mut rng).unwrap()
    }

    fn tx_of(plan: &ConnectionPlan, msg_type: MsgType) -> Vec<u64> {
        plan.events
            .iter()
            .filter_map(|e| match &e.event {
                SchedEvent::UplinkTx { alloc, .. } if alloc.id.msg_type == msg_type => {
                    Some(e.subframe)
                }
                _ => None,
            })
            .collect()
    }

    #[test]
    fn timing_rules_hold_over_many_schedules() {
        for seed in 0..200 {
            let p = plan(seed);
            let rar = p
                .events
                .iter()
                .find_map(|e| match &e.event {
                    SchedEvent::RarDecoded { prach, msg3 } => {
                        Some((e.subframe, prach.id.subframe, msg3.id.subframe))
                    }
                    _ => None,
                })
                .unwrap();
            let (rar_sf, prach_sf, msg3_sf) = rar;
            assert_eq!(msg3_sf, rar_sf + RAR_TO_MSG3, "Msg3 exactly 6 after RAR");
            assert!(
                (RAR_DELAY_RANGE.0..=RAR_DELAY_RANGE.1).contains(&(rar_sf - prach_sf)),
                "RAR references a PRACH 3-13 subframes in the past"
            );
            // Every PDSCH is ACKed exactly 4 subframes later.
            let pucchs = tx_of(&p, MsgType::Pucch);
            let pdschs: Vec<u64> = p
                .events
                .iter()
                .filter_map(|e| match &e.event {
                    SchedEvent::PdschSent { .. } => Some(e.subframe),
                    _ => None,
                })
                .collect();
            assert_eq!(pucchs.len(), pdschs.len());
            for (pd, pu) in pdschs.iter().zip(&pucchs) {
                assert_eq!(pu - pd, PDSCH_TO_PUCCH);
            }
        }
    }

    #[test]
    fn message_counts_match_monitoring_window() {
        let mut one_pucch = 0;
        let mut two_pucch = 0;
        for seed in 0..300 {
            let p = plan(seed);
            assert_eq!(tx_of(&p, MsgType::Prach).len(), 1);
            assert_eq!(tx_of(&p, MsgType::Pusch).len(), 1);
            let n = tx_of(&p, MsgType::Pucch).len();
            assert!(n == 1 || n == 2);
            if n == 1 {
                one_pucch += 1
            } else {
                two_pucch += 1
            }
            // Cutoff: the end event is last.
            assert!(matches!(
                p.events.last().unwrap().event,
                SchedEvent::ConnectionEnd { .. }
            ));
        }
        assert!(one_pucch > 0 && two_pucch > 0);
    }

    #[test]
    fn fsm_advances_in_order() {
        let p = plan(42);
        let states: Vec<ConnState> = p.fsm.timeline.iter().map(|&(_, s)| s).collect();
        assert_eq!(
            states,
            vec![
                ConnState::PrachSent,
                ConnState::RarSent,
                ConnState::Msg3Sent,
                ConnState::SetupSent,
                ConnState::Complete
            ]
        );
        let times: Vec<u64> = p.fsm.timeline.iter().map(|&(t, _)| t).collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn prach_lands_on_configured_subframes() {
        for seed in 0..50 {
            let p = plan(seed);
            let sf = tx_of(&p, MsgType::Prach)[0];
            assert!(cell().prach_subframes.contains(&(sf % 10)));
        }
    }

    #[test]
    fn distinct_connections_get_distinct_identities() {
        let mut sched = CellScheduler::new(cell(), SchedParams::default(), 61);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = sched.schedule_connection(0, ue(), 0, &mut rng).unwrap();
        let b = sched.schedule_connection(1, ue(), 0, &mut rng).unwrap();
        assert_ne!(a.fsm.rnti, b.fsm.rnti);
        let ids_a: Vec<MessageId> = a.uplink_messages().map(|(al, _)| al.id).collect();
        let ids_b: Vec<MessageId> = b.uplink_messages().map(|(al, _)| al.id).collect();
        for ia in &ids_a {
            assert!(!ids_b.contains(ia));
        }
    }

    #[test]
    fn same_subframe_preamble_collision_backs_off() {
        let mut sched = CellScheduler::new(cell(), SchedParams::default(), 61);
        // Force many connections into the same arrival window; all PRACH
        // (subframe, preamble) pairs must come out unique.
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut seen = HashSet::new();
        for conn in 0..200 {
            let p = sched.schedule_connection(conn, ue(), 0, &mut rng).unwrap();
            let sf = tx_of(&p, MsgType::Prach)[0];
            let preamble = p
                .uplink_messages()
                .find(|(a, _)| a.id.msg_type == MsgType::Prach)
                .and_then(|(a, _)| a.spec.preamble_index)
                .unwrap();
            assert!(seen.insert((sf, preamble)), "collision not resolved");
        }
    }
}
