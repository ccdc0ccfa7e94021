//! Event-driven simulation of the radiologist reading queue.
//!
//! A trial first draws one [`PatientStream`] (arrival times, disease labels,
//! device flags and read durations) and then replays it under a queue
//! discipline. Replaying the same stream under FIFO and AI-priority gives
//! paired per-trial savings.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{label_exam, trial_rng, unit_exponential, Preemption, QueueDiscipline, WorkflowParams};
use crate::stats::percentile;

/// Number of contiguous batches used for batch-means standard errors.
pub const DEFAULT_BATCHES: usize = 25;

/// Simulation knobs that are not part of the workload description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub preemption: Preemption,
    /// Leading exams excluded from every statistic.
    pub burn_in: usize,
    pub batches: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { preemption: Preemption::NonPreemptive, burn_in: 0, batches: DEFAULT_BATCHES }
    }
}

impl SimConfig {
    pub fn with_preemption(preemption: Preemption) -> Self {
        Self { preemption, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamExam {
    pub arrival: f64,
    pub diseased: bool,
    pub flagged: bool,
    pub service: f64,
}

/// One trial's worth of exams, shared by every discipline replayed on it.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientStream {
    exams: Vec<StreamExam>,
}

impl PatientStream {
    /// Poisson arrivals starting from an empty system at time zero.
    pub fn generate<R: Rng + ?Sized>(params: &WorkflowParams, n_patients: usize, rng: &mut R) -> Result<Self> {
        if n_patients == 0 {
            return Err(Error::param("n_patients must be at least 1"));
        }
        let mut exams = Vec::with_capacity(n_patients);
        let mut clock = 0.0;
        for _ in 0..n_patients {
            clock += unit_exponential(rng) * params.mean_interarrival();
            let (diseased, flagged) = label_exam(params, rng);
            let mean = if diseased { params.read_time_diseased() } else { params.read_time_nondiseased_effective() };
            let service = unit_exponential(rng) * mean;
            exams.push(StreamExam { arrival: clock, diseased, flagged, service });
        }
        Ok(Self { exams })
    }

    pub fn from_exams(exams: Vec<StreamExam>) -> Result<Self> {
        if exams.is_empty() {
            return Err(Error::param("stream must contain at least one exam"));
        }
        if exams.windows(2).any(|w| w[1].arrival < w[0].arrival) {
            return Err(Error::param("stream arrivals must be nondecreasing"));
        }
        if exams.iter().any(|e| !(e.service > 0.0) || e.arrival < 0.0) {
            return Err(Error::param("stream exams need arrival >= 0 and service > 0"));
        }
        Ok(Self { exams })
    }

    pub fn exams(&self) -> &[StreamExam] {
        &self.exams
    }

    pub fn len(&self) -> usize {
        self.exams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exams.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    ServiceComplete { radiologist: usize, exam: usize, token: u64 },
    Arrival { exam: usize },
}

impl EventKind {
    fn rank(&self) -> u8 {
        match self {
            EventKind::ServiceComplete { .. } => 0,
            EventKind::Arrival { .. } => 1,
        }
    }

    fn exam(&self) -> usize {
        match *self {
            EventKind::ServiceComplete { exam, .. } | EventKind::Arrival { exam } => exam,
        }
    }
}

/// Scheduled event. Ordered by time, then completions before arrivals, then
/// exam id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.rank().cmp(&other.kind.rank()))
            .then_with(|| self.kind.exam().cmp(&other.kind.exam()))
            .then_with(|| match (self.kind, other.kind) {
                (
                    EventKind::ServiceComplete { radiologist: a, token: ta, .. },
                    EventKind::ServiceComplete { radiologist: b, token: tb, .. },
                ) => a.cmp(&b).then(ta.cmp(&tb)),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// What happened to one exam during a replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExamOutcome {
    /// Time the first read of this exam began.
    pub first_start: f64,
    pub completion: f64,
    pub radiologist: usize,
    pub preemptions: u32,
}

#[derive(Debug, Clone, Copy)]
struct Radiologist {
    exam: Option<usize>,
    busy_until: f64,
    token: u64,
}

/// Exams waiting for a radiologist. Under FIFO everything lives in `unflagged`.
#[derive(Debug, Default)]
struct WaitingLine {
    flagged: VecDeque<usize>,
    unflagged: VecDeque<usize>,
}

impl WaitingLine {
    fn pop(&mut self) -> Option<usize> {
        self.flagged.pop_front().or_else(|| self.unflagged.pop_front())
    }

    fn is_empty(&self) -> bool {
        self.flagged.is_empty() && self.unflagged.is_empty()
    }

    /// Put an interrupted exam back in arrival order.
    fn requeue_unflagged(&mut self, exam: usize) {
        let pos = self.unflagged.partition_point(|&e| e < exam);
        self.unflagged.insert(pos, exam);
    }
}

struct Replay<'a> {
    exams: &'a [StreamExam],
    discipline: QueueDiscipline,
    preemption: Preemption,
    now: f64,
    events: BinaryHeap<Reverse<SimEvent>>,
    staff: Vec<Radiologist>,
    line: WaitingLine,
    remaining: Vec<f64>,
    outcomes: Vec<Option<ExamOutcome>>,
    next_token: u64,
}

impl<'a> Replay<'a> {
    fn is_priority(&self, exam: usize) -> bool {
        self.discipline == QueueDiscipline::AiPriority && self.exams[exam].flagged
    }

    fn start(&mut self, radiologist: usize, exam: usize) {
        let token = self.next_token;
        self.next_token += 1;
        let busy_until = self.now + self.remaining[exam];
        self.staff[radiologist] = Radiologist { exam: Some(exam), busy_until, token };
        let outcome = self.outcomes[exam].get_or_insert(ExamOutcome {
            first_start: self.now,
            completion: f64::NAN,
            radiologist,
            preemptions: 0,
        });
        outcome.radiologist = radiologist;
        self.events.push(Reverse(SimEvent {
            time: busy_until,
            kind: EventKind::ServiceComplete { radiologist, exam, token },
        }));
    }

    fn enqueue(&mut self, exam: usize) {
        if self.is_priority(exam) {
            self.line.flagged.push_back(exam);
        } else {
            self.line.unflagged.push_back(exam);
        }
    }

    fn on_arrival(&mut self, exam: usize) {
        if exam + 1 < self.exams.len() {
            self.events.push(Reverse(SimEvent {
                time: self.exams[exam + 1].arrival,
                kind: EventKind::Arrival { exam: exam + 1 },
            }));
        }
        if let Some(free) = self.staff.iter().position(|r| r.exam.is_none()) {
            self.start(free, exam);
            return;
        }
        if self.preemption == Preemption::PreemptiveResume && self.is_priority(exam) {
            // Interrupt the latest-arriving unflagged exam in service.
            let victim = self
                .staff
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.exam.filter(|&e| !self.is_priority(e)).map(|e| (i, e)))
                .max_by_key(|&(_, e)| e);
            if let Some((radiologist, interrupted)) = victim {
                self.remaining[interrupted] = self.staff[radiologist].busy_until - self.now;
                if let Some(o) = self.outcomes[interrupted].as_mut() {
                    o.preemptions += 1;
                }
                self.line.requeue_unflagged(interrupted);
                self.start(radiologist, exam);
                return;
            }
        }
        self.enqueue(exam);
    }

    fn on_complete(&mut self, radiologist: usize, exam: usize, token: u64) {
        let r = self.staff[radiologist];
        if r.token != token || r.exam != Some(exam) {
            return; // superseded by a preemption
        }
        self.remaining[exam] = 0.0;
        if let Some(o) = self.outcomes[exam].as_mut() {
            o.completion = self.now;
        }
        self.staff[radiologist].exam = None;
        if let Some(next) = self.line.pop() {
            self.start(radiologist, next);
        }
    }

    fn run(mut self) -> Vec<ExamOutcome> {
        self.events.push(Reverse(SimEvent { time: self.exams[0].arrival, kind: EventKind::Arrival { exam: 0 } }));
        while let Some(Reverse(event)) = self.events.pop() {
            debug_assert!(event.time >= self.now);
            self.now = event.time;
            match event.kind {
                EventKind::Arrival { exam } => self.on_arrival(exam),
                EventKind::ServiceComplete { radiologist, exam, token } => self.on_complete(radiologist, exam, token),
            }
            debug_assert!(self.line.is_empty() || self.staff.iter().all(|r| r.exam.is_some()));
        }
        self.outcomes.into_iter().map(|o| o.expect("every exam is served")).collect()
    }
}

/// Replay a stream through `n_radiologists` readers and return per-exam
/// outcomes in arrival order.
pub fn replay(
    stream: &PatientStream,
    n_radiologists: u32,
    discipline: QueueDiscipline,
    preemption: Preemption,
) -> Vec<ExamOutcome> {
    let n = stream.len();
    Replay {
        exams: &stream.exams,
        discipline,
        preemption,
        now: 0.0,
        events: BinaryHeap::new(),
        staff: vec![Radiologist { exam: None, busy_until: 0.0, token: 0 }; n_radiologists.max(1) as usize],
        line: WaitingLine::default(),
        remaining: stream.exams.iter().map(|e| e.service).collect(),
        outcomes: vec![None; n],
        next_token: 0,
    }
    .run()
}

/// Mean of a sequence with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMean {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl BatchMean {
    /// Values must be in simulation order; they are cut into `batches`
    /// contiguous groups whose means are treated as independent.
    pub fn from_sequence(values: &[f64], batches: usize) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let b = batches.min(n / 2).max(1);
        let se = if b < 2 {
            f64::NAN
        } else {
            let means: Vec<f64> = (0..b)
                .map(|k| {
                    let lo = k * n / b;
                    let hi = (k + 1) * n / b;
                    values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
                })
                .collect();
            let grand = means.iter().sum::<f64>() / b as f64;
            let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
            (var / b as f64).sqrt()
        };
        Some(Self { mean, se, n })
    }
}

/// Summary of one replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub n_patients: usize,
    pub n_diseased: usize,
    pub mean_tat_diseased: f64,
    pub mean_wait_diseased: f64,
    pub mean_tat_all: f64,
    pub utilization_observed: f64,
    pub wait_all: BatchMean,
    pub wait_flagged: Option<BatchMean>,
    pub wait_unflagged: Option<BatchMean>,
    pub wait_diseased: BatchMean,
}

impl TrialStats {
    pub fn from_outcomes(
        stream: &PatientStream,
        outcomes: &[ExamOutcome],
        n_radiologists: u32,
        cfg: &SimConfig,
    ) -> Result<Self> {
        let burn = cfg.burn_in.min(stream.len());
        let exams = &stream.exams[burn..];
        let outs = &outcomes[burn..];
        if exams.is_empty() {
            return Err(Error::insufficient("burn-in discards every simulated exam"));
        }
        let wait = |e: &StreamExam, o: &ExamOutcome| (o.completion - e.arrival - e.service).max(0.0);
        let mut all = Vec::with_capacity(exams.len());
        let mut flagged = Vec::new();
        let mut unflagged = Vec::new();
        let mut diseased = Vec::new();
        let mut tat_diseased = 0.0;
        let mut tat_all = 0.0;
        for (e, o) in exams.iter().zip(outs) {
            let w = wait(e, o);
            let tat = o.completion - e.arrival;
            all.push(w);
            tat_all += tat;
            if e.flagged {
                flagged.push(w);
            } else {
                unflagged.push(w);
            }
            if e.diseased {
                diseased.push(w);
                tat_diseased += tat;
            }
        }
        if diseased.is_empty() {
            return Err(Error::insufficient("no diseased exams in trial"));
        }
        let n = exams.len();
        let busy: f64 = stream.exams.iter().map(|e| e.service).sum();
        let makespan = outcomes.iter().map(|o| o.completion).fold(0.0, f64::max);
        let utilization =
            if makespan > 0.0 { (busy / (f64::from(n_radiologists) * makespan)).clamp(0.0, 1.0) } else { 0.0 };
        let wait_diseased = BatchMean::from_sequence(&diseased, cfg.batches).expect("nonempty");
        Ok(Self {
            n_patients: n,
            n_diseased: diseased.len(),
            mean_tat_diseased: tat_diseased / diseased.len() as f64,
            mean_wait_diseased: wait_diseased.mean,
            mean_tat_all: tat_all / n as f64,
            utilization_observed: utilization,
            wait_all: BatchMean::from_sequence(&all, cfg.batches).expect("nonempty"),
            wait_flagged: BatchMean::from_sequence(&flagged, cfg.batches),
            wait_unflagged: BatchMean::from_sequence(&unflagged, cfg.batches),
            wait_diseased,
        })
    }
}

/// Simulate one trial of `n_patients` exams on its own random stream.
pub fn simulate_trial(
    params: &WorkflowParams,
    discipline: QueueDiscipline,
    n_patients: usize,
    stream_seed: u64,
    cfg: &SimConfig,
) -> Result<TrialStats> {
    // Constructed params are always stable; recheck for hand-built copies.
    let rho = params.utilization();
    if rho >= 1.0 {
        return Err(Error::Unstable { rho });
    }
    let mut rng = trial_rng(stream_seed, 0);
    let stream = PatientStream::generate(params, n_patients, &mut rng)?;
    let outcomes = replay(&stream, params.n_radiologists(), discipline, cfg.preemption);
    TrialStats::from_outcomes(&stream, &outcomes, params.n_radiologists(), cfg)
}

/// Both disciplines replayed on the same stream.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedTrial {
    pub fifo: TrialStats,
    pub priority: TrialStats,
    /// Diseased-exam wait differences (FIFO minus priority), in exam order.
    pub diseased_wait_savings: BatchMean,
}

impl PairedTrial {
    pub fn savings(&self) -> f64 {
        self.fifo.mean_tat_diseased - self.priority.mean_tat_diseased
    }
}

pub fn paired_trial(
    params: &WorkflowParams,
    n_patients: usize,
    master_seed: u64,
    trial_index: u64,
    cfg: &SimConfig,
) -> Result<PairedTrial> {
    let mut rng = trial_rng(master_seed, trial_index);
    let stream = PatientStream::generate(params, n_patients, &mut rng)?;
    let c = params.n_radiologists();
    let fifo_out = replay(&stream, c, QueueDiscipline::Fifo, cfg.preemption);
    let prio_out = replay(&stream, c, QueueDiscipline::AiPriority, cfg.preemption);
    let burn = cfg.burn_in.min(stream.len());
    let diffs: Vec<f64> = stream.exams[burn..]
        .iter()
        .zip(&fifo_out[burn..])
        .zip(&prio_out[burn..])
        .filter(|((e, _), _)| e.diseased)
        .map(|((_, f), p)| f.completion - p.completion)
        .collect();
    let fifo = TrialStats::from_outcomes(&stream, &fifo_out, c, cfg)?;
    let priority = TrialStats::from_outcomes(&stream, &prio_out, c, cfg)?;
    Ok(PairedTrial {
        fifo,
        priority,
        diseased_wait_savings: BatchMean::from_sequence(&diffs, cfg.batches).expect("diseased present"),
    })
}

/// Aggregated time-savings over independent paired trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsEstimate {
    pub mean_savings: f64,
    /// 2.5th and 97.5th percentiles of the per-trial savings.
    pub range95: (f64, f64),
    pub per_trial_savings: Vec<f64>,
    pub n_trials: usize,
}

impl SavingsEstimate {
    pub fn from_trials(per_trial_savings: Vec<f64>) -> Self {
        let n = per_trial_savings.len();
        let mean = per_trial_savings.iter().sum::<f64>() / n as f64;
        let mut sorted = per_trial_savings.clone();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean_savings: mean,
            range95: (percentile(&sorted, 2.5), percentile(&sorted, 97.5)),
            per_trial_savings,
            n_trials: n,
        }
    }

    /// Standard error of `mean_savings` across trials.
    pub fn standard_error(&self) -> f64 {
        let n = self.n_trials as f64;
        let var = self.per_trial_savings.iter().map(|s| (s - self.mean_savings).powi(2)).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Run `n_trials` paired trials in parallel. Trial `i` always uses stream
/// `(master_seed, i)` and results are aggregated in trial order, so the
/// output does not depend on thread scheduling.
pub fn run_replications(
    params: &WorkflowParams,
    n_trials: usize,
    n_patients: usize,
    master_seed: u64,
    cfg: &SimConfig,
) -> Result<SavingsEstimate> {
    if n_trials < 2 {
        return Err(Error::param("n_trials must be at least 2"));
    }
    let savings = (0..n_trials as u64)
        .into_par_iter()
        .map(|i| paired_trial(params, n_patients, master_seed, i, cfg).map(|t| t.savings()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SavingsEstimate::from_trials(savings))
}
