use proptest::prelude::*;
use triage_core::model::trial_rng;
use triage_core::sim::{paired_trial, replay, ExamOutcome, PatientStream};
use triage_core::{
    run_replications, simulate_trial, DeviceOperatingPoint, Preemption, QueueDiscipline, SimConfig, WorkflowParams,
};

fn equal_service(prevalence: f64, rho: f64, c: u32, tpf: f64, fpf: f64) -> WorkflowParams {
    WorkflowParams::new(
        prevalence,
        1.0 / (rho * f64::from(c)),
        c,
        1.0,
        1.0,
        DeviceOperatingPoint::new(tpf, fpf).unwrap(),
    )
    .unwrap()
}

fn stream(p: &WorkflowParams, n: usize, seed: u64) -> PatientStream {
    PatientStream::generate(p, n, &mut trial_rng(seed, 0)).unwrap()
}

fn non_preemptive_outcomes(s: &PatientStream, c: u32, d: QueueDiscipline) -> Vec<ExamOutcome> {
    replay(s, c, d, Preemption::NonPreemptive)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every exam is served exactly once, never before it arrives, and an
    /// uninterrupted read lasts exactly its service time.
    #[test]
    fn exams_are_conserved(seed in any::<u64>(), c in 1u32..5, rho in 0.2f64..0.95, preemptive in any::<bool>()) {
        let p = equal_service(0.2, rho, c, 0.8, 0.1);
        let s = stream(&p, 2_000, seed);
        let mode = if preemptive { Preemption::PreemptiveResume } else { Preemption::NonPreemptive };
        for d in [QueueDiscipline::Fifo, QueueDiscipline::AiPriority] {
            let out = replay(&s, c, d, mode);
            prop_assert_eq!(out.len(), s.len());
            for (e, o) in s.exams().iter().zip(&out) {
                prop_assert!(o.first_start >= e.arrival - 1e-9);
                prop_assert!(o.completion >= o.first_start + e.service - 1e-9);
                prop_assert!((o.radiologist as u32) < c);
                if o.preemptions == 0 {
                    prop_assert!((o.completion - o.first_start - e.service).abs() < 1e-9);
                }
            }
        }
    }

    /// No radiologist idles while an exam waits: every waiting interval is
    /// covered by all radiologists being busy.
    #[test]
    fn work_is_conserved(seed in any::<u64>(), c in 1u32..4, rho in 0.5f64..0.95) {
        let p = equal_service(0.2, rho, c, 0.8, 0.1);
        let s = stream(&p, 600, seed);
        for d in [QueueDiscipline::Fifo, QueueDiscipline::AiPriority] {
            let out = non_preemptive_outcomes(&s, c, d);
            for (e, o) in s.exams().iter().zip(&out) {
                if o.first_start <= e.arrival + 1e-12 {
                    continue;
                }
                for r in 0..c as usize {
                    let mut busy: Vec<(f64, f64)> = out
                        .iter()
                        .filter(|x| x.radiologist == r)
                        .map(|x| (x.first_start, x.completion))
                        .filter(|&(a, b)| b > e.arrival && a < o.first_start)
                        .collect();
                    busy.sort_by(|a, b| a.0.total_cmp(&b.0));
                    let mut covered = e.arrival;
                    for (a, b) in busy {
                        prop_assert!(a <= covered + 1e-9, "radiologist {r} idle at {covered}");
                        covered = covered.max(b);
                    }
                    prop_assert!(covered >= o.first_start - 1e-9);
                }
            }
        }
    }

    /// Under AI priority no unflagged read starts while a flagged exam
    /// waits, and each class is served in arrival order.
    #[test]
    fn priority_order_is_respected(seed in any::<u64>(), c in 1u32..4, rho in 0.5f64..0.95) {
        let p = equal_service(0.3, rho, c, 0.9, 0.2);
        let s = stream(&p, 1_500, seed);
        let out = non_preemptive_outcomes(&s, c, QueueDiscipline::AiPriority);
        let ex = s.exams();
        for (i, (e, o)) in ex.iter().zip(&out).enumerate() {
            for (j, (f, q)) in ex.iter().zip(&out).enumerate() {
                if e.flagged == f.flagged && i < j {
                    prop_assert!(o.first_start <= q.first_start + 1e-12);
                }
                if !e.flagged && f.flagged {
                    // f waited across o's start
                    prop_assert!(!(f.arrival < o.first_start && q.first_start > o.first_start + 1e-12));
                }
            }
        }
    }

    #[test]
    fn no_flags_means_no_reordering(seed in any::<u64>(), c in 1u32..5, rho in 0.2f64..0.95) {
        let p = equal_service(0.3, rho, c, 0.0, 0.0);
        let s = stream(&p, 3_000, seed);
        for mode in [Preemption::NonPreemptive, Preemption::PreemptiveResume] {
            prop_assert_eq!(replay(&s, c, QueueDiscipline::Fifo, mode), replay(&s, c, QueueDiscipline::AiPriority, mode));
        }
    }
}

#[test]
fn trials_are_deterministic_and_schedule_independent() {
    let p = equal_service(0.1, 0.8, 2, 0.9, 0.05);
    let cfg = SimConfig::default();
    let a = run_replications(&p, 8, 5_000, 42, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_replications(&p, 8, 5_000, 42, &cfg)).unwrap();
    assert_eq!(a, b);
    let c = run_replications(&p, 8, 5_000, 43, &cfg).unwrap();
    assert_ne!(a, c);
    assert_eq!(
        simulate_trial(&p, QueueDiscipline::Fifo, 5_000, 7, &cfg).unwrap(),
        simulate_trial(&p, QueueDiscipline::Fifo, 5_000, 7, &cfg).unwrap()
    );
}

#[test]
fn overall_mean_wait_is_discipline_invariant() {
    // Equal service means: reordering moves waiting between classes but
    // leaves the all-exam mean unchanged in expectation.
    let p = equal_service(0.2, 0.8, 2, 0.9, 0.1);
    let cfg = SimConfig { burn_in: 1_000, ..SimConfig::default() };
    for seed in 0..3 {
        let t = paired_trial(&p, 200_000, seed, 0, &cfg).unwrap();
        let (f, q) = (t.fifo.wait_all, t.priority.wait_all);
        let se = (f.se * f.se + q.se * q.se).sqrt();
        assert!((f.mean - q.mean).abs() < 4.0 * se, "{f:?} vs {q:?}");
    }
}

#[test]
fn savings_are_positive_under_load() {
    for mode in [Preemption::NonPreemptive, Preemption::PreemptiveResume] {
        for rho in [0.5, 0.7, 0.9] {
            let p = equal_service(0.05, rho, 2, 0.9, 0.05);
            let e = run_replications(&p, 10, 20_000, 11, &SimConfig::with_preemption(mode)).unwrap();
            assert!(e.mean_savings > 0.0, "{mode:?} rho={rho}: {}", e.mean_savings);
        }
    }
}

#[test]
fn empty_queue_limit() {
    let p = WorkflowParams::new(0.1, 1e6, 3, 12.1, 6.15, DeviceOperatingPoint::new(0.9, 0.1).unwrap()).unwrap();
    let e = run_replications(&p, 4, 2_000, 5, &SimConfig::default()).unwrap();
    assert!(e.per_trial_savings.iter().all(|&s| s == 0.0), "{:?}", e.per_trial_savings);
}

#[test]
fn mm1_wait_matches_closed_form() {
    // λ = 0.9, μ = 1: Wq = λ / (μ (μ − λ)) = 9.
    let p = WorkflowParams::new(0.5, 1.0 / 0.9, 1, 1.0, 1.0, DeviceOperatingPoint::disabled()).unwrap();
    let cfg = SimConfig { burn_in: 5_000, ..SimConfig::default() };
    let t = simulate_trial(&p, QueueDiscipline::Fifo, 400_000, 2024, &cfg).unwrap();
    let w = t.wait_all;
    assert!((w.mean - 9.0).abs() < 3.0 * w.se, "{w:?}");
}
