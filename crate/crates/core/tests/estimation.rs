use triage_core::estimation::logs::write_exam_log;
use triage_core::estimation::{
    daily_interarrival_fits, estimate_read_times, ingest_exam_log, summarize_interarrival, Calendar, FitOptions,
    ReadTimeOptions, ReaderRole,
};
use triage_core::synthetic::{generate_closure_log, generate_exam_log, resident_id, ClosureLogSpec, ExamLogSpec};
use triage_core::{Cohort, ExamClass};

#[test]
fn study_counts_survive_ingestion() {
    let spec = ExamLogSpec {
        n_days: 30,
        max_rows: Some(11_252),
        n_positive: Some(1_683),
        negative_tat_rows: 5_327,
        ..ExamLogSpec::default()
    };
    let log = generate_exam_log(&spec, &Calendar::default(), 1);
    let mut buf = Vec::new();
    write_exam_log(&mut buf, &log, b',').unwrap();
    let ingest = ingest_exam_log(buf.as_slice(), b',').unwrap();
    assert_eq!(ingest.n_rows, 16_579);
    assert_eq!(ingest.n_excluded_negative, 5_327);
    assert_eq!(ingest.records.len(), 11_252);
    assert!(ingest.row_errors.is_empty());
    assert_eq!(ingest.records.iter().filter(|r| r.diagnosis.is_diseased()).count(), 1_683);
}

#[test]
fn interarrival_fits_recover_generator() {
    let cal = Calendar::default();
    let spec = ExamLogSpec { n_days: 90, ..ExamLogSpec::default() };
    let log = generate_exam_log(&spec, &cal, 2);
    let fits = daily_interarrival_fits(&log, &cal, &FitOptions::default());
    for (cohort, truth) in [(Cohort::WorkHour, 2.17), (Cohort::OffHour, 3.19)] {
        let s = summarize_interarrival(&fits.fits, cohort).unwrap();
        assert!((s.mean - truth).abs() / truth < 0.05, "{cohort:?}: {s:?}");
        let big: Vec<f64> = fits.for_cohort(cohort).filter(|f| f.n >= 100).map(|f| f.r2).collect();
        let r2 = big.iter().sum::<f64>() / big.len() as f64;
        assert!(r2 >= 0.98, "{cohort:?}: mean R² {r2}");
    }
}

#[test]
fn read_times_recover_generator_despite_decoys() {
    let spec = ClosureLogSpec { n_days: 60, class_mix: [0.1, 0.2, 0.7], ..ClosureLogSpec::default() };
    let closures = generate_closure_log(&spec, 3);
    let roles = (0..spec.n_residents)
        .map(|i| (resident_id(i), ReaderRole::Resident))
        .chain((0..spec.n_staff).map(|i| (triage_core::synthetic::staff_id(i), ReaderRole::Staff)))
        .collect();
    let s = estimate_read_times(&closures, &roles, &ReadTimeOptions::default());
    assert!(s.exclusions.reader_days_dropped > 0);
    assert!(s.exclusions.gaps_over_limit > 0);
    assert!(s.exclusions.closures_not_resident > 0);
    for (class, truth) in ExamClass::ALL.into_iter().zip(spec.read_means) {
        let c = s.class(class).unwrap();
        assert_eq!(c.n_readers, spec.n_residents as usize);
        assert!((c.average - truth).abs() / truth < 0.05, "{class:?}: {c:?}");
    }
}
