mod common;

use radiomix::fades::{FadeCurve, FadeDirection, FadeSpec};
use radiomix::labels::{format_annotations, Event, Label};
use radiomix::loudness::loudness_difference;
use radiomix::synth::{
    generate_dataset, read_manifest, render_ducked_bed, BedLevel, ClassState, ExamplePlan,
    GenerateOptions, SegmentPlan, TransitionKind, TransitionSpec, Variant, EXAMPLE_SAMPLES, MANIFEST_FILE,
};
use radiomix::corpus::{decode_and_standardize, ensure_min_duration, peak_normalize};
use radiomix::AudioClip;

fn single(state: ClassState, bed: Option<BedLevel>) -> ExamplePlan {
    ExamplePlan {
        segments: vec![SegmentPlan { state, bed }],
        transition: None,
    }
}

fn stem(class: &str, i: usize) -> AudioClip {
    let p = common::demo_corpus().join(class).join(format!("{class}_{i:03}.wav"));
    let clip = ensure_min_duration(&decode_and_standardize(&p).unwrap(), 8.0);
    let head = clip.samples()[..EXAMPLE_SAMPLES].to_vec();
    peak_normalize(&AudioClip::canonical(head, "stem").unwrap()).unwrap()
}

#[test]
fn pure_speech_spans_whole_example() {
    let s = common::synthesizer(Variant::DataSynthesis);
    let ex = s.synthesize_plan(&single(ClassState::Speech, None), 0, 1).unwrap();
    assert_eq!(ex.events.events(), &[Event::new(0.0, 8.0, Label::Speech)]);
    assert_eq!(ex.audio.len(), EXAMPLE_SAMPLES);
    assert_eq!(ex.audio.peak(), 1.0);
}

#[test]
fn noise_has_no_events() {
    let s = common::synthesizer(Variant::OnlyFiles);
    let ex = s.synthesize_plan(&single(ClassState::Noise, None), 3, 1).unwrap();
    assert!(ex.events.is_empty());
}

#[test]
fn speech_over_music_marks_both_classes() {
    let s = common::synthesizer(Variant::DataSynthesis);
    let plan = single(ClassState::SpeechOverMusic, Some(BedLevel::Loudness { ld: 12.0 }));
    let ex = s.synthesize_plan(&plan, 1, 1).unwrap();
    assert_eq!(
        ex.events.events(),
        &[Event::new(0.0, 8.0, Label::Music), Event::new(0.0, 8.0, Label::Speech)]
    );
    assert_eq!(ex.meta.ld, vec![12.0]);
    assert!((ex.meta.ld_measured[0] - 12.0).abs() <= 0.5);
}

#[test]
fn music_to_speech_transition_boundaries() {
    let s = common::synthesizer(Variant::DataSynthesis);
    let fade = |direction| FadeSpec { curve: FadeCurve::Linear, duration_s: 1.0, direction };
    let plan = ExamplePlan {
        segments: vec![
            SegmentPlan { state: ClassState::Music, bed: None },
            SegmentPlan { state: ClassState::Speech, bed: None },
        ],
        transition: Some(TransitionSpec {
            kind: TransitionKind::Normal,
            t_transition: 4.0,
            fade_out: fade(FadeDirection::Out),
            fade_in: fade(FadeDirection::In),
            gap_s: 0.5,
        }),
    };
    let ex = s.synthesize_plan(&plan, 2, 1).unwrap();
    assert_eq!(format_annotations(&ex.events), "0.000\t4.000\tmusic\n4.500\t8.000\tspeech\n");
    let gap = &ex.audio.samples()[88_200..99_225];
    assert!(gap.iter().all(|&v| v == 0.0));
}

#[test]
fn ducking_is_monotone_and_closes() {
    let speech = stem("speech", 0);
    let music = stem("music", 1);
    let quiet = render_ducked_bed(&speech, &music, 18.0).unwrap();
    let loud = render_ducked_bed(&speech, &music, 7.0).unwrap();
    assert!(quiet.music_gain < loud.music_gain);
    for bed in [&quiet, &loud] {
        let ducked = music.scaled(bed.music_gain as f32);
        let ld = loudness_difference(&speech, &ducked).unwrap().0;
        assert!((ld - bed.measured_ld).abs() < 1e-9);
    }
    assert!((quiet.measured_ld - 18.0).abs() <= 0.5);
    assert!((loud.measured_ld - 7.0).abs() <= 0.5);
}

#[test]
fn examples_are_deterministic_and_independent_of_order() {
    let a = common::synthesizer(Variant::DataSynthesis);
    let b = common::synthesizer(Variant::DataSynthesis);
    let forward: Vec<_> = (0..12).map(|i| a.synthesize_example(i, 42).unwrap()).collect();
    for i in (0..12).rev() {
        let ex = b.synthesize_example(i, 42).unwrap();
        assert_eq!(ex.audio.samples(), forward[i as usize].audio.samples());
        assert_eq!(ex.events, forward[i as usize].events);
        assert_eq!(ex.meta, forward[i as usize].meta);
    }
    let other = a.synthesize_example(0, 43).unwrap();
    assert_ne!(other.audio.samples(), forward[0].audio.samples());
}

#[test]
fn dataset_regenerates_byte_identically() {
    let s = common::synthesizer(Variant::DataSynthesis);
    let opts = GenerateOptions { count: 100, master_seed: 7, workers: Some(4) };
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    generate_dataset(&s, &opts, d1.path()).unwrap();
    generate_dataset(&s, &GenerateOptions { workers: Some(1), ..opts }, d2.path()).unwrap();
    assert_eq!(common::files_in(d1.path()).len(), 201);
    assert_eq!(common::dir_digest(d1.path()), common::dir_digest(d2.path()));

    let manifest = read_manifest(&d1.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.len(), 100);
    for (i, m) in manifest.iter().enumerate() {
        assert_eq!(m.index, i as u64);
        assert_eq!(m.variant, Variant::DataSynthesis);
        assert!(m.ld.iter().all(|ld| (7.0..=18.0).contains(ld)));
        assert!(!m.sources.is_empty());
    }
}
