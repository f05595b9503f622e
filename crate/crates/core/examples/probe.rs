// Scratch harness for sizing training defaults; not part of the library.
use std::time::Instant;

use dfkd::data::{build_corpus, CorpusConfig, NoiseKind};
use dfkd::loss::{KdVariant, LossWeights};
use dfkd::metrics::si_snr_improvement;
use dfkd::model::enhance;
use dfkd::train::{distill, train_teacher, TrainConfig};
use dfkd::dsp::Waveform;

fn eval_sisnri(net: &dfkd::MaskNet64, test: &[dfkd::MixtureSample64]) -> f64 {
    let cfg = dfkd::dsp::StftConfig::default();
    let mut total = 0.0;
    for s in test {
        let (enh, _) = enhance(net, &s.mixture, &cfg).unwrap();
        let n = enh.len();
        let mix = Waveform::new(s.mixture.samples[..n].to_vec(), 16000);
        let clean = Waveform::new(s.clean.samples[..n].to_vec(), 16000);
        total += si_snr_improvement(&enh, &mix, &clean).unwrap();
    }
    total / test.len() as f64
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let teacher_epochs: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let student_epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let n_seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(2);

    let t0 = Instant::now();
    let corpus_cfg = CorpusConfig {
        n_train: 200,
        n_test: 50,
        clip_seconds: 2.0,
        master_seed: 17,
        noise_kinds: vec![NoiseKind::Hiss, NoiseKind::White, NoiseKind::BabbleProxy],
        ..Default::default()
    };
    let corpus = build_corpus::<f64>(&corpus_cfg).unwrap();
    println!("corpus built in {:.1}s", t0.elapsed().as_secs_f64());

    let mix_base = {
        let mut total = 0.0;
        for s in &corpus.test {
            total += dfkd::loss::si_snr_db(&s.mixture.samples, &s.clean.samples).unwrap();
        }
        total / corpus.test.len() as f64
    };
    println!("mixture SI-SNR baseline on test: {mix_base:.2} dB");

    let t1 = Instant::now();
    let teacher_cfg = TrainConfig { epochs: teacher_epochs, seed: 100, ..Default::default() };
    let (teacher, report) = train_teacher(&corpus.train, &teacher_cfg).unwrap();
    println!(
        "teacher trained in {:.1}s ({} epochs), best epoch {} val {:?}",
        t1.elapsed().as_secs_f64(),
        teacher_epochs,
        report.best_epoch,
        report.best_val_si_snri
    );
    println!("teacher test SI-SNRi: {:.3} dB", eval_sisnri(&teacher, &corpus.test));
    for e in report.epochs.iter().step_by(3) {
        println!(
            "  epoch {:2} mean_l_total {:8.4} val {:?}",
            e.epoch, e.mean_l_total, e.val_si_snri
        );
    }

    for hidden in [128usize, 16] {
        for seed in 0..n_seeds {
            let t2 = Instant::now();
            let mk = |variant| TrainConfig {
                hidden,
                epochs: student_epochs,
                seed: 1000 + seed,
                weights: LossWeights { kd_variant: variant, ..Default::default() },
                ..Default::default()
            };
            let (scratch, _) = distill(&teacher, &corpus.train, &mk(KdVariant::None)).unwrap();
            let (dfkd_net, _) = distill(&teacher, &corpus.train, &mk(KdVariant::Dfkd)).unwrap();
            let (fixed_net, _) =
                distill(&teacher, &corpus.train, &mk(KdVariant::FixedSubband)).unwrap();
            println!(
                "hidden {hidden} seed {seed}: scratch {:.3} dfkd {:.3} fixed {:.3} ({:.0}s)",
                eval_sisnri(&scratch, &corpus.test),
                eval_sisnri(&dfkd_net, &corpus.test),
                eval_sisnri(&fixed_net, &corpus.test),
                t2.elapsed().as_secs_f64()
            );
        }
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
