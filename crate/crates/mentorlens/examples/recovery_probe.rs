use mentorlens::analysis::{quintile_cem, ExperimentPlan, IndependentVariable};
use mentorlens::dyads::extract_dyads;
use mentorlens::metrics::assemble_units;
use mentorlens::scholars::build_profiles;
use mentorlens::synth::{generate_corpus, PlantedEffects, SynthConfig};

fn run_seed(seed: u64, planted: bool) -> Vec<Option<f64>> {
    let config = SynthConfig {
        seed,
        n_scholars: 20_000,
        planted: PlantedEffects {
            bigshot_quintile_multipliers: if planted {
                vec![1.0, 1.05, 1.10, 1.15, 1.30]
            } else {
                vec![1.0; 5]
            },
            ..PlantedEffects::default()
        },
        ..SynthConfig::default()
    };
    let t0 = std::time::Instant::now();
    let synth = generate_corpus(&config).unwrap();
    let t1 = std::time::Instant::now();
    let corpus = synth.build();
    let mut profiles = build_profiles(
        &corpus,
        synth.taxonomy(),
        &synth.gender_source(),
        &synth.rank_source(),
    );
    mentorlens::scholars::apply_gender_filter(&mut profiles, 0.95).unwrap();
    let params = synth.dyad_params();
    let extraction = extract_dyads(&corpus, &profiles, &params);
    let assembled = assemble_units(&corpus, &profiles, &extraction.dyads, &params);
    let t2 = std::time::Instant::now();
    let plan = ExperimentPlan::new(IndependentVariable::BigShot);
    let rows = quintile_cem(&assembled.units, &plan).unwrap();
    let t3 = std::time::Instant::now();
    eprintln!(
        "seed {seed}: papers={} edges={} units={} eligible_pred={} gen={:?} pipe={:?} cem={:?}",
        synth.publications.len(),
        synth.citations.len(),
        assembled.units.len(),
        synth
            .ground_truth
            .proteges
            .iter()
            .filter(|p| p.eligible)
            .count(),
        t1 - t0,
        t2 - t1,
        t3 - t2
    );
    for r in &rows {
        eprintln!(
            "  {}: |T|={} |C|={} |T'|={} |C'|={} L1={:?} delta={:?}",
            r.label,
            r.n_treated,
            r.n_control,
            r.n_matched_treated,
            r.n_matched_control,
            r.l1.map(|v| (v * 100.0).round() / 100.0),
            r.delta_pct.map(|v| (v * 10.0).round() / 10.0)
        );
    }
    rows.iter().map(|r| r.delta_pct).collect()
}

fn main() {
    let planted_flag = std::env::args().nth(1).unwrap_or_default() == "planted";
    let seeds: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let mut sums = [0.0f64; 4];
    let mut counts = [0u32; 4];
    for seed in 100..100 + seeds {
        for (i, d) in run_seed(seed, planted_flag).into_iter().enumerate() {
            if let Some(d) = d {
                sums[i] += d;
                counts[i] += 1;
            }
        }
    }
    for i in 0..4 {
        println!(
            "comparison {}: mean delta {:.2} over {} seeds",
            i + 1,
            sums[i] / counts[i] as f64,
            counts[i]
        );
    }
}
