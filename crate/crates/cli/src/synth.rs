//! Synthetic long-form data for demos and tests.
//!
//! Each variable is a seasonal mean plus an exponentiated AR(1) process. The
//! innovations of the first variable are correlated with those of every
//! other variable, so a canonical vine rooted at variable 1 sees dependence
//! in its first tree and (approximately) none beyond.

use drought_core::ingest::Observation;
use drought_core::series::TimeStamp;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub pixels: usize,
    pub months: usize,
    pub start: TimeStamp,
    pub variables: Vec<String>,
    /// Innovation correlation between variable 1 and each other variable.
    pub rho: f64,
    /// AR(1) coefficient.
    pub phi: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            pixels: 4,
            months: 240,
            start: TimeStamp::new(1961, 1).expect("valid"),
            variables: vec!["PRE".into(), "PET".into()],
            rho: 0.0,
            phi: 0.4,
            seed: 1,
        }
    }
}

pub fn synthesize(opts: &SynthOptions) -> Vec<Observation> {
    let d = opts.variables.len();
    let mut rows = Vec::with_capacity(opts.pixels * opts.months * d);
    let innovation_sd = (1.0 - opts.phi * opts.phi).sqrt();
    let rest = (1.0 - opts.rho * opts.rho).sqrt();
    for p in 0..opts.pixels {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(p as u64);
        let id = format!("p{p:04}");
        let lon = -10.0 + 0.5 * (p % 20) as f64;
        let lat = 40.0 + 0.5 * (p / 20) as f64;
        let mut state = vec![0.0f64; d];
        let mut series = vec![Vec::with_capacity(opts.months); d];
        for k in 0..opts.months {
            let e: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            for j in 0..d {
                let innov = if j == 0 { e[0] } else { opts.rho * e[0] + rest * e[j] };
                state[j] = opts.phi * state[j] + innovation_sd * innov;
                let month = opts.start.add_months(k as i64).month() as f64;
                let season = 10.0 * (1.0 + j as f64) + 4.0 * (std::f64::consts::TAU * (month - 1.0) / 12.0 + j as f64).sin();
                series[j].push(season + 3.0 * (0.5 * state[j]).exp());
            }
        }
        for (j, name) in opts.variables.iter().enumerate() {
            for (k, &value) in series[j].iter().enumerate() {
                let t = opts.start.add_months(k as i64);
                rows.push(Observation {
                    pixel_id: id.clone(),
                    lon,
                    lat,
                    year: t.year(),
                    month: t.month(),
                    variable: name.clone(),
                    value,
                });
            }
        }
    }
    rows
}
