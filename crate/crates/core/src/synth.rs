//! Seeded synthetic movie corpus with a planted ROI signal.
//!
//! The generative equations are documented in `docs/synthetic.md`.

use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{AudienceScores, Credits, RawDataset, RawMovieRecord};
use crate::error::{Error, Result};
use crate::rng;

const GENRES: [&str; 12] = [
    "Action",
    "Adventure",
    "Animation",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Family",
    "Fantasy",
    "Horror",
    "Romance",
    "Thriller",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub genome_dim: usize,
    /// Leading genome dimensions that carry signal.
    pub informative: usize,
    pub first_year: i32,
    pub last_year: i32,
    /// Share of rows the cleaning filter is expected to drop.
    pub dirty_fraction: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 5426,
            seed: 0,
            genome_dim: 50,
            informative: 5,
            first_year: 1981,
            last_year: 2016,
            dirty_fraction: 0.03,
        }
    }
}

// signal weights
const W_COLLECTION: f64 = 1.2;
const W_BUDGET: f64 = 0.8;
const W_QUALITY: f64 = 1.0;
const W_GENOME: f64 = 0.6;
const ROI_SCALE: f64 = 0.5;
const ROI_NOISE: f64 = 0.3;
const LOG_BUDGET_MEAN: f64 = 16.5;
const QUALITY_SD: f64 = 1.5;

struct Pool {
    prefix: &'static str,
    quality: Vec<f64>,
}

impl Pool {
    fn new(prefix: &'static str, size: usize, rng: &mut ChaCha8Rng, normal: &Normal<f64>) -> Pool {
        Pool {
            prefix,
            quality: (0..size).map(|_| QUALITY_SD * normal.sample(rng)).collect(),
        }
    }

    /// Distinct members; low indices are drawn far more often.
    fn draw(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        while picked.len() < count {
            let u: f64 = rng.random();
            let i = ((u * u) * self.quality.len() as f64) as usize;
            if !picked.contains(&i) {
                picked.push(i);
            }
        }
        picked
    }

    fn id(&self, i: usize) -> String {
        format!("{}{i:04}", self.prefix)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Generates `cfg.n` rows in date order. Identical configs give identical
/// output.
pub fn generate(cfg: &SynthConfig) -> Result<RawDataset> {
    if cfg.informative > cfg.genome_dim || cfg.first_year > cfg.last_year || cfg.n == 0 {
        return Err(Error::InvalidConfig(format!(
            "bad synthetic config {cfg:?}"
        )));
    }
    if !(0.0..=1.0).contains(&cfg.dirty_fraction) {
        return Err(Error::InvalidConfig(
            "dirty_fraction must lie in [0, 1]".into(),
        ));
    }
    let mut rng = rng::salted(cfg.seed, rng::SALT_SYNTH, 0);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let pools = [
        Pool::new("ph", 150, &mut rng, &normal),
        Pool::new("wr", 600, &mut rng, &normal),
        Pool::new("di", 400, &mut rng, &normal),
        Pool::new("pr", 500, &mut rng, &normal),
        Pool::new("ca", 1200, &mut rng, &normal),
    ];
    // members per movie: (min, max) for each pool
    let counts = [(1, 3), (1, 2), (1, 1), (1, 3), (3, 5)];

    let mut dates: Vec<NaiveDate> = (0..cfg.n)
        .map(|_| {
            let y = rng.random_range(cfg.first_year..=cfg.last_year);
            let m = rng.random_range(1..=12);
            let d = rng.random_range(1..=28);
            NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
        })
        .collect();
    dates.sort();

    let mut records = Vec::with_capacity(cfg.n);
    for (i, mut date) in dates.into_iter().enumerate() {
        let mut credits: [Vec<String>; 5] = Default::default();
        let mut quality = 0.0;
        for (k, pool) in pools.iter().enumerate() {
            let (lo, hi) = counts[k];
            let members = pool.draw(rng.random_range(lo..=hi), &mut rng);
            quality += members.iter().map(|&m| pool.quality[m]).sum::<f64>() / members.len() as f64;
            credits[k] = members.iter().map(|&m| pool.id(m)).collect();
        }
        quality /= pools.len() as f64;

        let latent: Vec<f64> = (0..cfg.informative)
            .map(|_| normal.sample(&mut rng))
            .collect();
        let genome: Vec<f64> = (0..cfg.genome_dim)
            .map(|k| match latent.get(k) {
                Some(&z) => sigmoid(1.5 * z),
                None => (0.5 + 0.05 * normal.sample(&mut rng)).clamp(0.0, 1.0),
            })
            .collect();

        let is_collection = rng.random_bool(0.2);
        let budget_z = normal.sample(&mut rng);
        let mut budget = (LOG_BUDGET_MEAN + budget_z).exp().round();
        let signal = W_COLLECTION * f64::from(u8::from(is_collection))
            + W_BUDGET * budget_z
            + W_QUALITY * quality
            + W_GENOME * latent.iter().sum::<f64>();
        let roi = (ROI_SCALE * signal + ROI_NOISE * normal.sample(&mut rng)).exp() - 1.0;
        let mut revenue = (budget * (1.0 + roi)).round().max(1.0);

        if rng.random_bool(cfg.dirty_fraction) {
            match rng.random_range(0..3) {
                0 => budget = 0.0,
                1 => revenue = 0.0,
                _ => {
                    date =
                        NaiveDate::from_ymd_opt(rng.random_range(1955..=1965), date.month0() + 1, 1)
                            .expect("valid date")
                }
            }
        }

        let n_genres = rng.random_range(1..=3);
        let mut genres: Vec<String> = Vec::new();
        while genres.len() < n_genres {
            let g = GENRES[rng.random_range(0..GENRES.len())].to_string();
            if !genres.contains(&g) {
                genres.push(g);
            }
        }
        let crew_length = rng.random_range(10..=120u32);
        let female_count = rng.random_range(0..=crew_length / 3);
        let male_count = crew_length - female_count;
        let s_norm = sigmoid(0.5 * signal);
        let noise = [
            rng.random_range(0.0..5.0),
            rng.random_range(10.0..5000.0f64).round(),
            rng.random_range(100.0..500_000.0f64).round(),
        ];
        let mut maybe = |v: f64| if rng.random_bool(0.05) { None } else { Some(v) };
        let audience = AudienceScores {
            popularity: maybe(20.0 * s_norm + noise[0]),
            vote_average: maybe(4.0 + 4.0 * s_norm),
            vote_count: maybe(noise[1]),
            metacritic_score: maybe((30.0 + 50.0 * s_norm).round()),
            imdb_rating: maybe(4.5 + 3.5 * s_norm),
            imdb_votes: maybe(noise[2]),
        };
        let [production_houses, writers, directors, producers, main_cast] = credits;
        records.push(RawMovieRecord {
            movie_id: format!("syn{:05}", i + 1),
            title: format!("Synthetic Movie {}", i + 1),
            release_date: date,
            budget,
            revenue,
            is_adult: rng.random_bool(0.01),
            is_english: rng.random_bool(0.8),
            is_collection,
            is_homepage: rng.random_bool(0.4),
            is_tagline: rng.random_bool(0.7),
            languages_count: rng.random_range(1..=4),
            keywords_count: rng.random_range(0..=30),
            movie_runtime: if rng.random_bool(0.02) {
                None
            } else {
                Some(
                    (110.0 + 18.0 * normal.sample(&mut rng))
                        .clamp(60.0, 240.0)
                        .round(),
                )
            },
            genres,
            female_count,
            male_count,
            crew_length,
            audience,
            credits: Credits {
                production_houses,
                writers,
                directors,
                producers,
                main_cast,
            },
            genome,
        });
    }
    Ok(RawDataset {
        records,
        genome_dim: cfg.genome_dim,
    })
}
