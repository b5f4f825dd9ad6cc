//! Desk-scale stand-in for the H-1B visa application records.
//!
//! Rows are drawn from fixed occupation, state, year and full-time marginals.
//! Certification follows a planted latent logistic model: each row gets a score
//! from its attributes plus standard logistic noise, and the top
//! `round(positive_fraction * n)` scores are CERTIFIED. That is exactly a
//! logistic model thresholded at the quantile that gives the requested class
//! balance. The model includes an occupation x part-time interaction that a
//! linear classifier over one-hot features cannot express.
//!
//! The coefficients below are constants of this generator. They are not fitted
//! to real filings.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Column, ColumnDecl, ColumnKind, ColumnarTable, CsvSchema};
use crate::error::{Error, Result};
use crate::rng::{self, stream};

/// (occupation, relative frequency, base annual wage, certification effect)
const OCCUPATIONS: &[(&str, f64, f64, f64)] = &[
    ("COMPUTER SYSTEMS ANALYSTS", 14.0, 72_000.0, 0.9),
    ("SOFTWARE DEVELOPERS, APPLICATIONS", 13.0, 95_000.0, 1.1),
    ("COMPUTER PROGRAMMERS", 11.0, 68_000.0, 0.7),
    ("COMPUTER OCCUPATIONS, ALL OTHER", 7.0, 78_000.0, 0.4),
    ("SOFTWARE DEVELOPERS, SYSTEMS SOFTWARE", 4.0, 102_000.0, 1.0),
    ("MANAGEMENT ANALYSTS", 3.0, 84_000.0, -0.2),
    ("ACCOUNTANTS AND AUDITORS", 2.5, 61_000.0, -0.4),
    (
        "NETWORK AND COMPUTER SYSTEMS ADMINISTRATORS",
        2.0,
        74_000.0,
        0.3,
    ),
    ("DATABASE ADMINISTRATORS", 2.0, 86_000.0, 0.5),
    ("MECHANICAL ENGINEERS", 1.8, 80_000.0, 0.2),
    ("ELECTRONICS ENGINEERS, EXCEPT COMPUTER", 1.6, 97_000.0, 0.6),
    ("FINANCIAL ANALYSTS", 1.6, 88_000.0, -0.3),
    (
        "MARKET RESEARCH ANALYSTS AND MARKETING SPECIALISTS",
        1.5,
        58_000.0,
        -0.8,
    ),
    ("PHYSICIANS AND SURGEONS, ALL OTHER", 1.4, 165_000.0, 0.1),
    (
        "MEDICAL SCIENTISTS, EXCEPT EPIDEMIOLOGISTS",
        1.2,
        71_000.0,
        -0.1,
    ),
    ("BIOCHEMISTS AND BIOPHYSICISTS", 0.8, 76_000.0, -0.2),
    ("OPERATIONS RESEARCH ANALYSTS", 1.0, 83_000.0, 0.2),
    ("STATISTICIANS", 0.9, 87_000.0, 0.4),
    ("CIVIL ENGINEERS", 1.0, 75_000.0, 0.0),
    ("INDUSTRIAL ENGINEERS", 0.9, 79_000.0, 0.1),
    ("POSTSECONDARY TEACHERS, ALL OTHER", 1.3, 62_000.0, -0.6),
    ("PHYSICAL THERAPISTS", 1.0, 73_000.0, -1.3),
    ("REGISTERED NURSES", 0.8, 64_000.0, -1.5),
    ("GRAPHIC DESIGNERS", 0.6, 48_000.0, -1.6),
    ("CHEFS AND HEAD COOKS", 0.5, 42_000.0, -1.8),
    ("SALES MANAGERS", 0.7, 115_000.0, -0.9),
    ("GENERAL AND OPERATIONS MANAGERS", 0.9, 120_000.0, -0.7),
    (
        "COMPUTER AND INFORMATION SYSTEMS MANAGERS",
        1.1,
        135_000.0,
        0.6,
    ),
    (
        "ARCHITECTS, EXCEPT LANDSCAPE AND NAVAL",
        0.5,
        70_000.0,
        -1.0,
    ),
    ("LAWYERS", 0.4, 140_000.0, -1.2),
];

/// (relative frequency, certification effect, wage multiplier); only the
/// derived `state_prob` column and the wage reveal the state.
const STATES: &[(f64, f64, f64)] = &[
    (16.0, 0.3, 1.22), // CA
    (9.0, 0.4, 1.02),  // TX
    (8.0, 0.1, 1.18),  // NY
    (6.0, 0.5, 1.05),  // NJ
    (5.0, 0.2, 1.10),  // WA
    (4.5, 0.0, 1.01),  // IL
    (4.0, -0.2, 1.08), // MA
    (3.5, 0.6, 0.96),  // PA
    (3.5, 0.3, 0.95),  // GA
    (3.0, -0.4, 0.93), // FL
    (2.5, 0.7, 0.94),  // NC
    (2.5, 0.2, 0.97),  // MI
    (2.0, -0.3, 1.04), // VA
    (2.0, 0.5, 0.92),  // OH
    (1.5, -0.7, 0.90), // AZ
    (1.5, -0.9, 0.96), // MD
    (1.0, -1.1, 0.88), // MO
    (1.0, -0.6, 0.98), // CO
    (0.8, -1.4, 0.85), // IA
    (0.7, -1.6, 0.89), // UT
];

const YEARS: &[(&str, f64)] = &[
    ("2011", 0.12),
    ("2012", 0.14),
    ("2013", 0.15),
    ("2014", 0.17),
    ("2015", 0.19),
    ("2016", 0.23),
];

const FULL_TIME_SHARE: f64 = 0.72;

// latent score coefficients
const W_OCCUPATION: f64 = 1.6;
const W_STATE: f64 = 1.3;
const W_FULL_TIME: f64 = 0.8;
const W_YEAR: f64 = 0.15;
const W_LOG_WAGE: f64 = 0.9;
/// Part-time filings see the occupation effect inverted.
const W_PART_TIME_FLIP: f64 = -3.2;

pub const SOC_NAMES: usize = OCCUPATIONS.len();

/// Column layout produced by [`gen_synthetic_h1b`], for reading a generated file back.
pub fn h1b_schema() -> CsvSchema {
    use ColumnKind::*;
    CsvSchema::new(vec![
        ColumnDecl::new("CASE_STATUS", Categorical),
        ColumnDecl::new("SOC_NAME", Categorical),
        ColumnDecl::new("FULL_TIME_POSITION", Categorical),
        ColumnDecl::new("PREVAILING_WAGE", Numeric),
        ColumnDecl::new("YEAR", Categorical),
        ColumnDecl::new("soc_prob", Numeric),
        ColumnDecl::new("state_prob", Numeric),
    ])
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn round_to(x: f64, places: i32) -> f64 {
    let scale = 10f64.powi(places);
    (x * scale).round() / scale
}

/// Generate `n` synthetic application rows with the requested CERTIFIED share.
pub fn gen_synthetic_h1b(n: usize, positive_fraction: f64, seed: u64) -> Result<ColumnarTable> {
    if n < 100 {
        return Err(Error::Config(format!(
            "synthetic data needs at least 100 rows, got {n}"
        )));
    }
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(Error::Config(format!(
            "positive fraction {positive_fraction} is not in (0, 1)"
        )));
    }
    let mut rng = rng::seeded(seed, stream::SYNTHETIC);
    let occupation_dist =
        WeightedIndex::new(OCCUPATIONS.iter().map(|o| o.1)).expect("positive weights");
    let state_dist = WeightedIndex::new(STATES.iter().map(|s| s.0)).expect("positive weights");
    let year_dist = WeightedIndex::new(YEARS.iter().map(|y| y.1)).expect("positive weights");
    let base_logit = (positive_fraction / (1.0 - positive_fraction)).ln();

    let mut soc = Vec::with_capacity(n);
    let mut full_time = Vec::with_capacity(n);
    let mut wage = Vec::with_capacity(n);
    let mut year = Vec::with_capacity(n);
    let mut soc_prob = Vec::with_capacity(n);
    let mut state_prob = Vec::with_capacity(n);
    let mut score = Vec::with_capacity(n);

    for _ in 0..n {
        let o = occupation_dist.sample(&mut rng);
        let s = state_dist.sample(&mut rng);
        let y = year_dist.sample(&mut rng);
        let ft = rng.random_bool(FULL_TIME_SHARE);
        let (soc_name, _, base_wage, soc_effect) = OCCUPATIONS[o];
        let (_, state_effect, state_wage) = STATES[s];

        let noise: f64 = rng.sample(StandardNormal);
        let w = base_wage
            * state_wage
            * if ft { 1.0 } else { 0.7 }
            * (1.0 + 0.025 * y as f64)
            * (0.18 * noise).exp();
        let w = round_to(w, 2);

        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        let logistic_noise = (u / (1.0 - u)).ln();
        let mut latent = W_OCCUPATION * soc_effect
            + W_STATE * state_effect
            + W_YEAR * (y as f64 - 2.5)
            + W_LOG_WAGE * (w / 75_000.0).ln()
            + logistic_noise;
        if ft {
            latent += W_FULL_TIME;
        } else {
            latent += W_PART_TIME_FLIP * soc_effect;
        }

        soc.push(soc_name);
        full_time.push(if ft { "Y" } else { "N" });
        wage.push(w);
        year.push(YEARS[y].0);
        soc_prob.push(round_to(sigmoid(base_logit + soc_effect), 4));
        state_prob.push(round_to(sigmoid(base_logit + state_effect), 4));
        score.push(latent);
    }

    let positives = (positive_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut status = vec!["DENIED"; n];
    for &row in &order[..positives] {
        status[row] = "CERTIFIED";
    }

    ColumnarTable::new(vec![
        Column::categorical("CASE_STATUS", status),
        Column::categorical("SOC_NAME", soc),
        Column::categorical("FULL_TIME_POSITION", full_time),
        Column::numeric("PREVAILING_WAGE", wage),
        Column::categorical("YEAR", year),
        Column::numeric("soc_prob", soc_prob),
        Column::numeric("state_prob", state_prob),
    ])
}
