//! Small-instance oracle checks run by `simulate --selftest`.

use num_complex::Complex64;

use crate::channel::{derive_seed, draw_channel, rng_from_seed};
use crate::constellation::{decimal_value, quantize, QpskVector, BOX_HALF_WIDTH};
use crate::ldpc::{construct_code, decode, DecoderConfig};
use crate::precoder::{build_lut, eval_phi, solve_mber, SolverOptions};
use crate::spatial::{select_subset_su, spatial_decode, spatial_encode};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: std::result::Result<(), String>) -> Check {
    match outcome {
        Ok(()) => Check {
            name,
            passed: true,
            detail: String::new(),
        },
        Err(detail) => Check {
            name,
            passed: false,
            detail,
        },
    }
}

pub fn run() -> Vec<Check> {
    vec![
        check("gray labels rotate 0->1->3->2", rotation_cycle()),
        check("quantize inverts the constellation", quantize_round_trip()),
        check("solver reaches grid maximum (N=1, MK=1)", solver_vs_grid()),
        check(
            "subset selection keeps the largest costs",
            selection_vs_sort(),
        ),
        check("spatial encode/decode round trip", spatial_round_trip()),
        check("LDPC corrects a single flipped bit", ldpc_single_flip()),
    ]
}

fn rotation_cycle() -> std::result::Result<(), String> {
    let s = QpskVector::from_labels(&[0, 1, 3, 2]).map_err(|e| e.to_string())?;
    let r = s.rotate_j().labels();
    if r == [1, 3, 2, 0] {
        Ok(())
    } else {
        Err(format!("rotated labels {r:?}"))
    }
}

fn quantize_round_trip() -> std::result::Result<(), String> {
    for d in 0..256 {
        let s = QpskVector::from_decimal(d, 4);
        let q = quantize(&s.values()).map_err(|e| e.to_string())?;
        if decimal_value(&q).map_err(|e| e.to_string())? != d {
            return Err(format!("decimal {d} not recovered"));
        }
    }
    Ok(())
}

fn solver_vs_grid() -> std::result::Result<(), String> {
    let opts = SolverOptions::default();
    for trial in 0..5u64 {
        let h = draw_channel(1, 1, 1, 0.0, derive_seed(7, 0x5e1f, &[trial]))
            .map_err(|e| e.to_string())?;
        for label in 0..4u8 {
            let s = QpskVector::from_labels(&[label]).map_err(|e| e.to_string())?;
            let sol = solve_mber(&h, &s, &opts).map_err(|e| e.to_string())?;
            let mut best = f64::NEG_INFINITY;
            let pts = 41;
            for a in 0..pts {
                for b in 0..pts {
                    let u = -BOX_HALF_WIDTH + 2.0 * BOX_HALF_WIDTH * a as f64 / (pts - 1) as f64;
                    let v = -BOX_HALF_WIDTH + 2.0 * BOX_HALF_WIDTH * b as f64 / (pts - 1) as f64;
                    let c = eval_phi(&h, &[Complex64::new(u, v)], &s).map_err(|e| e.to_string())?;
                    if c.all_positive() {
                        best = best.max(c.phi);
                    }
                }
            }
            if sol.cost.phi < best * (1.0 - 1e-6) {
                return Err(format!(
                    "trial {trial} label {label}: {} < grid {best}",
                    sol.cost.phi
                ));
            }
        }
    }
    Ok(())
}

fn selection_vs_sort() -> std::result::Result<(), String> {
    let h = draw_channel(1, 2, 4, 0.5, 11).map_err(|e| e.to_string())?;
    let lut = build_lut(&h, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let cb = select_subset_su(&lut, 4).map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..lut.len()).collect();
    order.sort_by(|&a, &b| lut.cost(b).total_cmp(&lut.cost(a)).then(a.cmp(&b)));
    let mut expect = order[..4].to_vec();
    expect.sort_unstable();
    if cb.decimals() == expect.as_slice() {
        Ok(())
    } else {
        Err(format!("selected {:?}, expected {expect:?}", cb.decimals()))
    }
}

fn spatial_round_trip() -> std::result::Result<(), String> {
    let h = draw_channel(1, 2, 4, 0.2, 3).map_err(|e| e.to_string())?;
    let lut = build_lut(&h, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let cb = select_subset_su(&lut, 8).map_err(|e| e.to_string())?;
    for word in 0..8usize {
        let bits = cb.word_bits(word);
        let s = spatial_encode(&bits, &cb).map_err(|e| e.to_string())?;
        if spatial_decode(&s, &cb) != bits {
            return Err(format!("word {word} not recovered"));
        }
    }
    Ok(())
}

fn ldpc_single_flip() -> std::result::Result<(), String> {
    use rand::Rng;
    let code = construct_code(256, 0.5, 1).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(5);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let word = code.encode(&info).map_err(|e| e.to_string())?;
    for pos in [0, 17, 128, 255] {
        let mut rx = word.clone();
        rx[pos] ^= 1;
        let out = decode(&rx, &DecoderConfig::default(), &code);
        if out.info_bits != info || !out.converged {
            return Err(format!("flip at {pos} not corrected"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
